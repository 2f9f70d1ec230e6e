// Copyright 2026 The defectmesh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <sstream>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <gtest/gtest.h>

#include "defectmesh/yield.hpp"

namespace dm = defectmesh;
using boost::multiprecision::cpp_rational;

namespace {

/// Exact binomial tail with eps taken as the exact rational value of the double.
double rational_at_most(long long n, long long m, double eps) {
    int exponent = 0;
    const double mantissa = std::frexp(eps, &exponent);
    const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
    cpp_rational e(scaled);
    const int shift = 53 - exponent;
    e /= cpp_rational(boost::multiprecision::cpp_int(1) << shift);
    cpp_rational sum = 0;
    cpp_rational binom = 1;
    for (long long k = 0; k <= m; ++k) {
        if (k > 0) {
            binom = binom * (n - k + 1) / k;
        }
        cpp_rational term = binom;
        for (long long i = 0; i < k; ++i) {
            term *= e;
        }
        for (long long i = 0; i < n - k; ++i) {
            term *= (1 - e);
        }
        sum += term;
    }
    return static_cast<double>(sum);
}

/// Enumerates all 2^n defect patterns.
double brute_force_at_most(int n, int m, double eps) {
    double total = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        const int bad = __builtin_popcount(mask);
        if (bad <= m) {
            total += std::pow(eps, bad) * std::pow(1 - eps, n - bad);
        }
    }
    return total;
}

TEST(PZeroDefect, WorkedValues) {
    // The often-quoted 0.5353 is the exponential approximation exp(-eps n^2);
    // the exact product is 0.53509.
    EXPECT_NEAR(std::exp(-1e-3 * 625), 0.5353, 1e-4);
    EXPECT_NEAR(dm::p_zero_defect(25, 1e-3), 0.53509, 1e-5);
    double direct = 1.0;
    for (int i = 0; i < 625; ++i) {
        direct *= 0.999;
    }
    EXPECT_NEAR(dm::p_zero_defect(25, 1e-3), direct, 1e-12);
    EXPECT_EQ(dm::p_zero_defect(40, 0.0), 1.0);
    EXPECT_EQ(dm::p_zero_defect(3, 1.0), 0.0);
    EXPECT_NEAR(dm::p_zero_defect(25, 1e-3, dm::CountModel::exact), std::pow(0.999, 624), 1e-12);
    EXPECT_THROW(dm::p_zero_defect(3, -0.1), dm::invalid_input);
}

TEST(MaxModesPlain, WorkedValues) {
    EXPECT_EQ(dm::max_modes_plain(1e-3), 26);
    EXPECT_EQ(dm::max_modes_plain(0.1), 2);
    EXPECT_EQ(dm::max_modes_plain(0.5), 0);
    EXPECT_THROW(dm::max_modes_plain(0.0), dm::unbounded_tolerance);
}

TEST(MaxModesPlain, MatchesClosedFormFloor) {
    for (double eps : {1e-5, 3e-5, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2}) {
        const double bound = std::sqrt(std::log(2.0) / -std::log1p(-eps));
        const auto expected = static_cast<long long>(std::floor(bound));
        // A floor that lands exactly on the bound fails the strict inequality.
        const long long got = dm::max_modes_plain(eps);
        EXPECT_TRUE(got == expected || (got == expected - 1 && std::abs(bound - expected) < 1e-9))
            << eps;
    }
}

TEST(PAtMost, WorkedValues) {
    EXPECT_DOUBLE_EQ(dm::p_at_most(4, 1, 0.5), 0.3125);
    EXPECT_DOUBLE_EQ(dm::p_at_most(4, 1, 0.5), brute_force_at_most(4, 1, 0.5));
    EXPECT_EQ(dm::p_at_most(100, 3, 0.0), 1.0);
    for (long long n : {1LL, 9LL, 100LL, 900LL}) {
        EXPECT_NEAR(dm::p_at_most(n, 0, 2e-3), std::pow(1 - 2e-3, static_cast<double>(n)), 1e-13);
    }
    EXPECT_NEAR(dm::p_at_most(625, 0, 1e-3), dm::p_zero_defect(25, 1e-3), 1e-13);
    EXPECT_THROW(dm::p_at_most(4, 5, 0.5), dm::invalid_input);
}

TEST(PAtMost, MatchesBruteForceEnumeration) {
    for (int n = 1; n <= 14; ++n) {
        for (int m = 0; m <= n; ++m) {
            for (double eps : {0.01, 0.2, 0.5, 0.9}) {
                EXPECT_NEAR(dm::p_at_most(n, m, eps), brute_force_at_most(n, m, eps), 1e-12)
                    << n << " " << m << " " << eps;
            }
        }
    }
}

TEST(PAtMost, MatchesExactRationalArithmetic) {
    for (long long n = 1; n <= 20; ++n) {
        for (long long m = 0; m <= n; ++m) {
            for (double eps : {1e-4, 0.03, 0.25, 0.5, 0.77}) {
                EXPECT_NEAR(dm::p_at_most(n, m, eps), rational_at_most(n, m, eps), 1e-12)
                    << n << " " << m << " " << eps;
            }
        }
    }
}

TEST(PAtMost, MonotoneInEachArgument) {
    const std::vector<double> eps_grid{1e-4, 1e-3, 5e-3, 1e-2, 5e-2, 0.1};
    for (long long n : {10LL, 100LL, 1000LL}) {
        for (double eps : eps_grid) {
            double previous = -1.0;
            for (long long m = 0; m <= 10; ++m) {
                const double p = dm::p_at_most(n, m, eps);
                EXPECT_GE(p, previous - 1e-15);
                previous = p;
            }
        }
        for (long long m : {0LL, 2LL, 5LL}) {
            double previous = 2.0;
            for (double eps : eps_grid) {
                const double p = dm::p_at_most(n, m, eps);
                EXPECT_LE(p, previous + 1e-15);
                previous = p;
            }
        }
    }
    for (double eps : eps_grid) {
        double previous = 2.0;
        for (long long n = 5; n <= 2000; n += 45) {
            const double p = dm::p_at_most(n, 4, eps);
            EXPECT_LE(p, previous + 1e-15);
            previous = p;
        }
    }
}

TEST(MaxModesOverhead, ZeroRatioIsPlainCount) {
    for (double eps : {1e-4, 1e-3, 1e-2, 0.1}) {
        EXPECT_EQ(dm::max_modes_overhead(eps, 0.0), dm::max_modes_plain(eps)) << eps;
    }
}

TEST(MaxModesOverhead, GrowsWithOverhead) {
    EXPECT_GT(dm::max_modes_overhead(1e-3, 0.5), 26);
    for (double eps : {1e-4, 1e-3, 1e-2}) {
        long long previous = 0;
        for (double r = 0.0; r <= 0.8 + 1e-12; r += 0.1) {
            const long long n = dm::max_modes_overhead(eps, r);
            EXPECT_GE(n, previous) << eps << " " << r;
            previous = n;
        }
    }
}

TEST(MaxModesOverhead, ResultIsFeasibleAndNextWindowIsNot) {
    for (double eps : {1e-3, 1e-2}) {
        for (double r : {0.1, 0.4, 0.8}) {
            const long long n = dm::max_modes_overhead(eps, r);
            EXPECT_GT(dm::p_salvage(n, eps, r), 0.5);
            for (long long k = n + 1; k <= n + 200; ++k) {
                EXPECT_LE(dm::p_salvage(k, eps, r), 0.5) << eps << " " << r << " " << k;
            }
        }
    }
}

TEST(ToleranceCurve, ZeroRatioMatchesPlainAndIsNonincreasing) {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) {
        grid.push_back(std::pow(10.0, -5.0 + 0.2 * i));
    }
    const auto curve = dm::tolerance_curve(0.0, grid);
    ASSERT_EQ(curve.size(), grid.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        EXPECT_EQ(curve[i].max_n, dm::max_modes_plain(grid[i]));
        if (i > 0) {
            EXPECT_LE(curve[i].max_n, curve[i - 1].max_n);
        }
    }
}

TEST(ToleranceCurve, HigherOverheadDominates) {
    std::vector<double> grid;
    for (int i = 0; i <= 16; ++i) {
        grid.push_back(std::pow(10.0, -5.0 + 0.25 * i));
    }
    std::vector<dm::CurvePoint> previous = dm::tolerance_curve(0.0, grid);
    for (int step = 1; step <= 8; ++step) {
        const auto curve = dm::tolerance_curve(0.1 * step, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            EXPECT_GE(curve[i].max_n, previous[i].max_n) << step << " " << grid[i];
        }
        previous = curve;
    }
}

TEST(ToleranceCurve, RejectsBadGrids) {
    EXPECT_THROW(dm::tolerance_curve(0.1, {}), dm::invalid_input);
    EXPECT_THROW(dm::tolerance_curve(0.1, {1e-2, 1e-3}), dm::invalid_input);
}

TEST(ToleranceCurve, CsvFormat) {
    std::ostringstream out;
    dm::write_curve_csv(out, {{0.001, 26}, {0.0001, 83}});
    EXPECT_EQ(out.str(), "epsilon,max_n\n0.001,26\n0.0001,83\n");
}

TEST(MaxTolerableEpsilon, OverheadBuysAnOrderOfMagnitude) {
    long long crossing = -1;
    for (long long n = 10; n <= 200; ++n) {
        const double gain = dm::max_tolerable_epsilon(n, 0.8) / dm::max_tolerable_epsilon(n, 0.0);
        if (gain > 10.0) {
            crossing = n;
            break;
        }
    }
    ASSERT_GT(crossing, 0);
    // Below the crossing the gain stays at or under one order of magnitude.
    EXPECT_LE(dm::max_tolerable_epsilon(crossing - 1, 0.8) /
                  dm::max_tolerable_epsilon(crossing - 1, 0.0),
              10.0);
}

TEST(MaxTolerableEpsilon, InvertsPlainCount) {
    for (long long n : {5LL, 26LL, 80LL}) {
        const double eps = dm::max_tolerable_epsilon(n, 0.0);
        EXPECT_NEAR(dm::p_zero_defect(n, eps), 0.5, 1e-9);
        EXPECT_GE(dm::max_modes_plain(eps * 0.999), n);
    }
}

TEST(MonteCarlo, ZeroEpsilonAlwaysSucceeds) {
    const auto mc = dm::monte_carlo_yield(100, 0, 0.0, 1000, 1);
    EXPECT_EQ(mc.estimate, 1.0);
    EXPECT_EQ(mc.standard_error, 0.0);
}

TEST(MonteCarlo, AgreesWithBruteForce) {
    const auto mc = dm::monte_carlo_yield(4, 1, 0.5, 100000, 42);
    EXPECT_NEAR(mc.estimate, 0.3125, 3 * mc.standard_error);
}

TEST(MonteCarlo, DeterministicForFixedSeed) {
    const auto a = dm::monte_carlo_yield(625, 2, 2e-3, 20000, 99);
    const auto b = dm::monte_carlo_yield(625, 2, 2e-3, 20000, 99);
    const auto c = dm::monte_carlo_yield(625, 2, 2e-3, 20000, 100);
    EXPECT_EQ(a.estimate, b.estimate);
    EXPECT_EQ(a.standard_error, b.standard_error);
    EXPECT_NE(a.estimate, c.estimate);
}

TEST(MonteCarlo, RejectsZeroTrials) {
    EXPECT_THROW(dm::monte_carlo_yield(10, 1, 0.1, 0, 1), dm::invalid_input);
}

}  // namespace
