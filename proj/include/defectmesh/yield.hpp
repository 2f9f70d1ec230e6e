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

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "defectmesh/errors.hpp"

namespace defectmesh {

/// How many components an n-mode universal mesh has.
enum class CountModel {
    approximate,  ///< n^2
    exact,        ///< n(n-1)/2 MZIs + n(n-1)/2 + n - 1 phase shifters = n^2 - 1
};

/// Raised by the plain-mode bound when epsilon == 0 (any size works).
struct unbounded_tolerance : std::domain_error {
    using std::domain_error::domain_error;
};

inline double component_total(long long modes, CountModel model) {
    const auto n = static_cast<double>(modes);
    return model == CountModel::approximate ? n * n : std::max(0.0, n * n - 1.0);
}

namespace detail {

inline void check_probability(double eps) {
    if (!(eps >= 0.0 && eps <= 1.0)) {
        throw invalid_input("defect probability must lie in [0, 1]");
    }
}

inline void check_open_probability(double eps) {
    check_probability(eps);
    if (eps == 0.0) {
        throw unbounded_tolerance("epsilon = 0: every mesh size is defect free");
    }
    if (eps == 1.0) {
        throw invalid_input("epsilon must be < 1");
    }
}

inline long long overhead_modes(long long n, double ratio) {
    return static_cast<long long>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

}  // namespace detail

/// Probability that none of the components of an n-mode mesh is defective.
inline double p_zero_defect(long long n, double eps, CountModel model = CountModel::approximate) {
    detail::check_probability(eps);
    const double count = component_total(n, model);
    if (count == 0.0 || eps == 0.0) {
        return 1.0;
    }
    if (eps == 1.0) {
        return 0.0;
    }
    return std::exp(count * std::log1p(-eps));
}

/// P(at most `max_defects` of `components` independent components are
/// defective). Large counts are summed in log space outward from the tail
/// boundary until the terms stop mattering.
inline double p_at_most(long long components, long long max_defects, double eps) {
    detail::check_probability(eps);
    if (components < 0 || max_defects < 0 || max_defects > components) {
        throw invalid_input("need 0 <= max_defects <= components");
    }
    if (max_defects == components || eps == 0.0) {
        return 1.0;
    }
    if (eps == 1.0) {
        return 0.0;
    }
    const auto n = static_cast<double>(components);
    if (const double first = std::pow(1.0 - eps, n); components <= 64 && first > 1e-280) {
        // Small counts are summed directly from k = 0, which is exact
        // whenever eps and 1 - eps are short binary fractions.
        double term = first;
        double sum = term;
        for (long long k = 1; k <= max_defects; ++k) {
            term *= (n - static_cast<double>(k) + 1) / static_cast<double>(k) * eps / (1.0 - eps);
            sum += term;
        }
        return std::min(sum, 1.0);
    }
    const double log_eps = std::log(eps);
    const double log_keep = std::log1p(-eps);
    auto log_pmf = [&](double k) {
        return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) + k * log_eps +
               (n - k) * log_keep;
    };
    const double odds = log_eps - log_keep;
    const double mean = n * eps;

    // Sums pmf(k) for k walking away from `first`; returns log of the sum.
    auto tail = [&](long long first, int dir) {
        double lk = log_pmf(static_cast<double>(first));
        const double ref = lk;
        double sum = 0.0;
        for (long long k = first; k >= 0 && k <= components; k += dir) {
            const double term = std::exp(lk - ref);
            sum += term;
            const bool receding = dir < 0 ? static_cast<double>(k) < mean : static_cast<double>(k) > mean;
            if (receding && term < 1e-18 * sum) {
                break;
            }
            const auto kd = static_cast<double>(k);
            if (dir > 0) {
                lk += std::log(n - kd) - std::log(kd + 1) + odds;
            } else {
                lk += std::log(kd) - std::log(n - kd + 1) - odds;
            }
        }
        return ref + std::log(sum);
    };

    if (static_cast<double>(max_defects) < mean) {
        return std::min(1.0, std::exp(tail(max_defects, -1)));
    }
    return std::clamp(-std::expm1(tail(max_defects + 1, +1)), 0.0, 1.0);
}

/// Largest n whose mesh is defect free with probability > 1/2 (0 if even a
/// single mode fails).
inline long long max_modes_plain(double eps, CountModel model = CountModel::approximate) {
    detail::check_open_probability(eps);
    auto ok = [&](long long n) { return p_zero_defect(n, eps, model) > 0.5; };
    if (!ok(1)) {
        return 0;
    }
    long long lo = 1;
    long long hi = 2;
    while (ok(hi)) {
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

/// Probability that an (n + floor(r n))-mode mesh has at most floor(r n)
/// defects, i.e. that an n-mode universal mesh can be salvaged from it.
inline double p_salvage(long long n, double eps, double overhead_ratio,
                        CountModel model = CountModel::approximate) {
    const long long m = detail::overhead_modes(n, overhead_ratio);
    const double count = component_total(n + m, model);
    const auto components = static_cast<long long>(count);
    return p_at_most(components, std::min(m, components), eps);
}

/// Largest n that can be salvaged with probability > 1/2 when building
/// n + floor(r n) modes. The floor makes the success probability saw-toothed
/// in n, so a bracketing search is followed by a forward scan wide enough to
/// cover several teeth.
inline long long max_modes_overhead(double eps, double overhead_ratio,
                                    CountModel model = CountModel::approximate) {
    detail::check_open_probability(eps);
    if (!(overhead_ratio >= 0.0)) {
        throw invalid_input("overhead ratio must be >= 0");
    }
    auto ok = [&](long long n) { return p_salvage(n, eps, overhead_ratio, model) > 0.5; };
    long long best = 0;
    long long lo = 0;
    long long hi = 1;
    while (ok(hi)) {
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        (ok(mid) ? lo : hi) = mid;
    }
    best = lo;
    const long long window =
        64 + (overhead_ratio > 0 ? static_cast<long long>(std::ceil(4.0 / overhead_ratio)) : 0);
    for (long long n = std::max<long long>(1, best - window); n <= best + window; ++n) {
        if (ok(n) && n > best) {
            best = n;
        }
    }
    return best;
}

/// Largest per-component defect probability at which an n-mode mesh (built
/// with overhead ratio r) is still salvageable with probability > 1/2.
inline double max_tolerable_epsilon(long long n, double overhead_ratio,
                                    CountModel model = CountModel::approximate) {
    if (n < 1) {
        throw invalid_input("n must be >= 1");
    }
    auto p = [&](double log_eps) { return p_salvage(n, std::exp(log_eps), overhead_ratio, model); };
    double lo = std::log(1e-300);
    double hi = 0.0;
    if (p(lo) <= 0.5) {
        return 0.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (p(mid) > 0.5 ? lo : hi) = mid;
    }
    return std::exp(lo);
}

struct CurvePoint {
    double epsilon = 0.0;
    long long max_n = 0;
    bool operator==(const CurvePoint&) const = default;
};

inline std::vector<CurvePoint> tolerance_curve(double overhead_ratio,
                                               const std::vector<double>& eps_grid,
                                               CountModel model = CountModel::approximate) {
    if (eps_grid.empty()) {
        throw invalid_input("epsilon grid is empty");
    }
    if (!std::is_sorted(eps_grid.begin(), eps_grid.end())) {
        throw invalid_input("epsilon grid must be sorted");
    }
    std::vector<CurvePoint> out;
    out.reserve(eps_grid.size());
    for (double eps : eps_grid) {
        out.push_back({eps, max_modes_overhead(eps, overhead_ratio, model)});
    }
    return out;
}

/// Shortest round-trip decimal (never scientific) form of `x`.
inline std::string decimal(double x) {
    char buf[512];
    auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::fixed);
    return std::string(buf, res.ptr);
}

inline void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
    out << "epsilon,max_n\n";
    for (const auto& p : curve) {
        out << decimal(p.epsilon) << ',' << p.max_n << '\n';
    }
}

struct MonteCarloEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
};

namespace detail {

/// splitmix64 finalizer; gives every trial its own well-separated seed.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Fraction of simulated meshes with at most `max_defects` defective
/// components out of `components`, each component failing independently with
/// probability eps. A trial walks the component list by drawing the geometric
/// gap to the next defect, which has the same distribution as one Bernoulli
/// draw per component but costs time proportional to the defects found. Each
/// trial draws from its own engine seeded from (seed, trial), so the result
/// does not depend on evaluation order.
inline MonteCarloEstimate monte_carlo_yield(long long components, long long max_defects, double eps,
                                            long long trials, std::uint64_t seed) {
    detail::check_probability(eps);
    if (trials < 1) {
        throw invalid_input("need at least one trial");
    }
    if (components < 0 || max_defects < 0) {
        throw invalid_input("component and defect counts must be >= 0");
    }
    long long good = 0;
    if (eps == 0.0) {
        good = trials;
    } else {
        std::geometric_distribution<long long> gap(eps);
        for (long long t = 0; t < trials; ++t) {
            std::mt19937_64 rng(detail::trial_seed(seed, static_cast<std::uint64_t>(t)));
            long long bad = 0;
            long long next = gap(rng);
            while (next < components && bad <= max_defects) {
                ++bad;
                next += 1 + gap(rng);
            }
            good += bad <= max_defects ? 1 : 0;
        }
    }
    MonteCarloEstimate out;
    out.estimate = static_cast<double>(good) / static_cast<double>(trials);
    out.standard_error = std::sqrt(out.estimate * (1 - out.estimate) / static_cast<double>(trials));
    return out;
}

}  // namespace defectmesh
