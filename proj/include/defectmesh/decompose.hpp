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
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "defectmesh/defects.hpp"
#include "defectmesh/errors.hpp"
#include "defectmesh/mesh.hpp"

namespace defectmesh {

using cdouble = std::complex<double>;
using TransferMatrix = Eigen::MatrixXcd;
using Matrix2 = Eigen::Matrix2cd;

/// Transfer matrix of one crossing on (lower, upper):
///   [[e^{i phi} cos t, -sin t], [e^{i phi} sin t, cos t]]
/// theta = 0 is the bar state, theta = pi/2 the cross state.
inline Matrix2 crossing_matrix(double theta, double phi) {
    const cdouble e = std::polar(1.0, phi);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Matrix2 t;
    t << e * c, -s, e * s, c;
    return t;
}

/// Wraps an angle into [0, 2 pi).
inline double wrap_phase(double phi) {
    constexpr double two_pi = 2 * std::numbers::pi;
    double r = std::fmod(phi, two_pi);
    if (r < 0) {
        r += two_pi;
    }
    if (r >= two_pi) {
        r = 0.0;
    }
    return r;
}

inline double max_abs(const TransferMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double unitarity_error(const TransferMatrix& u) {
    const auto n = u.cols();
    return max_abs(u.adjoint() * u - TransferMatrix::Identity(n, n));
}

namespace detail {

struct LossFactor {
    Segment segment;
    double eta;
};

/// Settings and loss factors as the hardware actually realizes them.
struct Realization {
    MeshSettings settings;
    std::vector<LossFactor> losses;
};

inline Realization realize(const Mesh& mesh, const MeshSettings& settings,
                           std::span<const DefectSpec> defects) {
    mesh.check_settings(settings);
    Realization r{settings, {}};
    for (const auto& defect : defects) {
        validate_defect(mesh, defect);
        std::visit(overloaded{
                       [&](const SegmentLoss& d) { r.losses.push_back({d.segment, d.eta}); },
                       [&](const StuckCrossing& d) {
                           r.settings.crossings[mesh.require_index(d.crossing)] = {d.theta, d.phi};
                       },
                       [&](const RangeLimitedCrossing& d) {
                           auto& p = r.settings.crossings[mesh.require_index(d.crossing)];
                           p.theta = std::clamp(p.theta, d.theta_min, d.theta_max);
                       },
                       [&](const DeadPhaseShifter& d) {
                           if (auto* x = std::get_if<Crossing>(&d.site)) {
                               r.settings.crossings[mesh.require_index(*x)].phi = d.value;
                           } else {
                               auto mode = std::get<OutputPhase>(d.site).mode;
                               r.settings.output_phases[static_cast<std::size_t>(mode - 1)] =
                                   d.value;
                           }
                       },
                   },
                   defect);
    }
    return r;
}

inline void apply_losses(const Realization& r, int slot, TransferMatrix& state) {
    for (const auto& loss : r.losses) {
        if (loss.segment.slot == slot) {
            state.row(loss.segment.mode - 1) *= loss.eta;
        }
    }
}

inline void apply_crossing(const Matrix2& t, int lower_mode, TransferMatrix& state) {
    const auto lo = lower_mode - 1;
    for (Eigen::Index j = 0; j < state.cols(); ++j) {
        const cdouble a = state(lo, j);
        const cdouble b = state(lo + 1, j);
        state(lo, j) = t(0, 0) * a + t(0, 1) * b;
        state(lo + 1, j) = t(1, 0) * a + t(1, 1) * b;
    }
}

/// Pushes `state` (rows = modes) through the mesh up to the given slot: columns
/// 1..slot, the losses of slots before `slot`, and the output phases once the
/// output lead is reached. Losses at `slot` itself are applied only when
/// `include_final_losses` is set, so probes see the field incident on a defect.
inline void propagate(const Mesh& mesh, const Realization& r, int slot, bool include_final_losses,
                      TransferMatrix& state) {
    const auto crossings = mesh.crossings();
    std::size_t next = 0;
    for (int s = 0; s <= slot; ++s) {
        if (s > 0) {
            for (; next < crossings.size() && crossings[next].column == s; ++next) {
                const auto& p = r.settings.crossings[next];
                apply_crossing(crossing_matrix(p.theta, p.phi), crossings[next].lower_mode, state);
            }
        }
        if (s == mesh.depth()) {
            for (int k = 0; k < mesh.modes(); ++k) {
                state.row(k) *= std::polar(1.0, r.settings.output_phases[static_cast<std::size_t>(k)]);
            }
        }
        if (s < slot || include_final_losses) {
            apply_losses(r, s, state);
        }
    }
}

/// A 2x2 unitary acting on (lower_mode, lower_mode + 1).
struct TwoModeOp {
    int lower_mode;
    Matrix2 matrix;
};

/// U = after[last] ... after[0] * diag(phases) * before[last] ... before[0].
struct OpSequence {
    std::vector<TwoModeOp> before;
    Eigen::VectorXcd phases;
    std::vector<TwoModeOp> after;
};

/// Writes a 2x2 unitary g as diag(p, q) * crossing_matrix(theta, phi).
inline void factor_two_mode(const Matrix2& g, PhasePair& out, cdouble& p, cdouble& q) {
    constexpr double tiny = 1e-14;
    const double s = std::abs(g(0, 1));
    const double c = std::abs(g(1, 1));
    out.theta = std::atan2(s, c);
    const bool have_p = s > tiny;
    const bool have_q = c > tiny;
    if (have_p) {
        p = -g(0, 1) / s;
    }
    if (have_q) {
        q = g(1, 1) / c;
    }
    cdouble e{1.0, 0.0};
    if (!have_p) {
        p = g(0, 0) / std::abs(g(0, 0));
    } else if (!have_q) {
        q = g(1, 0) / std::abs(g(1, 0));
    } else if (std::abs(g(0, 0)) >= std::abs(g(1, 0))) {
        e = g(0, 0) / (p * std::cos(out.theta));
    } else {
        e = g(1, 0) / (q * std::sin(out.theta));
    }
    out.phi = wrap_phase(std::arg(e));
}

/// Places the operations of `seq` onto the crossings of `mesh` (each op goes to
/// the earliest column allowed by its predecessors and the wall parity) and
/// pushes all residual phases to the output layer.
inline MeshSettings settings_from_sequence(const Mesh& mesh, const OpSequence& seq) {
    const int n = mesh.modes();
    MeshSettings out = mesh.zero_settings();
    std::vector<int> last(static_cast<std::size_t>(n + 2), 0);
    std::vector<bool> used(mesh.size(), false);
    std::vector<cdouble> carry(static_cast<std::size_t>(n), cdouble{1.0, 0.0});

    auto place = [&](const TwoModeOp& op) {
        const auto lo = static_cast<std::size_t>(op.lower_mode);
        int column = std::max(last[lo], last[lo + 1]) + 1;
        if (!mesh.layout().couples(column, op.lower_mode)) {
            ++column;
        }
        auto index = mesh.index_of({column, op.lower_mode});
        if (!index || used[*index]) {
            throw invariant_violation("decomposition does not fit the mesh layout");
        }
        used[*index] = true;
        last[lo] = last[lo + 1] = column;

        Matrix2 carried;
        carried << carry[lo - 1], 0, 0, carry[lo];
        const Matrix2 g = op.matrix * carried;
        factor_two_mode(g, out.crossings[*index], carry[lo - 1], carry[lo]);
    };

    for (const auto& op : seq.before) {
        place(op);
    }
    for (int k = 0; k < n; ++k) {
        carry[static_cast<std::size_t>(k)] *= seq.phases(k);
    }
    for (const auto& op : seq.after) {
        place(op);
    }
    // Null steps leave some crossings at identity; any unvisited ones stay bar.
    for (int k = 0; k < n; ++k) {
        out.output_phases[static_cast<std::size_t>(k)] =
            wrap_phase(std::arg(carry[static_cast<std::size_t>(k)]));
    }
    return out;
}

inline void check_unitary(const TransferMatrix& u, double tol) {
    if (u.rows() != u.cols()) {
        throw dimension_mismatch("matrix must be square");
    }
    if (u.rows() < 2) {
        throw dimension_mismatch("matrix must be at least 2x2");
    }
    const double err = unitarity_error(u);
    if (!(err < tol)) {
        throw not_unitary("matrix is not unitary (max |U^H U - I| = " + std::to_string(err) + ")");
    }
}

/// Rectangular nulling sequence: alternately zeroes entries of the lower-left
/// triangle by column operations (right) and row operations (left).
inline OpSequence clements_sequence(const TransferMatrix& u) {
    constexpr double tiny = 1e-14;
    const int n = static_cast<int>(u.rows());
    TransferMatrix v = u;
    OpSequence seq;
    std::vector<TwoModeOp> left_ops;

    for (int i = 0; i < n - 1; ++i) {
        if (i % 2 == 0) {
            for (int j = 0; j <= i; ++j) {
                const int r = n - 1 - j;
                const int col = i - j;
                double theta = 0.0;
                double phi = 0.0;
                if (std::abs(v(r, col)) >= tiny) {
                    theta = std::atan2(std::abs(v(r, col)), std::abs(v(r, col + 1)));
                    phi = wrap_phase(std::arg(v(r, col)) - std::arg(v(r, col + 1)));
                }
                const Matrix2 t = crossing_matrix(theta, phi);
                const Matrix2 ta = t.adjoint();
                for (int k = 0; k < n; ++k) {
                    const cdouble a = v(k, col);
                    const cdouble b = v(k, col + 1);
                    v(k, col) = a * ta(0, 0) + b * ta(1, 0);
                    v(k, col + 1) = a * ta(0, 1) + b * ta(1, 1);
                }
                seq.before.push_back({col + 1, t});
            }
        } else {
            for (int j = 1; j <= i + 1; ++j) {
                const int r = n + j - i - 2;
                const int col = j - 1;
                double theta = 0.0;
                double phi = 0.0;
                if (std::abs(v(r, col)) >= tiny) {
                    theta = std::atan2(std::abs(v(r, col)), std::abs(v(r - 1, col)));
                    phi = wrap_phase(std::arg(-v(r, col)) - std::arg(v(r - 1, col)));
                }
                const Matrix2 t = crossing_matrix(theta, phi);
                for (int k = 0; k < n; ++k) {
                    const cdouble a = v(r - 1, k);
                    const cdouble b = v(r, k);
                    v(r - 1, k) = t(0, 0) * a + t(0, 1) * b;
                    v(r, k) = t(1, 0) * a + t(1, 1) * b;
                }
                left_ops.push_back({r, t});
            }
        }
    }
    seq.phases = v.diagonal();
    for (auto it = left_ops.rbegin(); it != left_ops.rend(); ++it) {
        seq.after.push_back({it->lower_mode, it->matrix.adjoint()});
    }
    return seq;
}

/// Same sequence for a wall whose first column couples (2,3),(4,5),...
inline OpSequence shifted_sequence(const TransferMatrix& u) {
    const int n = static_cast<int>(u.rows());
    OpSequence out;
    if (n % 2 == 1) {
        // Odd n: the shifted wall is the standard one upside down.
        const TransferMatrix flipped = u.colwise().reverse().rowwise().reverse();
        OpSequence seq = clements_sequence(flipped);
        auto flip = [n](const TwoModeOp& op) {
            Matrix2 w;
            w << op.matrix(1, 1), op.matrix(1, 0), op.matrix(0, 1), op.matrix(0, 0);
            return TwoModeOp{n - op.lower_mode, w};
        };
        std::transform(seq.before.begin(), seq.before.end(), std::back_inserter(out.before), flip);
        std::transform(seq.after.begin(), seq.after.end(), std::back_inserter(out.after), flip);
        out.phases = seq.phases.reverse();
    } else {
        // Even n: the shifted wall is the standard one mirrored left-right.
        OpSequence seq = clements_sequence(u.transpose());
        auto transpose = [](const TwoModeOp& op) {
            return TwoModeOp{op.lower_mode, op.matrix.transpose()};
        };
        std::transform(seq.after.rbegin(), seq.after.rend(), std::back_inserter(out.before),
                       transpose);
        std::transform(seq.before.rbegin(), seq.before.rend(), std::back_inserter(out.after),
                       transpose);
        out.phases = seq.phases;
    }
    return out;
}

}  // namespace detail

/// Mesh settings for a rectangular wall (of the given parity) realizing `u`.
/// Theta lands in [0, pi/2], phases in [0, 2 pi).
inline MeshSettings clements_decompose(const TransferMatrix& u, int parity = 0) {
    detail::check_unitary(u, 1e-8);
    const Mesh mesh(MeshLayout::rectangular(static_cast<int>(u.rows()), parity));
    const auto seq = parity == 0 ? detail::clements_sequence(u) : detail::shifted_sequence(u);
    return detail::settings_from_sequence(mesh, seq);
}

inline MeshSettings clements_decompose(const TransferMatrix& u, const MeshLayout& layout) {
    if (layout.kind != LayoutKind::rectangular) {
        throw invalid_input("only rectangular layouts are universal");
    }
    if (layout.modes != u.rows()) {
        throw dimension_mismatch("matrix size " + std::to_string(u.rows()) +
                                 " does not match layout with " + std::to_string(layout.modes) +
                                 " modes");
    }
    return clements_decompose(u, layout.parity);
}

/// Forward model: columns left to right, then the output phase layer, with the
/// defects applied as the hardware would realize them.
inline TransferMatrix reconstruct(const Mesh& mesh, const MeshSettings& settings,
                                  std::span<const DefectSpec> defects = {}) {
    const auto r = detail::realize(mesh, settings, defects);
    TransferMatrix state = TransferMatrix::Identity(mesh.modes(), mesh.modes());
    detail::propagate(mesh, r, mesh.depth(), true, state);
    return state;
}

}  // namespace defectmesh
