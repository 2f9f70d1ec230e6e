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

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "defectmesh/circumvent.hpp"
#include "defectmesh/decompose.hpp"
#include "defectmesh/defects.hpp"
#include "defectmesh/mesh.hpp"

namespace defectmesh {

inline constexpr double zero_light_tolerance = 1e-12;
inline constexpr double matrix_tolerance = 1e-10;

inline TransferMatrix transfer(const Mesh& mesh, const MeshSettings& settings,
                               std::span<const DefectSpec> defects = {}) {
    return reconstruct(mesh, settings, defects);
}

/// Field incident on every segment for a unit field entering `input_port`.
/// Entry (k-1, s) is the amplitude on segment (k, s) before that segment's own
/// loss acts on it.
inline Eigen::MatrixXcd segment_fields(const Mesh& mesh, const MeshSettings& settings,
                                       int input_port, std::span<const DefectSpec> defects = {}) {
    if (input_port < 1 || input_port > mesh.modes()) {
        throw invalid_input("input port " + std::to_string(input_port) + " is out of range");
    }
    const auto r = detail::realize(mesh, settings, defects);
    Eigen::MatrixXcd fields(mesh.modes(), mesh.depth() + 1);
    TransferMatrix state = TransferMatrix::Zero(mesh.modes(), 1);
    state(input_port - 1, 0) = 1.0;
    // Slot-by-slot replay of detail::propagate.
    const auto crossings = mesh.crossings();
    std::size_t next = 0;
    for (int s = 0; s <= mesh.depth(); ++s) {
        if (s > 0) {
            detail::apply_losses(r, s - 1, state);
            for (; next < crossings.size() && crossings[next].column == s; ++next) {
                const auto& p = r.settings.crossings[next];
                detail::apply_crossing(crossing_matrix(p.theta, p.phi), crossings[next].lower_mode,
                                       state);
            }
        }
        if (s == mesh.depth()) {
            for (int k = 0; k < mesh.modes(); ++k) {
                state(k, 0) *= std::polar(1.0, r.settings.output_phases[static_cast<std::size_t>(k)]);
            }
        }
        fields.col(s) = state.col(0);
    }
    return fields;
}

inline cdouble amplitude_at(const Mesh& mesh, const MeshSettings& settings, int input_port,
                            Segment segment, std::span<const DefectSpec> defects = {}) {
    if (!mesh.contains(segment)) {
        throw invalid_input("segment is outside the mesh");
    }
    const auto r = detail::realize(mesh, settings, defects);
    TransferMatrix state = TransferMatrix::Zero(mesh.modes(), 1);
    if (input_port < 1 || input_port > mesh.modes()) {
        throw invalid_input("input port " + std::to_string(input_port) + " is out of range");
    }
    state(input_port - 1, 0) = 1.0;
    detail::propagate(mesh, r, segment.slot, false, state);
    return state(segment.mode - 1, 0);
}

/// Transfer matrix between the used ports, rows and columns in relabeled order.
inline TransferMatrix effective_matrix(const Mesh& mesh, const MeshSettings& settings,
                                       const RoutingPlan& plan,
                                       std::span<const DefectSpec> defects = {}) {
    if (!(plan.layout == mesh.layout())) {
        throw invalid_input("plan was computed for a different mesh");
    }
    const TransferMatrix full = transfer(mesh, settings, defects);
    const auto rows = static_cast<Eigen::Index>(plan.output_relabel.size());
    const auto cols = static_cast<Eigen::Index>(plan.input_relabel.size());
    TransferMatrix out(rows, cols);
    for (const auto& [out_mode, out_label] : plan.output_relabel) {
        for (const auto& [in_mode, in_label] : plan.input_relabel) {
            out(out_label - 1, in_label - 1) = full(out_mode - 1, in_mode - 1);
        }
    }
    return out;
}

/// Largest field modulus on any isolated segment over all used inputs.
inline double zero_light_error(const Mesh& mesh, const MeshSettings& settings,
                               const RoutingPlan& plan, std::span<const DefectSpec> defects = {}) {
    double worst = 0.0;
    for (const auto& [input, label] : plan.input_relabel) {
        (void)label;
        const auto fields = segment_fields(mesh, settings, input, defects);
        for (const auto& s : plan.isolated_segments) {
            worst = std::max(worst, std::abs(fields(s.mode - 1, s.slot)));
        }
    }
    return worst;
}

struct VerificationReport {
    double zero_light = 0.0;
    double target_error = 0.0;
    double independence_error = 0.0;
    bool counts_ok = false;
    bool structure_ok = false;
    bool independence_ok = false;

    bool passed() const {
        return zero_light < zero_light_tolerance && target_error < matrix_tolerance && counts_ok &&
               structure_ok && independence_ok;
    }
};

namespace detail {

/// Defect realizations that must not change the effective matrix: other loss
/// levels on every circumvented segment, random stuck values on the defective
/// elements, and random phases on the discarded outputs.
inline std::vector<std::vector<DefectSpec>> defect_sweep(const Mesh& mesh,
                                                         const std::vector<DefectSpec>& defects,
                                                         const RoutingPlan& plan,
                                                         std::uint64_t seed) {
    std::vector<std::vector<DefectSpec>> out;
    const auto segments = reduce_defects(mesh, defects);
    for (double eta : {1.0, 0.5, std::pow(10.0, -10.0 / 20.0), 0.1}) {
        auto variant = defects;
        for (auto& d : variant) {
            if (auto* loss = std::get_if<SegmentLoss>(&d)) {
                loss->eta = eta;
            }
        }
        for (const auto& s : segments) {
            variant.push_back(SegmentLoss{s, eta});
        }
        out.push_back(std::move(variant));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> theta(0.0, std::numbers::pi / 2);
    std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<DefectSpec> variant;
        for (const auto& d : defects) {
            std::visit(overloaded{
                           [&](const SegmentLoss& x) { variant.push_back(x); },
                           [&](const StuckCrossing& x) {
                               variant.push_back(StuckCrossing{x.crossing, theta(rng), phase(rng)});
                           },
                           [&](const RangeLimitedCrossing& x) {
                               variant.push_back(StuckCrossing{x.crossing, theta(rng), phase(rng)});
                           },
                           [&](const DeadPhaseShifter& x) {
                               variant.push_back(DeadPhaseShifter{x.site, phase(rng)});
                           },
                       },
                       d);
        }
        for (int k : plan.discarded_outputs) {
            variant.push_back(DeadPhaseShifter{OutputPhase{k}, phase(rng)});
        }
        out.push_back(std::move(variant));
    }
    return out;
}

}  // namespace detail

/// Checks a compiled mesh against everything the circumvention promises:
/// no light on isolated segments, the target on the used ports, the expected
/// number of free components wired as the effective wall, and insensitivity to
/// whatever the defects actually do.
inline VerificationReport verify_plan(const Mesh& mesh, const MeshSettings& settings,
                                      const RoutingPlan& plan,
                                      const std::vector<DefectSpec>& defects,
                                      const TransferMatrix& target) {
    VerificationReport report;
    try {
        const auto match = match_template(mesh, plan);
        report.structure_ok = true;
        const auto counts = plan_counts(mesh, plan);
        const int eff_size = static_cast<int>(match.effective.size());
        report.counts_ok = counts.tunable_crossings == eff_size &&
                           counts.free_phase_shifters == eff_size + match.effective.modes() - 1;
    } catch (const std::exception&) {
        report.structure_ok = false;
        report.counts_ok = false;
    }

    report.zero_light = zero_light_error(mesh, settings, plan, defects);

    const TransferMatrix base = effective_matrix(mesh, settings, plan, defects);
    if (base.rows() != target.rows() || base.cols() != target.cols()) {
        report.target_error = std::numeric_limits<double>::infinity();
    } else {
        report.target_error = max_abs(base - target);
    }

    double worst = 0.0;
    for (const auto& variant : detail::defect_sweep(mesh, defects, plan, 0x5eed)) {
        worst = std::max(worst, max_abs(effective_matrix(mesh, settings, plan, variant) - base));
    }
    // Don't-care crossings: every combination when there are few, else one at a time.
    const std::vector<Crossing> dc(plan.dont_care.begin(), plan.dont_care.end());
    const std::size_t combos = dc.size() <= 10 ? (std::size_t{1} << dc.size()) : dc.size() + 1;
    for (std::size_t mask = 1; mask < combos; ++mask) {
        MeshSettings flipped = settings;
        for (std::size_t i = 0; i < dc.size(); ++i) {
            const bool flip = dc.size() <= 10 ? ((mask >> i) & 1) != 0 : i + 1 == mask;
            if (flip) {
                auto& p = flipped.crossings[mesh.require_index(dc[i])];
                p.theta = std::numbers::pi / 2 - p.theta;
            }
        }
        worst = std::max(worst, max_abs(effective_matrix(mesh, flipped, plan, defects) - base));
    }
    report.independence_error = worst;
    report.independence_ok = worst < matrix_tolerance;
    return report;
}

}  // namespace defectmesh
