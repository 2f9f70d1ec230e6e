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

#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "defectmesh/errors.hpp"
#include "defectmesh/mesh.hpp"

namespace defectmesh {

/// Excess loss on one segment; `eta` is the amplitude transmissivity.
struct SegmentLoss {
    Segment segment;
    double eta = 1.0;
    bool operator==(const SegmentLoss&) const = default;
};

/// MZI that ignores its control and sits at fixed (theta, phi).
struct StuckCrossing {
    Crossing crossing;
    double theta = 0.0;
    double phi = 0.0;
    bool operator==(const StuckCrossing&) const = default;
};

/// MZI whose splitting angle can only reach [theta_min, theta_max].
struct RangeLimitedCrossing {
    Crossing crossing;
    double theta_min = 0.0;
    double theta_max = std::numbers::pi / 2;
    bool operator==(const RangeLimitedCrossing&) const = default;
};

struct OutputPhase {
    int mode = 1;
    bool operator==(const OutputPhase&) const = default;
};

/// Either the input phase of a crossing or one of the output phases.
using PhaseSite = std::variant<Crossing, OutputPhase>;

struct DeadPhaseShifter {
    PhaseSite site;
    double value = 0.0;
    bool operator==(const DeadPhaseShifter&) const = default;
};

using DefectSpec = std::variant<SegmentLoss, StuckCrossing, RangeLimitedCrossing, DeadPhaseShifter>;

namespace detail {
template <class... F>
struct overloaded : F... {
    using F::operator()...;
};
template <class... F>
overloaded(F...) -> overloaded<F...>;
}  // namespace detail

inline void validate_defect(const Mesh& mesh, const DefectSpec& defect) {
    auto need_crossing = [&](Crossing x) {
        if (!mesh.contains(x)) {
            throw invalid_input("defect refers to missing crossing (" + std::to_string(x.column) +
                                "," + std::to_string(x.lower_mode) + ")");
        }
    };
    std::visit(
        detail::overloaded{
            [&](const SegmentLoss& d) {
                if (!mesh.contains(d.segment)) {
                    throw invalid_input("defect refers to a segment outside the mesh");
                }
                if (!(d.eta >= 0.0 && d.eta <= 1.0)) {
                    throw invalid_input("segment loss eta must lie in [0, 1]");
                }
            },
            [&](const StuckCrossing& d) { need_crossing(d.crossing); },
            [&](const RangeLimitedCrossing& d) {
                need_crossing(d.crossing);
                if (!(d.theta_min >= 0.0 && d.theta_min <= d.theta_max &&
                      d.theta_max <= std::numbers::pi / 2)) {
                    throw invalid_input("theta range must be nonempty and inside [0, pi/2]");
                }
            },
            [&](const DeadPhaseShifter& d) {
                if (auto* x = std::get_if<Crossing>(&d.site)) {
                    need_crossing(*x);
                } else {
                    int mode = std::get<OutputPhase>(d.site).mode;
                    if (mode < 1 || mode > mesh.modes()) {
                        throw invalid_input("dead output phase on a missing mode");
                    }
                }
            },
        },
        defect);
}

inline void validate_defects(const Mesh& mesh, const std::vector<DefectSpec>& defects) {
    for (const auto& d : defects) {
        validate_defect(mesh, d);
    }
}

}  // namespace defectmesh
