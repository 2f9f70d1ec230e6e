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
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "defectmesh/decompose.hpp"
#include "defectmesh/defects.hpp"
#include "defectmesh/errors.hpp"
#include "defectmesh/mesh.hpp"

namespace defectmesh {

/// Direction light travels along a segment when every crossing is crossed.
/// NW-SE descends toward mode 1 as it moves right; NE-SW ascends toward mode n.
enum class Orientation { nw_se, ne_sw };
enum class DiagonalSide { above_main, below_main };
enum class Edge { top, bottom, input, output };

struct DiagonalClass {
    Orientation orientation;
    DiagonalSide side;
    /// Set when the segment lies on the mesh boundary.
    std::optional<Edge> edge;
};

inline DiagonalClass classify_segment(const Mesh& mesh, Segment segment) {
    if (!mesh.contains(segment)) {
        throw invalid_input("segment is outside the mesh");
    }
    const int k = segment.mode;
    const int s = segment.slot;
    const auto& layout = mesh.layout();
    // Parity decides: if the crossing to the left couples (k, k+1) (present or
    // not) the through-going diagonal descends.
    const bool descends = (k - s - layout.parity) % 2 == 0;
    DiagonalClass out{};
    out.orientation = descends ? Orientation::nw_se : Orientation::ne_sw;
    const double center_mode = (layout.modes + 1) / 2.0;
    const double center_slot = layout.depth / 2.0;
    const double index = descends ? k + s : k - s;
    const double center = descends ? center_mode + center_slot : center_mode - center_slot;
    out.side = index > center ? DiagonalSide::above_main : DiagonalSide::below_main;
    if (k == layout.modes) {
        out.edge = Edge::top;
    } else if (k == 1) {
        out.edge = Edge::bottom;
    } else if (s == 0) {
        out.edge = Edge::input;
    } else if (s == layout.depth) {
        out.edge = Edge::output;
    }
    return out;
}

/// Fixed settings, discarded ports and relabelings that keep light away from a
/// set of defective segments.
struct RoutingPlan {
    MeshLayout layout;
    std::set<Crossing> fixed_cross;
    std::set<Crossing> fixed_bar;
    std::set<Crossing> dont_care;
    std::vector<int> discarded_inputs;
    std::vector<int> discarded_outputs;
    std::set<Segment> isolated_segments;
    std::map<int, int> input_relabel;
    std::map<int, int> output_relabel;
    /// Number of single-segment plans combined into this one.
    int components = 0;
    /// Number of those that follow a NE-SW diagonal; each one flips the
    /// parity of the surviving wall.
    int ascending = 0;

    bool operator==(const RoutingPlan&) const = default;
};

namespace detail {

inline std::map<int, int> compaction(int modes, const std::vector<int>& discarded) {
    std::map<int, int> out;
    int next = 1;
    for (int k = 1; k <= modes; ++k) {
        if (std::find(discarded.begin(), discarded.end(), k) == discarded.end()) {
            out[k] = next++;
        }
    }
    return out;
}

inline void finish_relabel(RoutingPlan& plan) {
    std::sort(plan.discarded_inputs.begin(), plan.discarded_inputs.end());
    std::sort(plan.discarded_outputs.begin(), plan.discarded_outputs.end());
    plan.input_relabel = compaction(plan.layout.modes, plan.discarded_inputs);
    plan.output_relabel = compaction(plan.layout.modes, plan.discarded_outputs);
}

}  // namespace detail

inline RoutingPlan empty_plan(const Mesh& mesh) {
    RoutingPlan plan;
    plan.layout = mesh.layout();
    detail::finish_relabel(plan);
    return plan;
}

/// Every defect becomes the set of single-mode segments that feed it.
inline std::set<Segment> reduce_defects(const Mesh& mesh, const std::vector<DefectSpec>& defects) {
    std::set<Segment> out;
    auto inputs_of = [&](Crossing x) {
        out.insert({x.lower_mode, x.column - 1});
        out.insert({x.lower_mode + 1, x.column - 1});
    };
    for (const auto& defect : defects) {
        validate_defect(mesh, defect);
        std::visit(detail::overloaded{
                       [&](const SegmentLoss& d) { out.insert(d.segment); },
                       [&](const StuckCrossing& d) { inputs_of(d.crossing); },
                       [&](const RangeLimitedCrossing& d) { inputs_of(d.crossing); },
                       [&](const DeadPhaseShifter& d) {
                           if (auto* x = std::get_if<Crossing>(&d.site)) {
                               // The input phase sits on the crossing's lower input.
                               out.insert({x->lower_mode, x->column - 1});
                           } else {
                               out.insert({std::get<OutputPhase>(d.site).mode, mesh.depth()});
                           }
                       },
                   },
                   defect);
    }
    return out;
}

/// Routes a dedicated path through one defective segment: the diagonal through
/// it is set to cross, and where the diagonal meets the top or bottom mode the
/// path follows that mode to the nearest port through bar crossings. Edge
/// crossings next to the ports between the path and the corner it points to
/// are set to bar as well so that the survivors form a smaller wall.
inline RoutingPlan plan_single(const Mesh& mesh, Segment defect) {
    if (!mesh.contains(defect)) {
        throw invalid_input("defect segment (" + std::to_string(defect.mode) + "," +
                            std::to_string(defect.slot) + ") is outside the mesh");
    }
    const auto& layout = mesh.layout();
    const int n = layout.modes;
    const int d = layout.depth;
    const bool descends = classify_segment(mesh, defect).orientation == Orientation::nw_se;
    const int step = descends ? -1 : 1;

    RoutingPlan plan;
    plan.layout = layout;
    plan.components = 1;
    plan.ascending = descends ? 0 : 1;
    plan.isolated_segments.insert(defect);

    // Forward (rightward) along the diagonal.
    Segment end = defect;
    while (end.slot < d) {
        const int lower = descends ? end.mode - 1 : end.mode;
        if (!layout.couples(end.slot + 1, lower)) {
            break;
        }
        plan.fixed_cross.insert({end.slot + 1, lower});
        end = {end.mode + step, end.slot + 1};
        plan.isolated_segments.insert(end);
    }
    // Backward (leftward).
    Segment start = defect;
    while (start.slot > 0) {
        const int lower = descends ? start.mode : start.mode - 1;
        if (!layout.couples(start.slot, lower)) {
            break;
        }
        plan.fixed_cross.insert({start.slot, lower});
        start = {start.mode - step, start.slot - 1};
        plan.isolated_segments.insert(start);
    }

    auto bar_mode_columns = [&](int mode, int first, int last) {
        const int lower = mode == n ? n - 1 : 1;
        for (int c = std::max(first, 1); c <= std::min(last, d); ++c) {
            if (layout.couples(c, lower)) {
                plan.fixed_bar.insert({c, lower});
            }
        }
    };
    auto bar_column = [&](int column, int first_lower, int last_lower) {
        for (int m = std::max(first_lower, 1); m <= std::min(last_lower, n - 1); ++m) {
            if (layout.couples(column, m)) {
                plan.fixed_bar.insert({column, m});
            }
        }
    };

    // Left end.
    if (start.slot == 0) {
        plan.discarded_inputs.push_back(start.mode);
        if (descends) {
            bar_column(1, start.mode + 1, n - 1);
        } else {
            bar_column(1, 1, start.mode - 2);
        }
    } else {
        const int edge_mode = descends ? n : 1;
        plan.discarded_inputs.push_back(edge_mode);
        bar_mode_columns(edge_mode, 1, start.slot);
        for (int s = 0; s < start.slot; ++s) {
            plan.isolated_segments.insert({edge_mode, s});
        }
    }
    // Right end.
    if (end.slot == d) {
        plan.discarded_outputs.push_back(end.mode);
        if (descends) {
            bar_column(d, 1, end.mode - 2);
        } else {
            bar_column(d, end.mode + 1, n - 1);
        }
    } else {
        const int edge_mode = descends ? 1 : n;
        plan.discarded_outputs.push_back(edge_mode);
        bar_mode_columns(edge_mode, end.slot + 1, d);
        for (int s = end.slot + 1; s <= d; ++s) {
            plan.isolated_segments.insert({edge_mode, s});
        }
    }
    detail::finish_relabel(plan);
    return plan;
}

/// Unions single-segment plans. A crossing demanded both cross and bar carries
/// no light and becomes don't-care; identical plans are counted once.
inline RoutingPlan merge_plans(const std::vector<RoutingPlan>& plans) {
    if (plans.empty()) {
        throw invalid_input("merge_plans needs at least one plan");
    }
    RoutingPlan out;
    out.layout = plans.front().layout;
    std::vector<const RoutingPlan*> distinct;
    for (const auto& p : plans) {
        if (!(p.layout == out.layout)) {
            throw invalid_input("cannot merge plans for different meshes");
        }
        if (std::none_of(distinct.begin(), distinct.end(),
                         [&](const RoutingPlan* q) { return *q == p; })) {
            distinct.push_back(&p);
        }
    }
    std::set<Crossing> cross;
    std::set<Crossing> bar;
    for (const auto* p : distinct) {
        cross.insert(p->fixed_cross.begin(), p->fixed_cross.end());
        bar.insert(p->fixed_bar.begin(), p->fixed_bar.end());
        out.dont_care.insert(p->dont_care.begin(), p->dont_care.end());
        out.isolated_segments.insert(p->isolated_segments.begin(), p->isolated_segments.end());
        out.discarded_inputs.insert(out.discarded_inputs.end(), p->discarded_inputs.begin(),
                                    p->discarded_inputs.end());
        out.discarded_outputs.insert(out.discarded_outputs.end(), p->discarded_outputs.begin(),
                                     p->discarded_outputs.end());
        out.components += p->components;
        out.ascending += p->ascending;
    }
    for (const auto& x : cross) {
        if (bar.count(x)) {
            out.dont_care.insert(x);
        }
    }
    for (const auto& x : cross) {
        if (!out.dont_care.count(x)) {
            out.fixed_cross.insert(x);
        }
    }
    for (const auto& x : bar) {
        if (!out.dont_care.count(x)) {
            out.fixed_bar.insert(x);
        }
    }
    detail::finish_relabel(out);
    auto has_duplicates = [](const std::vector<int>& v) {
        return std::adjacent_find(v.begin(), v.end()) != v.end();
    };
    if (has_duplicates(out.discarded_inputs) || has_duplicates(out.discarded_outputs)) {
        throw unsalvageable("defect paths share a port; the plans cannot be combined");
    }
    return out;
}

struct EffectiveLayout {
    MeshLayout layout;
    std::map<int, int> input_relabel;
    std::map<int, int> output_relabel;
};

/// Layout of the interferometer left over once the plan's ports are dropped:
/// k circumvented segments cost k modes (and k columns for shallow walls).
inline EffectiveLayout effective_layout(const Mesh& mesh, const RoutingPlan& plan) {
    if (!(plan.layout == mesh.layout())) {
        throw invalid_input("plan was computed for a different mesh");
    }
    const auto& layout = mesh.layout();
    const int k = plan.components;
    EffectiveLayout out{layout, plan.input_relabel, plan.output_relabel};
    out.layout.modes = layout.modes - k;
    out.layout.parity = (layout.parity + plan.ascending) % 2;
    if (layout.kind == LayoutKind::rectangular) {
        out.layout.depth = out.layout.modes;
        if (out.layout.modes < 2) {
            throw unsalvageable("circumventing " + std::to_string(k) + " defects leaves fewer than 2 modes");
        }
    } else {
        out.layout.depth = layout.depth - k;
        if (out.layout.depth < 1) {
            throw unsalvageable("circumventing " + std::to_string(k) +
                                " defects leaves no columns in the shallow mesh");
        }
    }
    return out;
}

struct PlanCounts {
    int tunable_crossings = 0;
    int free_phase_shifters = 0;
    bool operator==(const PlanCounts&) const = default;
};

inline PlanCounts plan_counts(const Mesh& mesh, const RoutingPlan& plan) {
    PlanCounts c;
    c.tunable_crossings = static_cast<int>(mesh.size() - plan.fixed_cross.size() -
                                           plan.fixed_bar.size() - plan.dont_care.size());
    const int used_outputs = mesh.modes() - static_cast<int>(plan.discarded_outputs.size());
    c.free_phase_shifters = c.tunable_crossings + used_outputs - 1;
    return c;
}

/// Correspondence between the surviving tunable crossings and the effective
/// wall, found by following which physical mode carries each used wire.
struct TemplateMatch {
    Mesh effective;
    /// physical[i] realizes effective.crossings()[i].
    std::vector<Crossing> physical;
};

inline TemplateMatch match_template(const Mesh& mesh, const RoutingPlan& plan) {
    const auto eff = effective_layout(mesh, plan);
    TemplateMatch out{Mesh(eff.layout), {}};
    const Mesh& target = out.effective;
    out.physical.assign(target.size(), Crossing{0, 0});

    const int n = mesh.modes();
    std::vector<bool> dark(static_cast<std::size_t>(n + 1), false);
    for (int k : plan.discarded_inputs) {
        dark[static_cast<std::size_t>(k)] = true;
    }
    std::vector<int> last(static_cast<std::size_t>(target.modes() + 2), 0);
    std::vector<bool> used(target.size(), false);

    for (const auto& x : mesh.crossings()) {
        const auto lo = static_cast<std::size_t>(x.lower_mode);
        if (plan.fixed_cross.count(x)) {
            std::swap(dark[lo], dark[lo + 1]);
            continue;
        }
        if (plan.fixed_bar.count(x) || plan.dont_care.count(x)) {
            continue;
        }
        if (dark[lo] || dark[lo + 1]) {
            throw invariant_violation("tunable crossing (" + std::to_string(x.column) + "," +
                                      std::to_string(x.lower_mode) + ") touches a discarded path");
        }
        const int wire = static_cast<int>(std::count(dark.begin() + 1, dark.begin() + lo + 1, false));
        const auto w = static_cast<std::size_t>(wire);
        int column = std::max(last[w], last[w + 1]) + 1;
        if (!target.layout().couples(column, wire)) {
            ++column;
        }
        auto index = target.index_of({column, wire});
        if (!index || used[*index]) {
            throw invariant_violation("surviving crossings do not form the effective wall");
        }
        used[*index] = true;
        out.physical[*index] = x;
        last[w] = last[w + 1] = column;
    }
    if (std::find(used.begin(), used.end(), false) != used.end()) {
        throw invariant_violation("effective wall has crossings with no physical counterpart");
    }
    std::vector<int> dark_outputs;
    for (int k = 1; k <= n; ++k) {
        if (dark[static_cast<std::size_t>(k)]) {
            dark_outputs.push_back(k);
        }
    }
    if (dark_outputs != plan.discarded_outputs) {
        throw invariant_violation("discarded paths do not end at the discarded outputs");
    }
    return out;
}

/// Plan isolating every defect in `defects` (empty plan when there are none).
/// Separate paths can hem in a tunable crossing so that the survivors no
/// longer form a smaller wall; such defect sets are reported unsalvageable.
inline RoutingPlan plan_defects(const Mesh& mesh, const std::vector<DefectSpec>& defects) {
    const auto segments = reduce_defects(mesh, defects);
    if (segments.empty()) {
        return empty_plan(mesh);
    }
    std::vector<RoutingPlan> plans;
    for (const auto& s : segments) {
        plans.push_back(plan_single(mesh, s));
    }
    auto merged = merge_plans(plans);
    if (merged.components > 1) {
        try {
            (void)match_template(mesh, merged);
        } catch (const invariant_violation& e) {
            throw unsalvageable(std::string("circumvention paths interfere: ") + e.what());
        }
    }
    return merged;
}

/// Full-mesh settings realizing `target` (settings of the effective wall) on
/// the used, relabeled ports. Fixed crossings carry zero phase; the -1 picked
/// up by wires that descend through a cross crossing is absorbed into the next
/// tunable phase or the output layer.
inline MeshSettings embed_target(const Mesh& mesh, const RoutingPlan& plan,
                                 const MeshSettings& target) {
    const auto match = match_template(mesh, plan);
    match.effective.check_settings(target);

    std::map<Crossing, std::size_t> template_index;
    for (std::size_t i = 0; i < match.physical.size(); ++i) {
        template_index[match.physical[i]] = i;
    }

    MeshSettings out = mesh.zero_settings();
    std::vector<cdouble> carry(static_cast<std::size_t>(mesh.modes() + 1), cdouble{1.0, 0.0});
    const auto crossings = mesh.crossings();
    for (std::size_t i = 0; i < crossings.size(); ++i) {
        const auto& x = crossings[i];
        const auto lo = static_cast<std::size_t>(x.lower_mode);
        if (plan.fixed_cross.count(x)) {
            out.crossings[i] = {std::numbers::pi / 2, 0.0};
            const cdouble lower_in = carry[lo];
            carry[lo] = -carry[lo + 1];
            carry[lo + 1] = lower_in;
        } else if (auto it = template_index.find(x); it != template_index.end()) {
            const auto& want = target.crossings[it->second];
            const double phi = want.phi + std::arg(carry[lo + 1]) - std::arg(carry[lo]);
            out.crossings[i] = {want.theta, wrap_phase(phi)};
            carry[lo] = carry[lo + 1];
        }
    }
    for (const auto& [mode, label] : plan.output_relabel) {
        const double alpha = target.output_phases[static_cast<std::size_t>(label - 1)] -
                             std::arg(carry[static_cast<std::size_t>(mode)]);
        out.output_phases[static_cast<std::size_t>(mode - 1)] = wrap_phase(alpha);
    }
    return out;
}

}  // namespace defectmesh
