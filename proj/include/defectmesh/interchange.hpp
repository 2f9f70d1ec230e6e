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
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "defectmesh/circumvent.hpp"
#include "defectmesh/decompose.hpp"
#include "defectmesh/defects.hpp"
#include "defectmesh/errors.hpp"
#include "defectmesh/mesh.hpp"
#include "defectmesh/simulate.hpp"

namespace defectmesh {

using json = nlohmann::json;

/// Everything the mesh interchange document can carry.
struct MeshDocument {
    MeshLayout layout;
    MeshSettings settings;
    std::vector<DefectSpec> defects;
    std::optional<RoutingPlan> plan;
    /// Effective-port matrix the settings are meant to realize.
    std::optional<TransferMatrix> target;

    /// Set by the parser when the document had no output_phases.
    bool output_phases_defaulted = false;

    bool operator==(const MeshDocument& o) const {
        auto same_target = [&] {
            if (target.has_value() != o.target.has_value()) {
                return false;
            }
            return !target || (target->rows() == o.target->rows() &&
                               target->cols() == o.target->cols() && *target == *o.target);
        };
        return layout == o.layout && settings == o.settings && defects == o.defects &&
               plan == o.plan && same_target();
    }
};

namespace detail {

template <class T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw parse_error(std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw parse_error(std::string("bad field '") + key + "': " + e.what());
    }
}

inline json layout_to_json(const MeshLayout& layout) {
    json j{{"kind", to_string(layout.kind)}, {"modes", layout.modes}, {"depth", layout.depth}};
    if (layout.parity != 0) {
        j["parity"] = layout.parity;
    }
    return j;
}

inline MeshLayout layout_from_json(const json& j) {
    MeshLayout layout;
    layout.kind = layout_kind_from_string(field<std::string>(j, "kind"));
    layout.modes = field<int>(j, "modes");
    layout.depth = j.contains("depth") ? field<int>(j, "depth") : layout.modes;
    layout.parity = j.contains("parity") ? field<int>(j, "parity") : 0;
    try {
        layout.validate();
    } catch (const invalid_input& e) {
        throw parse_error(e.what());
    }
    return layout;
}

inline json crossing_to_json(Crossing x) { return json::array({x.column, x.lower_mode}); }
inline json segment_to_json(Segment s) { return json::array({s.mode, s.slot}); }

inline Crossing crossing_from_pair(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw parse_error("crossing must be a [column, lower_mode] pair");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

inline Segment segment_from_pair(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw parse_error("segment must be a [mode, slot] pair");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

inline json defect_to_json(const DefectSpec& defect) {
    return std::visit(
        overloaded{
            [](const SegmentLoss& d) {
                return json{{"kind", "segment_loss"},
                            {"mode", d.segment.mode},
                            {"slot", d.segment.slot},
                            {"eta", d.eta}};
            },
            [](const StuckCrossing& d) {
                return json{{"kind", "stuck_crossing"},
                            {"c", d.crossing.column},
                            {"m", d.crossing.lower_mode},
                            {"theta", d.theta},
                            {"phi", d.phi}};
            },
            [](const RangeLimitedCrossing& d) {
                return json{{"kind", "range_limited_crossing"},
                            {"c", d.crossing.column},
                            {"m", d.crossing.lower_mode},
                            {"theta_min", d.theta_min},
                            {"theta_max", d.theta_max}};
            },
            [](const DeadPhaseShifter& d) {
                json j{{"kind", "dead_phase_shifter"}, {"value", d.value}};
                if (auto* x = std::get_if<Crossing>(&d.site)) {
                    j["c"] = x->column;
                    j["m"] = x->lower_mode;
                } else {
                    j["output_mode"] = std::get<OutputPhase>(d.site).mode;
                }
                return j;
            },
        },
        defect);
}

inline DefectSpec defect_from_json(const json& j) {
    const auto kind = field<std::string>(j, "kind");
    auto crossing = [&] { return Crossing{field<int>(j, "c"), field<int>(j, "m")}; };
    if (kind == "segment_loss") {
        return SegmentLoss{{field<int>(j, "mode"), field<int>(j, "slot")}, field<double>(j, "eta")};
    }
    if (kind == "stuck_crossing") {
        return StuckCrossing{crossing(), field<double>(j, "theta"), field<double>(j, "phi")};
    }
    if (kind == "range_limited_crossing") {
        return RangeLimitedCrossing{crossing(), field<double>(j, "theta_min"),
                                    field<double>(j, "theta_max")};
    }
    if (kind == "dead_phase_shifter") {
        if (j.contains("output_mode")) {
            return DeadPhaseShifter{OutputPhase{field<int>(j, "output_mode")},
                                    field<double>(j, "value")};
        }
        return DeadPhaseShifter{crossing(), field<double>(j, "value")};
    }
    throw parse_error("unknown defect kind '" + kind + "'");
}

inline json relabel_to_json(const std::map<int, int>& relabel) {
    json out = json::array();
    for (const auto& [from, to] : relabel) {
        out.push_back({from, to});
    }
    return out;
}

inline std::map<int, int> relabel_from_json(const json& j) {
    std::map<int, int> out;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2) {
            throw parse_error("relabel entries must be [old, new] pairs");
        }
        out[pair[0].get<int>()] = pair[1].get<int>();
    }
    return out;
}

inline json plan_to_json(const RoutingPlan& plan) {
    auto crossings = [](const std::set<Crossing>& xs) {
        json out = json::array();
        for (const auto& x : xs) {
            out.push_back(crossing_to_json(x));
        }
        return out;
    };
    json segments = json::array();
    for (const auto& s : plan.isolated_segments) {
        segments.push_back(segment_to_json(s));
    }
    return json{{"fixed_cross", crossings(plan.fixed_cross)},
                {"fixed_bar", crossings(plan.fixed_bar)},
                {"dont_care", crossings(plan.dont_care)},
                {"discarded_inputs", plan.discarded_inputs},
                {"discarded_outputs", plan.discarded_outputs},
                {"isolated_segments", segments},
                {"input_relabel", relabel_to_json(plan.input_relabel)},
                {"output_relabel", relabel_to_json(plan.output_relabel)},
                {"components", plan.components},
                {"ascending", plan.ascending}};
}

inline RoutingPlan plan_from_json(const json& j, const MeshLayout& layout) {
    RoutingPlan plan;
    plan.layout = layout;
    auto crossings = [&](const char* key) {
        std::set<Crossing> out;
        for (const auto& x : field<json>(j, key)) {
            out.insert(crossing_from_pair(x));
        }
        return out;
    };
    try {
        plan.fixed_cross = crossings("fixed_cross");
        plan.fixed_bar = crossings("fixed_bar");
        plan.dont_care = crossings("dont_care");
        plan.discarded_inputs = field<std::vector<int>>(j, "discarded_inputs");
        plan.discarded_outputs = field<std::vector<int>>(j, "discarded_outputs");
        for (const auto& s : field<json>(j, "isolated_segments")) {
            plan.isolated_segments.insert(segment_from_pair(s));
        }
        plan.input_relabel = relabel_from_json(field<json>(j, "input_relabel"));
        plan.output_relabel = relabel_from_json(field<json>(j, "output_relabel"));
        plan.components = field<int>(j, "components");
        plan.ascending = j.contains("ascending") ? field<int>(j, "ascending") : 0;
    } catch (const json::exception& e) {
        throw parse_error(std::string("malformed plan: ") + e.what());
    }
    return plan;
}

inline std::string crossing_state(const RoutingPlan* plan, Crossing x) {
    if (plan) {
        if (plan->fixed_cross.count(x)) {
            return "fixed_cross";
        }
        if (plan->fixed_bar.count(x)) {
            return "fixed_bar";
        }
        if (plan->dont_care.count(x)) {
            return "dont_care";
        }
    }
    return "tunable";
}

}  // namespace detail

inline json matrix_to_json(const TransferMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back({m(r, c).real(), m(r, c).imag()});
        }
        rows.push_back(row);
    }
    return rows;
}

inline TransferMatrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) {
        throw parse_error("matrix must be a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].is_array() ? j[0].size() : 0);
    TransferMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw parse_error("matrix rows must all have the same length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                throw parse_error("matrix entries must be [re, im] pairs");
            }
            m(r, c) = {e[0].get<double>(), e[1].get<double>()};
        }
    }
    return m;
}

/// CSV form: one line per row, each entry written as two columns re,im.
inline std::string matrix_to_csv(const TransferMatrix& m) {
    std::ostringstream out;
    out.precision(17);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (c ? "," : "") << m(r, c).real() << ',' << m(r, c).imag();
        }
        out << '\n';
    }
    return out.str();
}

inline TransferMatrix matrix_from_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::vector<double> values;
        std::istringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
                    throw parse_error("bad number '" + cell + "'");
                }
            } catch (const std::logic_error&) {
                throw parse_error("bad number '" + cell + "' in matrix csv");
            }
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty() || rows[0].size() % 2 != 0) {
        throw parse_error("matrix csv needs rows of re,im pairs");
    }
    const auto cols = static_cast<Eigen::Index>(rows[0].size() / 2);
    TransferMatrix m(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) {
            throw parse_error("matrix csv rows differ in length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto i = static_cast<std::size_t>(2 * c);
            m(static_cast<Eigen::Index>(r), c) = {rows[r][i], rows[r][i + 1]};
        }
    }
    return m;
}

inline json serialize_mesh(const MeshDocument& doc) {
    const Mesh mesh(doc.layout);
    mesh.check_settings(doc.settings);
    const RoutingPlan* plan = doc.plan ? &*doc.plan : nullptr;
    json crossings = json::array();
    const auto xs = mesh.crossings();
    for (std::size_t i = 0; i < xs.size(); ++i) {
        crossings.push_back({{"c", xs[i].column},
                             {"m", xs[i].lower_mode},
                             {"theta", doc.settings.crossings[i].theta},
                             {"phi", doc.settings.crossings[i].phi},
                             {"state", detail::crossing_state(plan, xs[i])}});
    }
    json defects = json::array();
    for (const auto& d : doc.defects) {
        defects.push_back(detail::defect_to_json(d));
    }
    json j{{"layout", detail::layout_to_json(doc.layout)},
           {"crossings", crossings},
           {"output_phases", doc.settings.output_phases},
           {"defects", defects}};
    if (doc.plan) {
        j["plan"] = detail::plan_to_json(*doc.plan);
        const auto eff = effective_layout(mesh, *doc.plan);
        j["effective_layout"] = detail::layout_to_json(eff.layout);
    }
    if (doc.target) {
        j["target"] = matrix_to_json(*doc.target);
    }
    return j;
}

/// Inverse of serialize_mesh. Crossings may be omitted entirely (all bar);
/// a missing output_phases array defaults to zeros and sets the warning flag.
inline MeshDocument parse_mesh(const json& j) {
    if (!j.is_object()) {
        throw parse_error("mesh document must be a JSON object");
    }
    MeshDocument doc;
    doc.layout = detail::layout_from_json(detail::field<json>(j, "layout"));
    const Mesh mesh(doc.layout);
    doc.settings = mesh.zero_settings();

    if (j.contains("crossings")) {
        std::vector<bool> seen(mesh.size(), false);
        for (const auto& x : j.at("crossings")) {
            const Crossing id{detail::field<int>(x, "c"), detail::field<int>(x, "m")};
            const auto index = mesh.index_of(id);
            if (!index) {
                throw parse_error("settings given for nonexistent crossing (" +
                                  std::to_string(id.column) + "," + std::to_string(id.lower_mode) +
                                  ")");
            }
            if (seen[*index]) {
                throw parse_error("crossing (" + std::to_string(id.column) + "," +
                                  std::to_string(id.lower_mode) + ") listed twice");
            }
            seen[*index] = true;
            doc.settings.crossings[*index] = {detail::field<double>(x, "theta"),
                                              detail::field<double>(x, "phi")};
            if (x.contains("state")) {
                const auto state = detail::field<std::string>(x, "state");
                if (state != "tunable" && state != "fixed_cross" && state != "fixed_bar" &&
                    state != "dont_care") {
                    throw parse_error("unknown crossing state '" + state + "'");
                }
            }
        }
        if (!j.at("crossings").empty() &&
            std::find(seen.begin(), seen.end(), false) != seen.end()) {
            throw parse_error("crossings list does not cover every crossing of the layout");
        }
    }

    if (j.contains("output_phases")) {
        doc.settings.output_phases = detail::field<std::vector<double>>(j, "output_phases");
        if (doc.settings.output_phases.size() != static_cast<std::size_t>(doc.layout.modes)) {
            throw parse_error("output_phases must have one entry per mode");
        }
    } else {
        doc.output_phases_defaulted = true;
    }

    if (j.contains("defects")) {
        for (const auto& d : j.at("defects")) {
            doc.defects.push_back(detail::defect_from_json(d));
        }
        try {
            validate_defects(mesh, doc.defects);
        } catch (const invalid_input& e) {
            throw parse_error(e.what());
        }
    }
    if (j.contains("plan")) {
        doc.plan = detail::plan_from_json(j.at("plan"), doc.layout);
    }
    if (j.contains("target")) {
        doc.target = matrix_from_json(j.at("target"));
    }
    return doc;
}

inline MeshDocument parse_mesh(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("malformed JSON: ") + e.what());
    }
    return parse_mesh(j);
}

inline json report_to_json(const VerificationReport& r) {
    return json{{"zero_light", r.zero_light},
                {"target_error", std::isfinite(r.target_error) ? json(r.target_error) : json(nullptr)},
                {"independence_error", r.independence_error},
                {"counts_ok", r.counts_ok},
                {"structure_ok", r.structure_ok},
                {"independence_ok", r.independence_ok},
                {"passed", r.passed()}};
}

}  // namespace defectmesh
