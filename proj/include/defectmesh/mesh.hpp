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

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "defectmesh/errors.hpp"

namespace defectmesh {

enum class LayoutKind { rectangular, shallow_brick_wall };

/// Geometry of a brick-wall interferometer.
///
/// Modes and columns are 1-based; mode `modes` is drawn at the top. With
/// `parity == 0` a crossing in column c couples (m, m+1) iff m == c (mod 2), so
/// odd columns couple (1,2),(3,4),... and even columns (2,3),(4,5),...
/// `parity == 1` is the same wall shifted by one column; physical meshes always
/// use 0, but circumventing a NE-SW defect leaves a shifted wall behind.
struct MeshLayout {
    LayoutKind kind = LayoutKind::rectangular;
    int modes = 2;
    int depth = 2;
    int parity = 0;

    static MeshLayout rectangular(int n, int parity = 0) {
        return {LayoutKind::rectangular, n, n, parity};
    }
    static MeshLayout shallow(int n, int d, int parity = 0) {
        return {LayoutKind::shallow_brick_wall, n, d, parity};
    }

    void validate() const {
        if (modes < 2) {
            throw invalid_input("layout needs at least 2 modes, got " + std::to_string(modes));
        }
        if (parity != 0 && parity != 1) {
            throw invalid_input("layout parity must be 0 or 1");
        }
        if (kind == LayoutKind::rectangular && depth != modes) {
            throw invalid_input("rectangular layout needs depth == modes");
        }
        if (kind == LayoutKind::shallow_brick_wall && (depth < 1 || depth >= modes)) {
            throw invalid_input("shallow layout needs 1 <= depth < modes");
        }
    }

    bool couples(int column, int lower_mode) const {
        return column >= 1 && column <= depth && lower_mode >= 1 && lower_mode < modes &&
               (lower_mode - column - parity) % 2 == 0;
    }

    bool operator==(const MeshLayout&) const = default;
};

std::string to_string(LayoutKind kind);
LayoutKind layout_kind_from_string(const std::string& name);

/// One MZI plus its input phase shifter, identified by (column, lower mode).
struct Crossing {
    int column = 1;
    int lower_mode = 1;
    auto operator<=>(const Crossing&) const = default;
};

/// Stretch of a mode between column `slot` and `slot + 1`. Slot 0 is the input
/// lead and slot `depth` the output lead.
struct Segment {
    int mode = 1;
    int slot = 0;
    auto operator<=>(const Segment&) const = default;
};

struct ComponentCounts {
    int beamsplitters = 0;
    int phase_shifters = 0;
    int total = 0;
    bool operator==(const ComponentCounts&) const = default;
};

struct PhasePair {
    double theta = 0.0;
    double phi = 0.0;
    bool operator==(const PhasePair&) const = default;
};

/// Programmable state of a mesh. `crossings[i]` belongs to `Mesh::crossings()[i]`.
struct MeshSettings {
    std::vector<PhasePair> crossings;
    std::vector<double> output_phases;
    bool operator==(const MeshSettings&) const = default;
};

struct Neighbors {
    std::optional<Crossing> left;
    std::optional<Crossing> right;
};

class Mesh {
  public:
    explicit Mesh(MeshLayout layout) : layout_(layout) {
        layout_.validate();
        index_.assign(static_cast<std::size_t>((layout_.depth + 1) * (layout_.modes + 1)), -1);
        for (int c = 1; c <= layout_.depth; ++c) {
            for (int m = 1; m < layout_.modes; ++m) {
                if (layout_.couples(c, m)) {
                    index_[slot_key(c, m)] = static_cast<int>(crossings_.size());
                    crossings_.push_back({c, m});
                }
            }
        }
    }

    const MeshLayout& layout() const { return layout_; }
    int modes() const { return layout_.modes; }
    int depth() const { return layout_.depth; }
    std::span<const Crossing> crossings() const { return crossings_; }
    std::size_t size() const { return crossings_.size(); }

    bool contains(Crossing x) const { return layout_.couples(x.column, x.lower_mode); }
    bool contains(Segment s) const {
        return s.mode >= 1 && s.mode <= layout_.modes && s.slot >= 0 && s.slot <= layout_.depth;
    }

    std::optional<std::size_t> index_of(Crossing x) const {
        if (!contains(x)) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(index_[slot_key(x.column, x.lower_mode)]);
    }

    std::size_t require_index(Crossing x) const {
        auto i = index_of(x);
        if (!i) {
            throw invalid_input("crossing (" + std::to_string(x.column) + "," +
                                std::to_string(x.lower_mode) + ") is not part of the mesh");
        }
        return *i;
    }

    /// The crossing in `column` that acts on `mode`, if any.
    std::optional<Crossing> crossing_at(int column, int mode) const {
        if (layout_.couples(column, mode)) {
            return Crossing{column, mode};
        }
        if (layout_.couples(column, mode - 1)) {
            return Crossing{column, mode - 1};
        }
        return std::nullopt;
    }

    Neighbors neighbors(Segment s) const {
        if (!contains(s)) {
            throw invalid_input("segment (" + std::to_string(s.mode) + "," +
                                std::to_string(s.slot) + ") is outside the mesh");
        }
        return {crossing_at(s.slot, s.mode), crossing_at(s.slot + 1, s.mode)};
    }

    MeshSettings zero_settings() const {
        return {std::vector<PhasePair>(crossings_.size()),
                std::vector<double>(static_cast<std::size_t>(layout_.modes), 0.0)};
    }

    void check_settings(const MeshSettings& settings) const {
        if (settings.crossings.size() != crossings_.size() ||
            settings.output_phases.size() != static_cast<std::size_t>(layout_.modes)) {
            throw dimension_mismatch("settings do not match the mesh layout");
        }
    }

    bool operator==(const Mesh& other) const { return layout_ == other.layout_; }

  private:
    std::size_t slot_key(int c, int m) const {
        return static_cast<std::size_t>(c * (layout_.modes + 1) + m);
    }

    MeshLayout layout_;
    std::vector<Crossing> crossings_;
    std::vector<int> index_;
};

inline Mesh build_mesh(const MeshLayout& layout) { return Mesh(layout); }

/// One MZI per crossing; one phase shifter per crossing plus n-1 independent
/// output phases (the global phase is not counted).
inline ComponentCounts component_counts(const Mesh& mesh) {
    ComponentCounts counts;
    counts.beamsplitters = static_cast<int>(mesh.size());
    counts.phase_shifters = counts.beamsplitters + mesh.modes() - 1;
    counts.total = counts.beamsplitters + counts.phase_shifters;
    return counts;
}

inline std::string to_string(LayoutKind kind) {
    return kind == LayoutKind::rectangular ? "rectangular" : "shallow_brick_wall";
}

inline LayoutKind layout_kind_from_string(const std::string& name) {
    if (name == "rectangular") {
        return LayoutKind::rectangular;
    }
    if (name == "shallow_brick_wall") {
        return LayoutKind::shallow_brick_wall;
    }
    throw parse_error("unknown layout kind '" + name + "'");
}

}  // namespace defectmesh
