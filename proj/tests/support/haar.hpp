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

// Shared helpers for the test suite.

#pragma once

#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "defectmesh/defectmesh.hpp"

namespace defectmesh::testing {

/// Haar-random unitary via QR of a complex Ginibre matrix, with the phases of
/// R's diagonal folded back into Q.
inline TransferMatrix haar_unitary(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    TransferMatrix z(n, n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            z(r, c) = cdouble(normal(rng), normal(rng));
        }
    }
    Eigen::HouseholderQR<TransferMatrix> qr(z);
    TransferMatrix q = qr.householderQ();
    const TransferMatrix rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < n; ++c) {
        const cdouble d = rmat(c, c);
        q.col(c) *= std::abs(d) > 0 ? d / std::abs(d) : cdouble(1.0);
    }
    return q;
}

/// Random settings for every crossing and output phase of a mesh.
inline MeshSettings random_settings(const Mesh& mesh, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    MeshSettings s = mesh.zero_settings();
    for (auto& pp : s.crossings) {
        pp = {angle(rng) / 4.0, angle(rng)};
    }
    for (auto& a : s.output_phases) {
        a = angle(rng);
    }
    return s;
}

struct Compiled {
    MeshSettings settings;
    TransferMatrix target;
};

/// Embeds a Haar-random target of the plan's effective size onto `mesh`.
inline Compiled compile_haar(const Mesh& mesh, const RoutingPlan& plan, std::mt19937_64& rng) {
    const auto eff = effective_layout(mesh, plan);
    Compiled out;
    if (eff.layout.kind == LayoutKind::rectangular) {
        out.target = haar_unitary(eff.layout.modes, rng);
        out.settings = embed_target(mesh, plan, clements_decompose(out.target, eff.layout));
    } else {
        const Mesh effective(eff.layout);
        const auto target_settings = random_settings(effective, rng);
        out.target = reconstruct(effective, target_settings);
        out.settings = embed_target(mesh, plan, target_settings);
    }
    return out;
}

/// Every segment of a mesh, input leads and output leads included.
inline std::vector<Segment> all_segments(const Mesh& mesh) {
    std::vector<Segment> out;
    for (int mode = 1; mode <= mesh.modes(); ++mode) {
        for (int slot = 0; slot <= mesh.depth(); ++slot) {
            out.push_back({mode, slot});
        }
    }
    return out;
}

}  // namespace defectmesh::testing
