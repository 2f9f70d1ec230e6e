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

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "support/haar.hpp"

namespace dm = defectmesh;
using dm::testing::random_settings;

namespace {

dm::MeshDocument roundtrip(const dm::MeshDocument& doc) {
    return dm::parse_mesh(dm::serialize_mesh(doc).dump());
}

TEST(Interchange, RandomSettingsRoundTrip) {
    std::mt19937_64 rng(21);
    dm::MeshDocument doc;
    doc.layout = dm::MeshLayout::rectangular(6);
    doc.settings = random_settings(dm::Mesh(doc.layout), rng);
    const auto back = roundtrip(doc);
    EXPECT_EQ(back, doc);
    EXPECT_FALSE(back.output_phases_defaulted);
}

TEST(Interchange, FullDocumentRoundTrip) {
    std::mt19937_64 rng(22);
    dm::MeshDocument doc;
    doc.layout = dm::MeshLayout::rectangular(8);
    const dm::Mesh mesh(doc.layout);
    doc.defects = {dm::SegmentLoss{{2, 3}, 0.25}, dm::StuckCrossing{{5, 5}, 0.3, 1.1},
                   dm::RangeLimitedCrossing{{2, 4}, 0.1, 0.7},
                   dm::DeadPhaseShifter{dm::Crossing{1, 1}, 0.5},
                   dm::DeadPhaseShifter{dm::OutputPhase{8}, 2.0}};
    doc.plan = dm::plan_single(mesh, {6, 2});
    doc.settings = random_settings(mesh, rng);
    doc.target = dm::testing::haar_unitary(7, rng);
    EXPECT_EQ(roundtrip(doc), doc);
}

TEST(Interchange, ShallowLayoutWithParityRoundTrip) {
    dm::MeshDocument doc;
    doc.layout = dm::MeshLayout::shallow(9, 4, 1);
    doc.settings = dm::Mesh(doc.layout).zero_settings();
    const auto j = dm::serialize_mesh(doc);
    EXPECT_EQ(j.at("layout").at("kind"), "shallow_brick_wall");
    EXPECT_EQ(roundtrip(doc), doc);
}

TEST(Interchange, DocumentCarriesPlanStatesAndEffectiveLayout) {
    dm::MeshDocument doc;
    doc.layout = dm::MeshLayout::rectangular(10);
    const dm::Mesh mesh(doc.layout);
    doc.settings = mesh.zero_settings();
    doc.plan = dm::plan_single(mesh, {8, 4});
    const auto j = dm::serialize_mesh(doc);
    EXPECT_EQ(j.at("effective_layout").at("modes"), 9);
    int fixed = 0;
    for (const auto& x : j.at("crossings")) {
        fixed += x.at("state") != "tunable" ? 1 : 0;
    }
    EXPECT_EQ(fixed, 9);
}

TEST(Interchange, ParityViolationIsRejected) {
    const std::string text = R"({"layout": {"kind": "rectangular", "modes": 4, "depth": 4},
        "crossings": [{"c": 2, "m": 1, "theta": 0.1, "phi": 0.2}],
        "output_phases": [0, 0, 0, 0], "defects": []})";
    EXPECT_THROW(dm::parse_mesh(text), dm::parse_error);
}

TEST(Interchange, MissingOutputPhasesDefaultToZero) {
    const std::string text = R"({"layout": {"kind": "rectangular", "modes": 3, "depth": 3}})";
    const auto doc = dm::parse_mesh(text);
    EXPECT_TRUE(doc.output_phases_defaulted);
    EXPECT_EQ(doc.settings.output_phases, (std::vector<double>{0, 0, 0}));
    EXPECT_EQ(doc.settings, dm::Mesh(doc.layout).zero_settings());
}

TEST(Interchange, MalformedDocumentsAreRejected) {
    EXPECT_THROW(dm::parse_mesh(std::string("{not json")), dm::parse_error);
    EXPECT_THROW(dm::parse_mesh(std::string("[1, 2]")), dm::parse_error);
    EXPECT_THROW(dm::parse_mesh(std::string(R"({"layout": {"kind": "rectangular", "modes": 4, "depth": 3}})")),
                 dm::invalid_input);
    EXPECT_THROW(dm::parse_mesh(std::string(
                     R"({"layout": {"kind": "rectangular", "modes": 2, "depth": 2}, "output_phases": [0]})")),
                 dm::parse_error);
    EXPECT_THROW(dm::parse_mesh(std::string(
                     R"({"layout": {"kind": "rectangular", "modes": 2, "depth": 2},
                         "defects": [{"kind": "segment_loss", "mode": 1, "slot": 1, "eta": 2}]})")),
                 dm::parse_error);
}

TEST(Matrices, CsvAndJsonRoundTrip) {
    std::mt19937_64 rng(23);
    const auto u = dm::testing::haar_unitary(5, rng);
    EXPECT_EQ(dm::matrix_from_csv(dm::matrix_to_csv(u)), u);
    EXPECT_EQ(dm::matrix_from_json(dm::matrix_to_json(u)), u);
}

TEST(Matrices, RejectRaggedInput) {
    EXPECT_THROW(dm::matrix_from_csv("1,0,0,0\n0,0\n"), dm::parse_error);
    EXPECT_THROW(dm::matrix_from_csv("1,0,0\n"), dm::parse_error);
    EXPECT_THROW(dm::matrix_from_json(dm::json::parse("[[[1,0]],[[0,0],[1,0]]]")), dm::parse_error);
}

TEST(Report, SerializesVerdict) {
    dm::VerificationReport r;
    r.counts_ok = r.structure_ok = r.independence_ok = true;
    const auto j = dm::report_to_json(r);
    EXPECT_TRUE(j.at("passed").get<bool>());
    r.zero_light = 1.0;
    EXPECT_FALSE(dm::report_to_json(r).at("passed").get<bool>());
}

}  // namespace
