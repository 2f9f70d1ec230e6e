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

// Command-line front end: decompose, plan, compile, verify, yield.
//
// Exit codes: 0 success, 1 verification failure, 2 invalid input,
// 3 I/O error, 4 unsalvageable mesh.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "defectmesh/defectmesh.hpp"

namespace dm = defectmesh;

namespace {

enum Exit { ok = 0, verification_failed = 1, bad_input = 2, io_failure = 3, salvage_failed = 4 };

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot read '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) {
        throw io_error("cannot write '" + path + "'");
    }
}

bool looks_like_csv(const std::string& path) {
    return std::filesystem::path(path).extension() == ".csv";
}

dm::TransferMatrix read_matrix(const std::string& path) {
    const auto text = read_file(path);
    if (looks_like_csv(path)) {
        return dm::matrix_from_csv(text);
    }
    try {
        auto j = dm::json::parse(text);
        return dm::matrix_from_json(j.is_object() ? j.at("matrix") : j);
    } catch (const dm::json::exception& e) {
        throw dm::parse_error(std::string("malformed matrix file: ") + e.what());
    }
}

dm::MeshDocument read_document(const std::string& path) {
    auto doc = dm::parse_mesh(read_file(path));
    if (doc.output_phases_defaulted) {
        std::cerr << "warning: " << path << " has no output_phases; using zeros\n";
    }
    return doc;
}

void write_document(const std::string& path, const dm::MeshDocument& doc) {
    write_file(path, dm::serialize_mesh(doc).dump(2) + "\n");
}

/// "a,b,c" or "log:lo:hi:count" (log-spaced, inclusive) or "lin:lo:hi:count".
std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    auto number = [](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::logic_error&) {
            throw dm::invalid_input("bad number '" + s + "'");
        }
        if (used != s.size()) {
            throw dm::invalid_input("bad number '" + s + "'");
        }
        return v;
    };
    if (spec.rfind("log:", 0) == 0 || spec.rfind("lin:", 0) == 0) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ':')) {
            parts.push_back(part);
        }
        if (parts.size() != 4) {
            throw dm::invalid_input("range grid must look like log:lo:hi:count");
        }
        const double lo = number(parts[1]);
        const double hi = number(parts[2]);
        const int count = static_cast<int>(number(parts[3]));
        if (count < 1 || !(lo > 0 || parts[0] == "lin") || !(hi >= lo)) {
            throw dm::invalid_input("bad range grid '" + spec + "'");
        }
        for (int i = 0; i < count; ++i) {
            const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            out.push_back(parts[0] == "log" ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)))
                                            : lo + t * (hi - lo));
        }
        return out;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(number(item));
        }
    }
    return out;
}

std::string overhead_path(const std::string& out, double ratio, bool several) {
    if (!several) {
        return out;
    }
    std::filesystem::path p(out);
    auto name = p.stem().string() + "_r" + dm::decimal(ratio) + p.extension().string();
    return (p.parent_path() / name).string();
}

int run_decompose(const std::string& matrix_path, const std::string& out_path) {
    const auto u = read_matrix(matrix_path);
    dm::MeshDocument doc;
    doc.settings = dm::clements_decompose(u);
    doc.layout = dm::MeshLayout::rectangular(static_cast<int>(u.rows()));
    write_document(out_path, doc);
    return ok;
}

int run_plan(const std::string& mesh_path, const std::string& out_path) {
    auto doc = read_document(mesh_path);
    const dm::Mesh mesh(doc.layout);
    doc.plan = dm::plan_defects(mesh, doc.defects);
    const auto eff = dm::effective_layout(mesh, *doc.plan);
    // Fixed crossings take their routing values right away; tunable ones are
    // left as they were until a target is compiled.
    for (std::size_t i = 0; i < mesh.size(); ++i) {
        const auto x = mesh.crossings()[i];
        if (doc.plan->fixed_cross.count(x)) {
            doc.settings.crossings[i] = {std::numbers::pi / 2, 0.0};
        } else if (doc.plan->fixed_bar.count(x) || doc.plan->dont_care.count(x)) {
            doc.settings.crossings[i] = {0.0, 0.0};
        }
    }
    write_document(out_path, doc);
    std::cout << "effective layout: " << dm::to_string(eff.layout.kind) << " modes=" << eff.layout.modes
              << " depth=" << eff.layout.depth << " parity=" << eff.layout.parity << "\n";
    return ok;
}

int run_compile(const std::string& mesh_path, const std::string& target_path,
                const std::string& out_path) {
    auto doc = read_document(mesh_path);
    const dm::Mesh mesh(doc.layout);
    if (!doc.plan) {
        doc.plan = dm::plan_defects(mesh, doc.defects);
    }
    const auto eff = dm::effective_layout(mesh, *doc.plan);
    const dm::Mesh effective(eff.layout);

    // The target is either a matrix or a mesh document holding settings for
    // the effective layout.
    const auto text = read_file(target_path);
    dm::MeshSettings target_settings;
    dm::TransferMatrix target_matrix;
    bool is_document = false;
    if (!looks_like_csv(target_path)) {
        try {
            const auto j = dm::json::parse(text);
            is_document = j.is_object() && j.contains("layout");
        } catch (const dm::json::exception&) {
            throw dm::parse_error("target file is not valid JSON");
        }
    }
    if (is_document) {
        const auto target_doc = dm::parse_mesh(text);
        if (!(target_doc.layout == eff.layout)) {
            throw dm::dimension_mismatch("target layout does not match the effective layout");
        }
        target_settings = target_doc.settings;
        target_matrix = dm::reconstruct(effective, target_settings);
    } else {
        target_matrix = read_matrix(target_path);
        if (target_matrix.rows() != eff.layout.modes || target_matrix.cols() != eff.layout.modes) {
            throw dm::dimension_mismatch("target is " + std::to_string(target_matrix.rows()) + "x" +
                                         std::to_string(target_matrix.cols()) +
                                         " but the effective interferometer has " +
                                         std::to_string(eff.layout.modes) + " modes");
        }
        target_settings = dm::clements_decompose(target_matrix, eff.layout);
    }
    doc.settings = dm::embed_target(mesh, *doc.plan, target_settings);
    doc.target = target_matrix;
    write_document(out_path, doc);
    return ok;
}

int run_verify(const std::string& mesh_path, const std::string& report_path) {
    const auto doc = read_document(mesh_path);
    const dm::Mesh mesh(doc.layout);
    if (!doc.target) {
        throw dm::invalid_input("document has no target to verify against");
    }
    const auto plan = doc.plan ? *doc.plan : dm::plan_defects(mesh, doc.defects);
    const auto report = dm::verify_plan(mesh, doc.settings, plan, doc.defects, *doc.target);
    const auto text = dm::report_to_json(report).dump(2) + "\n";
    if (!report_path.empty()) {
        write_file(report_path, text);
    }
    std::cout << text;
    return report.passed() ? ok : verification_failed;
}

int run_yield(const std::string& grid_spec, const std::string& overheads_spec,
              const std::string& out_path, const std::string& model_name, long long trials,
              std::uint64_t seed) {
    const auto grid = parse_grid(grid_spec);
    const auto overheads = parse_grid(overheads_spec);
    if (grid.empty() || overheads.empty()) {
        throw dm::invalid_input("epsilon grid and overhead list must be non-empty");
    }
    for (double eps : grid) {
        if (!(eps > 0.0 && eps < 1.0)) {
            throw dm::invalid_input("epsilon values must lie in (0, 1)");
        }
    }
    for (double r : overheads) {
        if (!(r >= 0.0)) {
            throw dm::invalid_input("overhead ratios must be >= 0");
        }
    }
    if (model_name != "approximate" && model_name != "exact") {
        throw dm::invalid_input("count model must be 'approximate' or 'exact'");
    }
    const auto model = model_name == "exact" ? dm::CountModel::exact : dm::CountModel::approximate;

    for (double r : overheads) {
        const auto curve = dm::tolerance_curve(r, grid, model);
        std::ostringstream csv;
        dm::write_curve_csv(csv, curve);
        write_file(overhead_path(out_path, r, overheads.size() > 1), csv.str());

        if (trials > 0) {
            // Cross-check each point of the curve by sampling.
            for (const auto& point : curve) {
                if (point.max_n < 1) {
                    continue;
                }
                const long long m = static_cast<long long>(std::floor(r * static_cast<double>(point.max_n) + 1e-9));
                const auto components =
                    static_cast<long long>(dm::component_total(point.max_n + m, model));
                const double exact = dm::p_at_most(components, std::min(m, components), point.epsilon);
                const auto mc = dm::monte_carlo_yield(components, m, point.epsilon, trials, seed);
                std::cout << "r=" << dm::decimal(r) << " epsilon=" << dm::decimal(point.epsilon)
                          << " n=" << point.max_n << " analytic=" << exact
                          << " monte_carlo=" << mc.estimate << " +- " << mc.standard_error << "\n";
            }
        }
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Defect-aware compiler and verifier for interferometer meshes"};
    app.require_subcommand(1);

    std::string matrix_path, out_path, mesh_path, target_path, report_path;
    std::string grid_spec, overheads_spec, model_name = "approximate";
    long long trials = 0;
    std::uint64_t seed = 1;

    auto* decompose = app.add_subcommand("decompose", "Unitary matrix -> rectangular mesh settings");
    decompose->add_option("--matrix", matrix_path, "Matrix file (.csv or JSON)")->required();
    decompose->add_option("--out", out_path, "Mesh document to write")->required();

    auto* plan = app.add_subcommand("plan", "Route around the defects listed in a mesh document");
    plan->add_option("--mesh", mesh_path, "Mesh document with defects")->required();
    plan->add_option("--out", out_path, "Mesh document to write")->required();

    auto* compile = app.add_subcommand("compile", "Embed a target onto a defective mesh");
    compile->add_option("--mesh", mesh_path, "Mesh document with defects (and optionally a plan)")
        ->required();
    compile->add_option("--target", target_path, "Target matrix or effective-layout settings")
        ->required();
    compile->add_option("--out", out_path, "Mesh document to write")->required();

    auto* verify = app.add_subcommand("verify", "Check a compiled mesh document");
    verify->add_option("--mesh", mesh_path, "Compiled mesh document")->required();
    verify->add_option("--report", report_path, "Also write the report to this file");

    auto* yield = app.add_subcommand("yield", "Defect-tolerance curves");
    yield->add_option("--epsilon-grid", grid_spec, "e.g. 1e-4,1e-3 or log:1e-5:1e-1:41")->required();
    yield->add_option("--overhead", overheads_spec, "Comma-separated overhead ratios m/n")->required();
    yield->add_option("--out", out_path, "CSV path (suffixed per ratio when several)")->required();
    yield->add_option("--count-model", model_name, "approximate (n^2) or exact (n^2 - 1)");
    yield->add_option("--trials", trials, "Monte Carlo trials per curve point (0 = off)");
    yield->add_option("--seed", seed, "Monte Carlo seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_input;
    }

    try {
        if (*decompose) {
            return run_decompose(matrix_path, out_path);
        }
        if (*plan) {
            return run_plan(mesh_path, out_path);
        }
        if (*compile) {
            return run_compile(mesh_path, target_path, out_path);
        }
        if (*verify) {
            return run_verify(mesh_path, report_path);
        }
        return run_yield(grid_spec, overheads_spec, out_path, model_name, trials, seed);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return io_failure;
    } catch (const dm::unsalvageable& e) {
        std::cerr << "error: " << e.what() << "\n";
        return salvage_failed;
    } catch (const dm::unbounded_tolerance& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bad_input;
    } catch (const dm::invalid_input& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bad_input;
    } catch (const dm::invariant_violation& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return verification_failed;
    }
}
