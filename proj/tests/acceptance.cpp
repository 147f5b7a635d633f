#include "tangent_check.hpp"
#include "test_meshes.hpp"

#include "geomflow/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace geomflow;
namespace fs = std::filesystem;

namespace {

struct Line {
    int criterion;
    bool pass;
    std::string detail;
};

std::vector<Line> lines;

void report(int criterion, bool pass, const std::string& detail, double seconds)
{
    lines.push_back({criterion, pass, detail});
    std::printf("criterion %d: %s (%.1f s) %s\n", criterion, pass ? "PASS" : "FAIL", seconds, detail.c_str());
    std::fflush(stdout);
}

void timed(int criterion, const std::function<std::pair<bool, std::string>()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        std::tie(pass, detail) = body();
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(criterion, pass, detail, s);
}

std::pair<bool, std::string> combine(const std::vector<CriterionResult>& results)
{
    bool pass = true;
    std::string detail;
    for (const auto& r : results) {
        pass = pass && r.pass;
        detail += (detail.empty() ? "" : " | ") + r.name + (r.pass ? " ok: " : " failed: ") + r.detail;
    }
    return {pass, detail};
}

std::map<std::string, std::string> read_tree(const fs::path& root)
{
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream s;
        s << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = s.str();
    }
    return files;
}

std::pair<bool, std::string> tangent_system()
{
    const std::vector<std::pair<std::string, Mesh>> meshes{
        {"diamond", fixtures::diamond()},
        {"32-gon", fixtures::ngon(32)},
        {"perturbed 32-gon", fixtures::ngon(32, 0.2, 11)},
        {"octahedron", fixtures::octahedron()},
        {"perturbed sphere", fixtures::sphere(2, 0.15, 5)},
    };
    bool pass = true;
    double line = 0.0, dense = 0.0;
    std::uint64_t seed = 1;
    for (const auto& [name, m] : meshes) {
        const tangent_check::Result r = tangent_check::run(m, 20, seed++);
        const double l = std::max(r.line1, r.line2);
        const double d = std::max(r.dense_T, r.dense_mu);
        pass = pass && l <= 1e-11 && d <= 1e-10;
        line = std::max(line, l);
        dense = std::max(dense, d);
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "5 meshes x 20 fields: worst weak-form residual %.3g (tol 1e-11), worst dense mismatch %.3g (tol 1e-10)", line, dense);
    return {pass, buf};
}

std::pair<bool, std::string> determinism(const ExperimentContext& base)
{
    const fs::path root = fs::temp_directory_path() / "geomflow_acceptance";
    fs::remove_all(root);
    bool pass = true;
    std::string detail;
    for (ExperimentId id : {ExperimentId::ex3_1_grim_reaper, ExperimentId::ex2_3_box161}) {
        std::map<std::string, std::string> trees[2];
        for (int k = 0; k < 2; ++k) {
            ExperimentContext ctx = base;
            ctx.output_dir = (root / ("run" + std::to_string(k))).string();
            reproduce(id, ctx);
            trees[k] = read_tree(fs::path(ctx.output_dir) / to_string(id));
        }
        std::size_t csv = 0;
        for (const auto& [name, body] : trees[0])
            if (fs::path(name).extension() == ".csv") ++csv;
        const bool same = csv > 0 && trees[0] == trees[1];
        pass = pass && same;
        detail += (detail.empty() ? "" : "; ") + std::string(to_string(id)) + ": " + std::to_string(csv) + " CSV files " +
                  (same ? "identical" : "differ");
    }
    fs::remove_all(root);
    return {pass, detail};
}

} // namespace

int main()
{
    ExperimentContext ctx;
    ctx.scale = Scale::desk;
    ctx.jobs = default_jobs();

    timed(1, tangent_system);
    timed(2, [&] { return combine({check_closed_energy(ctx), check_box_sd_energy(ctx)}); });
    std::vector<CriterionResult> substrate;
    timed(3, [&] { return combine({check_open_curve_energy(ctx), check_open_box(ctx, &substrate)}); });
    timed(4, [&] { return substrate.empty() ? std::pair<bool, std::string>{false, "no open-box runs"} : combine(substrate); });
    timed(5, [&] { return combine({check_half_circle_convergence(ctx)}); });
    timed(6, [&] { return combine({check_half_sphere_convergence(ctx)}); });
    timed(7, [&] { return combine({check_grim_reaper(ctx)}); });
    timed(8, [&] { return combine({check_formulation_equivalence(ctx)}); });
    timed(9, [&] { return combine({check_c_vanishing(ctx)}); });
    timed(10, [&] { return combine({check_mesh_quality(ctx)}); });
    timed(11, [&] { return determinism(ctx); });

    int failed = 0;
    std::printf("\nsummary\n");
    for (const auto& l : lines) {
        std::printf("%s criterion %d\n", l.pass ? "PASS" : "FAIL", l.criterion);
        failed += l.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
