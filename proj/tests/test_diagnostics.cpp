#include "test_meshes.hpp"

#include "geomflow/diagnostics.hpp"
#include "geomflow/experiments.hpp"

#include <doctest.h>

#include <cmath>

using namespace geomflow;
using doctest::Approx;

TEST_CASE("energy per geometry")
{
    const Mesh circle = fixtures::ngon(16);
    CHECK(energy(circle, 0.7) == Approx(circle.total_measure()));

    const Mesh hc = fixtures::half_circle(16);
    CHECK(energy(hc, 0.5) == Approx(hc.total_measure() - 0.5 * 2.0));

    ShapeSpec g;
    g.kind = ShapeKind::grim_reaper;
    g.nodes = 10;
    const Mesh gr = generate(g);
    const double y = -std::log(std::cos(std::numbers::pi / 4)) + 2.0;
    CHECK(energy(gr, 0.3) == Approx(gr.total_measure() - 0.3 * 2.0 * y));

    const Mesh box = fixtures::box(Vec3(1, 6, 1), 0.5, true);
    CHECK(energy(box, 0.5) == Approx(20.0 - 0.5 * 6.0));
}

TEST_CASE("measure records")
{
    const Mesh m = fixtures::half_sphere(2);
    SchemeConfig c;
    c.geometry = Geometry::open3d;
    c.sigma = 0.2;
    const DiagnosticsRecord first = measure(m, c, nullptr, 0, 0.0);
    CHECK(first.step == 0);
    CHECK(std::isnan(first.c));
    CHECK(std::isnan(first.lambda_min));
    CHECK(first.T_norm == Approx(tangential_data(m, 0.2).T_norm));
    REQUIRE(first.substrate_area.has_value());
    CHECK(first.energy == Approx(m.total_measure() - 0.2 * *first.substrate_area));

    const StepSolution s = advance(m, c, 1e-3);
    const Mesh next = advanced_mesh(m, s);
    const DiagnosticsRecord rec = measure(next, c, &s, 1, 1e-3);
    CHECK(rec.c == s.c);
    CHECK(rec.lambda_max == s.lambda.maxCoeff());
    CHECK(rec.area == Approx(next.total_measure()));

    const DiagnosticsRecord closed = measure(fixtures::ngon(8), SchemeConfig{}, nullptr, 0, 0.0);
    CHECK_FALSE(closed.substrate_area.has_value());
}

TEST_CASE("fitted orders")
{
    SUBCASE("exact power law")
    {
        std::vector<ConvergenceRow> rows;
        for (double h : {0.4, 0.2, 0.1, 0.05}) rows.push_back({h, 3.0 * h * h});
        const ConvergenceTable t = fit_order(rows);
        CHECK(t.fitted_order == Approx(2.0).epsilon(1e-12));
        REQUIRE(t.pairwise_eoc.size() == 3);
        for (double e : t.pairwise_eoc) CHECK(e == Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("least squares over noisy rows")
    {
        const ConvergenceTable t = fit_order({{1.0, 1.0}, {0.5, 0.3}, {0.25, 0.1}});
        const double x[3] = {0.0, std::log(0.5), std::log(0.25)};
        const double y[3] = {0.0, std::log(0.3), std::log(0.1)};
        const double mx = (x[0] + x[1] + x[2]) / 3, my = (y[0] + y[1] + y[2]) / 3;
        double sxy = 0, sxx = 0;
        for (int i = 0; i < 3; ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
        }
        CHECK(t.fitted_order == Approx(sxy / sxx).epsilon(1e-12));
    }
    SUBCASE("rejections")
    {
        CHECK_THROWS_AS(fit_order({{1.0, 1.0}, {0.5, 0.2}}), InsufficientRows);
        CHECK_THROWS_AS(fit_order({{1.0, 1.0}, {0.5, 0.0}, {0.25, 0.1}}), std::invalid_argument);
        CHECK_THROWS_AS(fit_order({{1.0, 1.0}, {1.0, 0.5}, {0.25, 0.1}}), std::invalid_argument);
    }
}

TEST_CASE("worst energy increase")
{
    std::vector<DiagnosticsRecord> r(3);
    r[0].energy = 10.0;
    r[1].energy = 9.0;
    r[2].energy = 9.0 + 9e-12;
    CHECK(worst_energy_increase(r) == Approx(1e-12).epsilon(1e-3));
    r[2].energy = 8.0;
    CHECK(worst_energy_increase(r) < 0.0);
}
