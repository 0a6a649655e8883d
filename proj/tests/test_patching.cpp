#include <doctest.h>

#include <cmath>
#include <map>

#include "odisphere/error.hpp"
#include "odisphere/patching.hpp"
#include "odisphere/reference.hpp"
#include "test_util.hpp"

using namespace odisphere;

TEST_CASE("direction counts")
{
    CHECK(generate_view_directions(deg_to_rad(45.0)).directions.size() == 26);
    CHECK(generate_view_directions(deg_to_rad(90.0)).directions.size() == 6);
    CHECK(generate_view_directions(deg_to_rad(180.0)).directions.size() == 4);
    CHECK_THROWS_AS(generate_view_directions(deg_to_rad(50.0)), ConfigError);
    CHECK_THROWS_AS(generate_view_directions(0.0), ConfigError);
}

TEST_CASE("45 deg grid layout")
{
    const DirectionGrid g = generate_view_directions(deg_to_rad(45.0));
    std::map<long, int> per_ring;
    for (const Direction& d : g.directions) per_ring[std::lround(rad_to_deg(d.elevation))]++;
    CHECK(per_ring[90] == 1);
    CHECK(per_ring[-90] == 1);
    CHECK(per_ring[45] == 8);
    CHECK(per_ring[0] == 8);
    CHECK(per_ring[-45] == 8);
    CHECK(g.directions.front().elevation == doctest::Approx(kPi / 2));
    CHECK(g.directions.back().elevation == doctest::Approx(-kPi / 2));
}

TEST_CASE("extract constant field")
{
    const Raster erp(40, 80, 3, 0.625);
    const Patch p = extract_patch(erp, ViewFrustum::square(Direction::make(1.0, 0.8), deg_to_rad(110.0), 24));
    CHECK(p.data.channels() == 3);
    for (double v : p.data.values()) CHECK(v == doctest::Approx(0.625).epsilon(1e-15));
}

TEST_CASE("extract azimuth field")
{
    const ErpSize size{100, 200};
    Raster erp(size.rows, size.cols);
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) erp(r, c) = erp_to_sphere(size, {double(r), double(c)}).azimuth;
    const ViewFrustum f = ViewFrustum::square(Direction::make(0.3, 0.2), deg_to_rad(100.0), 48);
    const Patch p = extract_patch(erp, f);
    const double tol = 2.0 * (2 * kPi / double(size.cols));
    for (std::size_t r = 0; r < 48; ++r)
        for (std::size_t c = 0; c < 48; ++c) {
            const Direction d = patch_to_sphere(f, {double(c), double(r)});
            if (std::abs(d.azimuth) > kPi - tol) continue;
            CHECK(std::abs(p.data(r, c) - d.azimuth) <= tol);
        }
}

TEST_CASE("extract across the azimuth seam")
{
    const ErpSize size{100, 200};
    Raster erp(size.rows, size.cols);
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) {
            const Direction d = erp_to_sphere(size, {double(r), double(c)});
            erp(r, c) = std::cos(d.azimuth) * std::cos(d.elevation);
        }
    const ViewFrustum f = ViewFrustum::square(Direction::make(kPi, 0.0), deg_to_rad(90.0), 40);
    const Patch p = extract_patch(erp, f);
    double worst = 0.0;
    for (std::size_t r = 0; r < 40; ++r)
        for (std::size_t c = 0; c < 40; ++c) {
            const Direction d = patch_to_sphere(f, {double(c), double(r)});
            worst = std::max(worst, std::abs(p.data(r, c) - std::cos(d.azimuth) * std::cos(d.elevation)));
        }
    CHECK(worst < 2e-3);
}

TEST_CASE("nearest sampler returns exact ERP values")
{
    const Raster erp = testutil::random_raster(30, 60, 1, 9);
    const ViewFrustum f = ViewFrustum::square(Direction::make(-0.4, 0.1), deg_to_rad(80.0), 16);
    const Patch p = extract_patch(erp, f, Sampler::nearest);
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) {
            const ErpCoord e = sphere_to_erp(erp.shape2d(), patch_to_sphere(f, {double(c), double(r)}));
            const auto er = static_cast<std::size_t>(std::lround(e.row));
            const auto ec = static_cast<std::size_t>(std::lround(e.col)) % 60;
            CHECK(p.data(r, c) == erp(er, ec));
        }
}

TEST_CASE("reprojection of a single patch picks the nearest sample")
{
    const ErpSize size{60, 120};
    const ViewFrustum f = ViewFrustum::square(Direction::make(0.5, -0.2), deg_to_rad(90.0), 32);
    Patch p{f, testutil::random_raster(32, 32, 1, 11)};
    const Reprojection rep = reproject_average(std::span<const Patch>(&p, 1), size);
    std::size_t inside = 0;
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) {
            const auto q = sphere_to_patch(f, erp_to_sphere(size, {double(r), double(c)}));
            if (!q) {
                CHECK(rep.map(r, c) == 0.0);
                continue;
            }
            ++inside;
            const auto pr = std::min<long>(31, std::max<long>(0, std::lround(q->y)));
            const auto pc = std::min<long>(31, std::max<long>(0, std::lround(q->x)));
            CHECK(rep.map(r, c) == p.data(std::size_t(pr), std::size_t(pc)));
        }
    CHECK(inside > 0);
    CHECK(rep.uncovered == size.rows * size.cols - inside);
}

TEST_CASE("overlapping patches average")
{
    const ErpSize size{40, 80};
    const Direction d = Direction::make(0.0, 0.0);
    const ViewFrustum f = ViewFrustum::square(d, deg_to_rad(90.0), 16);
    std::vector<Patch> ps{{f, Raster(16, 16, 1, 0.2)}, {f, Raster(16, 16, 1, 0.4)}};
    const Reprojection rep = reproject_average(ps, size);
    const ErpCoord c = sphere_to_erp(size, d);
    CHECK(rep.map(std::size_t(c.row), std::size_t(c.col)) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("coverage of the 45 deg grid at 100 deg")
{
    const DirectionGrid g = generate_view_directions(deg_to_rad(45.0));
    std::vector<ViewFrustum> frusta;
    for (const Direction& d : g.directions) frusta.push_back(ViewFrustum::square(d, deg_to_rad(100.0), 64));
    const ReprojectionPlan plan(frusta, {200, 400});
    CHECK(plan.uncovered() == 0);

    // 90 deg patches at a 90 deg interval just touch: 60 deg aov leaves gaps
    std::vector<ViewFrustum> narrow;
    for (const Direction& d : generate_view_directions(deg_to_rad(90.0)).directions)
        narrow.push_back(ViewFrustum::square(d, deg_to_rad(60.0), 32));
    CHECK(ReprojectionPlan(narrow, {50, 100}).uncovered() > 0);
}

TEST_CASE("parallel kernels match the serial reference")
{
    const Raster erp = testutil::random_raster(50, 100, 3, 21);
    std::vector<Patch> ps;
    for (const Direction& d : generate_view_directions(deg_to_rad(45.0)).directions) {
        const ViewFrustum f = ViewFrustum::square(d, deg_to_rad(100.0), 24);
        for (Sampler s : {Sampler::nearest, Sampler::bilinear}) {
            const Patch a = extract_patch(erp, f, s);
            const Patch b = reference::extract_patch(erp, f, s);
            CHECK(a.data == b.data);
        }
        ps.push_back(extract_patch(erp, f));
    }
    const Reprojection a = reproject_average(ps, {50, 100});
    const Reprojection b = reference::reproject_average(ps, {50, 100});
    CHECK(a.uncovered == b.uncovered);
    CHECK(testutil::max_abs_diff(a.map, b.map) < 1e-12);
}

TEST_CASE("plan backward is the adjoint of apply")
{
    std::vector<ViewFrustum> frusta;
    for (const Direction& d : generate_view_directions(deg_to_rad(90.0)).directions)
        frusta.push_back(ViewFrustum::square(d, deg_to_rad(100.0), 12));
    const ReprojectionPlan plan(frusta, {30, 60});
    std::vector<Raster> x;
    for (std::size_t i = 0; i < frusta.size(); ++i) x.push_back(testutil::random_raster(12, 12, 1, 100 + i));
    const Raster g = testutil::random_raster(30, 60, 1, 7, -1.0, 1.0);
    const Raster y = plan.apply(x);
    std::vector<Raster> gx(frusta.size());
    plan.backward(g, gx);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += y.values()[i] * g.values()[i];
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t k = 0; k < x[i].size(); ++k) rhs += x[i].values()[k] * gx[i].values()[k];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
