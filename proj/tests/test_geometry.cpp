#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "odisphere/geometry.hpp"
#include "odisphere/raster.hpp"

using namespace odisphere;

namespace {

void check_vec(Vec3 a, Vec3 b, double tol = 1e-12)
{
    CHECK(std::abs(a.x - b.x) <= tol);
    CHECK(std::abs(a.y - b.y) <= tol);
    CHECK(std::abs(a.z - b.z) <= tol);
}

}  // namespace

TEST_CASE("tangent basis at reference directions")
{
    const TangentBasis b0 = tangent_basis({0.0, 0.0});
    check_vec(b0.x_axis, {0, -1, 0});
    check_vec(b0.y_axis, {0, 0, 1});
    // hand cross product of (0,-1,0) x (0,0,1)
    check_vec(b0.view_axis, {-1, 0, 0});
    check_vec(to_unit_vector({0.0, 0.0}), {-1, 0, 0});

    const TangentBasis b1 = tangent_basis({kPi / 2, 0.0});
    check_vec(b1.x_axis, {-1, 0, 0});
    check_vec(b1.y_axis, {0, 0, 1});
}

TEST_CASE("tangent basis is orthonormal and right-handed")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> az(-kPi, kPi), el(-kPi / 2, kPi / 2);
    for (int i = 0; i < 200; ++i) {
        const TangentBasis b = tangent_basis({az(rng), el(rng)});
        CHECK(std::abs(norm(b.x_axis) - 1) < 1e-12);
        CHECK(std::abs(norm(b.y_axis) - 1) < 1e-12);
        CHECK(std::abs(dot(b.x_axis, b.y_axis)) < 1e-12);
        const Vec3 z = cross(b.x_axis, b.y_axis);
        check_vec(z, b.view_axis);
    }
}

TEST_CASE("focal length")
{
    CHECK(focal_length(deg_to_rad(90.0), 500) == doctest::Approx(250.0).epsilon(1e-14));
    CHECK(focal_length(deg_to_rad(120.0), 500) == doctest::Approx(250.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(focal_length(deg_to_rad(120.0), 500) == doctest::Approx(144.3376).epsilon(1e-6));
    CHECK_THROWS_AS(focal_length(0.0, 500), std::invalid_argument);
    CHECK_THROWS_AS(focal_length(-0.1, 500), std::invalid_argument);
    CHECK_THROWS_AS(focal_length(kPi, 500), std::invalid_argument);
    CHECK(focal_length(1e-6, 500) > 1e8);
}

TEST_CASE("patch to sphere")
{
    const ViewFrustum f = ViewFrustum::square(Direction::make(0.7, -0.3), deg_to_rad(100.0), 64);
    const Direction c = patch_to_sphere(f, {f.center_x(), f.center_y()});
    CHECK(angular_distance(c, f.direction()) < 1e-12);

    // corner of a 90 deg frustum, built directly from the basis vectors
    const ViewFrustum g = ViewFrustum::square({0.0, 0.0}, deg_to_rad(90.0), 500);
    const double t = 249.5 / 250.0;
    const TangentBasis b = tangent_basis({0.0, 0.0});
    const Vec3 expect = normalized(b.view_axis - t * b.x_axis - t * b.y_axis);
    const Direction corner = patch_to_sphere(g, {0.0, 0.0});
    CHECK(angular_distance(corner, from_vector(expect)) < 1e-12);
    CHECK(angular_distance(corner, g.direction()) == doctest::Approx(std::atan(std::sqrt(2.0) * t)).epsilon(1e-12));
    // the corner sits up and to the left: higher elevation, and the mirrored
    // column axis puts it at larger azimuth
    CHECK(corner.elevation > 0.0);
    CHECK(corner.azimuth > 0.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const ViewFrustum h(Direction::make((u(rng) - 0.5) * 2 * kPi, (u(rng) - 0.5) * kPi), deg_to_rad(60 + 60 * u(rng)),
                            deg_to_rad(60 + 60 * u(rng)), 40, 30);
        const PatchCoord p{u(rng) * 39.0, u(rng) * 29.0};
        const auto back = sphere_to_patch(h, patch_to_sphere(h, p));
        REQUIRE(back.has_value());
        CHECK(std::abs(back->x - p.x) < 1e-9);
        CHECK(std::abs(back->y - p.y) < 1e-9);
    }
}

TEST_CASE("sphere to patch")
{
    const ViewFrustum f = ViewFrustum::square(Direction::make(-2.0, 0.4), deg_to_rad(100.0), 500);
    const auto c = sphere_to_patch(f, f.direction());
    REQUIRE(c);
    CHECK(std::abs(c->x - 249.5) < 1e-9);
    CHECK(std::abs(c->y - 249.5) < 1e-9);

    const Vec3 anti = -1.0 * to_unit_vector(f.direction());
    CHECK_FALSE(sphere_to_patch(f, from_vector(anti)).has_value());

    // ray through the outermost pixel center on the middle row
    const TangentBasis& b = f.basis();
    const Vec3 edge = b.view_axis + (249.5 / f.focal_x()) * b.x_axis;
    const auto e = f.project(edge);
    REQUIRE(e);
    CHECK(std::abs(e->x - 499.0) < 1e-6);
    CHECK(std::abs(e->y - 249.5) < 1e-6);

    // the geometric edge at aov/2 lands on the footprint border; beyond it is absent
    const double half = deg_to_rad(50.0);
    const auto border = f.project(b.view_axis + std::tan(half) * b.x_axis);
    REQUIRE(border);
    CHECK(std::abs(border->x - 499.5) < 1e-6);
    CHECK_FALSE(f.project(b.view_axis + std::tan(half + 1e-4) * b.x_axis).has_value());
}

TEST_CASE("frustum validation")
{
    CHECK_THROWS(ViewFrustum({0, 0}, deg_to_rad(90), deg_to_rad(90), 1, 10));
    CHECK_THROWS(ViewFrustum({0, 0}, 0.0, deg_to_rad(90), 10, 10));
}

TEST_CASE("erp mapping")
{
    const ErpSize size{800, 1600};
    const double span = kPi / 800;
    const Direction c = erp_to_sphere(size, {400, 800});
    CHECK(std::abs(c.azimuth) <= span);
    CHECK(std::abs(c.elevation) <= span);
    for (double col : {0.0, 100.0, 1599.0}) {
        const Direction top = erp_to_sphere(size, {0, col});
        CHECK(top.elevation == doctest::Approx(kPi / 2 - span / 2).epsilon(1e-14));
    }
    for (std::size_t r = 1; r < 799; r += 37) {
        for (std::size_t col = 0; col < 1600; col += 53) {
            const Direction d = erp_to_sphere(size, {double(r), double(col)});
            const ErpCoord back = sphere_to_erp(size, d);
            const Direction d2 = erp_to_sphere(size, back);
            CHECK(std::abs(d2.azimuth - d.azimuth) < 1e-12);
            CHECK(std::abs(d2.elevation - d.elevation) < 1e-12);
            CHECK(std::abs(back.row - double(r)) < 1e-9);
            CHECK(std::abs(back.col - double(col)) < 1e-9);
        }
    }
}

TEST_CASE("wrap azimuth")
{
    CHECK(wrap_azimuth(kPi) == doctest::Approx(-kPi));
    CHECK(wrap_azimuth(-kPi) == doctest::Approx(-kPi));
    CHECK(wrap_azimuth(3 * kPi + 0.25) == doctest::Approx(-kPi + 0.25));
    CHECK(wrap_azimuth(0.5) == 0.5);
}

TEST_CASE("solid angle weights")
{
    const Raster w = solid_angle_weights({90, 180});
    CHECK(std::abs(sum(w.values()) - 1.0) < 1e-12);
    const double phi_eq = kPi / 2 - 44.5 * kPi / 90;  // row 44 center
    const double phi_pole = kPi / 2 - 0.5 * kPi / 90;
    CHECK(w(44, 0) > w(0, 0));
    CHECK(w(44, 3) / w(0, 7) == doctest::Approx(std::cos(phi_eq) / std::cos(phi_pole)).epsilon(1e-12));

    // two rows sit at +-45 deg: every pixel weighs the same
    const Raster w2 = solid_angle_weights({2, 10});
    for (double v : w2.values()) CHECK(v == doctest::Approx(1.0 / 20.0).epsilon(1e-14));
}
