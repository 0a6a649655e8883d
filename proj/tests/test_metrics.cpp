#include <doctest.h>

#include <cmath>
#include <random>

#include "odisphere/error.hpp"
#include "odisphere/metrics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace odisphere;

namespace {

// Fixation at the center of ERP pixel (r, c).
Fixation at_pixel(ErpSize size, std::size_t r, std::size_t c, double weight = 1.0)
{
    const Direction d = erp_to_sphere(size, {double(r), double(c)});
    return {d.azimuth, d.elevation, weight};
}

FixationSet random_fixations(ErpSize size, std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> az(-kPi, kPi), z(-1.0, 1.0), w(0.5, 2.0);
    FixationSet f;
    for (std::size_t i = 0; i < n; ++i) f.points.push_back({az(rng), std::asin(z(rng)), w(rng)});
    (void)size;
    return f;
}

}  // namespace

TEST_CASE("nss by hand")
{
    Raster m(2, 2);
    m(0, 0) = 2.0;
    FixationSet f;
    f.points.push_back(at_pixel({2, 2}, 0, 0));
    CHECK(nss(m, f) == doctest::Approx(1.5 / std::sqrt(0.75)).epsilon(1e-12));
    CHECK(nss(m, f) == doctest::Approx(1.7320508).epsilon(1e-7));

    // a map that is already a weighted z-score field returns its value
    Raster z = testutil::random_raster(10, 20, 1, 3);
    const Raster w = solid_angle_weights({10, 20});
    double mu = 0, var = 0;
    for (std::size_t i = 0; i < z.size(); ++i) mu += w.values()[i] * z.values()[i];
    for (std::size_t i = 0; i < z.size(); ++i) var += w.values()[i] * (z.values()[i] - mu) * (z.values()[i] - mu);
    for (double& v : z.values()) v = (v - mu) / std::sqrt(var);
    FixationSet g;
    g.points.push_back(at_pixel({10, 20}, 4, 7));
    CHECK(nss(z, g) == doctest::Approx(z(4, 7)).epsilon(1e-12));

    CHECK_THROWS_AS(nss(Raster(4, 4, 1, 1.0), f), DegenerateInputError);
    CHECK_THROWS_AS(nss(m, FixationSet{}), DegenerateInputError);
}

TEST_CASE("nss of sphere-uniform fixations tends to zero")
{
    const ErpSize size{32, 64};
    Raster m(size.rows, size.cols);
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) {
            const Direction d = erp_to_sphere(size, {double(r), double(c)});
            m(r, c) = 1.0 + std::cos(d.elevation) * std::sin(d.azimuth) + 0.5 * std::sin(d.elevation);
        }
    CHECK(std::abs(nss(m, random_fixations(size, 100000, 1))) < 0.05);
}

TEST_CASE("auc cases")
{
    const ErpSize size{16, 32};
    FixationSet f;
    for (std::size_t k = 0; k < 8; ++k) f.points.push_back(at_pixel(size, 2 + k, 3 * k + 1));

    CHECK(auc_judd(Raster(16, 32, 1, 0.7), f) == doctest::Approx(0.5).epsilon(1e-12));

    Raster peak = testutil::random_raster(16, 32, 1, 5, 0.0, 0.5);
    for (std::size_t k = 0; k < 8; ++k) peak(2 + k, 3 * k + 1) = 1.0 + 0.01 * double(k);
    CHECK(auc_judd(peak, f) >= 0.99);

    // Judd AUC cannot drop below 1/(2n) for n fixations, so use 100 of them
    FixationSet many;
    Raster anti = testutil::random_raster(16, 32, 1, 6, 0.5, 1.0);
    for (std::size_t k = 0; k < 100; ++k) {
        const std::size_t r = (5 * k) / 32, c = (5 * k) % 32;
        many.points.push_back(at_pixel(size, r, c));
        anti(r, c) = -1.0 - 0.001 * double(k);
    }
    CHECK(auc_judd(anti, many) <= 0.01);
    CHECK(auc_judd(anti, many) == doctest::Approx(oracle::auc_judd(anti, many)).epsilon(1e-12));
}

TEST_CASE("cc cases")
{
    const Raster s = testutil::random_raster(12, 24, 1, 1);
    CHECK(std::abs(cc(s, s) - 1.0) < 1e-12);
    Raster t = s;
    for (double& v : t.values()) v = -3.0 * v + 2.0;
    CHECK(cc(s, t) == doctest::Approx(-1.0).epsilon(1e-12));
    for (double& v : t.values()) v = 0.25 * v + 9.0;
    CHECK(cc(s, t) == doctest::Approx(-1.0).epsilon(1e-12));
    const Raster u = testutil::random_raster(12, 24, 1, 2);
    CHECK(cc(s, u) == doctest::Approx(oracle::cc(s, u)).epsilon(1e-9));
}

TEST_CASE("kld cases")
{
    const Raster p = testutil::random_raster(16, 32, 1, 3);
    CHECK(std::abs(kld_metric(p, p)) <= 1e-10);
    const Raster g = testutil::random_raster(16, 32, 1, 4);
    CHECK(std::abs(kld_metric(p, g) - oracle::kld(p, g)) <= 1e-12);
    CHECK(std::abs(kld_metric(p, g, KldDirection::pred_to_gt) - oracle::kld(g, p)) <= 1e-12);

    // relabeling pixels within a row keeps every weight in place
    Raster pp = p, gg = g;
    std::mt19937_64 rng(8);
    for (std::size_t r = 0; r < 16; ++r) {
        std::vector<std::size_t> perm(32);
        for (std::size_t c = 0; c < 32; ++c) perm[c] = c;
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t c = 0; c < 32; ++c) {
            pp(r, c) = p(r, perm[c]);
            gg(r, c) = g(r, perm[c]);
        }
    }
    CHECK(kld_metric(pp, gg) == doctest::Approx(kld_metric(p, g)).epsilon(1e-12));
    CHECK(kld_metric(roll_columns(p, 5), roll_columns(g, 5)) == doctest::Approx(kld_metric(p, g)).epsilon(1e-12));
}

TEST_CASE("metrics agree with brute-force oracles")
{
    const ErpSize size{32, 64};
    for (std::uint64_t s = 0; s < 20; ++s) {
        Raster m = testutil::random_raster(size.rows, size.cols, 1, 1000 + s);
        // quantize some instances to create ties
        if (s % 2) for (double& v : m.values()) v = std::round(v * 8) / 8;
        const Raster g = testutil::random_raster(size.rows, size.cols, 1, 2000 + s);
        const FixationSet f = random_fixations(size, 5 + 7 * s, 3000 + s);
        CHECK(std::abs(nss(m, f) - oracle::nss(m, f)) <= 1e-9);
        CHECK(std::abs(auc_judd(m, f) - oracle::auc_judd(m, f)) <= 1e-6);
        CHECK(std::abs(cc(m, g) - oracle::cc(m, g)) <= 1e-9);
        CHECK(std::abs(kld_metric(m, g) - oracle::kld(m, g)) <= 1e-9);
    }
}

TEST_CASE("nss by elevation")
{
    const ErpSize size{36, 72};
    Raster m(size.rows, size.cols);
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) {
            const double el = erp_to_sphere(size, {double(r), double(c)}).elevation;
            m(r, c) = std::exp(-el * el / (2 * 0.3 * 0.3)) + 0.01 * double(c % 3);
        }
    FixationSet one_band;
    for (int k = 0; k < 10; ++k) one_band.points.push_back({deg_to_rad(-170.0 + 30 * k), deg_to_rad(3.0), 1.0});
    const auto b1 = nss_by_elevation(m, one_band, deg_to_rad(15.0));
    REQUIRE(b1.size() == 1);
    CHECK(b1[0].nss == doctest::Approx(nss(m, one_band)).epsilon(1e-12));
    CHECK(rad_to_deg(b1[0].center) == doctest::Approx(7.5));

    FixationSet mixed;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> el(0.0, deg_to_rad(10.0));
    std::uniform_real_distribution<double> az(-kPi, kPi);
    for (int k = 0; k < 400; ++k) mixed.points.push_back({az(rng), std::clamp(el(rng), -1.5, 1.5), 1.0});
    for (int k = 0; k < 20; ++k) mixed.points.push_back({az(rng), deg_to_rad(80.0), 1.0});
    const auto bands = nss_by_elevation(m, mixed, deg_to_rad(15.0));
    double equator = 0, pole = 0;
    for (const BandNss& b : bands) {
        if (std::abs(rad_to_deg(b.center) - 7.5) < 1e-9) equator = b.nss;
        if (std::abs(rad_to_deg(b.center) - 82.5) < 1e-9) pole = b.nss;
    }
    CHECK(equator > pole);
    CHECK(bands.size() < 12);
}

TEST_CASE("fixation csv")
{
    const FixationSet f = parse_fixations_csv("# az,el\n\n10, -20\n-180,90,2.5\n");
    REQUIRE(f.points.size() == 2);
    CHECK(f.points[0].azimuth == doctest::Approx(deg_to_rad(10)));
    CHECK(f.points[0].elevation == doctest::Approx(deg_to_rad(-20)));
    CHECK(f.points[0].weight == 1.0);
    CHECK(f.points[1].weight == 2.5);
    CHECK_THROWS_AS(parse_fixations_csv("200,0\n"), IoError);
    CHECK_THROWS_AS(parse_fixations_csv("0,91\n"), IoError);
    CHECK_THROWS_AS(parse_fixations_csv("a,b\n"), IoError);
    CHECK_THROWS_AS(parse_fixations_csv("1,2,3,4\n"), IoError);
    CHECK_THROWS_AS(load_fixations_csv("/nonexistent/fix.csv"), IoError);
}

TEST_CASE("metric report")
{
    const Raster p = testutil::random_raster(8, 16, 1, 1);
    FixationSet f;
    f.points.push_back(at_pixel({8, 16}, 3, 3));
    const MetricReport r = evaluate(p, &p, &f, deg_to_rad(30.0));
    CHECK(r.cc.value() == doctest::Approx(1.0));
    CHECK(std::abs(r.kld.value()) < 1e-10);
    CHECK(r.nss.has_value());
    CHECK(r.nss_bands.size() == 1);
    const std::string j = r.to_json();
    CHECK(j.find("\"kld_direction\"") != std::string::npos);
    const MetricReport only_gt = evaluate(p, &p, nullptr);
    CHECK_FALSE(only_gt.nss.has_value());
}
