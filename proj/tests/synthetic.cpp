#include "synthetic.hpp"

#include <cmath>
#include <random>

namespace synthetic {

using namespace odisphere;

Raster render(ErpSize size, const std::vector<Target>& targets, double noise, std::uint64_t seed)
{
    Raster img(size.rows, size.cols, 3, 0.3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) {
            const Direction d = erp_to_sphere(size, {double(r), double(c)});
            for (const Target& t : targets) {
                const double a = angular_distance(d, t.center);
                if (a > 5 * t.sigma) continue;
                const double v = t.contrast * std::exp(-a * a / (2 * t.sigma * t.sigma));
                for (std::size_t ch = 0; ch < 3; ++ch) img(r, c, ch) += v * t.color[ch];
            }
            if (noise > 0)
                for (std::size_t ch = 0; ch < 3; ++ch) img(r, c, ch) += noise * n(rng);
        }
    return img;
}

Raster bump_map(ErpSize size, const std::vector<Target>& targets, double spread, double floor)
{
    Raster m(size.rows, size.cols, 1, floor);
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) {
            const Direction d = erp_to_sphere(size, {double(r), double(c)});
            for (const Target& t : targets) {
                const double s = spread * t.sigma;
                const double a = angular_distance(d, t.center);
                if (a < 6 * s) m(r, c) += std::exp(-a * a / (2 * s * s));
            }
        }
    return m;
}

Raster apply_elevation_prior(const Raster& map, double sigma)
{
    Raster out = map;
    for (std::size_t r = 0; r < map.rows(); ++r) {
        const double el = erp_to_sphere(map.shape2d(), {double(r), 0.0}).elevation;
        const double g = std::exp(-el * el / (2 * sigma * sigma));
        for (std::size_t ch = 0; ch < map.channels(); ++ch)
            for (std::size_t c = 0; c < map.cols(); ++c) out(r, c, ch) *= g;
    }
    return out;
}

std::vector<Target> random_targets(std::size_t count, double sigma_lo, double sigma_hi, double max_abs_elevation,
                                   std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double zmax = std::sin(max_abs_elevation);
    std::vector<Target> out;
    for (std::size_t i = 0; i < count; ++i) {
        Target t;
        t.center = Direction::make((2 * u(rng) - 1) * kPi, std::asin((2 * u(rng) - 1) * zmax));
        t.sigma = sigma_lo + (sigma_hi - sigma_lo) * u(rng);
        t.contrast = 0.4 + 0.4 * u(rng);
        for (double& c : t.color) c = 0.3 + 0.7 * u(rng);
        out.push_back(t);
    }
    return out;
}

}  // namespace synthetic
