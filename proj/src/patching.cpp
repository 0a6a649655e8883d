#include "odisphere/patching.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "odisphere/error.hpp"

namespace odisphere {

DirectionGrid generate_view_directions(double interval)
{
    if (!(interval > 0.0) || interval > 2.0 * kPi + 1e-9)
        throw ConfigError("direction interval must lie in (0, 360] degrees");
    const double ratio = 2.0 * kPi / interval;
    const double azimuth_count = std::round(ratio);
    if (std::abs(ratio - azimuth_count) > 1e-9 * ratio)
        throw ConfigError("direction interval " + std::to_string(rad_to_deg(interval)) +
                          " deg does not divide 360 deg");

    DirectionGrid grid;
    grid.interval = interval;
    grid.directions.push_back(Direction::make(0.0, kPi / 2));

    const auto n_az = static_cast<std::size_t>(azimuth_count);
    // Highest ring index k with k * interval strictly below the pole.
    auto k_max = static_cast<long>(std::floor((kPi / 2) / interval));
    if (static_cast<double>(k_max) * interval >= kPi / 2 - 1e-12) --k_max;
    for (long k = k_max; k >= -k_max; --k) {
        const double elevation = static_cast<double>(k) * interval;
        for (std::size_t j = 0; j < n_az; ++j)
            grid.directions.push_back(Direction::make(static_cast<double>(j) * interval, elevation));
    }
    grid.directions.push_back(Direction::make(0.0, -kPi / 2));
    return grid;
}

Patch extract_patch(const Raster& erp, const ViewFrustum& f, Sampler sampler)
{
    if (erp.rows() < 2 || erp.cols() < 2 || erp.channels() == 0)
        throw std::invalid_argument("extract_patch: ERP grid must be at least 2x2 with a channel");
    const std::size_t width = f.width();
    const std::size_t height = f.height();
    const std::size_t channels = erp.channels();
    const ErpSize size = erp.shape2d();
    Patch patch{f, Raster(height, width, channels)};
    Raster& out = patch.data;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(height); ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const Direction d = from_vector(f.ray({static_cast<double>(x), static_cast<double>(y)}));
            const ErpCoord src = sphere_to_erp(size, d);
            for (std::size_t ch = 0; ch < channels; ++ch) {
                out(static_cast<std::size_t>(y), x, ch) = sampler == Sampler::bilinear
                                                              ? sample_erp_bilinear(erp, ch, src)
                                                              : sample_erp_nearest(erp, ch, src);
            }
        }
    }
    return patch;
}

namespace {

std::uint32_t nearest_pixel(const ViewFrustum& f, PatchCoord p)
{
    const auto x = static_cast<std::size_t>(
        std::clamp(std::floor(p.x + 0.5), 0.0, static_cast<double>(f.width() - 1)));
    const auto y = static_cast<std::size_t>(
        std::clamp(std::floor(p.y + 0.5), 0.0, static_cast<double>(f.height() - 1)));
    return static_cast<std::uint32_t>(y * f.width() + x);
}

}  // namespace

ReprojectionPlan::ReprojectionPlan(std::span<const ViewFrustum> frusta, ErpSize erp)
    : frusta_(frusta.begin(), frusta.end()), erp_(erp)
{
    if (erp.rows < 2 || erp.cols < 2) throw std::invalid_argument("ReprojectionPlan: ERP grid must be at least 2x2");
    std::vector<std::vector<Sample>> per_row(erp.rows);

#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(erp.rows); ++r) {
        auto& row = per_row[static_cast<std::size_t>(r)];
        for (std::size_t c = 0; c < erp.cols; ++c) {
            const Vec3 v = to_unit_vector(erp_to_sphere(erp, {static_cast<double>(r), static_cast<double>(c)}));
            for (std::size_t i = 0; i < frusta_.size(); ++i) {
                if (auto p = frusta_[i].project(v))
                    row.push_back({static_cast<std::uint32_t>(i), nearest_pixel(frusta_[i], *p)});
            }
            // Sentinel marking the end of this pixel's samples.
            row.push_back({UINT32_MAX, 0});
        }
    }

    offsets_.reserve(erp.rows * erp.cols + 1);
    offsets_.push_back(0);
    for (const auto& row : per_row) {
        for (const Sample& s : row) {
            if (s.patch == UINT32_MAX) {
                if (samples_.size() == offsets_.back()) ++uncovered_;
                offsets_.push_back(samples_.size());
            } else {
                samples_.push_back(s);
            }
        }
    }
}

Raster ReprojectionPlan::apply(std::span<const Raster> maps) const
{
    if (maps.size() != frusta_.size()) throw DimensionError("reprojection: map count does not match frustum count");
    const std::size_t channels = maps.empty() ? 1 : maps.front().channels();
    for (std::size_t i = 0; i < maps.size(); ++i) {
        if (maps[i].rows() != frusta_[i].height() || maps[i].cols() != frusta_[i].width() ||
            maps[i].channels() != channels)
            throw DimensionError("reprojection: patch " + std::to_string(i) + " does not match its frustum");
    }
    Raster out(erp_.rows, erp_.cols, channels);
    const std::size_t n = erp_.rows * erp_.cols;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(n); ++p) {
        const auto px = static_cast<std::size_t>(p);
        const auto s = samples(px);
        if (s.empty()) continue;
        const double inv = 1.0 / static_cast<double>(s.size());
        for (std::size_t ch = 0; ch < channels; ++ch) {
            double acc = 0.0;
            for (const Sample& smp : s) acc += maps[smp.patch].plane(ch)[smp.pixel];
            out.plane(ch)[px] = acc * inv;
        }
    }
    return out;
}

void ReprojectionPlan::backward(const Raster& grad_erp, std::span<Raster> grad_maps) const
{
    if (grad_maps.size() != frusta_.size()) throw DimensionError("reprojection backward: wrong map count");
    for (std::size_t i = 0; i < grad_maps.size(); ++i)
        grad_maps[i] = Raster(frusta_[i].height(), frusta_[i].width(), 1);
    const std::size_t n = erp_.rows * erp_.cols;
    for (std::size_t px = 0; px < n; ++px) {
        const auto s = samples(px);
        if (s.empty()) continue;
        const double g = grad_erp.values()[px] / static_cast<double>(s.size());
        for (const Sample& smp : s) grad_maps[smp.patch].values()[smp.pixel] += g;
    }
}

Reprojection reproject_average(std::span<const Patch> patches, ErpSize erp)
{
    if (patches.empty()) throw std::invalid_argument("reproject_average: at least one patch is required");
    std::vector<ViewFrustum> frusta;
    std::vector<Raster> maps;
    frusta.reserve(patches.size());
    maps.reserve(patches.size());
    for (const Patch& p : patches) {
        frusta.push_back(p.frustum);
        maps.push_back(p.data);
    }
    const ReprojectionPlan plan(frusta, erp);
    return {plan.apply(maps), plan.uncovered()};
}

}  // namespace odisphere
