#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "odisphere/geometry.hpp"
#include "odisphere/raster.hpp"

namespace odisphere {

struct DirectionGrid {
    double interval = 0.0;
    std::vector<Direction> directions;
};

/// Viewing directions on rings of constant elevation spaced by `interval`,
/// ordered north pole, rings from north to south, south pole. Every ring
/// strictly between the poles carries 2*pi/interval azimuths starting at 0.
/// Throws ConfigError unless `interval` divides 2*pi.
DirectionGrid generate_view_directions(double interval);

enum class Sampler { nearest, bilinear };

struct Patch {
    ViewFrustum frustum;
    Raster data;
};

/// Samples an ERP raster through a frustum. All channels are extracted.
Patch extract_patch(const Raster& erp, const ViewFrustum& f, Sampler sampler = Sampler::bilinear);

/// Nearest-sample correspondence between ERP pixels and a fixed list of
/// frusta. For every ERP pixel it stores the nearest patch pixel of every
/// frustum whose footprint contains the pixel direction. Building it once lets
/// reprojection and its adjoint run without redoing the projection math.
class ReprojectionPlan {
public:
    struct Sample {
        std::uint32_t patch;
        std::uint32_t pixel;  // row * width + col within that patch
    };

    ReprojectionPlan(std::span<const ViewFrustum> frusta, ErpSize erp);

    ErpSize erp_size() const { return erp_; }
    std::size_t patch_count() const { return frusta_.size(); }
    const ViewFrustum& frustum(std::size_t i) const { return frusta_[i]; }
    std::size_t uncovered() const { return uncovered_; }

    std::span<const Sample> samples(std::size_t erp_pixel) const
    {
        return {samples_.data() + offsets_[erp_pixel], offsets_[erp_pixel + 1] - offsets_[erp_pixel]};
    }

    /// Mean of all covering patch samples per ERP pixel; 0 where uncovered.
    /// `maps[i]` must match frustum i in size; all maps share a channel count.
    Raster apply(std::span<const Raster> maps) const;

    /// Adjoint of apply() for single-channel maps: scatters an ERP gradient
    /// back onto per-patch gradients (which are overwritten).
    void backward(const Raster& grad_erp, std::span<Raster> grad_maps) const;

private:
    std::vector<ViewFrustum> frusta_;
    ErpSize erp_;
    std::vector<std::size_t> offsets_;
    std::vector<Sample> samples_;
    std::size_t uncovered_ = 0;
};

struct Reprojection {
    Raster map;
    /// ERP pixels no patch covers; they are left at 0. Callers surface this
    /// as a warning.
    std::size_t uncovered = 0;
};

/// Reprojects per-patch maps into ERP, averaging overlapping samples.
Reprojection reproject_average(std::span<const Patch> patches, ErpSize erp);

}  // namespace odisphere
