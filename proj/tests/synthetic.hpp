#pragma once

// Synthetic omnidirectional scenes rendered directly in angular space, so the
// ground truth is known by construction.

#include <cstdint>
#include <vector>

#include "odisphere/geometry.hpp"
#include "odisphere/raster.hpp"

namespace synthetic {

struct Target {
    odisphere::Direction center;
    double sigma;     // angular radius (std of the Gaussian profile), radians
    double contrast;  // added to the background in every channel, scaled by color
    double color[3];
};

/// RGB ERP image: gray background with optional pixel noise plus the targets.
odisphere::Raster render(odisphere::ErpSize size, const std::vector<Target>& targets, double noise,
                         std::uint64_t seed);

/// Sum of unit-peak Gaussian bumps, one per target, with angular std
/// `spread * sigma`, plus `floor`.
odisphere::Raster bump_map(odisphere::ErpSize size, const std::vector<Target>& targets, double spread,
                           double floor);

/// Multiplies every pixel by exp(-elevation^2 / (2 sigma^2)).
odisphere::Raster apply_elevation_prior(const odisphere::Raster& map, double sigma);

/// Random targets with angular std drawn from [sigma_lo, sigma_hi].
std::vector<Target> random_targets(std::size_t count, double sigma_lo, double sigma_hi, double max_abs_elevation,
                                   std::uint64_t seed);

}  // namespace synthetic
