#pragma once

// Straightforward serial versions of the OpenMP kernels. They are kept for
// tests and benchmarks; production code calls the parallel kernels.

#include <span>

#include "odisphere/multiscale.hpp"
#include "odisphere/patching.hpp"
#include "odisphere/raster.hpp"

namespace odisphere::reference {

Patch extract_patch(const Raster& erp, const ViewFrustum& f, Sampler sampler);

/// Reprojection by direct per-pixel search over all patches (no plan).
Reprojection reproject_average(std::span<const Patch> patches, ErpSize erp);

/// Direct 2D convolution with the full (non-separable) Gaussian kernel.
Raster gaussian_blur(const Raster& img, double sigma);

/// Nested-loop zero-padded convolution.
Raster conv2d(const Raster& input, const ConvLayer& layer);

}  // namespace odisphere::reference
