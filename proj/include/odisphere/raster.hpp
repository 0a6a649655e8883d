#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "odisphere/geometry.hpp"

namespace odisphere {

/// Planar multi-channel raster of doubles: value (ch, r, c) lives at
/// (ch * rows + r) * cols + c. Used for ERP grids, patches and feature maps.
class Raster {
public:
    Raster() = default;
    Raster(std::size_t rows, std::size_t cols, std::size_t channels = 1, double fill = 0.0);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t channels() const { return channels_; }
    std::size_t plane_size() const { return rows_ * cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    ErpSize shape2d() const { return {rows_, cols_}; }

    double& operator()(std::size_t r, std::size_t c, std::size_t ch = 0)
    {
        return data_[(ch * rows_ + r) * cols_ + c];
    }
    double operator()(std::size_t r, std::size_t c, std::size_t ch = 0) const
    {
        return data_[(ch * rows_ + r) * cols_ + c];
    }

    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    std::span<double> plane(std::size_t ch) { return {data_.data() + ch * plane_size(), plane_size()}; }
    std::span<const double> plane(std::size_t ch) const
    {
        return {data_.data() + ch * plane_size(), plane_size()};
    }

    /// Copy of one channel as a single-channel raster.
    Raster channel(std::size_t ch) const;

    bool same_shape(const Raster& other) const
    {
        return rows_ == other.rows_ && cols_ == other.cols_ && channels_ == other.channels_;
    }

    bool operator==(const Raster&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

/// Stacks single-channel rasters of equal size into one multi-channel raster.
Raster stack_channels(std::span<const Raster> planes);

double sum(std::span<const double> values);
bool all_finite(std::span<const double> values);
bool all_non_negative(std::span<const double> values);

/// Bilinear sample of an ERP raster at a continuous ERP coordinate. Columns
/// wrap across the azimuth seam; rows clamp at the poles.
double sample_erp_bilinear(const Raster& erp, std::size_t ch, ErpCoord px);
double sample_erp_nearest(const Raster& erp, std::size_t ch, ErpCoord px);

/// Bilinear sample with clamp-to-edge on both axes (patch-space resampling).
double sample_clamped_bilinear(const Raster& img, std::size_t ch, double row, double col);

/// Per-pixel solid-angle weights of an ERP grid, proportional to the cosine
/// of each pixel-center latitude and normalized to sum to one.
Raster solid_angle_weights(ErpSize size);

}  // namespace odisphere
