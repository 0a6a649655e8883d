#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "odisphere/raster.hpp"

namespace odisphere {

/// Identifies one extracted patch: the index of its viewing direction in the
/// direction grid and its angle of view in degrees.
struct PatchKey {
    std::size_t direction_index = 0;
    double aov_deg = 0.0;
};

/// `d{idx}_a{aov}.pfm`, with the aov printed without a fraction when integral.
std::string patch_file_name(const PatchKey& key);

/// 2D saliency predictor. Outputs are single-channel, non-negative and
/// deliberately unnormalized. Implementations must be safe for concurrent
/// const calls.
class SaliencyBackend {
public:
    virtual ~SaliencyBackend() = default;

    virtual Raster predict(const PatchKey& key, const Raster& image) const = 0;

    /// Optional feature map consumed by the feature-driven attention
    /// architectures. Default: none.
    virtual std::optional<Raster> features(const PatchKey& key, const Raster& image) const;

    /// Number of feature channels, 0 when features() is unsupported.
    virtual std::size_t feature_channels() const { return 0; }
};

/// Center-surround contrast model: per image channel and per (center,
/// surround) Gaussian pair, |G(sc) * I - G(ss) * I|, summed over channels and
/// pairs. Features are the per-pair responses (channel-summed) at patch
/// resolution.
class ContrastBackend final : public SaliencyBackend {
public:
    using ScalePair = std::pair<double, double>;

    ContrastBackend();
    explicit ContrastBackend(std::vector<ScalePair> pairs);

    const std::vector<ScalePair>& scale_pairs() const { return pairs_; }

    /// One single-channel response map per scale pair.
    std::vector<Raster> responses(const Raster& image) const;

    Raster predict(const PatchKey& key, const Raster& image) const override;
    std::optional<Raster> features(const PatchKey& key, const Raster& image) const override;
    std::size_t feature_channels() const override { return pairs_.size(); }

private:
    std::vector<ScalePair> pairs_;
};

/// Loads precomputed maps named by patch_file_name() from a directory, so
/// any external model can be plugged in.
class FileBackend final : public SaliencyBackend {
public:
    explicit FileBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

    /// Throws IoError for missing files, DimensionError when the stored map does
    /// not match the image size, DegenerateInputError for negative or
    /// non-finite values.
    Raster predict(const PatchKey& key, const Raster& image) const override;

private:
    std::filesystem::path dir_;
};

/// Separable Gaussian blur with clamp-to-edge borders, radius ceil(3 sigma).
Raster gaussian_blur(const Raster& img, double sigma);

inline constexpr double kBiasFloor = 1e-6;

/// Low-resolution multiplicative prior with one channel per elevation angle
/// (a single channel is the center-bias case).
class BiasGrid {
public:
    BiasGrid() = default;
    /// All weights start at 1 (identity prior).
    BiasGrid(std::size_t grid_rows, std::size_t grid_cols, std::vector<double> elevations);

    static BiasGrid center(std::size_t grid_rows = 20, std::size_t grid_cols = 20);
    /// Five channels at elevations -90, -45, 0, 45, 90 degrees.
    static BiasGrid equator(std::size_t grid_rows = 20, std::size_t grid_cols = 20);

    std::size_t grid_rows() const { return rows_; }
    std::size_t grid_cols() const { return cols_; }
    std::size_t channels() const { return elevations_.size(); }
    const std::vector<double>& elevations() const { return elevations_; }

    std::span<double> weights() { return weights_; }
    std::span<const double> weights() const { return weights_; }
    std::span<double> channel(std::size_t k) { return {weights_.data() + k * rows_ * cols_, rows_ * cols_}; }
    std::span<const double> channel(std::size_t k) const
    {
        return {weights_.data() + k * rows_ * cols_, rows_ * cols_};
    }

    /// Raises every weight to at least `floor`.
    void clamp(double floor = kBiasFloor);

    bool operator==(const BiasGrid&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> elevations_;
    std::vector<double> weights_;
};

/// Channel whose elevation is nearest; ties go to the one nearer the equator.
std::size_t select_bias_channel(const BiasGrid& bias, double elevation);

/// Bilinear upsampling of a gh x gw grid to rows x cols with aligned pixel
/// centers and clamped borders. Expressed as four taps per output pixel so the
/// adjoint is exact.
class BiasUpsampler {
public:
    BiasUpsampler(std::size_t grid_rows, std::size_t grid_cols, std::size_t rows, std::size_t cols);

    Raster upsample(std::span<const double> grid) const;
    /// Accumulates the adjoint of upsample() into grad_grid.
    void accumulate_adjoint(const Raster& grad, std::span<double> grad_grid) const;

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    struct Taps {
        std::size_t index[4];
        double weight[4];
        double frac_row;
        double frac_col;
    };
    std::size_t grid_rows_;
    std::size_t grid_cols_;
    std::size_t rows_;
    std::size_t cols_;
    std::vector<Taps> taps_;
};

/// raw * upsample(bias channel for `elevation`). Output stays unnormalized.
Raster apply_bias(const Raster& raw, const BiasGrid& bias, double elevation);

/// Gradient of apply_bias w.r.t. the bias weights, accumulated into
/// grad_weights (same layout as BiasGrid::weights()).
void apply_bias_backward(const Raster& raw, const Raster& grad_out, const BiasGrid& bias, double elevation,
                         std::span<double> grad_weights);

enum class Normalization {
    plain,          // divide by the pixel sum
    sphere_weighted // divide by the solid-angle-weighted sum
};

/// Divides by the L1 norm. Throws DegenerateInputError for an all-zero map and
/// std::invalid_argument for negative values.
Raster l1_normalize(const Raster& map, Normalization mode = Normalization::plain);

}  // namespace odisphere
