#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "odisphere/raster.hpp"

namespace odisphere {

/// N aligned single-channel maps (one channel each, ascending angle of view).
/// The first (smallest) angle of view is the alignment reference.
struct ScaleStack {
    std::vector<double> aovs;  // radians, strictly increasing
    Raster maps;               // N channels

    std::size_t depth() const { return aovs.size(); }
};

/// Half-width in pixels of the centered region of a map taken at `aov` that
/// covers the same field as the reference angle `aov_min`.
double crop_half_width(double aov, double aov_min, std::size_t size_px);

/// Crops the centered region of each map that matches the smallest angle of
/// view and resizes it back to the full size. Throws std::invalid_argument when
/// aovs are not strictly increasing or sizes differ.
ScaleStack crop_resize_to_smallest(std::span<const Raster> maps, std::span<const double> aovs);

enum class Architecture : int {
    shallow_maps = 1,      // 3x3 C, ReLU, 2x2 N, softmax over the stacked maps
    deep_maps = 2,         // 1x1 C, ReLU, 3x3 C, ReLU, 1x1 4C, ReLU, 1x1 N, softmax
    shallow_features = 3,  // arch 1 stack over backend features
    deep_features = 4,     // arch 2 stack over backend features
};

Architecture architecture_from_int(int arch);
bool uses_features(Architecture arch);

/// Zero-padded "same" convolution layer. Even kernels pad one extra
/// row/column at the bottom/right.
struct ConvLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel_rows = 0;
    std::size_t kernel_cols = 0;
    std::vector<double> weights;  // [out][in][kr][kc]
    std::vector<double> bias;     // [out]

    ConvLayer() = default;
    ConvLayer(std::size_t in, std::size_t out, std::size_t kr, std::size_t kc);

    double& weight(std::size_t o, std::size_t i, std::size_t r, std::size_t c)
    {
        return weights[((o * in_channels + i) * kernel_rows + r) * kernel_cols + c];
    }
    double weight(std::size_t o, std::size_t i, std::size_t r, std::size_t c) const
    {
        return weights[((o * in_channels + i) * kernel_rows + r) * kernel_cols + c];
    }

    bool operator==(const ConvLayer&) const = default;
};

Raster conv2d(const Raster& input, const ConvLayer& layer);

/// Backward pass of conv2d. Gradients are accumulated into grad_layer (same
/// shape as layer); grad_input is overwritten when non-null.
void conv2d_backward(const Raster& input, const ConvLayer& layer, const Raster& grad_output,
                     ConvLayer& grad_layer, Raster* grad_input);

struct AttentionParams {
    Architecture arch = Architecture::deep_features;
    std::vector<ConvLayer> layers;

    /// Layer stack for `arch` with deterministic uniform(+-1/sqrt(fan_in))
    /// initialization. in_channels is N for the map architectures and the
    /// feature channel count for the feature architectures.
    static AttentionParams make(Architecture arch, std::size_t in_channels, std::size_t hidden,
                                std::size_t scales, std::uint64_t seed);

    /// Same layer shapes, all weights zero.
    AttentionParams zeros_like() const;

    std::size_t input_channels() const { return layers.front().in_channels; }
    std::size_t scales() const { return layers.back().out_channels; }
    std::size_t parameter_count() const;

    /// Flattened view helpers for optimizers: layer by layer, weights then bias.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    bool operator==(const AttentionParams&) const = default;
};

/// Intermediate activations kept for the backward pass.
struct AttentionTrace {
    Raster input;
    std::vector<Raster> pre_activations;  // one per layer
    Raster weights;                       // softmax output, N channels
};

/// Network input for a stack: the maps for arch 1/2, the features (bilinearly
/// resized to the stack size) for arch 3/4. Throws std::invalid_argument when
/// arch 3/4 get no features.
Raster attention_input(const ScaleStack& stack, const AttentionParams& params, const Raster* features);

/// Per-pixel softmax weights over the N scales.
Raster attention_forward(const ScaleStack& stack, const AttentionParams& params, const Raster* features);
AttentionTrace attention_forward_traced(const ScaleStack& stack, const AttentionParams& params,
                                        const Raster* features);

/// Gradient of a scalar loss w.r.t. the parameters given dLoss/dWeights.
AttentionParams attention_backward(const AttentionTrace& trace, const AttentionParams& params,
                                   const Raster& grad_weights);

/// out(x) = sum_n weight_n(x) * map_n(x).
Raster integrate(const ScaleStack& stack, const Raster& weights);

/// Gradient of integrate() w.r.t. the weights.
Raster integrate_backward_weights(const ScaleStack& stack, const Raster& grad_out);

/// In-place per-pixel softmax across channels.
void softmax_channels(Raster& logits);

/// Resizes every channel with bilinear sampling (aligned pixel centers).
Raster resize_bilinear(const Raster& img, std::size_t rows, std::size_t cols);

}  // namespace odisphere
