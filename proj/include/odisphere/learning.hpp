#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "odisphere/multiscale.hpp"
#include "odisphere/patching.hpp"
#include "odisphere/raster.hpp"
#include "odisphere/saliency.hpp"

namespace odisphere {

inline constexpr double kKldEpsilon = 1e-8;

struct KldResult {
    double loss = 0.0;
    Raster grad;  // dLoss/dPred, same shape as the prediction
};

/// KL divergence of the L1-normalized target from the L1-normalized
/// prediction, sum t * ln((t + eps) / (p + eps)), with the gradient taken
/// through the prediction's normalization. Throws DegenerateInputError when
/// either map sums to zero.
KldResult kld_loss(const Raster& pred, const Raster& target, double eps = kKldEpsilon);

/// v <- rho v + (1 - rho) g^2;  p <- p - lr g / sqrt(v + eps).
struct RmsProp {
    double rho = 0.9;
    double eps = 1e-8;

    void step(std::span<double> params, std::span<const double> grads, std::span<double> state,
              double lr) const;
};

struct TrainConfig {
    double lr_bias = 1e-4;
    double lr_attention = 1e-5;
    double rho = 0.9;
    double eps = 1e-8;
    std::size_t epochs = 5;
    /// Stop after this many optimizer steps; 0 means no limit.
    std::size_t max_steps = 0;
    std::uint64_t seed = 0;
};

struct BiasSample {
    Raster raw;        // backend output, single channel
    double elevation;  // radians, of the viewing direction
    Raster target;     // ground truth extracted with the same frustum
};

struct BiasTraining {
    BiasGrid bias;
    std::vector<double> losses;  // one per step
};

/// Per-patch training: batch size 1, one RMSProp step per sample on
/// kld_loss(apply_bias(raw), target). Only the bias weights change; they are
/// clamped to kBiasFloor after every step.
BiasTraining train_bias(std::span<const BiasSample> samples, BiasGrid init, const TrainConfig& cfg);

/// One scene for fused training: raw maps for every frustum of the plan and
/// the ERP ground truth.
struct FusedBiasScene {
    std::vector<Raster> raw;
    Raster target;
};

/// Fused training: each step biases every patch of one scene, reprojects
/// through `plan`, and takes the KLD against the ERP ground truth. Unlike the
/// per-patch loss this sees the relative level of each bias channel.
BiasTraining train_bias_fused(std::span<const FusedBiasScene> scenes, const ReprojectionPlan& plan,
                              BiasGrid init, const TrainConfig& cfg);

/// Loss and gradient of one fused step, exposed for gradient checks.
double fused_bias_loss(const FusedBiasScene& scene, const ReprojectionPlan& plan, const BiasGrid& bias,
                       std::span<double> grad_weights);

struct AttentionSample {
    ScaleStack stack;
    std::optional<Raster> features;
    Raster target;
};

struct AttentionTraining {
    AttentionParams params;
    std::vector<double> losses;
};

/// kld_loss(integrate(stack, attention_forward(...)), target) and its
/// gradient w.r.t. every parameter.
double attention_loss(const AttentionSample& sample, const AttentionParams& params, AttentionParams* grad);

AttentionTraining train_attention(std::span<const AttentionSample> samples, AttentionParams init,
                                  const TrainConfig& cfg);

/// `step,loss` CSV with a header line.
void write_loss_csv(const std::filesystem::path& path, std::span<const double> losses);

}  // namespace odisphere
