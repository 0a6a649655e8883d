#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "odisphere/learning.hpp"
#include "odisphere/metrics.hpp"
#include "odisphere/multiscale.hpp"
#include "odisphere/patching.hpp"
#include "odisphere/saliency.hpp"

namespace odisphere {

enum class BiasMode { none, constant, single, multi };
enum class BackendKind { contrast, file };

BiasMode parse_bias_mode(const std::string& s);
std::string to_string(BiasMode mode);

struct PipelineConfig {
    ErpSize erp{800, 1600};
    std::size_t patch_width = 500;
    std::size_t patch_height = 500;
    double interval_deg = 45.0;
    std::vector<double> aovs_deg{100.0, 110.0, 120.0};
    int arch = 4;
    BiasMode bias = BiasMode::multi;
    BackendKind backend = BackendKind::contrast;
    std::string backend_dir;
    std::size_t attention_hidden = 8;  // C
    std::size_t bias_grid_rows = 20;
    std::size_t bias_grid_cols = 20;
    Sampler sampler = Sampler::bilinear;
    TrainConfig train;
    std::uint64_t seed = 0;
    std::optional<int> threads;

    /// Throws ConfigError naming the first offending field.
    void validate() const;

    std::string to_json() const;
    /// Every field is optional; missing ones keep their defaults.
    static PipelineConfig from_json(const std::string& text);
    static PipelineConfig load(const std::filesystem::path& path);
};

std::vector<double> aovs_radians(const PipelineConfig& cfg);
ViewFrustum make_frustum(const PipelineConfig& cfg, Direction d, double aov_rad);

/// Resamples an ERP raster to another ERP size (bilinear, seam-aware).
Raster resize_erp(const Raster& erp, ErpSize size);

/// The per-direction inputs of the integration layer: the bias-applied maps
/// of every angle of view aligned to the smallest one, plus the backend
/// features of the smallest-aov patch when available.
struct DirectionStack {
    ScaleStack stack;
    std::optional<Raster> features;
};

DirectionStack prepare_direction(const Raster& erp_image, std::size_t direction_index, Direction d,
                                 const PipelineConfig& cfg, const SaliencyBackend& backend,
                                 const BiasGrid* bias);

/// Integrated map for one direction; the identity when only one aov is used.
Raster integrate_direction(const DirectionStack& input, const AttentionParams* attention);

struct PipelineResult {
    Raster saliency;  // L1-normalized ERP map
    std::size_t uncovered = 0;
};

/// extract -> backend -> bias -> multi-scale integration -> reproject-average
/// -> L1 normalization. `bias` is ignored for BiasMode::none; `attention` is
/// required when more than one aov is configured.
PipelineResult run_pipeline(const Raster& erp_image, const PipelineConfig& cfg, const SaliencyBackend& backend,
                            const BiasGrid* bias, const AttentionParams* attention);

/// Constant prior: the mean ground-truth map extracted at every grid
/// direction of each bias channel elevation and pooled to the bias grid.
BiasGrid constant_average_bias(const Raster& prior_erp, const PipelineConfig& cfg);

/// Average of the L1-normalized maps.
Raster average_prior(std::span<const Raster> maps);

// ---- file-level commands used by the CLI -------------------------------

struct SceneEntry {
    std::filesystem::path image;
    std::filesystem::path saliency;
    std::optional<std::filesystem::path> fixations;
};

/// JSON `{"scenes": [{"image": ..., "saliency": ..., "fixations": ...}]}`;
/// relative paths resolve against the dataset file's directory.
std::vector<SceneEntry> load_dataset(const std::filesystem::path& path);

struct CommandOutput {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> warnings;
};

CommandOutput cmd_extract(const std::filesystem::path& image, const PipelineConfig& cfg,
                          const std::filesystem::path& out_dir);

struct PipelineInputs {
    std::filesystem::path image;
    std::optional<std::filesystem::path> fixations;
    std::optional<std::filesystem::path> ground_truth;
    std::optional<std::filesystem::path> bias_params;
    std::optional<std::filesystem::path> attention_params;
};

CommandOutput cmd_pipeline(const PipelineInputs& in, const PipelineConfig& cfg,
                           const std::filesystem::path& out_dir);

/// Bias fitting objective.
enum class BiasObjective { fused, per_patch };

CommandOutput cmd_biasfit(const std::filesystem::path& dataset, const PipelineConfig& cfg,
                          const std::filesystem::path& out_dir, BiasObjective objective = BiasObjective::fused);

CommandOutput cmd_attnfit(const std::filesystem::path& dataset, const PipelineConfig& cfg,
                          const std::filesystem::path& out_dir,
                          const std::optional<std::filesystem::path>& bias_params);

struct EvaluateInputs {
    std::filesystem::path prediction;
    std::optional<std::filesystem::path> ground_truth;
    std::optional<std::filesystem::path> fixations;
    double band_width_deg = 15.0;
};

CommandOutput cmd_evaluate(const EvaluateInputs& in, const std::filesystem::path& out_dir);

CommandOutput cmd_plotprior(const std::filesystem::path& dataset, const PipelineConfig& cfg,
                            const std::filesystem::path& out_dir);

}  // namespace odisphere
