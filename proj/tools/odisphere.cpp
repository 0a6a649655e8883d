// odisphere: command-line front end for the omnidirectional saliency pipeline.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "odisphere/error.hpp"
#include "odisphere/parallel.hpp"
#include "odisphere/pipeline.hpp"

namespace {

using namespace odisphere;
namespace fs = std::filesystem;

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> arch;
    std::optional<std::string> bias;
    std::optional<std::string> aovs;
    std::optional<double> interval_deg;
    std::string out = "out";
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_model = true)
{
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
    cmd->add_option("--threads", f.threads, "Worker threads (falls back to ODISPHERE_THREADS)");
    if (!with_model) return;
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_option("--arch", f.arch, "Attention architecture 1-4");
    cmd->add_option("--bias", f.bias, "Bias mode: none, constant (alias constant-average), single, multi");
    cmd->add_option("--aovs", f.aovs, "Comma separated angles of view in degrees, e.g. 100,110,120");
    cmd->add_option("--interval-deg", f.interval_deg, "Direction interval in degrees");
}

std::vector<double> parse_aov_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--aovs: '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw ConfigError("--aovs: empty list");
    return out;
}

PipelineConfig build_config(const CommonFlags& f)
{
    PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : PipelineConfig::load(f.config);
    if (f.seed) cfg.seed = *f.seed;
    if (f.arch) cfg.arch = *f.arch;
    if (f.bias) cfg.bias = parse_bias_mode(*f.bias);
    if (f.aovs) cfg.aovs_deg = parse_aov_list(*f.aovs);
    if (f.interval_deg) cfg.interval_deg = *f.interval_deg;
    if (f.threads) cfg.threads = *f.threads;
    cfg.validate();
    set_thread_count(resolve_thread_count(cfg.threads));
    return cfg;
}

void report(const CommandOutput& out)
{
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& p : out.files) std::cout << p.string() << "\n";
}

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const IoError*>(&e)) return 3;
    if (dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const DegenerateInputError*>(&e)) return 4;
    return 1;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Saliency estimation for omnidirectional images"};
    app.require_subcommand(1);
    CommonFlags flags;

    std::string image;
    auto* extract = app.add_subcommand("extract", "Write every (direction, aov) tangent patch as PFM");
    extract->add_option("image", image, "ERP image (PNG or PFM)")->required();
    add_common(extract, flags);

    PipelineInputs pin;
    std::string fixations, gt, bias_file, attn_file;
    auto* pipeline = app.add_subcommand("pipeline", "Predict an ERP saliency map");
    pipeline->add_option("image", image, "ERP image (PNG or PFM)")->required();
    pipeline->add_option("--fixations", fixations, "Fixation CSV for evaluation");
    pipeline->add_option("--gt", gt, "Ground-truth saliency map for evaluation");
    pipeline->add_option("--bias-params", bias_file, "OSB1 bias grid");
    pipeline->add_option("--attention-params", attn_file, "OSB1 attention parameters");
    add_common(pipeline, flags);

    std::string dataset;
    std::string objective = "fused";
    auto* biasfit = app.add_subcommand("biasfit", "Train a bias grid");
    biasfit->add_option("dataset", dataset, "Dataset JSON")->required();
    biasfit->add_option("--objective", objective, "fused (ERP loss) or per-patch")->capture_default_str();
    add_common(biasfit, flags);

    auto* attnfit = app.add_subcommand("attnfit", "Train the multi-scale attention layers");
    attnfit->add_option("dataset", dataset, "Dataset JSON")->required();
    attnfit->add_option("--bias-params", bias_file, "OSB1 bias grid applied before integration");
    add_common(attnfit, flags);

    EvaluateInputs ein;
    std::string prediction;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a predicted ERP map");
    evaluate_cmd->add_option("prediction", prediction, "Predicted ERP map")->required();
    evaluate_cmd->add_option("--gt", gt, "Ground-truth saliency map");
    evaluate_cmd->add_option("--fixations", fixations, "Fixation CSV");
    evaluate_cmd->add_option("--band-width-deg", ein.band_width_deg, "Elevation band width for NSS")
        ->capture_default_str();
    add_common(evaluate_cmd, flags, false);

    auto* plotprior = app.add_subcommand("plotprior", "Average ground-truth prior and constant bias grid");
    plotprior->add_option("dataset", dataset, "Dataset JSON")->required();
    add_common(plotprior, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        const fs::path out = flags.out;
        auto opt_path = [](const std::string& s) -> std::optional<fs::path> {
            if (s.empty()) return std::nullopt;
            return fs::path(s);
        };

        if (*extract) {
            report(cmd_extract(image, build_config(flags), out));
        } else if (*pipeline) {
            pin.image = image;
            pin.fixations = opt_path(fixations);
            pin.ground_truth = opt_path(gt);
            pin.bias_params = opt_path(bias_file);
            pin.attention_params = opt_path(attn_file);
            report(cmd_pipeline(pin, build_config(flags), out));
        } else if (*biasfit) {
            BiasObjective obj;
            if (objective == "fused") obj = BiasObjective::fused;
            else if (objective == "per-patch") obj = BiasObjective::per_patch;
            else throw ConfigError("--objective must be 'fused' or 'per-patch'");
            report(cmd_biasfit(dataset, build_config(flags), out, obj));
        } else if (*attnfit) {
            report(cmd_attnfit(dataset, build_config(flags), out, opt_path(bias_file)));
        } else if (*evaluate_cmd) {
            set_thread_count(resolve_thread_count(flags.threads));
            ein.prediction = prediction;
            ein.ground_truth = opt_path(gt);
            ein.fixations = opt_path(fixations);
            report(cmd_evaluate(ein, out));
        } else if (*plotprior) {
            report(cmd_plotprior(dataset, build_config(flags), out));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
