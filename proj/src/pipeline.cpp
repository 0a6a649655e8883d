#include "odisphere/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "odisphere/error.hpp"
#include "odisphere/io.hpp"

namespace odisphere {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

BiasMode parse_bias_mode(const std::string& s)
{
    if (s == "none") return BiasMode::none;
    if (s == "constant" || s == "constant-average") return BiasMode::constant;
    if (s == "single") return BiasMode::single;
    if (s == "multi") return BiasMode::multi;
    throw ConfigError("bias mode must be one of none, constant, single, multi (got '" + s + "')");
}

std::string to_string(BiasMode mode)
{
    switch (mode) {
    case BiasMode::none: return "none";
    case BiasMode::constant: return "constant";
    case BiasMode::single: return "single";
    case BiasMode::multi: return "multi";
    }
    return "none";
}

void PipelineConfig::validate() const
{
    if (erp.rows < 2 || erp.cols < 2) throw ConfigError("erp size must be at least 2x2");
    if (patch_width < 2 || patch_height < 2) throw ConfigError("patch size must be at least 2x2");
    generate_view_directions(deg_to_rad(interval_deg));
    if (aovs_deg.empty()) throw ConfigError("at least one angle of view is required");
    for (std::size_t i = 0; i < aovs_deg.size(); ++i) {
        if (!(aovs_deg[i] > 0.0 && aovs_deg[i] < 180.0)) throw ConfigError("angles of view must lie in (0, 180) deg");
        if (i > 0 && !(aovs_deg[i] > aovs_deg[i - 1])) throw ConfigError("angles of view must be strictly increasing");
    }
    architecture_from_int(arch);
    if (attention_hidden == 0) throw ConfigError("attention_channels must be positive");
    if (bias_grid_rows == 0 || bias_grid_cols == 0) throw ConfigError("bias grid must be at least 1x1");
    if (backend == BackendKind::file && backend_dir.empty()) throw ConfigError("file backend needs backend_dir");
    if (!(train.lr_bias > 0.0) || !(train.lr_attention > 0.0)) throw ConfigError("learning rates must be positive");
    if (!(train.rho > 0.0 && train.rho < 1.0)) throw ConfigError("rmsprop rho must lie in (0, 1)");
    if (!(train.eps > 0.0)) throw ConfigError("rmsprop eps must be positive");
    if (train.epochs == 0) throw ConfigError("epochs must be positive");
    if (threads && *threads < 1) throw ConfigError("threads must be at least 1");
}

std::string PipelineConfig::to_json() const
{
    json j;
    j["erp_rows"] = erp.rows;
    j["erp_cols"] = erp.cols;
    j["patch_width"] = patch_width;
    j["patch_height"] = patch_height;
    j["interval_deg"] = interval_deg;
    j["aovs_deg"] = aovs_deg;
    j["arch"] = arch;
    j["bias"] = to_string(bias);
    j["backend"] = backend == BackendKind::contrast ? "contrast" : "file";
    j["backend_dir"] = backend_dir;
    j["attention_channels"] = attention_hidden;
    j["bias_grid_rows"] = bias_grid_rows;
    j["bias_grid_cols"] = bias_grid_cols;
    j["sampler"] = sampler == Sampler::bilinear ? "bilinear" : "nearest";
    j["seed"] = seed;
    j["threads"] = threads ? json(*threads) : json();
    j["train"] = {{"lr_bias", train.lr_bias},   {"lr_attention", train.lr_attention},
                  {"rho", train.rho},           {"eps", train.eps},
                  {"epochs", train.epochs},     {"max_steps", train.max_steps}};
    return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(const std::string& text)
{
    PipelineConfig cfg;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "erp_rows") cfg.erp.rows = v.get<std::size_t>();
            else if (key == "erp_cols") cfg.erp.cols = v.get<std::size_t>();
            else if (key == "patch_width") cfg.patch_width = v.get<std::size_t>();
            else if (key == "patch_height") cfg.patch_height = v.get<std::size_t>();
            else if (key == "interval_deg") cfg.interval_deg = v.get<double>();
            else if (key == "aovs_deg") cfg.aovs_deg = v.get<std::vector<double>>();
            else if (key == "arch") cfg.arch = v.get<int>();
            else if (key == "bias") cfg.bias = parse_bias_mode(v.get<std::string>());
            else if (key == "backend") {
                const auto s = v.get<std::string>();
                if (s == "contrast") cfg.backend = BackendKind::contrast;
                else if (s == "file") cfg.backend = BackendKind::file;
                else throw ConfigError("backend must be 'contrast' or 'file'");
            }
            else if (key == "backend_dir") cfg.backend_dir = v.get<std::string>();
            else if (key == "attention_channels") cfg.attention_hidden = v.get<std::size_t>();
            else if (key == "bias_grid_rows") cfg.bias_grid_rows = v.get<std::size_t>();
            else if (key == "bias_grid_cols") cfg.bias_grid_cols = v.get<std::size_t>();
            else if (key == "sampler") {
                const auto s = v.get<std::string>();
                if (s == "bilinear") cfg.sampler = Sampler::bilinear;
                else if (s == "nearest") cfg.sampler = Sampler::nearest;
                else throw ConfigError("sampler must be 'bilinear' or 'nearest'");
            }
            else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (key == "threads") {
                if (v.is_null()) cfg.threads.reset();
                else cfg.threads = v.get<int>();
            }
            else if (key == "train") {
                if (!v.is_object()) throw ConfigError("'train' must be an object");
                for (const auto& [tk, tv] : v.items()) {
                    if (tk == "lr_bias") cfg.train.lr_bias = tv.get<double>();
                    else if (tk == "lr_attention") cfg.train.lr_attention = tv.get<double>();
                    else if (tk == "rho") cfg.train.rho = tv.get<double>();
                    else if (tk == "eps") cfg.train.eps = tv.get<double>();
                    else if (tk == "epochs") cfg.train.epochs = tv.get<std::size_t>();
                    else if (tk == "max_steps") cfg.train.max_steps = tv.get<std::size_t>();
                    else throw ConfigError("unknown config key 'train." + tk + "'");
                }
            }
            else throw ConfigError("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config has a field of the wrong type: ") + e.what());
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const fs::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json(ss.str());
}

std::vector<double> aovs_radians(const PipelineConfig& cfg)
{
    std::vector<double> out;
    for (double a : cfg.aovs_deg) out.push_back(deg_to_rad(a));
    return out;
}

ViewFrustum make_frustum(const PipelineConfig& cfg, Direction d, double aov_rad)
{
    return ViewFrustum(d, aov_rad, aov_rad, cfg.patch_width, cfg.patch_height);
}

Raster resize_erp(const Raster& erp, ErpSize size)
{
    if (erp.shape2d() == size) return erp;
    Raster out(size.rows, size.cols, erp.channels());
    for (std::size_t r = 0; r < size.rows; ++r) {
        for (std::size_t c = 0; c < size.cols; ++c) {
            const Direction d = erp_to_sphere(size, {static_cast<double>(r), static_cast<double>(c)});
            const ErpCoord src = sphere_to_erp(erp.shape2d(), d);
            for (std::size_t ch = 0; ch < erp.channels(); ++ch) out(r, c, ch) = sample_erp_bilinear(erp, ch, src);
        }
    }
    return out;
}

namespace {

template <typename Fn>
auto in_stage(const std::string& stage, const PatchKey& key, Fn&& fn)
{
    try {
        return fn();
    } catch (const std::exception& e) {
        throw Error("stage '" + stage + "', patch " + patch_file_name(key) + ": " + e.what());
    }
}

}  // namespace

DirectionStack prepare_direction(const Raster& erp_image, std::size_t direction_index, Direction d,
                                 const PipelineConfig& cfg, const SaliencyBackend& backend, const BiasGrid* bias)
{
    const std::vector<double> aovs = aovs_radians(cfg);
    std::vector<Raster> maps;
    DirectionStack out;
    for (std::size_t n = 0; n < aovs.size(); ++n) {
        const PatchKey key{direction_index, cfg.aovs_deg[n]};
        const Patch patch =
            in_stage("extract", key, [&] { return extract_patch(erp_image, make_frustum(cfg, d, aovs[n]), cfg.sampler); });
        Raster raw = in_stage("backend", key, [&] {
            Raster r = backend.predict(key, patch.data);
            if (r.rows() != patch.data.rows() || r.cols() != patch.data.cols() || r.channels() != 1)
                throw DimensionError("backend output does not match the patch size");
            if (!all_finite(r.values()) || !all_non_negative(r.values()))
                throw DegenerateInputError("backend output must be finite and non-negative");
            return r;
        });
        if (bias != nullptr) raw = in_stage("bias", key, [&] { return apply_bias(raw, *bias, d.elevation); });
        if (n == 0) out.features = in_stage("features", key, [&] { return backend.features(key, patch.data); });
        maps.push_back(std::move(raw));
    }
    out.stack = crop_resize_to_smallest(maps, aovs);
    return out;
}

Raster integrate_direction(const DirectionStack& input, const AttentionParams* attention)
{
    if (input.stack.depth() == 1) return input.stack.maps.channel(0);
    if (attention == nullptr) throw ConfigError("multi-scale integration needs attention parameters");
    const Raster weights = attention_forward(input.stack, *attention, input.features ? &*input.features : nullptr);
    return integrate(input.stack, weights);
}

PipelineResult run_pipeline(const Raster& erp_image, const PipelineConfig& cfg, const SaliencyBackend& backend,
                            const BiasGrid* bias, const AttentionParams* attention)
{
    cfg.validate();
    const Raster image = resize_erp(erp_image, cfg.erp);
    const DirectionGrid grid = generate_view_directions(deg_to_rad(cfg.interval_deg));
    const BiasGrid* active_bias = cfg.bias == BiasMode::none ? nullptr : bias;
    const double aov_min = deg_to_rad(cfg.aovs_deg.front());

    const std::size_t n = grid.directions.size();
    std::vector<Raster> integrated(n);
    std::vector<std::exception_ptr> errors(n);

#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            const DirectionStack stack =
                prepare_direction(image, idx, grid.directions[idx], cfg, backend, active_bias);
            integrated[idx] = in_stage("integrate", {idx, cfg.aovs_deg.front()},
                                       [&] { return integrate_direction(stack, attention); });
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<ViewFrustum> frusta;
    for (const Direction& d : grid.directions) frusta.push_back(make_frustum(cfg, d, aov_min));
    const ReprojectionPlan plan(frusta, cfg.erp);
    PipelineResult result;
    result.uncovered = plan.uncovered();
    result.saliency = l1_normalize(plan.apply(integrated));
    return result;
}

BiasGrid constant_average_bias(const Raster& prior_erp, const PipelineConfig& cfg)
{
    BiasGrid grid = BiasGrid::equator(cfg.bias_grid_rows, cfg.bias_grid_cols);
    const DirectionGrid directions = generate_view_directions(deg_to_rad(cfg.interval_deg));
    const double aov = deg_to_rad(cfg.aovs_deg.front());
    const std::size_t gh = grid.grid_rows();
    const std::size_t gw = grid.grid_cols();

    for (std::size_t k = 0; k < grid.channels(); ++k) {
        const double elevation = grid.elevations()[k];
        std::vector<Direction> ring;
        for (const Direction& d : directions.directions)
            if (std::abs(d.elevation - elevation) < 1e-9) ring.push_back(d);
        if (ring.empty()) ring.push_back(Direction::make(0.0, elevation));

        auto cell = grid.channel(k);
        std::fill(cell.begin(), cell.end(), 0.0);
        for (const Direction& d : ring) {
            const Patch p = extract_patch(prior_erp, make_frustum(cfg, d, aov));
            for (std::size_t i = 0; i < gh; ++i) {
                const std::size_t r0 = i * p.data.rows() / gh;
                const std::size_t r1 = std::max(r0 + 1, (i + 1) * p.data.rows() / gh);
                for (std::size_t j = 0; j < gw; ++j) {
                    const std::size_t c0 = j * p.data.cols() / gw;
                    const std::size_t c1 = std::max(c0 + 1, (j + 1) * p.data.cols() / gw);
                    double acc = 0.0;
                    for (std::size_t r = r0; r < r1; ++r)
                        for (std::size_t c = c0; c < c1; ++c) acc += p.data(r, c);
                    cell[i * gw + j] += acc / static_cast<double>((r1 - r0) * (c1 - c0)) / static_cast<double>(ring.size());
                }
            }
        }
    }
    const double mean = sum(grid.weights()) / static_cast<double>(grid.weights().size());
    if (!(mean > 0.0)) throw DegenerateInputError("constant prior: average map has no mass");
    for (double& w : grid.weights()) w /= mean;
    grid.clamp();
    return grid;
}

Raster average_prior(std::span<const Raster> maps)
{
    if (maps.empty()) throw std::invalid_argument("average_prior: no maps");
    Raster acc(maps.front().rows(), maps.front().cols(), 1);
    for (const Raster& m : maps) {
        if (!m.same_shape(acc)) throw DimensionError("average_prior: maps differ in shape");
        const Raster n = l1_normalize(m);
        auto dst = acc.values();
        const auto src = n.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] / static_cast<double>(maps.size());
    }
    return acc;
}

// ---- file-level commands ---------------------------------------------------

std::vector<SceneEntry> load_dataset(const fs::path& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot read dataset " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("dataset " + path.string() + " is not valid JSON: " + e.what());
    }
    const fs::path base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    std::vector<SceneEntry> scenes;
    if (!j.contains("scenes") || !j["scenes"].is_array()) throw ConfigError("dataset needs a 'scenes' array");
    for (const auto& s : j["scenes"]) {
        if (!s.contains("image") || !s.contains("saliency"))
            throw ConfigError("dataset scene " + std::to_string(scenes.size()) + " needs 'image' and 'saliency'");
        SceneEntry e{resolve(s["image"].get<std::string>()), resolve(s["saliency"].get<std::string>()), std::nullopt};
        if (s.contains("fixations")) e.fixations = resolve(s["fixations"].get<std::string>());
        scenes.push_back(std::move(e));
    }
    if (scenes.empty()) throw ConfigError("dataset has no scenes");
    return scenes;
}

namespace {

// Files are written to a staging directory and moved into place only once
// the command has finished, so a failed run leaves no partial outputs.
class OutputStage {
public:
    explicit OutputStage(const fs::path& out_dir) : out_dir_(out_dir)
    {
        fs::create_directories(out_dir_);
        staging_ = out_dir_ / ".staging";
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    ~OutputStage()
    {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
    OutputStage(const OutputStage&) = delete;
    OutputStage& operator=(const OutputStage&) = delete;

    fs::path path(const std::string& name)
    {
        names_.push_back(name);
        return staging_ / name;
    }

    std::vector<fs::path> commit()
    {
        std::vector<fs::path> out;
        for (const std::string& n : names_) {
            fs::rename(staging_ / n, out_dir_ / n);
            out.push_back(out_dir_ / n);
        }
        return out;
    }

private:
    fs::path out_dir_;
    fs::path staging_;
    std::vector<std::string> names_;
};

class Manifest {
public:
    Manifest(std::string command, const PipelineConfig* cfg) : start_(std::chrono::steady_clock::now())
    {
        j_["command"] = std::move(command);
        if (cfg != nullptr) j_["config"] = json::parse(cfg->to_json());
        j_["inputs"] = json::object();
        j_["outputs"] = json::array();
        j_["timings_ms"] = json::object();
    }

    void input(const std::string& name, const fs::path& p)
    {
        j_["inputs"][name] = {{"path", p.string()}, {"sha256", sha256_hex(read_bytes(p))}};
    }
    void output(const std::string& name) { j_["outputs"].push_back(name); }
    void lap(const std::string& stage)
    {
        const auto now = std::chrono::steady_clock::now();
        j_["timings_ms"][stage] = std::chrono::duration<double, std::milli>(now - start_).count();
        start_ = now;
    }
    void warning(const std::string& w)
    {
        if (!j_.contains("warnings")) j_["warnings"] = json::array();
        j_["warnings"].push_back(w);
    }
    std::string dump() const { return j_.dump(2) + "\n"; }

private:
    json j_;
    std::chrono::steady_clock::time_point start_;
};

std::unique_ptr<SaliencyBackend> make_backend(const PipelineConfig& cfg)
{
    if (cfg.backend == BackendKind::file) return std::make_unique<FileBackend>(cfg.backend_dir);
    return std::make_unique<ContrastBackend>();
}

std::string uncovered_warning(std::size_t uncovered)
{
    return std::to_string(uncovered) + " ERP pixels are not covered by any patch and were set to 0";
}

std::optional<BiasGrid> load_bias_for(const PipelineConfig& cfg, const std::optional<fs::path>& path)
{
    if (cfg.bias == BiasMode::none) return std::nullopt;
    BiasGrid grid;
    if (path) {
        grid = decode_osb1_bias(read_bytes(*path));
    } else if (cfg.bias == BiasMode::constant) {
        throw ConfigError("bias mode 'constant' needs a prior bias file (see plotprior)");
    } else {
        grid = cfg.bias == BiasMode::single ? BiasGrid::center(cfg.bias_grid_rows, cfg.bias_grid_cols)
                                            : BiasGrid::equator(cfg.bias_grid_rows, cfg.bias_grid_cols);
    }
    if (cfg.bias == BiasMode::single && grid.channels() != 1)
        throw ConfigError("bias mode 'single' needs a 1-channel grid, file has " + std::to_string(grid.channels()));
    if (cfg.bias != BiasMode::single && grid.channels() < 2)
        throw ConfigError("bias mode '" + to_string(cfg.bias) + "' needs a multi-channel grid");
    return grid;
}

std::size_t attention_input_channels(const PipelineConfig& cfg, const SaliencyBackend& backend)
{
    const Architecture arch = architecture_from_int(cfg.arch);
    if (!uses_features(arch)) return cfg.aovs_deg.size();
    if (backend.feature_channels() == 0)
        throw ConfigError("architectures 3 and 4 need a backend with features; the file backend has none");
    return backend.feature_channels();
}

std::pair<Raster, Raster> load_scene(const SceneEntry& s, const PipelineConfig& cfg)
{
    Raster image = resize_erp(read_image(s.image), cfg.erp);
    Raster gt = read_image(s.saliency);
    if (gt.channels() != 1) gt = gt.channel(0);
    return {std::move(image), resize_erp(gt, cfg.erp)};
}

}  // namespace

CommandOutput cmd_extract(const fs::path& image_path, const PipelineConfig& cfg, const fs::path& out_dir)
{
    cfg.validate();
    Manifest manifest("extract", &cfg);
    manifest.input("image", image_path);
    const Raster image = resize_erp(read_image(image_path), cfg.erp);
    const DirectionGrid grid = generate_view_directions(deg_to_rad(cfg.interval_deg));
    const std::vector<double> aovs = aovs_radians(cfg);
    manifest.lap("load");

    OutputStage stage(out_dir);
    for (std::size_t i = 0; i < grid.directions.size(); ++i) {
        for (std::size_t n = 0; n < aovs.size(); ++n) {
            const std::string name = patch_file_name({i, cfg.aovs_deg[n]});
            const Patch p = extract_patch(image, make_frustum(cfg, grid.directions[i], aovs[n]), cfg.sampler);
            write_pfm(stage.path(name), p.data);
            manifest.output(name);
        }
    }
    manifest.lap("extract");
    manifest.output("manifest.json");
    write_text(stage.path("manifest.json"), manifest.dump());
    return {stage.commit(), {}};
}

CommandOutput cmd_pipeline(const PipelineInputs& in, const PipelineConfig& cfg, const fs::path& out_dir)
{
    cfg.validate();
    const auto backend = make_backend(cfg);
    Manifest manifest("pipeline", &cfg);
    manifest.input("image", in.image);
    std::vector<std::string> warnings;

    const std::optional<BiasGrid> bias = load_bias_for(cfg, in.bias_params);
    if (in.bias_params && bias) manifest.input("bias_params", *in.bias_params);

    std::optional<AttentionParams> attention;
    if (cfg.aovs_deg.size() > 1) {
        const std::size_t in_channels = attention_input_channels(cfg, *backend);
        if (in.attention_params) {
            attention = decode_osb1_attention(read_bytes(*in.attention_params));
            manifest.input("attention_params", *in.attention_params);
            if (static_cast<int>(attention->arch) != cfg.arch)
                throw ConfigError("attention file holds architecture " +
                                  std::to_string(static_cast<int>(attention->arch)) + ", config asks for " +
                                  std::to_string(cfg.arch));
            if (attention->scales() != cfg.aovs_deg.size() || attention->input_channels() != in_channels)
                throw ConfigError("attention file shapes do not match the configured aovs/backend");
        } else {
            attention = AttentionParams::make(architecture_from_int(cfg.arch), in_channels, cfg.attention_hidden,
                                              cfg.aovs_deg.size(), cfg.seed);
            warnings.push_back("no attention parameters given; using untrained seeded initialization");
        }
    }
    std::optional<FixationSet> fixations;
    if (in.fixations) {
        fixations = load_fixations_csv(*in.fixations);
        manifest.input("fixations", *in.fixations);
    }
    std::optional<Raster> gt;
    if (in.ground_truth) {
        Raster g = read_image(*in.ground_truth);
        gt = resize_erp(g.channels() == 1 ? g : g.channel(0), cfg.erp);
        manifest.input("ground_truth", *in.ground_truth);
    }
    const Raster image = read_image(in.image);
    manifest.lap("load");

    const PipelineResult result =
        run_pipeline(image, cfg, *backend, bias ? &*bias : nullptr, attention ? &*attention : nullptr);
    if (result.uncovered > 0) warnings.push_back(uncovered_warning(result.uncovered));
    manifest.lap("pipeline");

    std::optional<MetricReport> report;
    if (fixations || gt)
        report = evaluate(result.saliency, gt ? &*gt : nullptr, fixations ? &*fixations : nullptr, deg_to_rad(15.0));
    manifest.lap("evaluate");

    OutputStage stage(out_dir);
    write_pfm(stage.path("saliency.pfm"), result.saliency);
    manifest.output("saliency.pfm");
    write_png_preview(stage.path("saliency.png"), result.saliency);
    manifest.output("saliency.png");
    if (report) {
        write_text(stage.path("report.json"), report->to_json());
        manifest.output("report.json");
    }
    for (const auto& w : warnings) manifest.warning(w);
    manifest.output("manifest.json");
    write_text(stage.path("manifest.json"), manifest.dump());
    return {stage.commit(), warnings};
}

CommandOutput cmd_biasfit(const fs::path& dataset, const PipelineConfig& cfg, const fs::path& out_dir,
                          BiasObjective objective)
{
    cfg.validate();
    if (cfg.bias != BiasMode::single && cfg.bias != BiasMode::multi)
        throw ConfigError("biasfit trains 'single' or 'multi' bias grids");
    const auto backend = make_backend(cfg);
    Manifest manifest("biasfit", &cfg);
    manifest.input("dataset", dataset);
    const std::vector<SceneEntry> scenes = load_dataset(dataset);
    const DirectionGrid grid = generate_view_directions(deg_to_rad(cfg.interval_deg));
    const double aov = deg_to_rad(cfg.aovs_deg.front());
    std::vector<ViewFrustum> frusta;
    for (const Direction& d : grid.directions) frusta.push_back(make_frustum(cfg, d, aov));

    std::vector<FusedBiasScene> fused;
    std::vector<BiasSample> per_patch;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        manifest.input("scene" + std::to_string(s) + ".image", scenes[s].image);
        manifest.input("scene" + std::to_string(s) + ".saliency", scenes[s].saliency);
        auto [image, gt] = load_scene(scenes[s], cfg);
        FusedBiasScene scene;
        for (std::size_t i = 0; i < frusta.size(); ++i) {
            const PatchKey key{i, cfg.aovs_deg.front()};
            const Patch p = extract_patch(image, frusta[i], cfg.sampler);
            Raster raw = backend->predict(key, p.data);
            if (objective == BiasObjective::per_patch)
                per_patch.push_back({raw, frusta[i].direction().elevation, extract_patch(gt, frusta[i]).data});
            scene.raw.push_back(std::move(raw));
        }
        scene.target = std::move(gt);
        if (objective == BiasObjective::fused) fused.push_back(std::move(scene));
    }
    manifest.lap("prepare");

    BiasGrid init = cfg.bias == BiasMode::single ? BiasGrid::center(cfg.bias_grid_rows, cfg.bias_grid_cols)
                                                 : BiasGrid::equator(cfg.bias_grid_rows, cfg.bias_grid_cols);
    TrainConfig train = cfg.train;
    train.seed = cfg.seed;
    BiasTraining trained;
    std::vector<std::string> warnings;
    if (objective == BiasObjective::fused) {
        const ReprojectionPlan plan(frusta, cfg.erp);
        if (plan.uncovered() > 0) warnings.push_back(uncovered_warning(plan.uncovered()));
        trained = train_bias_fused(fused, plan, std::move(init), train);
    } else {
        trained = train_bias(per_patch, std::move(init), train);
    }
    manifest.lap("train");

    OutputStage stage(out_dir);
    write_bytes(stage.path("bias.osb"), encode_osb1(trained.bias));
    manifest.output("bias.osb");
    write_loss_csv(stage.path("loss.csv"), trained.losses);
    manifest.output("loss.csv");
    for (const auto& w : warnings) manifest.warning(w);
    manifest.output("manifest.json");
    write_text(stage.path("manifest.json"), manifest.dump());
    return {stage.commit(), warnings};
}

CommandOutput cmd_attnfit(const fs::path& dataset, const PipelineConfig& cfg, const fs::path& out_dir,
                          const std::optional<fs::path>& bias_params)
{
    cfg.validate();
    if (cfg.aovs_deg.size() < 2) throw ConfigError("attnfit needs at least two angles of view");
    const auto backend = make_backend(cfg);
    Manifest manifest("attnfit", &cfg);
    manifest.input("dataset", dataset);
    const std::optional<BiasGrid> bias = load_bias_for(cfg, bias_params);
    if (bias_params && bias) manifest.input("bias_params", *bias_params);
    const std::vector<SceneEntry> scenes = load_dataset(dataset);
    const DirectionGrid grid = generate_view_directions(deg_to_rad(cfg.interval_deg));
    const double aov_min = deg_to_rad(cfg.aovs_deg.front());

    std::vector<AttentionSample> samples;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        manifest.input("scene" + std::to_string(s) + ".image", scenes[s].image);
        manifest.input("scene" + std::to_string(s) + ".saliency", scenes[s].saliency);
        auto [image, gt] = load_scene(scenes[s], cfg);
        for (std::size_t i = 0; i < grid.directions.size(); ++i) {
            const Direction d = grid.directions[i];
            DirectionStack in = prepare_direction(image, i, d, cfg, *backend, bias ? &*bias : nullptr);
            Raster target = extract_patch(gt, make_frustum(cfg, d, aov_min)).data;
            if (!(sum(target.values()) > 0.0)) continue;
            samples.push_back({std::move(in.stack), std::move(in.features), std::move(target)});
        }
    }
    if (samples.empty()) throw DegenerateInputError("attnfit: every target patch is empty");
    manifest.lap("prepare");

    AttentionParams init = AttentionParams::make(architecture_from_int(cfg.arch), attention_input_channels(cfg, *backend),
                                                 cfg.attention_hidden, cfg.aovs_deg.size(), cfg.seed);
    TrainConfig train = cfg.train;
    train.seed = cfg.seed;
    const AttentionTraining trained = train_attention(samples, std::move(init), train);
    manifest.lap("train");

    OutputStage stage(out_dir);
    write_bytes(stage.path("attention.osb"), encode_osb1(trained.params));
    manifest.output("attention.osb");
    write_loss_csv(stage.path("loss.csv"), trained.losses);
    manifest.output("loss.csv");
    manifest.output("manifest.json");
    write_text(stage.path("manifest.json"), manifest.dump());
    return {stage.commit(), {}};
}

CommandOutput cmd_evaluate(const EvaluateInputs& in, const fs::path& out_dir)
{
    if (!in.ground_truth && !in.fixations) throw ConfigError("evaluate needs --gt and/or --fixations");
    if (!(in.band_width_deg > 0.0)) throw ConfigError("band width must be positive");
    Manifest manifest("evaluate", nullptr);
    manifest.input("prediction", in.prediction);
    Raster pred = read_image(in.prediction);
    if (pred.channels() != 1) pred = pred.channel(0);
    std::optional<Raster> gt;
    if (in.ground_truth) {
        Raster g = read_image(*in.ground_truth);
        gt = resize_erp(g.channels() == 1 ? g : g.channel(0), pred.shape2d());
        manifest.input("ground_truth", *in.ground_truth);
    }
    std::optional<FixationSet> fixations;
    if (in.fixations) {
        fixations = load_fixations_csv(*in.fixations);
        manifest.input("fixations", *in.fixations);
    }
    const MetricReport report =
        evaluate(pred, gt ? &*gt : nullptr, fixations ? &*fixations : nullptr, deg_to_rad(in.band_width_deg));
    manifest.lap("evaluate");

    OutputStage stage(out_dir);
    write_text(stage.path("report.json"), report.to_json());
    manifest.output("report.json");
    manifest.output("manifest.json");
    write_text(stage.path("manifest.json"), manifest.dump());
    return {stage.commit(), {}};
}

CommandOutput cmd_plotprior(const fs::path& dataset, const PipelineConfig& cfg, const fs::path& out_dir)
{
    cfg.validate();
    Manifest manifest("plotprior", &cfg);
    manifest.input("dataset", dataset);
    const std::vector<SceneEntry> scenes = load_dataset(dataset);
    std::vector<Raster> maps;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        manifest.input("scene" + std::to_string(s) + ".saliency", scenes[s].saliency);
        Raster g = read_image(scenes[s].saliency);
        maps.push_back(resize_erp(g.channels() == 1 ? g : g.channel(0), cfg.erp));
    }
    const Raster prior = average_prior(maps);
    const BiasGrid bias = constant_average_bias(prior, cfg);
    manifest.lap("prior");

    OutputStage stage(out_dir);
    write_pfm(stage.path("prior.pfm"), prior);
    manifest.output("prior.pfm");
    write_png_preview(stage.path("prior.png"), prior);
    manifest.output("prior.png");
    write_bytes(stage.path("prior_bias.osb"), encode_osb1(bias));
    manifest.output("prior_bias.osb");
    manifest.output("manifest.json");
    write_text(stage.path("manifest.json"), manifest.dump());
    return {stage.commit(), {}};
}

}  // namespace odisphere
