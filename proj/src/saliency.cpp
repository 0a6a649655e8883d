#include "odisphere/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "odisphere/error.hpp"
#include "odisphere/io.hpp"

namespace odisphere {

std::string patch_file_name(const PatchKey& key)
{
    std::ostringstream os;
    os << 'd' << key.direction_index << "_a";
    if (key.aov_deg == std::round(key.aov_deg))
        os << static_cast<long long>(std::llround(key.aov_deg));
    else
        os << key.aov_deg;
    os << ".pfm";
    return os.str();
}

std::optional<Raster> SaliencyBackend::features(const PatchKey&, const Raster&) const { return std::nullopt; }

namespace {

std::vector<double> gaussian_kernel(double sigma)
{
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (double& v : k) v /= total;
    return k;
}

}  // namespace

Raster gaussian_blur(const Raster& img, double sigma)
{
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    const std::vector<double> kernel = gaussian_kernel(sigma);
    const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto rows = static_cast<std::ptrdiff_t>(img.rows());
    const auto cols = static_cast<std::ptrdiff_t>(img.cols());
    const std::size_t channels = img.channels();
    Raster tmp(img.rows(), img.cols(), channels);
    Raster out(img.rows(), img.cols(), channels);

    for (std::size_t ch = 0; ch < channels; ++ch) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            for (std::ptrdiff_t c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                    const std::ptrdiff_t cc = std::clamp<std::ptrdiff_t>(c + k, 0, cols - 1);
                    acc += kernel[static_cast<std::size_t>(k + radius)] *
                           img(static_cast<std::size_t>(r), static_cast<std::size_t>(cc), ch);
                }
                tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) = acc;
            }
        }
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            for (std::ptrdiff_t c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
                    const std::ptrdiff_t rr = std::clamp<std::ptrdiff_t>(r + k, 0, rows - 1);
                    acc += kernel[static_cast<std::size_t>(k + radius)] *
                           tmp(static_cast<std::size_t>(rr), static_cast<std::size_t>(c), ch);
                }
                out(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) = acc;
            }
        }
    }
    return out;
}

ContrastBackend::ContrastBackend() : ContrastBackend({{1.0, 4.0}, {2.0, 8.0}, {4.0, 16.0}}) {}

ContrastBackend::ContrastBackend(std::vector<ScalePair> pairs) : pairs_(std::move(pairs))
{
    if (pairs_.empty()) throw std::invalid_argument("ContrastBackend: at least one scale pair is required");
    for (const auto& [center, surround] : pairs_) {
        if (!(center > 0.0 && surround > center))
            throw std::invalid_argument("ContrastBackend: scale pairs need 0 < center < surround");
    }
}

std::vector<Raster> ContrastBackend::responses(const Raster& image) const
{
    if (image.empty()) throw std::invalid_argument("contrast backend: empty patch");
    if (image.channels() != 1 && image.channels() != 3)
        throw std::invalid_argument("contrast backend: patches must have 1 or 3 channels");

    std::map<double, Raster> blurred;
    for (const auto& [center, surround] : pairs_) {
        for (double sigma : {center, surround})
            if (!blurred.contains(sigma)) blurred.emplace(sigma, gaussian_blur(image, sigma));
    }

    std::vector<Raster> out;
    out.reserve(pairs_.size());
    for (const auto& [center, surround] : pairs_) {
        const Raster& a = blurred.at(center);
        const Raster& b = blurred.at(surround);
        Raster response(image.rows(), image.cols(), 1);
        auto dst = response.values();
        for (std::size_t ch = 0; ch < image.channels(); ++ch) {
            const auto pa = a.plane(ch);
            const auto pb = b.plane(ch);
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += std::abs(pa[i] - pb[i]);
        }
        out.push_back(std::move(response));
    }
    return out;
}

Raster ContrastBackend::predict(const PatchKey&, const Raster& image) const
{
    const std::vector<Raster> maps = responses(image);
    Raster total(image.rows(), image.cols(), 1);
    auto dst = total.values();
    for (const Raster& m : maps) {
        const auto src = m.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    return total;
}

std::optional<Raster> ContrastBackend::features(const PatchKey&, const Raster& image) const
{
    const std::vector<Raster> maps = responses(image);
    return stack_channels(maps);
}

Raster FileBackend::predict(const PatchKey& key, const Raster& image) const
{
    const std::filesystem::path path = dir_ / patch_file_name(key);
    if (!std::filesystem::exists(path)) throw IoError("file backend: missing " + path.string());
    Raster map = read_pfm(path);
    if (map.channels() != 1) map = map.channel(0);
    if (map.rows() != image.rows() || map.cols() != image.cols())
        throw DimensionError("file backend: " + path.string() + " is " + std::to_string(map.cols()) + "x" +
                             std::to_string(map.rows()) + ", patch is " + std::to_string(image.cols()) + "x" +
                             std::to_string(image.rows()));
    if (!all_finite(map.values()) || !all_non_negative(map.values()))
        throw DegenerateInputError("file backend: " + path.string() + " holds negative or non-finite saliency");
    return map;
}

BiasGrid::BiasGrid(std::size_t grid_rows, std::size_t grid_cols, std::vector<double> elevations)
    : rows_(grid_rows), cols_(grid_cols), elevations_(std::move(elevations)),
      weights_(rows_ * cols_ * elevations_.size(), 1.0)
{
    if (rows_ == 0 || cols_ == 0 || elevations_.empty())
        throw std::invalid_argument("BiasGrid: grid and channel counts must be positive");
}

BiasGrid BiasGrid::center(std::size_t grid_rows, std::size_t grid_cols)
{
    return BiasGrid(grid_rows, grid_cols, {0.0});
}

BiasGrid BiasGrid::equator(std::size_t grid_rows, std::size_t grid_cols)
{
    return BiasGrid(grid_rows, grid_cols,
                    {deg_to_rad(-90.0), deg_to_rad(-45.0), 0.0, deg_to_rad(45.0), deg_to_rad(90.0)});
}

void BiasGrid::clamp(double floor)
{
    for (double& w : weights_) w = std::max(w, floor);
}

std::size_t select_bias_channel(const BiasGrid& bias, double elevation)
{
    const auto& el = bias.elevations();
    std::size_t best = 0;
    double best_gap = std::abs(el[0] - elevation);
    for (std::size_t k = 1; k < el.size(); ++k) {
        const double gap = std::abs(el[k] - elevation);
        if (gap < best_gap - 1e-12) {
            best = k;
            best_gap = gap;
        } else if (gap <= best_gap + 1e-12 && std::abs(el[k]) < std::abs(el[best])) {
            best = k;
            best_gap = std::min(gap, best_gap);
        }
    }
    return best;
}

BiasUpsampler::BiasUpsampler(std::size_t grid_rows, std::size_t grid_cols, std::size_t rows, std::size_t cols)
    : grid_rows_(grid_rows), grid_cols_(grid_cols), rows_(rows), cols_(cols), taps_(rows * cols)
{
    auto axis = [](std::size_t i, std::size_t n_out, std::size_t n_grid) {
        const double g = (static_cast<double>(i) + 0.5) * static_cast<double>(n_grid) / static_cast<double>(n_out) - 0.5;
        const double clamped = std::clamp(g, 0.0, static_cast<double>(n_grid - 1));
        const auto i0 = static_cast<std::size_t>(std::floor(clamped));
        const std::size_t i1 = std::min(i0 + 1, n_grid - 1);
        return std::tuple{i0, i1, clamped - static_cast<double>(i0)};
    };
    for (std::size_t r = 0; r < rows; ++r) {
        const auto [r0, r1, fr] = axis(r, rows, grid_rows);
        for (std::size_t c = 0; c < cols; ++c) {
            const auto [c0, c1, fc] = axis(c, cols, grid_cols);
            Taps& t = taps_[r * cols + c];
            t.index[0] = r0 * grid_cols + c0;
            t.index[1] = r0 * grid_cols + c1;
            t.index[2] = r1 * grid_cols + c0;
            t.index[3] = r1 * grid_cols + c1;
            t.weight[0] = (1.0 - fr) * (1.0 - fc);
            t.weight[1] = (1.0 - fr) * fc;
            t.weight[2] = fr * (1.0 - fc);
            t.weight[3] = fr * fc;
            t.frac_row = fr;
            t.frac_col = fc;
        }
    }
}

Raster BiasUpsampler::upsample(std::span<const double> grid) const
{
    if (grid.size() != grid_rows_ * grid_cols_) throw DimensionError("bias upsample: grid size mismatch");
    Raster out(rows_, cols_, 1);
    auto dst = out.values();
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        const Taps& t = taps_[i];
        // Lerp form: reproduces a constant grid exactly, so an all-ones bias is the identity.
        const double top = grid[t.index[0]] + t.frac_col * (grid[t.index[1]] - grid[t.index[0]]);
        const double bottom = grid[t.index[2]] + t.frac_col * (grid[t.index[3]] - grid[t.index[2]]);
        dst[i] = top + t.frac_row * (bottom - top);
    }
    return out;
}

void BiasUpsampler::accumulate_adjoint(const Raster& grad, std::span<double> grad_grid) const
{
    const auto g = grad.values();
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        const Taps& t = taps_[i];
        for (int k = 0; k < 4; ++k) grad_grid[t.index[k]] += t.weight[k] * g[i];
    }
}

Raster apply_bias(const Raster& raw, const BiasGrid& bias, double elevation)
{
    if (!all_non_negative(raw.values())) throw std::invalid_argument("apply_bias: raw saliency must be >= 0");
    const std::size_t k = select_bias_channel(bias, elevation);
    const BiasUpsampler up(bias.grid_rows(), bias.grid_cols(), raw.rows(), raw.cols());
    const Raster factor = up.upsample(bias.channel(k));
    Raster out = raw;
    for (std::size_t ch = 0; ch < out.channels(); ++ch) {
        auto dst = out.plane(ch);
        const auto f = factor.values();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= f[i];
    }
    return out;
}

void apply_bias_backward(const Raster& raw, const Raster& grad_out, const BiasGrid& bias, double elevation,
                         std::span<double> grad_weights)
{
    if (!raw.same_shape(grad_out)) throw DimensionError("apply_bias_backward: shape mismatch");
    if (grad_weights.size() != bias.weights().size()) throw DimensionError("apply_bias_backward: gradient size");
    const std::size_t k = select_bias_channel(bias, elevation);
    const BiasUpsampler up(bias.grid_rows(), bias.grid_cols(), raw.rows(), raw.cols());
    Raster product(raw.rows(), raw.cols(), 1);
    auto p = product.values();
    for (std::size_t ch = 0; ch < raw.channels(); ++ch) {
        const auto r = raw.plane(ch);
        const auto g = grad_out.plane(ch);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += r[i] * g[i];
    }
    const std::size_t cell_count = bias.grid_rows() * bias.grid_cols();
    up.accumulate_adjoint(product, grad_weights.subspan(k * cell_count, cell_count));
}

Raster l1_normalize(const Raster& map, Normalization mode)
{
    if (!all_non_negative(map.values())) throw std::invalid_argument("l1_normalize: map must be non-negative");
    double total = 0.0;
    if (mode == Normalization::plain) {
        total = sum(map.values());
    } else {
        const Raster w = solid_angle_weights(map.shape2d());
        for (std::size_t ch = 0; ch < map.channels(); ++ch) {
            const auto v = map.plane(ch);
            const auto wv = w.values();
            for (std::size_t i = 0; i < v.size(); ++i) total += wv[i] * v[i];
        }
    }
    if (!(total > 0.0)) throw DegenerateInputError("l1_normalize: map sums to zero");
    Raster out = map;
    for (double& v : out.values()) v /= total;
    return out;
}

}  // namespace odisphere
