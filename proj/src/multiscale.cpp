#include "odisphere/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "odisphere/error.hpp"
#include "odisphere/geometry.hpp"

namespace odisphere {

double crop_half_width(double aov, double aov_min, std::size_t size_px)
{
    return focal_length(aov, static_cast<double>(size_px)) * std::tan(0.5 * aov_min);
}

ScaleStack crop_resize_to_smallest(std::span<const Raster> maps, std::span<const double> aovs)
{
    if (maps.empty() || maps.size() != aovs.size())
        throw std::invalid_argument("crop_resize_to_smallest: need one aov per map");
    const std::size_t rows = maps.front().rows();
    const std::size_t cols = maps.front().cols();
    for (std::size_t n = 0; n < maps.size(); ++n) {
        if (maps[n].rows() != rows || maps[n].cols() != cols || maps[n].channels() != 1)
            throw std::invalid_argument("crop_resize_to_smallest: maps must be single-channel and equally sized");
        if (!(aovs[n] > 0.0 && aovs[n] < kPi)) throw std::invalid_argument("crop_resize_to_smallest: aov out of range");
        if (n > 0 && !(aovs[n] > aovs[n - 1]))
            throw std::invalid_argument(
                "crop_resize_to_smallest: angles of view must be strictly increasing (the first one is the reference)");
    }

    ScaleStack stack;
    stack.aovs.assign(aovs.begin(), aovs.end());
    stack.maps = Raster(rows, cols, maps.size());
    const double cy = 0.5 * static_cast<double>(rows - 1);
    const double cx = 0.5 * static_cast<double>(cols - 1);
    const double aov_min = aovs.front();
    for (std::size_t n = 0; n < maps.size(); ++n) {
        auto dst = stack.maps.plane(n);
        if (n == 0) {
            std::copy(maps[0].values().begin(), maps[0].values().end(), dst.begin());
            continue;
        }
        // Gnomonic planes sharing an axis differ by a pure scale.
        const double ratio = std::tan(0.5 * aov_min) / std::tan(0.5 * aovs[n]);
        for (std::size_t y = 0; y < rows; ++y) {
            const double sy = cy + (static_cast<double>(y) - cy) * ratio;
            for (std::size_t x = 0; x < cols; ++x) {
                const double sx = cx + (static_cast<double>(x) - cx) * ratio;
                dst[y * cols + x] = sample_clamped_bilinear(maps[n], 0, sy, sx);
            }
        }
    }
    return stack;
}

Architecture architecture_from_int(int arch)
{
    if (arch < 1 || arch > 4) throw ConfigError("attention architecture must be 1, 2, 3 or 4");
    return static_cast<Architecture>(arch);
}

bool uses_features(Architecture arch)
{
    return arch == Architecture::shallow_features || arch == Architecture::deep_features;
}

ConvLayer::ConvLayer(std::size_t in, std::size_t out, std::size_t kr, std::size_t kc)
    : in_channels(in), out_channels(out), kernel_rows(kr), kernel_cols(kc), weights(out * in * kr * kc, 0.0),
      bias(out, 0.0)
{
}

namespace {

// "Same" zero padding; even kernels get the extra row/column at the bottom/right.
constexpr std::ptrdiff_t pad_before(std::size_t k) { return static_cast<std::ptrdiff_t>((k - 1) / 2); }

void check_conv_input(const Raster& input, const ConvLayer& layer)
{
    if (input.channels() != layer.in_channels)
        throw DimensionError("conv2d: input has " + std::to_string(input.channels()) + " channels, layer expects " +
                             std::to_string(layer.in_channels));
}

}  // namespace

Raster conv2d(const Raster& input, const ConvLayer& layer)
{
    check_conv_input(input, layer);
    const auto rows = static_cast<std::ptrdiff_t>(input.rows());
    const auto cols = static_cast<std::ptrdiff_t>(input.cols());
    const std::ptrdiff_t pr = pad_before(layer.kernel_rows);
    const std::ptrdiff_t pc = pad_before(layer.kernel_cols);
    Raster out(input.rows(), input.cols(), layer.out_channels);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(layer.out_channels); ++o) {
        const auto oc = static_cast<std::size_t>(o);
        auto dst = out.plane(oc);
        std::fill(dst.begin(), dst.end(), layer.bias[oc]);
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const auto src = input.plane(i);
            for (std::size_t kr = 0; kr < layer.kernel_rows; ++kr) {
                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(kr) - pr;
                for (std::size_t kc = 0; kc < layer.kernel_cols; ++kc) {
                    const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kc) - pc;
                    const double w = layer.weight(oc, i, kr, kc);
                    if (w == 0.0) continue;
                    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
                    const std::ptrdiff_t y1 = std::min(rows, rows - dy);
                    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
                    const std::ptrdiff_t x1 = std::min(cols, cols - dx);
                    for (std::ptrdiff_t y = y0; y < y1; ++y) {
                        double* d = dst.data() + y * cols;
                        const double* s = src.data() + (y + dy) * cols + dx;
                        for (std::ptrdiff_t x = x0; x < x1; ++x) d[x] += w * s[x];
                    }
                }
            }
        }
    }
    return out;
}

void conv2d_backward(const Raster& input, const ConvLayer& layer, const Raster& grad_output, ConvLayer& grad_layer,
                     Raster* grad_input)
{
    check_conv_input(input, layer);
    if (grad_output.channels() != layer.out_channels || grad_output.rows() != input.rows() ||
        grad_output.cols() != input.cols())
        throw DimensionError("conv2d_backward: gradient shape mismatch");
    const auto rows = static_cast<std::ptrdiff_t>(input.rows());
    const auto cols = static_cast<std::ptrdiff_t>(input.cols());
    const std::ptrdiff_t pr = pad_before(layer.kernel_rows);
    const std::ptrdiff_t pc = pad_before(layer.kernel_cols);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(layer.out_channels); ++o) {
        const auto oc = static_cast<std::size_t>(o);
        const auto g = grad_output.plane(oc);
        grad_layer.bias[oc] += sum(g);
        for (std::size_t i = 0; i < layer.in_channels; ++i) {
            const auto src = input.plane(i);
            for (std::size_t kr = 0; kr < layer.kernel_rows; ++kr) {
                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(kr) - pr;
                for (std::size_t kc = 0; kc < layer.kernel_cols; ++kc) {
                    const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kc) - pc;
                    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
                    const std::ptrdiff_t y1 = std::min(rows, rows - dy);
                    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
                    const std::ptrdiff_t x1 = std::min(cols, cols - dx);
                    double acc = 0.0;
                    for (std::ptrdiff_t y = y0; y < y1; ++y) {
                        const double* gg = g.data() + y * cols;
                        const double* s = src.data() + (y + dy) * cols + dx;
                        for (std::ptrdiff_t x = x0; x < x1; ++x) acc += gg[x] * s[x];
                    }
                    grad_layer.weight(oc, i, kr, kc) += acc;
                }
            }
        }
    }

    if (grad_input == nullptr) return;
    *grad_input = Raster(input.rows(), input.cols(), input.channels());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(layer.in_channels); ++i) {
        const auto ic = static_cast<std::size_t>(i);
        auto dst = grad_input->plane(ic);
        for (std::size_t o = 0; o < layer.out_channels; ++o) {
            const auto g = grad_output.plane(o);
            for (std::size_t kr = 0; kr < layer.kernel_rows; ++kr) {
                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(kr) - pr;
                for (std::size_t kc = 0; kc < layer.kernel_cols; ++kc) {
                    const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kc) - pc;
                    const double w = layer.weight(o, ic, kr, kc);
                    if (w == 0.0) continue;
                    const std::ptrdiff_t y0 = std::max<std::ptrdiff_t>(0, -dy);
                    const std::ptrdiff_t y1 = std::min(rows, rows - dy);
                    const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
                    const std::ptrdiff_t x1 = std::min(cols, cols - dx);
                    for (std::ptrdiff_t y = y0; y < y1; ++y) {
                        const double* gg = g.data() + y * cols;
                        double* d = dst.data() + (y + dy) * cols + dx;
                        for (std::ptrdiff_t x = x0; x < x1; ++x) d[x] += w * gg[x];
                    }
                }
            }
        }
    }
}

AttentionParams AttentionParams::make(Architecture arch, std::size_t in_channels, std::size_t hidden,
                                      std::size_t scales, std::uint64_t seed)
{
    if (in_channels == 0 || hidden == 0 || scales == 0)
        throw std::invalid_argument("AttentionParams: channel counts must be positive");
    AttentionParams p;
    p.arch = arch;
    if (arch == Architecture::shallow_maps || arch == Architecture::shallow_features) {
        p.layers.emplace_back(in_channels, hidden, 3, 3);
        p.layers.emplace_back(hidden, scales, 2, 2);
    } else {
        p.layers.emplace_back(in_channels, hidden, 1, 1);
        p.layers.emplace_back(hidden, hidden, 3, 3);
        p.layers.emplace_back(hidden, 4 * hidden, 1, 1);
        p.layers.emplace_back(4 * hidden, scales, 1, 1);
    }
    std::mt19937_64 rng(seed);
    for (ConvLayer& layer : p.layers) {
        const double fan_in = static_cast<double>(layer.in_channels * layer.kernel_rows * layer.kernel_cols);
        std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
        for (double& w : layer.weights) w = dist(rng);
        for (double& b : layer.bias) b = dist(rng);
    }
    return p;
}

AttentionParams AttentionParams::zeros_like() const
{
    AttentionParams z;
    z.arch = arch;
    for (const ConvLayer& l : layers) z.layers.emplace_back(l.in_channels, l.out_channels, l.kernel_rows, l.kernel_cols);
    return z;
}

std::size_t AttentionParams::parameter_count() const
{
    std::size_t n = 0;
    for (const ConvLayer& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

std::vector<double> AttentionParams::flatten() const
{
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const ConvLayer& l : layers) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.bias.begin(), l.bias.end());
    }
    return flat;
}

void AttentionParams::assign(std::span<const double> flat)
{
    if (flat.size() != parameter_count()) throw DimensionError("AttentionParams::assign: size mismatch");
    auto it = flat.begin();
    for (ConvLayer& l : layers) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(l.weights.size()), l.weights.begin());
        it += static_cast<std::ptrdiff_t>(l.weights.size());
        std::copy(it, it + static_cast<std::ptrdiff_t>(l.bias.size()), l.bias.begin());
        it += static_cast<std::ptrdiff_t>(l.bias.size());
    }
}

Raster resize_bilinear(const Raster& img, std::size_t rows, std::size_t cols)
{
    if (img.rows() == rows && img.cols() == cols) return img;
    Raster out(rows, cols, img.channels());
    const double sy = static_cast<double>(img.rows()) / static_cast<double>(rows);
    const double sx = static_cast<double>(img.cols()) / static_cast<double>(cols);
    for (std::size_t ch = 0; ch < img.channels(); ++ch)
        for (std::size_t y = 0; y < rows; ++y)
            for (std::size_t x = 0; x < cols; ++x)
                out(y, x, ch) = sample_clamped_bilinear(img, ch, (static_cast<double>(y) + 0.5) * sy - 0.5,
                                                        (static_cast<double>(x) + 0.5) * sx - 0.5);
    return out;
}

Raster attention_input(const ScaleStack& stack, const AttentionParams& params, const Raster* features)
{
    if (params.layers.empty()) throw std::invalid_argument("attention: empty parameter set");
    if (params.scales() != stack.depth())
        throw DimensionError("attention: parameters produce " + std::to_string(params.scales()) +
                             " weights for a stack of " + std::to_string(stack.depth()));
    if (!uses_features(params.arch)) {
        if (params.input_channels() != stack.depth()) throw DimensionError("attention: map input channel mismatch");
        return stack.maps;
    }
    if (features == nullptr)
        throw std::invalid_argument("attention: architectures 3 and 4 need the backend feature map");
    if (features->channels() != params.input_channels())
        throw DimensionError("attention: feature map has " + std::to_string(features->channels()) +
                             " channels, parameters expect " + std::to_string(params.input_channels()));
    return resize_bilinear(*features, stack.maps.rows(), stack.maps.cols());
}

void softmax_channels(Raster& logits)
{
    const std::size_t n = logits.channels();
    const std::size_t plane = logits.plane_size();
    auto v = logits.values();
    for (std::size_t p = 0; p < plane; ++p) {
        double peak = v[p];
        for (std::size_t k = 1; k < n; ++k) peak = std::max(peak, v[k * plane + p]);
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double e = std::exp(v[k * plane + p] - peak);
            v[k * plane + p] = e;
            total += e;
        }
        for (std::size_t k = 0; k < n; ++k) v[k * plane + p] /= total;
    }
}

AttentionTrace attention_forward_traced(const ScaleStack& stack, const AttentionParams& params,
                                        const Raster* features)
{
    AttentionTrace trace;
    trace.input = attention_input(stack, params, features);
    const Raster* x = &trace.input;
    Raster activated;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        trace.pre_activations.push_back(conv2d(*x, params.layers[l]));
        if (l + 1 < params.layers.size()) {
            activated = trace.pre_activations.back();
            for (double& a : activated.values()) a = std::max(a, 0.0);
            x = &activated;
        }
    }
    trace.weights = trace.pre_activations.back();
    softmax_channels(trace.weights);
    return trace;
}

Raster attention_forward(const ScaleStack& stack, const AttentionParams& params, const Raster* features)
{
    return attention_forward_traced(stack, params, features).weights;
}

AttentionParams attention_backward(const AttentionTrace& trace, const AttentionParams& params,
                                   const Raster& grad_weights)
{
    if (!grad_weights.same_shape(trace.weights)) throw DimensionError("attention_backward: gradient shape mismatch");
    AttentionParams grad = params.zeros_like();

    // Softmax: dz_n = w_n (g_n - sum_m w_m g_m).
    Raster delta(trace.weights.rows(), trace.weights.cols(), trace.weights.channels());
    {
        const std::size_t n = trace.weights.channels();
        const std::size_t plane = trace.weights.plane_size();
        const auto w = trace.weights.values();
        const auto g = grad_weights.values();
        auto d = delta.values();
        for (std::size_t p = 0; p < plane; ++p) {
            double dotwg = 0.0;
            for (std::size_t k = 0; k < n; ++k) dotwg += w[k * plane + p] * g[k * plane + p];
            for (std::size_t k = 0; k < n; ++k) d[k * plane + p] = w[k * plane + p] * (g[k * plane + p] - dotwg);
        }
    }

    for (std::size_t l = params.layers.size(); l-- > 0;) {
        Raster layer_input;
        if (l == 0) {
            layer_input = trace.input;
        } else {
            layer_input = trace.pre_activations[l - 1];
            for (double& a : layer_input.values()) a = std::max(a, 0.0);
        }
        Raster grad_input;
        conv2d_backward(layer_input, params.layers[l], delta, grad.layers[l], l > 0 ? &grad_input : nullptr);
        if (l == 0) break;
        const auto pre = trace.pre_activations[l - 1].values();
        auto gi = grad_input.values();
        for (std::size_t i = 0; i < gi.size(); ++i)
            if (!(pre[i] > 0.0)) gi[i] = 0.0;
        delta = std::move(grad_input);
    }
    return grad;
}

Raster integrate(const ScaleStack& stack, const Raster& weights)
{
    if (!weights.same_shape(stack.maps)) throw DimensionError("integrate: weights and stack differ in shape");
    Raster out(stack.maps.rows(), stack.maps.cols(), 1);
    auto dst = out.values();
    for (std::size_t n = 0; n < stack.depth(); ++n) {
        const auto m = stack.maps.plane(n);
        const auto w = weights.plane(n);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w[i] * m[i];
    }
    return out;
}

Raster integrate_backward_weights(const ScaleStack& stack, const Raster& grad_out)
{
    Raster g(stack.maps.rows(), stack.maps.cols(), stack.depth());
    const auto go = grad_out.values();
    for (std::size_t n = 0; n < stack.depth(); ++n) {
        const auto m = stack.maps.plane(n);
        auto dst = g.plane(n);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = go[i] * m[i];
    }
    return g;
}

}  // namespace odisphere
