#include "odisphere/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odisphere::reference {

Patch extract_patch(const Raster& erp, const ViewFrustum& f, Sampler sampler)
{
    Patch patch{f, Raster(f.height(), f.width(), erp.channels())};
    for (std::size_t y = 0; y < f.height(); ++y) {
        for (std::size_t x = 0; x < f.width(); ++x) {
            const Direction d = patch_to_sphere(f, {static_cast<double>(x), static_cast<double>(y)});
            const ErpCoord src = sphere_to_erp(erp.shape2d(), d);
            for (std::size_t ch = 0; ch < erp.channels(); ++ch)
                patch.data(y, x, ch) = sampler == Sampler::bilinear ? sample_erp_bilinear(erp, ch, src)
                                                                    : sample_erp_nearest(erp, ch, src);
        }
    }
    return patch;
}


Reprojection reproject_average(std::span<const Patch> patches, ErpSize erp)
{
    const std::size_t channels = patches.front().data.channels();
    Reprojection out{Raster(erp.rows, erp.cols, channels), 0};
    for (std::size_t r = 0; r < erp.rows; ++r) {
        for (std::size_t c = 0; c < erp.cols; ++c) {
            const Direction d = erp_to_sphere(erp, {static_cast<double>(r), static_cast<double>(c)});
            std::vector<double> acc(channels, 0.0);
            std::size_t count = 0;
            for (const Patch& p : patches) {
                const auto px = sphere_to_patch(p.frustum, d);
                if (!px) continue;
                const auto x = static_cast<std::size_t>(
                    std::clamp(std::round(px->x), 0.0, static_cast<double>(p.frustum.width() - 1)));
                const auto y = static_cast<std::size_t>(
                    std::clamp(std::round(px->y), 0.0, static_cast<double>(p.frustum.height() - 1)));
                for (std::size_t ch = 0; ch < channels; ++ch) acc[ch] += p.data(y, x, ch);
                ++count;
            }
            if (count == 0) {
                ++out.uncovered;
                continue;
            }
            for (std::size_t ch = 0; ch < channels; ++ch) out.map(r, c, ch) = acc[ch] / static_cast<double>(count);
        }
    }
    return out;
}

Raster gaussian_blur(const Raster& img, double sigma)
{
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
    const auto rows = static_cast<std::ptrdiff_t>(img.rows());
    const auto cols = static_cast<std::ptrdiff_t>(img.cols());
    double norm1d = 0.0;
    for (std::ptrdiff_t k = -radius; k <= radius; ++k) norm1d += std::exp(-0.5 * double(k * k) / (sigma * sigma));
    Raster out(img.rows(), img.cols(), img.channels());
    for (std::size_t ch = 0; ch < img.channels(); ++ch) {
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            for (std::ptrdiff_t c = 0; c < cols; ++c) {
                double acc = 0.0;
                for (std::ptrdiff_t dy = -radius; dy <= radius; ++dy) {
                    for (std::ptrdiff_t dx = -radius; dx <= radius; ++dx) {
                        const double w = std::exp(-0.5 * double(dy * dy + dx * dx) / (sigma * sigma));
                        const auto rr = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r + dy, 0, rows - 1));
                        const auto cc = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c + dx, 0, cols - 1));
                        acc += w * img(rr, cc, ch);
                    }
                }
                out(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ch) = acc / (norm1d * norm1d);
            }
        }
    }
    return out;
}

Raster conv2d(const Raster& input, const ConvLayer& layer)
{
    if (input.channels() != layer.in_channels) throw std::invalid_argument("reference conv2d: channel mismatch");
    const auto rows = static_cast<std::ptrdiff_t>(input.rows());
    const auto cols = static_cast<std::ptrdiff_t>(input.cols());
    const auto pr = static_cast<std::ptrdiff_t>((layer.kernel_rows - 1) / 2);
    const auto pc = static_cast<std::ptrdiff_t>((layer.kernel_cols - 1) / 2);
    Raster out(input.rows(), input.cols(), layer.out_channels);
    for (std::size_t o = 0; o < layer.out_channels; ++o) {
        for (std::ptrdiff_t y = 0; y < rows; ++y) {
            for (std::ptrdiff_t x = 0; x < cols; ++x) {
                double acc = layer.bias[o];
                for (std::size_t i = 0; i < layer.in_channels; ++i) {
                    for (std::size_t kr = 0; kr < layer.kernel_rows; ++kr) {
                        for (std::size_t kc = 0; kc < layer.kernel_cols; ++kc) {
                            const std::ptrdiff_t yy = y + static_cast<std::ptrdiff_t>(kr) - pr;
                            const std::ptrdiff_t xx = x + static_cast<std::ptrdiff_t>(kc) - pc;
                            if (yy < 0 || yy >= rows || xx < 0 || xx >= cols) continue;
                            acc += layer.weight(o, i, kr, kc) *
                                   input(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), i);
                        }
                    }
                }
                out(static_cast<std::size_t>(y), static_cast<std::size_t>(x), o) = acc;
            }
        }
    }
    return out;
}

}  // namespace odisphere::reference
