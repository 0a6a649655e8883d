#include "odisphere/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace odisphere {

Raster::Raster(std::size_t rows, std::size_t cols, std::size_t channels, double fill)
    : rows_(rows), cols_(cols), channels_(channels), data_(rows * cols * channels, fill)
{
}

Raster Raster::channel(std::size_t ch) const
{
    Raster out(rows_, cols_, 1);
    const auto src = plane(ch);
    std::copy(src.begin(), src.end(), out.values().begin());
    return out;
}

Raster stack_channels(std::span<const Raster> planes)
{
    if (planes.empty()) throw std::invalid_argument("stack_channels: no planes");
    const std::size_t rows = planes.front().rows();
    const std::size_t cols = planes.front().cols();
    Raster out(rows, cols, planes.size());
    for (std::size_t k = 0; k < planes.size(); ++k) {
        if (planes[k].rows() != rows || planes[k].cols() != cols || planes[k].channels() != 1)
            throw std::invalid_argument("stack_channels: planes must be single-channel and equally sized");
        std::copy(planes[k].values().begin(), planes[k].values().end(), out.plane(k).begin());
    }
    return out;
}

double sum(std::span<const double> values) { return std::accumulate(values.begin(), values.end(), 0.0); }

bool all_finite(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

bool all_non_negative(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return v >= 0.0; });
}

namespace {

std::size_t wrap_index(std::ptrdiff_t i, std::size_t n)
{
    const auto m = static_cast<std::ptrdiff_t>(n);
    std::ptrdiff_t r = i % m;
    return static_cast<std::size_t>(r < 0 ? r + m : r);
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n)
{
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

}  // namespace

double sample_erp_bilinear(const Raster& erp, std::size_t ch, ErpCoord px)
{
    const double r0f = std::floor(px.row);
    const double c0f = std::floor(px.col);
    const double fr = px.row - r0f;
    const double fc = px.col - c0f;
    const auto r0 = static_cast<std::ptrdiff_t>(r0f);
    const auto c0 = static_cast<std::ptrdiff_t>(c0f);
    const std::size_t ra = clamp_index(r0, erp.rows());
    const std::size_t rb = clamp_index(r0 + 1, erp.rows());
    const std::size_t ca = wrap_index(c0, erp.cols());
    const std::size_t cb = wrap_index(c0 + 1, erp.cols());
    const double top = (1.0 - fc) * erp(ra, ca, ch) + fc * erp(ra, cb, ch);
    const double bottom = (1.0 - fc) * erp(rb, ca, ch) + fc * erp(rb, cb, ch);
    return (1.0 - fr) * top + fr * bottom;
}

double sample_erp_nearest(const Raster& erp, std::size_t ch, ErpCoord px)
{
    const auto r = static_cast<std::ptrdiff_t>(std::floor(px.row + 0.5));
    const auto c = static_cast<std::ptrdiff_t>(std::floor(px.col + 0.5));
    return erp(clamp_index(r, erp.rows()), wrap_index(c, erp.cols()), ch);
}

double sample_clamped_bilinear(const Raster& img, std::size_t ch, double row, double col)
{
    const double maxr = static_cast<double>(img.rows() - 1);
    const double maxc = static_cast<double>(img.cols() - 1);
    row = std::clamp(row, 0.0, maxr);
    col = std::clamp(col, 0.0, maxc);
    const auto r0 = static_cast<std::size_t>(std::floor(row));
    const auto c0 = static_cast<std::size_t>(std::floor(col));
    const std::size_t r1 = std::min(r0 + 1, img.rows() - 1);
    const std::size_t c1 = std::min(c0 + 1, img.cols() - 1);
    const double fr = row - static_cast<double>(r0);
    const double fc = col - static_cast<double>(c0);
    const double top = (1.0 - fc) * img(r0, c0, ch) + fc * img(r0, c1, ch);
    const double bottom = (1.0 - fc) * img(r1, c0, ch) + fc * img(r1, c1, ch);
    return (1.0 - fr) * top + fr * bottom;
}

Raster solid_angle_weights(ErpSize size)
{
    if (size.rows < 2 || size.cols < 2) throw std::invalid_argument("ERP grid must be at least 2x2");
    Raster w(size.rows, size.cols, 1);
    double total = 0.0;
    std::vector<double> row_weight(size.rows);
    for (std::size_t r = 0; r < size.rows; ++r) {
        const double phi = erp_to_sphere(size, {static_cast<double>(r), 0.0}).elevation;
        row_weight[r] = std::cos(phi);
        total += row_weight[r] * static_cast<double>(size.cols);
    }
    for (std::size_t r = 0; r < size.rows; ++r)
        for (std::size_t c = 0; c < size.cols; ++c) w(r, c) = row_weight[r] / total;
    return w;
}

}  // namespace odisphere
