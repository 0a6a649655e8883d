#include "odisphere/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace odisphere {

double wrap_azimuth(double theta)
{
    constexpr double two_pi = 2.0 * kPi;
    double t = theta - two_pi * std::floor((theta + kPi) / two_pi);
    // floor() can land exactly on the open end after rounding.
    if (t >= kPi) t -= two_pi;
    if (t < -kPi) t += two_pi;
    return t;
}

double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

Vec3 normalized(Vec3 v) { return (1.0 / norm(v)) * v; }

Direction Direction::make(double azimuth, double elevation)
{
    return {wrap_azimuth(azimuth), std::clamp(elevation, -kPi / 2, kPi / 2)};
}

Vec3 to_unit_vector(Direction d)
{
    const double ce = std::cos(d.elevation);
    return {-ce * std::cos(d.azimuth), ce * std::sin(d.azimuth), -std::sin(d.elevation)};
}

Direction from_vector(Vec3 v)
{
    const double horizontal = std::hypot(v.x, v.y);
    const double elevation = std::atan2(-v.z, horizontal);
    const double azimuth = horizontal > 0.0 ? std::atan2(v.y, -v.x) : 0.0;
    return Direction::make(azimuth, elevation);
}

double angular_distance(Direction a, Direction b)
{
    const Vec3 u = to_unit_vector(a);
    const Vec3 v = to_unit_vector(b);
    return std::atan2(norm(cross(u, v)), dot(u, v));
}

TangentBasis tangent_basis(Direction d)
{
    const double st = std::sin(d.azimuth);
    const double ct = std::cos(d.azimuth);
    const double sp = std::sin(d.elevation);
    const double cp = std::cos(d.elevation);
    TangentBasis b;
    b.x_axis = {-st, -ct, 0.0};
    b.y_axis = {-sp * ct, sp * st, cp};
    b.view_axis = cross(b.x_axis, b.y_axis);
    return b;
}

double focal_length(double aov, double size_px)
{
    if (!(aov > 0.0 && aov < kPi)) throw std::invalid_argument("angle of view must lie in (0, pi)");
    return size_px / (2.0 * std::tan(0.5 * aov));
}

ViewFrustum::ViewFrustum(Direction direction, double aov_x, double aov_y, std::size_t width,
                         std::size_t height)
    : direction_(Direction::make(direction.azimuth, direction.elevation)),
      aov_x_(aov_x),
      aov_y_(aov_y),
      width_(width),
      height_(height),
      focal_x_(focal_length(aov_x, static_cast<double>(width))),
      focal_y_(focal_length(aov_y, static_cast<double>(height))),
      basis_(tangent_basis(direction_))
{
    if (width < 2 || height < 2) throw std::invalid_argument("patch must be at least 2x2 pixels");
}

std::optional<PatchCoord> ViewFrustum::project(Vec3 v) const
{
    const double depth = dot(v, basis_.view_axis);
    if (!(depth > 0.0)) return std::nullopt;
    const double x = center_x() + focal_x_ * dot(v, basis_.x_axis) / depth;
    const double y = center_y() + focal_y_ * dot(v, basis_.y_axis) / depth;
    constexpr double slack = 1e-9;
    if (x < -0.5 - slack || x > static_cast<double>(width_) - 0.5 + slack) return std::nullopt;
    if (y < -0.5 - slack || y > static_cast<double>(height_) - 0.5 + slack) return std::nullopt;
    return PatchCoord{x, y};
}

Direction patch_to_sphere(const ViewFrustum& f, PatchCoord px) { return from_vector(f.ray(px)); }

std::optional<PatchCoord> sphere_to_patch(const ViewFrustum& f, Direction d)
{
    return f.project(to_unit_vector(d));
}

Direction erp_to_sphere(ErpSize size, ErpCoord px)
{
    const double theta = ((px.col + 0.5) / static_cast<double>(size.cols) - 0.5) * 2.0 * kPi;
    const double phi = (0.5 - (px.row + 0.5) / static_cast<double>(size.rows)) * kPi;
    return Direction::make(theta, phi);
}

ErpCoord sphere_to_erp(ErpSize size, Direction d)
{
    const double theta = wrap_azimuth(d.azimuth);
    const double phi = std::clamp(d.elevation, -kPi / 2, kPi / 2);
    ErpCoord px;
    px.col = (theta / (2.0 * kPi) + 0.5) * static_cast<double>(size.cols) - 0.5;
    px.row = (0.5 - phi / kPi) * static_cast<double>(size.rows) - 0.5;
    return px;
}

}  // namespace odisphere
