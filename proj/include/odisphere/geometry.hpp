#pragma once

// Coordinate conventions shared by the whole toolkit.
//
// A direction on the sphere is (azimuth, elevation) in radians with azimuth in
// [-pi, pi) and elevation in [-pi/2, pi/2] measured from the equator. The 3D
// unit vector of a direction is the view axis of its tangent basis, so the
// tangent basis, the patch projection and the ERP mapping all agree.
//
// Rasters index from the top-left corner; continuous coordinates put pixel
// centers at integers (pixel (r, c) covers [r-0.5, r+0.5] x [c-0.5, c+0.5]).

#include <cstddef>
#include <numbers>
#include <optional>

namespace odisphere {

inline constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle into [-pi, pi).
double wrap_azimuth(double theta);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(Vec3 v);
Vec3 normalized(Vec3 v);

struct Direction {
    double azimuth = 0.0;
    double elevation = 0.0;

    /// Builds a direction, wrapping azimuth and clamping elevation to the poles.
    static Direction make(double azimuth, double elevation);
};

/// Unit vector of a direction (the view axis of its tangent basis).
Vec3 to_unit_vector(Direction d);
/// Inverse of to_unit_vector; the input need not be normalized.
Direction from_vector(Vec3 v);

/// Great-circle angle between two directions.
double angular_distance(Direction a, Direction b);

/// Orthonormal right-handed basis of the tangent plane at a viewing direction.
/// x_axis points along increasing patch column, y_axis along increasing patch
/// row (towards lower elevation), view_axis = x_axis cross y_axis.
struct TangentBasis {
    Vec3 x_axis;
    Vec3 y_axis;
    Vec3 view_axis;
};

TangentBasis tangent_basis(Direction d);

/// Distance from the camera to the image plane, in pixels, for a patch of
/// `size_px` pixels spanning `aov` radians: size / (2 tan(aov / 2)).
/// Throws std::invalid_argument unless 0 < aov < pi.
double focal_length(double aov, double size_px);

struct PatchCoord {
    double x = 0.0;  // column
    double y = 0.0;  // row
};

/// A viewing direction plus angles of view and the patch raster size.
class ViewFrustum {
public:
    ViewFrustum(Direction direction, double aov_x, double aov_y, std::size_t width,
                std::size_t height);

    static ViewFrustum square(Direction direction, double aov, std::size_t size)
    {
        return ViewFrustum(direction, aov, aov, size, size);
    }

    Direction direction() const { return direction_; }
    double aov_x() const { return aov_x_; }
    double aov_y() const { return aov_y_; }
    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    double focal_x() const { return focal_x_; }
    double focal_y() const { return focal_y_; }
    const TangentBasis& basis() const { return basis_; }
    double center_x() const { return 0.5 * static_cast<double>(width_ - 1); }
    double center_y() const { return 0.5 * static_cast<double>(height_ - 1); }

    /// Unnormalized ray through a continuous patch coordinate.
    Vec3 ray(PatchCoord px) const
    {
        return basis_.view_axis + ((px.x - center_x()) / focal_x_) * basis_.x_axis +
               ((px.y - center_y()) / focal_y_) * basis_.y_axis;
    }

    /// Projects a (not necessarily unit) vector onto the patch plane. Returns
    /// nothing behind the camera or outside the pixel footprint
    /// [-0.5, W-0.5] x [-0.5, H-0.5].
    std::optional<PatchCoord> project(Vec3 v) const;

private:
    Direction direction_;
    double aov_x_;
    double aov_y_;
    std::size_t width_;
    std::size_t height_;
    double focal_x_;
    double focal_y_;
    TangentBasis basis_;
};

Direction patch_to_sphere(const ViewFrustum& f, PatchCoord px);
std::optional<PatchCoord> sphere_to_patch(const ViewFrustum& f, Direction d);

struct ErpSize {
    std::size_t rows = 0;
    std::size_t cols = 0;

    bool operator==(const ErpSize&) const = default;
};

struct ErpCoord {
    double row = 0.0;
    double col = 0.0;
};

Direction erp_to_sphere(ErpSize size, ErpCoord px);
/// Inverse of erp_to_sphere. Columns wrap into [-0.5, cols-0.5), rows are
/// clamped to [-0.5, rows-0.5].
ErpCoord sphere_to_erp(ErpSize size, Direction d);

}  // namespace odisphere
