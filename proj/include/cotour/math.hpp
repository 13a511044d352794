#pragma once

#include <array>
#include <cmath>
#include <compare>

namespace cotour {

/// Right-handed, Y-up, meters.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;

    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
    friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
    friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
    friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
    friend Vec3 operator*(double s, Vec3 a) { return a *= s; }

    static constexpr Vec3 ones() { return {1.0, 1.0, 1.0}; }
    static constexpr Vec3 uniform(double s) { return {s, s, s}; }
};

inline Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }
inline Vec3 divide(const Vec3& a, const Vec3& b) { return {a.x / b.x, a.y / b.y, a.z / b.z}; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Unit quaternion, Hamilton convention, stored (w, x, y, z).
struct Quat {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Quat&, const Quat&) = default;

    static constexpr Quat identity() { return {}; }
    static Quat from_axis_angle(const Vec3& axis, double radians);
    /// Rotation about +Y.
    static Quat yaw(double radians) { return from_axis_angle({0.0, 1.0, 0.0}, radians); }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat conjugate() const { return {w, -x, -y, -z}; }
    Quat normalized() const;
    Vec3 rotate(const Vec3& v) const;
};

Quat operator*(const Quat& a, const Quat& b);
double dot(const Quat& a, const Quat& b);
Quat slerp(const Quat& a, const Quat& b, double t);

/// Position, rotation and per-axis scale of a node relative to its parent frame.
struct Pose {
    Vec3 position{};
    Quat rotation{};
    Vec3 scale = Vec3::ones();

    friend bool operator==(const Pose&, const Pose&) = default;

    static Pose identity() { return {}; }
    static Pose at(const Vec3& p) { return {p, Quat::identity(), Vec3::ones()}; }
};

/// Scale, then rotate, then translate. Scales multiply component-wise and the
/// resulting rotation is renormalized.
Pose compose(const Pose& parent_world, const Pose& child_local);

/// Inverse of compose: the local pose that places `world` under `parent_world`.
/// Throws FrameError if any parent scale component is not strictly positive.
Pose to_local(const Pose& world, const Pose& parent_world);

bool is_finite(const Pose& p);
bool has_positive_scale(const Pose& p);
bool is_uniform_scale(const Vec3& s, double tolerance = 1e-12);

/// Row-major 4x4 matrix, used for projection.
struct Mat4 {
    std::array<std::array<double, 4>, 4> m{};

    static Mat4 identity();
    static Mat4 from_pose(const Pose& p);
    /// OpenGL-style perspective: clip-space z in [-w, w], camera looks down -Z.
    static Mat4 perspective(double fovy_radians, double aspect, double near_plane, double far_plane);
    static Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

    double determinant() const;
    std::array<double, 4> operator*(const std::array<double, 4>& v) const;
    friend Mat4 operator*(const Mat4& a, const Mat4& b);
};

} // namespace cotour
