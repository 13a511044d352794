#include "cotour/math.hpp"

#include "cotour/frame_tree.hpp"

#include <algorithm>

namespace cotour {

Quat Quat::from_axis_angle(const Vec3& axis, double radians)
{
    const double n = cotour::norm(axis);
    if (n == 0.0) {
        return identity();
    }
    const double s = std::sin(radians / 2.0) / n;
    return Quat{std::cos(radians / 2.0), axis.x * s, axis.y * s, axis.z * s}.normalized();
}

Quat Quat::normalized() const
{
    const double n = norm();
    if (n == 0.0 || !std::isfinite(n)) {
        return identity();
    }
    return {w / n, x / n, y / n, z / n};
}

Vec3 Quat::rotate(const Vec3& v) const
{
    // v' = v + 2w(u x v) + 2u x (u x v), u = (x, y, z)
    const Vec3 u{x, y, z};
    const Vec3 t = 2.0 * cross(u, v);
    return v + w * t + cross(u, t);
}

Quat operator*(const Quat& a, const Quat& b)
{
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

double dot(const Quat& a, const Quat& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }

Quat slerp(const Quat& a, const Quat& b_in, double t)
{
    Quat b = b_in;
    double c = dot(a, b);
    if (c < 0.0) {
        b = {-b.w, -b.x, -b.y, -b.z};
        c = -c;
    }
    if (c > 0.9995) {
        return Quat{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x), a.y + t * (b.y - a.y),
                    a.z + t * (b.z - a.z)}
            .normalized();
    }
    const double theta = std::acos(std::clamp(c, -1.0, 1.0));
    const double s = std::sin(theta);
    const double wa = std::sin((1.0 - t) * theta) / s;
    const double wb = std::sin(t * theta) / s;
    return Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z}
        .normalized();
}

Pose compose(const Pose& parent_world, const Pose& child_local)
{
    Pose out;
    out.position = parent_world.position +
                   parent_world.rotation.rotate(hadamard(parent_world.scale, child_local.position));
    out.rotation = (parent_world.rotation * child_local.rotation).normalized();
    out.scale = hadamard(parent_world.scale, child_local.scale);
    return out;
}

Pose to_local(const Pose& world, const Pose& parent_world)
{
    if (!has_positive_scale(parent_world)) {
        throw FrameError("degenerate parent scale");
    }
    const Quat inv = parent_world.rotation.normalized().conjugate();
    Pose out;
    out.position = divide(inv.rotate(world.position - parent_world.position), parent_world.scale);
    out.rotation = (inv * world.rotation).normalized();
    out.scale = divide(world.scale, parent_world.scale);
    return out;
}

bool is_finite(const Pose& p)
{
    const double values[] = {p.position.x, p.position.y, p.position.z, p.rotation.w,
                             p.rotation.x, p.rotation.y, p.rotation.z, p.scale.x,
                             p.scale.y,    p.scale.z};
    return std::all_of(std::begin(values), std::end(values), [](double v) { return std::isfinite(v); });
}

bool has_positive_scale(const Pose& p) { return p.scale.x > 0.0 && p.scale.y > 0.0 && p.scale.z > 0.0; }

bool is_uniform_scale(const Vec3& s, double tolerance)
{
    const double ref = std::max({std::abs(s.x), std::abs(s.y), std::abs(s.z)});
    return std::abs(s.x - s.y) <= tolerance * ref && std::abs(s.x - s.z) <= tolerance * ref;
}

Mat4 Mat4::identity()
{
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        r.m[i][i] = 1.0;
    }
    return r;
}

Mat4 Mat4::from_pose(const Pose& p)
{
    const Quat& q = p.rotation;
    const double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    const double rot[3][3] = {{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
                              {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
                              {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
    const double s[3] = {p.scale.x, p.scale.y, p.scale.z};
    Mat4 r;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            r.m[i][j] = rot[i][j] * s[j];
        }
    }
    r.m[0][3] = p.position.x;
    r.m[1][3] = p.position.y;
    r.m[2][3] = p.position.z;
    r.m[3][3] = 1.0;
    return r;
}

Mat4 Mat4::perspective(double fovy_radians, double aspect, double near_plane, double far_plane)
{
    const double f = 1.0 / std::tan(fovy_radians / 2.0);
    Mat4 r;
    r.m[0][0] = f / aspect;
    r.m[1][1] = f;
    r.m[2][2] = (far_plane + near_plane) / (near_plane - far_plane);
    r.m[2][3] = 2.0 * far_plane * near_plane / (near_plane - far_plane);
    r.m[3][2] = -1.0;
    return r;
}

Mat4 Mat4::look_at(const Vec3& eye, const Vec3& target, const Vec3& up)
{
    const Vec3 fwd = (target - eye) * (1.0 / cotour::norm(target - eye));
    Vec3 side = cross(fwd, up);
    side = side * (1.0 / cotour::norm(side));
    const Vec3 u = cross(side, fwd);
    Mat4 r = identity();
    const Vec3 rows[3] = {side, u, -fwd};
    for (int i = 0; i < 3; ++i) {
        r.m[i][0] = rows[i].x;
        r.m[i][1] = rows[i].y;
        r.m[i][2] = rows[i].z;
        r.m[i][3] = -dot(rows[i], eye);
    }
    return r;
}

double Mat4::determinant() const
{
    // Laplace expansion over 2x2 minors.
    const auto& a = m;
    const double s0 = a[0][0] * a[1][1] - a[1][0] * a[0][1];
    const double s1 = a[0][0] * a[1][2] - a[1][0] * a[0][2];
    const double s2 = a[0][0] * a[1][3] - a[1][0] * a[0][3];
    const double s3 = a[0][1] * a[1][2] - a[1][1] * a[0][2];
    const double s4 = a[0][1] * a[1][3] - a[1][1] * a[0][3];
    const double s5 = a[0][2] * a[1][3] - a[1][2] * a[0][3];
    const double c5 = a[2][2] * a[3][3] - a[3][2] * a[2][3];
    const double c4 = a[2][1] * a[3][3] - a[3][1] * a[2][3];
    const double c3 = a[2][1] * a[3][2] - a[3][1] * a[2][2];
    const double c2 = a[2][0] * a[3][3] - a[3][0] * a[2][3];
    const double c1 = a[2][0] * a[3][2] - a[3][0] * a[2][2];
    const double c0 = a[2][0] * a[3][1] - a[3][0] * a[2][1];
    return s0 * c5 - s1 * c4 + s2 * c3 + s3 * c2 - s4 * c1 + s5 * c0;
}

std::array<double, 4> Mat4::operator*(const std::array<double, 4>& v) const
{
    std::array<double, 4> r{};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            r[i] += m[i][j] * v[j];
        }
    }
    return r;
}

Mat4 operator*(const Mat4& a, const Mat4& b)
{
    Mat4 r;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) {
                acc += a.m[i][k] * b.m[k][j];
            }
            r.m[i][j] = acc;
        }
    }
    return r;
}

} // namespace cotour
