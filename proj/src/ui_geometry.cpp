#include "cotour/ui_geometry.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cotour {

RadialLayout radial_button_layout(const LayoutSpec& spec, double min_spacing_px)
{
    if (!(spec.radius_pct > 0.0) || !(spec.screen_w > 0.0) || !(spec.screen_h > 0.0) || spec.button_count < 1) {
        throw std::invalid_argument("layout needs radius > 0, positive screen size and at least one button");
    }
    const int n = spec.button_count;
    const double rx = spec.radius_pct * spec.screen_w / 100.0;
    const double ry = spec.radius_pct * spec.screen_h / 100.0;
    RadialLayout out;
    out.points.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double a = 2.0 * i * std::numbers::pi / n;
        out.points.push_back({rx * std::cos(a), ry * std::sin(a)});
    }
    if (n == 1) {
        out.min_spacing = std::numeric_limits<double>::infinity();
        return out;
    }
    out.min_spacing = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const ScreenPoint& a = out.points[static_cast<std::size_t>(i)];
        const ScreenPoint& b = out.points[static_cast<std::size_t>((i + 1) % n)];
        out.min_spacing = std::min(out.min_spacing, std::hypot(a.x - b.x, a.y - b.y));
    }
    if (out.min_spacing < min_spacing_px) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "buttons only %.1f px apart (minimum %.1f px)", out.min_spacing,
                      min_spacing_px);
        out.warning = buf;
    }
    return out;
}

void validate(const Projection& p)
{
    if (!(p.viewport_w > 0.0) || !(p.viewport_h > 0.0)) {
        throw std::invalid_argument("viewport must be non-empty");
    }
    const double det = p.view_projection.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) {
        throw std::invalid_argument("view-projection matrix is not invertible");
    }
}

std::optional<ScreenPoint> project_to_screen(const Vec3& p, const Projection& proj)
{
    const auto clip = proj.view_projection * std::array<double, 4>{p.x, p.y, p.z, 1.0};
    const double w = clip[3];
    if (!(w > 0.0)) {
        return std::nullopt;
    }
    const double ndc_x = clip[0] / w;
    const double ndc_y = clip[1] / w;
    return ScreenPoint{(ndc_x + 1.0) * 0.5 * proj.viewport_w, (ndc_y + 1.0) * 0.5 * proj.viewport_h};
}

} // namespace cotour
