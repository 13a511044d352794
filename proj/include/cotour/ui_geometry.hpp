#pragma once

#include "cotour/math.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cotour {

struct LayoutSpec {
    /// Percent of the screen dimension.
    double radius_pct = 12.0;
    double screen_w = 0.0;
    double screen_h = 0.0;
    int button_count = 1;
};

struct ScreenPoint {
    double x = 0.0;
    double y = 0.0;
};

struct RadialLayout {
    /// Offsets from the OOI's screen anchor, one per button.
    std::vector<ScreenPoint> points;
    /// Shortest distance between neighbouring buttons, in pixels.
    double min_spacing = 0.0;
    /// Set when min_spacing falls below the requested minimum.
    std::optional<std::string> warning;
};

/// x_i = r*w/100*cos(2*pi*i/n), y_i = r*h/100*sin(2*pi*i/n).
/// On non-square screens the buttons lie on an ellipse. Throws
/// std::invalid_argument when the spec is out of its domain.
RadialLayout radial_button_layout(const LayoutSpec& spec, double min_spacing_px = 48.0);

struct Projection {
    Mat4 view_projection;
    double viewport_w = 0.0;
    double viewport_h = 0.0;
};

/// Throws std::invalid_argument when the matrix is singular or the viewport empty.
void validate(const Projection& p);

/// Viewport pixels with the origin at the bottom-left, y up. nullopt when the
/// point is behind the camera (clip w <= 0).
std::optional<ScreenPoint> project_to_screen(const Vec3& p, const Projection& proj);

} // namespace cotour
