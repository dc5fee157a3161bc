#pragma once

#include <cmath>
#include <numbers>

namespace atcsim
{
    // Fixed conversion constants. Internal physics runs in SI; interfaces expose kt / FL / NMI.
    inline constexpr double kKnotToMs = 0.514444;
    inline constexpr double kFootToM = 0.3048;
    inline constexpr double kFlToM = 30.48;
    inline constexpr double kNmiToM = 1852.0;
    inline constexpr double kEarthRadiusNmi = 3440.065;
    inline constexpr double kG0 = 9.80665;
    inline constexpr double kFpmToMs = kFootToM / 60.0;

    inline constexpr double kDegToRad = std::numbers::pi / 180.0;
    inline constexpr double kRadToDeg = 180.0 / std::numbers::pi;

    inline constexpr double kMinFl = 0.0;
    inline constexpr double kMaxFl = 600.0;

    inline constexpr double knots_to_ms(double kt) noexcept { return kt * kKnotToMs; }
    inline constexpr double ms_to_knots(double ms) noexcept { return ms / kKnotToMs; }
    inline constexpr double fl_to_m(double fl) noexcept { return fl * kFlToM; }
    inline constexpr double m_to_fl(double m) noexcept { return m / kFlToM; }
    inline constexpr double fpm_to_ms(double fpm) noexcept { return fpm * kFpmToMs; }
    inline constexpr double ms_to_fpm(double ms) noexcept { return ms / kFpmToMs; }

    /// Wraps an angle into [0, 360).
    inline double wrap_360(double deg) noexcept
    {
        double r = std::fmod(deg, 360.0);
        if (r < 0.0)
        {
            r += 360.0;
        }
        if (r >= 360.0)
        {
            r = 0.0;
        }
        return r;
    }

    /// Signed smallest difference to - from, in (-180, 180].
    inline double heading_delta(double from, double to) noexcept
    {
        double d = wrap_360(to - from);
        return d > 180.0 ? d - 360.0 : d;
    }
}
