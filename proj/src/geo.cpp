#include "atcsim/geo.hpp"

#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>

namespace atcsim
{
    double distance_nmi(LatLon a, LatLon b) noexcept
    {
        // Vincenty's special case for the sphere: well conditioned at all separations.
        const double p1 = a.lat * kDegToRad;
        const double p2 = b.lat * kDegToRad;
        const double dl = (b.lon - a.lon) * kDegToRad;
        const double y = std::hypot(std::cos(p2) * std::sin(dl),
                                    std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl));
        const double x = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
        return kEarthRadiusNmi * std::atan2(y, x);
    }

    double initial_course_deg(LatLon a, LatLon b) noexcept
    {
        if (a == b)
        {
            return 0.0;
        }
        const double p1 = a.lat * kDegToRad;
        const double p2 = b.lat * kDegToRad;
        const double dl = (b.lon - a.lon) * kDegToRad;
        const double y = std::sin(dl) * std::cos(p2);
        const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
        return wrap_360(std::atan2(y, x) * kRadToDeg);
    }

    LatLon destination(LatLon from, double course_deg, double distance) noexcept
    {
        const double d = distance / kEarthRadiusNmi;
        const double p1 = from.lat * kDegToRad;
        const double l1 = from.lon * kDegToRad;
        const double c = course_deg * kDegToRad;
        const double sp2 = std::sin(p1) * std::cos(d) + std::cos(p1) * std::sin(d) * std::cos(c);
        const double p2 = std::asin(std::clamp(sp2, -1.0, 1.0));
        const double l2 = l1 + std::atan2(std::sin(c) * std::sin(d) * std::cos(p1), std::cos(d) - std::sin(p1) * sp2);
        double lon = l2 * kRadToDeg;
        lon = std::fmod(lon + 540.0, 360.0) - 180.0;
        return {p2 * kRadToDeg, lon};
    }

    double cross_track_nmi(LatLon a, LatLon b, LatLon p) noexcept
    {
        const double d13 = distance_nmi(a, p) / kEarthRadiusNmi;
        const double t13 = initial_course_deg(a, p) * kDegToRad;
        const double t12 = initial_course_deg(a, b) * kDegToRad;
        return std::asin(std::clamp(std::sin(d13) * std::sin(t13 - t12), -1.0, 1.0)) * kEarthRadiusNmi;
    }

    double along_track_nmi(LatLon a, LatLon b, LatLon p) noexcept
    {
        const double d13 = distance_nmi(a, p) / kEarthRadiusNmi;
        const double dxt = cross_track_nmi(a, b, p) / kEarthRadiusNmi;
        const double t13 = initial_course_deg(a, p) * kDegToRad;
        const double t12 = initial_course_deg(a, b) * kDegToRad;
        const double c = std::cos(dxt);
        const double mag = c == 0.0 ? 0.0 : std::acos(std::clamp(std::cos(d13) / c, -1.0, 1.0));
        const double sign = std::cos(t13 - t12) >= 0.0 ? 1.0 : -1.0;
        return sign * mag * kEarthRadiusNmi;
    }
}
