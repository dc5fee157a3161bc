#pragma once

namespace atcsim
{
    struct LatLon
    {
        double lat = 0.0; // degrees
        double lon = 0.0; // degrees

        friend bool operator==(const LatLon &, const LatLon &) = default;
    };

    // Spherical-earth geometry, mean radius kEarthRadiusNmi.

    /// Great-circle distance in NMI.
    double distance_nmi(LatLon a, LatLon b) noexcept;

    /// Initial great-circle course from a to b, degrees true in [0, 360). 0 for coincident points.
    double initial_course_deg(LatLon a, LatLon b) noexcept;

    /// Point reached from `from` after `distance_nmi` along initial course `course_deg`.
    LatLon destination(LatLon from, double course_deg, double distance_nmi) noexcept;

    /// Signed cross-track distance (NMI, positive right of track) of p from the great circle a->b.
    double cross_track_nmi(LatLon a, LatLon b, LatLon p) noexcept;

    /// Along-track distance (NMI) from a to the foot of the perpendicular from p onto a->b.
    /// Negative when the foot lies behind a.
    double along_track_nmi(LatLon a, LatLon b, LatLon p) noexcept;
}
