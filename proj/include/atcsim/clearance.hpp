#pragma once

#include <string>
#include <variant>

namespace atcsim
{
    enum class TurnDirection
    {
        left,
        right,
    };

    struct DirectTo
    {
        std::string waypoint;
    };
    struct FlyHeading
    {
        double heading_deg = 0.0;
    };
    struct TurnBy
    {
        TurnDirection direction = TurnDirection::left;
        double degrees = 0.0;
    };
    struct MaintainPresentHeading
    {
    };
    struct ClimbDescendNow
    {
        double fl = 0.0;
    };
    struct DescendWhenReadyLevelBy
    {
        double fl = 0.0;
        std::string waypoint;
    };
    struct DescendNowLevelBy
    {
        double fl = 0.0;
        std::string waypoint;
    };
    struct ChangeCas
    {
        double cas_kt = 0.0;
    };
    struct ChangeMach
    {
        double mach = 0.0;
    };
    struct ChangeRocd
    {
        double rocd_fpm = 0.0; // magnitude
    };
    struct ContactFrequency
    {
        std::string group_id;
    };

    /// The eleven controller instructions of the action space.
    using Clearance = std::variant<DirectTo, FlyHeading, TurnBy, MaintainPresentHeading, ClimbDescendNow,
                                   DescendWhenReadyLevelBy, DescendNowLevelBy, ChangeCas, ChangeMach, ChangeRocd,
                                   ContactFrequency>;

    inline constexpr std::size_t kClearanceKinds = std::variant_size_v<Clearance>;

    /// Stable wire name of a clearance kind (e.g. "climb_descend_now").
    std::string clearance_name(const Clearance &c);

    enum class ClearanceAxis
    {
        lateral,
        vertical,
        speed,
        rocd,
        frequency,
    };

    ClearanceAxis clearance_axis(const Clearance &c);

    /// Range checks on attributes that do not need world context. Returns an empty string when valid.
    std::string check_clearance_attributes(const Clearance &c);
}
