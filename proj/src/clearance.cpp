#include "atcsim/clearance.hpp"

#include <cmath>

namespace atcsim
{
    namespace
    {
        template <class... Ts>
        struct overloaded : Ts...
        {
            using Ts::operator()...;
        };
        template <class... Ts>
        overloaded(Ts...) -> overloaded<Ts...>;

        bool fl_ok(double fl) { return std::isfinite(fl) && fl >= 0.0 && fl <= 600.0; }
    }

    std::string clearance_name(const Clearance &c)
    {
        return std::visit(overloaded{
                              [](const DirectTo &) { return "direct_to"; },
                              [](const FlyHeading &) { return "fly_heading"; },
                              [](const TurnBy &) { return "turn_by"; },
                              [](const MaintainPresentHeading &) { return "maintain_present_heading"; },
                              [](const ClimbDescendNow &) { return "climb_descend_now"; },
                              [](const DescendWhenReadyLevelBy &) { return "descend_when_ready_level_by"; },
                              [](const DescendNowLevelBy &) { return "descend_now_level_by"; },
                              [](const ChangeCas &) { return "change_cas"; },
                              [](const ChangeMach &) { return "change_mach"; },
                              [](const ChangeRocd &) { return "change_rocd"; },
                              [](const ContactFrequency &) { return "contact_frequency"; },
                          },
                          c);
    }

    ClearanceAxis clearance_axis(const Clearance &c)
    {
        return std::visit(overloaded{
                              [](const DirectTo &) { return ClearanceAxis::lateral; },
                              [](const FlyHeading &) { return ClearanceAxis::lateral; },
                              [](const TurnBy &) { return ClearanceAxis::lateral; },
                              [](const MaintainPresentHeading &) { return ClearanceAxis::lateral; },
                              [](const ClimbDescendNow &) { return ClearanceAxis::vertical; },
                              [](const DescendWhenReadyLevelBy &) { return ClearanceAxis::vertical; },
                              [](const DescendNowLevelBy &) { return ClearanceAxis::vertical; },
                              [](const ChangeCas &) { return ClearanceAxis::speed; },
                              [](const ChangeMach &) { return ClearanceAxis::speed; },
                              [](const ChangeRocd &) { return ClearanceAxis::rocd; },
                              [](const ContactFrequency &) { return ClearanceAxis::frequency; },
                          },
                          c);
    }

    std::string check_clearance_attributes(const Clearance &c)
    {
        return std::visit(
            overloaded{
                [](const DirectTo &d) -> std::string { return d.waypoint.empty() ? "waypoint required" : ""; },
                [](const FlyHeading &h) -> std::string {
                    return (std::isfinite(h.heading_deg) && h.heading_deg >= 0.0 && h.heading_deg < 360.0)
                               ? ""
                               : "heading must be in [0, 360)";
                },
                [](const TurnBy &t) -> std::string {
                    return (std::isfinite(t.degrees) && t.degrees > 0.0 && t.degrees < 360.0)
                               ? ""
                               : "turn amount must be in (0, 360)";
                },
                [](const MaintainPresentHeading &) -> std::string { return ""; },
                [](const ClimbDescendNow &v) -> std::string { return fl_ok(v.fl) ? "" : "fl must be in [0, 600]"; },
                [](const DescendWhenReadyLevelBy &v) -> std::string {
                    if (!fl_ok(v.fl))
                    {
                        return "fl must be in [0, 600]";
                    }
                    return v.waypoint.empty() ? "waypoint required" : "";
                },
                [](const DescendNowLevelBy &v) -> std::string {
                    if (!fl_ok(v.fl))
                    {
                        return "fl must be in [0, 600]";
                    }
                    return v.waypoint.empty() ? "waypoint required" : "";
                },
                [](const ChangeCas &s) -> std::string {
                    return (s.cas_kt >= 120.0 && s.cas_kt <= 370.0) ? "" : "CAS must be in [120, 370] kt";
                },
                [](const ChangeMach &s) -> std::string {
                    return (s.mach > 0.3 && s.mach < 0.95) ? "" : "Mach must be in (0.3, 0.95)";
                },
                [](const ChangeRocd &r) -> std::string {
                    const double m = std::abs(r.rocd_fpm);
                    return (m >= 100.0 && m <= 8000.0) ? "" : "ROCD magnitude must be in [100, 8000] ft/min";
                },
                [](const ContactFrequency &f) -> std::string { return f.group_id.empty() ? "group required" : ""; },
            },
            c);
    }
}
