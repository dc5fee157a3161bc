#include "atcsim/metrics.hpp"

#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace atcsim
{
    namespace
    {
        // Meridional separation is a lower bound on great-circle distance.
        double meridional_nmi(double dlat_deg) { return std::abs(dlat_deg) * kDegToRad * kEarthRadiusNmi; }

        template <typename Accept>
        std::vector<PairConflict> sweep(const std::vector<TrafficPoint> &snap, double window_nmi, Accept accept)
        {
            std::vector<std::size_t> order(snap.size());
            for (std::size_t i = 0; i < order.size(); ++i)
            {
                order[i] = i;
            }
            std::sort(order.begin(), order.end(),
                      [&](std::size_t x, std::size_t y) { return snap[x].position.lat < snap[y].position.lat; });
            std::vector<PairConflict> out;
            for (std::size_t i = 0; i < order.size(); ++i)
            {
                const TrafficPoint &p = snap[order[i]];
                for (std::size_t j = i + 1; j < order.size(); ++j)
                {
                    const TrafficPoint &q = snap[order[j]];
                    if (meridional_nmi(q.position.lat - p.position.lat) >= window_nmi)
                    {
                        break;
                    }
                    const double vertical = std::abs(p.fl - q.fl);
                    if (vertical >= kVerticalMinimumFl)
                    {
                        continue;
                    }
                    const double lateral = distance_nmi(p.position, q.position);
                    if (accept(lateral))
                    {
                        const bool swap = q.callsign < p.callsign;
                        out.push_back({swap ? q.callsign : p.callsign, swap ? p.callsign : q.callsign, lateral, vertical});
                    }
                }
            }
            std::sort(out.begin(), out.end(),
                      [](const PairConflict &x, const PairConflict &y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
            return out;
        }

        double severity_of(double lateral, double vertical)
        {
            return std::max(lateral / kLateralMinimumNmi, vertical / kVerticalMinimumFl);
        }
    }

    std::vector<PairConflict> scan_separation(const std::vector<TrafficPoint> &snapshot)
    {
        return sweep(snapshot, kLateralMinimumNmi, [](double d) { return d < kLateralMinimumNmi; });
    }

    std::vector<PairConflict> scan_proximity(const std::vector<TrafficPoint> &snapshot)
    {
        return sweep(snapshot, kProximityRangeNmi, [](double d) { return d < kProximityRangeNmi; });
    }

    double assured_margin(const std::vector<TrafficPoint> &snapshot)
    {
        double margin = kMarginCap;
        const double window = kMarginCap * kLateralMinimumNmi;
        for (std::size_t i = 0; i < snapshot.size(); ++i)
        {
            for (std::size_t j = i + 1; j < snapshot.size(); ++j)
            {
                const double vertical = std::abs(snapshot[i].fl - snapshot[j].fl);
                if (vertical / kVerticalMinimumFl >= margin ||
                    meridional_nmi(snapshot[i].position.lat - snapshot[j].position.lat) >= window)
                {
                    continue;
                }
                const double lateral = distance_nmi(snapshot[i].position, snapshot[j].position);
                margin = std::min(margin, severity_of(lateral, vertical));
            }
        }
        return margin;
    }

    SeparationTransitions SeparationMonitor::update(double t, const std::vector<PairConflict> &conflicts)
    {
        SeparationTransitions tr;
        std::map<std::pair<std::string, std::string>, const PairConflict *> now;
        for (const auto &c : conflicts)
        {
            now[{c.a, c.b}] = &c;
        }
        for (auto it = m_open.begin(); it != m_open.end();)
        {
            if (now.count(it->first) == 0)
            {
                it->second.end = t;
                it->second.open = false;
                tr.closed.push_back(it->second);
                m_closed.push_back(it->second);
                it = m_open.erase(it);
            }
            else
            {
                ++it;
            }
        }
        for (const auto &[key, c] : now)
        {
            auto it = m_open.find(key);
            const double sev = severity_of(c->lateral_nmi, c->vertical_fl);
            if (it == m_open.end())
            {
                SeparationEvent e{c->a, c->b, t, t, c->lateral_nmi, c->vertical_fl, sev, true};
                m_open.emplace(key, e);
                tr.opened.push_back(e);
            }
            else
            {
                SeparationEvent &e = it->second;
                e.end = t;
                e.min_lateral_nmi = std::min(e.min_lateral_nmi, c->lateral_nmi);
                e.min_vertical_fl = std::min(e.min_vertical_fl, c->vertical_fl);
                e.severity = std::min(e.severity, sev);
            }
        }
        return tr;
    }

    SeparationTransitions SeparationMonitor::close_all(double t)
    {
        return update(t, {});
    }

    SeparationTransitions SeparationMonitor::close_involving(double t, const std::string &callsign)
    {
        SeparationTransitions tr;
        for (auto it = m_open.begin(); it != m_open.end();)
        {
            if (it->second.a == callsign || it->second.b == callsign)
            {
                it->second.end = t;
                it->second.open = false;
                tr.closed.push_back(it->second);
                m_closed.push_back(it->second);
                it = m_open.erase(it);
            }
            else
            {
                ++it;
            }
        }
        return tr;
    }

    double proximity_term(double d)
    {
        if (d >= kProximityRangeNmi)
        {
            return 0.0;
        }
        const double x = 1.0 - std::max(d, 0.0) / kProximityRangeNmi;
        return x * x;
    }

    double proximity_term_derivative(double d)
    {
        if (d >= kProximityRangeNmi || d < 0.0)
        {
            return 0.0;
        }
        return -2.0 * (1.0 - d / kProximityRangeNmi) / kProximityRangeNmi;
    }

    double compose_reward(const RewardInputs &in, const RewardWeights &w)
    {
        const auto los = scan_separation(in.snapshot);
        double proximity = 0.0;
        for (const auto &p : scan_proximity(in.snapshot))
        {
            proximity += proximity_term(p.lateral_nmi);
        }
        const double r = -w.los * static_cast<double>(los.size()) - w.proximity * proximity -
                         w.clearance * in.clearances_issued + w.progress_per_nmi * in.progress_nmi +
                         w.coordination * in.coordinations_satisfied;
        return std::clamp(r, -10.0, 10.0);
    }

    double route_position_nmi(const std::vector<LatLon> &route, LatLon p)
    {
        double best_offset = std::numeric_limits<double>::infinity();
        double best_position = 0.0;
        double cumulative = 0.0;
        for (std::size_t i = 0; i + 1 < route.size(); ++i)
        {
            const double length = distance_nmi(route[i], route[i + 1]);
            const double along = length > 0.0 ? std::clamp(along_track_nmi(route[i], route[i + 1], p), 0.0, length) : 0.0;
            const LatLon foot = length > 0.0 ? destination(route[i], initial_course_deg(route[i], route[i + 1]), along) : route[i];
            const double offset = distance_nmi(foot, p);
            if (offset < best_offset)
            {
                best_offset = offset;
                best_position = cumulative + along;
            }
            cumulative += length;
        }
        return best_position;
    }

    double plan_reference_nmi(const std::vector<LatLon> &route, LatLon start, LatLon end)
    {
        if (route.size() >= 2)
        {
            const double span = route_position_nmi(route, end) - route_position_nmi(route, start);
            if (span > 0.0)
            {
                return span;
            }
        }
        return distance_nmi(start, end);
    }

    double inefficiency_3di_proxy(const EfficiencyInput &in)
    {
        double extension = 0.0;
        if (in.reference_nmi > 1e-9)
        {
            extension = std::max(0.0, in.flown_nmi / in.reference_nmi - 1.0);
        }
        if (!in.has_plan)
        {
            return 0.5 * extension;
        }
        const double below = in.cruise_time_s > 0.0 ? in.cruise_below_requested_s / in.cruise_time_s : 0.0;
        return 0.5 * extension + 0.5 * below;
    }

    double MetricsReport::coordination_compliance() const
    {
        const int total = coordinations_satisfied + coordinations_violated;
        return total == 0 ? 1.0 : static_cast<double>(coordinations_satisfied) / total;
    }

    std::string metrics_csv(const MetricsReport &r)
    {
        std::ostringstream out;
        out.precision(10);
        out << "row,t,reward,assured_margin,los_count,fuel_kg,mean_3di_proxy,coordination_compliance\n";
        for (std::size_t i = 0; i < r.reward_trace.size(); ++i)
        {
            out << "tick," << r.tick_times[i] << ',' << r.reward_trace[i] << ',' << r.assured_margin_trace[i]
                << ",,,,\n";
        }
        double total = 0.0;
        for (double x : r.reward_trace)
        {
            total += x;
        }
        out << "summary,," << total << ',' << r.min_assured_margin << ',' << r.los_count << ',' << r.fuel_proxy_kg
            << ',' << r.mean_3di_proxy << ',' << r.coordination_compliance() << '\n';
        return out.str();
    }
}
