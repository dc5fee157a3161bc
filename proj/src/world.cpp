#include "atcsim/world.hpp"

#include "atcsim/errors.hpp"
#include "atcsim/geo.hpp"
#include "atcsim/json_io.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <thread>
#include <tuple>

namespace atcsim
{
    using Record = EventLog::Record;

    namespace
    {
        constexpr double kCaptureNmi = 1.0;
        constexpr double kPassedWindowNmi = 5.0;
        constexpr double kHoldProbeNmi = 100.0;
        constexpr double kRolloutHorizonS = 3600.0;
        constexpr double kRolloutGiveUpNmi = -20.0;
        constexpr double kCruiseBelowToleranceFl = 0.5;
        constexpr double kReplayLevelFpm = 300.0;
        constexpr const char *kFallbackType = "B738";

        double wind_corrected_heading(double course_deg, double tas_kt, WindVector w)
        {
            const double c = course_deg * kDegToRad;
            const double cross = w.u * std::cos(c) - w.v * std::sin(c);
            const double ratio = std::clamp(cross / std::max(tas_kt * kKnotToMs, 1.0), -1.0, 1.0);
            return wrap_360(course_deg - std::asin(ratio) * kRadToDeg);
        }

        const Waypoint &waypoint_or_throw(const AirspaceDefinition &a, const std::string &ident)
        {
            const Waypoint *w = a.find_waypoint(ident);
            if (w == nullptr)
            {
                throw DefinitionError("unknown waypoint " + ident);
            }
            return *w;
        }

        std::string mode_name(PredictMode m)
        {
            switch (m)
            {
            case PredictMode::baseline:
                return "baseline";
            case PredictMode::mean:
                return "mean";
            case PredictMode::sampled:
                return "sampled";
            }
            return "sampled";
        }

        PredictMode mode_from(const std::string &s)
        {
            if (s == "baseline")
            {
                return PredictMode::baseline;
            }
            if (s == "mean")
            {
                return PredictMode::mean;
            }
            if (s == "sampled")
            {
                return PredictMode::sampled;
            }
            throw JsonFieldError("/correction_mode", "expected baseline, mean or sampled");
        }

        double lerp(double a, double b, double f) { return a + (b - a) * f; }

        bool in_cruise(const AircraftState &s)
        {
            if (s.source == Source::replay)
            {
                return std::abs(s.rocd_fpm) < kReplayLevelFpm;
            }
            return !s.vertically_active();
        }
    }

    // ---- models ---------------------------------------------------------------------------------------

    void ModelLibrary::add(TrajectoryModel model)
    {
        auto key = std::make_pair(model.aircraft_type, model.phase);
        m_models.insert_or_assign(std::move(key), std::move(model));
    }

    const TrajectoryModel *ModelLibrary::find(const std::string &aircraft_type, Phase phase) const
    {
        const auto it = m_models.find({aircraft_type, phase});
        return it == m_models.end() ? nullptr : &it->second;
    }

    ModelLibrary load_models(const ScenarioSpec &spec, const std::string &base_dir)
    {
        ModelLibrary lib;
        for (const auto &ref : spec.models)
        {
            std::filesystem::path p(ref.file);
            if (p.is_relative() && !base_dir.empty())
            {
                p = std::filesystem::path(base_dir) / p;
            }
            TrajectoryModel m = load_model(p.string());
            if (m.aircraft_type != ref.aircraft_type || m.phase != ref.phase)
            {
                throw DefinitionError("model file " + p.string() + " holds " + m.aircraft_type + "/" +
                                      to_string(m.phase) + ", expected " + ref.aircraft_type + "/" +
                                      to_string(ref.phase));
            }
            lib.add(std::move(m));
        }
        return lib;
    }

    nlohmann::json to_json(const WorldConfig &c)
    {
        return {{"tick_s", c.tick_s},
                {"substep_s", c.substep_s},
                {"coordination_fl_tolerance", c.coordination_fl_tolerance},
                {"coordination_nmi_tolerance", c.coordination_nmi_tolerance},
                {"reward",
                 {{"los", c.reward.los},
                  {"proximity", c.reward.proximity},
                  {"clearance", c.reward.clearance},
                  {"progress_per_nmi", c.reward.progress_per_nmi},
                  {"coordination", c.reward.coordination}}},
                {"correction_mode", mode_name(c.correction_mode)},
                {"run_script", c.run_script},
                {"log_snapshots", c.log_snapshots}};
    }

    WorldConfig world_config_from_json(const nlohmann::json &j)
    {
        WorldConfig c;
        c.tick_s = jsonf::number_or(j, "tick_s", c.tick_s, "");
        c.substep_s = jsonf::number_or(j, "substep_s", c.substep_s, "");
        c.coordination_fl_tolerance = jsonf::number_or(j, "coordination_fl_tolerance", c.coordination_fl_tolerance, "");
        c.coordination_nmi_tolerance =
            jsonf::number_or(j, "coordination_nmi_tolerance", c.coordination_nmi_tolerance, "");
        if (j.contains("reward"))
        {
            const auto &r = j["reward"];
            c.reward.los = jsonf::number_or(r, "los", c.reward.los, "/reward");
            c.reward.proximity = jsonf::number_or(r, "proximity", c.reward.proximity, "/reward");
            c.reward.clearance = jsonf::number_or(r, "clearance", c.reward.clearance, "/reward");
            c.reward.progress_per_nmi = jsonf::number_or(r, "progress_per_nmi", c.reward.progress_per_nmi, "/reward");
            c.reward.coordination = jsonf::number_or(r, "coordination", c.reward.coordination, "/reward");
        }
        if (j.contains("correction_mode"))
        {
            c.correction_mode = mode_from(jsonf::string(j, "correction_mode", ""));
        }
        c.run_script = j.value("run_script", c.run_script);
        c.log_snapshots = j.value("log_snapshots", c.log_snapshots);
        return c;
    }

    std::string to_string(CoordinationStatus s)
    {
        switch (s)
        {
        case CoordinationStatus::standing:
            return "standing";
        case CoordinationStatus::tactical:
            return "tactical";
        case CoordinationStatus::satisfied:
            return "satisfied";
        case CoordinationStatus::violated:
            return "violated";
        }
        return "standing";
    }

    bool coordination_satisfied(const CoordinationSpec &c, double fl, LatLon position, const AirspaceDefinition &airspace,
                                double fl_tolerance, double nmi_tolerance)
    {
        if (std::abs(fl - c.transfer_fl) > fl_tolerance)
        {
            return false;
        }
        if (c.transfer_point)
        {
            return distance_nmi(position, waypoint_or_throw(airspace, *c.transfer_point).pos) <= nmi_tolerance;
        }
        return true;
    }

    // ---- pilot agent ----------------------------------------------------------------------------------

    double distance_to_abeam(const AircraftState &s, const AirspaceDefinition &airspace, const std::string &waypoint)
    {
        const Waypoint &target = waypoint_or_throw(airspace, waypoint);
        const LateralIntent &lat = s.intent.lateral;
        if (lat.mode == LateralMode::route_following && lat.next_index < lat.route.size())
        {
            const Waypoint &next = waypoint_or_throw(airspace, lat.route[lat.next_index]);
            double along = distance_nmi(s.position, next.pos);
            for (std::size_t j = lat.next_index; j < lat.route.size(); ++j)
            {
                if (lat.route[j] == waypoint)
                {
                    return along;
                }
                if (j + 1 < lat.route.size())
                {
                    along += distance_nmi(waypoint_or_throw(airspace, lat.route[j]).pos,
                                          waypoint_or_throw(airspace, lat.route[j + 1]).pos);
                }
            }
            if (distance_nmi(s.position, next.pos) > 1e-6)
            {
                return along_track_nmi(s.position, next.pos, target.pos);
            }
        }
        const double heading = lat.mode == LateralMode::heading_hold ? lat.hold_heading_deg : s.heading_deg;
        return along_track_nmi(s.position, destination(s.position, heading, kHoldProbeNmi), target.pos);
    }

    AircraftState pilot_step(const AircraftState &s0, const PilotContext &ctx, double dt, PilotEvents *events)
    {
        PilotEvents local;
        PilotEvents &e = events != nullptr ? *events : local;
        e = PilotEvents{};
        AircraftState s = s0;

        LateralIntent &lat = s.intent.lateral;
        if (lat.mode == LateralMode::route_following)
        {
            while (lat.next_index < lat.route.size())
            {
                const Waypoint &w = waypoint_or_throw(*ctx.airspace, lat.route[lat.next_index]);
                const double d = distance_nmi(s.position, w.pos);
                const double course = initial_course_deg(s.position, w.pos);
                const bool passed = d < kPassedWindowNmi && std::abs(heading_delta(s.heading_deg, course)) > 90.0;
                if (d <= kCaptureNmi || passed)
                {
                    e.sequenced.push_back(lat.route[lat.next_index]);
                    ++lat.next_index;
                    continue;
                }
                const WindVector wind =
                    ctx.wind != nullptr ? wind_at(*ctx.wind, s.position.lat, s.position.lon, s.fl) : WindVector{};
                lat.target_heading_deg = wind_corrected_heading(course, s.speed.tas_kt, wind);
                break;
            }
            if (lat.next_index >= lat.route.size())
            {
                lat.mode = LateralMode::heading_hold;
                lat.hold_heading_deg = s.heading_deg;
                lat.target_heading_deg = s.heading_deg;
            }
        }
        else
        {
            lat.target_heading_deg = lat.hold_heading_deg;
        }

        VerticalIntent &v = s.intent.vertical;
        if (v.mode == VerticalMode::descending && !v.started && v.constraint && v.tod_distance_nmi &&
            distance_to_abeam(s, *ctx.airspace, v.constraint->waypoint) <= *v.tod_distance_nmi)
        {
            v.started = true;
            e.top_of_descent = true;
        }

        const CorrectionSample &c = v.mode == VerticalMode::climbing ? *ctx.climb : *ctx.descent;
        return tem_step(s, c, *ctx.perf, ctx.wind, dt, &e.diagnostics);
    }

    double descent_level_margin(const AircraftState &s, double target_fl, const std::string &waypoint,
                                double start_distance_nmi, const PilotContext &ctx, LatLon *start_position)
    {
        AircraftState r = s;
        VerticalIntent &v = r.intent.vertical;
        v.mode = VerticalMode::descending;
        v.target_fl = target_fl;
        v.constraint = LevelConstraint{target_fl, waypoint};
        v.commanded_rocd_fpm.reset();
        v.top_of_descent.reset();
        if (std::isinf(start_distance_nmi))
        {
            v.started = true;
            v.tod_distance_nmi.reset();
            if (start_position != nullptr)
            {
                *start_position = r.position;
            }
        }
        else
        {
            v.started = false;
            v.tod_distance_nmi = start_distance_nmi;
        }

        const int steps = static_cast<int>(kRolloutHorizonS / ctx.substep_s);
        try
        {
            for (int i = 0; i < steps; ++i)
            {
                const LatLon before = r.position;
                PilotEvents e;
                r = pilot_step(r, ctx, ctx.substep_s, &e);
                if (e.top_of_descent && start_position != nullptr)
                {
                    *start_position = before;
                }
                const double remaining = distance_to_abeam(r, *ctx.airspace, waypoint);
                if (r.intent.vertical.mode == VerticalMode::level)
                {
                    return remaining;
                }
                if (remaining < kRolloutGiveUpNmi)
                {
                    return remaining;
                }
            }
        }
        catch (const IntegrationFault &)
        {
        }
        return -std::numeric_limits<double>::infinity();
    }

    TopOfDescent compute_top_of_descent(const AircraftState &s, double target_fl, const std::string &waypoint,
                                        const PilotContext &ctx)
    {
        TopOfDescent t;
        t.position = s.position;
        t.immediate_margin_nmi =
            descent_level_margin(s, target_fl, waypoint, std::numeric_limits<double>::infinity(), ctx);
        t.feasible = t.immediate_margin_nmi >= 0.0;
        const double now = distance_to_abeam(s, *ctx.airspace, waypoint);
        if (!t.feasible || now <= 0.0)
        {
            t.start_distance_nmi = std::max(now, 0.0);
            return t;
        }
        double lo = 0.0;
        double hi = now;
        if (descent_level_margin(s, target_fl, waypoint, lo, ctx) >= 0.0)
        {
            hi = lo;
        }
        while (hi - lo > kTodToleranceNmi)
        {
            const double mid = 0.5 * (lo + hi);
            (descent_level_margin(s, target_fl, waypoint, mid, ctx) >= 0.0 ? hi : lo) = mid;
        }
        t.start_distance_nmi = hi;
        descent_level_margin(s, target_fl, waypoint, hi, ctx, &t.position);
        return t;
    }

    // ---- world ----------------------------------------------------------------------------------------

    World::World(ScenarioSpec spec, ModelLibrary models, WorldConfig config)
        : m_spec(std::move(spec)), m_models(std::move(models)), m_config(config)
    {
        const double ratio = m_config.tick_s / m_config.substep_s;
        if (!(m_config.tick_s > 0.0) || !(m_config.substep_s > 0.0) || m_config.substep_s > 10.0 ||
            std::abs(ratio - std::round(ratio)) > 1e-9)
        {
            throw DefinitionError("world: tick must be a positive whole multiple of a sub-step in (0, 10] s");
        }
        validate_scenario(m_spec);
        m_forecast = WindField(m_spec.forecast_wind, WindRole::forecast);
        std::vector<WindGrid> truth = m_spec.truth_wind;
        if (truth.empty())
        {
            // Without a separate truth field the forecast is exact.
            truth = m_spec.forecast_wind;
            for (auto &g : truth)
            {
                g.role = WindRole::truth;
            }
        }
        m_truth = WindField(std::move(truth), WindRole::truth);

        Record header;
        header["seed"] = m_spec.seed;
        header["duration_s"] = m_spec.duration_s;
        header["config"] = Record(to_json(m_config));
        m_log = EventLog(std::move(header));

        m_flight_spawned.assign(m_spec.flights.size(), false);
        m_track_spawned.assign(m_spec.recorded.size(), false);
        std::stable_sort(m_spec.actions.begin(), m_spec.actions.end(),
                         [](const ScriptedAction &a, const ScriptedAction &b) { return a.t < b.t; });
        for (const auto &c : m_spec.coordinations)
        {
            CoordinationState st;
            st.spec = c;
            st.status = c.kind == CoordinationKind::standing ? CoordinationStatus::standing : CoordinationStatus::tactical;
            m_coordinations.push_back(std::move(st));
        }
    }

    const AircraftRecord *World::find(const std::string &callsign) const
    {
        const auto it = m_aircraft.find(callsign);
        return it == m_aircraft.end() ? nullptr : &it->second;
    }

    const PerfCoefficients &World::perf_for(const std::string &type) const
    {
        for (const auto &p : m_spec.perf_tables)
        {
            if (p.aircraft_type == type)
            {
                return p;
            }
        }
        return builtin_perf(type);
    }

    PilotContext World::context_for(const AircraftRecord &a, double t) const
    {
        return PilotContext{&m_spec.airspace, a.perf, &a.climb, &a.descent, m_truth.active(t), m_config.substep_s};
    }

    void World::sample_corrections(AircraftRecord &a)
    {
        const std::string &cs = a.state.callsign;
        const std::string &type = a.perf->aircraft_type;
        const TrajectoryModel *climb = m_models.find(type, Phase::climb);
        const TrajectoryModel *descent = m_models.find(type, Phase::descent);
        a.climb = correction_for(climb, *a.perf, m_config.correction_mode, derive_seed(m_spec.seed, cs + "/climb"));
        a.descent = correction_for(descent, *a.perf, m_config.correction_mode, derive_seed(m_spec.seed, cs + "/descent"));
    }

    AircraftRecord World::make_record(const std::string &callsign, const FlightPlan &plan)
    {
        AircraftRecord a;
        a.state.callsign = callsign;
        a.state.plan = plan;
        a.latency_rng = Rng(derive_seed(m_spec.seed, callsign + "/latency"));
        for (const auto &ident : plan.route)
        {
            a.plan_polyline.push_back(waypoint_or_throw(m_spec.airspace, ident).pos);
        }
        return a;
    }

    void World::spawn_due()
    {
        const double t = time();
        for (std::size_t i = 0; i < m_spec.flights.size(); ++i)
        {
            const FlightEntry &f = m_spec.flights[i];
            if (m_flight_spawned[i] || f.entry_time_s > t + 1e-9)
            {
                continue;
            }
            m_flight_spawned[i] = true;
            AircraftRecord a = make_record(f.plan.callsign, f.plan);
            a.perf = &perf_for(f.plan.aircraft_type);
            sample_corrections(a);
            AircraftState &s = a.state;
            s.source = Source::simulated;
            s.position = f.position;
            s.fl = f.fl;
            if (f.heading_deg)
            {
                s.heading_deg = *f.heading_deg;
            }
            else if (!a.plan_polyline.empty())
            {
                s.heading_deg = initial_course_deg(f.position, a.plan_polyline.front());
            }
            if (f.plan.route.empty())
            {
                s.intent.lateral.mode = LateralMode::heading_hold;
                s.intent.lateral.hold_heading_deg = s.heading_deg;
            }
            else
            {
                s.intent.lateral.mode = LateralMode::route_following;
                s.intent.lateral.route = f.plan.route;
            }
            s.intent.lateral.target_heading_deg = s.heading_deg;

            const double cleared = f.cleared_fl.value_or(f.fl);
            s.intent.vertical.target_fl = cleared;
            s.intent.vertical.mode = cleared > f.fl ? VerticalMode::climbing
                                     : cleared < f.fl ? VerticalMode::descending
                                                      : VerticalMode::level;
            s.selected_fl = cleared;

            bool cruise_fallback = false;
            if (f.plan.requested_cruise)
            {
                s.intent.speed.cruise = *f.plan.requested_cruise;
            }
            else
            {
                const TrajectoryModel *m = m_models.find(a.perf->aircraft_type, Phase::descent);
                if (m == nullptr)
                {
                    m = m_models.find(a.perf->aircraft_type, Phase::climb);
                }
                if (m != nullptr)
                {
                    const CruiseDraw d = sample_cruise_speed(*m, derive_seed(m_spec.seed, s.callsign + "/cruise"), *a.perf);
                    s.intent.speed.cruise = d.speed;
                    cruise_fallback = d.fallback;
                }
                else
                {
                    s.intent.speed.cruise = {a.perf->base_cas_at(f.fl), a.perf->base_mach};
                }
            }
            const CorrectionSample &c = s.intent.vertical.mode == VerticalMode::climbing ? a.climb : a.descent;
            const SpeedTarget target = speed_target(s, c, *a.perf, s.fl);
            s.speed = speed_state_from_tas(target.tas_ms(s.fl * kFlToM) / kKnotToMs, s.fl,
                                           target.mach_governed ? SpeedRegime::mach_governed : SpeedRegime::cas_governed);
            const WindVector w = m_truth.at(s.position.lat, s.position.lon, s.fl, t);
            const GroundVector gv = ground_vector(s.speed.tas_kt, s.heading_deg, w);
            s.ground_speed_kt = gv.ground_speed_kt;
            s.track_deg = gv.track_deg;

            a.metrics.start = a.metrics.last = s.position;
            a.last_route_position = a.plan_polyline.size() >= 2 ? route_position_nmi(a.plan_polyline, s.position) : 0.0;

            Record fields;
            fields["callsign"] = s.callsign;
            fields["source"] = "simulated";
            fields["aircraft_type"] = a.perf->aircraft_type;
            fields["lat"] = s.position.lat;
            fields["lon"] = s.position.lon;
            fields["fl"] = s.fl;
            fields["seeds"] = {{"climb", derive_seed(m_spec.seed, s.callsign + "/climb")},
                               {"descent", derive_seed(m_spec.seed, s.callsign + "/descent")},
                               {"cruise", derive_seed(m_spec.seed, s.callsign + "/cruise")},
                               {"latency", derive_seed(m_spec.seed, s.callsign + "/latency")}};
            fields["cruise"] = {{"cas_kt", s.intent.speed.cruise.cas_kt}, {"mach", s.intent.speed.cruise.mach}};
            if (cruise_fallback)
            {
                fields["cruise_fallback"] = true;
            }
            m_log.append(t, "spawn", std::move(fields));
            m_aircraft.emplace(s.callsign, std::move(a));
        }

        for (std::size_t i = 0; i < m_spec.recorded.size(); ++i)
        {
            const RecordedTrack &track = m_spec.recorded[i];
            if (m_track_spawned[i] || track.samples.front().t > t + 1e-9)
            {
                continue;
            }
            m_track_spawned[i] = true;
            if (track.samples.back().t < t)
            {
                continue;
            }
            AircraftRecord a = make_record(track.callsign, track.plan);
            a.track = &track;
            a.state.source = Source::replay;
            if (!track.plan.aircraft_type.empty())
            {
                a.perf = &perf_for(track.plan.aircraft_type);
            }
            advance_replay(a, t);
            a.metrics.flown_nmi = 0.0;
            a.metrics.start = a.metrics.last = a.state.position;
            a.last_route_position =
                a.plan_polyline.size() >= 2 ? route_position_nmi(a.plan_polyline, a.state.position) : 0.0;
            Record fields;
            fields["callsign"] = track.callsign;
            fields["source"] = "replay";
            fields["aircraft_type"] = track.plan.aircraft_type;
            fields["lat"] = a.state.position.lat;
            fields["lon"] = a.state.position.lon;
            fields["fl"] = a.state.fl;
            fields["seeds"] = {{"latency", derive_seed(m_spec.seed, track.callsign + "/latency")}};
            m_log.append(t, "spawn", std::move(fields));
            m_aircraft.emplace(track.callsign, std::move(a));
        }
    }

    void World::advance_replay(AircraftRecord &a, double t)
    {
        const auto &samples = a.track->samples;
        auto hi = std::lower_bound(samples.begin(), samples.end(), t,
                                   [](const TrackSample &s, double v) { return s.t < v; });
        TrackSample p;
        double rocd = 0.0;
        if (hi == samples.begin())
        {
            p = samples.front();
        }
        else if (hi == samples.end())
        {
            p = samples.back();
        }
        else
        {
            const TrackSample &a0 = *(hi - 1);
            const TrackSample &a1 = *hi;
            const double f = (t - a0.t) / (a1.t - a0.t);
            p.t = t;
            p.position = {lerp(a0.position.lat, a1.position.lat, f), lerp(a0.position.lon, a1.position.lon, f)};
            p.fl = lerp(a0.fl, a1.fl, f);
            p.ground_speed_kt = lerp(a0.ground_speed_kt, a1.ground_speed_kt, f);
            p.heading_deg = wrap_360(a0.heading_deg + f * heading_delta(a0.heading_deg, a1.heading_deg));
            rocd = (a1.fl - a0.fl) * 100.0 / ((a1.t - a0.t) / 60.0);
        }
        if (hi != samples.end() && hi->t == t && hi + 1 != samples.end())
        {
            rocd = ((hi + 1)->fl - hi->fl) * 100.0 / (((hi + 1)->t - hi->t) / 60.0);
        }
        AircraftState &s = a.state;
        a.metrics.flown_nmi += distance_nmi(s.position, p.position);
        s.position = p.position;
        s.fl = p.fl;
        s.heading_deg = p.heading_deg;
        s.track_deg = p.heading_deg;
        s.ground_speed_kt = p.ground_speed_kt;
        s.rocd_fpm = rocd;
        // Recorded tracks carry ground speed only; it stands in for TAS.
        s.speed = speed_state_from_tas(p.ground_speed_kt, std::clamp(p.fl, kMinFl, kMaxFl), SpeedRegime::cas_governed);
    }

    IssueResult World::reject(const std::string &callsign, const Clearance &c, const std::string &issuer,
                              const std::string &reason, const std::string &origin)
    {
        Record fields;
        fields["callsign"] = callsign;
        fields["issuer"] = issuer;
        fields["origin"] = origin;
        fields["clearance"] = Record(to_json(c));
        fields["accepted"] = false;
        fields["reason"] = reason;
        m_log.append(time(), "clearance", std::move(fields));
        IssueResult r;
        r.reason = reason;
        return r;
    }

    IssueResult World::issue_clearance(const std::string &callsign, const Clearance &clearance, const std::string &issuer)
    {
        return issue(callsign, clearance, issuer, "external");
    }

    IssueResult World::issue(const std::string &callsign, const Clearance &c, const std::string &issuer,
                             const std::string &origin)
    {
        const double t = time();
        if (m_finished)
        {
            return reject(callsign, c, issuer, "simulation finished", origin);
        }
        const auto it = m_aircraft.find(callsign);
        if (it == m_aircraft.end())
        {
            return reject(callsign, c, issuer, "unknown callsign", origin);
        }
        AircraftRecord &a = it->second;
        const std::string bad = check_clearance_attributes(c);
        if (!bad.empty())
        {
            return reject(callsign, c, issuer, bad, origin);
        }
        std::string reason;
        std::visit(
            [&](const auto &x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, DirectTo> || std::is_same_v<T, DescendWhenReadyLevelBy> ||
                              std::is_same_v<T, DescendNowLevelBy>)
                {
                    if (m_spec.airspace.find_waypoint(x.waypoint) == nullptr)
                    {
                        reason = "unknown waypoint " + x.waypoint;
                    }
                }
                else if constexpr (std::is_same_v<T, ContactFrequency>)
                {
                    if (!m_spec.airspace.has_group(x.group_id))
                    {
                        reason = "unknown group " + x.group_id;
                    }
                }
            },
            c);
        if (!reason.empty())
        {
            return reject(callsign, c, issuer, reason, origin);
        }
        if (a.quarantined)
        {
            return reject(callsign, c, issuer, "aircraft quarantined", origin);
        }
        if (a.state.source == Source::replay && !std::holds_alternative<ContactFrequency>(c))
        {
            return reject(callsign, c, issuer, "aircraft not under simulation control", origin);
        }
        if (std::holds_alternative<ChangeRocd>(c) && a.state.intent.vertical.mode == VerticalMode::level)
        {
            return reject(callsign, c, issuer, "not climbing or descending", origin);
        }
        auto constrained = [&](double fl, const std::string &wp) -> std::string {
            if (fl >= a.state.fl)
            {
                return "target level not below current level";
            }
            const CorrectionSample mean = correction_for(m_models.find(a.perf->aircraft_type, Phase::descent), *a.perf,
                                                         PredictMode::mean, 0);
            PilotContext ctx = context_for(a, t);
            ctx.wind = m_forecast.active(t);
            ctx.climb = &mean;
            ctx.descent = &mean;
            const double margin =
                descent_level_margin(a.state, fl, wp, std::numeric_limits<double>::infinity(), ctx);
            return margin >= 0.0 ? "" : "constraint unachievable";
        };
        if (const auto *d = std::get_if<DescendWhenReadyLevelBy>(&c))
        {
            reason = constrained(d->fl, d->waypoint);
        }
        else if (const auto *d2 = std::get_if<DescendNowLevelBy>(&c))
        {
            reason = constrained(d2->fl, d2->waypoint);
        }
        if (!reason.empty())
        {
            return reject(callsign, c, issuer, reason, origin);
        }

        const LatencyModel &L = m_spec.latency;
        double delay = L.mean_s + L.jitter_s * (2.0 * a.latency_rng.uniform01() - 1.0);
        if (L.kind == LatencyKind::heavy_tailed)
        {
            const double u = a.latency_rng.uniform01();
            if (u < L.tail_probability && L.tail_mean_s > 0.0)
            {
                delay += a.latency_rng.exponential(1.0 / L.tail_mean_s);
            }
        }
        delay = std::max(0.0, delay);

        PendingClearance p{c, t + delay, m_next_clearance_seq++, issuer};
        auto &pending = a.state.intent.pending;
        const auto pos = std::upper_bound(pending.begin(), pending.end(), p, [](const auto &x, const auto &y) {
            return std::tie(x.execute_at, x.seq) < std::tie(y.execute_at, y.seq);
        });
        pending.insert(pos, p);
        ++a.metrics.clearance_count;
        ++m_clearances_this_tick;

        Record fields;
        fields["callsign"] = callsign;
        fields["issuer"] = issuer;
        fields["origin"] = origin;
        fields["clearance"] = Record(to_json(c));
        fields["accepted"] = true;
        fields["seq"] = p.seq;
        fields["execute_at"] = p.execute_at;
        m_log.append(t, "clearance", std::move(fields));
        return IssueResult{true, "", p.execute_at, p.seq};
    }

    void World::execute_due(AircraftRecord &a, double t)
    {
        auto &pending = a.state.intent.pending;
        while (!pending.empty() && pending.front().execute_at <= t + 1e-9)
        {
            const PendingClearance p = pending.front();
            pending.erase(pending.begin());
            execute(a, p, t);
            if (a.quarantined)
            {
                return;
            }
        }
    }

    void World::execute(AircraftRecord &a, const PendingClearance &p, double t)
    {
        AircraftState &s = a.state;
        const std::string &cs = s.callsign;
        Record fields;
        fields["callsign"] = cs;
        fields["seq"] = p.seq;
        fields["kind"] = clearance_name(p.clearance);

        auto set_vertical = [&](double fl) {
            VerticalIntent v;
            v.target_fl = fl;
            v.mode = fl > s.fl ? VerticalMode::climbing : fl < s.fl ? VerticalMode::descending : VerticalMode::level;
            v.started = true;
            s.intent.vertical = v;
            s.selected_fl = fl;
        };
        auto mean_context = [&](CorrectionSample &mean) {
            mean = correction_for(m_models.find(a.perf->aircraft_type, Phase::descent), *a.perf, PredictMode::mean, 0);
            PilotContext ctx = context_for(a, t);
            ctx.wind = m_forecast.active(t);
            ctx.climb = &mean;
            ctx.descent = &mean;
            return ctx;
        };

        if (s.source == Source::replay && !std::holds_alternative<ContactFrequency>(p.clearance))
        {
            fields["reason"] = "aircraft not under simulation control";
            m_log.append(t, "clearance_rejected", std::move(fields));
            return;
        }

        std::string rejected;
        bool at_risk = false;
        std::visit(
            [&](const auto &c) {
                using T = std::decay_t<decltype(c)>;
                LateralIntent &lat = s.intent.lateral;
                if constexpr (std::is_same_v<T, DirectTo>)
                {
                    lat.mode = LateralMode::route_following;
                    lat.turn_direction.reset();
                    const auto found = std::find(lat.route.begin(), lat.route.end(), c.waypoint);
                    if (found != lat.route.end())
                    {
                        lat.next_index = static_cast<std::size_t>(found - lat.route.begin());
                    }
                    else
                    {
                        std::vector<std::string> route{c.waypoint};
                        for (std::size_t i = std::min(lat.next_index, lat.route.size()); i < lat.route.size(); ++i)
                        {
                            route.push_back(lat.route[i]);
                        }
                        lat.route = std::move(route);
                        lat.next_index = 0;
                    }
                }
                else if constexpr (std::is_same_v<T, FlyHeading>)
                {
                    lat.mode = LateralMode::heading_hold;
                    lat.hold_heading_deg = wrap_360(c.heading_deg);
                    lat.turn_direction.reset();
                }
                else if constexpr (std::is_same_v<T, TurnBy>)
                {
                    lat.mode = LateralMode::heading_hold;
                    lat.hold_heading_deg =
                        wrap_360(s.heading_deg + (c.direction == TurnDirection::right ? c.degrees : -c.degrees));
                    lat.turn_direction = c.degrees > 0.0 ? std::optional<TurnDirection>(c.direction) : std::nullopt;
                }
                else if constexpr (std::is_same_v<T, MaintainPresentHeading>)
                {
                    lat.mode = LateralMode::heading_hold;
                    lat.hold_heading_deg = s.heading_deg;
                    lat.turn_direction.reset();
                }
                else if constexpr (std::is_same_v<T, ClimbDescendNow>)
                {
                    set_vertical(c.fl);
                }
                else if constexpr (std::is_same_v<T, DescendNowLevelBy>)
                {
                    CorrectionSample mean;
                    const PilotContext ctx = mean_context(mean);
                    const double margin = descent_level_margin(s, c.fl, c.waypoint,
                                                               std::numeric_limits<double>::infinity(), ctx);
                    set_vertical(c.fl);
                    s.intent.vertical.constraint = LevelConstraint{c.fl, c.waypoint};
                    at_risk = margin < 0.0;
                }
                else if constexpr (std::is_same_v<T, DescendWhenReadyLevelBy>)
                {
                    CorrectionSample mean;
                    const PilotContext ctx = mean_context(mean);
                    const TopOfDescent tod = c.fl < s.fl ? compute_top_of_descent(s, c.fl, c.waypoint, ctx) : TopOfDescent{};
                    set_vertical(c.fl);
                    s.intent.vertical.constraint = LevelConstraint{c.fl, c.waypoint};
                    if (tod.feasible && s.intent.vertical.mode == VerticalMode::descending)
                    {
                        s.intent.vertical.started = false;
                        s.intent.vertical.tod_distance_nmi = tod.start_distance_nmi;
                        s.intent.vertical.top_of_descent = tod.position;
                        fields["tod_distance_nmi"] = tod.start_distance_nmi;
                        fields["tod_lat"] = tod.position.lat;
                        fields["tod_lon"] = tod.position.lon;
                    }
                    else
                    {
                        s.intent.vertical.top_of_descent = s.position;
                        at_risk = s.intent.vertical.mode == VerticalMode::descending;
                    }
                }
                else if constexpr (std::is_same_v<T, ChangeCas>)
                {
                    s.intent.speed.cas_kt = c.cas_kt;
                    s.intent.speed.mach.reset();
                }
                else if constexpr (std::is_same_v<T, ChangeMach>)
                {
                    s.intent.speed.mach = c.mach;
                    s.intent.speed.cas_kt.reset();
                }
                else if constexpr (std::is_same_v<T, ChangeRocd>)
                {
                    if (s.intent.vertical.mode == VerticalMode::level)
                    {
                        rejected = "not climbing or descending";
                    }
                    else
                    {
                        s.intent.vertical.commanded_rocd_fpm = c.rocd_fpm;
                    }
                }
                else if constexpr (std::is_same_v<T, ContactFrequency>)
                {
                    // Handled below: it may change the aircraft's source.
                }
            },
            p.clearance);

        if (!rejected.empty())
        {
            fields["reason"] = rejected;
            m_log.append(t, "clearance_rejected", std::move(fields));
            return;
        }
        m_log.append(t, "clearance_executed", std::move(fields));
        if (at_risk)
        {
            Record risk;
            risk["callsign"] = cs;
            risk["seq"] = p.seq;
            m_log.append(t, "constraint_at_risk", std::move(risk));
        }
        if (const auto *cf = std::get_if<ContactFrequency>(&p.clearance))
        {
            handover(a, cf->group_id, t);
        }
    }

    void World::handover(AircraftRecord &a, const std::string &group, double t)
    {
        if (!m_spec.airspace.has_group(group))
        {
            throw DefinitionError("handover to unknown group " + group);
        }
        if (a.state.comms_group == group)
        {
            return;
        }
        Record fields;
        fields["callsign"] = a.state.callsign;
        fields["from"] = a.state.comms_group;
        fields["to"] = group;
        m_log.append(t, "handover", std::move(fields));
        a.state.comms_group = group;
        const bool simulated_group =
            std::find(m_spec.simulated_groups.begin(), m_spec.simulated_groups.end(), group) != m_spec.simulated_groups.end();
        if (a.state.source == Source::replay && simulated_group)
        {
            convert_to_simulated(a, t);
        }
    }

    void World::convert_to_simulated(AircraftRecord &a, double t)
    {
        AircraftState &s = a.state;
        bool fallback = false;
        if (a.perf == nullptr)
        {
            a.perf = &perf_for(kFallbackType);
            fallback = true;
        }
        s.source = Source::simulated;
        a.track = nullptr;
        sample_corrections(a);

        s.intent = Intent{};
        s.intent.lateral.mode = LateralMode::heading_hold;
        s.intent.lateral.hold_heading_deg = s.heading_deg;
        for (std::size_t i = 0; i < s.plan.route.size(); ++i)
        {
            const Waypoint &w = waypoint_or_throw(m_spec.airspace, s.plan.route[i]);
            if (distance_nmi(s.position, w.pos) > kCaptureNmi &&
                std::abs(heading_delta(s.heading_deg, initial_course_deg(s.position, w.pos))) < 90.0)
            {
                s.intent.lateral.mode = LateralMode::route_following;
                s.intent.lateral.route = s.plan.route;
                s.intent.lateral.next_index = i;
                break;
            }
        }
        s.intent.lateral.target_heading_deg = s.heading_deg;
        s.intent.vertical.mode = VerticalMode::level;
        s.intent.vertical.target_fl = s.fl;
        s.selected_fl = s.fl;
        s.intent.speed.cruise = {std::clamp(s.speed.cas_kt, kMinCasKt, kMaxCasKt), std::clamp(s.speed.mach, 0.31, 0.94)};
        s.rocd_fpm = 0.0;

        Record fields;
        fields["callsign"] = s.callsign;
        fields["aircraft_type"] = a.perf->aircraft_type;
        fields["seeds"] = {{"climb", derive_seed(m_spec.seed, s.callsign + "/climb")},
                           {"descent", derive_seed(m_spec.seed, s.callsign + "/descent")}};
        if (fallback)
        {
            fields["perf_fallback"] = true;
        }
        m_log.append(t, "conversion", std::move(fields));
    }

    void World::advance_simulated(AircraftRecord &a, double t0)
    {
        const int n = static_cast<int>(std::lround(m_config.tick_s / m_config.substep_s));
        const double grid = m_config.substep_s;
        // Clearances falling inside a sub-step split it, so they take effect at execute_at
        // rather than at the next grid point.
        constexpr double kMinSplitS = 1e-3;
        double tau = t0;
        int k = 0;
        while (k < n)
        {
            if (tau > t0)
            {
                execute_due(a, tau);
            }
            const double step_end = t0 + (k + 1) * grid;
            double dt = step_end - tau;
            const auto &pending = a.state.intent.pending;
            if (!pending.empty())
            {
                const double due = pending.front().execute_at;
                if (due > tau + kMinSplitS && due < step_end - kMinSplitS)
                {
                    dt = due - tau;
                }
            }
            PilotEvents e;
            AircraftState next;
            try
            {
                next = pilot_step(a.state, context_for(a, tau), dt, &e);
            }
            catch (const IntegrationFault &f)
            {
                a.state = f.pre_step();
                a.quarantined = true;
                Record fields;
                fields["callsign"] = a.state.callsign;
                fields["reason"] = f.what();
                m_log.append(tau, "quarantine", std::move(fields));
                return;
            }
            for (const auto &w : e.sequenced)
            {
                m_log.append(tau, "waypoint", Record{{"callsign", a.state.callsign}, {"waypoint", w}});
            }
            if (e.top_of_descent)
            {
                m_log.append(tau, "top_of_descent",
                             Record{{"callsign", a.state.callsign},
                                    {"lat", a.state.position.lat},
                                    {"lon", a.state.position.lon},
                                    {"fl", a.state.fl}});
            }
            if (e.diagnostics.levelled_off)
            {
                m_log.append(tau + dt, "level_off", Record{{"callsign", a.state.callsign}, {"fl", next.fl}});
            }
            a.metrics.fuel_kg += a.perf->sfc_proxy * e.diagnostics.thrust_n * dt;
            a.metrics.flown_nmi += distance_nmi(a.state.position, next.position);
            if (in_cruise(a.state))
            {
                a.metrics.cruise_time_s += dt;
                if (a.state.plan.requested_fl > 0.0 && a.state.fl < a.state.plan.requested_fl - kCruiseBelowToleranceFl)
                {
                    a.metrics.cruise_below_requested_s += dt;
                }
            }
            a.state = std::move(next);
            if (tau + dt >= step_end - 1e-9)
            {
                ++k;
                tau = step_end;
            }
            else
            {
                tau += dt;
            }
        }
    }

    void World::update_groups(double t)
    {
        std::vector<std::string> exits;
        const BandboxConfig &config = m_spec.airspace.bandbox_at(t);
        for (auto &[cs, a] : m_aircraft)
        {
            if (a.quarantined)
            {
                continue;
            }
            std::optional<std::string> g;
            try
            {
                g = controlling_group(a.state.position.lat, a.state.position.lon, a.state.fl, config, m_spec.airspace);
            }
            catch (const DefinitionError &)
            {
                g.reset();
            }
            if (!g)
            {
                if (a.entered)
                {
                    exits.push_back(cs);
                }
                continue;
            }
            a.entered = true;
            const std::string prev = a.state.controlling_group;
            if (prev == *g)
            {
                continue;
            }
            a.state.controlling_group = *g;
            if (a.state.comms_group.empty())
            {
                a.state.comms_group = *g;
            }
            if (prev.empty())
            {
                continue;
            }
            m_log.append(t, "sector_crossing", Record{{"callsign", cs}, {"from", prev}, {"to", *g}});
            for (auto &c : m_coordinations)
            {
                if (c.spec.callsign != cs || c.spec.from_group != prev || c.spec.to_group != *g ||
                    c.status == CoordinationStatus::satisfied || c.status == CoordinationStatus::violated)
                {
                    continue;
                }
                const bool ok = coordination_satisfied(c.spec, a.state.fl, a.state.position, m_spec.airspace,
                                                       m_config.coordination_fl_tolerance,
                                                       m_config.coordination_nmi_tolerance);
                c.status = ok ? CoordinationStatus::satisfied : CoordinationStatus::violated;
                c.fl_deviation = a.state.fl - c.spec.transfer_fl;
                Record fields{{"callsign", cs},
                              {"from", prev},
                              {"to", *g},
                              {"status", to_string(c.status)},
                              {"fl_deviation", c.fl_deviation}};
                if (c.spec.transfer_point)
                {
                    c.point_distance_nmi =
                        distance_nmi(a.state.position, waypoint_or_throw(m_spec.airspace, *c.spec.transfer_point).pos);
                    fields["point_distance_nmi"] = *c.point_distance_nmi;
                }
                m_log.append(t, "coordination", std::move(fields));
                if (ok)
                {
                    ++m_report.coordinations_satisfied;
                    ++m_coordinations_this_tick;
                }
                else
                {
                    ++m_report.coordinations_violated;
                }
            }
        }
        for (const auto &cs : exits)
        {
            remove(cs, t, "exit");
        }
    }

    void World::finalise_efficiency(const AircraftRecord &a)
    {
        const std::string &cs = a.state.callsign;
        m_report.fuel_by_aircraft[cs] = a.metrics.fuel_kg;
        m_report.fuel_proxy_kg += a.metrics.fuel_kg;
        m_report.clearance_count[cs] = a.metrics.clearance_count;
        EfficiencyInput in;
        in.reference_nmi = plan_reference_nmi(a.plan_polyline, a.metrics.start, a.state.position);
        in.flown_nmi = a.metrics.flown_nmi;
        in.cruise_time_s = a.metrics.cruise_time_s;
        in.cruise_below_requested_s = a.metrics.cruise_below_requested_s;
        in.has_plan = a.plan_polyline.size() >= 2 && a.state.plan.requested_fl > 0.0;
        const double proxy = inefficiency_3di_proxy(in);
        m_report.inefficiency_by_aircraft[cs] = proxy;
        m_3di_sum += proxy;
        ++m_3di_count;
        m_report.mean_3di_proxy = m_3di_sum / m_3di_count;
    }

    void World::remove(const std::string &callsign, double t, const std::string &reason)
    {
        const auto it = m_aircraft.find(callsign);
        if (it == m_aircraft.end())
        {
            return;
        }
        for (const auto &e : m_monitor.close_involving(t, callsign).closed)
        {
            m_log.append(t, "los_close",
                         Record{{"a", e.a}, {"b", e.b}, {"start", e.start}, {"end", e.end},
                                {"min_lateral_nmi", e.min_lateral_nmi}, {"min_vertical_fl", e.min_vertical_fl},
                                {"severity", e.severity}});
        }
        finalise_efficiency(it->second);
        m_log.append(t, "exit",
                     Record{{"callsign", callsign},
                            {"reason", reason},
                            {"fuel_kg", it->second.metrics.fuel_kg},
                            {"inefficiency_3di_proxy", m_report.inefficiency_by_aircraft[callsign]}});
        m_aircraft.erase(it);
    }

    std::vector<TrafficPoint> World::traffic() const
    {
        std::vector<TrafficPoint> out;
        for (const auto &[cs, a] : m_aircraft)
        {
            if (!a.quarantined)
            {
                out.push_back({cs, a.state.position, a.state.fl});
            }
        }
        return out;
    }

    void World::run_metrics(double t)
    {
        const auto snap = traffic();
        const auto tr = m_monitor.update(t, scan_separation(snap));
        for (const auto &e : tr.opened)
        {
            m_log.append(t, "los_open",
                         Record{{"a", e.a}, {"b", e.b}, {"lateral_nmi", e.min_lateral_nmi}, {"vertical_fl", e.min_vertical_fl}});
        }
        for (const auto &e : tr.closed)
        {
            m_log.append(t, "los_close",
                         Record{{"a", e.a}, {"b", e.b}, {"start", e.start}, {"end", e.end},
                                {"min_lateral_nmi", e.min_lateral_nmi}, {"min_vertical_fl", e.min_vertical_fl},
                                {"severity", e.severity}});
        }
        const double margin = assured_margin(snap);
        double progress = 0.0;
        for (auto &[cs, a] : m_aircraft)
        {
            if (a.plan_polyline.size() >= 2 && !a.quarantined)
            {
                const double pos = route_position_nmi(a.plan_polyline, a.state.position);
                progress += pos - a.last_route_position;
                a.last_route_position = pos;
            }
            a.metrics.last = a.state.position;
        }
        const double reward =
            compose_reward({snap, m_clearances_this_tick, progress, m_coordinations_this_tick}, m_config.reward);
        m_report.assured_margin_trace.push_back(margin);
        m_report.min_assured_margin = std::min(m_report.min_assured_margin, margin);
        m_report.reward_trace.push_back(reward);
        m_report.tick_times.push_back(t);

        if (m_config.log_snapshots)
        {
            Record fields;
            fields["aircraft"] = snapshot_json();
            fields["reward"] = reward;
            fields["assured_margin"] = margin;
            fields["open_los"] = m_monitor.open_events().size();
            m_log.append(t, "snapshot", std::move(fields));
        }
    }

    nlohmann::ordered_json World::snapshot_json() const
    {
        Record list = Record::array();
        for (const auto &[cs, a] : m_aircraft)
        {
            const AircraftState &s = a.state;
            Record r;
            r["callsign"] = cs;
            r["lat"] = s.position.lat;
            r["lon"] = s.position.lon;
            r["fl"] = s.fl;
            r["heading_deg"] = s.heading_deg;
            r["cas_kt"] = s.speed.cas_kt;
            r["mach"] = s.speed.mach;
            r["tas_kt"] = s.speed.tas_kt;
            r["rocd_fpm"] = s.rocd_fpm;
            r["ground_speed_kt"] = s.ground_speed_kt;
            r["source"] = to_string(s.source);
            r["vertical_mode"] = to_string(s.intent.vertical.mode);
            r["controlling_group"] = s.controlling_group;
            r["comms_group"] = s.comms_group;
            if (a.quarantined)
            {
                r["quarantined"] = true;
            }
            list.push_back(std::move(r));
        }
        return list;
    }

    void World::tick()
    {
        if (m_finished)
        {
            throw std::logic_error("tick after finish");
        }
        const double t0 = time();
        m_clearances_this_tick = 0;
        m_coordinations_this_tick = 0;

        spawn_due();
        if (m_config.run_script)
        {
            while (m_next_action < m_spec.actions.size() && m_spec.actions[m_next_action].t <= t0 + 1e-9)
            {
                const ScriptedAction &act = m_spec.actions[m_next_action++];
                issue(act.callsign, act.clearance, act.issuer, "script");
            }
        }

        // (1) due clearances
        for (auto &[cs, a] : m_aircraft)
        {
            if (!a.quarantined)
            {
                execute_due(a, t0);
            }
        }

        // (2) replay aircraft, including data-driven transfers that may convert them
        const double t1 = t0 + m_config.tick_s;
        std::vector<std::string> finished_tracks;
        for (auto &[cs, a] : m_aircraft)
        {
            if (a.state.source != Source::replay || a.quarantined)
            {
                continue;
            }
            while (a.track != nullptr && a.next_transfer < a.track->transfers.size() &&
                   a.track->transfers[a.next_transfer].t <= t0 + 1e-9)
            {
                handover(a, a.track->transfers[a.next_transfer++].to_group, t0);
            }
            if (a.state.source != Source::replay)
            {
                continue;
            }
            if (a.track->samples.back().t < t1)
            {
                finished_tracks.push_back(cs);
                continue;
            }
            advance_replay(a, t1);
        }

        // (3) simulated aircraft
        for (auto &[cs, a] : m_aircraft)
        {
            if (a.state.source == Source::simulated && !a.quarantined)
            {
                advance_simulated(a, t0);
            }
        }

        ++m_tick;
        for (const auto &cs : finished_tracks)
        {
            remove(cs, t1, "track_end");
        }
        // (4) boundary crossings and coordinations, (5) metrics, (6) snapshot
        update_groups(t1);
        run_metrics(t1);
    }

    std::uint64_t World::annotate(const std::string &type, EventLog::Record fields)
    {
        return m_log.append(time(), type, std::move(fields));
    }

    std::uint64_t World::state_hash() const
    {
        Record r = snapshot_json();
        Record pending = Record::array();
        for (const auto &[cs, a] : m_aircraft)
        {
            const Intent &in = a.state.intent;
            Record i{{"callsign", cs},
                     {"lateral", static_cast<int>(in.lateral.mode)},
                     {"next", in.lateral.next_index},
                     {"target_heading", in.lateral.target_heading_deg},
                     {"vertical", static_cast<int>(in.vertical.mode)},
                     {"target_fl", in.vertical.target_fl},
                     {"cas", in.speed.cas_kt.value_or(-1.0)},
                     {"mach", in.speed.mach.value_or(-1.0)}};
            for (const auto &p : in.pending)
            {
                i["pending"].push_back({p.seq, p.execute_at});
            }
            pending.push_back(std::move(i));
        }
        const std::string text = Record{{"tick", m_tick}, {"aircraft", r}, {"intent", pending}}.dump();
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : text)
        {
            h = (h ^ c) * 1099511628211ULL;
        }
        return h;
    }

    void World::finish()
    {
        if (m_finished)
        {
            return;
        }
        const double t = time();
        for (const auto &e : m_monitor.close_all(t).closed)
        {
            m_log.append(t, "los_close",
                         Record{{"a", e.a}, {"b", e.b}, {"start", e.start}, {"end", e.end},
                                {"min_lateral_nmi", e.min_lateral_nmi}, {"min_vertical_fl", e.min_vertical_fl},
                                {"severity", e.severity}});
        }
        for (const auto &[cs, a] : m_aircraft)
        {
            finalise_efficiency(a);
        }
        m_report.los_count = static_cast<int>(m_monitor.closed_events().size());

        Record fields;
        fields["los_count"] = m_report.los_count;
        fields["min_assured_margin"] = m_report.min_assured_margin;
        fields["fuel_proxy_kg"] = m_report.fuel_proxy_kg;
        fields["mean_3di_proxy"] = m_report.mean_3di_proxy;
        fields["coordination_compliance"] = m_report.coordination_compliance();
        fields["coordinations_satisfied"] = m_report.coordinations_satisfied;
        fields["coordinations_violated"] = m_report.coordinations_violated;
        double total_reward = 0.0;
        for (double r : m_report.reward_trace)
        {
            total_reward += r;
        }
        fields["total_reward"] = total_reward;
        fields["clearance_count"] = m_report.clearance_count;
        fields["fuel_by_aircraft"] = m_report.fuel_by_aircraft;
        fields["inefficiency_by_aircraft"] = m_report.inefficiency_by_aircraft;
        m_log.append(t, "metrics", std::move(fields));
        m_finished = true;
    }

    RunStats run(World &world, double speed_factor)
    {
        using clock = std::chrono::steady_clock;
        RunStats stats;
        const auto start = clock::now();
        const double budget = speed_factor > 0.0 ? world.config().tick_s / speed_factor : 0.0;
        while (!world.done())
        {
            world.tick();
            ++stats.ticks;
            if (speed_factor > 0.0)
            {
                const auto deadline = start + std::chrono::duration_cast<clock::duration>(
                                                  std::chrono::duration<double>(budget * static_cast<double>(stats.ticks)));
                const auto now = clock::now();
                if (now > deadline)
                {
                    stats.lag.emplace_back(world.tick_index(), std::chrono::duration<double>(now - deadline).count());
                }
                else
                {
                    std::this_thread::sleep_until(deadline);
                }
            }
        }
        world.finish();
        stats.sim_seconds = world.time();
        stats.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
        return stats;
    }

    EventLog replay_log(const ScenarioSpec &spec, const ModelLibrary &models, const EventLog &log)
    {
        const WorldConfig config = world_config_from_json(nlohmann::json(log.header().value("config", Record::object())));
        ModelLibrary copy = models;
        World world(spec, std::move(copy), config);
        std::vector<const Record *> external;
        for (const Record *r : log.of_type("clearance"))
        {
            if ((*r)["origin"] == "external")
            {
                external.push_back(r);
            }
        }
        std::size_t next = 0;
        while (!world.done())
        {
            while (next < external.size() && (*external[next])["t"].get<double>() <= world.time() + 1e-9)
            {
                const Record &r = *external[next++];
                world.issue_clearance(r["callsign"].get<std::string>(), clearance_from_json(nlohmann::json(r["clearance"])),
                                      r["issuer"].get<std::string>());
            }
            world.tick();
        }
        world.finish();
        return world.log();
    }
}
