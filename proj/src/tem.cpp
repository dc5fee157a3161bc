#include "atcsim/tem.hpp"

#include "atcsim/geo.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>

namespace atcsim
{
    namespace
    {
        constexpr double kEsfProbeM = 5.0;
        constexpr double kEsfMinDenominator = 0.3;
        constexpr int kMaxSubsteps = 8;

        double factor(double f) { return std::clamp(f, kMinForceFactor, kMaxForceFactor); }

        int vertical_direction(const AircraftState &s)
        {
            if (!s.vertically_active())
            {
                return 0;
            }
            return s.intent.vertical.mode == VerticalMode::climbing ? 1 : -1;
        }

        struct Rates
        {
            double rocd = 0.0;  // m/s
            double accel = 0.0; // m/s^2, unused when on schedule
            bool on_schedule = false;
            bool performance_limited = false;
            double thrust = 0.0;
        };

        double target_tas_ms(const AircraftState &s, const CorrectionSample &c, const PerfCoefficients &p, double h)
        {
            return speed_target(s, c, p, h / kFlToM).tas_ms(h);
        }

        Rates derive(const AircraftState &s, const CorrectionSample &c, const PerfCoefficients &p, double h, double v,
                     double dt)
        {
            Rates r;
            const double m = p.mass_ref_kg;
            const double fl = h / kFlToM;
            const AtmosphereState atm = isa_at(h);
            const double vt = target_tas_ms(s, c, p, h);
            const double err = vt - v;
            const double drag = p.drag(v, atm.density) * factor(c.drag_factor_at(fl));
            const int dir = vertical_direction(s);

            auto bounded = [&](double a) {
                a = std::clamp(a, -kMaxLongitudinalAccel, kMaxLongitudinalAccel);
                if (std::abs(a) * dt > std::abs(err))
                {
                    a = err / dt;
                }
                return a;
            };

            if (dir == 0)
            {
                r.accel = bounded(err / dt);
                r.thrust = std::max(0.0, drag + m * r.accel);
                return r;
            }

            const double thrust = p.max_climb_thrust(h) * (dir < 0 ? p.descent_thrust_factor : 1.0) *
                                  factor(c.thrust_factor_at(fl));
            const double excess = (thrust - drag) * v;
            r.on_schedule = std::abs(err) <= kOnScheduleToleranceKt * kKnotToMs;

            double esf = kCommandedRocdEsf;
            if (r.on_schedule)
            {
                const double dvdh = (target_tas_ms(s, c, p, h + kEsfProbeM) - target_tas_ms(s, c, p, h - kEsfProbeM)) /
                                    (2.0 * kEsfProbeM);
                esf = 1.0 / std::max(kEsfMinDenominator, 1.0 + v / kG0 * dvdh);
            }

            if (const auto &cmd = s.intent.vertical.commanded_rocd_fpm)
            {
                double rate = *cmd * kFpmToMs;
                if (dir > 0)
                {
                    const double available = esf * excess / (m * kG0);
                    if (available < rate)
                    {
                        rate = std::max(available, 0.0);
                        r.performance_limited = available <= 0.0;
                    }
                }
                r.rocd = dir * rate;
                if (!r.on_schedule)
                {
                    r.accel = bounded(err / dt);
                }
                r.thrust = std::max(0.0, drag + m * kG0 * r.rocd / v + m * (r.on_schedule ? 0.0 : r.accel));
                return r;
            }

            r.thrust = thrust;
            if (r.on_schedule)
            {
                r.rocd = esf * excess / (m * kG0);
            }
            else
            {
                double a = 0.7 * excess / (m * v);
                if (a * err <= 0.0)
                {
                    a = err > 0.0 ? kMaxLongitudinalAccel : -kMaxLongitudinalAccel;
                }
                r.accel = bounded(a);
                r.rocd = (excess - m * v * r.accel) / (m * kG0);
                if (dir < 0 && r.rocd > 0.0)
                {
                    // No zoom climbs while descending: bleed speed at level instead.
                    r.rocd = 0.0;
                    r.accel = std::max(excess / (m * v), -kMaxLongitudinalAccel);
                }
            }
            r.performance_limited = dir * r.rocd < 0.0;
            return r;
        }

        bool regime_at(const AircraftState &s, const CorrectionSample &c, const PerfCoefficients &p, double h)
        {
            return speed_target(s, c, p, h / kFlToM).mach_governed;
        }

        bool finite(const AircraftState &s)
        {
            return std::isfinite(s.position.lat) && std::isfinite(s.position.lon) && std::isfinite(s.fl) &&
                   std::isfinite(s.heading_deg) && std::isfinite(s.speed.tas_kt) && std::isfinite(s.speed.cas_kt) &&
                   std::isfinite(s.speed.mach) && std::isfinite(s.rocd_fpm);
        }

        double turn_towards(const AircraftState &s, double dt, std::optional<TurnDirection> &forced)
        {
            const double target = s.intent.lateral.target_heading_deg;
            double delta = heading_delta(s.heading_deg, target);
            if (forced)
            {
                const double right = wrap_360(target - s.heading_deg);
                delta = *forced == TurnDirection::right ? right : (right == 0.0 ? 0.0 : right - 360.0);
            }
            const double max_turn = turn_rate_deg_s(s.speed.tas_kt) * dt;
            if (std::abs(delta) <= max_turn)
            {
                forced.reset();
                return wrap_360(target);
            }
            return wrap_360(s.heading_deg + std::copysign(max_turn, delta));
        }
    }

    double SpeedTarget::tas_ms(double altitude_m) const
    {
        return mach_governed ? mach_to_tas_ms(mach, altitude_m) : cas_to_tas_ms(cas_kt * kKnotToMs, altitude_m);
    }

    SpeedTarget speed_target(const AircraftState &s, const CorrectionSample &c, const PerfCoefficients &p, double fl)
    {
        const SpeedIntent &si = s.intent.speed;
        if (si.mach)
        {
            return {0.0, *si.mach, true};
        }
        if (si.cas_kt)
        {
            return {*si.cas_kt, 0.0, false};
        }
        SpeedTarget t;
        if (s.vertically_active())
        {
            t.cas_kt = std::clamp(p.base_cas_at(fl) + c.delta_cas_at(fl), kMinCasKt, kMaxCasKt);
            t.mach = p.base_mach;
        }
        else if (si.cruise.cas_kt > 0.0 && si.cruise.mach > 0.0)
        {
            t.cas_kt = si.cruise.cas_kt;
            t.mach = si.cruise.mach;
        }
        else
        {
            t.cas_kt = p.base_cas_at(fl);
            t.mach = p.base_mach;
        }
        const double h = fl * kFlToM;
        t.mach_governed = tas_to_mach(cas_to_tas_ms(t.cas_kt * kKnotToMs, h), h) >= t.mach;
        return t;
    }

    double esf_constant_mach(double mach, double altitude_m)
    {
        if (altitude_m >= isa::kTropopauseM)
        {
            return 1.0;
        }
        return 1.0 / (1.0 + isa::kGamma * isa::kR * isa::kLapse / (2.0 * kG0) * mach * mach);
    }

    double esf_constant_cas(double mach, double altitude_m)
    {
        const double k = isa::kGamma;
        const double base = 1.0 + (k - 1.0) / 2.0 * mach * mach;
        const double pressure_term = std::pow(base, -1.0 / (k - 1.0)) * (std::pow(base, k / (k - 1.0)) - 1.0);
        const double lapse_term =
            altitude_m < isa::kTropopauseM ? k * isa::kR * isa::kLapse / (2.0 * kG0) * mach * mach : 0.0;
        return 1.0 / (1.0 + lapse_term + pressure_term);
    }

    double turn_rate_deg_s(double tas_kt)
    {
        const double v = std::max(tas_kt * kKnotToMs, 1.0);
        const double bank_limited = kG0 * std::tan(kMaxBankDeg * kDegToRad) / v * kRadToDeg;
        return std::min(kStandardTurnRate, bank_limited);
    }

    AircraftState tem_step(const AircraftState &s, const CorrectionSample &c, const PerfCoefficients &p,
                           const WindGrid *wind, double dt, StepDiagnostics *diag)
    {
        if (!(dt > 0.0 && dt <= 10.0))
        {
            throw std::invalid_argument("tem_step: dt must lie in (0, 10]");
        }
        StepDiagnostics local;
        StepDiagnostics &d = diag != nullptr ? *diag : local;
        d = StepDiagnostics{};

        AircraftState n = s;

        // Lateral: pre-step heading and TAS, truth wind at the pre-step position.
        const WindVector w = wind != nullptr ? wind_at(*wind, s.position.lat, s.position.lon, s.fl) : WindVector{};
        const GroundVector gv = ground_vector(s.speed.tas_kt, s.heading_deg, w);
        n.position = destination(s.position, gv.track_deg, gv.ground_speed_kt * dt / 3600.0);
        n.ground_speed_kt = gv.ground_speed_kt;
        n.track_deg = gv.track_deg;
        n.heading_deg = turn_towards(s, dt, n.intent.lateral.turn_direction);

        // Vertical and longitudinal, with sub-steps at level-off and regime changes.
        double h = s.fl * kFlToM;
        double v = s.speed.tas_kt * kKnotToMs;
        double remaining = dt;
        double thrust_impulse = 0.0;
        double rocd = 0.0;
        while (remaining > 1e-9 && d.substeps < kMaxSubsteps)
        {
            ++d.substeps;
            const Rates r = derive(n, c, p, h, v, remaining);
            d.performance_limited = d.performance_limited || r.performance_limited;
            double step = remaining;
            bool level_off = false;
            const int dir = vertical_direction(n);
            if (dir != 0 && r.rocd != 0.0)
            {
                const double to_go = n.intent.vertical.target_fl * kFlToM - h;
                if (to_go * r.rocd >= 0.0 && std::abs(r.rocd * step) >= std::abs(to_go))
                {
                    step = to_go / r.rocd;
                    level_off = true;
                }
            }
            if (r.on_schedule && !level_off && d.substeps < kMaxSubsteps)
            {
                const bool before = regime_at(n, c, p, h);
                if (regime_at(n, c, p, h + r.rocd * step) != before)
                {
                    double lo = 0.0;
                    double hi = 1.0;
                    for (int i = 0; i < 40; ++i)
                    {
                        const double mid = 0.5 * (lo + hi);
                        (regime_at(n, c, p, h + r.rocd * step * mid) == before ? lo : hi) = mid;
                    }
                    if (hi * step > 1e-6)
                    {
                        step *= hi;
                    }
                }
            }

            h += r.rocd * step;
            if (level_off)
            {
                h = n.intent.vertical.target_fl * kFlToM;
            }
            v = r.on_schedule ? target_tas_ms(n, c, p, h) : v + r.accel * step;
            thrust_impulse += r.thrust * step;
            rocd = r.rocd;
            remaining -= step;
            if (level_off)
            {
                d.levelled_off = true;
                rocd = 0.0;
                n.intent.vertical.mode = VerticalMode::level;
                n.intent.vertical.commanded_rocd_fpm.reset();
                n.intent.vertical.tod_distance_nmi.reset();
                n.intent.vertical.started = true;
            }
        }

        n.fl = h / kFlToM;
        const bool mach_governed = speed_target(n, c, p, n.fl).mach_governed;
        n.speed = speed_state_from_tas(v / kKnotToMs, n.fl, mach_governed ? SpeedRegime::mach_governed
                                                                            : SpeedRegime::cas_governed);
        n.rocd_fpm = rocd / kFpmToMs;
        d.thrust_n = thrust_impulse / (dt - remaining);

        if (!finite(n))
        {
            throw IntegrationFault("non-finite state for " + s.callsign, s);
        }
        return n;
    }

    CorrectionSample correction_for(const TrajectoryModel *model, const PerfCoefficients &p, PredictMode mode,
                                    std::uint64_t seed)
    {
        if (mode == PredictMode::baseline || model == nullptr)
        {
            return {};
        }
        return mode == PredictMode::mean ? mean_mode_correction(*model, &p) : sample_correction(*model, seed, &p);
    }

    AircraftState profile_initial_state(const TrajectoryPoint &point, double cleared_fl, const std::string &callsign)
    {
        AircraftState s;
        s.callsign = callsign;
        s.position = point.position;
        s.fl = point.fl;
        s.heading_deg = wrap_360(point.heading_deg);
        s.track_deg = s.heading_deg;
        s.ground_speed_kt = point.ground_speed_kt;
        s.rocd_fpm = point.rocd_fpm;
        s.speed = speed_state_from_tas(point.tas_kt, point.fl, SpeedRegime::cas_governed);
        s.intent.lateral.mode = LateralMode::heading_hold;
        s.intent.lateral.hold_heading_deg = s.heading_deg;
        s.intent.lateral.target_heading_deg = s.heading_deg;
        s.intent.vertical.target_fl = cleared_fl;
        s.intent.vertical.mode = cleared_fl > point.fl   ? VerticalMode::climbing
                                 : cleared_fl < point.fl ? VerticalMode::descending
                                                         : VerticalMode::level;
        s.selected_fl = cleared_fl;
        return s;
    }

    void put_on_schedule(AircraftState &s, const CorrectionSample &c, const PerfCoefficients &p)
    {
        const SpeedTarget t = speed_target(s, c, p, s.fl);
        s.speed = speed_state_from_tas(t.tas_ms(s.fl * kFlToM) / kKnotToMs, s.fl,
                                       t.mach_governed ? SpeedRegime::mach_governed : SpeedRegime::cas_governed);
    }

    TrajectoryPoint to_point(const AircraftState &s, double t)
    {
        return TrajectoryPoint{t,
                               s.position,
                               s.fl,
                               s.heading_deg,
                               s.speed.cas_kt,
                               s.speed.tas_kt,
                               s.speed.mach,
                               s.rocd_fpm,
                               s.ground_speed_kt};
    }

    Trajectory predict_profile(const AircraftState &initial, const TrajectoryModel *model, const PerfCoefficients &p,
                               const WindGrid *wind, const PredictOptions &options)
    {
        if (options.mode != PredictMode::baseline && model == nullptr)
        {
            throw std::invalid_argument("predict_profile: mean and sampled modes need a model");
        }
        return rollout_profile(initial, correction_for(model, p, options.mode, options.seed), p, wind, options);
    }

    Trajectory rollout_profile(const AircraftState &initial, const CorrectionSample &c, const PerfCoefficients &p,
                               const WindGrid *wind, const PredictOptions &options)
    {
        if (options.horizon_s > 3600.0)
        {
            throw std::invalid_argument("predict_profile: horizon must not exceed 3600 s");
        }

        AircraftState s = initial;
        s.intent.lateral.mode = LateralMode::heading_hold;
        s.intent.lateral.target_heading_deg = s.heading_deg;
        s.intent.lateral.turn_direction.reset();

        Trajectory out;
        out.callsign = s.callsign;
        out.aircraft_type = p.aircraft_type;
        out.phase = s.intent.vertical.mode == VerticalMode::climbing ? Phase::climb : Phase::descent;
        out.cleared_fl = s.intent.vertical.target_fl;
        out.points.push_back(to_point(s, 0.0));

        const int per_second = std::max(1, static_cast<int>(std::lround(1.0 / options.dt)));
        const double dt = 1.0 / per_second;
        double level_at = s.vertically_active() || s.intent.vertical.mode == VerticalMode::descending ? -1.0 : 0.0;
        for (int sec = 1; sec <= static_cast<int>(options.horizon_s); ++sec)
        {
            for (int k = 0; k < per_second; ++k)
            {
                StepDiagnostics diag;
                s = tem_step(s, c, p, wind, dt, &diag);
                if (diag.levelled_off && level_at < 0.0)
                {
                    level_at = sec;
                }
            }
            out.points.push_back(to_point(s, sec));
            if (level_at >= 0.0 && sec - level_at >= options.post_level_s)
            {
                break;
            }
        }
        return out;
    }
}
