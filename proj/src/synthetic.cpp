#include "atcsim/synthetic.hpp"

#include "atcsim/rng.hpp"
#include "atcsim/tem.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace atcsim
{
    TruthSpec two_component_descent_truth()
    {
        TruthSpec s;
        // A slow, draggy population and a fast, clean one.
        s.components.push_back({0.6, -12.0, 4.0, 6.0, 3.0, 0.0, 0.05, 0.12, 0.04});
        s.components.push_back({0.4, 14.0, 4.0, -6.0, 3.0, 0.25, 0.05, -0.08, 0.04});
        return s;
    }

    TruthSpec planted_cas_bias_truth(double bias_kt)
    {
        TruthSpec s;
        s.components.push_back({1.0, bias_kt, 3.0, 0.0, 2.0, 0.0, 0.03, 0.0, 0.03});
        return s;
    }

    CorrectionSample truth_correction(const TruthSpec &spec, std::uint64_t seed, std::size_t index)
    {
        Rng rng(derive_seed(seed, "truth/" + std::to_string(index)));
        double total = 0.0;
        for (const auto &c : spec.components)
        {
            total += c.weight;
        }
        const double u = rng.uniform01() * total;
        const TruthComponent *comp = &spec.components.back();
        double acc = 0.0;
        for (const auto &c : spec.components)
        {
            acc += c.weight;
            if (u < acc)
            {
                comp = &c;
                break;
            }
        }
        const double offset = comp->cas_offset_mean + comp->cas_offset_sd * rng.normal();
        const double slope = comp->cas_slope_mean + comp->cas_slope_sd * rng.normal();
        const double thrust = comp->thrust_dev_mean + comp->thrust_dev_sd * rng.normal();
        const double drag = comp->drag_dev_mean + comp->drag_dev_sd * rng.normal();

        CorrectionSample c;
        for (int i = 0; i <= 40; ++i)
        {
            const double fl = 15.0 * i;
            c.fl_grid.push_back(fl);
            c.delta_cas.push_back(offset + slope * (fl - 250.0) / 250.0);
            c.thrust_mult.push_back(thrust);
            c.drag_mult.push_back(drag);
        }
        c.seed_tag = index;
        return c;
    }

    std::vector<Trajectory> synthetic_corpus(const TruthSpec &spec, std::size_t count, std::uint64_t seed,
                                             const PerfCoefficients *perf)
    {
        const PerfCoefficients &p = perf != nullptr ? *perf : builtin_perf(spec.aircraft_type);
        std::vector<Trajectory> out;
        out.reserve(count);
        PredictOptions options;
        options.dt = 1.0;
        options.horizon_s = 3600.0;
        options.post_level_s = 30.0;
        for (std::size_t i = 0; i < count; ++i)
        {
            const CorrectionSample c = truth_correction(spec, seed, i);
            TrajectoryPoint start;
            start.position = spec.start;
            start.fl = spec.start_fl;
            start.heading_deg = spec.heading_deg;
            char callsign[24];
            std::snprintf(callsign, sizeof callsign, "SYN%05zu", i);
            AircraftState s = profile_initial_state(start, spec.end_fl, callsign);
            put_on_schedule(s, c, p);
            Trajectory t = rollout_profile(s, c, p, nullptr, options);
            t.phase = spec.phase;
            t.cleared_fl = spec.end_fl;
            t.aircraft_type = p.aircraft_type;
            out.push_back(std::move(t));
        }
        return out;
    }

    std::map<std::string, std::vector<TrackSample>> tracks_from_log(const EventLog &log)
    {
        std::map<std::string, std::vector<TrackSample>> out;
        for (const auto *r : log.of_type("snapshot"))
        {
            const double t = (*r)["t"].get<double>();
            for (const auto &a : (*r)["aircraft"])
            {
                out[a["callsign"].get<std::string>()].push_back({t,
                                                                 {a["lat"].get<double>(), a["lon"].get<double>()},
                                                                 a["fl"].get<double>(),
                                                                 a["ground_speed_kt"].get<double>(),
                                                                 a["heading_deg"].get<double>()});
            }
        }
        return out;
    }

    ReplicationRun synthetic_exercise(std::uint64_t seed, const ExerciseOptions &options, const ModelLibrary &models)
    {
        GenerationParams g;
        g.seed = seed;
        g.duration_s = options.duration_s;
        g.density_per_10min = options.density_per_10min;
        g.geometry = ConflictGeometry::mixed;
        ScenarioSpec s = generate_scenario(g);

        Rng rng(derive_seed(seed, "exercise"));
        const double tick = 6.0;
        for (const auto &f : s.flights)
        {
            const double first = std::ceil((f.entry_time_s + 30.0) / tick) * tick;
            const double last = options.duration_s - 120.0;
            if (first >= last)
            {
                continue;
            }
            for (int k = 0; k < options.clearances_per_flight; ++k)
            {
                ScriptedAction a;
                a.callsign = f.plan.callsign;
                a.issuer = "exercise";
                a.t = first + tick * static_cast<double>(rng.below(static_cast<std::uint64_t>((last - first) / tick) + 1));
                const double course = f.heading_deg.value_or(0.0);
                switch (rng.below(6))
                {
                case 0:
                    a.clearance = FlyHeading{wrap_360(std::round(course + rng.uniform(-40.0, 40.0)))};
                    break;
                case 1:
                    a.clearance = TurnBy{rng.below(2) == 0 ? TurnDirection::left : TurnDirection::right,
                                         std::round(rng.uniform(10.0, 45.0))};
                    break;
                case 2:
                    a.clearance = ClimbDescendNow{std::clamp(f.fl + (rng.below(2) == 0 ? -20.0 : 20.0), 200.0, 400.0)};
                    break;
                case 3:
                    a.clearance = ChangeCas{std::round(rng.uniform(250.0, 300.0))};
                    break;
                case 4:
                    a.clearance = DirectTo{f.plan.route.back()};
                    break;
                default:
                    a.clearance = DescendWhenReadyLevelBy{std::max(f.fl - 60.0, 100.0), f.plan.route.back()};
                    break;
                }
                s.actions.push_back(std::move(a));
            }
        }
        std::stable_sort(s.actions.begin(), s.actions.end(),
                         [](const ScriptedAction &x, const ScriptedAction &y) { return x.t < y.t; });

        WorldConfig config;
        config.substep_s = options.reference_substep_s;
        config.correction_mode = options.correction_mode;
        World world(s, models, config);
        run(world);

        ReplicationRun r;
        r.name = "EX" + std::to_string(seed);
        r.reference = tracks_from_log(world.log());
        r.scenario = std::move(s);
        return r;
    }
}
