// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.
#include "unit/fixtures.hpp"

#include "atcsim/atmosphere.hpp"
#include "atcsim/gateway.hpp"
#include "atcsim/geo.hpp"
#include "atcsim/json_io.hpp"
#include "atcsim/metrics.hpp"
#include "atcsim/rng.hpp"
#include "atcsim/server.hpp"
#include "atcsim/synthetic.hpp"
#include "atcsim/tem.hpp"
#include "atcsim/units.hpp"
#include "atcsim/validation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace atcsim;
using namespace atcsim::testing;
namespace fs = std::filesystem;

namespace
{
    struct Outcome
    {
        bool pass = false;
        std::string detail;
    };

    struct Criterion
    {
        std::string name;
        double budget_s;
        std::function<Outcome()> run;
    };

    std::string fmt(double v, int precision = 4)
    {
        std::ostringstream s;
        s << std::setprecision(precision) << v;
        return s.str();
    }

    fs::path g_out;

    void write_artifact(const std::string &name, const std::string &text)
    {
        std::ofstream out(g_out / name);
        out << text;
    }

    // Fitted once, shared by the self-consistency and top-of-descent checks.
    const TrajectoryModel &descent_model()
    {
        static const TrajectoryModel model = [] {
            FitOptions o;
            o.seed = 101;
            return fit_model(synthetic_corpus(two_component_descent_truth(), 2000, 1001), builtin_perf("B738"),
                             Phase::descent, o);
        }();
        return model;
    }

    // ---- determinism ----

    ScenarioSpec scripted(ConflictGeometry geometry, std::uint64_t seed)
    {
        GenerationParams g;
        g.seed = seed;
        g.duration_s = 1800.0;
        g.geometry = geometry;
        g.density_per_10min = 6.0;
        ScenarioSpec s = generate_scenario(g);
        Rng rng(seed * 31 + 5);
        for (const auto &f : s.flights)
        {
            const double t0 = f.entry_time_s + 60.0 + 6.0 * static_cast<double>(rng.below(20));
            s.actions.push_back({t0, f.plan.callsign, "script", FlyHeading{rng.uniform(0.0, 359.0)}});
            s.actions.push_back({t0 + 120.0, f.plan.callsign, "script", ClimbDescendNow{f.fl + (rng.below(2) ? 20.0 : -20.0)}});
            s.actions.push_back({t0 + 240.0, f.plan.callsign, "script", DirectTo{f.plan.route.back()}});
        }
        return s;
    }

    Outcome determinism()
    {
        const std::vector<std::pair<ConflictGeometry, std::uint64_t>> cases{
            {ConflictGeometry::crossing, 11}, {ConflictGeometry::head_on, 12}, {ConflictGeometry::mixed, 13}};
        std::size_t records = 0;
        for (const auto &[geometry, seed] : cases)
        {
            const ScenarioSpec spec = scripted(geometry, seed);
            std::string first;
            for (int k = 0; k < 3; ++k)
            {
                World w(spec);
                run(w);
                const std::string log = w.log().to_jsonl();
                if (k == 0)
                {
                    first = log;
                    records += w.log().records().size();
                    if (w.log().of_type("clearance").empty())
                    {
                        return {false, "seed " + std::to_string(seed) + " applied no scripted clearance"};
                    }
                }
                else if (log != first)
                {
                    return {false, "seed " + std::to_string(seed) + " repeat " + std::to_string(k) + " diverged"};
                }
            }
        }
        return {true, "3 scenarios x 3 repeats identical (" + std::to_string(records) + " records per repeat set)"};
    }

    // ---- separation oracle ----

    double haversine_nmi(LatLon a, LatLon b)
    {
        const double p1 = a.lat * kDegToRad, p2 = b.lat * kDegToRad;
        const double dp = p2 - p1, dl = (b.lon - a.lon) * kDegToRad;
        const double h = std::pow(std::sin(dp / 2), 2) + std::cos(p1) * std::cos(p2) * std::pow(std::sin(dl / 2), 2);
        return 2.0 * std::asin(std::min(1.0, std::sqrt(h))) * kEarthRadiusNmi;
    }

    Outcome separation_oracle()
    {
        Rng rng(777);
        std::size_t conflicts = 0;
        for (int k = 0; k < 1000; ++k)
        {
            const int n = 1 + static_cast<int>(rng.below(50));
            std::vector<TrafficPoint> snap;
            for (int i = 0; i < n; ++i)
            {
                snap.push_back({"C" + std::to_string(rng.below(100000)) + "_" + std::to_string(i),
                                {52.0 + rng.uniform(-0.5, 0.5), -1.0 + rng.uniform(-0.8, 0.8)},
                                290.0 + 10.0 * static_cast<double>(rng.below(6)) + rng.uniform(-5.0, 5.0)});
            }
            std::set<std::pair<std::string, std::string>> expected;
            for (int i = 0; i < n; ++i)
            {
                for (int j = 0; j < n; ++j)
                {
                    if (i != j && snap[i].callsign < snap[j].callsign &&
                        haversine_nmi(snap[i].position, snap[j].position) < 5.0 && std::abs(snap[i].fl - snap[j].fl) < 10.0)
                    {
                        expected.insert({snap[i].callsign, snap[j].callsign});
                    }
                }
            }
            std::set<std::pair<std::string, std::string>> got;
            for (const auto &c : scan_separation(snap))
            {
                got.insert({c.a, c.b});
            }
            if (got != expected)
            {
                return {false, "snapshot " + std::to_string(k) + ": " + std::to_string(got.size()) + " pairs vs " +
                                   std::to_string(expected.size())};
            }
            conflicts += expected.size();
        }
        return {true, "1000 snapshots identical, " + std::to_string(conflicts) + " conflicting pairs"};
    }

    // ---- ISA ----

    Outcome isa_round_trip()
    {
        double worst = 0.0;
        for (int cas = 150; cas <= 350; cas += 10)
        {
            for (int fl = 0; fl <= 450; fl += 50)
            {
                const double tas = cas_to_tas(cas, fl);
                worst = std::max(worst, std::abs(tas_to_cas(tas, fl) - cas));
                worst = std::max(worst, std::abs(cas_to_tas(tas_to_cas(tas, fl), fl) - tas));
            }
        }
        const double low = crossover_fl(150.0, 0.95);
        const double high = crossover_fl(300.0, 0.78);
        const double sentinel = crossover_fl(300.0, 0.40);
        const bool ok = worst < 1e-6 && low > high && sentinel == 600.0;
        return {ok, "max round-trip error " + fmt(worst, 3) + " kt; crossover(150,0.95)=FL" + fmt(low) +
                        " > crossover(300,0.78)=FL" + fmt(high) + "; crossover(300,0.40)=FL" + fmt(sentinel)};
    }

    // ---- integrator ----

    Outcome integrator()
    {
        const PerfCoefficients &p = builtin_perf("B738");
        TrajectoryPoint start;
        start.fl = 100.0;
        start.position = {52.0, -1.0};
        start.heading_deg = 90.0;
        start.tas_kt = cas_to_tas(p.base_cas_at(100.0), 100.0);
        AircraftState s = profile_initial_state(start, 350.0, "T1");
        s.plan.aircraft_type = "B738";
        put_on_schedule(s, {}, p);
        PredictOptions coarse;
        coarse.mode = PredictMode::baseline;
        coarse.dt = 1.0;
        PredictOptions fine = coarse;
        fine.dt = 0.125;
        const Trajectory a = rollout_profile(s, {}, p, nullptr, coarse);
        const Trajectory b = rollout_profile(s, {}, p, nullptr, fine);
        // The level-off sample is clamped to FL350, so extrapolate the last climbing segment instead.
        auto toc = [](const Trajectory &t) {
            for (std::size_t i = 2; i < t.points.size(); ++i)
            {
                if (t.points[i].fl >= 350.0)
                {
                    const auto &x = t.points[i - 2];
                    const auto &y = t.points[i - 1];
                    return y.t + (350.0 - y.fl) / (y.fl - x.fl) * (y.t - x.t);
                }
            }
            return std::numeric_limits<double>::infinity();
        };
        double gap = 0.0;
        for (std::size_t i = 0; i < std::min(a.points.size(), b.points.size()); ++i)
        {
            if (a.points[i].t != b.points[i].t)
            {
                return {false, "profiles sampled at different times"};
            }
            gap = std::max(gap, std::abs(a.points[i].fl - b.points[i].fl));
        }
        const double dtoc = std::abs(toc(a) - toc(b));
        return {dtoc < 2.0 && gap < 1.0,
                "ToC " + fmt(toc(a), 7) + " s vs " + fmt(toc(b), 7) + " s (delta " + fmt(dtoc, 3) + " s), max gap " +
                    fmt(gap, 3) + " FL"};
    }

    // ---- generative self-consistency ----

    Outcome self_consistency()
    {
        const auto held_out = synthetic_corpus(two_component_descent_truth(), 2000, 2002);
        FidelityOptions o;
        o.samples = 2000;
        o.seed = 3003;
        const DistributionReport r = fidelity_experiment(descent_model(), builtin_perf("B738"), held_out, o);
        write_artifact("fidelity_summary.csv", distribution_summary_csv(r));
        const QuantityReport *q = r.find("time_to_level_s");
        if (q == nullptr)
        {
            return {false, "time_to_level_s missing from the report"};
        }
        write_artifact("ecdf_time_to_level_s.csv", ecdf_csv(*q));
        const double w1_limit = 0.10 * q->reference_iqr;
        const bool ok = q->ks <= 0.10 && q->wasserstein <= w1_limit && q->n_model >= 1900 && q->n_reference >= 1900;
        return {ok, "KS " + fmt(q->ks, 3) + " (<= 0.10), W1 " + fmt(q->wasserstein, 3) + " s (<= " + fmt(w1_limit, 3) +
                        " s = 10% of IQR " + fmt(q->reference_iqr, 4) + " s), n=" + std::to_string(q->n_reference) + "/" +
                        std::to_string(q->n_model) + "; operational reference KS " +
                        fmt(OperationalReference::ks_time_to_bottom) + ", W1 " +
                        fmt(OperationalReference::w1_time_to_bottom_s) + " s (not reproducible here)"};
    }

    // ---- planted bias ----

    Outcome planted_bias()
    {
        const TruthSpec truth = planted_cas_bias_truth(15.0);
        FitOptions o;
        o.seed = 202;
        const PerfCoefficients &p = builtin_perf("B738");
        const TrajectoryModel model = fit_model(synthetic_corpus(truth, 2000, 4004), p, Phase::descent, o);
        const MaeReport r = mean_mode_mae_experiment(synthetic_corpus(truth, 500, 5005), model, p);
        write_artifact("mae.csv", mae_csv(r));
        const MaeRow *cas = r.find("cas_kt");
        const MaeRow *rocd = r.find("rocd_fpm");
        if (cas == nullptr || rocd == nullptr)
        {
            return {false, "missing MAE rows"};
        }
        return {cas->ratio < 0.8 && rocd->ratio < 0.8 && cas->trajectories > 0,
                "MAE ratio CAS " + fmt(cas->ratio, 3) + ", ROCD " + fmt(rocd->ratio, 3) + " (< 0.8) over " +
                    std::to_string(cas->trajectories) + " trajectories; operational reference " +
                    fmt(OperationalReference::mae_ratio_cas) + "/" + fmt(OperationalReference::mae_ratio_rocd)};
    }

    // ---- replication ----

    Outcome replication()
    {
        std::vector<ReplicationRun> self_runs;
        std::vector<ReplicationRun> refined_runs;
        for (std::uint64_t i = 0; i < 10; ++i)
        {
            ExerciseOptions o;
            self_runs.push_back(synthetic_exercise(600 + i, o));
            o.reference_substep_s = 0.125;
            refined_runs.push_back(synthetic_exercise(600 + i, o));
        }
        const ReplicationReport self = replication_experiment(self_runs, {});
        const ReplicationReport refined = replication_experiment(refined_runs, {});
        write_artifact("replication_self.csv", replication_csv(self));
        write_artifact("replication_refined.csv", replication_csv(refined));

        bool self_zero = true;
        bool refined_ok = true;
        double worst_lat = 0.0, worst_vert = 0.0;
        for (const auto &r : self.runs)
        {
            self_zero = self_zero && r.valid && r.samples > 0 && r.mean_lateral_nmi == 0.0 && r.mean_vertical_fl == 0.0;
        }
        for (const auto &r : refined.runs)
        {
            refined_ok = refined_ok && r.valid && r.samples > 0 && r.mean_lateral_nmi < 0.1 && r.mean_vertical_fl < 1.0;
            worst_lat = std::max(worst_lat, r.mean_lateral_nmi);
            worst_vert = std::max(worst_vert, r.mean_vertical_fl);
        }
        return {self_zero && refined_ok && self.runs.size() == 10,
                std::string("self-replication ") + (self_zero ? "exactly 0" : "NONZERO") +
                    "; refined reference worst exercise " + fmt(worst_lat, 3) + " NMI, " + fmt(worst_vert, 3) +
                    " FL (< 0.1 NMI, < 1 FL); CSV in " + (g_out / "replication_refined.csv").string()};
    }

    // ---- fast-time ----

    // Ten aircraft crossing a large sector on eight radials; none leaves within 30 minutes.
    ScenarioSpec busy_sector(std::size_t n)
    {
        ScenarioSpec s;
        s.seed = 17;
        s.duration_s = 1800.0;
        s.airspace.airac_date = "2401";
        s.airspace.sectors.push_back({"BIG", 0.0, 600.0, {{48.0, -8.0}, {56.0, -8.0}, {56.0, 6.0}, {48.0, 6.0}}});
        s.airspace.bandbox_schedule.push_back({{{"G1", {"BIG"}}}, 0.0});
        const LatLon centre{52.0, -1.0};
        s.airspace.waypoints.push_back({"CTR", centre});
        for (int k = 0; k < 8; ++k)
        {
            s.airspace.waypoints.push_back({"R" + std::to_string(k), destination(centre, 45.0 * k, 200.0)});
        }
        s.simulated_groups = {"G1"};
        const std::vector<std::string> types{"B738", "A320", "E190", "A333"};
        for (std::size_t i = 0; i < n; ++i)
        {
            const int from = static_cast<int>(i % 8);
            const std::string start = "R" + std::to_string(from);
            const std::string end = "R" + std::to_string((from + 4) % 8);
            const LatLon pos = destination(centre, 45.0 * from, 190.0 - 15.0 * static_cast<double>(i / 8));
            FlightEntry f = flight("FT" + std::to_string(100 + i), types[i % types.size()], {start, "CTR", end}, pos,
                                   300.0 + 10.0 * static_cast<double>(i % 8));
            s.flights.push_back(f);
            s.actions.push_back({300.0 + 30.0 * i, f.plan.callsign, "script", ClimbDescendNow{f.fl + (i % 2 ? 40.0 : -60.0)}});
            s.actions.push_back({900.0 + 30.0 * i, f.plan.callsign, "script", ChangeCas{270.0}});
        }
        return s;
    }

    Outcome fast_time()
    {
        const ScenarioSpec ten = busy_sector(10);
        World big(ten);
        const RunStats s10 = run(big, 0.0);
        const std::size_t alive = big.aircraft().size();

        const ScenarioSpec two = busy_sector(2);
        World small(two);
        const RunStats s2 = run(small, 0.0);

        // Pacing independence: ten minutes at x200 against unbounded.
        ScenarioSpec shortened = two;
        shortened.duration_s = 600.0;
        World fast(shortened);
        World paced(shortened);
        run(fast, 0.0);
        const RunStats sp = run(paced, 200.0);
        const bool same = fast.log().to_jsonl() == paced.log().to_jsonl();

        const bool ok = s10.wall_seconds <= 36.0 && alive == 10 && s2.speedup() >= 200.0 && same &&
                        sp.wall_seconds >= 600.0 / 200.0 * 0.9;
        return {ok, "10 aircraft/30 min in " + fmt(s10.wall_seconds, 3) + " s (x" + fmt(s10.speedup(), 4) + ", " +
                        std::to_string(alive) + " still active); 2 aircraft x" + fmt(s2.speedup(), 4) +
                        "; x200-paced log " + (same ? "identical" : "DIFFERENT") + " to unbounded (" +
                        fmt(sp.wall_seconds, 3) + " s wall)"};
    }

    // ---- top of descent ----

    Outcome top_of_descent()
    {
        ModelLibrary models;
        models.add(descent_model());
        WorldConfig cfg;
        cfg.correction_mode = PredictMode::mean;
        // One integrator step per tick, so the abeam crossing is bracketed by consecutive integrator states.
        cfg.tick_s = 1.0;
        cfg.substep_s = 1.0;
        Rng rng(909);
        int met = 0, rejected = 0;
        std::string failures;
        for (int k = 0; k < 50; ++k)
        {
            ScenarioSpec s = base_scenario(3600.0, 100 + k);
            s.airspace.sectors[0].boundary = {{50.0, -3.0}, {54.0, -3.0}, {54.0, 12.0}, {50.0, 12.0}};
            s.latency = {0.0, 0.0};
            const double wpt_lon = rng.uniform(-1.5, 8.0);
            const double wpt_lat = 52.0 + rng.uniform(-0.3, 0.3);
            s.airspace.waypoints.push_back({"TGT", {wpt_lat, wpt_lon}});
            s.airspace.waypoints.push_back({"END", {52.0, 11.5}});
            const double fl0 = 290.0 + 10.0 * static_cast<double>(rng.below(10));
            const double target = 100.0 + 10.0 * static_cast<double>(rng.below(static_cast<std::uint64_t>((fl0 - 110.0) / 10.0)));
            const std::string type = rng.below(2) ? "B738" : "A320";
            s.flights.push_back(flight("TOD" + std::to_string(k), type, {"TGT", "END"}, east_entry(), fl0));
            World w(s, models, cfg);
            w.tick();
            const std::string cs = "TOD" + std::to_string(k);
            const IssueResult r = w.issue_clearance(cs, DescendWhenReadyLevelBy{target, "TGT"}, "test");
            if (!r.accepted)
            {
                if (r.reason == "constraint unachievable")
                {
                    ++rejected;
                    continue;
                }
                failures += " case " + std::to_string(k) + " rejected: " + r.reason + ";";
                continue;
            }
            const auto &airspace = w.scenario().airspace;
            std::optional<double> fl_at;
            while (!w.done() && w.find(cs) != nullptr)
            {
                const double before = distance_to_abeam(w.find(cs)->state, airspace, "TGT");
                const double fl_before = w.find(cs)->state.fl;
                w.tick();
                if (w.find(cs) == nullptr)
                {
                    break;
                }
                const double after = distance_to_abeam(w.find(cs)->state, airspace, "TGT");
                if (before > 0.0 && after <= 0.0)
                {
                    const double f = before / (before - after);
                    fl_at = fl_before + f * (w.find(cs)->state.fl - fl_before);
                    break;
                }
            }
            if (fl_at && std::abs(*fl_at - target) <= 0.5)
            {
                ++met;
            }
            else
            {
                failures += " case " + std::to_string(k) + " FL" + fmt(fl0) + "->" + fmt(target) + " at " +
                            (fl_at ? "FL" + fmt(*fl_at, 5) : std::string("never abeam")) + ";";
            }
        }
        return {met + rejected == 50 && met > 0,
                std::to_string(met) + " levelled within 0.5 FL, " + std::to_string(rejected) +
                    " rejected as unachievable, of 50" + failures};
    }

    // ---- protocol ----

    Outcome protocol()
    {
        GatewayConfig c;
        c.sessions = {{"agent", SessionRole::agent, {}, false}, {"ctl", SessionRole::controller, {}, true}};
        Gateway gw(c);
        TcpServer server(gw, "127.0.0.1", 0);
        server.start();

        ScenarioSpec spec = base_scenario(600.0);
        spec.flights.push_back(flight("BAW1", "B738", {"CTR", "EAST"}, east_entry(), 330.0));
        spec.flights.push_back(flight("DLH2", "A320", {"CTR", "WEST"}, {52.1, 0.9}, 350.0));
        spec.forecast_wind = {WindGrid::uniform(3.0, 1.0, WindRole::forecast)};
        spec.truth_wind = {WindGrid::uniform(-24.681, 7.531, WindRole::truth)};

        std::vector<std::string> steps;
        auto expect = [&](bool ok, const std::string &what) {
            if (!ok)
            {
                steps.push_back(what);
            }
        };
        TcpClient agent, ctl, observer;
        agent.connect("127.0.0.1", server.port());
        ctl.connect("127.0.0.1", server.port());
        observer.connect("127.0.0.1", server.port());
        expect(agent.request("hello", {{"name", "agent"}}).type == "hello", "agent hello");
        expect(ctl.request("hello", {{"name", "ctl"}}).type == "hello", "controller hello");
        expect(observer.request("hello", {{"name", "watch"}}).type == "hello", "observer hello");
        const Message bad_version = agent.request("hello", {{"version", 99}});
        expect(bad_version.type == "error", "second hello refused");

        const Message reset =
            agent.request("reset", {{"scenario", nlohmann::ordered_json::parse(scenario_to_json(spec).dump())}});
        expect(reset.type == "reset" && reset.payload["observation"]["tick"] == 0, "reset");
        const Message step = agent.request("step", {{"n_ticks", 5}});
        expect(step.type == "step" && step.payload["observation"]["tick"] == 5 &&
                   step.payload["observation"]["aircraft"].size() == 2,
               "step");
        const Message action = agent.request(
            "action", {{"callsign", "BAW1"}, {"clearance", nlohmann::ordered_json::parse(to_json(ClimbDescendNow{370.0}).dump())}});
        expect(action.type == "action" && action.payload["accepted"] == true, "action");
        const Message take = ctl.request("takeover", {{"callsign", "DLH2"}});
        expect(take.type == "takeover" && take.payload["previous"] == agent.session(), "takeover");
        const auto lost = agent.next_notification(std::chrono::seconds(10));
        expect(lost && lost->type == "takeover" && lost->payload["lost"] == true, "control-lost notification");
        const Message denied = agent.request(
            "action", {{"callsign", "DLH2"}, {"clearance", nlohmann::ordered_json::parse(to_json(FlyHeading{45.0}).dump())}});
        expect(denied.payload["accepted"] == false && denied.payload["reason"] == "control lost", "action after takeover");
        const Message intent = ctl.request("intent", {{"callsign", "DLH2"}, {"intent", {{"plan", "descend FL300 by CTR"}}}});
        expect(intent.type == "intent", "intent");
        const auto hash = gw.state_hash();
        const Message shown = observer.request("snapshot");
        expect(shown.payload["observation"]["intents"].contains("DLH2") && gw.state_hash() == hash, "intent visible, state untouched");
        for (int k = 0; k < 10; ++k)
        {
            agent.request("step", {{"n_ticks", 3}});
        }
        agent.request("log");
        while (observer.next_notification(std::chrono::milliseconds(200)))
        {
        }

        std::size_t messages = 0;
        for (const auto *client : {&agent, &ctl, &observer})
        {
            for (const auto &body : client->transcript())
            {
                ++messages;
                if (body.find("truth") != std::string::npos || body.find("24.681") != std::string::npos ||
                    body.find("7.531") != std::string::npos)
                {
                    steps.push_back("truth wind leaked: " + body.substr(0, 120));
                    break;
                }
            }
        }
        agent.close();
        ctl.close();
        observer.close();
        server.stop();

        std::string detail = "hello/reset/step/action/takeover/intent round trips over TCP, " + std::to_string(messages) +
                             " serialized messages free of truth-wind fields";
        if (!steps.empty())
        {
            detail = "failed:";
            for (const auto &s : steps)
            {
                detail += " " + s + ";";
            }
        }
        return {steps.empty() && messages > 20, detail};
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"atcsim acceptance suite"};
    std::string out = "acceptance_artifacts";
    std::string only;
    app.add_option("--out", out, "Directory for CSV artifacts");
    app.add_option("--only", only, "Run the criterion whose name contains this text");
    CLI11_PARSE(app, argc, argv);
    g_out = out;
    fs::create_directories(g_out);

    const std::vector<Criterion> criteria{
        {"determinism", 60.0, determinism},
        {"separation-oracle", 60.0, separation_oracle},
        {"isa-round-trip", 10.0, isa_round_trip},
        {"integrator-convergence", 10.0, integrator},
        {"generative-self-consistency", 300.0, self_consistency},
        {"planted-bias-mean-mode", 300.0, planted_bias},
        {"replication", 300.0, replication},
        {"fast-time", 120.0, fast_time},
        {"top-of-descent", 120.0, top_of_descent},
        {"protocol", 60.0, protocol},
    };
    int failed = 0;
    for (const auto &c : criteria)
    {
        if (!only.empty() && c.name.find(only) == std::string::npos)
        {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = c.run();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > c.budget_s)
        {
            o.pass = false;
            o.detail += "; over the " + fmt(c.budget_s) + " s budget";
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << " (" << fmt(elapsed, 3) << " s): " << o.detail
                  << std::endl;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
