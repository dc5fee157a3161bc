#include "atcsim/gateway.hpp"
#include "atcsim/json_io.hpp"
#include "atcsim/scenario.hpp"
#include "atcsim/server.hpp"
#include "atcsim/synthetic.hpp"
#include "atcsim/tem.hpp"
#include "atcsim/validation.hpp"
#include "atcsim/world.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace atcsim;
namespace fs = std::filesystem;

namespace
{
    PredictMode predict_mode(const std::string &s)
    {
        if (s == "mean")
        {
            return PredictMode::mean;
        }
        if (s == "sampled")
        {
            return PredictMode::sampled;
        }
        if (s == "baseline")
        {
            return PredictMode::baseline;
        }
        throw CLI::ValidationError("mode", "expected mean, sampled or baseline");
    }

    void write_text(const std::string &path, const std::string &text)
    {
        if (path.empty() || path == "-")
        {
            std::cout << text;
            return;
        }
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("cannot write " + path);
        }
        out << text;
    }

    std::string dir_of(const std::string &path) { return fs::path(path).parent_path().string(); }

    const PerfCoefficients &perf_for(const std::string &type, const std::string &perf_file,
                                     std::vector<PerfCoefficients> &storage)
    {
        if (!perf_file.empty())
        {
            storage = load_perf_file(perf_file);
            for (const auto &p : storage)
            {
                if (p.aircraft_type == type)
                {
                    return p;
                }
            }
        }
        return builtin_perf(type);
    }

    int report_scenario_error(const ScenarioError &e)
    {
        std::cerr << e.what() << '\n';
        return 2;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Fast-time en route ATC simulator"};
    app.require_subcommand(1);

    // run
    auto *run_cmd = app.add_subcommand("run", "Run a scenario to completion");
    std::string run_scenario;
    std::string run_log;
    std::string run_metrics;
    std::optional<std::uint64_t> run_seed;
    double run_speed = 0.0;
    double run_substep = 1.0;
    std::string run_mode = "sampled";
    run_cmd->add_option("scenario", run_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run_seed, "Override the scenario seed");
    run_cmd->add_option("--log", run_log, "Write the event log (JSON lines)");
    run_cmd->add_option("--metrics", run_metrics, "Write the metrics summary (CSV)");
    run_cmd->add_option("--speed-factor", run_speed, "Pacing against wall time; 0 runs flat out")->check(CLI::NonNegativeNumber);
    run_cmd->add_option("--substep", run_substep, "Integration sub-step in seconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--correction", run_mode, "Per-aircraft correction: sampled, mean or baseline");

    // serve
    auto *serve_cmd = app.add_subcommand("serve", "Serve the session protocol over TCP");
    std::string serve_config;
    std::optional<int> serve_port;
    std::optional<std::string> serve_bind;
    std::optional<std::string> serve_dir;
    std::optional<std::string> serve_pacing;
    std::optional<double> serve_speed;
    serve_cmd->add_option("--config", serve_config, std::string("Gateway config (default: $") + kConfigEnv + ")");
    serve_cmd->add_option("--port", serve_port, "TCP port (0 picks a free one)");
    serve_cmd->add_option("--bind", serve_bind, "Bind address");
    serve_cmd->add_option("--scenario-dir", serve_dir, "Directory scenario names resolve against");
    serve_cmd->add_option("--pacing", serve_pacing, "lockstep or free_running")
        ->check(CLI::IsMember({"lockstep", "free_running"}));
    serve_cmd->add_option("--speed-factor", serve_speed, "Free-running pace")->check(CLI::PositiveNumber);

    // fit
    auto *fit_cmd = app.add_subcommand("fit", "Fit a performance-correction model to a trajectory corpus");
    std::string fit_corpus;
    std::string fit_out;
    std::string fit_type;
    std::string fit_phase = "descent";
    std::string fit_perf;
    FitOptions fit_options;
    fit_cmd->add_option("corpus", fit_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    fit_cmd->add_option("-o,--output", fit_out, "Model file")->required();
    fit_cmd->add_option("--type", fit_type, "Aircraft type (default: the corpus' first trajectory)");
    fit_cmd->add_option("--phase", fit_phase, "climb or descent")->check(CLI::IsMember({"climb", "descent"}));
    fit_cmd->add_option("--perf", fit_perf, "Performance table file");
    fit_cmd->add_option("--seed", fit_options.seed, "EM initialisation seed");
    fit_cmd->add_option("--components", fit_options.k_components, "Retained basis functions (0: 95% variance)");
    fit_cmd->add_option("--mixture", fit_options.gmm_components, "Mixture components");

    // sample
    auto *sample_cmd = app.add_subcommand("sample", "Draw correction curves from a model");
    std::string sample_model;
    std::string sample_out;
    std::size_t sample_n = 10;
    std::uint64_t sample_seed = 0;
    sample_cmd->add_option("model", sample_model, "Model file")->required()->check(CLI::ExistingFile);
    sample_cmd->add_option("-n", sample_n, "Number of samples");
    sample_cmd->add_option("--seed", sample_seed, "Seed");
    sample_cmd->add_option("-o,--output", sample_out, "Output JSON (default stdout)");

    // predict
    auto *predict_cmd = app.add_subcommand("predict", "Predict a climb or descent profile");
    std::string predict_model;
    std::string predict_type = "B738";
    std::string predict_perf;
    std::string predict_out;
    std::string predict_mode_s = "mean";
    double predict_fl = 350.0;
    double predict_cleared = 100.0;
    std::uint64_t predict_seed = 0;
    predict_cmd->add_option("--model", predict_model, "Model file (required unless --mode baseline)");
    predict_cmd->add_option("--type", predict_type, "Aircraft type");
    predict_cmd->add_option("--perf", predict_perf, "Performance table file");
    predict_cmd->add_option("--fl", predict_fl, "Initial flight level");
    predict_cmd->add_option("--cleared", predict_cleared, "Cleared flight level");
    predict_cmd->add_option("--mode", predict_mode_s, "mean, sampled or baseline");
    predict_cmd->add_option("--seed", predict_seed, "Seed for sampled mode");
    predict_cmd->add_option("-o,--output", predict_out, "Trajectory JSON (default stdout)");

    // generate
    auto *gen_cmd = app.add_subcommand("generate", "Generate a training scenario from a template");
    GenerationParams gen;
    std::string gen_geometry = "crossing";
    std::string gen_out;
    gen_cmd->add_option("--seed", gen.seed, "Seed");
    gen_cmd->add_option("--duration", gen.duration_s, "Scenario length in seconds")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--density", gen.density_per_10min, "Arrivals per 10 minutes")->check(CLI::PositiveNumber);
    gen_cmd->add_option("--geometry", gen_geometry, "crossing, head_on, overtaking, vertical or mixed");
    gen_cmd->add_option("-o,--output", gen_out, "Scenario file (default stdout)");

    // validate
    auto *validate_cmd = app.add_subcommand("validate", "Check a scenario file");
    std::string validate_path;
    validate_cmd->add_option("scenario", validate_path, "Scenario file")->required();

    // synth
    auto *synth_cmd = app.add_subcommand("synth", "Write a synthetic descent corpus with a known correction law");
    std::string synth_truth = "mixture";
    double synth_bias = 15.0;
    std::size_t synth_n = 2000;
    std::uint64_t synth_seed = 1;
    std::string synth_out;
    synth_cmd->add_option("--truth", synth_truth, "mixture or bias")->check(CLI::IsMember({"mixture", "bias"}));
    synth_cmd->add_option("--bias-kt", synth_bias, "CAS bias for --truth bias");
    synth_cmd->add_option("-n", synth_n, "Trajectories");
    synth_cmd->add_option("--seed", synth_seed, "Seed");
    synth_cmd->add_option("-o,--output", synth_out, "Corpus file")->required();

    // fidelity
    auto *fid_cmd = app.add_subcommand("fidelity", "Compare sampled profiles with a held-out corpus");
    std::string fid_model;
    std::string fid_corpus;
    std::string fid_perf;
    std::string fid_dir = ".";
    FidelityOptions fid_options;
    fid_cmd->add_option("model", fid_model, "Model file")->required()->check(CLI::ExistingFile);
    fid_cmd->add_option("corpus", fid_corpus, "Held-out corpus")->required()->check(CLI::ExistingFile);
    fid_cmd->add_option("--perf", fid_perf, "Performance table file");
    fid_cmd->add_option("--samples", fid_options.samples, "Profiles to sample (0: one per held-out trajectory)");
    fid_cmd->add_option("--seed", fid_options.seed, "Seed");
    fid_cmd->add_option("--out-dir", fid_dir, "Directory for the summary and ECDF CSVs");

    // mae
    auto *mae_cmd = app.add_subcommand("mae", "Mean-mode prediction error against recorded profiles");
    std::string mae_model;
    std::string mae_corpus;
    std::string mae_baseline;
    std::string mae_perf;
    std::string mae_out;
    mae_cmd->add_option("model", mae_model, "Model file")->required()->check(CLI::ExistingFile);
    mae_cmd->add_option("recorded", mae_corpus, "Recorded corpus")->required()->check(CLI::ExistingFile);
    mae_cmd->add_option("--baseline", mae_baseline, "Baseline model (default: uncorrected performance)");
    mae_cmd->add_option("--perf", mae_perf, "Performance table file");
    mae_cmd->add_option("-o,--output", mae_out, "CSV (default stdout)");

    // replicate
    auto *rep_cmd = app.add_subcommand("replicate", "Re-simulate exercises from their clearance streams");
    std::size_t rep_synthetic = 0;
    std::uint64_t rep_seed = 1;
    double rep_substep = 1.0;
    std::vector<std::string> rep_pairs;
    std::string rep_out;
    rep_cmd->add_option("--synthetic", rep_synthetic, "Number of generated exercises");
    rep_cmd->add_option("--seed", rep_seed, "First exercise seed");
    rep_cmd->add_option("--reference-substep", rep_substep, "Sub-step of the kernel producing the references")
        ->check(CLI::PositiveNumber);
    rep_cmd->add_option("--run", rep_pairs, "Scenario and event log pair (repeatable)")->expected(2)->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    rep_cmd->add_option("-o,--output", rep_out, "CSV (default stdout)");

    // replay
    auto *replay_cmd = app.add_subcommand("replay", "Re-run a logged session and compare logs");
    std::string replay_scenario;
    std::string replay_log_path;
    std::string replay_out;
    replay_cmd->add_option("scenario", replay_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("log", replay_log_path, "Event log")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("-o,--output", replay_out, "Write the replayed log");

    // import
    auto *import_cmd = app.add_subcommand("import", "Convert radar track CSV to recorded tracks");
    std::string import_csv;
    std::string import_out;
    import_cmd->add_option("csv", import_csv, "Track CSV")->required()->check(CLI::ExistingFile);
    import_cmd->add_option("-o,--output", import_out, "JSON (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run_cmd)
        {
            ScenarioSpec spec = load_scenario(run_scenario);
            if (run_seed)
            {
                spec.seed = *run_seed;
            }
            ModelLibrary models = load_models(spec, dir_of(run_scenario));
            WorldConfig config;
            config.substep_s = run_substep;
            config.correction_mode = predict_mode(run_mode);
            World world(std::move(spec), std::move(models), config);
            const RunStats stats = run(world, run_speed);
            if (!run_log.empty())
            {
                world.log().write(run_log);
            }
            if (!run_metrics.empty())
            {
                write_text(run_metrics, metrics_csv(world.report()));
            }
            std::cout << "ticks " << stats.ticks << ", sim " << stats.sim_seconds << " s, wall " << stats.wall_seconds
                      << " s, x" << stats.speedup() << '\n'
                      << "loss of separation events " << world.report().los_count << ", fuel proxy "
                      << world.report().fuel_proxy_kg << " kg\n";
            return 0;
        }
        if (*serve_cmd)
        {
            GatewayConfig config = serve_config.empty() ? gateway_config_from_environment()
                                                        : load_gateway_config(serve_config);
            if (serve_port)
            {
                config.port = *serve_port;
            }
            if (serve_bind)
            {
                config.bind_address = *serve_bind;
            }
            if (serve_dir)
            {
                config.scenario_dir = *serve_dir;
            }
            if (serve_pacing)
            {
                config.pacing = *serve_pacing == "lockstep" ? Pacing::lockstep : Pacing::free_running;
            }
            if (serve_speed)
            {
                config.speed_factor = *serve_speed;
            }
            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);

            Gateway gateway(config);
            TcpServer server(gateway, config.bind_address, config.port);
            server.start();
            gateway.start();
            std::cout << "listening on " << config.bind_address << ':' << server.port() << std::endl;
            int sig = 0;
            sigwait(&signals, &sig);
            gateway.stop();
            server.stop();
            return 0;
        }
        if (*fit_cmd)
        {
            const auto corpus = load_corpus(fit_corpus);
            if (corpus.empty())
            {
                throw std::runtime_error("empty corpus");
            }
            const std::string type = fit_type.empty() ? corpus.front().aircraft_type : fit_type;
            std::vector<PerfCoefficients> tables;
            const PerfCoefficients &perf = perf_for(type, fit_perf, tables);
            const TrajectoryModel model = fit_model(corpus, perf, phase_from_string(fit_phase), fit_options);
            save_model(fit_out, model);
            std::cout << "fitted " << type << ' ' << fit_phase << " model on " << corpus.size() << " trajectories\n";
            return 0;
        }
        if (*sample_cmd)
        {
            const TrajectoryModel model = load_model(sample_model);
            nlohmann::json out = nlohmann::json::array();
            for (std::size_t i = 0; i < sample_n; ++i)
            {
                out.push_back(to_json(sample_correction(model, derive_seed(sample_seed, "sample/" + std::to_string(i)))));
            }
            write_text(sample_out, out.dump(2) + "\n");
            return 0;
        }
        if (*predict_cmd)
        {
            const PredictMode mode = predict_mode(predict_mode_s);
            std::optional<TrajectoryModel> model;
            if (!predict_model.empty())
            {
                model = load_model(predict_model);
                predict_type = model->aircraft_type;
            }
            else if (mode != PredictMode::baseline)
            {
                throw CLI::ValidationError("--model", "required unless --mode baseline");
            }
            std::vector<PerfCoefficients> tables;
            const PerfCoefficients &perf = perf_for(predict_type, predict_perf, tables);
            TrajectoryPoint start;
            start.fl = predict_fl;
            AircraftState s = profile_initial_state(start, predict_cleared, "PRED");
            const CorrectionSample c = correction_for(model ? &*model : nullptr, perf, mode, predict_seed);
            put_on_schedule(s, c, perf);
            PredictOptions options;
            options.mode = mode;
            options.seed = predict_seed;
            Trajectory t = rollout_profile(s, c, perf, nullptr, options);
            t.aircraft_type = perf.aircraft_type;
            t.cleared_fl = predict_cleared;
            write_text(predict_out, to_json(t).dump(2) + "\n");
            return 0;
        }
        if (*gen_cmd)
        {
            gen.geometry = conflict_geometry_from_string(gen_geometry);
            const ScenarioSpec spec = generate_scenario(gen);
            write_text(gen_out, serialize_scenario(spec));
            return 0;
        }
        if (*validate_cmd)
        {
            const ScenarioSpec spec = load_scenario(validate_path);
            std::cout << "valid: " << spec.flights.size() << " flights, " << spec.recorded.size()
                      << " recorded tracks, " << spec.actions.size() << " scripted clearances\n";
            return 0;
        }
        if (*synth_cmd)
        {
            const TruthSpec truth =
                synth_truth == "bias" ? planted_cas_bias_truth(synth_bias) : two_component_descent_truth();
            save_corpus(synth_out, synthetic_corpus(truth, synth_n, synth_seed));
            return 0;
        }
        if (*fid_cmd)
        {
            const TrajectoryModel model = load_model(fid_model);
            std::vector<PerfCoefficients> tables;
            const PerfCoefficients &perf = perf_for(model.aircraft_type, fid_perf, tables);
            const auto held_out = load_corpus(fid_corpus);
            const DistributionReport r = fidelity_experiment(model, perf, held_out, fid_options);
            fs::create_directories(fid_dir);
            write_text((fs::path(fid_dir) / "fidelity_summary.csv").string(), distribution_summary_csv(r));
            for (const auto &q : r.quantities)
            {
                write_text((fs::path(fid_dir) / ("ecdf_" + q.name + ".csv")).string(), ecdf_csv(q));
            }
            std::cout << distribution_summary_csv(r);
            return 0;
        }
        if (*mae_cmd)
        {
            const TrajectoryModel model = load_model(mae_model);
            std::optional<TrajectoryModel> baseline;
            if (!mae_baseline.empty())
            {
                baseline = load_model(mae_baseline);
            }
            std::vector<PerfCoefficients> tables;
            const PerfCoefficients &perf = perf_for(model.aircraft_type, mae_perf, tables);
            const MaeReport r =
                mean_mode_mae_experiment(load_corpus(mae_corpus), model, perf, baseline ? &*baseline : nullptr);
            write_text(mae_out, mae_csv(r));
            return 0;
        }
        if (*rep_cmd)
        {
            std::vector<ReplicationRun> runs;
            for (std::size_t i = 0; i < rep_synthetic; ++i)
            {
                ExerciseOptions options;
                options.reference_substep_s = rep_substep;
                runs.push_back(synthetic_exercise(rep_seed + i, options));
            }
            for (std::size_t i = 0; i + 1 < rep_pairs.size(); i += 2)
            {
                ReplicationRun r;
                r.name = fs::path(rep_pairs[i]).stem().string();
                r.scenario = load_scenario(rep_pairs[i]);
                const EventLog log = EventLog::read(rep_pairs[i + 1]);
                r.reference = tracks_from_log(log);
                r.scenario.actions.clear();
                for (const auto *c : log.of_type("clearance"))
                {
                    ScriptedAction a;
                    a.t = (*c)["t"].get<double>();
                    a.callsign = (*c)["callsign"].get<std::string>();
                    a.issuer = (*c).value("issuer", std::string());
                    a.clearance = clearance_from_json(nlohmann::json::parse((*c)["clearance"].dump()));
                    r.scenario.actions.push_back(std::move(a));
                }
                runs.push_back(std::move(r));
            }
            if (runs.empty())
            {
                throw CLI::ValidationError("replicate", "give --synthetic N or at least one --run pair");
            }
            const ReplicationReport r = replication_experiment(runs, {});
            write_text(rep_out, replication_csv(r));
            std::cerr << "mean lateral " << r.mean_lateral_nmi << " NM, mean vertical " << r.mean_vertical_fl
                      << " FL, " << (r.pass ? "within" : "outside") << " thresholds\n";
            return r.pass ? 0 : 1;
        }
        if (*replay_cmd)
        {
            const ScenarioSpec spec = load_scenario(replay_scenario);
            const ModelLibrary models = load_models(spec, dir_of(replay_scenario));
            const EventLog original = EventLog::read(replay_log_path);
            const EventLog replayed = replay_log(spec, models, original);
            if (!replay_out.empty())
            {
                replayed.write(replay_out);
            }
            const bool same = replayed == original;
            std::cout << (same ? "identical" : "differs") << " (" << replayed.records().size() << " records)\n";
            return same ? 0 : 1;
        }
        if (*import_cmd)
        {
            std::ifstream in(import_csv);
            std::stringstream text;
            text << in.rdbuf();
            const ImportResult r = import_tracks_csv(text.str());
            for (const auto &e : r.errors)
            {
                std::cerr << "line " << e.line << ": " << e.message << '\n';
            }
            nlohmann::json out = nlohmann::json::array();
            for (const auto &t : r.tracks)
            {
                out.push_back(to_json(t));
            }
            write_text(import_out, out.dump(2) + "\n");
            return r.errors.empty() ? 0 : 1;
        }
    }
    catch (const ScenarioError &e)
    {
        return report_scenario_error(e);
    }
    catch (const CLI::Error &e)
    {
        return app.exit(e);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
