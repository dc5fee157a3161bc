#include "atcsim/validation.hpp"

#include "atcsim/geo.hpp"
#include "atcsim/rng.hpp"
#include "atcsim/tem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace atcsim
{
    namespace
    {
        void require_non_empty(const std::vector<double> &a, const std::vector<double> &b, const char *what)
        {
            if (a.empty() || b.empty())
            {
                throw std::invalid_argument(std::string(what) + ": empty sample");
            }
        }

        std::optional<double> field_at_fl(const Trajectory &t, double fl, double TrajectoryPoint::*field)
        {
            const auto &p = t.points;
            for (std::size_t i = 0; i < p.size(); ++i)
            {
                if (p[i].fl == fl)
                {
                    return p[i].*field;
                }
                if (i + 1 < p.size() && (p[i].fl - fl) * (p[i + 1].fl - fl) < 0.0)
                {
                    const double f = (fl - p[i].fl) / (p[i + 1].fl - p[i].fl);
                    return p[i].*field + f * (p[i + 1].*field - p[i].*field);
                }
            }
            return std::nullopt;
        }

        std::string fmt(double v)
        {
            std::ostringstream s;
            s.precision(10);
            s << v;
            return s.str();
        }
    }

    double ks_distance(std::vector<double> a, std::vector<double> b)
    {
        require_non_empty(a, b, "ks_distance");
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        const double n = static_cast<double>(a.size());
        const double m = static_cast<double>(b.size());
        std::size_t i = 0;
        std::size_t j = 0;
        double d = 0.0;
        while (i < a.size() || j < b.size())
        {
            const double x = j >= b.size() ? a[i] : i >= a.size() ? b[j] : std::min(a[i], b[j]);
            while (i < a.size() && a[i] == x)
            {
                ++i;
            }
            while (j < b.size() && b[j] == x)
            {
                ++j;
            }
            d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
        }
        return d;
    }

    double wasserstein_1d(std::vector<double> a, std::vector<double> b)
    {
        require_non_empty(a, b, "wasserstein_1d");
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a.size() == b.size())
        {
            double sum = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i)
            {
                sum += std::abs(a[i] - b[i]);
            }
            return sum / static_cast<double>(a.size());
        }
        const double n = static_cast<double>(a.size());
        const double m = static_cast<double>(b.size());
        std::size_t i = 0;
        std::size_t j = 0;
        double area = 0.0;
        double x_prev = std::min(a.front(), b.front());
        while (i < a.size() || j < b.size())
        {
            const double x = j >= b.size() ? a[i] : i >= a.size() ? b[j] : std::min(a[i], b[j]);
            area += std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m) * (x - x_prev);
            x_prev = x;
            while (i < a.size() && a[i] == x)
            {
                ++i;
            }
            while (j < b.size() && b[j] == x)
            {
                ++j;
            }
        }
        return area;
    }

    Ecdf ecdf(std::vector<double> sample)
    {
        std::sort(sample.begin(), sample.end());
        Ecdf e;
        const double n = static_cast<double>(sample.size());
        for (std::size_t i = 0; i < sample.size(); ++i)
        {
            if (i + 1 < sample.size() && sample[i + 1] == sample[i])
            {
                continue;
            }
            e.x.push_back(sample[i]);
            e.f.push_back(static_cast<double>(i + 1) / n);
        }
        return e;
    }

    double iqr(std::vector<double> sample)
    {
        if (sample.empty())
        {
            throw std::invalid_argument("iqr: empty sample");
        }
        std::sort(sample.begin(), sample.end());
        auto q = [&](double p) {
            const double h = (static_cast<double>(sample.size()) - 1.0) * p;
            const auto lo = static_cast<std::size_t>(std::floor(h));
            const std::size_t hi = std::min(lo + 1, sample.size() - 1);
            return sample[lo] + (h - static_cast<double>(lo)) * (sample[hi] - sample[lo]);
        };
        return q(0.75) - q(0.25);
    }

    std::optional<double> time_to_level(const Trajectory &t)
    {
        const auto &p = t.points;
        auto ok = [&](std::size_t i) {
            return std::abs(p[i].fl - t.cleared_fl) < 1.0 && std::abs(p[i].rocd_fpm) < 300.0;
        };
        for (std::size_t i = 0; i + 2 < p.size(); ++i)
        {
            if (ok(i) && ok(i + 1) && ok(i + 2))
            {
                return p[i].t - p.front().t;
            }
        }
        return std::nullopt;
    }

    std::optional<double> cas_at_fl(const Trajectory &t, double fl) { return field_at_fl(t, fl, &TrajectoryPoint::cas_kt); }

    std::optional<double> rocd_at_fl(const Trajectory &t, double fl)
    {
        return field_at_fl(t, fl, &TrajectoryPoint::rocd_fpm);
    }

    std::vector<Quantity> standard_quantities(const std::vector<double> &probe_fls)
    {
        std::vector<Quantity> q{{"time_to_level_s", [](const Trajectory &t) { return time_to_level(t); }}};
        for (double fl : probe_fls)
        {
            const std::string tag = std::to_string(static_cast<int>(std::lround(fl)));
            q.push_back({"cas_kt_at_fl" + tag, [fl](const Trajectory &t) { return cas_at_fl(t, fl); }});
            q.push_back({"rocd_fpm_at_fl" + tag, [fl](const Trajectory &t) { return rocd_at_fl(t, fl); }});
        }
        return q;
    }

    const QuantityReport *DistributionReport::find(const std::string &name) const
    {
        for (const auto &q : quantities)
        {
            if (q.name == name)
            {
                return &q;
            }
        }
        return nullptr;
    }

    DistributionReport compare_distributions(const std::vector<Trajectory> &reference,
                                             const std::vector<Trajectory> &model, const std::vector<Quantity> &quantities)
    {
        DistributionReport r;
        for (const auto &q : quantities)
        {
            QuantityReport qr;
            qr.name = q.name;
            std::vector<double> a;
            std::vector<double> b;
            for (const auto &t : reference)
            {
                const auto v = q.extract(t);
                v ? a.push_back(*v) : void(++qr.excluded_reference);
            }
            for (const auto &t : model)
            {
                const auto v = q.extract(t);
                v ? b.push_back(*v) : void(++qr.excluded_model);
            }
            qr.n_reference = a.size();
            qr.n_model = b.size();
            if (!a.empty() && !b.empty())
            {
                qr.ks = ks_distance(a, b);
                qr.wasserstein = wasserstein_1d(a, b);
                qr.reference_iqr = iqr(a);
            }
            else
            {
                qr.ks = qr.wasserstein = std::numeric_limits<double>::quiet_NaN();
            }
            qr.ecdf_reference = ecdf(std::move(a));
            qr.ecdf_model = ecdf(std::move(b));
            r.quantities.push_back(std::move(qr));
        }
        return r;
    }

    DistributionReport fidelity_experiment(const TrajectoryModel &model, const PerfCoefficients &perf,
                                           const std::vector<Trajectory> &held_out, const FidelityOptions &options,
                                           std::vector<Trajectory> *sampled)
    {
        if (held_out.empty())
        {
            throw std::invalid_argument("fidelity_experiment: empty held-out corpus");
        }
        const std::size_t n = options.samples == 0 ? held_out.size() : options.samples;
        std::vector<Trajectory> out;
        out.reserve(n);
        PredictOptions po;
        po.mode = PredictMode::sampled;
        po.post_level_s = 30.0;
        for (std::size_t i = 0; i < n; ++i)
        {
            const Trajectory &ref = held_out[i % held_out.size()];
            if (ref.points.empty())
            {
                continue;
            }
            const std::uint64_t seed = derive_seed(options.seed, "fidelity/" + std::to_string(i));
            const CorrectionSample c = sample_correction(model, seed, &perf);
            AircraftState s = profile_initial_state(ref.points.front(), ref.cleared_fl, ref.callsign);
            put_on_schedule(s, c, perf);
            po.seed = seed;
            Trajectory t = rollout_profile(s, c, perf, nullptr, po);
            t.phase = model.phase;
            t.cleared_fl = ref.cleared_fl;
            out.push_back(std::move(t));
        }
        DistributionReport r = compare_distributions(held_out, out, standard_quantities(options.probe_fls));
        if (sampled != nullptr)
        {
            *sampled = std::move(out);
        }
        return r;
    }

    std::string ecdf_csv(const QuantityReport &q)
    {
        std::ostringstream out;
        out << "quantity,set,x,ecdf\n";
        for (std::size_t i = 0; i < q.ecdf_reference.x.size(); ++i)
        {
            out << q.name << ",reference," << fmt(q.ecdf_reference.x[i]) << ',' << fmt(q.ecdf_reference.f[i]) << '\n';
        }
        for (std::size_t i = 0; i < q.ecdf_model.x.size(); ++i)
        {
            out << q.name << ",model," << fmt(q.ecdf_model.x[i]) << ',' << fmt(q.ecdf_model.f[i]) << '\n';
        }
        return out.str();
    }

    std::string distribution_summary_csv(const DistributionReport &r)
    {
        std::ostringstream out;
        out << "quantity,ks,wasserstein,reference_iqr,n_reference,n_model,excluded_reference,excluded_model\n";
        for (const auto &q : r.quantities)
        {
            out << q.name << ',' << fmt(q.ks) << ',' << fmt(q.wasserstein) << ',' << fmt(q.reference_iqr) << ','
                << q.n_reference << ',' << q.n_model << ',' << q.excluded_reference << ',' << q.excluded_model << '\n';
        }
        return out.str();
    }

    const MaeRow *MaeReport::find(const std::string &quantity) const
    {
        for (const auto &r : rows)
        {
            if (r.quantity == quantity)
            {
                return &r;
            }
        }
        return nullptr;
    }

    MaeReport mean_mode_mae_experiment(const std::vector<Trajectory> &recorded, const TrajectoryModel &model,
                                       const PerfCoefficients &perf, const TrajectoryModel *baseline_model)
    {
        const CorrectionSample mean = mean_mode_correction(model, &perf);
        const CorrectionSample base = baseline_model != nullptr ? mean_mode_correction(*baseline_model, &perf)
                                                                : CorrectionSample{};
        double cas_model = 0.0;
        double cas_base = 0.0;
        double rocd_model = 0.0;
        double rocd_base = 0.0;
        std::size_t count = 0;
        std::size_t used = 0;
        std::size_t excluded = 0;
        for (const auto &t : recorded)
        {
            if (t.points.empty() || t.phase != model.phase ||
                (!t.aircraft_type.empty() && t.aircraft_type != model.aircraft_type))
            {
                ++excluded;
                continue;
            }
            const double duration = t.points.back().t - t.points.front().t;
            if (duration < kMinFutureS)
            {
                ++excluded;
                continue;
            }
            ++used;
            const AircraftState s = profile_initial_state(t.points.front(), t.cleared_fl, t.callsign);
            PredictOptions po;
            po.horizon_s = std::min(3600.0, std::floor(duration));
            po.post_level_s = po.horizon_s;
            const Trajectory pm = rollout_profile(s, mean, perf, nullptr, po);
            const Trajectory pb = rollout_profile(s, base, perf, nullptr, po);
            for (std::size_t k = 1; k < t.points.size(); ++k)
            {
                const long idx = std::lround(t.points[k].t - t.points.front().t);
                if (idx < 0 || static_cast<std::size_t>(idx) >= pm.points.size() ||
                    static_cast<std::size_t>(idx) >= pb.points.size())
                {
                    continue;
                }
                const auto &r = t.points[k];
                cas_model += std::abs(pm.points[idx].cas_kt - r.cas_kt);
                cas_base += std::abs(pb.points[idx].cas_kt - r.cas_kt);
                rocd_model += std::abs(pm.points[idx].rocd_fpm - r.rocd_fpm);
                rocd_base += std::abs(pb.points[idx].rocd_fpm - r.rocd_fpm);
                ++count;
            }
        }
        MaeReport report;
        auto row = [&](const std::string &q, double m, double b) {
            MaeRow r;
            r.aircraft_type = model.aircraft_type;
            r.phase = model.phase;
            r.quantity = q;
            r.mae_model = count > 0 ? m / static_cast<double>(count) : 0.0;
            r.mae_baseline = count > 0 ? b / static_cast<double>(count) : 0.0;
            r.ratio = r.mae_baseline > 0.0 ? r.mae_model / r.mae_baseline
                                           : (r.mae_model == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
            r.trajectories = used;
            r.excluded = excluded;
            report.rows.push_back(r);
        };
        row("cas_kt", cas_model, cas_base);
        row("rocd_fpm", rocd_model, rocd_base);
        return report;
    }

    std::string mae_csv(const MaeReport &r)
    {
        std::ostringstream out;
        out << "aircraft_type,phase,quantity,mae_model,mae_baseline,ratio,trajectories,excluded\n";
        for (const auto &row : r.rows)
        {
            out << row.aircraft_type << ',' << to_string(row.phase) << ',' << row.quantity << ',' << fmt(row.mae_model)
                << ',' << fmt(row.mae_baseline) << ',' << fmt(row.ratio) << ',' << row.trajectories << ','
                << row.excluded << '\n';
        }
        return out.str();
    }

    ReplicationReport replication_experiment(const std::vector<ReplicationRun> &runs, const ModelLibrary &models,
                                             const WorldConfig &config)
    {
        ReplicationReport report;
        double lateral = 0.0;
        double vertical = 0.0;
        std::size_t valid = 0;
        bool all_pass = true;
        for (const auto &run_spec : runs)
        {
            ReplicationResult r;
            r.name = run_spec.name;
            std::set<std::string> known;
            for (const auto &f : run_spec.scenario.flights)
            {
                known.insert(f.plan.callsign);
            }
            for (const auto &t : run_spec.scenario.recorded)
            {
                known.insert(t.callsign);
            }
            for (const auto &a : run_spec.scenario.actions)
            {
                if (known.count(a.callsign) == 0)
                {
                    r.valid = false;
                    r.reason = "clearance for unknown aircraft " + a.callsign;
                    break;
                }
            }
            std::map<std::string, std::vector<TrackSample>> sim;
            if (r.valid)
            {
                try
                {
                    World world(run_spec.scenario, models, config);
                    run(world);
                    sim = tracks_from_log(world.log());
                }
                catch (const std::exception &e)
                {
                    r.valid = false;
                    r.reason = e.what();
                }
            }
            if (r.valid)
            {
                double lat_sum = 0.0;
                double vert_sum = 0.0;
                for (const auto &[cs, ref] : run_spec.reference)
                {
                    const auto it = sim.find(cs);
                    if (it == sim.end())
                    {
                        continue;
                    }
                    const auto &mine = it->second;
                    for (const auto &s : ref)
                    {
                        const auto m = std::lower_bound(mine.begin(), mine.end(), s.t - 1e-6,
                                                        [](const TrackSample &x, double t) { return x.t < t; });
                        if (m == mine.end() || std::abs(m->t - s.t) > 1e-6)
                        {
                            continue;
                        }
                        lat_sum += distance_nmi(m->position, s.position);
                        vert_sum += std::abs(m->fl - s.fl);
                        ++r.samples;
                    }
                }
                if (r.samples > 0)
                {
                    r.mean_lateral_nmi = lat_sum / static_cast<double>(r.samples);
                    r.mean_vertical_fl = vert_sum / static_cast<double>(r.samples);
                }
                r.pass = r.samples > 0 && r.mean_lateral_nmi < kReplicationLateralNmi &&
                         r.mean_vertical_fl < kReplicationVerticalFl;
                lateral += r.mean_lateral_nmi;
                vertical += r.mean_vertical_fl;
                ++valid;
                all_pass = all_pass && r.pass;
            }
            report.runs.push_back(std::move(r));
        }
        if (valid > 0)
        {
            report.mean_lateral_nmi = lateral / static_cast<double>(valid);
            report.mean_vertical_fl = vertical / static_cast<double>(valid);
        }
        report.pass = valid > 0 && all_pass;
        return report;
    }

    std::string replication_csv(const ReplicationReport &r)
    {
        std::ostringstream out;
        out << "exercise,valid,mean_lateral_error_nmi,mean_vertical_error_fl,samples,lateral_threshold_nmi,"
               "vertical_threshold_fl,within_thresholds,reason\n";
        for (const auto &run : r.runs)
        {
            out << run.name << ',' << (run.valid ? 1 : 0) << ',' << fmt(run.mean_lateral_nmi) << ','
                << fmt(run.mean_vertical_fl) << ',' << run.samples << ',' << kReplicationLateralNmi << ','
                << kReplicationVerticalFl << ',' << (run.pass ? 1 : 0) << ',' << run.reason << '\n';
        }
        return out.str();
    }
}
