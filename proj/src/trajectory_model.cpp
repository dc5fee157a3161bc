#include "atcsim/trajectory_model.hpp"

#include "atcsim/atmosphere.hpp"
#include "atcsim/errors.hpp"
#include "atcsim/json_io.hpp"
#include "atcsim/rng.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace atcsim
{
    namespace
    {
        constexpr double kLevelRocdFpm = 100.0;

        double clip_dev(double d) { return std::clamp(d, kMinForceFactor - 1.0, kMaxForceFactor - 1.0); }

        struct CurveSamples
        {
            std::vector<std::pair<double, double>> cas;
            std::vector<std::pair<double, double>> thrust;
            std::vector<std::pair<double, double>> drag;
        };

        // Sorts by FL, averages duplicates and resamples with clamped linear interpolation.
        Eigen::VectorXd resample(std::vector<std::pair<double, double>> samples, const std::vector<double> &grid)
        {
            std::sort(samples.begin(), samples.end());
            std::vector<double> xs;
            std::vector<double> ys;
            for (std::size_t i = 0; i < samples.size();)
            {
                std::size_t j = i;
                double sum = 0.0;
                while (j < samples.size() && samples[j].first == samples[i].first)
                {
                    sum += samples[j].second;
                    ++j;
                }
                xs.push_back(samples[i].first);
                ys.push_back(sum / static_cast<double>(j - i));
                i = j;
            }
            Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
            for (std::size_t g = 0; g < grid.size(); ++g)
            {
                out(static_cast<Eigen::Index>(g)) = interpolate_on_grid(xs, ys, grid[g]);
            }
            return out;
        }

        bool near_cleared(const Trajectory &t, double fl) { return std::abs(fl - t.cleared_fl) < 1.0; }

        // Observed CAS deltas and implied force deviations along one trajectory. Forces come from
        // inverting the energy balance at the start of each step: obs = m g rocd / V + m dV/dt, and
        // the residual against the base T - D is split with the minimum-norm choice.
        CurveSamples extract(const Trajectory &t, const PerfCoefficients &p, Phase phase)
        {
            CurveSamples out;
            const double thrust_scale = phase == Phase::descent ? p.descent_thrust_factor : 1.0;
            for (std::size_t i = 0; i + 1 < t.points.size(); ++i)
            {
                const TrajectoryPoint &a = t.points[i];
                const TrajectoryPoint &b = t.points[i + 1];
                const double dt = b.t - a.t;
                if (dt <= 0.0)
                {
                    continue;
                }
                const double rocd_ms = (b.fl - a.fl) * kFlToM / dt;
                if (std::abs(rocd_ms / kFpmToMs) < kLevelRocdFpm || near_cleared(t, a.fl) || near_cleared(t, b.fl))
                {
                    continue;
                }
                const double h = a.fl * kFlToM;
                const double v = a.tas_kt * kKnotToMs;
                if (v <= 1.0)
                {
                    continue;
                }
                const AtmosphereState atm = isa_at(h);
                const double accel = (b.tas_kt - a.tas_kt) * kKnotToMs / dt;
                const double obs = p.mass_ref_kg * (kG0 * rocd_ms / v + accel);
                const double t0 = p.max_climb_thrust(h) * thrust_scale;
                const double d0 = p.drag(v, atm.density);
                const double r = obs - (t0 - d0);
                const double norm = t0 * t0 + d0 * d0;
                out.thrust.emplace_back(a.fl, r * t0 / norm);
                out.drag.emplace_back(a.fl, -r * d0 / norm);
                out.cas.emplace_back(a.fl, a.cas_kt - p.base_cas_at(a.fl));
            }
            return out;
        }

        bool orthonormal(const FunctionalBasis &b)
        {
            if (b.components() == 0)
            {
                return false;
            }
            const Eigen::MatrixXd gram = b.eigenfunctions.transpose() * b.eigenfunctions;
            return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() <= 1e-8;
        }
    }

    double CorrectionSample::delta_cas_at(double fl) const
    {
        return empty() ? 0.0 : interpolate_on_grid(fl_grid, delta_cas, fl);
    }

    double CorrectionSample::thrust_factor_at(double fl) const
    {
        return empty() ? 1.0 : 1.0 + interpolate_on_grid(fl_grid, thrust_mult, fl);
    }

    double CorrectionSample::drag_factor_at(double fl) const
    {
        return empty() ? 1.0 : 1.0 + interpolate_on_grid(fl_grid, drag_mult, fl);
    }

    void TrajectoryModel::validate() const
    {
        for (const FunctionalBasis *b : {&cas, &thrust, &drag})
        {
            if (b->fl_grid != cas.fl_grid)
            {
                throw DefinitionError("model bases do not share an FL grid");
            }
            if (b->components() < 1 || b->eigenvalues.size() != b->components() ||
                b->mean_curve.size() != static_cast<Eigen::Index>(b->fl_grid.size()))
            {
                throw DefinitionError("model basis has inconsistent dimensions");
            }
            for (Eigen::Index k = 0; k < b->eigenvalues.size(); ++k)
            {
                if (b->eigenvalues(k) < 0.0 || (k > 0 && b->eigenvalues(k) > b->eigenvalues(k - 1)))
                {
                    throw DefinitionError("eigenvalues must be non-negative and descending");
                }
            }
            if (!orthonormal(*b))
            {
                throw DefinitionError("eigenfunctions are not orthonormal");
            }
        }
        if (!std::is_sorted(cas.fl_grid.begin(), cas.fl_grid.end()))
        {
            throw DefinitionError("fl_grid must ascend");
        }
        score_gmm.validate();
        if (score_gmm.dimension() != score_dimension() || score_scale.size() != score_dimension())
        {
            throw DefinitionError("score mixture dimension does not match the bases");
        }
        if (!cruise_pmf.empty())
        {
            double total = 0.0;
            for (const auto &e : cruise_pmf)
            {
                if (e.probability < 0.0)
                {
                    throw DefinitionError("negative cruise PMF mass");
                }
                total += e.probability;
            }
            if (std::abs(total - 1.0) > 1e-9)
            {
                throw DefinitionError("cruise PMF masses do not sum to 1");
            }
        }
    }

    Eigen::VectorXd TrajectoryModel::raw_score_mean() const
    {
        return score_scale.cwiseProduct(score_gmm.mixture_mean());
    }

    Eigen::MatrixXd TrajectoryModel::raw_score_covariance() const
    {
        return score_scale.asDiagonal() * score_gmm.mixture_covariance() * score_scale.asDiagonal();
    }

    CorrectionSample TrajectoryModel::correction_from_scores(const Eigen::VectorXd &raw, std::uint64_t seed_tag,
                                                             const PerfCoefficients *coeffs) const
    {
        const Eigen::Index kc = cas.components();
        const Eigen::Index kt = thrust.components();
        const Eigen::Index kd = drag.components();
        const Eigen::VectorXd c = cas.reconstruct(raw.segment(0, kc));
        const Eigen::VectorXd t = thrust.reconstruct(raw.segment(kc, kt));
        const Eigen::VectorXd d = drag.reconstruct(raw.segment(kc + kt, kd));

        CorrectionSample s;
        s.fl_grid = cas.fl_grid;
        s.seed_tag = seed_tag;
        const std::size_t m = s.fl_grid.size();
        s.delta_cas.resize(m);
        s.thrust_mult.resize(m);
        s.drag_mult.resize(m);
        for (std::size_t i = 0; i < m; ++i)
        {
            const auto e = static_cast<Eigen::Index>(i);
            double dc = c(e);
            if (coeffs != nullptr)
            {
                const double base = coeffs->base_cas_at(s.fl_grid[i]);
                dc = std::clamp(base + dc, kMinCasKt, kMaxCasKt) - base;
            }
            s.delta_cas[i] = dc;
            s.thrust_mult[i] = clip_dev(t(e));
            s.drag_mult[i] = clip_dev(d(e));
        }
        return s;
    }

    ResampledCorpus resample_corpus(const std::vector<Trajectory> &corpus, const PerfCoefficients &coeffs, Phase phase,
                                    const FitOptions &options)
    {
        std::vector<const Trajectory *> usable;
        for (const Trajectory &t : corpus)
        {
            if (t.phase != phase || t.aircraft_type != coeffs.aircraft_type || t.points.size() < 2)
            {
                continue;
            }
            const auto [lo, hi] = std::minmax_element(t.points.begin(), t.points.end(),
                                                      [](const auto &a, const auto &b) { return a.fl < b.fl; });
            if (hi->fl - lo->fl >= options.min_span_fl)
            {
                usable.push_back(&t);
            }
        }

        std::vector<CurveSamples> samples;
        std::vector<CruiseSpeed> cruise;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const Trajectory *t : usable)
        {
            CurveSamples s = extract(*t, coeffs, phase);
            if (s.cas.size() < 2)
            {
                continue;
            }
            for (const auto &[fl, v] : s.cas)
            {
                lo = std::min(lo, fl);
                hi = std::max(hi, fl);
            }
            const TrajectoryPoint &c = phase == Phase::descent ? t->points.front() : t->points.back();
            cruise.push_back({std::round(c.cas_kt), std::round(c.mach * 100.0) / 100.0});
            samples.push_back(std::move(s));
        }
        if (samples.size() < options.min_corpus)
        {
            throw FitError("corpus too small: " + std::to_string(samples.size()) + " usable " + to_string(phase) +
                           " trajectories of type " + coeffs.aircraft_type + ", need " +
                           std::to_string(options.min_corpus));
        }
        if (options.grid_points < 2)
        {
            throw FitError("grid needs at least two points");
        }

        ResampledCorpus out;
        const int m = options.grid_points;
        for (int g = 0; g < m; ++g)
        {
            out.fl_grid.push_back(lo + (hi - lo) * g / (m - 1));
        }
        const auto n = static_cast<Eigen::Index>(samples.size());
        out.delta_cas.resize(n, m);
        out.thrust_dev.resize(n, m);
        out.drag_dev.resize(n, m);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const CurveSamples &s = samples[static_cast<std::size_t>(i)];
            out.delta_cas.row(i) = resample(s.cas, out.fl_grid).transpose();
            out.thrust_dev.row(i) = resample(s.thrust, out.fl_grid).transpose();
            out.drag_dev.row(i) = resample(s.drag, out.fl_grid).transpose();
        }
        out.cruise = std::move(cruise);
        return out;
    }

    TrajectoryModel fit_model_from_curves(const ResampledCorpus &curves, const std::string &aircraft_type, Phase phase,
                                          const FitOptions &options)
    {
        const Eigen::Index n = curves.delta_cas.rows();
        if (static_cast<std::size_t>(n) < options.min_corpus)
        {
            throw FitError("corpus too small: " + std::to_string(n) + " curves");
        }
        TrajectoryModel model;
        model.aircraft_type = aircraft_type;
        model.phase = phase;
        model.cas = fit_fpca(curves.delta_cas, curves.fl_grid, options.k_components);
        model.thrust = fit_fpca(curves.thrust_dev, curves.fl_grid, options.k_components);
        model.drag = fit_fpca(curves.drag_dev, curves.fl_grid, options.k_components);

        const Eigen::Index dim = model.score_dimension();
        Eigen::MatrixXd scores(n, dim);
        for (Eigen::Index i = 0; i < n; ++i)
        {
            Eigen::Index at = 0;
            const std::pair<const FunctionalBasis *, const Eigen::MatrixXd *> parts[] = {
                {&model.cas, &curves.delta_cas}, {&model.thrust, &curves.thrust_dev}, {&model.drag, &curves.drag_dev}};
            for (const auto &[basis, data] : parts)
            {
                scores.row(i).segment(at, basis->components()) = basis->project(data->row(i).transpose()).transpose();
                at += basis->components();
            }
        }

        model.score_scale.resize(dim);
        Eigen::Index at = 0;
        for (const FunctionalBasis *b : {&model.cas, &model.thrust, &model.drag})
        {
            const double floor = 1e-14 * (1.0 + b->total_variance);
            for (Eigen::Index k = 0; k < b->components(); ++k)
            {
                model.score_scale(at++) = b->eigenvalues(k) > floor ? std::sqrt(b->eigenvalues(k)) : 0.0;
            }
        }
        Eigen::MatrixXd standardized(n, dim);
        for (Eigen::Index j = 0; j < dim; ++j)
        {
            const double s = model.score_scale(j);
            standardized.col(j) = s > 0.0 ? Eigen::VectorXd(scores.col(j) / s) : Eigen::VectorXd::Zero(n);
        }

        GmmFitOptions gopt;
        gopt.components = static_cast<int>(std::min<Eigen::Index>(options.gmm_components, n));
        gopt.seed = derive_seed(options.seed, "gmm");
        const GmmFitResult fit = fit_gmm(standardized, gopt);
        model.score_gmm = fit.gmm;

        std::map<std::pair<long, long>, std::size_t> counts;
        for (const CruiseSpeed &c : curves.cruise)
        {
            ++counts[{std::lround(c.cas_kt), std::lround(c.mach * 100.0)}];
        }
        for (const auto &[key, count] : counts)
        {
            model.cruise_pmf.push_back({{static_cast<double>(key.first), static_cast<double>(key.second) / 100.0},
                                        static_cast<double>(count) / static_cast<double>(curves.cruise.size())});
        }

        model.metadata.corpus_size = static_cast<std::size_t>(n);
        model.metadata.seed = options.seed;
        model.metadata.gmm_iterations = fit.iterations;
        model.metadata.gmm_converged = fit.converged;
        model.metadata.gmm_regularised = fit.regularised;
        model.validate();
        return model;
    }

    TrajectoryModel fit_model(const std::vector<Trajectory> &corpus, const PerfCoefficients &coeffs, Phase phase,
                              const FitOptions &options)
    {
        return fit_model_from_curves(resample_corpus(corpus, coeffs, phase, options), coeffs.aircraft_type, phase,
                                     options);
    }

    CorrectionSample sample_correction(const TrajectoryModel &model, std::uint64_t seed, const PerfCoefficients *coeffs)
    {
        Rng rng(derive_seed(seed, "correction"));
        const Eigen::VectorXd draw = model.score_gmm.sample(rng);
        return model.correction_from_scores(model.score_scale.cwiseProduct(draw), seed, coeffs);
    }

    CorrectionSample mean_mode_correction(const TrajectoryModel &model, const PerfCoefficients *coeffs)
    {
        return model.correction_from_scores(model.raw_score_mean(), 0, coeffs);
    }

    CruiseDraw sample_cruise_speed(const TrajectoryModel &model, std::uint64_t seed, const PerfCoefficients &coeffs)
    {
        if (model.cruise_pmf.empty())
        {
            return {{coeffs.base_cas_at(350.0), coeffs.base_mach}, true};
        }
        Rng rng(derive_seed(seed, "cruise"));
        const double u = rng.uniform01();
        double acc = 0.0;
        for (const auto &e : model.cruise_pmf)
        {
            acc += e.probability;
            if (u < acc)
            {
                return {e.speed, false};
            }
        }
        return {model.cruise_pmf.back().speed, false};
    }

    void save_model(const std::string &path, const TrajectoryModel &model)
    {
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("cannot write model file " + path);
        }
        out << to_json(model).dump(2) << '\n';
    }

    TrajectoryModel load_model(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw std::runtime_error("cannot open model file " + path);
        }
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(in);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw DefinitionError(path + ": " + e.what());
        }
        TrajectoryModel m = model_from_json(j);
        m.validate();
        return m;
    }
}
