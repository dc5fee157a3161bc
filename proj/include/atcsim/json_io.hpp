#pragma once

#include "atcsim/aircraft.hpp"
#include "atcsim/airspace.hpp"
#include "atcsim/atmosphere.hpp"
#include "atcsim/clearance.hpp"
#include "atcsim/perf.hpp"
#include "atcsim/trajectory.hpp"
#include "atcsim/trajectory_model.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>

namespace atcsim
{
    /// A structurally invalid JSON field; `path` is a JSON pointer to it.
    class JsonFieldError : public std::runtime_error
    {
    public:
        JsonFieldError(std::string path, const std::string &what)
            : std::runtime_error(path + ": " + what), m_path(std::move(path))
        {
        }
        const std::string &path() const noexcept { return m_path; }

    private:
        std::string m_path;
    };

    namespace jsonf
    {
        const nlohmann::json &member(const nlohmann::json &obj, const std::string &key, const std::string &path);
        double number(const nlohmann::json &obj, const std::string &key, const std::string &path);
        double number_or(const nlohmann::json &obj, const std::string &key, double fallback, const std::string &path);
        std::int64_t integer(const nlohmann::json &obj, const std::string &key, const std::string &path);
        std::string string(const nlohmann::json &obj, const std::string &key, const std::string &path);
        const nlohmann::json &array(const nlohmann::json &obj, const std::string &key, const std::string &path);
        std::vector<double> numbers(const nlohmann::json &obj, const std::string &key, const std::string &path);
    }

    nlohmann::json to_json(const PerfCoefficients &p);
    PerfCoefficients perf_from_json(const nlohmann::json &j, const std::string &path = "");

    nlohmann::json to_json(const FlightPlan &p);
    FlightPlan flight_plan_from_json(const nlohmann::json &j, const std::string &path);

    nlohmann::json to_json(const AirspaceDefinition &a);
    AirspaceDefinition airspace_from_json(const nlohmann::json &j, const std::string &path);

    nlohmann::json to_json(const WindGrid &g);
    WindGrid wind_grid_from_json(const nlohmann::json &j, WindRole role, const std::string &path);

    nlohmann::json to_json(const Clearance &c);
    Clearance clearance_from_json(const nlohmann::json &j, const std::string &path = "");

    nlohmann::json to_json(const Trajectory &t);
    Trajectory trajectory_from_json(const nlohmann::json &j, const std::string &path = "");

    nlohmann::json to_json(const FunctionalBasis &b);
    FunctionalBasis basis_from_json(const nlohmann::json &j, const std::string &path);

    nlohmann::json to_json(const ScoreGMM &g);
    ScoreGMM gmm_from_json(const nlohmann::json &j, const std::string &path);

    nlohmann::json to_json(const TrajectoryModel &m);
    TrajectoryModel model_from_json(const nlohmann::json &j);

    nlohmann::json to_json(const CorrectionSample &c);

    inline constexpr const char *kCorpusSchema = "atcsim-corpus";

    /// Trajectory corpus file: {"schema", "version", "trajectories": [...]}.
    void save_corpus(const std::string &path, const std::vector<Trajectory> &corpus);
    std::vector<Trajectory> load_corpus(const std::string &path);
}
