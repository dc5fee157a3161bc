#include "atcsim/scenario.hpp"

#include "atcsim/errors.hpp"
#include "atcsim/geo.hpp"
#include "atcsim/json_io.hpp"
#include "atcsim/rng.hpp"
#include "atcsim/trajectory_model.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace atcsim
{
    using nlohmann::json;

    namespace
    {
        std::string idx(const std::string &base, std::size_t i) { return base + "/" + std::to_string(i); }

        [[noreturn]] void fail(ScenarioErrorCode code, const std::string &where, const std::string &msg)
        {
            throw ScenarioError(code, where, msg);
        }

        std::string latency_kind_name(LatencyKind k) { return k == LatencyKind::uniform ? "uniform" : "heavy_tailed"; }

        json latency_json(const LatencyModel &l)
        {
            json j{{"mean_s", l.mean_s}, {"jitter_s", l.jitter_s}, {"distribution", latency_kind_name(l.kind)}};
            if (l.kind == LatencyKind::heavy_tailed)
            {
                j["tail_probability"] = l.tail_probability;
                j["tail_mean_s"] = l.tail_mean_s;
            }
            return j;
        }

        LatencyModel latency_from(const json &j, const std::string &path)
        {
            LatencyModel l;
            l.mean_s = jsonf::number(j, "mean_s", path);
            l.jitter_s = jsonf::number(j, "jitter_s", path);
            const std::string kind = j.contains("distribution") ? jsonf::string(j, "distribution", path) : "uniform";
            if (kind == "heavy_tailed")
            {
                l.kind = LatencyKind::heavy_tailed;
                l.tail_probability = jsonf::number_or(j, "tail_probability", l.tail_probability, path);
                l.tail_mean_s = jsonf::number_or(j, "tail_mean_s", l.tail_mean_s, path);
            }
            else if (kind != "uniform")
            {
                throw JsonFieldError(path + "/distribution", "expected uniform or heavy_tailed");
            }
            return l;
        }

        json generation_json(const GenerationParams &g)
        {
            json mix = json::array();
            for (const auto &[type, p] : g.type_mix)
            {
                mix.push_back({{"aircraft_type", type}, {"p", p}});
            }
            return json{{"seed", g.seed},
                        {"duration_s", g.duration_s},
                        {"density_per_10min", g.density_per_10min},
                        {"conflict_geometry", to_string(g.geometry)},
                        {"entry_fl_range", {g.entry_fl_min, g.entry_fl_max}},
                        {"type_mix", mix},
                        {"centre", {{"lat", g.centre.lat}, {"lon", g.centre.lon}}},
                        {"sector_half_width_nmi", g.sector_half_width_nmi},
                        {"route_radius_nmi", g.route_radius_nmi},
                        {"routes", g.routes}};
        }

        GenerationParams generation_from(const json &j, const std::string &path)
        {
            GenerationParams g;
            g.seed = jsonf::member(j, "seed", path).get<std::uint64_t>();
            g.duration_s = jsonf::number(j, "duration_s", path);
            g.density_per_10min = jsonf::number(j, "density_per_10min", path);
            try
            {
                g.geometry = conflict_geometry_from_string(jsonf::string(j, "conflict_geometry", path));
            }
            catch (const std::invalid_argument &e)
            {
                throw JsonFieldError(path + "/conflict_geometry", e.what());
            }
            const std::vector<double> range = jsonf::numbers(j, "entry_fl_range", path);
            if (range.size() != 2)
            {
                throw JsonFieldError(path + "/entry_fl_range", "expected [min, max]");
            }
            g.entry_fl_min = range[0];
            g.entry_fl_max = range[1];
            g.type_mix.clear();
            for (const auto &e : jsonf::array(j, "type_mix", path))
            {
                g.type_mix.emplace_back(jsonf::string(e, "aircraft_type", path + "/type_mix"),
                                        jsonf::number(e, "p", path + "/type_mix"));
            }
            const json &c = jsonf::member(j, "centre", path);
            g.centre = {jsonf::number(c, "lat", path + "/centre"), jsonf::number(c, "lon", path + "/centre")};
            g.sector_half_width_nmi = jsonf::number(j, "sector_half_width_nmi", path);
            g.route_radius_nmi = jsonf::number(j, "route_radius_nmi", path);
            g.routes = static_cast<int>(jsonf::integer(j, "routes", path));
            return g;
        }

        json track_json(const RecordedTrack &t)
        {
            json samples = json::array();
            for (const auto &s : t.samples)
            {
                samples.push_back({s.t, s.position.lat, s.position.lon, s.fl, s.ground_speed_kt, s.heading_deg});
            }
            json transfers = json::array();
            for (const auto &e : t.transfers)
            {
                transfers.push_back({{"t", e.t}, {"to_group", e.to_group}});
            }
            json j{{"callsign", t.callsign}, {"samples", samples}, {"transfers", transfers}};
            if (!t.plan.route.empty())
            {
                j["plan"] = to_json(t.plan);
            }
            return j;
        }

        RecordedTrack track_from(const json &j, const std::string &path)
        {
            RecordedTrack t;
            t.callsign = jsonf::string(j, "callsign", path);
            const json &samples = jsonf::array(j, "samples", path);
            for (std::size_t i = 0; i < samples.size(); ++i)
            {
                const json &r = samples[i];
                if (!r.is_array() || r.size() != 6 ||
                    !std::all_of(r.begin(), r.end(), [](const json &x) { return x.is_number(); }))
                {
                    throw JsonFieldError(idx(path + "/samples", i), "expected [t, lat, lon, fl, gs_kt, hdg_deg]");
                }
                t.samples.push_back({r[0].get<double>(),
                                     {r[1].get<double>(), r[2].get<double>()},
                                     r[3].get<double>(),
                                     r[4].get<double>(),
                                     r[5].get<double>()});
            }
            if (j.contains("plan"))
            {
                t.plan = flight_plan_from_json(j["plan"], path + "/plan");
            }
            else
            {
                t.plan.callsign = t.callsign;
            }
            if (j.contains("transfers"))
            {
                const json &tr = jsonf::array(j, "transfers", path);
                for (std::size_t i = 0; i < tr.size(); ++i)
                {
                    t.transfers.push_back(
                        {jsonf::number(tr[i], "t", idx(path + "/transfers", i)), jsonf::string(tr[i], "to_group", idx(path + "/transfers", i))});
                }
            }
            for (std::size_t i = 1; i < t.samples.size(); ++i)
            {
                if (!(t.samples[i].t > t.samples[i - 1].t))
                {
                    fail(ScenarioErrorCode::invariant, idx(path + "/samples", i),
                         "sample times must strictly increase for " + t.callsign);
                }
            }
            flag_track(t);
            return t;
        }

        json flight_json(const FlightEntry &f)
        {
            json j{{"plan", to_json(f.plan)},
                   {"entry_time_s", f.entry_time_s},
                   {"position", {{"lat", f.position.lat}, {"lon", f.position.lon}}},
                   {"fl", f.fl}};
            if (f.heading_deg)
            {
                j["heading_deg"] = *f.heading_deg;
            }
            if (f.cleared_fl)
            {
                j["cleared_fl"] = *f.cleared_fl;
            }
            return j;
        }

        FlightEntry flight_from(const json &j, const std::string &path)
        {
            FlightEntry f;
            f.plan = flight_plan_from_json(jsonf::member(j, "plan", path), path + "/plan");
            f.entry_time_s = jsonf::number_or(j, "entry_time_s", 0.0, path);
            const json &pos = jsonf::member(j, "position", path);
            f.position = {jsonf::number(pos, "lat", path + "/position"), jsonf::number(pos, "lon", path + "/position")};
            f.fl = jsonf::number(j, "fl", path);
            if (j.contains("heading_deg"))
            {
                f.heading_deg = jsonf::number(j, "heading_deg", path);
            }
            if (j.contains("cleared_fl"))
            {
                f.cleared_fl = jsonf::number(j, "cleared_fl", path);
            }
            return f;
        }

        json coordination_json(const CoordinationSpec &c)
        {
            json j{{"callsign", c.callsign},
                   {"from_group", c.from_group},
                   {"to_group", c.to_group},
                   {"transfer_fl", c.transfer_fl},
                   {"estimate_s", c.estimate_s},
                   {"kind", c.kind == CoordinationKind::standing ? "standing" : "tactical"}};
            if (c.transfer_point)
            {
                j["transfer_point"] = *c.transfer_point;
            }
            return j;
        }

        CoordinationSpec coordination_from(const json &j, const std::string &path)
        {
            CoordinationSpec c;
            c.callsign = jsonf::string(j, "callsign", path);
            c.from_group = jsonf::string(j, "from_group", path);
            c.to_group = jsonf::string(j, "to_group", path);
            c.transfer_fl = jsonf::number(j, "transfer_fl", path);
            c.estimate_s = jsonf::number_or(j, "estimate_s", 0.0, path);
            if (j.contains("transfer_point"))
            {
                c.transfer_point = jsonf::string(j, "transfer_point", path);
            }
            const std::string kind = j.contains("kind") ? jsonf::string(j, "kind", path) : "standing";
            if (kind != "standing" && kind != "tactical")
            {
                throw JsonFieldError(path + "/kind", "expected standing or tactical");
            }
            c.kind = kind == "standing" ? CoordinationKind::standing : CoordinationKind::tactical;
            return c;
        }

        std::string resolve(const std::string &base_dir, const std::string &file)
        {
            const std::filesystem::path p(file);
            if (p.is_absolute() || base_dir.empty())
            {
                return p.string();
            }
            return (std::filesystem::path(base_dir) / p).string();
        }

        std::string read_file(const std::string &path)
        {
            std::ifstream in(path, std::ios::binary);
            if (!in)
            {
                throw std::runtime_error("cannot open " + path);
            }
            std::ostringstream ss;
            ss << in.rdbuf();
            return ss.str();
        }

        std::size_t line_of(const std::string &text, std::size_t byte)
        {
            byte = std::min(byte, text.size());
            return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
        }

        ScenarioSpec parse_document(const json &doc, const std::string &base_dir)
        {
            if (!doc.is_object())
            {
                fail(ScenarioErrorCode::schema, "", "scenario must be a JSON object");
            }
            if (doc.value("schema", "") != kScenarioSchema)
            {
                fail(ScenarioErrorCode::schema, "/schema", std::string("expected schema '") + kScenarioSchema + "'");
            }
            if (!doc.contains("version") || !doc["version"].is_number_integer() || doc["version"].get<int>() != kScenarioVersion)
            {
                fail(ScenarioErrorCode::schema, "/version",
                     "unsupported scenario version (expected " + std::to_string(kScenarioVersion) + ")");
            }

            ScenarioSpec s;
            try
            {
                const json &seed = jsonf::member(doc, "seed", "");
                if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0))
                {
                    throw JsonFieldError("/seed", "expected a non-negative integer");
                }
                s.seed = seed.get<std::uint64_t>();
                s.duration_s = jsonf::number(doc, "duration_s", "");

                if (doc.contains("airspace_file"))
                {
                    s.airspace_file = jsonf::string(doc, "airspace_file", "");
                    json a;
                    try
                    {
                        a = json::parse(read_file(resolve(base_dir, *s.airspace_file)));
                    }
                    catch (const std::exception &e)
                    {
                        fail(ScenarioErrorCode::reference, "/airspace_file", e.what());
                    }
                    s.airspace = airspace_from_json(a, "/airspace_file");
                }
                else
                {
                    s.airspace = airspace_from_json(jsonf::member(doc, "airspace", ""), "/airspace");
                }

                for (const auto &g : jsonf::array(doc, "simulated_groups", ""))
                {
                    if (!g.is_string())
                    {
                        throw JsonFieldError("/simulated_groups", "expected group ids");
                    }
                    s.simulated_groups.push_back(g.get<std::string>());
                }
                if (doc.contains("flights"))
                {
                    const json &arr = jsonf::array(doc, "flights", "");
                    for (std::size_t i = 0; i < arr.size(); ++i)
                    {
                        s.flights.push_back(flight_from(arr[i], idx("/flights", i)));
                    }
                }
                if (doc.contains("recorded"))
                {
                    const json &arr = jsonf::array(doc, "recorded", "");
                    for (std::size_t i = 0; i < arr.size(); ++i)
                    {
                        s.recorded.push_back(track_from(arr[i], idx("/recorded", i)));
                    }
                }
                if (doc.contains("wind"))
                {
                    const json &w = doc["wind"];
                    for (const auto &[key, role] : {std::pair{"forecast", WindRole::forecast}, std::pair{"truth", WindRole::truth}})
                    {
                        if (!w.contains(key))
                        {
                            continue;
                        }
                        const json &arr = jsonf::array(w, key, "/wind");
                        for (std::size_t i = 0; i < arr.size(); ++i)
                        {
                            WindGrid g = wind_grid_from_json(arr[i], role, idx(std::string("/wind/") + key, i));
                            (role == WindRole::forecast ? s.forecast_wind : s.truth_wind).push_back(std::move(g));
                        }
                    }
                }
                if (doc.contains("latency"))
                {
                    s.latency = latency_from(doc["latency"], "/latency");
                }
                if (doc.contains("coordinations"))
                {
                    const json &arr = jsonf::array(doc, "coordinations", "");
                    for (std::size_t i = 0; i < arr.size(); ++i)
                    {
                        s.coordinations.push_back(coordination_from(arr[i], idx("/coordinations", i)));
                    }
                }
                if (doc.contains("actions"))
                {
                    const json &arr = jsonf::array(doc, "actions", "");
                    for (std::size_t i = 0; i < arr.size(); ++i)
                    {
                        const std::string p = idx("/actions", i);
                        s.actions.push_back({jsonf::number(arr[i], "t", p), jsonf::string(arr[i], "callsign", p),
                                             arr[i].contains("issuer") ? jsonf::string(arr[i], "issuer", p) : "script",
                                             clearance_from_json(jsonf::member(arr[i], "clearance", p), p + "/clearance")});
                    }
                }
                if (doc.contains("models"))
                {
                    const json &arr = jsonf::array(doc, "models", "");
                    for (std::size_t i = 0; i < arr.size(); ++i)
                    {
                        const std::string p = idx("/models", i);
                        ModelRef m;
                        m.aircraft_type = jsonf::string(arr[i], "aircraft_type", p);
                        try
                        {
                            m.phase = phase_from_string(jsonf::string(arr[i], "phase", p));
                        }
                        catch (const std::invalid_argument &e)
                        {
                            throw JsonFieldError(p + "/phase", e.what());
                        }
                        m.file = jsonf::string(arr[i], "file", p);
                        s.models.push_back(std::move(m));
                    }
                }
                if (doc.contains("perf_file"))
                {
                    s.perf_file = jsonf::string(doc, "perf_file", "");
                    try
                    {
                        s.perf_tables = load_perf_file(resolve(base_dir, *s.perf_file));
                    }
                    catch (const std::exception &e)
                    {
                        fail(ScenarioErrorCode::reference, "/perf_file", e.what());
                    }
                }
                if (doc.contains("generation"))
                {
                    s.generation = generation_from(doc["generation"], "/generation");
                }
            }
            catch (const JsonFieldError &e)
            {
                fail(ScenarioErrorCode::field, e.path(), e.what());
            }
            catch (const nlohmann::json::exception &e)
            {
                fail(ScenarioErrorCode::field, "", e.what());
            }
            validate_scenario(s);
            return s;
        }

        bool known_type(const ScenarioSpec &s, const std::string &type)
        {
            for (const auto &p : s.perf_tables)
            {
                if (p.aircraft_type == type)
                {
                    return true;
                }
            }
            for (const auto &p : builtin_perf_tables())
            {
                if (p.aircraft_type == type)
                {
                    return true;
                }
            }
            return false;
        }

        void check_route(const ScenarioSpec &s, const FlightPlan &plan, const std::string &path)
        {
            for (std::size_t j = 0; j < plan.route.size(); ++j)
            {
                if (s.airspace.find_waypoint(plan.route[j]) == nullptr)
                {
                    fail(ScenarioErrorCode::reference, idx(path + "/route", j),
                         "unknown waypoint " + plan.route[j] + " in flight " + plan.callsign);
                }
            }
        }

        void check_fl(double fl, const std::string &path)
        {
            if (!(fl >= kMinFl && fl <= kMaxFl))
            {
                fail(ScenarioErrorCode::field, path, "flight level must lie in [0, 600]");
            }
        }
    }

    std::string to_string(ScenarioErrorCode code)
    {
        switch (code)
        {
        case ScenarioErrorCode::parse:
            return "E_PARSE";
        case ScenarioErrorCode::schema:
            return "E_SCHEMA";
        case ScenarioErrorCode::field:
            return "E_FIELD";
        case ScenarioErrorCode::reference:
            return "E_REF";
        case ScenarioErrorCode::invariant:
            return "E_INVARIANT";
        case ScenarioErrorCode::generation:
            return "E_GENERATION";
        }
        return "E_FIELD";
    }

    ScenarioError::ScenarioError(ScenarioErrorCode code, std::string location, const std::string &message)
        : std::runtime_error(to_string(code) + (location.empty() ? "" : " at " + location) + ": " + message),
          m_code(code), m_location(std::move(location))
    {
    }

    std::string to_string(ConflictGeometry g)
    {
        switch (g)
        {
        case ConflictGeometry::crossing:
            return "crossing";
        case ConflictGeometry::head_on:
            return "head_on";
        case ConflictGeometry::overtaking:
            return "overtaking";
        case ConflictGeometry::vertical:
            return "vertical";
        case ConflictGeometry::mixed:
            return "mixed";
        }
        return "crossing";
    }

    ConflictGeometry conflict_geometry_from_string(const std::string &s)
    {
        for (auto g : {ConflictGeometry::crossing, ConflictGeometry::head_on, ConflictGeometry::overtaking,
                       ConflictGeometry::vertical, ConflictGeometry::mixed})
        {
            if (to_string(g) == s)
            {
                return g;
            }
        }
        throw std::invalid_argument("unknown conflict geometry '" + s + "'");
    }

    void validate_scenario(const ScenarioSpec &s)
    {
        if (!(s.duration_s > 0.0))
        {
            fail(ScenarioErrorCode::field, "/duration_s", "duration must be positive");
        }
        try
        {
            s.airspace.validate();
        }
        catch (const DefinitionError &e)
        {
            fail(ScenarioErrorCode::invariant, s.airspace_file ? "/airspace_file" : "/airspace", e.what());
        }
        for (std::size_t i = 0; i < s.simulated_groups.size(); ++i)
        {
            if (!s.airspace.has_group(s.simulated_groups[i]))
            {
                fail(ScenarioErrorCode::reference, idx("/simulated_groups", i),
                     "unknown group " + s.simulated_groups[i]);
            }
        }
        if (s.latency.mean_s < 0.0 || s.latency.jitter_s < 0.0 || s.latency.tail_probability < 0.0 ||
            s.latency.tail_probability > 1.0 || s.latency.tail_mean_s < 0.0)
        {
            fail(ScenarioErrorCode::field, "/latency", "latency parameters must be non-negative");
        }

        std::set<std::string> callsigns;
        for (std::size_t i = 0; i < s.flights.size(); ++i)
        {
            const FlightEntry &f = s.flights[i];
            const std::string p = idx("/flights", i);
            if (!callsigns.insert(f.plan.callsign).second)
            {
                fail(ScenarioErrorCode::invariant, p + "/plan/callsign", "duplicate callsign " + f.plan.callsign);
            }
            if (!known_type(s, f.plan.aircraft_type))
            {
                fail(ScenarioErrorCode::reference, p + "/plan/aircraft_type",
                     "no performance table for type " + f.plan.aircraft_type + " (flight " + f.plan.callsign + ")");
            }
            check_route(s, f.plan, p + "/plan");
            check_fl(f.fl, p + "/fl");
            if (f.cleared_fl)
            {
                check_fl(*f.cleared_fl, p + "/cleared_fl");
            }
            if (f.heading_deg && !(*f.heading_deg >= 0.0 && *f.heading_deg < 360.0))
            {
                fail(ScenarioErrorCode::field, p + "/heading_deg", "heading must lie in [0, 360)");
            }
            if (std::abs(f.position.lat) > 90.0 || std::abs(f.position.lon) > 180.0)
            {
                fail(ScenarioErrorCode::field, p + "/position", "coordinates out of range");
            }
            if (f.plan.requested_cruise && (f.plan.requested_cruise->cas_kt < kMinCasKt ||
                                            f.plan.requested_cruise->cas_kt > kMaxCasKt ||
                                            f.plan.requested_cruise->mach <= 0.3 || f.plan.requested_cruise->mach >= 0.95))
            {
                fail(ScenarioErrorCode::field, p + "/plan/requested_cruise", "cruise speed out of range");
            }
        }
        for (std::size_t i = 0; i < s.recorded.size(); ++i)
        {
            const RecordedTrack &t = s.recorded[i];
            const std::string p = idx("/recorded", i);
            if (!callsigns.insert(t.callsign).second)
            {
                fail(ScenarioErrorCode::invariant, p + "/callsign", "duplicate callsign " + t.callsign);
            }
            if (t.samples.empty())
            {
                fail(ScenarioErrorCode::invariant, p + "/samples", "recorded track " + t.callsign + " has no samples");
            }
            for (std::size_t k = 0; k < t.samples.size(); ++k)
            {
                check_fl(t.samples[k].fl, idx(p + "/samples", k));
                if (k > 0 && !(t.samples[k].t > t.samples[k - 1].t))
                {
                    fail(ScenarioErrorCode::invariant, idx(p + "/samples", k), "sample times must strictly increase");
                }
            }
            check_route(s, t.plan, p + "/plan");
            if (!t.plan.aircraft_type.empty() && !known_type(s, t.plan.aircraft_type))
            {
                fail(ScenarioErrorCode::reference, p + "/plan/aircraft_type", "no performance table for type " + t.plan.aircraft_type);
            }
            for (std::size_t k = 0; k < t.transfers.size(); ++k)
            {
                if (!s.airspace.has_group(t.transfers[k].to_group))
                {
                    fail(ScenarioErrorCode::reference, idx(p + "/transfers", k) + "/to_group",
                         "unknown group " + t.transfers[k].to_group);
                }
            }
        }
        for (const auto *grids : {&s.forecast_wind, &s.truth_wind})
        {
            for (std::size_t i = 0; i < grids->size(); ++i)
            {
                const WindGrid &g = (*grids)[i];
                try
                {
                    g.validate();
                }
                catch (const DefinitionError &e)
                {
                    fail(ScenarioErrorCode::invariant, idx(std::string("/wind/") + to_string(g.role), i), e.what());
                }
            }
        }
        for (std::size_t i = 0; i < s.coordinations.size(); ++i)
        {
            const CoordinationSpec &c = s.coordinations[i];
            const std::string p = idx("/coordinations", i);
            if (callsigns.count(c.callsign) == 0)
            {
                fail(ScenarioErrorCode::reference, p + "/callsign", "unknown callsign " + c.callsign);
            }
            for (const auto &[key, g] : {std::pair{"from_group", &c.from_group}, std::pair{"to_group", &c.to_group}})
            {
                if (!s.airspace.has_group(*g))
                {
                    fail(ScenarioErrorCode::reference, p + "/" + key, "unknown group " + *g);
                }
            }
            if (c.from_group == c.to_group)
            {
                fail(ScenarioErrorCode::invariant, p, "coordination groups must differ");
            }
            if (c.transfer_point && s.airspace.find_waypoint(*c.transfer_point) == nullptr)
            {
                fail(ScenarioErrorCode::reference, p + "/transfer_point", "unknown waypoint " + *c.transfer_point);
            }
            check_fl(c.transfer_fl, p + "/transfer_fl");
        }
        for (std::size_t i = 0; i < s.actions.size(); ++i)
        {
            const ScriptedAction &a = s.actions[i];
            const std::string p = idx("/actions", i);
            if (callsigns.count(a.callsign) == 0)
            {
                fail(ScenarioErrorCode::reference, p + "/callsign", "unknown callsign " + a.callsign);
            }
            if (a.t < 0.0)
            {
                fail(ScenarioErrorCode::field, p + "/t", "action time must be non-negative");
            }
            const std::string bad = check_clearance_attributes(a.clearance);
            if (!bad.empty())
            {
                fail(ScenarioErrorCode::field, p + "/clearance", bad);
            }
            std::visit(
                [&](const auto &c) {
                    using T = std::decay_t<decltype(c)>;
                    if constexpr (std::is_same_v<T, DirectTo> || std::is_same_v<T, DescendWhenReadyLevelBy> ||
                                  std::is_same_v<T, DescendNowLevelBy>)
                    {
                        if (s.airspace.find_waypoint(c.waypoint) == nullptr)
                        {
                            fail(ScenarioErrorCode::reference, p + "/clearance/waypoint", "unknown waypoint " + c.waypoint);
                        }
                    }
                    else if constexpr (std::is_same_v<T, ContactFrequency>)
                    {
                        if (!s.airspace.has_group(c.group_id))
                        {
                            fail(ScenarioErrorCode::reference, p + "/clearance/group", "unknown group " + c.group_id);
                        }
                    }
                },
                a.clearance);
        }
        for (std::size_t i = 0; i < s.models.size(); ++i)
        {
            if (!known_type(s, s.models[i].aircraft_type))
            {
                fail(ScenarioErrorCode::reference, idx("/models", i), "no performance table for type " + s.models[i].aircraft_type);
            }
        }
    }

    ScenarioSpec parse_scenario(const std::string &text, const std::string &base_dir)
    {
        json doc;
        try
        {
            doc = json::parse(text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            fail(ScenarioErrorCode::parse, "line " + std::to_string(line_of(text, e.byte == 0 ? 0 : e.byte - 1)), e.what());
        }
        return parse_document(doc, base_dir);
    }

    ScenarioSpec load_scenario(const std::string &path)
    {
        std::string text;
        try
        {
            text = read_file(path);
        }
        catch (const std::exception &e)
        {
            fail(ScenarioErrorCode::reference, path, e.what());
        }
        return parse_scenario(text, std::filesystem::path(path).parent_path().string());
    }

    json to_json(const RecordedTrack &t) { return track_json(t); }

    json scenario_to_json(const ScenarioSpec &s)
    {
        json j{{"schema", kScenarioSchema}, {"version", kScenarioVersion}, {"seed", s.seed}, {"duration_s", s.duration_s}};
        if (s.airspace_file)
        {
            j["airspace_file"] = *s.airspace_file;
        }
        else
        {
            j["airspace"] = to_json(s.airspace);
        }
        j["simulated_groups"] = s.simulated_groups;
        json flights = json::array();
        for (const auto &f : s.flights)
        {
            flights.push_back(flight_json(f));
        }
        j["flights"] = flights;
        json recorded = json::array();
        for (const auto &t : s.recorded)
        {
            recorded.push_back(track_json(t));
        }
        j["recorded"] = recorded;
        json forecast = json::array();
        for (const auto &g : s.forecast_wind)
        {
            forecast.push_back(to_json(g));
        }
        json truth = json::array();
        for (const auto &g : s.truth_wind)
        {
            truth.push_back(to_json(g));
        }
        j["wind"] = {{"forecast", forecast}, {"truth", truth}};
        j["latency"] = latency_json(s.latency);
        json coords = json::array();
        for (const auto &c : s.coordinations)
        {
            coords.push_back(coordination_json(c));
        }
        j["coordinations"] = coords;
        json actions = json::array();
        for (const auto &a : s.actions)
        {
            actions.push_back({{"t", a.t}, {"callsign", a.callsign}, {"issuer", a.issuer}, {"clearance", to_json(a.clearance)}});
        }
        j["actions"] = actions;
        json models = json::array();
        for (const auto &m : s.models)
        {
            models.push_back({{"aircraft_type", m.aircraft_type}, {"phase", to_string(m.phase)}, {"file", m.file}});
        }
        j["models"] = models;
        if (s.perf_file)
        {
            j["perf_file"] = *s.perf_file;
        }
        if (s.generation)
        {
            j["generation"] = generation_json(*s.generation);
        }
        return j;
    }

    std::string serialize_scenario(const ScenarioSpec &s)
    {
        return scenario_to_json(s).dump(2) + "\n";
    }

    void save_scenario(const std::string &path, const ScenarioSpec &s)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
            throw std::runtime_error("cannot write scenario " + path);
        }
        out << serialize_scenario(s);
    }

    void flag_track(RecordedTrack &track)
    {
        std::stable_sort(track.samples.begin(), track.samples.end(),
                         [](const TrackSample &a, const TrackSample &b) { return a.t < b.t; });
        track.flags.clear();
        for (std::size_t i = 1; i < track.samples.size(); ++i)
        {
            const double gap = track.samples[i].t - track.samples[i - 1].t;
            if (gap > kTrackGapS)
            {
                track.flags.push_back({TrackFlagKind::gap, i, gap});
            }
            const double jump = std::abs(track.samples[i].fl - track.samples[i - 1].fl);
            if (jump > kTrackJumpFl)
            {
                track.flags.push_back({TrackFlagKind::fl_jump, i, jump});
            }
        }
    }

    // ---- generation -------------------------------------------------------------------------------

    namespace
    {
        struct Route
        {
            std::string entry;
            std::string exit;
            double inbound_bearing = 0.0; // bearing of the entry point from the centre
        };

        std::string bearing_ident(char family, int n) { return std::string(1, family) + std::to_string(n); }

        std::string pick_type(const GenerationParams &g, Rng &rng)
        {
            double total = 0.0;
            for (const auto &[t, p] : g.type_mix)
            {
                total += p;
            }
            const double u = rng.uniform01() * total;
            double acc = 0.0;
            for (const auto &[t, p] : g.type_mix)
            {
                acc += p;
                if (u < acc)
                {
                    return t;
                }
            }
            return g.type_mix.back().first;
        }

        double cruise_tas(const CruiseSpeed &c, double fl)
        {
            const double h = fl * kFlToM;
            const double cas_tas = cas_to_tas_ms(c.cas_kt * kKnotToMs, h);
            const double mach_tas = mach_to_tas_ms(c.mach, h);
            return std::min(cas_tas, mach_tas) / kKnotToMs;
        }
    }

    ScenarioSpec generate_scenario(const GenerationParams &g)
    {
        const std::string where = "/generation";
        if (!(g.density_per_10min > 0.0))
        {
            fail(ScenarioErrorCode::generation, where + "/density_per_10min", "density must be positive");
        }
        if (!(g.duration_s > 0.0))
        {
            fail(ScenarioErrorCode::generation, where + "/duration_s", "duration must be positive");
        }
        if (!(g.entry_fl_min <= g.entry_fl_max) || g.entry_fl_min < 0.0 || g.entry_fl_max > 560.0)
        {
            fail(ScenarioErrorCode::generation, where + "/entry_fl_range", "entry FL range must lie within [0, 560]");
        }
        if (g.type_mix.empty())
        {
            fail(ScenarioErrorCode::generation, where + "/type_mix", "type mix is empty");
        }
        for (const auto &[t, p] : g.type_mix)
        {
            if (!(p > 0.0))
            {
                fail(ScenarioErrorCode::generation, where + "/type_mix", "type mix masses must be positive");
            }
            (void)builtin_perf(t);
        }
        if (g.routes < 1)
        {
            fail(ScenarioErrorCode::generation, where + "/routes", "at least one route is needed");
        }
        if (g.routes < 2 && g.geometry != ConflictGeometry::head_on && g.geometry != ConflictGeometry::overtaking)
        {
            fail(ScenarioErrorCode::generation, where + "/routes",
                 to_string(g.geometry) + " traffic needs two intersecting routes; the sector has one");
        }
        if (!(g.sector_half_width_nmi > 0.0) || !(g.route_radius_nmi > 0.0))
        {
            fail(ScenarioErrorCode::generation, where, "sector and route sizes must be positive");
        }

        Rng rng(derive_seed(g.seed, "generate"));
        ScenarioSpec s;
        s.seed = g.seed;
        s.duration_s = g.duration_s;
        s.generation = g;

        // Airspace: one square sector around the central fix.
        const double north = destination(g.centre, 0.0, g.sector_half_width_nmi).lat;
        const double south = destination(g.centre, 180.0, g.sector_half_width_nmi).lat;
        const double east = destination(g.centre, 90.0, g.sector_half_width_nmi).lon;
        const double west = destination(g.centre, 270.0, g.sector_half_width_nmi).lon;
        s.airspace.airac_date = "2401";
        s.airspace.sectors.push_back({"S1", 0.0, 600.0, {{south, west}, {north, west}, {north, east}, {south, east}}});
        s.airspace.bandbox_schedule.push_back({{{"G1", {"S1"}}}, 0.0});
        s.airspace.waypoints.push_back({"CTR", g.centre});
        s.simulated_groups = {"G1"};

        const double crossing_angle = 60.0 + 60.0 * rng.uniform01();
        std::vector<Route> routes;
        for (int r = 0; r < std::min(g.routes, 2); ++r)
        {
            const double inbound = wrap_360(270.0 + r * crossing_angle);
            const char family = static_cast<char>('A' + r);
            s.airspace.waypoints.push_back({bearing_ident(family, 1), destination(g.centre, inbound, g.route_radius_nmi)});
            s.airspace.waypoints.push_back(
                {bearing_ident(family, 2), destination(g.centre, wrap_360(inbound + 180.0), g.route_radius_nmi)});
            routes.push_back({bearing_ident(family, 1), bearing_ident(family, 2), inbound});
        }

        const double rate = g.density_per_10min / 600.0;
        const int fl_steps = static_cast<int>(std::floor((g.entry_fl_max - g.entry_fl_min) / 10.0 + 1e-9));
        double t = 0.0;
        struct Leader
        {
            double fix_time = 0.0;
            std::size_t route = 0;
            bool reversed = false;
            double fl = 0.0;
            CruiseSpeed cruise;
            ConflictGeometry geometry = ConflictGeometry::crossing;
        } leader;

        for (int i = 0;; ++i)
        {
            t += rng.exponential(rate);
            if (t >= g.duration_s)
            {
                break;
            }
            FlightEntry f;
            f.entry_time_s = std::round(t * 1000.0) / 1000.0;
            std::ostringstream cs;
            cs << "SIM" << std::setw(3) << std::setfill('0') << (i + 1);
            f.plan.callsign = cs.str();
            f.plan.aircraft_type = pick_type(g, rng);
            f.plan.departure = "ZZZZ";
            f.plan.destination = "ZZZZ";
            const PerfCoefficients &perf = builtin_perf(f.plan.aircraft_type);

            std::size_t route = 0;
            bool reversed = false;
            double fl = g.entry_fl_min + 10.0 * static_cast<double>(rng.below(static_cast<std::uint64_t>(fl_steps + 1)));
            double cleared = fl;
            double distance = g.route_radius_nmi;
            const bool partner = i % 2 == 1;
            ConflictGeometry geom = g.geometry;
            if (!partner)
            {
                if (geom == ConflictGeometry::mixed)
                {
                    geom = static_cast<ConflictGeometry>(rng.below(4));
                }
                route = routes.size() > 1 && geom == ConflictGeometry::crossing ? rng.below(2) : 0;
                reversed = false;
            }
            else
            {
                geom = leader.geometry;
                fl = leader.fl;
                cleared = fl;
                switch (geom)
                {
                case ConflictGeometry::crossing:
                    route = (leader.route + 1) % routes.size();
                    break;
                case ConflictGeometry::head_on:
                    route = leader.route;
                    reversed = !leader.reversed;
                    break;
                case ConflictGeometry::overtaking:
                    route = leader.route;
                    reversed = leader.reversed;
                    break;
                case ConflictGeometry::vertical:
                    route = (leader.route + 1) % routes.size();
                    fl = std::min(leader.fl + 20.0, kMaxFl);
                    cleared = std::max(leader.fl - 20.0, kMinFl);
                    break;
                case ConflictGeometry::mixed:
                    break;
                }
            }

            CruiseSpeed cruise{std::round(perf.base_cas_at(fl)), perf.base_mach};
            if (partner && geom == ConflictGeometry::overtaking)
            {
                cruise = {std::min(leader.cruise.cas_kt + 20.0, kMaxCasKt), std::min(leader.cruise.mach + 0.04, 0.94)};
            }
            const double gs = cruise_tas(cruise, fl);
            if (partner)
            {
                const double needed = gs * (leader.fix_time - f.entry_time_s) / 3600.0;
                if (needed > 0.0 && needed < g.route_radius_nmi)
                {
                    distance = std::round(needed * 1000.0) / 1000.0;
                }
            }

            const Route &r = routes[route];
            const double inbound = reversed ? wrap_360(r.inbound_bearing + 180.0) : r.inbound_bearing;
            f.plan.route = reversed ? std::vector<std::string>{r.exit, "CTR", r.entry} : std::vector<std::string>{r.entry, "CTR", r.exit};
            f.position = destination(g.centre, inbound, distance);
            f.position.lat = std::round(f.position.lat * 1e7) / 1e7;
            f.position.lon = std::round(f.position.lon * 1e7) / 1e7;
            f.heading_deg = std::round(initial_course_deg(f.position, g.centre) * 1e4) / 1e4;
            if (*f.heading_deg >= 360.0)
            {
                f.heading_deg = 0.0;
            }
            f.fl = fl;
            if (cleared != fl)
            {
                f.cleared_fl = cleared;
            }
            f.plan.requested_fl = cleared;
            f.plan.requested_cruise = cruise;

            if (!partner)
            {
                leader = {f.entry_time_s + distance / gs * 3600.0, route, reversed, fl, cruise, geom};
            }
            s.flights.push_back(std::move(f));
        }
        validate_scenario(s);
        return s;
    }

    // ---- CSV import -------------------------------------------------------------------------------

    namespace
    {
        std::vector<std::string> split_csv(const std::string &line)
        {
            std::vector<std::string> out;
            std::string cur;
            for (char c : line)
            {
                if (c == ',')
                {
                    out.push_back(cur);
                    cur.clear();
                }
                else if (c != '\r')
                {
                    cur += c;
                }
            }
            out.push_back(cur);
            for (auto &s : out)
            {
                const auto b = s.find_first_not_of(" \t");
                const auto e = s.find_last_not_of(" \t");
                s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
            }
            return out;
        }

        bool parse_double(const std::string &s, double &out)
        {
            if (s.empty())
            {
                return false;
            }
            char *end = nullptr;
            out = std::strtod(s.c_str(), &end);
            return end == s.c_str() + s.size() && std::isfinite(out);
        }
    }

    ImportResult import_tracks_csv(const std::string &text)
    {
        ImportResult result;
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        const std::vector<std::string> required{"callsign", "t", "lat", "lon", "fl", "gs", "hdg"};
        std::vector<int> column(required.size(), -1);
        std::size_t width = 0;
        bool header = false;

        struct Row
        {
            TrackSample sample;
            std::size_t line;
        };
        std::map<std::string, std::vector<Row>> rows;

        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty() || line == "\r")
            {
                continue;
            }
            const auto cells = split_csv(line);
            if (!header)
            {
                for (std::size_t c = 0; c < cells.size(); ++c)
                {
                    for (std::size_t r = 0; r < required.size(); ++r)
                    {
                        if (cells[c] == required[r])
                        {
                            column[r] = static_cast<int>(c);
                        }
                    }
                }
                for (std::size_t r = 0; r < required.size(); ++r)
                {
                    if (column[r] < 0)
                    {
                        throw ScenarioError(ScenarioErrorCode::field, "line " + std::to_string(line_no),
                                            "missing column '" + required[r] + "'");
                    }
                }
                width = cells.size();
                header = true;
                continue;
            }
            if (cells.size() != width)
            {
                result.errors.push_back({line_no, "expected " + std::to_string(width) + " columns, got " + std::to_string(cells.size())});
                continue;
            }
            const std::string &callsign = cells[static_cast<std::size_t>(column[0])];
            if (callsign.empty())
            {
                result.errors.push_back({line_no, "empty callsign"});
                continue;
            }
            double v[6];
            bool ok = true;
            for (std::size_t r = 1; r < required.size() && ok; ++r)
            {
                if (!parse_double(cells[static_cast<std::size_t>(column[r])], v[r - 1]))
                {
                    result.errors.push_back({line_no, "column '" + required[r] + "' is not a finite number"});
                    ok = false;
                }
            }
            if (!ok)
            {
                continue;
            }
            if (std::abs(v[1]) > 90.0 || std::abs(v[2]) > 180.0)
            {
                result.errors.push_back({line_no, "coordinates out of range"});
                continue;
            }
            rows[callsign].push_back({{v[0], {v[1], v[2]}, v[3], v[4], v[5]}, line_no});
        }
        if (!header)
        {
            throw ScenarioError(ScenarioErrorCode::field, "line 1", "missing header row");
        }

        for (auto &[callsign, list] : rows)
        {
            // Sort on every field so the surviving row of a duplicate timestamp does not depend on input order.
            std::sort(list.begin(), list.end(), [](const Row &a, const Row &b) {
                return std::tie(a.sample.t, a.sample.position.lat, a.sample.position.lon, a.sample.fl,
                                a.sample.ground_speed_kt, a.sample.heading_deg) <
                       std::tie(b.sample.t, b.sample.position.lat, b.sample.position.lon, b.sample.fl,
                                b.sample.ground_speed_kt, b.sample.heading_deg);
            });
            RecordedTrack track;
            track.callsign = callsign;
            track.plan.callsign = callsign;
            for (const Row &r : list)
            {
                if (!track.samples.empty() && r.sample.t == track.samples.back().t)
                {
                    result.errors.push_back({r.line, "duplicate timestamp " + std::to_string(r.sample.t) + " for " + callsign});
                    continue;
                }
                track.samples.push_back(r.sample);
            }
            flag_track(track);
            result.tracks.push_back(std::move(track));
        }
        std::sort(result.errors.begin(), result.errors.end(),
                  [](const ImportError &a, const ImportError &b) { return a.line < b.line; });
        return result;
    }
}
