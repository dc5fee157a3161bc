#include "atcsim/json_io.hpp"

#include "atcsim/units.hpp"

#include <cmath>
#include <fstream>

namespace atcsim
{
    using nlohmann::json;

    namespace jsonf
    {
        const json &member(const json &obj, const std::string &key, const std::string &path)
        {
            if (!obj.is_object())
            {
                throw JsonFieldError(path, "expected an object");
            }
            const auto it = obj.find(key);
            if (it == obj.end())
            {
                throw JsonFieldError(path + "/" + key, "missing field");
            }
            return *it;
        }

        double number(const json &obj, const std::string &key, const std::string &path)
        {
            const json &v = member(obj, key, path);
            if (!v.is_number())
            {
                throw JsonFieldError(path + "/" + key, "expected a number");
            }
            const double d = v.get<double>();
            if (!std::isfinite(d))
            {
                throw JsonFieldError(path + "/" + key, "not finite");
            }
            return d;
        }

        double number_or(const json &obj, const std::string &key, double fallback, const std::string &path)
        {
            if (!obj.contains(key))
            {
                return fallback;
            }
            return number(obj, key, path);
        }

        std::int64_t integer(const json &obj, const std::string &key, const std::string &path)
        {
            const json &v = member(obj, key, path);
            if (!v.is_number_integer())
            {
                throw JsonFieldError(path + "/" + key, "expected an integer");
            }
            return v.get<std::int64_t>();
        }

        std::string string(const json &obj, const std::string &key, const std::string &path)
        {
            const json &v = member(obj, key, path);
            if (!v.is_string())
            {
                throw JsonFieldError(path + "/" + key, "expected a string");
            }
            return v.get<std::string>();
        }

        const json &array(const json &obj, const std::string &key, const std::string &path)
        {
            const json &v = member(obj, key, path);
            if (!v.is_array())
            {
                throw JsonFieldError(path + "/" + key, "expected an array");
            }
            return v;
        }

        std::vector<double> numbers(const json &obj, const std::string &key, const std::string &path)
        {
            const json &arr = array(obj, key, path);
            std::vector<double> out;
            out.reserve(arr.size());
            for (std::size_t i = 0; i < arr.size(); ++i)
            {
                if (!arr[i].is_number())
                {
                    throw JsonFieldError(path + "/" + key + "/" + std::to_string(i), "expected a number");
                }
                out.push_back(arr[i].get<double>());
            }
            return out;
        }
    }

    namespace
    {
        json vec_json(const Eigen::VectorXd &v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

        Eigen::VectorXd vec_from(const std::vector<double> &v)
        {
            return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        }

        json mat_json(const Eigen::MatrixXd &m)
        {
            json rows = json::array();
            for (Eigen::Index r = 0; r < m.rows(); ++r)
            {
                rows.push_back(vec_json(m.row(r).transpose()));
            }
            return rows;
        }

        Eigen::MatrixXd mat_from(const json &rows, Eigen::Index cols, const std::string &path)
        {
            if (!rows.is_array())
            {
                throw JsonFieldError(path, "expected an array of rows");
            }
            Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
            for (std::size_t r = 0; r < rows.size(); ++r)
            {
                if (!rows[r].is_array() || static_cast<Eigen::Index>(rows[r].size()) != cols)
                {
                    throw JsonFieldError(path + "/" + std::to_string(r), "row has the wrong length");
                }
                for (Eigen::Index c = 0; c < cols; ++c)
                {
                    m(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)].get<double>();
                }
            }
            return m;
        }
    }

    json to_json(const PerfCoefficients &p)
    {
        json sched = json::array();
        for (const auto &[fl, cas] : p.base_cas_schedule)
        {
            sched.push_back({fl, cas});
        }
        return json{{"aircraft_type", p.aircraft_type},
                    {"mass_ref_kg", p.mass_ref_kg},
                    {"wing_area_m2", p.wing_area_m2},
                    {"thrust_ct1_n", p.ct1_n},
                    {"thrust_ct2_ft", p.ct2_ft},
                    {"thrust_ct3_per_ft2", p.ct3_per_ft2},
                    {"drag_cd0", p.cd0},
                    {"drag_cd2", p.cd2},
                    {"base_cas_schedule_fl_kt", sched},
                    {"base_mach", p.base_mach},
                    {"descent_thrust_factor", p.descent_thrust_factor},
                    {"sfc_proxy_kg_per_n_s", p.sfc_proxy}};
    }

    PerfCoefficients perf_from_json(const json &j, const std::string &path)
    {
        PerfCoefficients p;
        p.aircraft_type = jsonf::string(j, "aircraft_type", path);
        p.mass_ref_kg = jsonf::number(j, "mass_ref_kg", path);
        p.wing_area_m2 = jsonf::number(j, "wing_area_m2", path);
        p.ct1_n = jsonf::number(j, "thrust_ct1_n", path);
        p.ct2_ft = jsonf::number(j, "thrust_ct2_ft", path);
        p.ct3_per_ft2 = jsonf::number(j, "thrust_ct3_per_ft2", path);
        p.cd0 = jsonf::number(j, "drag_cd0", path);
        p.cd2 = jsonf::number(j, "drag_cd2", path);
        const json &sched = jsonf::array(j, "base_cas_schedule_fl_kt", path);
        for (std::size_t i = 0; i < sched.size(); ++i)
        {
            if (!sched[i].is_array() || sched[i].size() != 2)
            {
                throw JsonFieldError(path + "/base_cas_schedule_fl_kt/" + std::to_string(i), "expected [fl, cas]");
            }
            p.base_cas_schedule.emplace_back(sched[i][0].get<double>(), sched[i][1].get<double>());
        }
        p.base_mach = jsonf::number(j, "base_mach", path);
        p.descent_thrust_factor = jsonf::number(j, "descent_thrust_factor", path);
        p.sfc_proxy = jsonf::number(j, "sfc_proxy_kg_per_n_s", path);
        return p;
    }

    json to_json(const FlightPlan &p)
    {
        json j{{"callsign", p.callsign},
               {"aircraft_type", p.aircraft_type},
               {"departure", p.departure},
               {"destination", p.destination},
               {"route", p.route},
               {"requested_fl", p.requested_fl}};
        if (p.requested_cruise)
        {
            j["requested_cruise"] = {{"cas_kt", p.requested_cruise->cas_kt}, {"mach", p.requested_cruise->mach}};
        }
        return j;
    }

    FlightPlan flight_plan_from_json(const json &j, const std::string &path)
    {
        FlightPlan p;
        p.callsign = jsonf::string(j, "callsign", path);
        p.aircraft_type = jsonf::string(j, "aircraft_type", path);
        p.departure = jsonf::string(j, "departure", path);
        p.destination = jsonf::string(j, "destination", path);
        const json &route = jsonf::array(j, "route", path);
        for (std::size_t i = 0; i < route.size(); ++i)
        {
            if (!route[i].is_string())
            {
                throw JsonFieldError(path + "/route/" + std::to_string(i), "expected a waypoint ident");
            }
            p.route.push_back(route[i].get<std::string>());
        }
        if (p.route.empty())
        {
            throw JsonFieldError(path + "/route", "route needs at least one waypoint");
        }
        p.requested_fl = jsonf::number(j, "requested_fl", path);
        if (p.requested_fl < 0.0 || p.requested_fl > 600.0)
        {
            throw JsonFieldError(path + "/requested_fl", "must be in [0, 600]");
        }
        if (j.contains("requested_cruise"))
        {
            const std::string rp = path + "/requested_cruise";
            const json &rc = j["requested_cruise"];
            p.requested_cruise = CruiseSpeed{jsonf::number(rc, "cas_kt", rp), jsonf::number(rc, "mach", rp)};
        }
        return p;
    }

    json to_json(const AirspaceDefinition &a)
    {
        json sectors = json::array();
        for (const auto &s : a.sectors)
        {
            json boundary = json::array();
            for (const auto &v : s.boundary)
            {
                boundary.push_back({v.lat, v.lon});
            }
            sectors.push_back(
                {{"id", s.id}, {"floor_fl", s.floor_fl}, {"ceiling_fl", s.ceiling_fl}, {"boundary", boundary}});
        }
        json waypoints = json::array();
        for (const auto &w : a.waypoints)
        {
            waypoints.push_back({{"ident", w.ident}, {"lat", w.pos.lat}, {"lon", w.pos.lon}});
        }
        json schedule = json::array();
        for (const auto &cfg : a.bandbox_schedule)
        {
            json groups = json::array();
            for (const auto &g : cfg.groups)
            {
                groups.push_back({{"id", g.id}, {"sectors", g.sectors}});
            }
            schedule.push_back({{"active_from_s", cfg.active_from_s}, {"groups", groups}});
        }
        return json{{"airac_date", a.airac_date},
                    {"sectors", sectors},
                    {"waypoints", waypoints},
                    {"bandbox_schedule", schedule}};
    }

    AirspaceDefinition airspace_from_json(const json &j, const std::string &path)
    {
        AirspaceDefinition a;
        a.airac_date = jsonf::string(j, "airac_date", path);
        const json &sectors = jsonf::array(j, "sectors", path);
        for (std::size_t i = 0; i < sectors.size(); ++i)
        {
            const std::string sp = path + "/sectors/" + std::to_string(i);
            Sector s;
            s.id = jsonf::string(sectors[i], "id", sp);
            s.floor_fl = jsonf::number(sectors[i], "floor_fl", sp);
            s.ceiling_fl = jsonf::number(sectors[i], "ceiling_fl", sp);
            const json &b = jsonf::array(sectors[i], "boundary", sp);
            for (std::size_t k = 0; k < b.size(); ++k)
            {
                if (!b[k].is_array() || b[k].size() != 2 || !b[k][0].is_number() || !b[k][1].is_number())
                {
                    throw JsonFieldError(sp + "/boundary/" + std::to_string(k), "expected [lat, lon]");
                }
                s.boundary.push_back({b[k][0].get<double>(), b[k][1].get<double>()});
            }
            a.sectors.push_back(std::move(s));
        }
        const json &wps = jsonf::array(j, "waypoints", path);
        for (std::size_t i = 0; i < wps.size(); ++i)
        {
            const std::string wp = path + "/waypoints/" + std::to_string(i);
            a.waypoints.push_back(
                {jsonf::string(wps[i], "ident", wp), {jsonf::number(wps[i], "lat", wp), jsonf::number(wps[i], "lon", wp)}});
        }
        const json &sched = jsonf::array(j, "bandbox_schedule", path);
        for (std::size_t i = 0; i < sched.size(); ++i)
        {
            const std::string cp = path + "/bandbox_schedule/" + std::to_string(i);
            BandboxConfig cfg;
            cfg.active_from_s = jsonf::number(sched[i], "active_from_s", cp);
            const json &groups = jsonf::array(sched[i], "groups", cp);
            for (std::size_t g = 0; g < groups.size(); ++g)
            {
                const std::string gp = cp + "/groups/" + std::to_string(g);
                BandboxGroup group;
                group.id = jsonf::string(groups[g], "id", gp);
                for (const auto &sid : jsonf::array(groups[g], "sectors", gp))
                {
                    group.sectors.push_back(sid.get<std::string>());
                }
                cfg.groups.push_back(std::move(group));
            }
            a.bandbox_schedule.push_back(std::move(cfg));
        }
        return a;
    }

    json to_json(const WindGrid &g)
    {
        return json{{"valid_from_s", g.valid_from_s}, {"lat_axis", g.lat_axis}, {"lon_axis", g.lon_axis},
                    {"fl_axis", g.fl_axis},           {"u_ms", g.u},            {"v_ms", g.v}};
    }

    WindGrid wind_grid_from_json(const json &j, WindRole role, const std::string &path)
    {
        WindGrid g;
        g.role = role;
        g.valid_from_s = jsonf::number_or(j, "valid_from_s", 0.0, path);
        g.lat_axis = jsonf::numbers(j, "lat_axis", path);
        g.lon_axis = jsonf::numbers(j, "lon_axis", path);
        g.fl_axis = jsonf::numbers(j, "fl_axis", path);
        g.u = jsonf::numbers(j, "u_ms", path);
        g.v = jsonf::numbers(j, "v_ms", path);
        return g;
    }

    json to_json(const Clearance &c)
    {
        json j{{"type", clearance_name(c)}};
        std::visit(
            [&](const auto &v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, DirectTo>)
                {
                    j["waypoint"] = v.waypoint;
                }
                else if constexpr (std::is_same_v<T, FlyHeading>)
                {
                    j["heading_deg"] = v.heading_deg;
                }
                else if constexpr (std::is_same_v<T, TurnBy>)
                {
                    j["direction"] = v.direction == TurnDirection::left ? "left" : "right";
                    j["degrees"] = v.degrees;
                }
                else if constexpr (std::is_same_v<T, ClimbDescendNow>)
                {
                    j["fl"] = v.fl;
                }
                else if constexpr (std::is_same_v<T, DescendWhenReadyLevelBy> || std::is_same_v<T, DescendNowLevelBy>)
                {
                    j["fl"] = v.fl;
                    j["waypoint"] = v.waypoint;
                }
                else if constexpr (std::is_same_v<T, ChangeCas>)
                {
                    j["cas_kt"] = v.cas_kt;
                }
                else if constexpr (std::is_same_v<T, ChangeMach>)
                {
                    j["mach"] = v.mach;
                }
                else if constexpr (std::is_same_v<T, ChangeRocd>)
                {
                    j["rocd_fpm"] = v.rocd_fpm;
                }
                else if constexpr (std::is_same_v<T, ContactFrequency>)
                {
                    j["group"] = v.group_id;
                }
            },
            c);
        return j;
    }

    Clearance clearance_from_json(const json &j, const std::string &path)
    {
        const std::string type = jsonf::string(j, "type", path);
        if (type == "direct_to")
        {
            return DirectTo{jsonf::string(j, "waypoint", path)};
        }
        if (type == "fly_heading")
        {
            return FlyHeading{jsonf::number(j, "heading_deg", path)};
        }
        if (type == "turn_by")
        {
            const std::string dir = jsonf::string(j, "direction", path);
            if (dir != "left" && dir != "right")
            {
                throw JsonFieldError(path + "/direction", "expected left or right");
            }
            return TurnBy{dir == "left" ? TurnDirection::left : TurnDirection::right, jsonf::number(j, "degrees", path)};
        }
        if (type == "maintain_present_heading")
        {
            return MaintainPresentHeading{};
        }
        if (type == "climb_descend_now")
        {
            return ClimbDescendNow{jsonf::number(j, "fl", path)};
        }
        if (type == "descend_when_ready_level_by")
        {
            return DescendWhenReadyLevelBy{jsonf::number(j, "fl", path), jsonf::string(j, "waypoint", path)};
        }
        if (type == "descend_now_level_by")
        {
            return DescendNowLevelBy{jsonf::number(j, "fl", path), jsonf::string(j, "waypoint", path)};
        }
        if (type == "change_cas")
        {
            return ChangeCas{jsonf::number(j, "cas_kt", path)};
        }
        if (type == "change_mach")
        {
            return ChangeMach{jsonf::number(j, "mach", path)};
        }
        if (type == "change_rocd")
        {
            return ChangeRocd{jsonf::number(j, "rocd_fpm", path)};
        }
        if (type == "contact_frequency")
        {
            return ContactFrequency{jsonf::string(j, "group", path)};
        }
        throw JsonFieldError(path + "/type", "unknown clearance type '" + type + "'");
    }

    json to_json(const Trajectory &t)
    {
        json pts = json::array();
        for (const auto &p : t.points)
        {
            pts.push_back({p.t, p.position.lat, p.position.lon, p.fl, p.heading_deg, p.cas_kt, p.tas_kt, p.mach,
                           p.rocd_fpm, p.ground_speed_kt});
        }
        return json{{"callsign", t.callsign},
                    {"aircraft_type", t.aircraft_type},
                    {"phase", to_string(t.phase)},
                    {"cleared_fl", t.cleared_fl},
                    {"columns", {"t", "lat", "lon", "fl", "heading_deg", "cas_kt", "tas_kt", "mach", "rocd_fpm", "gs_kt"}},
                    {"points", pts}};
    }

    Trajectory trajectory_from_json(const json &j, const std::string &path)
    {
        Trajectory t;
        t.callsign = jsonf::string(j, "callsign", path);
        t.aircraft_type = jsonf::string(j, "aircraft_type", path);
        try
        {
            t.phase = phase_from_string(jsonf::string(j, "phase", path));
        }
        catch (const std::invalid_argument &e)
        {
            throw JsonFieldError(path + "/phase", e.what());
        }
        t.cleared_fl = jsonf::number(j, "cleared_fl", path);
        const json &pts = jsonf::array(j, "points", path);
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            const json &r = pts[i];
            if (!r.is_array() || r.size() != 10)
            {
                throw JsonFieldError(path + "/points/" + std::to_string(i), "expected 10 columns");
            }
            TrajectoryPoint p;
            p.t = r[0].get<double>();
            p.position = {r[1].get<double>(), r[2].get<double>()};
            p.fl = r[3].get<double>();
            p.heading_deg = r[4].get<double>();
            p.cas_kt = r[5].get<double>();
            p.tas_kt = r[6].get<double>();
            p.mach = r[7].get<double>();
            p.rocd_fpm = r[8].get<double>();
            p.ground_speed_kt = r[9].get<double>();
            t.points.push_back(p);
        }
        return t;
    }

    json to_json(const FunctionalBasis &b)
    {
        return json{{"mean_curve", vec_json(b.mean_curve)},
                    {"eigenfunctions", mat_json(b.eigenfunctions.transpose())},
                    {"eigenvalues", vec_json(b.eigenvalues)},
                    {"total_variance", b.total_variance}};
    }

    FunctionalBasis basis_from_json(const json &j, const std::string &path)
    {
        FunctionalBasis b;
        b.mean_curve = vec_from(jsonf::numbers(j, "mean_curve", path));
        b.eigenvalues = vec_from(jsonf::numbers(j, "eigenvalues", path));
        b.eigenfunctions = mat_from(jsonf::array(j, "eigenfunctions", path), b.mean_curve.size(), path + "/eigenfunctions")
                               .transpose();
        b.total_variance = jsonf::number(j, "total_variance", path);
        if (b.eigenfunctions.cols() != b.eigenvalues.size())
        {
            throw JsonFieldError(path, "eigenfunction and eigenvalue counts differ");
        }
        return b;
    }

    json to_json(const ScoreGMM &g)
    {
        json comps = json::array();
        for (std::size_t k = 0; k < g.weights.size(); ++k)
        {
            comps.push_back({{"weight", g.weights[k]}, {"mean", vec_json(g.means[k])}, {"covariance", mat_json(g.covariances[k])}});
        }
        return json{{"components", comps}};
    }

    ScoreGMM gmm_from_json(const json &j, const std::string &path)
    {
        ScoreGMM g;
        const json &comps = jsonf::array(j, "components", path);
        for (std::size_t k = 0; k < comps.size(); ++k)
        {
            const std::string cp = path + "/components/" + std::to_string(k);
            g.weights.push_back(jsonf::number(comps[k], "weight", cp));
            g.means.push_back(vec_from(jsonf::numbers(comps[k], "mean", cp)));
            g.covariances.push_back(mat_from(jsonf::array(comps[k], "covariance", cp), g.means.back().size(), cp + "/covariance"));
        }
        return g;
    }

    json to_json(const TrajectoryModel &m)
    {
        json pmf = json::array();
        for (const auto &e : m.cruise_pmf)
        {
            pmf.push_back({{"cas_kt", e.speed.cas_kt}, {"mach", e.speed.mach}, {"p", e.probability}});
        }
        return json{{"format", "atcsim-trajectory-model"},
                    {"version", 1},
                    {"aircraft_type", m.aircraft_type},
                    {"phase", to_string(m.phase)},
                    {"fl_grid", m.cas.fl_grid},
                    {"bases", {{"cas", to_json(m.cas)}, {"thrust", to_json(m.thrust)}, {"drag", to_json(m.drag)}}},
                    {"score_scale", vec_json(m.score_scale)},
                    {"score_gmm", to_json(m.score_gmm)},
                    {"cruise_pmf", pmf},
                    {"metadata",
                     {{"corpus_size", m.metadata.corpus_size},
                      {"seed", m.metadata.seed},
                      {"gmm_iterations", m.metadata.gmm_iterations},
                      {"gmm_converged", m.metadata.gmm_converged},
                      {"gmm_regularised", m.metadata.gmm_regularised}}}};
    }

    TrajectoryModel model_from_json(const json &j)
    {
        if (j.value("format", "") != "atcsim-trajectory-model")
        {
            throw JsonFieldError("/format", "not a trajectory model file");
        }
        if (j.value("version", 0) != 1)
        {
            throw JsonFieldError("/version", "unsupported model format version");
        }
        TrajectoryModel m;
        m.aircraft_type = jsonf::string(j, "aircraft_type", "");
        m.phase = phase_from_string(jsonf::string(j, "phase", ""));
        const std::vector<double> grid = jsonf::numbers(j, "fl_grid", "");
        const json &bases = jsonf::member(j, "bases", "");
        m.cas = basis_from_json(jsonf::member(bases, "cas", "/bases"), "/bases/cas");
        m.thrust = basis_from_json(jsonf::member(bases, "thrust", "/bases"), "/bases/thrust");
        m.drag = basis_from_json(jsonf::member(bases, "drag", "/bases"), "/bases/drag");
        m.cas.fl_grid = m.thrust.fl_grid = m.drag.fl_grid = grid;
        m.score_scale = vec_from(jsonf::numbers(j, "score_scale", ""));
        m.score_gmm = gmm_from_json(jsonf::member(j, "score_gmm", ""), "/score_gmm");
        for (const auto &e : jsonf::array(j, "cruise_pmf", ""))
        {
            m.cruise_pmf.push_back({{jsonf::number(e, "cas_kt", "/cruise_pmf"), jsonf::number(e, "mach", "/cruise_pmf")},
                                    jsonf::number(e, "p", "/cruise_pmf")});
        }
        const json &meta = jsonf::member(j, "metadata", "");
        m.metadata.corpus_size = static_cast<std::size_t>(jsonf::integer(meta, "corpus_size", "/metadata"));
        m.metadata.seed = meta.at("seed").get<std::uint64_t>();
        m.metadata.gmm_iterations = static_cast<int>(jsonf::integer(meta, "gmm_iterations", "/metadata"));
        m.metadata.gmm_converged = meta.value("gmm_converged", false);
        m.metadata.gmm_regularised = meta.value("gmm_regularised", false);
        return m;
    }

    json to_json(const CorrectionSample &c)
    {
        return json{{"fl_grid", c.fl_grid},
                    {"delta_cas_kt", c.delta_cas},
                    {"thrust_mult", c.thrust_mult},
                    {"drag_mult", c.drag_mult},
                    {"seed_tag", c.seed_tag}};
    }

    void save_corpus(const std::string &path, const std::vector<Trajectory> &corpus)
    {
        nlohmann::json j;
        j["schema"] = kCorpusSchema;
        j["version"] = 1;
        j["trajectories"] = nlohmann::json::array();
        for (const auto &t : corpus)
        {
            j["trajectories"].push_back(to_json(t));
        }
        std::ofstream out(path);
        if (!out)
        {
            throw std::runtime_error("cannot write " + path);
        }
        out << j.dump() << '\n';
    }

    std::vector<Trajectory> load_corpus(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw std::runtime_error("cannot open " + path);
        }
        const nlohmann::json j = nlohmann::json::parse(in);
        if (j.value("schema", std::string()) != kCorpusSchema)
        {
            throw JsonFieldError("/schema", std::string("expected '") + kCorpusSchema + "'");
        }
        std::vector<Trajectory> out;
        const auto &list = jsonf::array(j, "trajectories", "");
        for (std::size_t i = 0; i < list.size(); ++i)
        {
            out.push_back(trajectory_from_json(list[i], "/trajectories/" + std::to_string(i)));
        }
        return out;
    }
}
