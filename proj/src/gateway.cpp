#include "atcsim/gateway.hpp"

#include "atcsim/json_io.hpp"
#include "atcsim/units.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace atcsim
{
    namespace
    {
        using OJson = nlohmann::ordered_json;

        const std::set<std::string> kMetricEventTypes{"los_open", "los_close", "coordination", "quarantine", "metrics"};

        nlohmann::json plain(const OJson &j) { return nlohmann::json::parse(j.dump()); }

        OJson issue_json(const IssueResult &r)
        {
            OJson j;
            j["accepted"] = r.accepted;
            if (!r.accepted)
            {
                j["reason"] = r.reason;
            }
            else
            {
                j["seq"] = r.seq;
                j["execute_at"] = r.execute_at;
            }
            return j;
        }

        bool contains(const std::vector<std::string> &v, const std::string &x)
        {
            return std::find(v.begin(), v.end(), x) != v.end();
        }
    }

    std::string to_string(SessionRole r)
    {
        switch (r)
        {
        case SessionRole::agent:
            return "agent";
        case SessionRole::controller:
            return "controller";
        case SessionRole::observer:
            return "observer";
        }
        return "observer";
    }

    SessionRole session_role_from_string(const std::string &s)
    {
        if (s == "agent")
        {
            return SessionRole::agent;
        }
        if (s == "controller")
        {
            return SessionRole::controller;
        }
        if (s == "observer")
        {
            return SessionRole::observer;
        }
        throw std::invalid_argument("unknown session role '" + s + "'");
    }

    GatewayConfig gateway_config_from_json(const nlohmann::json &j)
    {
        if (!j.is_object())
        {
            throw std::invalid_argument("gateway config must be an object");
        }
        GatewayConfig c;
        c.bind_address = j.value("bind", c.bind_address);
        c.port = j.value("port", c.port);
        c.scenario_dir = j.value("scenario_dir", c.scenario_dir);
        const std::string pacing = j.value("pacing", std::string("lockstep"));
        if (pacing == "lockstep")
        {
            c.pacing = Pacing::lockstep;
        }
        else if (pacing == "free_running")
        {
            c.pacing = Pacing::free_running;
        }
        else
        {
            throw std::invalid_argument("pacing must be lockstep or free_running");
        }
        c.speed_factor = j.value("speed_factor", c.speed_factor);
        c.area_buffer_nmi = j.value("area_buffer_nmi", c.area_buffer_nmi);
        c.intent_cap_bytes = j.value("intent_cap_bytes", c.intent_cap_bytes);
        c.max_ticks_per_step = j.value("max_ticks_per_step", c.max_ticks_per_step);
        c.anonymous_observers = j.value("anonymous_observers", c.anonymous_observers);
        if (c.port < 0 || c.port > 65535 || !(c.speed_factor > 0.0) || c.area_buffer_nmi < 0.0 ||
            c.max_ticks_per_step < 1)
        {
            throw std::invalid_argument("gateway config value out of range");
        }
        if (const auto it = j.find("sessions"); it != j.end())
        {
            std::set<std::string> names;
            for (const auto &s : *it)
            {
                SessionGrant g;
                g.name = s.at("name").get<std::string>();
                g.role = session_role_from_string(s.value("role", std::string("observer")));
                g.groups = s.value("groups", std::vector<std::string>{});
                g.takeover = s.value("takeover", g.role == SessionRole::controller);
                if (!names.insert(g.name).second)
                {
                    throw std::invalid_argument("duplicate session name '" + g.name + "'");
                }
                c.sessions.push_back(std::move(g));
            }
        }
        if (const auto it = j.find("world"); it != j.end())
        {
            c.world = world_config_from_json(*it);
        }
        return c;
    }

    nlohmann::json to_json(const GatewayConfig &c)
    {
        nlohmann::json j;
        j["bind"] = c.bind_address;
        j["port"] = c.port;
        j["scenario_dir"] = c.scenario_dir;
        j["pacing"] = c.pacing == Pacing::lockstep ? "lockstep" : "free_running";
        j["speed_factor"] = c.speed_factor;
        j["area_buffer_nmi"] = c.area_buffer_nmi;
        j["intent_cap_bytes"] = c.intent_cap_bytes;
        j["max_ticks_per_step"] = c.max_ticks_per_step;
        j["anonymous_observers"] = c.anonymous_observers;
        j["sessions"] = nlohmann::json::array();
        for (const auto &s : c.sessions)
        {
            j["sessions"].push_back(
                {{"name", s.name}, {"role", to_string(s.role)}, {"groups", s.groups}, {"takeover", s.takeover}});
        }
        j["world"] = to_json(c.world);
        return j;
    }

    GatewayConfig load_gateway_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw std::runtime_error("cannot open gateway config " + path);
        }
        return gateway_config_from_json(nlohmann::json::parse(in));
    }

    GatewayConfig gateway_config_from_environment()
    {
        const char *path = std::getenv(kConfigEnv);
        if (path == nullptr || *path == '\0')
        {
            return {};
        }
        return load_gateway_config(path);
    }

    bool AreaOfInterest::contains(const AircraftState &s) const
    {
        if (everything)
        {
            return true;
        }
        if (atcsim::contains(groups, s.controlling_group) || atcsim::contains(groups, s.comms_group))
        {
            return true;
        }
        return s.position.lat >= lat_min && s.position.lat <= lat_max && s.position.lon >= lon_min &&
               s.position.lon <= lon_max;
    }

    AreaOfInterest area_of_interest(const AirspaceDefinition &airspace, const BandboxConfig &bandbox,
                                    const std::vector<std::string> &groups, double buffer_nmi)
    {
        AreaOfInterest a;
        if (groups.empty())
        {
            return a;
        }
        a.everything = false;
        a.groups = groups;
        a.lat_min = a.lon_min = std::numeric_limits<double>::infinity();
        a.lat_max = a.lon_max = -std::numeric_limits<double>::infinity();
        auto add_sector = [&](const Sector *s) {
            if (s == nullptr)
            {
                return;
            }
            for (const auto &p : s->boundary)
            {
                a.lat_min = std::min(a.lat_min, p.lat);
                a.lat_max = std::max(a.lat_max, p.lat);
                a.lon_min = std::min(a.lon_min, p.lon);
                a.lon_max = std::max(a.lon_max, p.lon);
            }
        };
        for (const auto &g : groups)
        {
            if (const auto *group = bandbox.find_group(g))
            {
                for (const auto &id : group->sectors)
                {
                    add_sector(airspace.find_sector(id));
                }
            }
            else
            {
                add_sector(airspace.find_sector(g));
            }
        }
        if (a.lat_min > a.lat_max)
        {
            // No known sector: only aircraft of the named groups are visible.
            a.lat_min = a.lon_min = 1.0;
            a.lat_max = a.lon_max = -1.0;
            return a;
        }
        const double dlat = buffer_nmi / 60.0;
        const double max_abs_lat = std::min(89.0, std::max(std::abs(a.lat_min), std::abs(a.lat_max)) + dlat);
        const double dlon = buffer_nmi / (60.0 * std::cos(max_abs_lat * kDegToRad));
        a.lat_min -= dlat;
        a.lat_max += dlat;
        a.lon_min -= dlon;
        a.lon_max += dlon;
        return a;
    }

    OJson make_observation(const World &world, const ObservationContext &ctx)
    {
        const double t = world.time();
        OJson obs;
        obs["t"] = t;
        obs["tick"] = world.tick_index();
        obs["done"] = world.done();
        OJson aircraft = OJson::array();
        OJson wind = OJson::array();
        for (const auto &[cs, a] : world.aircraft())
        {
            const AircraftState &s = a.state;
            if (ctx.area != nullptr && !ctx.area->contains(s))
            {
                continue;
            }
            OJson r;
            r["callsign"] = cs;
            r["lat"] = s.position.lat;
            r["lon"] = s.position.lon;
            r["fl"] = s.fl;
            r["heading_deg"] = s.heading_deg;
            r["ground_speed_kt"] = s.ground_speed_kt;
            r["track_deg"] = s.track_deg;
            if (s.selected_fl)
            {
                r["selected_fl"] = *s.selected_fl;
            }
            r["plan"] = {{"aircraft_type", s.plan.aircraft_type},
                         {"departure", s.plan.departure},
                         {"destination", s.plan.destination},
                         {"route", s.plan.route},
                         {"requested_fl", s.plan.requested_fl}};
            r["controlling_group"] = s.controlling_group;
            r["comms_group"] = s.comms_group;
            r["source"] = to_string(s.source);
            if (ctx.controllers != nullptr)
            {
                if (const auto it = ctx.controllers->find(cs); it != ctx.controllers->end())
                {
                    r["controlled_by"] = it->second;
                }
            }
            aircraft.push_back(std::move(r));

            const WindVector w = world.forecast_wind().at(s.position.lat, s.position.lon, s.fl, t);
            wind.push_back({{"callsign", cs}, {"u_ms", w.u}, {"v_ms", w.v}});
        }
        obs["aircraft"] = std::move(aircraft);
        obs["wind"] = {{"role", "forecast"}, {"samples", std::move(wind)}};

        OJson coordinations = OJson::array();
        for (const auto &c : world.coordinations())
        {
            if (ctx.area != nullptr && !ctx.area->everything && !contains(ctx.area->groups, c.spec.from_group) &&
                !contains(ctx.area->groups, c.spec.to_group))
            {
                continue;
            }
            OJson r;
            r["callsign"] = c.spec.callsign;
            r["from_group"] = c.spec.from_group;
            r["to_group"] = c.spec.to_group;
            r["transfer_fl"] = c.spec.transfer_fl;
            if (c.spec.transfer_point)
            {
                r["transfer_point"] = *c.spec.transfer_point;
            }
            r["estimate_s"] = c.spec.estimate_s;
            r["status"] = to_string(c.status);
            coordinations.push_back(std::move(r));
        }
        obs["coordinations"] = std::move(coordinations);

        const MetricsReport &m = world.report();
        int clearances = 0;
        for (const auto &[k, n] : m.clearance_count)
        {
            clearances += n;
        }
        obs["metrics"] = {{"los_open", world.separation().open_events().size()},
                          {"los_closed", world.separation().closed_events().size()},
                          {"min_assured_margin", m.min_assured_margin},
                          {"reward", world.last_reward()},
                          {"clearances", clearances},
                          {"coordinations_satisfied", m.coordinations_satisfied},
                          {"coordinations_violated", m.coordinations_violated}};

        if (ctx.intents != nullptr)
        {
            OJson intents = OJson::object();
            for (const auto &[cs, in] : *ctx.intents)
            {
                const auto *a = world.find(cs);
                if (a != nullptr && (ctx.area == nullptr || ctx.area->contains(a->state)))
                {
                    intents[cs] = {{"session", in.session}, {"t", in.t}, {"intent", in.payload}};
                }
            }
            obs["intents"] = std::move(intents);
        }
        return obs;
    }

    Gateway::Gateway(GatewayConfig config, ModelLibrary models)
        : m_config(std::move(config)), m_models(std::move(models))
    {
    }

    Gateway::~Gateway() { stop(); }

    std::uint64_t Gateway::connect(Sink sink)
    {
        std::lock_guard lock(m_mutex);
        const std::uint64_t id = m_next_connection++;
        m_connections[id].sink = std::move(sink);
        return id;
    }

    void Gateway::disconnect(std::uint64_t connection)
    {
        std::lock_guard lock(m_mutex);
        const auto it = m_connections.find(connection);
        if (it == m_connections.end())
        {
            return;
        }
        if (it->second.session)
        {
            const std::string id = it->second.session->id;
            std::erase_if(m_taken, [&](const auto &kv) { return kv.second == id; });
            std::erase_if(m_intents, [&](const auto &kv) { return kv.second.session == id; });
        }
        m_connections.erase(it);
    }

    void Gateway::send(std::uint64_t connection, Message m)
    {
        const auto it = m_connections.find(connection);
        if (it == m_connections.end())
        {
            return;
        }
        m.v = kProtocolVersion;
        m.seq = ++it->second.out_seq;
        if (it->second.session)
        {
            m.session = it->second.session->id;
        }
        it->second.sink(m);
    }

    void Gateway::reply(std::uint64_t connection, const Message &request, const std::string &type, OJson payload)
    {
        Message m;
        m.re = request.seq;
        m.type = type;
        m.payload = std::move(payload);
        send(connection, std::move(m));
    }

    void Gateway::fail(std::uint64_t connection, const Message &request, const std::string &code,
                       const std::string &text)
    {
        send(connection, error_message(code, text, request.seq));
    }

    void Gateway::framing_error(std::uint64_t connection, const std::string &text)
    {
        std::lock_guard lock(m_mutex);
        send(connection, error_message("E_MALFORMED", text));
    }

    void Gateway::handle(std::uint64_t connection, const std::string &body)
    {
        std::unique_lock lock(m_mutex);
        const auto it = m_connections.find(connection);
        if (it == m_connections.end())
        {
            return;
        }
        Message m;
        try
        {
            m = decode_body(body);
        }
        catch (const ProtocolError &e)
        {
            send(connection, error_message(e.code(), e.what()));
            return;
        }
        Connection &conn = it->second;
        if (conn.last_in_seq && m.seq <= *conn.last_in_seq)
        {
            fail(connection, m, "E_SEQUENCE",
                 "sequence " + std::to_string(m.seq) + " not above " + std::to_string(*conn.last_in_seq));
            return;
        }
        conn.last_in_seq = m.seq;
        if (m.v != kProtocolVersion)
        {
            fail(connection, m, "E_VERSION",
                 "protocol version " + std::to_string(m.v) + " not supported (server speaks " +
                     std::to_string(kProtocolVersion) + ")");
            return;
        }
        if (m.type == "hello")
        {
            on_hello(connection, m);
            return;
        }
        if (!conn.session)
        {
            fail(connection, m, "E_NO_SESSION", "hello required before '" + m.type + "'");
            return;
        }
        if (m.session != conn.session->id)
        {
            fail(connection, m, "E_SESSION", "message session '" + m.session + "' does not match this connection");
            return;
        }
        // Copy: the connection may go away while a free-running request waits for a tick.
        Session s = *conn.session;
        try
        {
            if (m.type == "reset")
            {
                on_reset(connection, s, m, lock);
            }
            else if (m.type == "step")
            {
                on_step(connection, s, m, lock);
            }
            else if (m.type == "action")
            {
                on_action(connection, s, m, lock);
            }
            else if (m.type == "takeover")
            {
                on_takeover(connection, s, m);
            }
            else if (m.type == "intent")
            {
                on_intent(connection, s, m);
            }
            else if (m.type == "snapshot")
            {
                if (!m_world)
                {
                    fail(connection, m, "E_NO_WORLD", "no scenario loaded");
                    return;
                }
                reply(connection, m, "snapshot", {{"observation", observation_for(s)}});
            }
            else if (m.type == "log")
            {
                if (!m_world)
                {
                    fail(connection, m, "E_NO_WORLD", "no scenario loaded");
                    return;
                }
                reply(connection, m, "log", {{"jsonl", m_world->log().to_jsonl()}});
            }
            else if (m.type == "bye")
            {
                reply(connection, m, "bye", OJson::object());
            }
            else
            {
                fail(connection, m, "E_UNKNOWN_TYPE", "unknown message type '" + m.type + "'");
            }
        }
        catch (const nlohmann::json::exception &e)
        {
            fail(connection, m, "E_MALFORMED", e.what());
        }
        catch (const JsonFieldError &e)
        {
            fail(connection, m, "E_MALFORMED", e.what());
        }
    }

    void Gateway::on_hello(std::uint64_t c, const Message &m)
    {
        Connection &conn = m_connections.at(c);
        if (conn.session)
        {
            fail(c, m, "E_STATE", "session already established");
            return;
        }
        const int version = m.payload.value("version", kProtocolVersion);
        if (version != kProtocolVersion)
        {
            fail(c, m, "E_VERSION",
                 "protocol version " + std::to_string(version) + " not supported (server speaks " +
                     std::to_string(kProtocolVersion) + ")");
            return;
        }
        const std::string name = m.payload.value("name", std::string());
        SessionGrant grant;
        const auto g = std::find_if(m_config.sessions.begin(), m_config.sessions.end(),
                                    [&](const SessionGrant &x) { return x.name == name; });
        if (g != m_config.sessions.end())
        {
            grant = *g;
        }
        else if (m_config.anonymous_observers)
        {
            grant.name = name.empty() ? "anonymous" : name;
        }
        else
        {
            fail(c, m, "E_PERMISSION", "no session named '" + name + "' in the gateway config");
            return;
        }
        Session s;
        s.id = "s" + std::to_string(m_next_session++);
        s.grant = grant;
        s.subscribe = m.payload.value("subscribe", grant.role != SessionRole::agent);
        conn.session = s;

        OJson p;
        p["session"] = s.id;
        p["name"] = grant.name;
        p["role"] = to_string(grant.role);
        p["groups"] = grant.groups;
        p["takeover"] = grant.takeover;
        p["pacing"] = m_config.pacing == Pacing::lockstep ? "lockstep" : "free_running";
        p["protocol"] = kProtocolVersion;
        p["tick_s"] = m_config.world.tick_s;
        reply(c, m, "hello", std::move(p));
    }

    void Gateway::on_reset(std::uint64_t c, Session &s, const Message &m, std::unique_lock<std::mutex> &)
    {
        if (s.grant.role == SessionRole::observer)
        {
            fail(c, m, "E_PERMISSION", "observers cannot reset the world");
            return;
        }
        const auto ref = m.payload.find("scenario");
        if (ref == m.payload.end())
        {
            fail(c, m, "E_MALFORMED", "reset needs a scenario");
            return;
        }
        ScenarioSpec spec;
        std::string base_dir = m_config.scenario_dir;
        try
        {
            if (ref->is_string())
            {
                const std::filesystem::path path =
                    std::filesystem::path(m_config.scenario_dir) / ref->get<std::string>();
                spec = load_scenario(path.string());
                base_dir = path.parent_path().string();
            }
            else if (ref->is_object())
            {
                spec = parse_scenario(ref->dump(), m_config.scenario_dir);
            }
            else
            {
                fail(c, m, "E_MALFORMED", "scenario must be a file name or an inline object");
                return;
            }
            if (const auto seed = m.payload.find("seed"); seed != m.payload.end())
            {
                spec.seed = seed->get<std::uint64_t>();
            }
            ModelLibrary models = spec.models.empty() ? m_models : load_models(spec, base_dir);
            auto world = std::make_unique<World>(std::move(spec), std::move(models), m_config.world);
            m_world = std::move(world);
        }
        catch (const ScenarioError &e)
        {
            fail(c, m, to_string(e.code()), e.what());
            return;
        }
        catch (const std::exception &e)
        {
            fail(c, m, "E_RESET", e.what());
            return;
        }
        ++m_world_generation;
        m_taken.clear();
        m_intents.clear();
        for (auto &cmd : m_queue)
        {
            cmd.done->set_value(IssueResult{false, "world reset", 0.0, 0});
        }
        m_queue.clear();
        m_ticked.notify_all();
        m_wake.notify_all();

        reply(c, m, "reset", {{"observation", observation_for(s)}});
        for (const auto &[id, conn] : m_connections)
        {
            if (id != c && conn.session && conn.session->subscribe)
            {
                Message snap;
                snap.type = "snapshot";
                snap.payload["observation"] = observation_for(*conn.session);
                send(id, std::move(snap));
            }
        }
    }

    std::optional<std::string> Gateway::controller_of(const std::string &callsign) const
    {
        if (const auto it = m_taken.find(callsign); it != m_taken.end())
        {
            return it->second;
        }
        const auto *a = m_world ? m_world->find(callsign) : nullptr;
        if (a == nullptr)
        {
            return std::nullopt;
        }
        std::optional<std::pair<std::uint64_t, std::string>> best;
        for (const auto &[id, conn] : m_connections)
        {
            if (!conn.session || conn.session->grant.role == SessionRole::observer)
            {
                continue;
            }
            const auto &groups = conn.session->grant.groups;
            if (!groups.empty() && !contains(groups, a->state.controlling_group))
            {
                continue;
            }
            const std::uint64_t n = std::stoull(conn.session->id.substr(1));
            if (!best || n < best->first)
            {
                best = std::make_pair(n, conn.session->id);
            }
        }
        if (best)
        {
            return best->second;
        }
        return std::nullopt;
    }

    std::map<std::string, std::string> Gateway::controllers() const
    {
        std::map<std::string, std::string> out;
        if (!m_world)
        {
            return out;
        }
        for (const auto &[cs, a] : m_world->aircraft())
        {
            if (auto c = controller_of(cs))
            {
                out[cs] = *c;
            }
        }
        return out;
    }

    std::string Gateway::control_check(const Session &s, const std::string &callsign) const
    {
        if (s.grant.role == SessionRole::observer)
        {
            return "observers issue nothing";
        }
        if (m_world == nullptr || m_world->find(callsign) == nullptr)
        {
            return "unknown callsign";
        }
        const auto owner = controller_of(callsign);
        if (owner && *owner == s.id)
        {
            return {};
        }
        const auto taken = m_taken.find(callsign);
        if (taken != m_taken.end())
        {
            return "control lost";
        }
        return "not controlling " + callsign;
    }

    IssueResult Gateway::apply(const std::string &session, const std::string &callsign, const Clearance &c)
    {
        for (const auto &[id, conn] : m_connections)
        {
            if (conn.session && conn.session->id == session)
            {
                const std::string reason = control_check(*conn.session, callsign);
                if (!reason.empty())
                {
                    return IssueResult{false, reason, 0.0, 0};
                }
                return m_world->issue_clearance(callsign, c, conn.session->grant.name);
            }
        }
        return IssueResult{false, "session closed", 0.0, 0};
    }

    void Gateway::on_step(std::uint64_t c, Session &s, const Message &m, std::unique_lock<std::mutex> &lock)
    {
        if (s.grant.role == SessionRole::observer)
        {
            fail(c, m, "E_PERMISSION", "observers cannot step");
            return;
        }
        if (!m_world)
        {
            fail(c, m, "E_NO_WORLD", "no scenario loaded");
            return;
        }
        const int n_ticks = m.payload.value("n_ticks", 1);
        if (n_ticks < 1 || n_ticks > m_config.max_ticks_per_step)
        {
            fail(c, m, "E_MALFORMED", "n_ticks must be in [1, " + std::to_string(m_config.max_ticks_per_step) + "]");
            return;
        }
        const std::uint64_t generation = m_world_generation;
        const std::size_t first_record = m_world->log().records().size();
        const std::int64_t start_tick = m_world->tick_index();
        const bool queued = m_config.pacing == Pacing::free_running && m_running;

        OJson results = OJson::array();
        std::vector<std::pair<std::size_t, std::shared_ptr<std::promise<IssueResult>>>> pending;
        if (const auto actions = m.payload.find("actions"); actions != m.payload.end())
        {
            if (!actions->is_array())
            {
                fail(c, m, "E_MALFORMED", "actions must be an array");
                return;
            }
            for (std::size_t i = 0; i < actions->size(); ++i)
            {
                const auto &a = (*actions)[i];
                OJson r;
                r["index"] = i;
                std::string callsign;
                std::optional<Clearance> clearance;
                try
                {
                    callsign = a.at("callsign").get<std::string>();
                    clearance = clearance_from_json(plain(a.at("clearance")), "/actions/" + std::to_string(i));
                }
                catch (const std::exception &e)
                {
                    r["accepted"] = false;
                    r["reason"] = std::string("malformed action: ") + e.what();
                    results.push_back(std::move(r));
                    continue;
                }
                r["callsign"] = callsign;
                if (queued)
                {
                    auto done = std::make_shared<std::promise<IssueResult>>();
                    m_queue.push_back({s.id, callsign, *clearance, done});
                    pending.emplace_back(results.size(), done);
                }
                else
                {
                    r.update(issue_json(apply(s.id, callsign, *clearance)));
                }
                results.push_back(std::move(r));
            }
        }

        if (queued)
        {
            const std::int64_t target = start_tick + n_ticks;
            m_ticked.wait(lock, [&] {
                return m_world_generation != generation || !m_world || m_world->done() || !m_running ||
                       m_world->tick_index() >= target;
            });
            if (m_world_generation != generation || !m_world)
            {
                fail(c, m, "E_RESET", "world was reset during the step");
                return;
            }
            for (auto &[index, done] : pending)
            {
                auto f = done->get_future();
                if (f.wait_for(std::chrono::seconds(0)) == std::future_status::ready)
                {
                    results[index].update(issue_json(f.get()));
                }
                else
                {
                    results[index]["accepted"] = false;
                    results[index]["reason"] = "clock stopped";
                }
            }
        }
        else
        {
            for (int k = 0; k < n_ticks && !m_world->done(); ++k)
            {
                tick_locked();
            }
        }

        double reward = 0.0;
        const auto &trace = m_world->report().reward_trace;
        for (std::int64_t k = start_tick; k < m_world->tick_index() && k < static_cast<std::int64_t>(trace.size()); ++k)
        {
            reward += trace[static_cast<std::size_t>(k)];
        }
        OJson events = OJson::array();
        const auto &records = m_world->log().records();
        for (std::size_t k = first_record; k < records.size(); ++k)
        {
            if (kMetricEventTypes.count(records[k]["type"].get<std::string>()) != 0)
            {
                events.push_back(records[k]);
            }
        }
        OJson p;
        p["observation"] = observation_for(s);
        p["reward"] = reward;
        p["done"] = m_world->done();
        p["info"] = {{"ticks", m_world->tick_index() - start_tick}, {"actions", std::move(results)},
                     {"events", std::move(events)}};
        reply(c, m, "step", std::move(p));
    }

    void Gateway::on_action(std::uint64_t c, Session &s, const Message &m, std::unique_lock<std::mutex> &lock)
    {
        if (s.grant.role == SessionRole::observer)
        {
            fail(c, m, "E_PERMISSION", "observers issue nothing");
            return;
        }
        if (!m_world)
        {
            fail(c, m, "E_NO_WORLD", "no scenario loaded");
            return;
        }
        const std::string callsign = m.payload.at("callsign").get<std::string>();
        Clearance clearance;
        try
        {
            clearance = clearance_from_json(plain(m.payload.at("clearance")), "/clearance");
        }
        catch (const std::exception &e)
        {
            fail(c, m, "E_MALFORMED", e.what());
            return;
        }
        IssueResult result;
        if (m_config.pacing == Pacing::free_running && m_running)
        {
            auto done = std::make_shared<std::promise<IssueResult>>();
            auto f = done->get_future();
            m_queue.push_back({s.id, callsign, clearance, done});
            m_ticked.wait(lock, [&] {
                return f.wait_for(std::chrono::seconds(0)) == std::future_status::ready || !m_running;
            });
            if (f.wait_for(std::chrono::seconds(0)) != std::future_status::ready)
            {
                fail(c, m, "E_STATE", "clock stopped before the action was applied");
                return;
            }
            result = f.get();
        }
        else
        {
            result = apply(s.id, callsign, clearance);
        }
        OJson p;
        p["callsign"] = callsign;
        p.update(issue_json(result));
        reply(c, m, "action", std::move(p));
    }

    void Gateway::on_takeover(std::uint64_t c, Session &s, const Message &m)
    {
        if (s.grant.role != SessionRole::controller || !s.grant.takeover)
        {
            fail(c, m, "E_PERMISSION", "session has no takeover rights");
            return;
        }
        if (!m_world)
        {
            fail(c, m, "E_NO_WORLD", "no scenario loaded");
            return;
        }
        const std::string callsign = m.payload.at("callsign").get<std::string>();
        const auto *a = m_world->find(callsign);
        if (a == nullptr)
        {
            fail(c, m, "E_UNKNOWN_CALLSIGN", "no aircraft '" + callsign + "'");
            return;
        }
        if (!s.grant.groups.empty() && !contains(s.grant.groups, a->state.controlling_group))
        {
            fail(c, m, "E_PERMISSION", callsign + " is not in this session's groups");
            return;
        }
        if (const auto it = m_taken.find(callsign); it != m_taken.end() && it->second != s.id)
        {
            fail(c, m, "E_CONTESTED", callsign + " already taken over by " + it->second);
            return;
        }
        const auto previous = controller_of(callsign);
        m_taken[callsign] = s.id;
        if (previous && *previous == s.id)
        {
            reply(c, m, "takeover", {{"callsign", callsign}, {"previous", nullptr}});
            return;
        }
        OJson audit;
        audit["callsign"] = callsign;
        audit["session"] = s.id;
        audit["session_name"] = s.grant.name;
        audit["previous"] = previous ? OJson(*previous) : OJson(nullptr);
        m_world->annotate("takeover", std::move(audit));
        if (previous)
        {
            for (const auto &[id, conn] : m_connections)
            {
                if (conn.session && conn.session->id == *previous)
                {
                    Message note;
                    note.type = "takeover";
                    note.payload = {{"callsign", callsign}, {"by", s.id}, {"lost", true}};
                    send(id, std::move(note));
                }
            }
        }
        reply(c, m, "takeover", {{"callsign", callsign}, {"previous", previous ? OJson(*previous) : OJson(nullptr)}});
    }

    void Gateway::on_intent(std::uint64_t c, Session &s, const Message &m)
    {
        if (!m_world)
        {
            fail(c, m, "E_NO_WORLD", "no scenario loaded");
            return;
        }
        const std::string callsign = m.payload.at("callsign").get<std::string>();
        const std::string reason = control_check(s, callsign);
        if (!reason.empty())
        {
            fail(c, m, "E_PERMISSION", "intent rejected: " + reason);
            return;
        }
        const auto intent = m.payload.find("intent");
        if (intent == m.payload.end())
        {
            fail(c, m, "E_MALFORMED", "intent payload missing");
            return;
        }
        const std::size_t size = intent->dump().size();
        if (size > m_config.intent_cap_bytes)
        {
            fail(c, m, "E_INTENT_TOO_LARGE",
                 "intent of " + std::to_string(size) + " bytes exceeds the cap of " +
                     std::to_string(m_config.intent_cap_bytes));
            return;
        }
        m_intents[callsign] = PublishedIntent{s.id, m_world->time(), *intent};
        reply(c, m, "intent", {{"callsign", callsign}, {"accepted", true}});
    }

    OJson Gateway::observation_for(const Session &s) const
    {
        const AreaOfInterest area = area_of_interest(m_world->scenario().airspace, m_world->active_bandbox(),
                                                     s.grant.groups, m_config.area_buffer_nmi);
        const auto ctl = controllers();
        ObservationContext ctx;
        ctx.area = &area;
        ctx.controllers = &ctl;
        // Published intents go to humans and observers; agents see only their own commands.
        if (s.grant.role != SessionRole::agent)
        {
            ctx.intents = &m_intents;
        }
        return make_observation(*m_world, ctx);
    }

    void Gateway::tick_locked()
    {
        const std::size_t first = m_world->log().records().size();
        std::vector<Command> queue;
        queue.swap(m_queue);
        for (auto &cmd : queue)
        {
            cmd.done->set_value(apply(cmd.session, cmd.callsign, cmd.clearance));
        }
        m_world->tick();
        if (m_world->done())
        {
            m_world->finish();
        }
        m_ticked.notify_all();
        broadcast_tick(first);
    }

    void Gateway::broadcast_tick(std::uint64_t first_record)
    {
        const auto &records = m_world->log().records();
        for (const auto &[id, conn] : m_connections)
        {
            if (!conn.session || !conn.session->subscribe)
            {
                continue;
            }
            for (std::size_t k = first_record; k < records.size(); ++k)
            {
                if (kMetricEventTypes.count(records[k]["type"].get<std::string>()) != 0)
                {
                    Message e;
                    e.type = "metric-event";
                    e.payload["event"] = records[k];
                    send(id, std::move(e));
                }
            }
            Message snap;
            snap.type = "snapshot";
            snap.payload["observation"] = observation_for(*conn.session);
            send(id, std::move(snap));
        }
    }

    void Gateway::start()
    {
        std::lock_guard lock(m_mutex);
        if (m_config.pacing != Pacing::free_running || m_running)
        {
            return;
        }
        m_running = true;
        m_clock = std::thread([this] { clock_loop(); });
    }

    void Gateway::stop()
    {
        {
            std::lock_guard lock(m_mutex);
            if (!m_running)
            {
                return;
            }
            m_running = false;
            m_wake.notify_all();
            m_ticked.notify_all();
        }
        if (m_clock.joinable())
        {
            m_clock.join();
        }
    }

    void Gateway::clock_loop()
    {
        using clock = std::chrono::steady_clock;
        std::unique_lock lock(m_mutex);
        std::uint64_t generation = std::numeric_limits<std::uint64_t>::max();
        clock::time_point origin;
        std::int64_t origin_tick = 0;
        while (m_running)
        {
            if (!m_world || m_world->finished())
            {
                m_wake.wait_for(lock, std::chrono::milliseconds(50));
                continue;
            }
            if (generation != m_world_generation)
            {
                generation = m_world_generation;
                origin = clock::now();
                origin_tick = m_world->tick_index();
            }
            const double ahead_s =
                static_cast<double>(m_world->tick_index() + 1 - origin_tick) * m_config.world.tick_s / m_config.speed_factor;
            const auto deadline =
                origin + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(ahead_s));
            if (m_wake.wait_until(lock, deadline, [&] { return !m_running || generation != m_world_generation; }))
            {
                continue;
            }
            tick_locked();
        }
    }

    bool Gateway::has_world() const
    {
        std::lock_guard lock(m_mutex);
        return m_world != nullptr;
    }

    std::int64_t Gateway::tick_index() const
    {
        std::lock_guard lock(m_mutex);
        return m_world ? m_world->tick_index() : 0;
    }

    bool Gateway::world_done() const
    {
        std::lock_guard lock(m_mutex);
        return m_world && m_world->done();
    }

    std::string Gateway::log_jsonl() const
    {
        std::lock_guard lock(m_mutex);
        return m_world ? m_world->log().to_jsonl() : std::string();
    }

    std::uint64_t Gateway::state_hash() const
    {
        std::lock_guard lock(m_mutex);
        return m_world ? m_world->state_hash() : 0;
    }

    void Gateway::inspect(const std::function<void(const World &)> &f) const
    {
        std::lock_guard lock(m_mutex);
        if (m_world)
        {
            f(*m_world);
        }
    }
}
