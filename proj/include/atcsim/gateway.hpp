#pragma once

#include "atcsim/protocol.hpp"
#include "atcsim/world.hpp"

#include <condition_variable>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace atcsim
{
    enum class SessionRole
    {
        agent,
        controller,
        observer,
    };

    std::string to_string(SessionRole r);
    SessionRole session_role_from_string(const std::string &s);

    enum class Pacing
    {
        /// The world advances only on step requests.
        lockstep,
        /// The world is paced by speed_factor; actions apply at the next tick boundary.
        free_running,
    };

    struct SessionGrant
    {
        std::string name;
        SessionRole role = SessionRole::observer;
        /// Groups the session controls and observes; empty means the whole airspace.
        std::vector<std::string> groups;
        bool takeover = false;
    };

    inline constexpr const char *kConfigEnv = "ATCSIM_CONFIG";

    struct GatewayConfig
    {
        std::string bind_address = "127.0.0.1";
        int port = 7400;
        std::string scenario_dir = ".";
        Pacing pacing = Pacing::lockstep;
        double speed_factor = 1.0;
        double area_buffer_nmi = 20.0;
        std::size_t intent_cap_bytes = 64 * 1024;
        int max_ticks_per_step = 100000;
        /// Unknown hello names are admitted as whole-airspace observers when true.
        bool anonymous_observers = true;
        std::vector<SessionGrant> sessions;
        WorldConfig world;
    };

    GatewayConfig gateway_config_from_json(const nlohmann::json &j);
    nlohmann::json to_json(const GatewayConfig &c);
    GatewayConfig load_gateway_config(const std::string &path);
    /// Reads the file named by ATCSIM_CONFIG, or returns the defaults when unset.
    GatewayConfig gateway_config_from_environment();

    /// Lateral box around a session's sectors, plus the groups it controls.
    struct AreaOfInterest
    {
        bool everything = true;
        double lat_min = 0.0;
        double lat_max = 0.0;
        double lon_min = 0.0;
        double lon_max = 0.0;
        std::vector<std::string> groups;

        /// Inside the buffered box, or controlled by (or handed to) one of the groups.
        bool contains(const AircraftState &s) const;
    };

    AreaOfInterest area_of_interest(const AirspaceDefinition &airspace, const BandboxConfig &bandbox,
                                    const std::vector<std::string> &groups, double buffer_nmi);

    struct PublishedIntent
    {
        std::string session;
        double t = 0.0;
        nlohmann::ordered_json payload;
    };

    struct ObservationContext
    {
        const AreaOfInterest *area = nullptr;
        const std::map<std::string, std::string> *controllers = nullptr;
        const std::map<std::string, PublishedIntent> *intents = nullptr;
    };

    /// What a session may see. Wind is sampled from the forecast field only.
    nlohmann::ordered_json make_observation(const World &world, const ObservationContext &ctx);

    /// Session host, independent of the transport. Every call is thread-safe; world mutations happen under
    /// one lock and, in free-running mode, only at tick boundaries.
    class Gateway
    {
    public:
        using Sink = std::function<void(const Message &)>;

        explicit Gateway(GatewayConfig config, ModelLibrary models = {});
        ~Gateway();

        Gateway(const Gateway &) = delete;
        Gateway &operator=(const Gateway &) = delete;

        std::uint64_t connect(Sink sink);
        void disconnect(std::uint64_t connection);
        /// Processes one frame body; every reply and notification goes to the sinks.
        void handle(std::uint64_t connection, const std::string &body);
        void framing_error(std::uint64_t connection, const std::string &text);

        /// Free-running clock thread; no-op in lockstep mode.
        void start();
        void stop();

        const GatewayConfig &config() const noexcept { return m_config; }
        bool has_world() const;
        std::int64_t tick_index() const;
        bool world_done() const;
        std::string log_jsonl() const;
        std::uint64_t state_hash() const;
        /// Runs `f` against the world under the lock (tests and tooling).
        void inspect(const std::function<void(const World &)> &f) const;

    private:
        struct Session
        {
            std::string id;
            SessionGrant grant;
            bool subscribe = false;
        };

        struct Connection
        {
            Sink sink;
            std::optional<Session> session;
            std::uint64_t out_seq = 0;
            std::optional<std::uint64_t> last_in_seq;
        };

        struct Command
        {
            std::string session;
            std::string callsign;
            Clearance clearance;
            std::shared_ptr<std::promise<IssueResult>> done;
        };

        void send(std::uint64_t connection, Message m);
        void reply(std::uint64_t connection, const Message &request, const std::string &type,
                   nlohmann::ordered_json payload);
        void fail(std::uint64_t connection, const Message &request, const std::string &code, const std::string &text);

        void on_hello(std::uint64_t c, const Message &m);
        void on_reset(std::uint64_t c, Session &s, const Message &m, std::unique_lock<std::mutex> &lock);
        void on_step(std::uint64_t c, Session &s, const Message &m, std::unique_lock<std::mutex> &lock);
        void on_action(std::uint64_t c, Session &s, const Message &m, std::unique_lock<std::mutex> &lock);
        void on_takeover(std::uint64_t c, Session &s, const Message &m);
        void on_intent(std::uint64_t c, Session &s, const Message &m);

        /// Session currently holding control of `callsign`: explicit takeover first, else the lowest
        /// session id whose groups cover the aircraft's controlling group.
        std::optional<std::string> controller_of(const std::string &callsign) const;
        std::map<std::string, std::string> controllers() const;
        /// Empty when allowed, else the rejection reason.
        std::string control_check(const Session &s, const std::string &callsign) const;
        IssueResult apply(const std::string &session, const std::string &callsign, const Clearance &c);

        nlohmann::ordered_json observation_for(const Session &s) const;
        void tick_locked();
        void broadcast_tick(std::uint64_t first_record);
        void clock_loop();

        GatewayConfig m_config;
        ModelLibrary m_models;

        mutable std::mutex m_mutex;
        std::condition_variable m_ticked;
        std::unique_ptr<World> m_world;
        std::uint64_t m_world_generation = 0;
        std::map<std::uint64_t, Connection> m_connections;
        std::uint64_t m_next_connection = 1;
        std::uint64_t m_next_session = 1;
        std::map<std::string, std::string> m_taken;
        std::map<std::string, PublishedIntent> m_intents;
        std::vector<Command> m_queue;

        std::thread m_clock;
        bool m_running = false;
        std::condition_variable m_wake;
    };
}
