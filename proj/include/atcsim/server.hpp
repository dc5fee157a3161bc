#pragma once

#include "atcsim/gateway.hpp"
#include "atcsim/protocol.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace atcsim
{
    /// TCP transport for a Gateway: one reader and one writer thread per connection, so a slow client
    /// never holds the gateway lock.
    class TcpServer
    {
    public:
        /// Port 0 binds an ephemeral port; see port().
        TcpServer(Gateway &gateway, std::string bind_address, int port);
        ~TcpServer();

        TcpServer(const TcpServer &) = delete;
        TcpServer &operator=(const TcpServer &) = delete;

        void start();
        void stop();
        int port() const noexcept { return m_port; }

    private:
        struct Conn;

        void accept_loop();
        void reap();

        Gateway &m_gateway;
        std::string m_bind;
        int m_port;
        int m_listen_fd = -1;
        std::atomic<bool> m_running{false};
        std::thread m_accept;
        std::mutex m_mutex;
        std::vector<std::shared_ptr<Conn>> m_conns;
    };

    /// Blocking client used by scripted tests and tools. Sequence numbers and the session id are filled in.
    class TcpClient
    {
    public:
        TcpClient() = default;
        ~TcpClient();

        TcpClient(const TcpClient &) = delete;
        TcpClient &operator=(const TcpClient &) = delete;

        void connect(const std::string &host, int port);
        void close();

        /// Sends a message and returns its sequence number.
        std::uint64_t send(const std::string &type, nlohmann::ordered_json payload = nlohmann::ordered_json::object());
        /// Writes raw bytes (for malformed-input tests).
        void send_raw(const std::string &bytes);
        /// Waits for the reply to `seq`; notifications received meanwhile are queued.
        Message await_reply(std::uint64_t seq, std::chrono::milliseconds timeout = std::chrono::seconds(30));
        Message request(const std::string &type, nlohmann::ordered_json payload = nlohmann::ordered_json::object(),
                        std::chrono::milliseconds timeout = std::chrono::seconds(30));
        /// Next unsolicited message (reply-less), waiting up to `timeout`.
        std::optional<Message> next_notification(std::chrono::milliseconds timeout);
        /// Next message of any kind.
        std::optional<Message> receive(std::chrono::milliseconds timeout);

        const std::string &session() const noexcept { return m_session; }
        void set_session(std::string id) { m_session = std::move(id); }
        /// Every frame body received so far, verbatim.
        const std::vector<std::string> &transcript() const noexcept { return m_transcript; }

    private:
        std::optional<Message> read_one(std::chrono::milliseconds timeout);

        int m_fd = -1;
        std::uint64_t m_seq = 0;
        std::string m_session;
        FrameDecoder m_decoder;
        std::deque<Message> m_pending;
        std::vector<std::string> m_transcript;
    };
}
