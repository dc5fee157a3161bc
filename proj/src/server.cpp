#include "atcsim/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <stdexcept>

namespace atcsim
{
    namespace
    {
        [[noreturn]] void sys_fail(const std::string &what)
        {
            throw std::runtime_error(what + ": " + std::strerror(errno));
        }

        bool write_all(int fd, const std::string &data)
        {
            std::size_t off = 0;
            while (off < data.size())
            {
                const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
                if (n < 0)
                {
                    if (errno == EINTR)
                    {
                        continue;
                    }
                    return false;
                }
                off += static_cast<std::size_t>(n);
            }
            return true;
        }
    }

    struct TcpServer::Conn
    {
        int fd = -1;
        std::uint64_t id = 0;
        std::thread reader;
        std::thread writer;
        std::mutex mutex;
        std::condition_variable cv;
        std::deque<std::string> out;
        bool closing = false;
        std::atomic<bool> finished{false};
    };

    TcpServer::TcpServer(Gateway &gateway, std::string bind_address, int port)
        : m_gateway(gateway), m_bind(std::move(bind_address)), m_port(port)
    {
    }

    TcpServer::~TcpServer() { stop(); }

    void TcpServer::start()
    {
        m_listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (m_listen_fd < 0)
        {
            sys_fail("socket");
        }
        int one = 1;
        ::setsockopt(m_listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(m_port));
        if (::inet_pton(AF_INET, m_bind.c_str(), &addr.sin_addr) != 1)
        {
            ::close(m_listen_fd);
            throw std::runtime_error("bad bind address " + m_bind);
        }
        if (::bind(m_listen_fd, reinterpret_cast<sockaddr *>(&addr), sizeof addr) < 0)
        {
            const int e = errno;
            ::close(m_listen_fd);
            errno = e;
            sys_fail("bind " + m_bind + ":" + std::to_string(m_port));
        }
        if (::listen(m_listen_fd, 64) < 0)
        {
            sys_fail("listen");
        }
        socklen_t len = sizeof addr;
        ::getsockname(m_listen_fd, reinterpret_cast<sockaddr *>(&addr), &len);
        m_port = ntohs(addr.sin_port);
        m_running = true;
        m_accept = std::thread([this] { accept_loop(); });
    }

    void TcpServer::accept_loop()
    {
        while (m_running)
        {
            pollfd p{m_listen_fd, POLLIN, 0};
            if (::poll(&p, 1, 100) <= 0)
            {
                continue;
            }
            const int fd = ::accept(m_listen_fd, nullptr, nullptr);
            if (fd < 0)
            {
                continue;
            }
            int one = 1;
            ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            reap();
            auto conn = std::make_shared<Conn>();
            conn->fd = fd;
            std::weak_ptr<Conn> weak = conn;
            conn->id = m_gateway.connect([weak](const Message &m) {
                if (auto c = weak.lock())
                {
                    std::lock_guard lock(c->mutex);
                    c->out.push_back(encode_frame(m));
                    c->cv.notify_one();
                }
            });
            conn->writer = std::thread([conn] {
                std::unique_lock lock(conn->mutex);
                for (;;)
                {
                    conn->cv.wait(lock, [&] { return conn->closing || !conn->out.empty(); });
                    if (conn->out.empty())
                    {
                        return;
                    }
                    std::string frame = std::move(conn->out.front());
                    conn->out.pop_front();
                    lock.unlock();
                    const bool ok = write_all(conn->fd, frame);
                    lock.lock();
                    if (!ok)
                    {
                        conn->out.clear();
                        return;
                    }
                }
            });
            conn->reader = std::thread([this, conn] {
                FrameDecoder decoder;
                char buf[65536];
                for (;;)
                {
                    const ssize_t n = ::recv(conn->fd, buf, sizeof buf, 0);
                    if (n <= 0)
                    {
                        if (n < 0 && errno == EINTR)
                        {
                            continue;
                        }
                        break;
                    }
                    decoder.feed(buf, static_cast<std::size_t>(n));
                    while (auto item = decoder.next())
                    {
                        if (item->body)
                        {
                            m_gateway.handle(conn->id, *item->body);
                        }
                        else
                        {
                            m_gateway.framing_error(conn->id, item->error);
                        }
                    }
                }
                m_gateway.disconnect(conn->id);
                {
                    std::lock_guard lock(conn->mutex);
                    conn->closing = true;
                    conn->cv.notify_one();
                }
                conn->finished = true;
            });
            std::lock_guard lock(m_mutex);
            m_conns.push_back(std::move(conn));
        }
    }

    void TcpServer::reap()
    {
        std::lock_guard lock(m_mutex);
        for (auto it = m_conns.begin(); it != m_conns.end();)
        {
            if ((*it)->finished)
            {
                (*it)->reader.join();
                (*it)->writer.join();
                ::close((*it)->fd);
                it = m_conns.erase(it);
            }
            else
            {
                ++it;
            }
        }
    }

    void TcpServer::stop()
    {
        if (!m_running.exchange(false))
        {
            return;
        }
        if (m_accept.joinable())
        {
            m_accept.join();
        }
        ::close(m_listen_fd);
        std::vector<std::shared_ptr<Conn>> conns;
        {
            std::lock_guard lock(m_mutex);
            conns.swap(m_conns);
        }
        for (auto &c : conns)
        {
            ::shutdown(c->fd, SHUT_RDWR);
        }
        for (auto &c : conns)
        {
            c->reader.join();
            c->writer.join();
            ::close(c->fd);
        }
    }

    TcpClient::~TcpClient() { close(); }

    void TcpClient::connect(const std::string &host, int port)
    {
        addrinfo hints{};
        hints.ai_family = AF_INET;
        hints.ai_socktype = SOCK_STREAM;
        addrinfo *res = nullptr;
        if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || res == nullptr)
        {
            throw std::runtime_error("cannot resolve " + host);
        }
        m_fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        if (m_fd < 0 || ::connect(m_fd, res->ai_addr, res->ai_addrlen) < 0)
        {
            ::freeaddrinfo(res);
            sys_fail("connect " + host + ":" + std::to_string(port));
        }
        ::freeaddrinfo(res);
        int one = 1;
        ::setsockopt(m_fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }

    void TcpClient::close()
    {
        if (m_fd >= 0)
        {
            ::close(m_fd);
            m_fd = -1;
        }
    }

    std::uint64_t TcpClient::send(const std::string &type, nlohmann::ordered_json payload)
    {
        Message m;
        m.session = m_session;
        m.seq = ++m_seq;
        m.type = type;
        m.payload = std::move(payload);
        send_raw(encode_frame(m));
        return m.seq;
    }

    void TcpClient::send_raw(const std::string &bytes)
    {
        if (!write_all(m_fd, bytes))
        {
            sys_fail("send");
        }
    }

    std::optional<Message> TcpClient::read_one(std::chrono::milliseconds timeout)
    {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;)
        {
            if (auto item = m_decoder.next())
            {
                if (!item->body)
                {
                    throw std::runtime_error("server sent a bad frame: " + item->error);
                }
                m_transcript.push_back(*item->body);
                return decode_body(*item->body);
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                                    std::chrono::steady_clock::now());
            if (left.count() <= 0)
            {
                return std::nullopt;
            }
            pollfd p{m_fd, POLLIN, 0};
            const int r = ::poll(&p, 1, static_cast<int>(left.count()));
            if (r <= 0)
            {
                continue;
            }
            char buf[65536];
            const ssize_t n = ::recv(m_fd, buf, sizeof buf, 0);
            if (n <= 0)
            {
                throw std::runtime_error("connection closed by server");
            }
            m_decoder.feed(buf, static_cast<std::size_t>(n));
        }
    }

    Message TcpClient::await_reply(std::uint64_t seq, std::chrono::milliseconds timeout)
    {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (auto it = m_pending.begin(); it != m_pending.end(); ++it)
        {
            if (it->re && *it->re == seq)
            {
                Message m = std::move(*it);
                m_pending.erase(it);
                return m;
            }
        }
        for (;;)
        {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                                    std::chrono::steady_clock::now());
            auto m = read_one(std::max(left, std::chrono::milliseconds(0)));
            if (!m)
            {
                throw std::runtime_error("timed out waiting for reply to " + std::to_string(seq));
            }
            if (m->re && *m->re == seq)
            {
                if (m->type == "hello" && m->payload.contains("session"))
                {
                    m_session = m->payload["session"].get<std::string>();
                }
                return *m;
            }
            m_pending.push_back(std::move(*m));
        }
    }

    Message TcpClient::request(const std::string &type, nlohmann::ordered_json payload,
                               std::chrono::milliseconds timeout)
    {
        return await_reply(send(type, std::move(payload)), timeout);
    }

    std::optional<Message> TcpClient::next_notification(std::chrono::milliseconds timeout)
    {
        for (auto it = m_pending.begin(); it != m_pending.end(); ++it)
        {
            if (!it->re)
            {
                Message m = std::move(*it);
                m_pending.erase(it);
                return m;
            }
        }
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;)
        {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                                    std::chrono::steady_clock::now());
            auto m = read_one(std::max(left, std::chrono::milliseconds(0)));
            if (!m)
            {
                return std::nullopt;
            }
            if (!m->re)
            {
                return m;
            }
            m_pending.push_back(std::move(*m));
        }
    }

    std::optional<Message> TcpClient::receive(std::chrono::milliseconds timeout)
    {
        if (!m_pending.empty())
        {
            Message m = std::move(m_pending.front());
            m_pending.pop_front();
            return m;
        }
        return read_one(timeout);
    }
}
