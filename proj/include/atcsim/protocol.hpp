#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace atcsim
{
    inline constexpr int kProtocolVersion = 1;
    /// Frames above this size are refused before parsing.
    inline constexpr std::size_t kMaxFrameBytes = 8u << 20;

    /// One wire record. Serialised with fields in the order v, session, seq, re, type, payload
    /// (re only on responses).
    struct Message
    {
        int v = kProtocolVersion;
        std::string session;
        std::uint64_t seq = 0;
        std::optional<std::uint64_t> re;
        std::string type;
        nlohmann::ordered_json payload = nlohmann::ordered_json::object();
    };

    nlohmann::ordered_json to_json(const Message &m);
    std::string encode_body(const Message &m);
    /// Length prefix (decimal byte count), newline, compact JSON body.
    std::string encode_frame(const Message &m);

    /// Thrown for a body that is not a well-formed message; carries the protocol error code.
    class ProtocolError : public std::runtime_error
    {
    public:
        ProtocolError(std::string code, const std::string &message)
            : std::runtime_error(message), m_code(std::move(code))
        {
        }
        const std::string &code() const noexcept { return m_code; }

    private:
        std::string m_code;
    };

    Message decode_body(const std::string &body);

    /// Incremental frame splitter for a byte stream. A bad length line yields an error entry and is
    /// skipped, so the stream stays usable.
    class FrameDecoder
    {
    public:
        struct Item
        {
            std::optional<std::string> body;
            std::string error;
        };

        void feed(const char *data, std::size_t n);
        void feed(const std::string &data) { feed(data.data(), data.size()); }
        std::optional<Item> next();

    private:
        std::string m_buffer;
        std::optional<std::size_t> m_expected;
        std::size_t m_skip = 0;
    };

    Message error_message(const std::string &code, const std::string &text, std::optional<std::uint64_t> re = {});
}
