#include "atcsim/protocol.hpp"

#include <algorithm>
#include <cctype>

namespace atcsim
{
    nlohmann::ordered_json to_json(const Message &m)
    {
        nlohmann::ordered_json j;
        j["v"] = m.v;
        j["session"] = m.session;
        j["seq"] = m.seq;
        if (m.re)
        {
            j["re"] = *m.re;
        }
        j["type"] = m.type;
        j["payload"] = m.payload;
        return j;
    }

    std::string encode_body(const Message &m) { return to_json(m).dump(); }

    std::string encode_frame(const Message &m)
    {
        const std::string body = encode_body(m);
        return std::to_string(body.size()) + "\n" + body;
    }

    Message decode_body(const std::string &body)
    {
        nlohmann::ordered_json j;
        try
        {
            j = nlohmann::ordered_json::parse(body);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw ProtocolError("E_MALFORMED", std::string("body is not JSON: ") + e.what());
        }
        if (!j.is_object())
        {
            throw ProtocolError("E_MALFORMED", "message must be an object");
        }
        auto need = [&](const char *key) -> const nlohmann::ordered_json & {
            const auto it = j.find(key);
            if (it == j.end())
            {
                throw ProtocolError("E_MALFORMED", std::string("missing field '") + key + "'");
            }
            return *it;
        };
        Message m;
        const auto &v = need("v");
        const auto &seq = need("seq");
        const auto &type = need("type");
        if (!v.is_number_integer() || !seq.is_number_unsigned() || !type.is_string())
        {
            throw ProtocolError("E_MALFORMED", "v, seq and type must be integer, unsigned and string");
        }
        m.v = v.get<int>();
        m.seq = seq.get<std::uint64_t>();
        m.type = type.get<std::string>();
        if (const auto it = j.find("session"); it != j.end())
        {
            if (!it->is_string())
            {
                throw ProtocolError("E_MALFORMED", "session must be a string");
            }
            m.session = it->get<std::string>();
        }
        if (const auto it = j.find("re"); it != j.end() && it->is_number_unsigned())
        {
            m.re = it->get<std::uint64_t>();
        }
        if (const auto it = j.find("payload"); it != j.end())
        {
            if (!it->is_object())
            {
                throw ProtocolError("E_MALFORMED", "payload must be an object");
            }
            m.payload = *it;
        }
        return m;
    }

    void FrameDecoder::feed(const char *data, std::size_t n) { m_buffer.append(data, n); }

    std::optional<FrameDecoder::Item> FrameDecoder::next()
    {
        for (;;)
        {
            if (m_skip > 0)
            {
                const std::size_t k = std::min(m_skip, m_buffer.size());
                m_buffer.erase(0, k);
                m_skip -= k;
                if (m_skip > 0)
                {
                    return std::nullopt;
                }
            }
            if (!m_expected)
            {
                const auto nl = m_buffer.find('\n');
                if (nl == std::string::npos)
                {
                    if (m_buffer.size() > 32)
                    {
                        m_buffer.clear();
                        return Item{std::nullopt, "length line too long"};
                    }
                    return std::nullopt;
                }
                std::string line = m_buffer.substr(0, nl);
                m_buffer.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r')
                {
                    line.pop_back();
                }
                const bool digits = !line.empty() && line.size() <= 20 &&
                                    std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isdigit(c); });
                if (!digits)
                {
                    return Item{std::nullopt, "bad length prefix '" + line.substr(0, 32) + "'"};
                }
                const auto len = std::stoull(line);
                if (len > kMaxFrameBytes)
                {
                    m_skip = len;
                    return Item{std::nullopt, "frame of " + line + " bytes exceeds the limit"};
                }
                m_expected = static_cast<std::size_t>(len);
            }
            if (m_buffer.size() < *m_expected)
            {
                return std::nullopt;
            }
            Item item{m_buffer.substr(0, *m_expected), {}};
            m_buffer.erase(0, *m_expected);
            m_expected.reset();
            return item;
        }
    }

    Message error_message(const std::string &code, const std::string &text, std::optional<std::uint64_t> re)
    {
        Message m;
        m.type = "error";
        m.re = re;
        m.payload["code"] = code;
        m.payload["message"] = text;
        return m;
    }
}
