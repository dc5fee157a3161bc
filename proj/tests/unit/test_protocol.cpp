#include "atcsim/protocol.hpp"

#include <gtest/gtest.h>

using namespace atcsim;

namespace
{
    Message sample()
    {
        Message m;
        m.session = "s1";
        m.seq = 42;
        m.re = 7;
        m.type = "step";
        m.payload["n_ticks"] = 3;
        m.payload["note"] = "zz\n{}";
        return m;
    }

    std::string decode_code(const std::string &body)
    {
        try
        {
            decode_body(body);
        }
        catch (const ProtocolError &e)
        {
            return e.code();
        }
        return "accepted";
    }
}

TEST(Protocol, EnvelopeFieldOrder)
{
    const std::string body = encode_body(sample());
    EXPECT_EQ(body.rfind("{\"v\":1,\"session\":\"s1\",\"seq\":42,\"re\":7,\"type\":\"step\",\"payload\":", 0), 0u);
    Message no_re = sample();
    no_re.re.reset();
    EXPECT_EQ(encode_body(no_re).find("\"re\""), std::string::npos);
}

TEST(Protocol, BodyRoundTrip)
{
    const Message m = sample();
    const Message back = decode_body(encode_body(m));
    EXPECT_EQ(back.v, m.v);
    EXPECT_EQ(back.session, m.session);
    EXPECT_EQ(back.seq, m.seq);
    EXPECT_EQ(back.re, m.re);
    EXPECT_EQ(back.type, m.type);
    EXPECT_EQ(back.payload, m.payload);
    EXPECT_EQ(encode_body(back), encode_body(m));
}

TEST(Protocol, DecodeErrors)
{
    EXPECT_EQ(decode_code("not json"), "E_MALFORMED");
    EXPECT_EQ(decode_code("[1,2]"), "E_MALFORMED");
    EXPECT_EQ(decode_code(R"({"v":1,"type":"hello"})"), "E_MALFORMED");
    EXPECT_EQ(decode_code(R"({"v":1,"seq":-1,"type":"hello"})"), "E_MALFORMED");
    EXPECT_EQ(decode_code(R"({"v":1,"seq":1,"type":"hello","payload":[]})"), "E_MALFORMED");
    EXPECT_EQ(decode_code(R"({"v":1,"seq":1,"type":"hello"})"), "accepted");
}

TEST(Protocol, FramesSurviveArbitrarySplits)
{
    std::string stream;
    for (int i = 0; i < 5; ++i)
    {
        Message m = sample();
        m.seq = static_cast<std::uint64_t>(i + 1);
        stream += encode_frame(m);
    }
    for (std::size_t chunk : {1u, 2u, 7u, 64u, 4096u})
    {
        FrameDecoder d;
        std::vector<Message> got;
        for (std::size_t pos = 0; pos < stream.size(); pos += chunk)
        {
            d.feed(stream.substr(pos, chunk));
            while (auto item = d.next())
            {
                ASSERT_TRUE(item->body.has_value()) << item->error;
                got.push_back(decode_body(*item->body));
            }
        }
        ASSERT_EQ(got.size(), 5u) << "chunk " << chunk;
        for (std::size_t i = 0; i < got.size(); ++i)
        {
            EXPECT_EQ(got[i].seq, i + 1);
        }
    }
}

TEST(Protocol, BadLengthLineIsReportedAndSkipped)
{
    FrameDecoder d;
    d.feed("abc\n" + encode_frame(sample()));
    auto first = d.next();
    ASSERT_TRUE(first.has_value());
    EXPECT_FALSE(first->body.has_value());
    EXPECT_FALSE(first->error.empty());
    auto second = d.next();
    ASSERT_TRUE(second.has_value());
    ASSERT_TRUE(second->body.has_value());
    EXPECT_EQ(decode_body(*second->body).seq, 42u);
}

TEST(Protocol, OversizeFrameIsSkippedWithoutBuffering)
{
    FrameDecoder d;
    const std::size_t big = kMaxFrameBytes + 10;
    d.feed(std::to_string(big) + "\n");
    auto item = d.next();
    ASSERT_TRUE(item.has_value());
    EXPECT_FALSE(item->body.has_value());
    EXPECT_NE(item->error.find("exceeds"), std::string::npos);
    const std::string filler(big, 'x');
    d.feed(filler.substr(0, big / 2));
    EXPECT_FALSE(d.next().has_value());
    d.feed(filler.substr(big / 2) + encode_frame(sample()));
    auto after = d.next();
    ASSERT_TRUE(after.has_value());
    ASSERT_TRUE(after->body.has_value());
    EXPECT_EQ(decode_body(*after->body).type, "step");
}

TEST(Protocol, ErrorMessageShape)
{
    const Message e = error_message("E_VERSION", "nope", 9);
    EXPECT_EQ(e.type, "error");
    EXPECT_EQ(e.re, 9u);
    EXPECT_EQ(e.payload["code"], "E_VERSION");
    EXPECT_EQ(e.payload["message"], "nope");
}
