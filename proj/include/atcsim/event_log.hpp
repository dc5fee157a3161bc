#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace atcsim
{
    inline constexpr const char *kEventLogSchema = "atcsim-eventlog";
    inline constexpr int kEventLogVersion = 1;

    /// Append-only JSON Lines log. Line 1 is the header; every other line is {seq, t, type, ...}.
    /// Records keep insertion order, which is the (sim-time, sequence) total order.
    class EventLog
    {
    public:
        using Record = nlohmann::ordered_json;

        EventLog() = default;
        explicit EventLog(Record header);

        const Record &header() const noexcept { return m_header; }
        const std::vector<Record> &records() const noexcept { return m_records; }

        /// Appends a record; `fields` must be an object. Returns the assigned sequence number.
        std::uint64_t append(double t, const std::string &type, Record fields = Record::object());

        std::vector<const Record *> of_type(const std::string &type) const;

        std::string to_jsonl() const;
        void write(const std::string &path) const;

        static EventLog from_jsonl(const std::string &text);
        static EventLog read(const std::string &path);

        bool operator==(const EventLog &other) const { return to_jsonl() == other.to_jsonl(); }

    private:
        Record m_header = Record::object();
        std::vector<Record> m_records;
        std::uint64_t m_next_seq = 0;
    };
}
