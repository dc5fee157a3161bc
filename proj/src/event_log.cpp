#include "atcsim/event_log.hpp"

#include "atcsim/errors.hpp"

#include <fstream>
#include <sstream>

namespace atcsim
{
    EventLog::EventLog(Record header) : m_header(std::move(header))
    {
        m_header["schema"] = kEventLogSchema;
        m_header["version"] = kEventLogVersion;
    }

    std::uint64_t EventLog::append(double t, const std::string &type, Record fields)
    {
        Record r;
        const std::uint64_t seq = m_next_seq++;
        r["seq"] = seq;
        r["t"] = t;
        r["type"] = type;
        for (auto it = fields.begin(); it != fields.end(); ++it)
        {
            r[it.key()] = std::move(it.value());
        }
        m_records.push_back(std::move(r));
        return seq;
    }

    std::vector<const EventLog::Record *> EventLog::of_type(const std::string &type) const
    {
        std::vector<const Record *> out;
        for (const auto &r : m_records)
        {
            if (r["type"] == type)
            {
                out.push_back(&r);
            }
        }
        return out;
    }

    std::string EventLog::to_jsonl() const
    {
        std::string out = m_header.dump();
        out += '\n';
        for (const auto &r : m_records)
        {
            out += r.dump();
            out += '\n';
        }
        return out;
    }

    void EventLog::write(const std::string &path) const
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
        {
            throw std::runtime_error("cannot write event log " + path);
        }
        out << to_jsonl();
    }

    EventLog EventLog::from_jsonl(const std::string &text)
    {
        std::istringstream in(text);
        std::string line;
        EventLog log;
        std::size_t line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            if (line.empty())
            {
                continue;
            }
            Record r;
            try
            {
                r = Record::parse(line);
            }
            catch (const nlohmann::json::parse_error &e)
            {
                throw DefinitionError("event log line " + std::to_string(line_no) + ": " + e.what());
            }
            if (line_no == 1)
            {
                if (r.value("schema", "") != kEventLogSchema || r.value("version", 0) != kEventLogVersion)
                {
                    throw DefinitionError("event log: unsupported schema or version");
                }
                log.m_header = std::move(r);
                continue;
            }
            if (!r.contains("seq") || r["seq"].get<std::uint64_t>() != log.m_next_seq)
            {
                throw DefinitionError("event log line " + std::to_string(line_no) + ": sequence gap");
            }
            ++log.m_next_seq;
            log.m_records.push_back(std::move(r));
        }
        if (line_no == 0)
        {
            throw DefinitionError("event log is empty");
        }
        return log;
    }

    EventLog EventLog::read(const std::string &path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw std::runtime_error("cannot open event log " + path);
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return from_jsonl(ss.str());
    }
}
