#include "crisk/csv.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace crisk {

namespace {

std::string strip(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

CsvError::CsvError(const std::string& source, int line_, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line_) + ": " + what), line(line_)
{
}

std::vector<Observation> read_sample_csv(std::istream& is, const std::string& source)
{
    std::string line;
    int lineno = 0;

    if (!std::getline(is, line))
        throw CsvError(source, 1, "empty file; expected header 'time,event'");
    ++lineno;
    if (strip(line) != "time,event")
        throw CsvError(source, lineno, "expected header 'time,event', got '" + strip(line) + "'");

    std::vector<Observation> obs;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string row = strip(line);
        if (row.empty())
            continue;
        const auto comma = row.find(',');
        if (comma == std::string::npos)
            throw CsvError(source, lineno, "expected 'time,event', got '" + row + "'");
        const std::string time_str = strip(row.substr(0, comma));
        const std::string event_str = strip(row.substr(comma + 1));

        std::size_t used = 0;
        double time = 0.0;
        try {
            time = std::stod(time_str, &used);
        } catch (const std::exception&) {
            throw CsvError(source, lineno, "cannot parse time '" + time_str + "'");
        }
        if (used != time_str.size())
            throw CsvError(source, lineno, "cannot parse time '" + time_str + "'");
        if (!(time >= 0.0))
            throw CsvError(source, lineno, "time must be >= 0");

        Event event;
        if (event_str == "1")
            event = Event::Failure;
        else if (event_str == "0")
            event = Event::Censored;
        else
            throw CsvError(source, lineno, "event must be 0 or 1, got '" + event_str + "'");
        obs.push_back({time, event});
    }
    if (obs.empty())
        throw CsvError(source, lineno, "no observations");
    return obs;
}

std::vector<Observation> read_sample_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open '" + path + "'");
    return read_sample_csv(in, path);
}

void write_sample_csv(std::ostream& os, const std::vector<Observation>& obs)
{
    os << "time,event\n";
    char buf[48];
    for (const Observation& o : obs) {
        std::snprintf(buf, sizeof buf, "%.6g,%d\n", o.time,
                      o.event == Event::Failure ? 1 : 0);
        os << buf;
    }
}

} // namespace crisk
