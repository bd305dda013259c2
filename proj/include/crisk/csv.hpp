#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "crisk/model.hpp"

namespace crisk {

// Parse failure in a sample CSV; carries the 1-based line number.
struct CsvError : std::runtime_error {
    CsvError(const std::string& source, int line, const std::string& what);
    int line;
};

// Sample file schema: header "time,event", one observation per line,
// event 1 = failure, 0 = censored.
std::vector<Observation> read_sample_csv(std::istream& is, const std::string& source);
std::vector<Observation> read_sample_file(const std::string& path);

void write_sample_csv(std::ostream& os, const std::vector<Observation>& obs);

} // namespace crisk
