#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace acqsens::csv {

/// Parsed CSV content: header row plus data rows (RFC 4180, UTF-8).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 if absent
};

Table read_file(const std::filesystem::path& path);
Table read_string(const std::string& text);

/// Quotes fields only when needed (comma, quote, CR/LF).
std::string escape_field(const std::string& field);

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

} // namespace acqsens::csv
