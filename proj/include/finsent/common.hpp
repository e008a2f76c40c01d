#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace finsent {

// Bad user input: malformed files, inconsistent configuration, missing
// resources. The CLI maps this to exit code 1; everything else that
// escapes is a runtime failure (exit code 2).
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace log {
void info(const std::string& msg);
void warn(const std::string& msg);
// Tests can silence the warning stream; counts are still tracked.
void set_quiet(bool quiet);
std::size_t warning_count();
}  // namespace log

namespace str {
std::string lower(std::string s);
std::string trim(const std::string& s);
std::vector<std::string> split_ws(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);
bool starts_with(const std::string& s, const std::string& prefix);
}  // namespace str

namespace io {
bool file_exists(const std::string& path);
std::string read_file(const std::string& path);  // throws ValidationError
std::vector<std::string> read_lines(const std::string& path);
// Write via temp file + rename so readers never observe a partial file.
void atomic_write(const std::string& path, const std::string& content);
}  // namespace io

// Fixed 17-significant-digit formatting; round-trips any double and keeps
// emitted records byte-stable across runs.
std::string fmt_double(double v);

}  // namespace finsent
