#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "fase/extraction.hpp"

namespace fase {

struct RunConfig {
    std::string input_path;
    Mode mode = Mode::correlation;
    Method method = Method::least_square;
    int k = 2;
    long n = 0;  // sample size; required unless an external acov is supplied
    bool rotate = false;
    bool kaiser = false;  // varimax row normalization
    std::optional<int> simulate;
    std::uint64_t seed = 1;
    enum class Format { text, json } format = Format::text;
    std::optional<std::string> acov_path;
    bool emit_acov = false;  // include acov matrices in JSON output
    int threads = 1;
};

// Fits, assembles standard errors, optionally rotates and simulates, and
// renders the report to `out`.  Returns the process exit code: 0 on success,
// 2 for any named numeric condition (diagnostic goes to `err`).
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Table-style number: 4 decimals, no leading zero (".6639", "-.3037").
std::string format_cell(double value);

}  // namespace fase
