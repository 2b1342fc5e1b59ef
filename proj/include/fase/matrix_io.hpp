#pragma once

#include <string>

#include "fase/linalg.hpp"

namespace fase {

// Reads a whitespace-separated matrix file: an optional single-integer header
// line "p", then either p rows of p values or a lower triangle (rows of
// lengths 1..p, mirrored on load).  Lines may carry '#' comments.
SymmetricMatrix parse_matrix_file(const std::string& path, Mode mode);

// Writes the full matrix, one row per line, with round-trip precision.
void write_matrix_file(const std::string& path, const SymmetricMatrix& m);

}  // namespace fase
