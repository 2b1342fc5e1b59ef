#include "fase/matrix_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace fase {

namespace {

std::vector<std::vector<double>> read_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open matrix file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                row.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("invalid numeric token '" + tok + "' in '" + path + "'");
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("matrix file '" + path + "' has no data");
    return rows;
}

bool rows_are_full(const std::vector<std::vector<double>>& rows) {
    const std::size_t p = rows.size();
    for (const auto& r : rows)
        if (r.size() != p) return false;
    return true;
}

bool rows_are_triangle(const std::vector<std::vector<double>>& rows) {
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].size() != i + 1) return false;
    return true;
}

Matrix assemble(const std::vector<std::vector<double>>& rows, const std::string& path) {
    const auto p = static_cast<Index>(rows.size());
    Matrix m(p, p);
    if (rows_are_full(rows)) {
        for (Index i = 0; i < p; ++i)
            for (Index j = 0; j < p; ++j) m(i, j) = rows[i][j];
        const double scale = std::max(m.cwiseAbs().maxCoeff(), 1.0);
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw InvalidInput("matrix in '" + path + "' is asymmetric beyond tolerance");
        return m;
    }
    if (rows_are_triangle(rows)) {
        for (Index i = 0; i < p; ++i)
            for (Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = rows[i][j];
        return m;
    }
    throw ParseError("ragged rows in '" + path +
                     "': expected a full square matrix or a lower triangle");
}

}  // namespace

SymmetricMatrix parse_matrix_file(const std::string& path, Mode mode) {
    auto rows = read_rows(path);

    // Prefer the file as-is; fall back to stripping an optional header line (a
    // lone integer equal to the number of data rows that follow).
    if (!rows_are_full(rows) && !rows_are_triangle(rows) && rows.size() > 1 &&
        rows.front().size() == 1) {
        const double h = rows.front()[0];
        const auto hp = static_cast<std::size_t>(std::llround(h));
        if (std::abs(h - static_cast<double>(hp)) < 1e-12 && hp == rows.size() - 1)
            rows.erase(rows.begin());
    }

    Matrix m = assemble(rows, path);
    SymmetricMatrix out(std::move(m), mode, 1e-10);
    out.require_psd();
    return out;
}

void write_matrix_file(const std::string& path, const SymmetricMatrix& m) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write matrix file '" + path + "'");
    char buf[32];
    for (int i = 0; i < m.order(); ++i) {
        for (int j = 0; j < m.order(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf << (j + 1 == m.order() ? "" : " ");
        }
        out << "\n";
    }
}

}  // namespace fase
