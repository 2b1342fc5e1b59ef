#include "fase/runner.hpp"

#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "fase/matrix_io.hpp"
#include "fase/rotation.hpp"
#include "fase/simulation.hpp"

namespace fase {

namespace {

using nlohmann::json;

std::string strip_leading_zero(std::string s) {
    if (s.rfind("0.", 0) == 0) return s.substr(1);
    if (s.rfind("-0.", 0) == 0) return "-" + s.substr(2);
    return s;
}

std::string format7(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.7f", v);
    return strip_leading_zero(buf);
}

std::string roman(int v) {
    static const char* names[] = {"I", "II", "III", "IV", "V", "VI",
                                  "VII", "VIII", "IX", "X", "XI", "XII"};
    return v >= 1 && v <= 12 ? names[v - 1] : std::to_string(v);
}

std::string number_word(int v) {
    static const char* names[] = {"One", "Two", "Three", "Four", "Five", "Six",
                                  "Seven", "Eight", "Nine", "Ten", "Eleven", "Twelve"};
    return v >= 1 && v <= 12 ? names[v - 1] : std::to_string(v);
}

std::string method_title(Method m) {
    switch (m) {
        case Method::ipcfa: return "Iterative Principal Component";
        case Method::pfa: return "Principal";
        case Method::least_square: return "Least-Square";
        case Method::alpha: return "Alpha";
        case Method::image: return "Image";
    }
    return "?";
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json to_json(const SimulationReport& rep) {
    return json{{"m", rep.m},
                {"n", rep.n},
                {"method", to_string(rep.method)},
                {"k", rep.k},
                {"empirical_se_uniq", to_json(rep.empirical_se_uniq)},
                {"theoretical_se_uniq", to_json(rep.theoretical_se_uniq)},
                {"failures", rep.failures},
                {"seed", rep.seed}};
}

struct Column {
    std::string header;
    std::vector<std::string> cells;
};

void print_columns(std::ostream& out, const std::string& label_header,
                   const std::vector<Column>& cols,
                   const std::vector<std::string>& row_labels) {
    std::vector<std::size_t> width(cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        width[c] = cols[c].header.size();
        for (const auto& cell : cols[c].cells) width[c] = std::max(width[c], cell.size());
    }
    std::size_t label_w = label_header.size();
    for (const auto& l : row_labels) label_w = std::max(label_w, l.size());

    out << std::left << std::setw(static_cast<int>(label_w + 2)) << label_header;
    for (std::size_t c = 0; c < cols.size(); ++c)
        out << std::setw(static_cast<int>(width[c] + 2)) << cols[c].header;
    out << "\n";
    for (std::size_t r = 0; r < row_labels.size(); ++r) {
        out << std::setw(static_cast<int>(label_w + 2)) << row_labels[r];
        for (std::size_t c = 0; c < cols.size(); ++c)
            out << std::setw(static_cast<int>(width[c] + 2)) << cols[c].cells[r];
        out << "\n";
    }
}

}  // namespace

std::string format_cell(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    return strip_leading_zero(buf);
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        const SymmetricMatrix sigma = parse_matrix_file(config.input_path, config.mode);
        const int p = sigma.order();
        if (!config.acov_path && config.n < 2)
            throw InvalidInput("sample size n (>= 2) is required unless --acov is given");

        const FactorSolution sol = fit(sigma, config.method, config.k);

        std::optional<AcovMatrix> acov;
        if (config.acov_path) {
            acov = load_external_acov(*config.acov_path, config.mode, config.n);
            if (acov->order() != p)
                throw InvalidInput("external acov dimension must equal p^2 = " +
                                   std::to_string(p * p));
        } else if (config.mode == Mode::correlation) {
            acov = acov_sample_correlations(sigma, config.n);
        } else {
            acov = acov_sample_covariances(sigma, config.n);
        }

        const SeReport se = assemble_se(sigma, sol, *acov);

        std::optional<RotatedSolution> rot;
        VarimaxOptions vopts;
        vopts.kaiser_normalize = config.kaiser;
        if (config.rotate) {
            const JacobianSystem jac = loading_jacobian(sigma, sol);
            rot = varimax(sol.loadings, vopts);
            rot->se = rotated_se(sigma, sol, jac, *acov, vopts);
        }

        std::optional<SimulationReport> sim;
        if (config.simulate)
            sim = run_simulation(sigma, config.n, config.k, config.method, *config.simulate,
                                 config.seed, config.threads);

        const int k = sol.factors();
        if (config.format == RunConfig::Format::json) {
            json j{{"method", to_string(config.method)},
                   {"mode", to_string(config.mode)},
                   {"k", k},
                   {"n", config.n},
                   {"converged", sol.converged},
                   {"iterations", sol.iterations},
                   {"loadings", to_json(sol.loadings)},
                   {"uniquenesses", to_json(sol.uniquenesses)},
                   {"eigenvalues", to_json(sol.eigenvalues)},
                   {"communalities", to_json(sol.communalities)},
                   {"se", json{{"loadings", to_json(se.se_loadings)},
                               {"uniquenesses", to_json(se.se_uniquenesses)}}}};
            if (sol.tau) {
                j["tau"] = *sol.tau;
                j["se"]["tau"] = *se.se_tau;
            }
            if (rot) {
                j["rotated"] = json{{"loadings", to_json(rot->loadings)},
                                    {"rotation", to_json(rot->rotation)},
                                    {"criterion", rot->criterion},
                                    {"kaiser_normalized", config.kaiser},
                                    {"se", to_json(*rot->se)}};
            }
            if (config.emit_acov) {
                j["acov"] = json{{"loadings", to_json(se.acov_loadings)},
                                 {"uniquenesses", to_json(se.acov_uniquenesses)},
                                 {"sigma", to_json(acov->mat())}};
            }
            if (sim) j["simulation"] = to_json(*sim);
            out << j.dump(2) << "\n";
            return 0;
        }

        out << "Estimates and Standard Errors for " << number_word(k) << "-Factor "
            << method_title(config.method) << " Factor Analysis\n";
        out << "(p = " << p << ", " << to_string(config.mode) << " input, n = " << config.n
            << ", " << sol.iterations << " iterations)\n\n";

        std::vector<std::string> labels(p);
        for (int i = 0; i < p; ++i) labels[i] = "X" + std::to_string(i + 1);

        std::vector<Column> cols;
        for (int r = 0; r < k; ++r) {
            Column c{"Unrotated " + roman(r + 1), {}};
            for (int i = 0; i < p; ++i)
                c.cells.push_back(format_cell(sol.loadings(i, r)) + "(" +
                                  format_cell(se.se_loadings(i, r)) + ")");
            cols.push_back(std::move(c));
        }
        if (rot) {
            for (int r = 0; r < k; ++r) {
                Column c{"Rotated " + roman(r + 1), {}};
                for (int i = 0; i < p; ++i)
                    c.cells.push_back(format_cell(rot->loadings(i, r)) + "(" +
                                      format_cell((*rot->se)(i, r)) + ")");
                cols.push_back(std::move(c));
            }
        }
        {
            Column c{"Uniqueness", {}};
            for (int i = 0; i < p; ++i)
                c.cells.push_back(format_cell(sol.uniquenesses(i)) + "(" +
                                  format_cell(se.se_uniquenesses(i)) + ")");
            cols.push_back(std::move(c));
        }
        print_columns(out, "Variable", cols, labels);
        if (sol.tau)
            out << "\nScale tau: " << format_cell(*sol.tau) << "(" << format_cell(*se.se_tau)
                << ")\n";

        if (sim) {
            out << "\nSimulation of Standard Errors for Uniqueness Estimates\n";
            out << "(m = " << sim->m << ", n = " << sim->n << ", seed = " << sim->seed
                << ", failures = " << sim->failures << ")\n\n";
            std::vector<std::string> sim_labels(p);
            for (int i = 0; i < p; ++i) sim_labels[i] = "psi_" + std::to_string(i + 1);
            std::vector<Column> sim_cols(2);
            sim_cols[0].header = "Empirical S.E.";
            sim_cols[1].header = "Theoretical S.E.";
            for (int i = 0; i < p; ++i) {
                sim_cols[0].cells.push_back(format7(sim->empirical_se_uniq(i)));
                sim_cols[1].cells.push_back(format7(sim->theoretical_se_uniq(i)));
            }
            print_columns(out, "Uniqueness", sim_cols, sim_labels);
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace fase
