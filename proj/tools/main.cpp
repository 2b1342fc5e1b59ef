#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "fase/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{
        "Factor extraction with asymptotic standard errors for the unrotated "
        "loadings, uniquenesses and (image) scale, plus varimax rotation and "
        "a Wishart simulation check."};

    fase::RunConfig config;
    std::string mode = "correlation";
    std::string method = "least_square";
    std::string format = "text";
    std::string acov_path;
    int simulate = 0;

    app.add_option("--input", config.input_path, "Matrix file (full or lower triangle)")
        ->required();
    app.add_option("--mode", mode, "Input matrix mode")
        ->check(CLI::IsMember({"covariance", "correlation"}))
        ->capture_default_str();
    app.add_option("--method", method, "Extraction method")
        ->check(CLI::IsMember({"ipcfa", "pfa", "least_square", "alpha", "image"}))
        ->capture_default_str();
    app.add_option("-k,--factors", config.k, "Number of common factors")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("-n,--sample-size", config.n, "Sample size behind the input matrix");
    app.add_flag("--rotate", config.rotate, "Varimax-rotate the loadings and report rotated SEs");
    app.add_flag("--kaiser", config.kaiser, "Use Kaiser row normalization in varimax");
    app.add_option("--simulate", simulate, "Run a Wishart simulation with this many replicates")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", config.seed, "Simulation seed")->capture_default_str();
    app.add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    app.add_option("--acov", acov_path,
                   "External acov(Sigma) file (replaces the normal-theory formula)");
    app.add_flag("--emit-acov", config.emit_acov, "Include acov matrices in JSON output");
    app.add_option("--threads", config.threads, "Simulation worker threads (0 = hardware)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    config.mode = fase::mode_from_string(mode);
    config.method = fase::method_from_string(method);
    config.format = format == "json" ? fase::RunConfig::Format::json
                                     : fase::RunConfig::Format::text;
    if (!acov_path.empty()) config.acov_path = acov_path;
    if (simulate > 0) config.simulate = simulate;

    return fase::run(config, std::cout, std::cerr);
}
