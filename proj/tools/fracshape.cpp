#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

#include "fracshape/cli.hpp"
#include "fracshape/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fractional p-Laplacian torsion, eigenvalue and shape optimization runs"};
    std::string command;
    std::string config;
    std::string out;
    int threads = -1;
    app.add_option("command", command, "torsion | eigen | optimize | sweep-s | bbm | aniso-check | gamma-dist")
        ->required()
        ->check(CLI::IsMember(fracshape::cli::commands()));
    app.add_option("--config", config, "JSON run configuration")->required();
    app.add_option("--out", out, "output directory")->required();
    app.add_option("--threads", threads, "worker threads (default: FRACSHAPE_THREADS, else all cores)")
        ->check(CLI::NonNegativeNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "ERROR " << fracshape::cli::validation << ": " << e.what() << "\n";
        return fracshape::cli::validation;
    }

    if (threads < 0) {
        threads = 0;
        if (const char* env = std::getenv("FRACSHAPE_THREADS")) {
            try {
                threads = std::stoi(env);
            } catch (const std::exception&) {
                std::cerr << "ERROR " << fracshape::cli::validation << ": FRACSHAPE_THREADS is not an integer\n";
                return fracshape::cli::validation;
            }
        }
    }
    fracshape::set_threads(threads);
    return fracshape::cli::run_file(command, config, out);
}
