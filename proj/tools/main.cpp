#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "cli.hpp"

int main(int argc, char** argv) {
    using namespace pulled::cli;
    CLI::App app{"Pulled-front stability experiments"};
    app.require_subcommand(1);
    std::string config_path;
    std::string outdir, run_id;
    unsigned threads = 0;
    for (const auto& name : subcommands()) {
        auto* sc = app.add_subcommand(name);
        sc->add_option("-c,--config", config_path, "JSON run configuration")->required();
        sc->add_option("-o,--outdir", outdir, "output directory (overrides PULLED_OUTDIR and the config)");
        sc->add_option("--run-id", run_id, "run directory name (default: subcommand and config digest)");
        sc->add_option("-j,--threads", threads, "worker threads (overrides PULLED_THREADS)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    try {
        Invocation inv;
        inv.subcommand = app.get_subcommands().front()->get_name();
        inv.config = load_config_file(config_path);
        if (!outdir.empty()) inv.outdir = outdir;
        if (!run_id.empty()) inv.run_id = run_id;
        if (threads > 0) setenv("PULLED_THREADS", std::to_string(threads).c_str(), 1);
        const auto oc = execute(inv);
        std::cout << oc.report.dump(2) << "\n";
        std::cerr << "wrote " << oc.run_dir.string() << "\n";
        return oc.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
