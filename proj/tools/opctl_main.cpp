#include <cstdio>
#include <string>

#include "CLI11.hpp"

#include "opctl/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthesis and verification of wireless control loops sharing a state "
                 "dependent fading channel"};
    app.require_subcommand(1);

    std::string model_path;
    std::string out_dir;
    std::string target;
    std::uint64_t seed = 0;

    const std::pair<const char*, const char*> commands[] = {
        {"compile", "compile the network into its transition matrix"},
        {"thresholds", "per plant success thresholds and the good profile set"},
        {"synthesize", "invariant core, reachability certificate and stabilizing gains"},
        {"simulate", "Monte Carlo rollout of the canonical gain"},
        {"verify", "simulate, then check the expected decay step by step"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--model", model_path, "model file")->required();
        sub->add_option("--out", out_dir, "directory for artifacts and reports");
        sub->add_option("--seed", seed, "simulation seed override");
        sub->add_option("--target", target, "restricted invariant core, index set syntax");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    CLI::App* sub = app.get_subcommands().front();
    opctl::RunOptions opts;
    opts.model_path = model_path;
    opts.out_dir = out_dir;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--target")) opts.target = target;

    const opctl::RunResult res = opctl::run_pipeline(sub->get_name(), opts);
    std::fputs(res.text.c_str(), res.exit_code == 0 ? stdout : stderr);
    return res.exit_code;
}
