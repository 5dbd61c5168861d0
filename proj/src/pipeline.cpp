#include "opctl/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "opctl/cosim.hpp"
#include "opctl/synthesis.hpp"

namespace opctl {

namespace {

using nlohmann::json;

int stage_rank(const std::string& command) {
    if (command == "compile") return 0;
    if (command == "thresholds") return 1;
    if (command == "synthesize") return 2;
    if (command == "simulate") return 3;
    if (command == "verify") return 4;
    throw ValidationError("run: unknown command '" + command +
                          "' (expected compile, thresholds, synthesize, simulate or verify)");
}

std::string join_set(const std::vector<int>& v) {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ' ';
        os << v[i];
    }
    os << '}';
    return os.str();
}

json controls_json(const std::map<int, std::vector<int>>& controls) {
    json j = json::object();
    for (const auto& [beta, us] : controls) j[std::to_string(beta)] = us;
    return j;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("run: cannot create output directory " + dir + ": " + ec.message());
}

std::string path_join(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

/// Writes report.json and report.txt (when an out dir is set) and returns the
/// result. Report writing failures only matter when the run itself succeeded.
RunResult finish(RunResult res, const RunOptions& opts) {
    if (!opts.out_dir.empty()) {
        try {
            std::ofstream j(path_join(opts.out_dir, "report.json"));
            if (!j) throw ValidationError("run: cannot write report.json in " + opts.out_dir);
            j << res.report.dump(2) << "\n";
            std::ofstream t(path_join(opts.out_dir, "report.txt"));
            if (!t) throw ValidationError("run: cannot write report.txt in " + opts.out_dir);
            t << res.text;
        } catch (const std::exception& e) {
            if (res.exit_code == 0) {
                res.exit_code = 3;
                res.report["exit_code"] = 3;
                res.report["error"] = {{"type", "validation"}, {"message", e.what()}};
                res.text += std::string("error (validation): ") + e.what() + "\n";
            }
        }
    }
    return res;
}

} // namespace

RunResult run_pipeline(const std::string& command, const RunOptions& opts) {
    RunResult res;
    json& rep = res.report;
    rep["command"] = command;
    std::string& text = res.text;

    try {
        const int rank = stage_rank(command);
        if (!opts.out_dir.empty()) ensure_dir(opts.out_dir);

        Model model = load_model(opts.model_path);
        if (opts.seed) model.sim.seed = *opts.seed;
        const int N = model.trans.state_count();
        const int M = model.trans.control_count();
        const int MN = model.trans.profile_count();

        rep["model"] = {{"path", opts.model_path},
                        {"hash", hash_hex(model.content_hash)},
                        {"notes", model.notes}};
        if (opts.seed) rep["model"]["seed_override"] = *opts.seed;
        if (opts.target) rep["model"]["target_override"] = *opts.target;

        std::uint64_t chain = model.content_hash;
        auto advance = [&](const std::string& stage, const std::string& output_bytes) {
            rep["stage_hashes"][stage]["input"] = hash_hex(chain);
            chain = content_hash(hash_hex(chain) + output_bytes);
            rep["stage_hashes"][stage]["output"] = hash_hex(chain);
        };

        // compile
        rep["compile"] = {{"kappa", model.trans.kappa},
                          {"state_agents", model.trans.n},
                          {"input_agents", model.trans.m},
                          {"state_count", N},
                          {"control_count", M},
                          {"profile_count", MN},
                          {"route", model.f_direct ? "direct" : "compiled"},
                          {"transition", format_logical(model.trans.f)}};
        advance("compile", rep["compile"].dump());
        text += "compile: " + std::to_string(N) + " states, " + std::to_string(M) +
                " controls, " + std::to_string(MN) + " profiles (" +
                (model.f_direct ? "direct transition map" : "compiled from coefficients") + ")\n";
        if (!opts.out_dir.empty()) write_transition(path_join(opts.out_dir, "transition.txt"), model.trans);
        if (rank < 1) { rep["exit_code"] = res.exit_code; return finish(std::move(res), opts); }

        // thresholds
        std::vector<ThresholdResult> thresholds;
        for (const auto& plant : model.plants) thresholds.push_back(success_threshold(plant));
        const std::vector<int> c_z = admissible_z_set(model.cons, N);
        const std::vector<int> omega = omega_set(model.coupling, thresholds, c_z);
        {
            json plants = json::array();
            for (std::size_t i = 0; i < thresholds.size(); ++i) {
                const auto& t = thresholds[i];
                std::vector<double> dir(t.direction.data(), t.direction.data() + t.direction.size());
                plants.push_back({{"plant", i + 1},
                                  {"rho", model.plants[i].rho},
                                  {"threshold", t.raw},
                                  {"threshold_clamped", t.clamped},
                                  {"denominator_pd", t.denominator_pd},
                                  {"unbounded_below", t.unbounded_below},
                                  {"direction", dir}});
            }
            rep["thresholds"] = {{"plants", plants},
                                 {"coupling_source",
                                  model.coupling_from_primitives ? "primitives" : "direct"},
                                 {"coupling_clamped_entries", model.coupling.clamped_entries},
                                 {"coupling_max_excursion", model.coupling.max_excursion},
                                 {"admissible_profiles", static_cast<int>(c_z.size())},
                                 {"omega", omega}};
        }
        advance("thresholds", rep["thresholds"].dump());
        {
            std::ostringstream line;
            line << "thresholds: s = [" << std::setprecision(6);
            for (std::size_t i = 0; i < thresholds.size(); ++i)
                line << (i ? ", " : "") << thresholds[i].clamped;
            line << "]; omega " << join_set(omega) << " (" << omega.size() << " of "
                 << c_z.size() << " admissible profiles)";
            text += line.str() + "\n";
        }
        if (!opts.out_dir.empty()) write_lambda_csv(path_join(opts.out_dir, "lambda.csv"), model.coupling);
        if (rank < 2) { rep["exit_code"] = res.exit_code; return finish(std::move(res), opts); }

        // synthesize
        if (omega.empty())
            throw NotStabilizableError(
                "omega", "synthesize: no admissible profile clears every plant threshold");
        const std::vector<int> phi = phi_set(omega, model.cons, N);
        const InvariantSet largest = lccis(model.trans, omega, model.cons);
        std::optional<std::vector<int>> requested;
        if (opts.target)
            requested = parse_index_set(*opts.target, N, "--target");
        else if (model.restricted_target)
            requested = model.restricted_target;

        InvariantSet core;
        if (requested) {
            const CcisCheck check = verify_ccis(*requested, model.trans, omega, model.cons);
            if (!check.ok)
                throw ValidationError("synthesize: requested core " + join_set(*requested) +
                                      " is not control invariant; failing states " +
                                      join_set(check.failing_states));
            core.states = *requested;
            for (int beta : core.states) {
                std::vector<int> keep;
                for (int u : admissible_controls_for_target(beta, omega, model.cons, N))
                    if (std::binary_search(core.states.begin(), core.states.end(),
                                           model.trans.next(z_index(u, beta, N))))
                        keep.push_back(u);
                core.controls[beta] = std::move(keep);
            }
        } else {
            core = largest;
        }

        const ContractedGraph graph = build_contracted_graph(model.trans, core, model.cons);
        const BfsCertificate cert = bfs_certificate(graph);
        const GainFamily family = synthesize_gains(model.trans, graph, cert, model.cons);
        const LogicalMatrix canonical = family.canonical();
        const int transient =
            *std::max_element(family.depth_by_state.begin(), family.depth_by_state.end());

        rep["synthesize"] = {{"phi", phi},
                             {"largest_invariant_set", largest.states},
                             {"largest_invariant_controls", controls_json(largest.controls)},
                             {"core", core.states},
                             {"core_controls", controls_json(core.controls)},
                             {"core_requested", requested.has_value()},
                             {"depth_by_state", family.depth_by_state},
                             {"transient", transient},
                             {"family_size", family.size()},
                             {"gain_options", family.options},
                             {"canonical_gain", format_logical(canonical)}};
        advance("synthesize", rep["synthesize"].dump());
        {
            std::ostringstream line;
            line << "synthesize: core " << join_set(core.states) << ", max depth " << transient
                 << ", " << std::setprecision(15) << family.size()
                 << " stabilizing gains, canonical " << format_logical(canonical);
            text += line.str() + "\n";
        }
        if (rank < 3) { rep["exit_code"] = res.exit_code; return finish(std::move(res), opts); }

        // simulate
        const std::vector<Trajectory> trajectories = simulate_closed_loop(
            model.trans, model.cons, model.plants, model.coupling, canonical, model.sim);
        const LyapunovReport ly =
            lyapunov_report(trajectories, model.plants, model.coupling, transient);
        {
            json plants = json::array();
            for (std::size_t i = 0; i < ly.plants.size(); ++i) {
                const auto& p = ly.plants[i];
                plants.push_back({{"plant", i + 1},
                                  {"analytic_violations", p.analytic_violations},
                                  {"max_margin", p.max_margin},
                                  {"empirical_violations", p.empirical_violations},
                                  {"long_run_mean", p.long_run_mean},
                                  {"steady_state_bound", p.steady_state_bound},
                                  {"sigma_mean", p.sigma_mean},
                                  {"long_run_ok", p.long_run_ok}});
            }
            rep["simulate"] = {{"horizon", model.sim.horizon},
                               {"replications", model.sim.replications},
                               {"seed", model.sim.seed},
                               {"initial_states", model.sim.initial_states},
                               {"trajectories", static_cast<int>(trajectories.size())},
                               {"transient", ly.transient},
                               {"plants", plants}};
        }
        advance("simulate", rep["simulate"].dump());
        text += "simulate: " + std::to_string(trajectories.size()) + " trajectories (" +
                std::to_string(model.sim.initial_states.size()) + " initial states x " +
                std::to_string(model.sim.replications) + " replications), horizon " +
                std::to_string(model.sim.horizon) + ", seed " + std::to_string(model.sim.seed) +
                "\n";
        if (!opts.out_dir.empty())
            export_traces(trajectories, model.plants, opts.out_dir, true);
        if (rank < 4) { rep["exit_code"] = res.exit_code; return finish(std::move(res), opts); }

        // verify
        const int violations = ly.total_analytic_violations();
        bool long_run_ok = true;
        for (const auto& p : ly.plants) long_run_ok = long_run_ok && p.long_run_ok;
        rep["verify"] = {{"analytic_violations", violations},
                         {"long_run_ok", long_run_ok},
                         {"transient", ly.transient}};
        advance("verify", rep["verify"].dump());
        if (violations > 0)
            throw NumericError("verify: expected decay fails on " + std::to_string(violations) +
                               " recorded steps past the transient");
        text += "verify: expected decay holds from step " + std::to_string(ly.transient) +
                " on all " + std::to_string(trajectories.size()) + " trajectories; long-run means " +
                (long_run_ok ? "within bounds" : "OUTSIDE bounds (see report)") + "\n";
    } catch (const ValidationError& e) {
        res.exit_code = 3;
        rep["error"] = {{"type", "validation"}, {"message", e.what()}};
        text += std::string("error (validation): ") + e.what() + "\n";
    } catch (const NotStabilizableError& e) {
        res.exit_code = 2;
        rep["error"] = {{"type", "not-stabilizable"}, {"stage", e.stage}, {"message", e.what()}};
        text += std::string("error (not stabilizable, ") + e.stage + "): " + e.what() + "\n";
    } catch (const NumericError& e) {
        res.exit_code = 4;
        rep["error"] = {{"type", "numeric"}, {"message", e.what()}};
        text += std::string("error (numeric): ") + e.what() + "\n";
    } catch (const std::exception& e) {
        res.exit_code = 4;
        rep["error"] = {{"type", "internal"}, {"message", e.what()}};
        text += std::string("error (internal): ") + e.what() + "\n";
    }
    rep["exit_code"] = res.exit_code;
    return finish(std::move(res), opts);
}

} // namespace opctl
