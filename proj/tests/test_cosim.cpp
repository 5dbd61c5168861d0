#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "opctl/cosim.hpp"
#include "reference_model.hpp"

using namespace opctl;

namespace {

// Two-state autonomous network (kappa = 2, one state agent, no inputs).
// swap = true wires 1 -> 2 -> 1, otherwise both states hold.
TransitionMatrix tiny_net(bool swap) {
    TransitionMatrix t;
    t.kappa = 2;
    t.n = 1;
    t.m = 0;
    t.f = swap ? LogicalMatrix{2, {2, 1}} : LogicalMatrix{2, {1, 2}};
    return t;
}

PlantModel scalar_plant(double ac, double ao, double rho, double xi) {
    PlantModel p;
    p.a_closed = Eigen::MatrixXd::Constant(1, 1, ac);
    p.a_open = Eigen::MatrixXd::Constant(1, 1, ao);
    p.q = Eigen::MatrixXd::Identity(1, 1);
    p.xi = Eigen::MatrixXd::Constant(1, 1, xi);
    p.rho = rho;
    return p;
}

CouplingTable const_rows(int plants, int profiles, double value) {
    return CouplingTable::from_rows(Eigen::MatrixXd::Constant(plants, profiles, value));
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

SimConfig golden_config(int horizon, int reps, std::uint64_t seed) {
    SimConfig cfg;
    cfg.horizon = horizon;
    cfg.replications = reps;
    cfg.seed = seed;
    cfg.initial_states = refsys::constraints().c_beta;
    return cfg;
}

} // namespace

TEST_CASE("identical configs reproduce trajectories bit for bit") {
    const auto trans = refsys::transition();
    const auto cons = refsys::constraints();
    const auto plants = refsys::plants();
    const auto coupling = refsys::coupling();
    const auto gain = refsys::reference_gain();
    const SimConfig cfg = golden_config(20, 3, 7);

    const auto a = simulate_closed_loop(trans, cons, plants, coupling, gain, cfg);
    const auto b = simulate_closed_loop(trans, cons, plants, coupling, gain, cfg);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == 9u * 3u);
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].beta0 == b[t].beta0);
        CHECK(a[t].replication == b[t].replication);
        CHECK(a[t].beta == b[t].beta);
        CHECK(a[t].z == b[t].z);
        CHECK(a[t].sent == b[t].sent);
        for (std::size_t i = 0; i < a[t].x.size(); ++i)
            for (std::size_t k = 0; k < a[t].x[i].size(); ++k) {
                CHECK(a[t].x[i][k] == b[t].x[i][k]);
                CHECK(a[t].v[i][k] == b[t].v[i][k]);
            }
    }
}

TEST_CASE("changing the seed changes the packet outcomes") {
    const auto trans = refsys::transition();
    const auto cons = refsys::constraints();
    const auto plants = refsys::plants();
    const auto coupling = refsys::coupling();
    const auto gain = refsys::reference_gain();

    const auto a = simulate_closed_loop(trans, cons, plants, coupling, gain, golden_config(20, 3, 7));
    const auto b = simulate_closed_loop(trans, cons, plants, coupling, gain, golden_config(20, 3, 8));
    bool differs = false;
    for (std::size_t t = 0; t < a.size() && !differs; ++t)
        differs = a[t].sent != b[t].sent;
    CHECK(differs);
}

TEST_CASE("replication streams follow the documented seeding and draw order") {
    // xi = 0 keeps the state deterministic, so only the Bernoulli stream and
    // the (discarded) normal draws touch the generator. Replaying that exact
    // consumption pattern must reproduce every packet outcome.
    const auto trans = tiny_net(true);
    const auto cons = Constraints::unconstrained(2, 1);
    const std::vector<PlantModel> plants{scalar_plant(0.5, 0.9, 0.9, 0.0)};
    Eigen::MatrixXd rows(1, 2);
    rows << 0.25, 0.75;
    const auto coupling = CouplingTable::from_rows(rows);
    const LogicalMatrix gain{1, {1, 1}};

    SimConfig cfg;
    cfg.horizon = 40;
    cfg.replications = 4;
    cfg.seed = 99;
    cfg.initial_states = {1, 2};

    const auto trajs = simulate_closed_loop(trans, cons, plants, coupling, gain, cfg);
    REQUIRE(trajs.size() == 8u);
    for (const auto& tr : trajs) {
        std::mt19937_64 rng(splitmix64(
            splitmix64(cfg.seed + static_cast<std::uint64_t>(tr.beta0)) +
            static_cast<std::uint64_t>(tr.replication)));
        std::normal_distribution<double> stdnorm(0.0, 1.0);
        int beta = tr.beta0;
        for (int k = 0; k <= cfg.horizon; ++k) {
            CHECK(tr.beta[static_cast<std::size_t>(k)] == beta);
            const int z = z_index(1, beta, 2);
            CHECK(tr.z[static_cast<std::size_t>(k)] == z);
            std::bernoulli_distribution packet(coupling.at(0, z));
            const std::uint8_t want = packet(rng) ? 1 : 0;
            CHECK(tr.sent[0][static_cast<std::size_t>(k)] == want);
            if (k == cfg.horizon) break;
            stdnorm(rng);  // the plant noise draw, one per scalar plant
            beta = trans.next(z);
        }
    }
}

TEST_CASE("noise-free run with certain delivery follows the closed dynamics exactly") {
    const auto trans = tiny_net(false);
    const auto cons = Constraints::unconstrained(2, 1);
    const std::vector<PlantModel> plants{scalar_plant(0.5, 2.0, 0.3, 0.0)};
    const LogicalMatrix gain{1, {1, 1}};

    SimConfig cfg;
    cfg.horizon = 30;
    cfg.seed = 5;
    cfg.initial_states = {2};
    cfg.initial_x = {Eigen::VectorXd::Ones(1)};

    const auto trajs =
        simulate_closed_loop(trans, cons, plants, const_rows(1, 2, 1.0), gain, cfg);
    REQUIRE(trajs.size() == 1u);
    const auto& tr = trajs.front();
    for (int k = 0; k <= cfg.horizon; ++k) {
        CHECK(tr.sent[0][static_cast<std::size_t>(k)] == 1);
        CHECK(tr.x[0][static_cast<std::size_t>(k)](0) == std::ldexp(1.0, -k));
        CHECK(tr.v[0][static_cast<std::size_t>(k)] == std::ldexp(1.0, -2 * k));
    }
}

TEST_CASE("noise-free run with certain loss follows the open dynamics exactly") {
    const auto trans = tiny_net(false);
    const auto cons = Constraints::unconstrained(2, 1);
    const std::vector<PlantModel> plants{scalar_plant(0.5, 2.0, 0.3, 0.0)};
    const LogicalMatrix gain{1, {1, 1}};

    SimConfig cfg;
    cfg.horizon = 20;
    cfg.seed = 5;
    cfg.initial_states = {1};
    cfg.initial_x = {Eigen::VectorXd::Ones(1)};

    const auto trajs =
        simulate_closed_loop(trans, cons, plants, const_rows(1, 2, 0.0), gain, cfg);
    const auto& tr = trajs.front();
    for (int k = 0; k <= cfg.horizon; ++k) {
        CHECK(tr.sent[0][static_cast<std::size_t>(k)] == 0);
        CHECK(tr.x[0][static_cast<std::size_t>(k)](0) == std::ldexp(1.0, k));
    }
}

TEST_CASE("packet success frequency matches the coupling probability") {
    const auto trans = tiny_net(false);
    const auto cons = Constraints::unconstrained(2, 1);
    const std::vector<PlantModel> plants{scalar_plant(0.5, 1.1, 0.9, 1.0)};
    const LogicalMatrix gain{1, {1, 1}};

    SimConfig cfg;
    cfg.horizon = 1;
    cfg.replications = 50000;
    cfg.seed = 3;
    cfg.initial_states = {1};

    const auto trajs =
        simulate_closed_loop(trans, cons, plants, const_rows(1, 2, 0.5), gain, cfg);
    long total = 0, hits = 0;
    for (const auto& tr : trajs)
        for (std::uint8_t s : tr.sent[0]) {
            total += 1;
            hits += s;
        }
    CHECK(total == 100000);
    const double freq = static_cast<double>(hits) / static_cast<double>(total);
    CHECK(freq == doctest::Approx(0.5).epsilon(0.02));  // +- 0.01 absolute
}

TEST_CASE("reference gain absorbs every start into the target profile") {
    const auto trans = refsys::transition();
    const auto cons = refsys::constraints();
    const auto plants = refsys::plants();
    const auto coupling = refsys::coupling();
    const auto gain = refsys::reference_gain();

    const auto trajs =
        simulate_closed_loop(trans, cons, plants, coupling, gain, golden_config(10, 1, 42));
    REQUIRE(trajs.size() == 9u);
    for (const auto& tr : trajs)
        for (int k = 3; k <= 10; ++k) {
            CHECK(tr.beta[static_cast<std::size_t>(k)] == 3);
            CHECK(tr.z[static_cast<std::size_t>(k)] == 3);
        }
}

TEST_CASE("lyapunov report certifies the reference closed loop") {
    const auto trans = refsys::transition();
    const auto cons = refsys::constraints();
    const auto plants = refsys::plants();
    const auto coupling = refsys::coupling();
    const auto gain = refsys::reference_gain();

    const auto trajs =
        simulate_closed_loop(trans, cons, plants, coupling, gain, golden_config(40, 60, 11));
    const auto rep = lyapunov_report(trajs, plants, coupling, 3);
    CHECK(rep.transient == 3);
    CHECK(rep.total_analytic_violations() == 0);
    REQUIRE(rep.plants.size() == 2u);
    for (std::size_t i = 0; i < rep.plants.size(); ++i) {
        const auto& st = rep.plants[i];
        CHECK(st.analytic_violations == 0);
        CHECK(st.max_margin <= 1e-9);
        CHECK(st.long_run_ok);
        CHECK(st.mean_v.size() == 41u);
        CHECK(st.sd_v.size() == 41u);

        // Every trajectory sits at z = 3 from step 3 on, so that profile
        // dominates the transmission tally; its hit rate estimates Lambda_i[3].
        REQUIRE(st.transmission.count(3) == 1u);
        const auto [samples, hits] = st.transmission.at(3);
        CHECK(samples >= 9 * 60 * 38);
        const double lam = coupling.at(static_cast<int>(i), 3);
        const double freq = static_cast<double>(hits) / static_cast<double>(samples);
        const double sigma = std::sqrt(lam * (1.0 - lam) / static_cast<double>(samples));
        CHECK(std::abs(freq - lam) <= 4.0 * sigma + 1e-12);
    }
    CHECK_THROWS_AS(lyapunov_report({}, plants, coupling, 0), ValidationError);
}

TEST_CASE("config validation") {
    const auto trans = refsys::transition();
    const auto cons = refsys::constraints();
    const auto plants = refsys::plants();
    const auto coupling = refsys::coupling();
    const auto gain = refsys::reference_gain();

    SimConfig cfg = golden_config(5, 1, 1);
    cfg.horizon = 0;
    CHECK_THROWS_AS(simulate_closed_loop(trans, cons, plants, coupling, gain, cfg),
                    ValidationError);
    cfg = golden_config(5, 1, 1);
    cfg.replications = 0;
    CHECK_THROWS_AS(simulate_closed_loop(trans, cons, plants, coupling, gain, cfg),
                    ValidationError);
    cfg = golden_config(5, 1, 1);
    cfg.initial_states.clear();
    CHECK_THROWS_AS(simulate_closed_loop(trans, cons, plants, coupling, gain, cfg),
                    ValidationError);
    cfg = golden_config(5, 1, 1);
    cfg.initial_states = {10};
    CHECK_THROWS_AS(simulate_closed_loop(trans, cons, plants, coupling, gain, cfg),
                    ValidationError);
    cfg = golden_config(5, 1, 1);
    cfg.initial_x = {Eigen::VectorXd::Zero(1)};  // two plants, one vector
    CHECK_THROWS_AS(simulate_closed_loop(trans, cons, plants, coupling, gain, cfg),
                    ValidationError);
    cfg = golden_config(5, 1, 1);
    cfg.initial_x = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(3)};
    CHECK_THROWS_AS(simulate_closed_loop(trans, cons, plants, coupling, gain, cfg),
                    ValidationError);

    // Wrong gain shape.
    CHECK_THROWS_AS(simulate_closed_loop(trans, cons, plants, coupling,
                                         LogicalMatrix{3, {1, 1, 1}}, golden_config(5, 1, 1)),
                    ValidationError);
}

TEST_CASE("a gain that leaves the admissible profile set is reported as unsafe") {
    const auto trans = refsys::transition();
    const auto cons = refsys::constraints();
    const auto plants = refsys::plants();
    const auto coupling = refsys::coupling();
    // Control 3 is not allowed in states 1..4.
    const LogicalMatrix bad{3, {3, 1, 1, 1, 3, 2, 2, 2, 3}};

    SimConfig cfg = golden_config(5, 1, 1);
    cfg.initial_states = {1};
    try {
        simulate_closed_loop(trans, cons, plants, coupling, bad, cfg);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step 0") != std::string::npos);
    }
}

TEST_CASE("trace export writes the documented tables") {
    namespace fs = std::filesystem;
    const auto trans = refsys::transition();
    const auto cons = refsys::constraints();
    const auto plants = refsys::plants();
    const auto coupling = refsys::coupling();
    const auto gain = refsys::reference_gain();

    SimConfig cfg = golden_config(3, 2, 21);
    cfg.initial_states = {1, 3};
    const auto trajs = simulate_closed_loop(trans, cons, plants, coupling, gain, cfg);
    REQUIRE(trajs.size() == 4u);

    const fs::path dir = fs::temp_directory_path() / "opctl_cosim_export_test";
    fs::remove_all(dir);
    export_traces(trajs, plants, dir.string(), true);

    std::ifstream traces(dir / "traces.csv");
    REQUIRE(traces.good());
    std::string line;
    REQUIRE(std::getline(traces, line));
    CHECK(line == "beta0,replication,plant,k,beta,z,sent,v,x1,x2");
    int rows = 0;
    while (std::getline(traces, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4 * 2 * 4);  // trajectories x plants x (K+1)

    std::ifstream summary(dir / "summary.csv");
    REQUIRE(summary.good());
    REQUIRE(std::getline(summary, line));
    CHECK(line == "k,mean_v_1,mean_v_2,mean_x_1_1,mean_x_2_1,mean_x_2_2");
    rows = 0;
    while (std::getline(summary, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);

    std::ifstream svg(dir / "vbar.svg");
    REQUIRE(svg.good());
    std::stringstream buf;
    buf << svg.rdbuf();
    CHECK(buf.str().find("<svg") != std::string::npos);
    CHECK(buf.str().find("polyline") != std::string::npos);

    fs::remove_all(dir);

    CHECK_THROWS_AS(export_traces(trajs, plants, "/proc/nope", false), ValidationError);
}
