#pragma once

// Brute-force oracles and random instance generation shared by the synthesis
// unit tests and the acceptance gate. Everything here enumerates rather than
// searches, so it is exponential and only usable on tiny instances.

#include <map>
#include <random>
#include <vector>

#include "opctl/synthesis.hpp"

namespace support {

struct RandomInstance {
    opctl::TransitionMatrix trans;
    opctl::Constraints cons;
    std::vector<int> target;  ///< sorted admissible profile subset
};

/// Random network, constraints and target. Shapes are capped so that both
/// subset enumeration (2^N) and law enumeration (prod |C_u|) stay tiny.
inline RandomInstance random_instance(std::mt19937& rng) {
    struct Shape { int kappa, n, m; };
    static const Shape shapes[] = {{2, 2, 1}, {2, 3, 1}, {2, 2, 2}, {3, 2, 1}, {2, 1, 1}};
    const Shape s = shapes[std::uniform_int_distribution<int>(0, 4)(rng)];

    RandomInstance inst;
    inst.trans.kappa = s.kappa;
    inst.trans.n = s.n;
    inst.trans.m = s.m;
    const int N = inst.trans.state_count();
    const int M = inst.trans.control_count();
    std::uniform_int_distribution<int> state(1, N);
    inst.trans.f.rows = N;
    for (int z = 0; z < N * M; ++z) inst.trans.f.cols.push_back(state(rng));
    inst.trans.validate();

    std::bernoulli_distribution keep(0.8);
    auto subset = [&](int count) {
        std::vector<int> out;
        for (int v = 1; v <= count; ++v)
            if (keep(rng)) out.push_back(v);
        if (out.empty()) out.push_back(std::uniform_int_distribution<int>(1, count)(rng));
        return out;
    };
    inst.cons.c_beta = subset(N);
    inst.cons.c_u.assign(static_cast<std::size_t>(N), {});
    for (int beta : inst.cons.c_beta) inst.cons.c_u[static_cast<std::size_t>(beta) - 1] = subset(M);
    inst.cons.validate(N, M);

    std::bernoulli_distribution pick(0.5);
    for (int z : opctl::admissible_z_set(inst.cons, N))
        if (pick(rng)) inst.target.push_back(z);
    return inst;
}

/// Largest control invariant subset by enumerating every subset of Phi and
/// taking the union of the invariant ones.
inline std::vector<int> brute_force_lccis(const opctl::TransitionMatrix& trans,
                                          const std::vector<int>& target,
                                          const opctl::Constraints& cons) {
    const int N = trans.state_count();
    const std::vector<int> phi = opctl::phi_set(target, cons, N);
    const int bits = static_cast<int>(phi.size());

    std::vector<bool> in_union(static_cast<std::size_t>(N) + 1, false);
    for (unsigned mask = 1; mask < (1u << bits); ++mask) {
        std::vector<bool> member(static_cast<std::size_t>(N) + 1, false);
        for (int b = 0; b < bits; ++b)
            if (mask & (1u << b)) member[static_cast<std::size_t>(phi[static_cast<std::size_t>(b)])] = true;
        bool invariant = true;
        for (int b = 0; b < bits && invariant; ++b) {
            if (!(mask & (1u << b))) continue;
            const int beta = phi[static_cast<std::size_t>(b)];
            bool has_control = false;
            for (int u : opctl::admissible_controls_for_target(beta, target, cons, N))
                if (member[static_cast<std::size_t>(trans.next(opctl::z_index(u, beta, N)))]) {
                    has_control = true;
                    break;
                }
            invariant = has_control;
        }
        if (invariant)
            for (int b = 0; b < bits; ++b)
                if (mask & (1u << b)) in_union[static_cast<std::size_t>(phi[static_cast<std::size_t>(b)])] = true;
    }
    std::vector<int> out;
    for (int beta = 1; beta <= N; ++beta)
        if (in_union[static_cast<std::size_t>(beta)]) out.push_back(beta);
    return out;
}

/// Whether one concrete law keeps every admissible start admissible forever
/// and settles it into a cycle whose profiles all lie in the target.
inline bool law_works(const opctl::TransitionMatrix& trans, const opctl::Constraints& cons,
                      const std::vector<int>& target, const std::vector<int>& law) {
    const int N = trans.state_count();
    for (int beta0 : cons.c_beta) {
        int beta = beta0;
        std::vector<bool> seen(static_cast<std::size_t>(N) + 1, false);
        while (true) {
            if (!cons.state_admissible(beta)) return false;
            if (seen[static_cast<std::size_t>(beta)]) break;
            seen[static_cast<std::size_t>(beta)] = true;
            beta = trans.next(opctl::z_index(law[static_cast<std::size_t>(beta)], beta, N));
        }
        const int start = beta;
        do {
            const int z = opctl::z_index(law[static_cast<std::size_t>(beta)], beta, N);
            if (!std::binary_search(target.begin(), target.end(), z)) return false;
            beta = trans.next(z);
            if (!cons.state_admissible(beta)) return false;
        } while (beta != start);
    }
    return true;
}

/// Existence of a stabilizing law by enumerating every map beta -> C_u(beta).
inline bool brute_force_stabilizable(const opctl::TransitionMatrix& trans,
                                     const std::vector<int>& target,
                                     const opctl::Constraints& cons) {
    const int N = trans.state_count();
    std::vector<int> law(static_cast<std::size_t>(N) + 1, 0);
    std::vector<std::size_t> pos(static_cast<std::size_t>(N) + 1, 0);
    for (int beta : cons.c_beta)
        law[static_cast<std::size_t>(beta)] = cons.controls(beta).front();
    while (true) {
        if (law_works(trans, cons, target, law)) return true;
        // odometer over the admissible states' control sets
        std::size_t i = 0;
        for (; i < cons.c_beta.size(); ++i) {
            const int beta = cons.c_beta[i];
            const auto& options = cons.controls(beta);
            if (++pos[static_cast<std::size_t>(beta)] < options.size()) {
                law[static_cast<std::size_t>(beta)] = options[pos[static_cast<std::size_t>(beta)]];
                break;
            }
            pos[static_cast<std::size_t>(beta)] = 0;
            law[static_cast<std::size_t>(beta)] = options.front();
        }
        if (i == cons.c_beta.size()) return false;
    }
}

/// The implementation's verdict on the same question.
inline bool certificate_stabilizable(const opctl::TransitionMatrix& trans,
                                     const std::vector<int>& target,
                                     const opctl::Constraints& cons) {
    try {
        const opctl::InvariantSet core = opctl::lccis(trans, target, cons);
        const opctl::ContractedGraph graph = opctl::build_contracted_graph(trans, core, cons);
        return opctl::bfs_certificate(graph).covered;
    } catch (const opctl::NotStabilizableError&) {
        return false;
    }
}

} // namespace support
