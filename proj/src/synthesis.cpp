#include "opctl/synthesis.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <set>
#include <stdexcept>

namespace opctl {

bool InvariantSet::contains(int beta) const {
    return std::binary_search(states.begin(), states.end(), beta);
}

std::vector<int> admissible_controls_for_target(int beta, const TargetSet& target,
                                                const Constraints& cons, int state_count) {
    std::vector<int> us;
    if (!cons.state_admissible(beta)) return us;
    for (int u : cons.controls(beta))
        if (std::binary_search(target.begin(), target.end(), z_index(u, beta, state_count)))
            us.push_back(u);
    return us;
}

std::vector<int> phi_set(const TargetSet& target, const Constraints& cons, int state_count) {
    std::vector<int> phi;
    for (int beta : cons.c_beta)
        if (!admissible_controls_for_target(beta, target, cons, state_count).empty())
            phi.push_back(beta);
    return phi;
}

InvariantSet lccis(const TransitionMatrix& trans, const TargetSet& target,
                   const Constraints& cons) {
    const int n = trans.state_count();
    std::vector<int> s = phi_set(target, cons, n);
    for (;;) {
        std::vector<int> kept;
        kept.reserve(s.size());
        for (int beta : s) {
            bool stays = false;
            for (int u : admissible_controls_for_target(beta, target, cons, n)) {
                if (std::binary_search(s.begin(), s.end(), trans.next(z_index(u, beta, n)))) {
                    stays = true;
                    break;
                }
            }
            if (stays) kept.push_back(beta);
        }
        if (kept.size() == s.size()) break;
        s = std::move(kept);
    }
    InvariantSet inv;
    inv.states = s;
    for (int beta : s) {
        std::vector<int> keepers;
        for (int u : admissible_controls_for_target(beta, target, cons, n))
            if (std::binary_search(s.begin(), s.end(), trans.next(z_index(u, beta, n))))
                keepers.push_back(u);
        inv.controls.emplace(beta, std::move(keepers));
    }
    return inv;
}

CcisCheck verify_ccis(const std::vector<int>& states, const TransitionMatrix& trans,
                      const TargetSet& target, const Constraints& cons) {
    const int n = trans.state_count();
    CcisCheck check;
    for (int beta : states) {
        int found = 0;
        for (int u : admissible_controls_for_target(beta, target, cons, n)) {
            if (std::binary_search(states.begin(), states.end(), trans.next(z_index(u, beta, n)))) {
                found = u;
                break;
            }
        }
        if (found)
            check.witness.emplace(beta, found);
        else
            check.failing_states.push_back(beta);
    }
    check.ok = !states.empty() && check.failing_states.empty();
    return check;
}

int ContractedGraph::vertex_of(int beta) const {
    auto it = std::lower_bound(vertex_states.begin(), vertex_states.end(), beta);
    if (it == vertex_states.end() || *it != beta) return -1;
    return static_cast<int>(it - vertex_states.begin()) + 1;
}

ContractedGraph build_contracted_graph(const TransitionMatrix& trans, const InvariantSet& core,
                                       const Constraints& cons) {
    if (core.empty())
        throw NotStabilizableError("invariant-core", "no invariant core: not stabilizable");
    const int n = trans.state_count();
    ContractedGraph g;
    g.core = core;
    for (int beta : cons.c_beta)
        if (!core.contains(beta)) g.vertex_states.push_back(beta);

    std::vector<std::set<int>> adj(static_cast<std::size_t>(g.vertex_count()));
    for (int beta : g.vertex_states) {
        const int va = g.vertex_of(beta);
        for (int u : cons.controls(beta)) {
            const int succ = trans.next(z_index(u, beta, n));
            if (core.contains(succ)) {
                adj[0].insert(va);  // reversed: reaching the core in one step
            } else {
                const int vb = g.vertex_of(succ);
                if (vb >= 0) adj[static_cast<std::size_t>(vb)].insert(va);
            }
        }
    }
    g.out_edges.resize(adj.size());
    for (std::size_t v = 0; v < adj.size(); ++v)
        g.out_edges[v].assign(adj[v].begin(), adj[v].end());
    return g;
}

BfsCertificate bfs_certificate(const ContractedGraph& graph) {
    const int v = graph.vertex_count();
    BfsCertificate cert;
    cert.depth.assign(static_cast<std::size_t>(v), -1);
    cert.parent.assign(static_cast<std::size_t>(v), -1);
    cert.depth[0] = 0;
    cert.order.push_back(0);
    std::deque<int> queue{0};
    while (!queue.empty()) {
        const int cur = queue.front();
        queue.pop_front();
        for (int nxt : graph.out_edges[static_cast<std::size_t>(cur)]) {
            if (cert.depth[static_cast<std::size_t>(nxt)] >= 0) continue;
            cert.depth[static_cast<std::size_t>(nxt)] = cert.depth[static_cast<std::size_t>(cur)] + 1;
            cert.parent[static_cast<std::size_t>(nxt)] = cur;
            cert.order.push_back(nxt);
            queue.push_back(nxt);
        }
    }
    cert.covered = static_cast<int>(cert.order.size()) == v;
    for (int id = 1; id < v; ++id)
        if (cert.depth[static_cast<std::size_t>(id)] < 0)
            cert.offending_states.push_back(graph.vertex_states[static_cast<std::size_t>(id) - 1]);
    return cert;
}

double GainFamily::size() const {
    double s = 1.0;
    for (const auto& opts : options) s *= static_cast<double>(opts.size());
    return s;
}

LogicalMatrix GainFamily::canonical() const {
    LogicalMatrix l;
    l.rows = control_count;
    l.cols.reserve(options.size());
    for (const auto& opts : options) l.cols.push_back(opts.front());
    return l;
}

std::vector<LogicalMatrix> GainFamily::enumerate(double cap) const {
    if (size() > cap)
        throw ValidationError("gain family has " + std::to_string(size()) +
                              " members, above the enumeration cap");
    std::vector<LogicalMatrix> all;
    LogicalMatrix work;
    work.rows = control_count;
    work.cols.assign(options.size(), 0);
    // Odometer over the per-state option lists, last state fastest.
    std::vector<std::size_t> pos(options.size(), 0);
    for (;;) {
        for (std::size_t a = 0; a < options.size(); ++a) work.cols[a] = options[a][pos[a]];
        all.push_back(work);
        std::size_t a = options.size();
        while (a > 0) {
            --a;
            if (++pos[a] < options[a].size()) break;
            pos[a] = 0;
            if (a == 0) return all;
        }
    }
}

bool GainFamily::is_member(const LogicalMatrix& gain) const {
    if (gain.rows != control_count || gain.col_count() != state_count) return false;
    for (int a = 1; a <= state_count; ++a) {
        const auto& opts = options[static_cast<std::size_t>(a) - 1];
        if (!std::binary_search(opts.begin(), opts.end(), gain.at(a))) return false;
    }
    return true;
}

GainFamily synthesize_gains(const TransitionMatrix& trans, const ContractedGraph& graph,
                            const BfsCertificate& cert, const Constraints& cons) {
    if (!cert.covered)
        throw NotStabilizableError(
            "reachability",
            "cannot synthesize gains: some admissible states never reach the invariant core");
    const int n = trans.state_count();
    const int m = trans.control_count();
    GainFamily fam;
    fam.state_count = n;
    fam.control_count = m;
    fam.options.resize(static_cast<std::size_t>(n));
    fam.depth_by_state.assign(static_cast<std::size_t>(n), -1);

    std::vector<int> all_controls(static_cast<std::size_t>(m));
    std::iota(all_controls.begin(), all_controls.end(), 1);

    for (int beta = 1; beta <= n; ++beta) {
        auto& slot = fam.options[static_cast<std::size_t>(beta) - 1];
        if (graph.core.contains(beta)) {
            slot = graph.core.controls.at(beta);
            fam.depth_by_state[static_cast<std::size_t>(beta) - 1] = 0;
            if (slot.empty())
                throw std::logic_error("synthesize_gains: core state " + std::to_string(beta) +
                                       " carries no invariance control");
            continue;
        }
        const int va = graph.vertex_of(beta);
        if (va < 0) {
            slot = all_controls;  // off C_beta: never visited, any column works
            continue;
        }
        const int d = cert.depth[static_cast<std::size_t>(va)];
        fam.depth_by_state[static_cast<std::size_t>(beta) - 1] = d;
        for (int u : cons.controls(beta)) {
            const int succ = trans.next(z_index(u, beta, n));
            if (d == 1) {
                if (graph.core.contains(succ)) slot.push_back(u);
            } else {
                const int vb = graph.vertex_of(succ);
                if (vb >= 0 && cert.depth[static_cast<std::size_t>(vb)] == d - 1)
                    slot.push_back(u);
            }
        }
        if (slot.empty())
            throw std::logic_error("synthesize_gains: no shortest-route control for state " +
                                   std::to_string(beta) + " despite a covering certificate");
    }
    return fam;
}

} // namespace opctl
