#pragma once

#include <map>
#include <vector>

#include "opctl/ffn.hpp"

// State-feedback synthesis on the compiled network. Given a set of good
// profiles (typically omega_set output), find the largest constrained
// control invariant subset of its state projection, certify that every other
// admissible state can reach it, and enumerate every feedback gain that
// steers along shortest admissible routes.

namespace opctl {

/// Sorted profile indices the closed loop is allowed to settle in.
using TargetSet = std::vector<int>;

/// A control invariant state set together with the controls that keep each
/// member inside while holding the profile in the target.
struct InvariantSet {
    std::vector<int> states;                   ///< sorted beta indices
    std::map<int, std::vector<int>> controls;  ///< beta -> sorted nonempty control set

    bool contains(int beta) const;
    bool empty() const { return states.empty(); }
};

/// State projection Phi of a target: admissible states that can realize some
/// target profile with an admissible control.
std::vector<int> phi_set(const TargetSet& target, const Constraints& cons, int state_count);

/// C_u^target(beta): admissible controls of beta whose profile lies in the
/// target.
std::vector<int> admissible_controls_for_target(int beta, const TargetSet& target,
                                                const Constraints& cons, int state_count);

/// Largest constrained control invariant subset of Phi(target): the fixed
/// point of discarding states with no target-respecting control whose
/// successor stays in the set.
InvariantSet lccis(const TransitionMatrix& trans, const TargetSet& target,
                   const Constraints& cons);

struct CcisCheck {
    bool ok = false;
    std::map<int, int> witness;        ///< beta -> smallest invariance-preserving control
    std::vector<int> failing_states;   ///< members with no such control
};

/// Checks whether the given state set is control invariant w.r.t. the target
/// (every member has an admissible target control with successor in the set).
CcisCheck verify_ccis(const std::vector<int>& states, const TransitionMatrix& trans,
                      const TargetSet& target, const Constraints& cons);

/// Reachability graph with the invariant core contracted to a single vertex
/// v0 and all transition edges reversed, so a search from v0 discovers the
/// states that can reach the core. Vertex 0 is v0; vertex i >= 1 is
/// vertex_states[i-1].
struct ContractedGraph {
    std::vector<int> vertex_states;          ///< sorted states of C_beta minus the core
    std::vector<std::vector<int>> out_edges; ///< per vertex id, sorted successor ids
    InvariantSet core;

    int vertex_count() const { return static_cast<int>(vertex_states.size()) + 1; }
    /// Vertex id of a state, or -1 when the state is not a vertex.
    int vertex_of(int beta) const;
};

/// Throws NotStabilizableError when the core is empty.
ContractedGraph build_contracted_graph(const TransitionMatrix& trans, const InvariantSet& core,
                                       const Constraints& cons);

/// Breadth-first certificate over the contracted graph. Ties are broken by
/// ascending vertex id, so depths, order and tree are deterministic.
struct BfsCertificate {
    bool covered = false;              ///< every vertex reached from v0
    std::vector<int> depth;            ///< per vertex id; -1 when unreached
    std::vector<int> parent;           ///< BFS tree parent id; -1 for v0 and unreached
    std::vector<int> order;            ///< discovery order, starts with v0
    std::vector<int> offending_states; ///< states of unreached vertices
};

BfsCertificate bfs_certificate(const ContractedGraph& graph);

/// Every stabilizing feedback gain, encoded per state as the set of control
/// indices that move one step along some shortest admissible route to the
/// core (core states keep their invariance controls, states outside C_beta
/// are unconstrained).
struct GainFamily {
    int state_count = 0;
    int control_count = 0;
    std::vector<std::vector<int>> options;  ///< per state (1-based outside), sorted options
    std::vector<int> depth_by_state;        ///< 0 on the core, BFS depth off it, -1 off C_beta

    /// Number of concrete gains; exact as long as it fits an IEEE double.
    double size() const;
    /// Smallest option per state.
    LogicalMatrix canonical() const;
    /// Materializes the family; throws ValidationError when size() > cap.
    std::vector<LogicalMatrix> enumerate(double cap = 1e6) const;
    bool is_member(const LogicalMatrix& gain) const;
};

/// Requires a covering certificate; throws NotStabilizableError otherwise.
GainFamily synthesize_gains(const TransitionMatrix& trans, const ContractedGraph& graph,
                            const BfsCertificate& cert, const Constraints& cons);

} // namespace opctl
