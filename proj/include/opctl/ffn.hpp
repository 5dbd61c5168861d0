#pragma once

#include <vector>

#include "opctl/stp.hpp"

// Networks of agents over the prime field F_kappa: n state agents and m
// input agents, each updating through mode-dependent weighted sums, with the
// active mode selected per profile by a switching map. Compilation turns the
// whole network into one logical transition matrix acting on the joint
// state-control profile z = u |x| beta, index z = (u-1)N + beta.

namespace opctl {

/// Mode selector: logical matrix Theta of shape w x (M*N); column z holds the
/// active mode for profile z.
struct SwitchingMap {
    int modes = 0;        ///< w
    LogicalMatrix theta;  ///< w x MN

    static SwitchingMap from_modes(int w, std::vector<int> mode_per_z);
    int mode_at(int z) const { return theta.at(z); }
};

/// Admissibility constraints: allowed states C_beta and, per allowed state,
/// the nonempty set of allowed controls C_u(beta).
struct Constraints {
    std::vector<int> c_beta;             ///< sorted state indices, subset of 1..N
    std::vector<std::vector<int>> c_u;   ///< size N, entry beta-1 sorted, nonempty iff beta in C_beta

    static Constraints unconstrained(int state_count, int control_count);
    bool state_admissible(int beta) const;
    const std::vector<int>& controls(int beta) const { return c_u[static_cast<std::size_t>(beta) - 1]; }
    void validate(int state_count, int control_count) const;
};

/// Coefficient-level description of the network. Coefficient a[i][j][sig] is
/// the weight of state agent j in the update of state agent i under mode
/// sig+1; b[i][l][sig] likewise for input agent l. All weights live in
/// 0..kappa-1.
struct FfnSpec {
    int kappa = 0;
    int n = 0;  ///< state agents
    int m = 0;  ///< input agents (0 allowed: autonomous network)
    int w = 0;  ///< modes
    std::vector<std::vector<std::vector<int>>> a;
    std::vector<std::vector<std::vector<int>>> b;
    SwitchingMap switching;
    Constraints constraints;

    int state_count() const;    ///< N = kappa^n
    int control_count() const;  ///< M = kappa^m
    int profile_count() const;  ///< MN = kappa^(n+m)
    void validate() const;
};

/// The compiled network: beta(k+1) = F |x| z(k) with F in L_{N x MN}.
struct TransitionMatrix {
    int kappa = 0, n = 0, m = 0;
    LogicalMatrix f;

    int state_count() const;
    int control_count() const;
    int profile_count() const;

    /// Successor state index for profile z.
    int next(int z) const { return f.at(z); }

    /// Blk_l(F): the N x N block of columns belonging to control index l.
    LogicalMatrix block(int l) const;

    void validate() const;
};

/// Profile index arithmetic for z = u |x| beta.
struct Profile {
    int u = 0;
    int beta = 0;
};
inline int z_index(int u, int beta, int state_count) { return (u - 1) * state_count + beta; }
inline Profile split_z(int z, int state_count) {
    return {(z - 1) / state_count + 1, (z - 1) % state_count + 1};
}

/// Compiles the network into its transition matrix. Works entirely in the
/// logical index domain; memory stays linear in the profile count.
TransitionMatrix compile_assr(const FfnSpec& spec);

/// Reference evaluation of one network step by direct modular arithmetic on
/// digit values (0-based), bypassing the matrix machinery entirely.
std::vector<int> step_direct(const FfnSpec& spec, const std::vector<int>& beta_values,
                             const std::vector<int>& u_values);

/// One step through the compiled matrix, on delta indices.
inline int step_algebraic(const TransitionMatrix& trans, int z) { return trans.next(z); }
inline int step_algebraic(const TransitionMatrix& trans, int u, int beta) {
    return trans.next(z_index(u, beta, trans.state_count()));
}

/// All admissible profiles C_z = {(u-1)N + beta : beta in C_beta, u in C_u(beta)},
/// sorted ascending.
std::vector<int> admissible_z_set(const Constraints& cons, int state_count);

} // namespace opctl
