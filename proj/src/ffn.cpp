#include "opctl/ffn.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

namespace opctl {

namespace {

std::int64_t ipow(int base, int exp) {
    std::int64_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

int checked_count(int kappa, int digits, const char* what) {
    std::int64_t c = ipow(kappa, digits);
    if (c > (std::int64_t{1} << 30))
        throw ValidationError(std::string(what) + ": kappa^" + std::to_string(digits) +
                              " exceeds the supported size");
    return static_cast<int>(c);
}

} // namespace

SwitchingMap SwitchingMap::from_modes(int w, std::vector<int> mode_per_z) {
    SwitchingMap sm;
    sm.modes = w;
    sm.theta = LogicalMatrix(w, std::move(mode_per_z));
    sm.theta.check("switching map");
    return sm;
}

Constraints Constraints::unconstrained(int state_count, int control_count) {
    Constraints c;
    c.c_beta.resize(static_cast<std::size_t>(state_count));
    std::iota(c.c_beta.begin(), c.c_beta.end(), 1);
    std::vector<int> all(static_cast<std::size_t>(control_count));
    std::iota(all.begin(), all.end(), 1);
    c.c_u.assign(static_cast<std::size_t>(state_count), all);
    return c;
}

bool Constraints::state_admissible(int beta) const {
    return std::binary_search(c_beta.begin(), c_beta.end(), beta);
}

void Constraints::validate(int state_count, int control_count) const {
    if (c_beta.empty())
        throw ValidationError("constraints: admissible state set is empty (infeasible model)");
    if (!std::is_sorted(c_beta.begin(), c_beta.end()) ||
        std::adjacent_find(c_beta.begin(), c_beta.end()) != c_beta.end())
        throw ValidationError("constraints: admissible state set must be sorted and duplicate free");
    if (c_beta.front() < 1 || c_beta.back() > state_count)
        throw ValidationError("constraints: state index outside 1.." + std::to_string(state_count));
    if (c_u.size() != static_cast<std::size_t>(state_count))
        throw ValidationError("constraints: control table must have one entry per state");
    for (int beta : c_beta) {
        const auto& us = c_u[static_cast<std::size_t>(beta) - 1];
        if (us.empty())
            throw ValidationError("constraints: no admissible control for state " +
                                  std::to_string(beta));
        if (!std::is_sorted(us.begin(), us.end()) ||
            std::adjacent_find(us.begin(), us.end()) != us.end())
            throw ValidationError("constraints: control set for state " + std::to_string(beta) +
                                  " must be sorted and duplicate free");
        if (us.front() < 1 || us.back() > control_count)
            throw ValidationError("constraints: control index for state " + std::to_string(beta) +
                                  " outside 1.." + std::to_string(control_count));
    }
}

int FfnSpec::state_count() const { return checked_count(kappa, n, "network"); }
int FfnSpec::control_count() const { return checked_count(kappa, m, "network"); }
int FfnSpec::profile_count() const { return checked_count(kappa, n + m, "network"); }

void FfnSpec::validate() const {
    if (!is_prime(kappa))
        throw ValidationError("network: kappa = " + std::to_string(kappa) + " is not prime");
    if (n < 1) throw ValidationError("network: at least one state agent required");
    if (m < 0) throw ValidationError("network: negative input agent count");
    if (w < 1) throw ValidationError("network: at least one mode required");
    auto check_table = [&](const auto& t, int inner, const char* name) {
        if (static_cast<int>(t.size()) != n)
            throw ValidationError(std::string("network: coefficient table ") + name +
                                  " must have one row per state agent");
        for (const auto& row : t) {
            if (static_cast<int>(row.size()) != inner)
                throw ValidationError(std::string("network: coefficient table ") + name +
                                      " has a row of wrong width");
            for (const auto& per_mode : row) {
                if (static_cast<int>(per_mode.size()) != w)
                    throw ValidationError(std::string("network: coefficient table ") + name +
                                          " must list one value per mode");
                for (int v : per_mode)
                    if (v < 0 || v >= kappa)
                        throw ValidationError(std::string("network: coefficient in ") + name +
                                              " outside 0.." + std::to_string(kappa - 1));
            }
        }
    };
    check_table(a, n, "a");
    check_table(b, m, "b");
    const int mn = profile_count();
    if (switching.modes != w || switching.theta.rows != w)
        throw ValidationError("network: switching map mode count does not match w");
    if (switching.theta.col_count() != mn)
        throw ValidationError("network: switching map must have " + std::to_string(mn) +
                              " columns, got " + std::to_string(switching.theta.col_count()));
    switching.theta.check("switching map");
    constraints.validate(state_count(), control_count());
}

int TransitionMatrix::state_count() const { return checked_count(kappa, n, "transition"); }
int TransitionMatrix::control_count() const { return checked_count(kappa, m, "transition"); }
int TransitionMatrix::profile_count() const { return checked_count(kappa, n + m, "transition"); }

LogicalMatrix TransitionMatrix::block(int l) const {
    const int N = state_count();
    LogicalMatrix b;
    b.rows = N;
    b.cols.assign(f.cols.begin() + static_cast<std::ptrdiff_t>(l - 1) * N,
                  f.cols.begin() + static_cast<std::ptrdiff_t>(l) * N);
    return b;
}

void TransitionMatrix::validate() const {
    if (!is_prime(kappa)) throw ValidationError("transition: kappa must be prime");
    if (n < 1 || m < 0) throw ValidationError("transition: bad digit counts");
    if (f.rows != state_count() || f.col_count() != profile_count())
        throw ValidationError("transition: matrix must be " + std::to_string(state_count()) +
                              " x " + std::to_string(profile_count()) + ", got " +
                              std::to_string(f.rows) + " x " + std::to_string(f.col_count()));
    f.check("transition matrix");
}

namespace {

/// Structure matrix of one mode-weighted digit: kappa x w, column sig holds
/// the encoded coefficient.
LogicalMatrix coeff_matrix(const std::vector<int>& per_mode, int kappa) {
    LogicalMatrix c;
    c.rows = kappa;
    c.cols.reserve(per_mode.size());
    for (int v : per_mode) c.cols.push_back(value_to_index(v));
    return c;
}

/// Folds the per-digit weighted terms of one agent row into a single logical
/// matrix of shape kappa^t x (w * kappa^t), t = row.size(). The factor for
/// digit j+1 reuses the shared leading mode digit: duplicate it (power
/// reduction), swap the copy past the digits consumed so far, then apply the
/// weighted term.
LogicalMatrix fold_weighted_row(const std::vector<std::vector<int>>& row, int kappa, int w) {
    const LogicalMatrix fx = mod_mul_matrix(kappa);
    LogicalMatrix acc = stp_logical(fx, coeff_matrix(row[0], kappa));
    for (std::size_t j = 1; j < row.size(); ++j) {
        const int consumed = w * static_cast<int>(ipow(kappa, static_cast<int>(j)));
        LogicalMatrix term = stp_logical(fx, coeff_matrix(row[j], kappa));
        LogicalMatrix factor = stp_logical(
            stp_logical(kron_identity(consumed, term), swap_matrix(w, consumed)),
            power_reducing_matrix(w));
        acc = stp_logical(acc, factor);
    }
    return acc;
}

} // namespace

TransitionMatrix compile_assr(const FfnSpec& spec) {
    spec.validate();
    const int kappa = spec.kappa;
    const int w = spec.w;
    const int N = spec.state_count();
    const int M = spec.control_count();
    const int MN = N * M;
    const LogicalMatrix fp = mod_add_matrix(kappa);

    // Shared tail: F_i |x| Theta |x| P_{r,MN} applied per profile column,
    // fused so the MN^2-column power-reducing matrix is never materialized.
    // Theta |x| P_{r,MN} sends z to the column (mode(z)-1)*MN + z of F_{i,3}.
    // When m = 0 there is no input digit, M = 1 and MN = N.
    auto apply_switch = [&](const LogicalMatrix& fi3) {
        LogicalMatrix fi;
        fi.rows = fi3.rows;
        fi.cols.resize(static_cast<std::size_t>(MN));
        for (int z = 1; z <= MN; ++z) {
            const int sig = spec.switching.theta.at(z);
            fi.cols[static_cast<std::size_t>(z) - 1] = fi3.at((sig - 1) * MN + z);
        }
        return fi;
    };

    std::vector<LogicalMatrix> per_agent;
    per_agent.reserve(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        LogicalMatrix fi1 = fold_weighted_row(spec.a[static_cast<std::size_t>(i)], kappa, w);
        LogicalMatrix fi3;
        if (spec.m >= 1) {
            LogicalMatrix fi2 = fold_weighted_row(spec.b[static_cast<std::size_t>(i)], kappa, w);
            LogicalMatrix g1 = stp_logical(stp_power(fp, spec.n), fi1);
            LogicalMatrix g2 = stp_logical(stp_power(fp, spec.m - 1), fi2);
            fi3 = stp_logical(
                stp_logical(stp_logical(g1, kron_identity(w * N, g2)),
                            kron_identity(w, swap_matrix(w * M, N))),
                power_reducing_matrix(w));
        } else {
            fi3 = stp_logical(stp_power(fp, spec.n - 1), fi1);
        }
        per_agent.push_back(apply_switch(fi3));
    }

    // Merge per-agent digit maps column by column into the joint state index.
    TransitionMatrix out;
    out.kappa = kappa;
    out.n = spec.n;
    out.m = spec.m;
    out.f.rows = N;
    out.f.cols.resize(static_cast<std::size_t>(MN));
    for (int z = 1; z <= MN; ++z) {
        std::int64_t acc = 0;
        for (const auto& fi : per_agent) acc = acc * kappa + (fi.at(z) - 1);
        out.f.cols[static_cast<std::size_t>(z) - 1] = static_cast<int>(acc + 1);
    }
    out.validate();
    return out;
}

std::vector<int> step_direct(const FfnSpec& spec, const std::vector<int>& beta_values,
                             const std::vector<int>& u_values) {
    if (static_cast<int>(beta_values.size()) != spec.n ||
        static_cast<int>(u_values.size()) != spec.m)
        throw ValidationError("step_direct: digit count mismatch");
    const int N = spec.state_count();
    const int beta = pack_values(beta_values, spec.kappa);
    const int u = spec.m > 0 ? pack_values(u_values, spec.kappa) : 1;
    const int z = z_index(u, beta, N);
    const int sig = spec.switching.mode_at(z) - 1;
    std::vector<int> next(static_cast<std::size_t>(spec.n));
    for (int i = 0; i < spec.n; ++i) {
        std::int64_t s = 0;
        for (int j = 0; j < spec.n; ++j)
            s += static_cast<std::int64_t>(
                     spec.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                           [static_cast<std::size_t>(sig)]) *
                 beta_values[static_cast<std::size_t>(j)];
        for (int l = 0; l < spec.m; ++l)
            s += static_cast<std::int64_t>(
                     spec.b[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)]
                           [static_cast<std::size_t>(sig)]) *
                 u_values[static_cast<std::size_t>(l)];
        next[static_cast<std::size_t>(i)] = static_cast<int>(s % spec.kappa);
    }
    return next;
}

std::vector<int> admissible_z_set(const Constraints& cons, int state_count) {
    std::vector<int> zs;
    for (int beta : cons.c_beta)
        for (int u : cons.controls(beta)) zs.push_back(z_index(u, beta, state_count));
    std::sort(zs.begin(), zs.end());
    return zs;
}

} // namespace opctl
