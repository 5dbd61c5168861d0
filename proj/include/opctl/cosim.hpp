#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "opctl/ffn.hpp"
#include "opctl/wcs.hpp"

// Joint rollout of the controlled network and the wireless plants: the gain
// picks the control profile, the profile fixes each plant's packet success
// probability, the sampled outcomes switch each plant between its closed and
// open dynamics, and the network moves on deterministically.

namespace opctl {

struct SimConfig {
    int horizon = 50;        ///< K: steps per trajectory (K+1 records)
    int replications = 1;    ///< R: independent runs per initial state
    std::uint64_t seed = 1;
    std::vector<int> initial_states;         ///< beta0 sweep; must be admissible
    std::vector<Eigen::VectorXd> initial_x;  ///< per plant; empty means all zeros
};

struct Trajectory {
    int beta0 = 0;
    int replication = 0;
    std::vector<int> beta;                        ///< K+1 state indices
    std::vector<int> z;                           ///< K+1 profile indices
    std::vector<std::vector<std::uint8_t>> sent;  ///< per plant, K+1 sampled outcomes
    std::vector<std::vector<Eigen::VectorXd>> x;  ///< per plant, K+1 states
    std::vector<std::vector<double>> v;           ///< per plant, K+1 Lyapunov values
};

/// Rolls out replications x initial states trajectories under the given gain.
///
/// Randomness: replication streams are decorrelated by seeding one
/// mt19937_64 per (beta0, replication) with splitmix64(splitmix64(seed + beta0)
/// + replication), so results do not depend on how many replications or
/// initial states run alongside. Per step the draw order is: one Bernoulli
/// per plant (packet outcomes), then dim(plant) normals per plant (noise).
/// Identical (seed, config) inputs reproduce trajectories bit for bit.
///
/// Throws NumericError when the rollout ever leaves the admissible profile
/// set; a synthesized gain never does, so this indicates a synthesis bug.
std::vector<Trajectory> simulate_closed_loop(const TransitionMatrix& trans,
                                             const Constraints& cons,
                                             const std::vector<PlantModel>& plants,
                                             const CouplingTable& coupling,
                                             const LogicalMatrix& gain, const SimConfig& config);

struct PlantLyapunovStats {
    int analytic_violations = 0;   ///< conditional decay failures for k >= transient
    double max_margin = 0.0;       ///< largest (lhs - rhs) seen, any sign
    double long_run_mean = 0.0;    ///< mean V over k >= transient
    double steady_state_bound = 0.0;  ///< tr(Q Xi) / (1 - rho)
    double sigma_mean = 0.0;       ///< std error of long_run_mean across trajectories
    bool long_run_ok = false;      ///< long_run_mean <= bound + 3 sigma
    std::vector<double> mean_v;    ///< per step, across trajectories
    std::vector<double> sd_v;      ///< per step sample sd
    int empirical_violations = 0;  ///< mean-curve decay failures beyond 3 sigma, k >= transient
    /// Per profile: (samples, successes) of the transmission outcome.
    std::map<int, std::pair<long, long>> transmission;
};

struct LyapunovReport {
    int transient = 0;
    std::vector<PlantLyapunovStats> plants;
    int total_analytic_violations() const;
};

/// Checks the conditional decay E[V(x(k+1)) | x(k), z(k)] <= rho V(x(k)) + tr(Q Xi)
/// analytically at every recorded step: the conditional expectation is the
/// exact two-point mixture Lambda V(A_c x) + (1 - Lambda) V(A_o x) + tr(Q Xi),
/// no sampling involved. The empirical mean curves are reported alongside for
/// comparison only.
LyapunovReport lyapunov_report(const std::vector<Trajectory>& trajectories,
                               const std::vector<PlantModel>& plants,
                               const CouplingTable& coupling, int transient);

/// Writes traces.csv (one row per plant and step) and summary.csv (per-step
/// means across trajectories) into dir; optionally a mean-V plot as vbar.svg.
/// Column orders are documented in the README.
void export_traces(const std::vector<Trajectory>& trajectories,
                   const std::vector<PlantModel>& plants, const std::string& dir,
                   bool write_plot);

} // namespace opctl
