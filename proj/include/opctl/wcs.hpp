#pragma once

#include <Eigen/Dense>
#include <vector>

#include "opctl/errors.hpp"

// Wireless control side: linear plants that receive their control input over
// a shared fading channel. Whether plant i's packet gets through during
// profile z is Bernoulli with probability Lambda_i[z], assembled from the
// per-profile fading level distribution, level decodability, channel state
// mixing and per-state success rates. Stability of each plant reduces to a
// per-plant threshold on that probability.

namespace opctl {

struct PlantModel {
    Eigen::MatrixXd a_closed;  ///< dynamics when the packet arrives
    Eigen::MatrixXd a_open;    ///< dynamics when it does not
    Eigen::MatrixXd q;         ///< Lyapunov weight, symmetric definite
    Eigen::MatrixXd xi;        ///< process noise covariance, symmetric PSD
    double rho = 0.0;          ///< required decay rate, in (0,1)

    int dim() const { return static_cast<int>(a_closed.rows()); }
    void validate(int plant_index) const;

    /// The positive definite representative of q (sign-flipped when q is
    /// negative definite). Throws NumericError for indefinite q.
    Eigen::MatrixXd lyapunov_weight() const;
};

/// Channel description for one plant. s fading levels, p channel states.
struct ChannelPrimitives {
    Eigen::MatrixXd gamma;  ///< s x MN, per-profile level distribution (columns sum to 1)
    Eigen::VectorXd h;      ///< s, 1 when the level is decodable
    Eigen::MatrixXd mu;     ///< p x s, channel state distribution given level (columns sum to 1)
    Eigen::MatrixXd eta;    ///< s x p, success probability per (level, state)

    void validate(int plant_index, int profile_count) const;
};

/// Per-plant packet success probabilities, one row per plant, one column per
/// profile z. Entries are clamped to [0,1]; clamping is recorded.
struct CouplingTable {
    Eigen::MatrixXd lambda;      ///< plants x profiles
    int clamped_entries = 0;
    double max_excursion = 0.0;  ///< largest distance outside [0,1] seen before clamping

    int plant_count() const { return static_cast<int>(lambda.rows()); }
    int profile_count() const { return static_cast<int>(lambda.cols()); }
    /// plant is 0-based, z is a 1-based profile index.
    double at(int plant, int z) const { return lambda(plant, z - 1); }

    /// Direct route: adopt externally supplied rows (validated to [0,1]).
    static CouplingTable from_rows(Eigen::MatrixXd rows);
};

/// Assembles Lambda from channel primitives:
///   alpha_z^i  = sum_a gamma^i(a,z) h_i(a)
///   mubar^i(b,z) = sum_c gamma^i(c,z) mu^i(b,c)
///   etabar_z^i = sum_{a,b} gamma^i(a,z) mubar^i(b,z) eta^i(a,b)
///   Lambda_i[z] = alpha_z^i etabar_z^i prod_{j!=i} (1 - alpha_z^j)
/// The trailing product is the probability that no other plant's packet is
/// decodable in the same slot.
CouplingTable coupling_rows(const std::vector<ChannelPrimitives>& channels, int profile_count);

/// Solves A' Q A - c Q = R by vectorization. Throws NumericError when the
/// Stein map is singular (c hits a product of eigenvalues of A).
Eigen::MatrixXd solve_stein(const Eigen::MatrixXd& a, double c, const Eigen::MatrixXd& r);

struct ThresholdResult {
    double raw = 0.0;      ///< smallest success probability meeting the decay rate
    double clamped = 0.0;  ///< raw clipped to [0,1]; this is what omega_set consumes
    Eigen::VectorXd direction;  ///< state direction attaining the threshold
    bool denominator_pd = false;   ///< B = Ao'QAo - Ac'QAc was positive definite
    bool unbounded_below = false;  ///< every probability works; raw is a search floor
};

/// Smallest success probability s such that the two-point mixture
///   lam * V(A_c x) + (1-lam) * V(A_o x) <= rho V(x)
/// holds for all x whenever lam >= s. With B positive definite this is the
/// largest generalized eigenvalue of (A, B), A = Ao'QAo - rho Q, i.e. the
/// supremum of the Rayleigh quotient y'Ay / y'By. Otherwise the feasible set
/// {lam : A - lam B <= 0} is located by bisection of the convex function
/// lam -> max_eig(A - lam B); the closed loop must meet the decay rate on its
/// own (lam = 1 feasible) or the threshold is undefined.
ThresholdResult success_threshold(const PlantModel& plant);

/// Profiles in c_z whose success probabilities clear every plant's clamped
/// threshold (non-strict comparison).
std::vector<int> omega_set(const CouplingTable& coupling,
                           const std::vector<ThresholdResult>& thresholds,
                           const std::vector<int>& c_z);

} // namespace opctl
