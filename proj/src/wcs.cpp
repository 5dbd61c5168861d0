#include "opctl/wcs.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

namespace opctl {

namespace {

std::string plant_tag(int plant_index) { return "plant " + std::to_string(plant_index + 1); }

void require_symmetric(const Eigen::MatrixXd& m, const std::string& what) {
    if (m.rows() != m.cols())
        throw ValidationError(what + " must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw ValidationError(what + " must be symmetric");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

} // namespace

void PlantModel::validate(int plant_index) const {
    const std::string tag = plant_tag(plant_index);
    const auto n = a_closed.rows();
    if (n < 1) throw ValidationError(tag + ": empty dynamics matrix");
    if (a_closed.cols() != n || a_open.rows() != n || a_open.cols() != n)
        throw ValidationError(tag + ": dynamics matrices must be square and of equal size");
    if (q.rows() != n || q.cols() != n)
        throw ValidationError(tag + ": Lyapunov weight size does not match the dynamics");
    if (xi.rows() != n || xi.cols() != n)
        throw ValidationError(tag + ": noise covariance size does not match the dynamics");
    if (!(rho > 0.0) || !(rho < 1.0))
        throw ValidationError(tag + ": decay rate must lie strictly inside (0,1), got " +
                              std::to_string(rho));
    require_symmetric(q, tag + ": Lyapunov weight");
    require_symmetric(xi, tag + ": noise covariance");
    lyapunov_weight();  // rejects indefinite or singular q
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(xi));
    if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
        throw ValidationError(tag + ": noise covariance must be positive semidefinite");
}

Eigen::MatrixXd PlantModel::lyapunov_weight() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(q));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double scale = std::max(std::abs(lo), std::abs(hi));
    if (scale <= 0.0 || std::min(std::abs(lo), std::abs(hi)) < 1e-12 * scale)
        throw NumericError("lyapunov weight is singular");
    if (lo > 0.0) return symmetrized(q);
    if (hi < 0.0) return -symmetrized(q);
    throw NumericError("lyapunov weight is indefinite: no definite representative");
}

void ChannelPrimitives::validate(int plant_index, int profile_count) const {
    const std::string tag = plant_tag(plant_index) + " channel";
    const auto s = gamma.rows();
    const auto p = mu.rows();
    if (s < 1) throw ValidationError(tag + ": at least one fading level required");
    if (gamma.cols() != profile_count)
        throw ValidationError(tag + ": gamma must have " + std::to_string(profile_count) +
                              " columns, got " + std::to_string(gamma.cols()));
    if (h.size() != s)
        throw ValidationError(tag + ": h must list one flag per fading level");
    if (mu.cols() != s || eta.rows() != s || eta.cols() != p)
        throw ValidationError(tag + ": mu must be p x s and eta s x p");
    for (Eigen::Index a = 0; a < s; ++a)
        if (h(a) != 0.0 && h(a) != 1.0)
            throw ValidationError(tag + ": h entries must be 0 or 1");
    auto check_stochastic = [&](const Eigen::MatrixXd& m, const char* name) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m.col(j).minCoeff() < -1e-12 || m.col(j).maxCoeff() > 1.0 + 1e-12)
                throw ValidationError(tag + ": " + name + " column " + std::to_string(j + 1) +
                                      " has entries outside [0,1]");
            if (std::abs(m.col(j).sum() - 1.0) > 1e-9)
                throw ValidationError(tag + ": " + name + " column " + std::to_string(j + 1) +
                                      " must sum to 1, got " + std::to_string(m.col(j).sum()));
        }
    };
    check_stochastic(gamma, "gamma");
    check_stochastic(mu, "mu");
    if (eta.minCoeff() < -1e-12 || eta.maxCoeff() > 1.0 + 1e-12)
        throw ValidationError(tag + ": eta entries must lie in [0,1]");
}

CouplingTable CouplingTable::from_rows(Eigen::MatrixXd rows) {
    CouplingTable t;
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
        for (Eigen::Index z = 0; z < rows.cols(); ++z) {
            const double v = rows(i, z);
            if (v < 0.0 || v > 1.0)
                throw ValidationError("coupling row " + std::to_string(i + 1) + ", profile " +
                                      std::to_string(z + 1) + ": probability " +
                                      std::to_string(v) + " outside [0,1]");
        }
    t.lambda = std::move(rows);
    return t;
}

CouplingTable coupling_rows(const std::vector<ChannelPrimitives>& channels, int profile_count) {
    const int q = static_cast<int>(channels.size());
    if (q < 1) throw ValidationError("coupling: at least one plant required");
    for (int i = 0; i < q; ++i) channels[static_cast<std::size_t>(i)].validate(i, profile_count);

    // alpha(i, z): probability that plant i's slot is decodable during z.
    Eigen::MatrixXd alpha(q, profile_count);
    for (int i = 0; i < q; ++i) {
        const auto& ch = channels[static_cast<std::size_t>(i)];
        alpha.row(i) = (ch.h.transpose() * ch.gamma).row(0);
    }

    CouplingTable out;
    out.lambda.resize(q, profile_count);
    for (int i = 0; i < q; ++i) {
        const auto& ch = channels[static_cast<std::size_t>(i)];
        for (int z = 0; z < profile_count; ++z) {
            const Eigen::VectorXd g = ch.gamma.col(z);
            const Eigen::VectorXd mubar = ch.mu * g;              // per channel state b
            const double etabar = g.dot(ch.eta * mubar);          // sum_a g_a sum_b mubar_b eta(a,b)
            double lam = alpha(i, z) * etabar;
            for (int j = 0; j < q; ++j)
                if (j != i) lam *= 1.0 - alpha(j, z);
            if (lam < 0.0 || lam > 1.0) {
                out.clamped_entries += 1;
                out.max_excursion =
                    std::max(out.max_excursion, lam < 0.0 ? -lam : lam - 1.0);
                lam = std::clamp(lam, 0.0, 1.0);
            }
            out.lambda(i, z) = lam;
        }
    }
    return out;
}

Eigen::MatrixXd solve_stein(const Eigen::MatrixXd& a, double c, const Eigen::MatrixXd& r) {
    const auto n = a.rows();
    if (a.cols() != n) throw ValidationError("solve_stein: dynamics matrix must be square");
    if (r.rows() != n || r.cols() != n)
        throw ValidationError("solve_stein: right hand side size does not match");
    Eigen::MatrixXd at = a.transpose();
    Eigen::MatrixXd k(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            k.block(i * n, j * n, n, n) = at(i, j) * at;
    k -= c * Eigen::MatrixXd::Identity(n * n, n * n);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    if (!lu.isInvertible())
        throw NumericError("solve_stein: Stein map is singular for c = " + std::to_string(c));
    Eigen::VectorXd vec_r = Eigen::Map<const Eigen::VectorXd>(r.data(), n * n);
    Eigen::VectorXd vec_q = lu.solve(vec_r);
    Eigen::MatrixXd q = Eigen::Map<Eigen::MatrixXd>(vec_q.data(), n, n);
    q = symmetrized(q);
    const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
    if ((a.transpose() * q * a - c * q - r).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw NumericError("solve_stein: residual exceeds tolerance");
    return q;
}

ThresholdResult success_threshold(const PlantModel& plant) {
    const Eigen::MatrixXd qw = plant.lyapunov_weight();
    const Eigen::MatrixXd open_term = symmetrized(plant.a_open.transpose() * qw * plant.a_open);
    const Eigen::MatrixXd a = symmetrized(open_term - plant.rho * qw);
    const Eigen::MatrixXd b =
        symmetrized(open_term - plant.a_closed.transpose() * qw * plant.a_closed);
    const double scale =
        std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    const double tol = 1e-12 * scale;

    ThresholdResult res;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> bes(b);
    if (bes.eigenvalues().minCoeff() > 1e-10 * scale) {
        // Dominant case: B > 0, the Rayleigh quotient attains its supremum at
        // the top generalized eigenvector.
        res.denominator_pd = true;
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(a, b);
        const auto last = ges.eigenvalues().size() - 1;
        res.raw = ges.eigenvalues()(last);
        res.direction = ges.eigenvectors().col(last);
    } else {
        // B is not positive definite: the quotient is unbounded, but the set
        // of feasible mixture weights {lam : A - lam B <= 0} is still an
        // interval by convexity of lam -> max_eig(A - lam B). It must contain
        // lam = 1, i.e. the closed loop alone meets the decay rate.
        auto worst = [&](double lam) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
                Eigen::MatrixXd(a - lam * b), Eigen::EigenvaluesOnly);
            return es.eigenvalues().maxCoeff();
        };
        if (worst(1.0) > tol)
            throw NumericError(
                "success_threshold: threshold undefined: closed loop does not dominate open loop");
        double hi = 1.0;  // known feasible
        double lo = 0.5;
        bool bracketed = false;
        for (double step = 0.5; lo > -1.0e6; step *= 2.0, lo -= step) {
            if (worst(lo) > tol) {
                bracketed = true;
                break;
            }
            hi = lo;
        }
        if (!bracketed) {
            res.raw = hi;  // last point verified feasible; search floor reached
            res.unbounded_below = true;
        } else {
            for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
                const double mid = 0.5 * (lo + hi);
                if (worst(mid) <= tol)
                    hi = mid;
                else
                    lo = mid;
            }
            res.raw = hi;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a - res.raw * b));
        res.direction = es.eigenvectors().col(es.eigenvalues().size() - 1);
    }
    if (!std::isfinite(res.raw))
        throw NumericError("success_threshold: non-finite threshold");
    res.clamped = std::clamp(res.raw, 0.0, 1.0);
    return res;
}

std::vector<int> omega_set(const CouplingTable& coupling,
                           const std::vector<ThresholdResult>& thresholds,
                           const std::vector<int>& c_z) {
    if (static_cast<int>(thresholds.size()) != coupling.plant_count())
        throw ValidationError("omega_set: one threshold per coupling row required");
    std::vector<int> omega;
    for (int z : c_z) {
        if (z < 1 || z > coupling.profile_count())
            throw ValidationError("omega_set: profile index " + std::to_string(z) +
                                  " outside the coupling table");
        bool ok = true;
        for (int i = 0; i < coupling.plant_count() && ok; ++i)
            ok = coupling.at(i, z) >= thresholds[static_cast<std::size_t>(i)].clamped;
        if (ok) omega.push_back(z);
    }
    return omega;
}

} // namespace opctl
