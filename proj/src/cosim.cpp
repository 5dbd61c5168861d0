#include "opctl/cosim.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace opctl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Square factor S with S S' = xi, valid for any symmetric PSD xi.
Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& xi) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (xi + xi.transpose()));
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * lam.asDiagonal();
}

} // namespace

std::vector<Trajectory> simulate_closed_loop(const TransitionMatrix& trans,
                                             const Constraints& cons,
                                             const std::vector<PlantModel>& plants,
                                             const CouplingTable& coupling,
                                             const LogicalMatrix& gain, const SimConfig& config) {
    const int n_states = trans.state_count();
    const int n_controls = trans.control_count();
    const int q = static_cast<int>(plants.size());
    if (gain.rows != n_controls || gain.col_count() != n_states)
        throw ValidationError("simulate: gain must map " + std::to_string(n_states) +
                              " states to " + std::to_string(n_controls) + " controls");
    gain.check("gain");
    if (coupling.plant_count() != q)
        throw ValidationError("simulate: coupling table has " +
                              std::to_string(coupling.plant_count()) + " rows for " +
                              std::to_string(q) + " plants");
    if (coupling.profile_count() != trans.profile_count())
        throw ValidationError("simulate: coupling table column count does not match the network");
    if (config.horizon < 1) throw ValidationError("simulate: horizon must be at least 1");
    if (config.replications < 1) throw ValidationError("simulate: at least one replication");
    if (config.initial_states.empty())
        throw ValidationError("simulate: no initial states requested");
    for (int b : config.initial_states)
        if (!cons.state_admissible(b))
            throw ValidationError("simulate: initial state " + std::to_string(b) +
                                  " is not admissible");
    if (!config.initial_x.empty() && static_cast<int>(config.initial_x.size()) != q)
        throw ValidationError("simulate: one initial plant state per plant required");

    std::vector<Eigen::MatrixXd> qw(static_cast<std::size_t>(q));
    std::vector<Eigen::MatrixXd> noise(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) {
        plants[static_cast<std::size_t>(i)].validate(i);
        qw[static_cast<std::size_t>(i)] = plants[static_cast<std::size_t>(i)].lyapunov_weight();
        noise[static_cast<std::size_t>(i)] = noise_factor(plants[static_cast<std::size_t>(i)].xi);
        if (!config.initial_x.empty() &&
            config.initial_x[static_cast<std::size_t>(i)].size() !=
                plants[static_cast<std::size_t>(i)].dim())
            throw ValidationError("simulate: initial state of plant " + std::to_string(i + 1) +
                                  " has wrong dimension");
    }

    const int k_max = config.horizon;
    std::vector<Trajectory> out;
    out.reserve(config.initial_states.size() * static_cast<std::size_t>(config.replications));
    for (int beta0 : config.initial_states) {
        for (int rep = 0; rep < config.replications; ++rep) {
            std::mt19937_64 rng(splitmix64(
                splitmix64(config.seed + static_cast<std::uint64_t>(beta0)) +
                static_cast<std::uint64_t>(rep)));
            std::normal_distribution<double> stdnorm(0.0, 1.0);

            Trajectory tr;
            tr.beta0 = beta0;
            tr.replication = rep;
            tr.beta.reserve(static_cast<std::size_t>(k_max) + 1);
            tr.z.reserve(static_cast<std::size_t>(k_max) + 1);
            tr.sent.assign(static_cast<std::size_t>(q), {});
            tr.x.assign(static_cast<std::size_t>(q), {});
            tr.v.assign(static_cast<std::size_t>(q), {});

            std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(q));
            for (int i = 0; i < q; ++i)
                xs[static_cast<std::size_t>(i)] =
                    config.initial_x.empty()
                        ? Eigen::VectorXd::Zero(plants[static_cast<std::size_t>(i)].dim()).eval()
                        : config.initial_x[static_cast<std::size_t>(i)];

            int beta = beta0;
            for (int k = 0; k <= k_max; ++k) {
                const int u = gain.at(beta);
                if (!cons.state_admissible(beta) ||
                    !std::binary_search(cons.controls(beta).begin(), cons.controls(beta).end(), u))
                    throw NumericError("simulate: inadmissible profile at step " +
                                       std::to_string(k) + " (state " + std::to_string(beta) +
                                       ", control " + std::to_string(u) +
                                       "); the gain is not safe for this model");
                const int z = z_index(u, beta, n_states);
                tr.beta.push_back(beta);
                tr.z.push_back(z);
                for (int i = 0; i < q; ++i) {
                    std::bernoulli_distribution packet(coupling.at(i, z));
                    tr.sent[static_cast<std::size_t>(i)].push_back(packet(rng) ? 1 : 0);
                    tr.x[static_cast<std::size_t>(i)].push_back(xs[static_cast<std::size_t>(i)]);
                    tr.v[static_cast<std::size_t>(i)].push_back(
                        xs[static_cast<std::size_t>(i)].dot(qw[static_cast<std::size_t>(i)] *
                                                            xs[static_cast<std::size_t>(i)]));
                }
                if (k == k_max) break;
                for (int i = 0; i < q; ++i) {
                    const auto& p = plants[static_cast<std::size_t>(i)];
                    Eigen::VectorXd w(p.dim());
                    for (Eigen::Index d = 0; d < w.size(); ++d) w(d) = stdnorm(rng);
                    const bool got = tr.sent[static_cast<std::size_t>(i)].back() != 0;
                    xs[static_cast<std::size_t>(i)] =
                        (got ? p.a_closed : p.a_open) * xs[static_cast<std::size_t>(i)] +
                        noise[static_cast<std::size_t>(i)] * w;
                }
                beta = trans.next(z);
            }
            out.push_back(std::move(tr));
        }
    }
    return out;
}

int LyapunovReport::total_analytic_violations() const {
    int t = 0;
    for (const auto& p : plants) t += p.analytic_violations;
    return t;
}

LyapunovReport lyapunov_report(const std::vector<Trajectory>& trajectories,
                               const std::vector<PlantModel>& plants,
                               const CouplingTable& coupling, int transient) {
    if (trajectories.empty()) throw ValidationError("lyapunov_report: no trajectories");
    const int q = static_cast<int>(plants.size());
    const int steps = static_cast<int>(trajectories.front().z.size());
    LyapunovReport rep;
    rep.transient = transient;
    rep.plants.resize(static_cast<std::size_t>(q));

    for (int i = 0; i < q; ++i) {
        const auto& p = plants[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd qw = p.lyapunov_weight();
        const double tr_noise = (qw * p.xi).trace();
        auto& st = rep.plants[static_cast<std::size_t>(i)];
        st.steady_state_bound = tr_noise / (1.0 - p.rho);
        st.mean_v.assign(static_cast<std::size_t>(steps), 0.0);
        st.sd_v.assign(static_cast<std::size_t>(steps), 0.0);
        st.max_margin = -std::numeric_limits<double>::infinity();

        std::vector<double> traj_means;
        traj_means.reserve(trajectories.size());
        for (const auto& tr : trajectories) {
            double acc = 0.0;
            int cnt = 0;
            for (int k = 0; k < steps; ++k) {
                const double vk = tr.v[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                st.mean_v[static_cast<std::size_t>(k)] += vk;
                st.sd_v[static_cast<std::size_t>(k)] += vk * vk;
                auto& cell = st.transmission[tr.z[static_cast<std::size_t>(k)]];
                cell.first += 1;
                cell.second += tr.sent[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                const Eigen::VectorXd& xk =
                    tr.x[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                const double lam = coupling.at(i, tr.z[static_cast<std::size_t>(k)]);
                const double v_closed = (p.a_closed * xk).dot(qw * (p.a_closed * xk));
                const double v_open = (p.a_open * xk).dot(qw * (p.a_open * xk));
                const double lhs = lam * v_closed + (1.0 - lam) * v_open + tr_noise;
                const double rhs = p.rho * vk + tr_noise;
                if (k >= transient) {
                    const double margin = lhs - rhs;
                    st.max_margin = std::max(st.max_margin, margin);
                    if (margin > 1e-9 * std::max(1.0, std::abs(rhs))) st.analytic_violations += 1;
                    acc += vk;
                    cnt += 1;
                }
            }
            if (cnt > 0) traj_means.push_back(acc / cnt);
        }
        const double n_traj = static_cast<double>(trajectories.size());
        for (int k = 0; k < steps; ++k) {
            const double mean = st.mean_v[static_cast<std::size_t>(k)] / n_traj;
            const double ex2 = st.sd_v[static_cast<std::size_t>(k)] / n_traj;
            st.mean_v[static_cast<std::size_t>(k)] = mean;
            st.sd_v[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, ex2 - mean * mean));
        }
        double lm = 0.0;
        for (double m : traj_means) lm += m;
        lm /= static_cast<double>(traj_means.size());
        st.long_run_mean = lm;
        double var = 0.0;
        for (double m : traj_means) var += (m - lm) * (m - lm);
        var = traj_means.size() > 1 ? var / static_cast<double>(traj_means.size() - 1) : 0.0;
        st.sigma_mean = std::sqrt(var / static_cast<double>(traj_means.size()));
        st.long_run_ok = st.long_run_mean <= st.steady_state_bound + 3.0 * st.sigma_mean;

        // Secondary: decay of the empirical mean curve itself, with a 3 sigma
        // allowance on the step k+1 estimate.
        for (int k = transient; k + 1 < steps; ++k) {
            const double rhs = p.rho * st.mean_v[static_cast<std::size_t>(k)] + tr_noise;
            const double allowance =
                3.0 * st.sd_v[static_cast<std::size_t>(k) + 1] / std::sqrt(n_traj);
            if (st.mean_v[static_cast<std::size_t>(k) + 1] > rhs + allowance)
                st.empirical_violations += 1;
        }
    }
    return rep;
}

namespace {

void open_or_throw(std::ofstream& f, const std::filesystem::path& path) {
    f.open(path);
    if (!f) throw ValidationError("export: cannot write " + path.string());
}

void write_svg_plot(const std::filesystem::path& path,
                    const std::vector<std::vector<double>>& series) {
    std::ofstream f;
    open_or_throw(f, path);
    const int w = 800, h = 400, ml = 60, mb = 30, mt = 15, mr = 15;
    double vmax = 1e-12;
    std::size_t kmax = 1;
    for (const auto& s : series) {
        for (double v : s) vmax = std::max(vmax, v);
        kmax = std::max(kmax, s.size());
    }
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
      << "' stroke='black'/>\n";
    f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
    f << "<text x='" << ml << "' y='" << mt - 3 << "' font-size='11'>mean V per step (max "
      << vmax << ")</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        f << "<polyline fill='none' stroke='" << colors[s % 6] << "' stroke-width='1.5' points='";
        for (std::size_t k = 0; k < series[s].size(); ++k) {
            const double px =
                ml + (w - ml - mr) * (kmax > 1 ? static_cast<double>(k) / (kmax - 1) : 0.0);
            const double py = (h - mb) - (h - mb - mt) * (series[s][k] / vmax);
            f << px << "," << py << " ";
        }
        f << "'/>\n";
    }
    f << "</svg>\n";
}

} // namespace

void export_traces(const std::vector<Trajectory>& trajectories,
                   const std::vector<PlantModel>& plants, const std::string& dir,
                   bool write_plot) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    const int q = static_cast<int>(plants.size());
    int max_dim = 0;
    for (const auto& p : plants) max_dim = std::max(max_dim, p.dim());

    std::ofstream traces;
    open_or_throw(traces, fs::path(dir) / "traces.csv");
    traces.precision(17);
    traces << "beta0,replication,plant,k,beta,z,sent,v";
    for (int d = 1; d <= max_dim; ++d) traces << ",x" << d;
    traces << "\n";
    for (const auto& tr : trajectories) {
        for (int i = 0; i < q; ++i) {
            for (std::size_t k = 0; k < tr.z.size(); ++k) {
                traces << tr.beta0 << ',' << tr.replication << ',' << i + 1 << ',' << k << ','
                       << tr.beta[k] << ',' << tr.z[k] << ','
                       << static_cast<int>(tr.sent[static_cast<std::size_t>(i)][k]) << ','
                       << tr.v[static_cast<std::size_t>(i)][k];
                const auto& xk = tr.x[static_cast<std::size_t>(i)][k];
                for (int d = 0; d < max_dim; ++d) {
                    traces << ',';
                    if (d < xk.size()) traces << xk(d);
                }
                traces << "\n";
            }
        }
    }

    const std::size_t steps = trajectories.empty() ? 0 : trajectories.front().z.size();
    std::vector<std::vector<double>> mean_v(static_cast<std::size_t>(q),
                                            std::vector<double>(steps, 0.0));
    std::vector<std::vector<Eigen::VectorXd>> mean_x(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i)
        mean_x[static_cast<std::size_t>(i)].assign(
            steps, Eigen::VectorXd::Zero(plants[static_cast<std::size_t>(i)].dim()));
    for (const auto& tr : trajectories)
        for (int i = 0; i < q; ++i)
            for (std::size_t k = 0; k < steps; ++k) {
                mean_v[static_cast<std::size_t>(i)][k] += tr.v[static_cast<std::size_t>(i)][k];
                mean_x[static_cast<std::size_t>(i)][k] += tr.x[static_cast<std::size_t>(i)][k];
            }
    const double n_traj = trajectories.empty() ? 1.0 : static_cast<double>(trajectories.size());
    for (int i = 0; i < q; ++i)
        for (std::size_t k = 0; k < steps; ++k) {
            mean_v[static_cast<std::size_t>(i)][k] /= n_traj;
            mean_x[static_cast<std::size_t>(i)][k] /= n_traj;
        }

    std::ofstream summary;
    open_or_throw(summary, fs::path(dir) / "summary.csv");
    summary.precision(17);
    summary << "k";
    for (int i = 1; i <= q; ++i) summary << ",mean_v_" << i;
    for (int i = 0; i < q; ++i)
        for (int d = 1; d <= plants[static_cast<std::size_t>(i)].dim(); ++d)
            summary << ",mean_x_" << i + 1 << "_" << d;
    summary << "\n";
    for (std::size_t k = 0; k < steps; ++k) {
        summary << k;
        for (int i = 0; i < q; ++i) summary << ',' << mean_v[static_cast<std::size_t>(i)][k];
        for (int i = 0; i < q; ++i) {
            const auto& mx = mean_x[static_cast<std::size_t>(i)][k];
            for (Eigen::Index d = 0; d < mx.size(); ++d) summary << ',' << mx(d);
        }
        summary << "\n";
    }

    if (write_plot) write_svg_plot(fs::path(dir) / "vbar.svg", mean_v);
}

} // namespace opctl
