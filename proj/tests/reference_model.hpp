#pragma once

// Shared fixture: a ternary network (two state agents, one input agent,
// three modes) steering two plants over one fading channel. Unit and
// acceptance tests pin their expected sets, gains and thresholds against
// this system, so keep the numbers bit-for-bit stable.

#include <vector>

#include "opctl/ffn.hpp"
#include "opctl/wcs.hpp"

namespace refsys {

inline opctl::TransitionMatrix transition() {
    opctl::TransitionMatrix t;
    t.kappa = 3;
    t.n = 2;
    t.m = 1;
    t.f = opctl::LogicalMatrix{9, {1, 7, 3, 5, 2, 8, 2, 6, 1, 3, 9, 8, 4, 1, 7, 1, 5, 2,
                                   6, 6, 5, 1, 3, 9, 4, 4, 1}};
    t.validate();
    return t;
}

inline opctl::Constraints constraints() {
    opctl::Constraints c;
    c.c_beta = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    c.c_u.assign(9, {});
    for (int beta = 1; beta <= 4; ++beta) c.c_u[static_cast<std::size_t>(beta) - 1] = {1, 2};
    for (int beta = 5; beta <= 9; ++beta) c.c_u[static_cast<std::size_t>(beta) - 1] = {2, 3};
    c.validate(9, 3);
    return c;
}

inline const std::vector<double>& lambda_row_1() {
    static const std::vector<double> row = {0.53, 0.21, 0.53, 0.49, 0.21, 0.53, 0.16, 0.00, 0.20,
                                            0.49, 0.53, 0.21, 0.00, 0.21, 0.53, 0.00, 0.21, 0.53,
                                            0.00, 0.64, 0.64, 0.00, 0.21, 0.00, 0.00, 0.21, 0.53};
    return row;
}

inline const std::vector<double>& lambda_row_2() {
    static const std::vector<double> row = {0.67, 0.21, 0.67, 0.00, 0.00, 0.53, 0.00, 0.21, 0.53,
                                            0.32, 0.67, 0.53, 0.16, 0.00, 0.32, 0.00, 0.32, 0.00,
                                            0.00, 0.53, 0.16, 0.00, 0.67, 0.53, 0.00, 0.16, 0.00};
    return row;
}

inline opctl::CouplingTable coupling() {
    Eigen::MatrixXd rows(2, 27);
    for (int z = 0; z < 27; ++z) {
        rows(0, z) = lambda_row_1()[static_cast<std::size_t>(z)];
        rows(1, z) = lambda_row_2()[static_cast<std::size_t>(z)];
    }
    return opctl::CouplingTable::from_rows(rows);
}

inline std::vector<opctl::PlantModel> plants() {
    std::vector<opctl::PlantModel> ps(2);
    ps[0].a_closed = Eigen::MatrixXd::Constant(1, 1, 0.4);
    ps[0].a_open = Eigen::MatrixXd::Constant(1, 1, 1.1);
    ps[0].q = Eigen::MatrixXd::Identity(1, 1);
    ps[0].xi = Eigen::MatrixXd::Identity(1, 1);
    ps[0].rho = 0.75;

    ps[1].a_closed = Eigen::MatrixXd(2, 2);
    ps[1].a_closed << -0.4, -0.1, 0.1, 0.6;
    ps[1].a_open = Eigen::MatrixXd(2, 2);
    ps[1].a_open << -1.0, -0.4, -0.5, 0.3;
    ps[1].q = opctl::solve_stein(ps[1].a_closed, 0.7, Eigen::MatrixXd::Identity(2, 2));
    ps[1].xi = Eigen::MatrixXd::Identity(2, 2);
    ps[1].rho = 0.95;
    return ps;
}

/// Profiles clearing both plant thresholds within the admissible set.
inline const std::vector<int>& good_profiles() {
    static const std::vector<int> omega = {1, 3, 11};
    return omega;
}

/// The reference feedback gain (smallest member of the synthesized family).
inline opctl::LogicalMatrix reference_gain() {
    return opctl::LogicalMatrix{3, {2, 1, 1, 1, 3, 2, 2, 2, 3}};
}

} // namespace refsys
