#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "opctl/errors.hpp"

// Semi-tensor product algebra over finite-field-valued logical vectors.
//
// A value v in {0,...,kappa-1} is encoded as the canonical basis vector
// delta_kappa^(v+1); a tuple of values is the semi-tensor product of its
// digits, which is again a basis vector whose index mixes the digits in
// big-endian order. All index arithmetic below is 1-based to match that
// delta convention.

namespace opctl {

using DenseMatrix = Eigen::MatrixXd;

/// Logical matrix in delta representation: an s x t matrix over {0,1} with
/// exactly one 1 per column, stored as the 1-based row index of that 1 for
/// each column. Written delta_s[i1 i2 ... it].
struct LogicalMatrix {
    int rows = 0;            ///< s
    std::vector<int> cols;   ///< t entries, each in 1..s

    LogicalMatrix() = default;
    LogicalMatrix(int s, std::vector<int> idx) : rows(s), cols(std::move(idx)) {}

    int col_count() const { return static_cast<int>(cols.size()); }

    /// 1-based column lookup: the row index of the single 1 in column j.
    int at(int j) const { return cols[static_cast<std::size_t>(j) - 1]; }

    static LogicalMatrix identity(int s);

    DenseMatrix to_dense() const;

    /// Throws ValidationError when any column index falls outside 1..rows.
    /// `what` names the matrix in the message.
    void check(const char* what) const;

    bool operator==(const LogicalMatrix&) const = default;
};

/// A logical column vector delta_s^i, i.e. a LogicalMatrix with one column.
using DeltaVector = LogicalMatrix;

/// Semi-tensor product M |x| P for arbitrary dense matrices:
///   M |x| P = (M (x) I_{l/n}) (P (x) I_{l/p}),  l = lcm(n, p),
/// where M is m x n and P is p x q. Falls back to the ordinary product when
/// n = p.
DenseMatrix stp(const DenseMatrix& m, const DenseMatrix& p);

/// Semi-tensor product restricted to logical matrices, computed entirely in
/// the index domain. Exact integer arithmetic, no dense intermediates; this
/// is the workhorse of the network compiler.
LogicalMatrix stp_logical(const LogicalMatrix& m, const LogicalMatrix& p);

/// Kronecker product of dense matrices.
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

/// [I_r (x) K] for logical K, again in the index domain.
LogicalMatrix kron_identity(int r, const LogicalMatrix& k);

/// Swap matrix W_[s,t] = [I_t (x) delta_s^1, ..., I_t (x) delta_s^s], the
/// st x st permutation with W_[s,t] |x| x |x| y = y |x| x for x in Delta_s,
/// y in Delta_t.
LogicalMatrix swap_matrix(int s, int t);

/// Power-reducing matrix P_{r,s} = diag(delta_s^1, ..., delta_s^s), the
/// s^2 x s logical matrix with P_{r,s} x = x |x| x for x in Delta_s.
LogicalMatrix power_reducing_matrix(int s);

/// Structure matrix of addition modulo kappa on delta-encoded values:
/// column (a-1)kappa + b holds (a-1 + b-1 mod kappa) + 1. Requires kappa
/// prime. Memoized.
LogicalMatrix mod_add_matrix(int kappa);

/// Structure matrix of multiplication modulo kappa; same layout and
/// requirements as mod_add_matrix. Memoized.
LogicalMatrix mod_mul_matrix(int kappa);

/// p-fold semi-tensor power of a logical matrix; p = 0 yields I_rows.
LogicalMatrix stp_power(const LogicalMatrix& f, int p);

constexpr int value_to_index(int v) { return v + 1; }
constexpr int index_to_value(int i) { return i - 1; }

/// Joint delta index of the tuple (v_1, ..., v_k) of values in
/// {0,...,kappa-1}: the index of delta^{v_1+1} |x| ... |x| delta^{v_k+1}.
int pack_values(const std::vector<int>& values, int kappa);

/// Inverse of pack_values: splits a 1-based joint index into `count` values.
std::vector<int> unpack_values(int index, int kappa, int count);

bool is_prime(int n);

} // namespace opctl
