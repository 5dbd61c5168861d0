#include "opctl/stp.hpp"

#include <map>
#include <mutex>
#include <numeric>

namespace opctl {

LogicalMatrix LogicalMatrix::identity(int s) {
    std::vector<int> idx(static_cast<std::size_t>(s));
    std::iota(idx.begin(), idx.end(), 1);
    return {s, std::move(idx)};
}

DenseMatrix LogicalMatrix::to_dense() const {
    DenseMatrix d = DenseMatrix::Zero(rows, col_count());
    for (int j = 0; j < col_count(); ++j)
        d(cols[static_cast<std::size_t>(j)] - 1, j) = 1.0;
    return d;
}

void LogicalMatrix::check(const char* what) const {
    if (rows <= 0)
        throw ValidationError(std::string(what) + ": row count must be positive");
    for (int j = 0; j < col_count(); ++j) {
        int i = cols[static_cast<std::size_t>(j)];
        if (i < 1 || i > rows)
            throw ValidationError(std::string(what) + ": column " + std::to_string(j + 1) +
                                  " holds index " + std::to_string(i) + ", outside 1.." +
                                  std::to_string(rows));
    }
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

DenseMatrix stp(const DenseMatrix& m, const DenseMatrix& p) {
    const auto n = m.cols();
    const auto pr = p.rows();
    if (n == pr) return m * p;
    const auto l = std::lcm(n, pr);
    DenseMatrix left = kron(m, DenseMatrix::Identity(l / n, l / n));
    DenseMatrix right = kron(p, DenseMatrix::Identity(l / pr, l / pr));
    return left * right;
}

LogicalMatrix stp_logical(const LogicalMatrix& m, const LogicalMatrix& p) {
    // (M (x) I_a)(P (x) I_b) with a = l/n, b = l/p, l = lcm(n, p), traced
    // column by column. Column c of the result picks column j of P (with
    // residue r), which in turn lands in column jm of M (with residue rm).
    const std::int64_t n = m.col_count();
    const std::int64_t pr = p.rows;
    const std::int64_t l = std::lcm(n, pr);
    const std::int64_t a = l / n;
    const std::int64_t b = l / pr;
    LogicalMatrix out;
    out.rows = static_cast<int>(m.rows * a);
    out.cols.resize(static_cast<std::size_t>(p.col_count() * b));
    for (std::int64_t j = 0; j < p.col_count(); ++j) {
        const std::int64_t pj = p.cols[static_cast<std::size_t>(j)];
        for (std::int64_t r = 0; r < b; ++r) {
            const std::int64_t v = (pj - 1) * b + r;  // 0-based row in the inflated column
            const std::int64_t jm = v / a;
            const std::int64_t rm = v % a;
            const std::int64_t mi = m.cols[static_cast<std::size_t>(jm)];
            out.cols[static_cast<std::size_t>(j * b + r)] =
                static_cast<int>((mi - 1) * a + rm + 1);
        }
    }
    return out;
}

LogicalMatrix kron_identity(int r, const LogicalMatrix& k) {
    LogicalMatrix out;
    out.rows = r * k.rows;
    out.cols.reserve(static_cast<std::size_t>(r) * static_cast<std::size_t>(k.col_count()));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < k.col_count(); ++j)
            out.cols.push_back(i * k.rows + k.cols[static_cast<std::size_t>(j)]);
    return out;
}

LogicalMatrix swap_matrix(int s, int t) {
    LogicalMatrix w;
    w.rows = s * t;
    w.cols.resize(static_cast<std::size_t>(s) * static_cast<std::size_t>(t));
    for (int i = 1; i <= s; ++i)
        for (int j = 1; j <= t; ++j)
            w.cols[static_cast<std::size_t>((i - 1) * t + j) - 1] = (j - 1) * s + i;
    return w;
}

LogicalMatrix power_reducing_matrix(int s) {
    LogicalMatrix p;
    p.rows = s * s;
    p.cols.resize(static_cast<std::size_t>(s));
    for (int j = 1; j <= s; ++j)
        p.cols[static_cast<std::size_t>(j) - 1] = (j - 1) * s + j;
    return p;
}

bool is_prime(int n) {
    if (n < 2) return false;
    for (int d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

namespace {

void require_prime(int kappa, const char* op) {
    if (!is_prime(kappa))
        throw ValidationError(std::string(op) + ": kappa = " + std::to_string(kappa) +
                              " is not prime");
}

LogicalMatrix make_mod_table(int kappa, bool multiply) {
    LogicalMatrix f;
    f.rows = kappa;
    f.cols.resize(static_cast<std::size_t>(kappa) * static_cast<std::size_t>(kappa));
    for (int a = 0; a < kappa; ++a)
        for (int b = 0; b < kappa; ++b) {
            int v = multiply ? (a * b) % kappa : (a + b) % kappa;
            f.cols[static_cast<std::size_t>(a * kappa + b)] = v + 1;
        }
    return f;
}

LogicalMatrix memoized_mod_table(int kappa, bool multiply) {
    static std::mutex mu;
    static std::map<std::pair<int, bool>, LogicalMatrix> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.try_emplace({kappa, multiply});
    if (inserted) it->second = make_mod_table(kappa, multiply);
    return it->second;
}

} // namespace

LogicalMatrix mod_add_matrix(int kappa) {
    require_prime(kappa, "mod_add_matrix");
    return memoized_mod_table(kappa, false);
}

LogicalMatrix mod_mul_matrix(int kappa) {
    require_prime(kappa, "mod_mul_matrix");
    return memoized_mod_table(kappa, true);
}

LogicalMatrix stp_power(const LogicalMatrix& f, int p) {
    if (p < 0) throw ValidationError("stp_power: negative exponent");
    if (p == 0) return LogicalMatrix::identity(f.rows);
    LogicalMatrix r = f;
    for (int i = 1; i < p; ++i) r = stp_logical(r, f);
    return r;
}

int pack_values(const std::vector<int>& values, int kappa) {
    std::int64_t acc = 0;
    for (int v : values) {
        if (v < 0 || v >= kappa)
            throw ValidationError("pack_values: value " + std::to_string(v) +
                                  " outside 0.." + std::to_string(kappa - 1));
        acc = acc * kappa + v;
    }
    return static_cast<int>(acc + 1);
}

std::vector<int> unpack_values(int index, int kappa, int count) {
    std::vector<int> out(static_cast<std::size_t>(count));
    std::int64_t rem = index - 1;
    for (int i = count - 1; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = static_cast<int>(rem % kappa);
        rem /= kappa;
    }
    if (rem != 0)
        throw ValidationError("unpack_values: index " + std::to_string(index) +
                              " too large for kappa^" + std::to_string(count));
    return out;
}

} // namespace opctl
