#include "phaseret/polyspace.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace phaseret {

std::uint64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) {
        // Exact: r * (n - k + i) is divisible by i at every step.
        r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    }
    return r;
}

// ---------------------------------------------------------------------------
// MonomialBasis

std::size_t MonomialBasis::count(int n, int t) {
    if (t < 0) return 0;
    if (n == 0) return t == 0 ? 1 : 0;
    return static_cast<std::size_t>(binomial(n + t - 1, t));
}

namespace {

// Appends the degree-t monomials of the first `vars` variables in colex order.
void enumerate(int vars, int t, std::vector<int>& prefix_tail, std::vector<int>& out) {
    if (vars == 1) {
        out.push_back(t);
        for (auto it = prefix_tail.rbegin(); it != prefix_tail.rend(); ++it) out.push_back(*it);
        return;
    }
    for (int a = 0; a <= t; ++a) {
        prefix_tail.push_back(a);
        enumerate(vars - 1, t - a, prefix_tail, out);
        prefix_tail.pop_back();
    }
}

} // namespace

MonomialBasis::MonomialBasis(int n, int t) : n_(n), t_(t), size_(count(n, t)) {
    if (n < 1) throw InvalidArgument("monomial basis needs at least one variable");
    if (t < 0) throw InvalidArgument("monomial degree must be >= 0");
    exponents_.reserve(size_ * static_cast<std::size_t>(n));
    std::vector<int> tail;
    tail.reserve(static_cast<std::size_t>(n));
    // The recursion fixes the last exponent first (outer loop ascending), so
    // the resulting order compares the last coordinate first.
    enumerate(n, t, tail, exponents_);
}

std::span<const int> MonomialBasis::exponent_at(std::size_t index) const {
    if (index >= size_) throw InvalidArgument("monomial index out of range");
    return {exponents_.data() + index * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_)};
}

std::size_t MonomialBasis::index_of(std::span<const int> alpha) const {
    if (static_cast<int>(alpha.size()) != n_) throw DimensionMismatch("exponent length differs from n");
    int deg = 0;
    for (int a : alpha) {
        if (a < 0) throw InvalidArgument("negative exponent");
        deg += a;
    }
    if (deg != t_) throw InvalidArgument("exponent has wrong total degree");
    std::size_t idx = 0;
    int remaining = t_;
    for (int v = n_ - 1; v >= 1; --v) {
        const int a = alpha[static_cast<std::size_t>(v)];
        // Monomials whose coordinate v is smaller come first; each block is a
        // full basis in the first v variables.
        for (int j = 0; j < a; ++j) idx += count(v, remaining - j);
        remaining -= a;
    }
    return idx;
}

VectorXd monomial_vector(const MonomialBasis& basis, const VectorXd& z) {
    if (z.size() != basis.n()) throw DimensionMismatch("point dimension differs from basis");
    VectorXd v(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
        auto alpha = basis.exponent_at(i);
        double p = 1.0;
        for (int j = 0; j < basis.n(); ++j) {
            for (int e = 0; e < alpha[static_cast<std::size_t>(j)]; ++e) p *= z(j);
        }
        v(static_cast<Eigen::Index>(i)) = p;
    }
    return v;
}

double FormCoeffs::evaluate(const VectorXd& z) const {
    const MonomialBasis basis(n, degree);
    if (static_cast<std::size_t>(c.size()) != basis.size()) {
        throw DimensionMismatch("coefficient vector does not match its basis");
    }
    return c.dot(monomial_vector(basis, z));
}

FormCoeffs quadric_from_matrix(const MatrixXd& a) {
    if (a.rows() != a.cols() || a.rows() < 1) throw DimensionMismatch("quadric matrix must be square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidArgument("quadric matrix is not symmetric");
    }
    const int n = static_cast<int>(a.rows());
    const MonomialBasis basis(n, 2);
    FormCoeffs f;
    f.n = n;
    f.degree = 2;
    f.c = VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
    std::vector<int> alpha(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            std::fill(alpha.begin(), alpha.end(), 0);
            alpha[static_cast<std::size_t>(i)] += 1;
            alpha[static_cast<std::size_t>(j)] += 1;
            const auto idx = static_cast<Eigen::Index>(basis.index_of(alpha));
            f.c(idx) = (i == j) ? a(i, i) : a(i, j) + a(j, i);
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Rank decisions

namespace {

int default_gap_window(int n) {
    const int half = std::max(1, n / 2);
    return static_cast<int>(std::max<std::uint64_t>(16, 2 * binomial(n, half)));
}

} // namespace

std::size_t estimate_codim(const VectorXd& tail, double sigma_max, std::size_t columns, int n,
                           const RankOptions& options, double* tolerance_out) {
    if (tail.size() == 0) return 0;
    if (!(sigma_max > 0.0)) {
        if (tolerance_out) *tolerance_out = 0.0;
        return columns;
    }
    if (options.rule == RankOptions::Rule::Threshold || tail.size() == 1) {
        const double tol = options.rel_tol * sigma_max;
        if (tolerance_out) *tolerance_out = tol;
        std::size_t c = 0;
        while (c < static_cast<std::size_t>(tail.size()) && tail(static_cast<Eigen::Index>(c)) <= tol) ++c;
        return c;
    }
    if (options.rule == RankOptions::Rule::Hybrid) {
        const double tol = options.rel_tol * sigma_max;
        if (tolerance_out) *tolerance_out = tol;
        Eigen::Index cands = 0;
        while (cands < tail.size() && tail(cands) <= tol) ++cands;
        if (cands == 0 || cands == tail.size()) return static_cast<std::size_t>(cands);
        const double floor = 64.0 * std::numeric_limits<double>::epsilon() * sigma_max;
        double best = 0.0;
        std::size_t codim = static_cast<std::size_t>(cands);
        for (Eigen::Index c = 1; c <= cands; ++c) {
            const double ratio = std::max(tail(c), floor) / std::max(tail(c - 1), floor);
            if (ratio > best) {
                best = ratio;
                codim = static_cast<std::size_t>(c);
            }
        }
        return codim;
    }
    const int window_opt = options.gap_window > 0 ? options.gap_window : default_gap_window(n);
    const Eigen::Index window = std::min<Eigen::Index>(window_opt, tail.size() - 1);
    const double floor = sigma_max * std::numeric_limits<double>::epsilon() * 1e-6;
    double best = -1.0;
    std::size_t codim = 0;
    for (Eigen::Index c = 1; c <= window; ++c) {
        const double ratio = tail(c) / std::max(tail(c - 1), floor);
        if (ratio > best) {
            best = ratio;
            codim = static_cast<std::size_t>(c);
        }
    }
    if (tolerance_out) *tolerance_out = best;
    return codim;
}

// ---------------------------------------------------------------------------
// Spectral analysis

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Tail {
    VectorXd values;  // ascending
    MatrixXd vectors; // matching columns
    VectorXd full;    // descending, padded; empty if not computed
    double sigma_max = 0.0;
};

Tail dense_tail(const SparseRows& rows) {
    const MatrixXd dense = MatrixXd(rows);
    const Eigen::Index cols = dense.cols();
    Tail out;
    out.full = VectorXd::Zero(cols);
    if (dense.rows() == 0) {
        out.values = VectorXd::Zero(cols);
        out.vectors = MatrixXd::Identity(cols, cols);
        return out;
    }
    Eigen::BDCSVD<MatrixXd> svd(dense, Eigen::ComputeFullV);
    const VectorXd& s = svd.singularValues();
    out.full.head(s.size()) = s;
    out.sigma_max = s.size() > 0 ? s(0) : 0.0;
    out.values = out.full.reverse();
    out.vectors = svd.matrixV().rowwise().reverse();
    return out;
}

double estimate_sigma_max(const SparseRows& rows) {
    const Eigen::Index cols = rows.cols();
    VectorXd v = VectorXd::Ones(cols) / std::sqrt(static_cast<double>(cols));
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        VectorXd w = rows.transpose() * (rows * v);
        const double nrm = w.norm();
        if (nrm == 0.0) return 0.0;
        const double prev = lambda;
        lambda = nrm;
        v = w / nrm;
        if (it > 5 && std::abs(lambda - prev) <= 1e-6 * lambda) break;
    }
    return std::sqrt(lambda);
}

MatrixXd orthonormalize(const MatrixXd& v) {
    Eigen::HouseholderQR<MatrixXd> qr(v);
    return qr.householderQ() * MatrixXd::Identity(v.rows(), v.cols());
}

// min ||M x|| over x = c + P w, where P projects onto the complement of
// span(fixed, c). Preconditioned CGLS: the Cholesky factor of the shifted
// Gram matrix is only a preconditioner, every residual is formed with M, so
// the result is not limited by the squared conditioning of M^T M.
VectorXd refine_null_vector(const SparseRows& rows, const Eigen::LLT<MatrixXd, Eigen::Lower>& llt,
                            const MatrixXd& fixed, VectorXd c) {
    const Eigen::Index cols = rows.cols();
    MatrixXd basis(cols, fixed.cols() + 1);
    basis.leftCols(fixed.cols()) = fixed;
    for (int pass = 0; pass < 2 && fixed.cols() > 0; ++pass) c -= fixed * (fixed.transpose() * c);
    c.normalize();
    basis.col(fixed.cols()) = c;
    const auto project = [&](VectorXd v) {
        v -= basis * (basis.transpose() * v);
        return v;
    };
    const auto& upper = llt.matrixU();
    const auto& lower = llt.matrixL();
    const auto apply = [&](const VectorXd& y) -> VectorXd {
        return rows * project(upper.solve(y));
    };
    const auto apply_t = [&](const VectorXd& r) -> VectorXd {
        return lower.solve(project(rows.transpose() * r));
    };

    VectorXd y = VectorXd::Zero(cols);
    VectorXd r = -(rows * c);
    const double r0 = r.norm();
    if (r0 == 0.0) return c;
    VectorXd g = apply_t(r);
    VectorXd dir = g;
    double gamma = g.squaredNorm();
    for (int it = 0; it < 60 && gamma > 0.0; ++it) {
        const VectorXd q = apply(dir);
        const double qq = q.squaredNorm();
        if (qq == 0.0) break;
        const double step = gamma / qq;
        y += step * dir;
        r -= step * q;
        g = apply_t(r);
        const double next = g.squaredNorm();
        if (std::sqrt(next) <= 1e-10 * r.norm()) break;
        dir = g + (next / gamma) * dir;
        gamma = next;
    }
    return (c + project(upper.solve(y))).normalized();
}

// Trailing right singular triplets of a wide sparse matrix through the Gram
// matrix G = M^T M: shift-invert block iteration on G for a starting
// subspace, then refinement of the leading vectors against M itself and a
// final Rayleigh-Ritz on M.
Tail iterative_tail(const SparseRows& rows, int p, int refine) {
    constexpr double near_null = 1e-6;
    const Eigen::Index cols = rows.cols();
    Tail out;
    out.sigma_max = estimate_sigma_max(rows);
    if (out.sigma_max == 0.0) {
        out.values = VectorXd::Zero(p);
        out.vectors = MatrixXd::Identity(cols, p);
        return out;
    }

    MatrixXd gram = MatrixXd::Zero(cols, cols);
    for (Eigen::Index r = 0; r < rows.outerSize(); ++r) {
        for (SparseRows::InnerIterator a(rows, r); a; ++a) {
            for (SparseRows::InnerIterator b(rows, r); b; ++b) {
                if (b.col() > a.col()) break;
                gram(a.col(), b.col()) += a.value() * b.value();
            }
        }
    }

    const double lambda_max = out.sigma_max * out.sigma_max;
    double shift = 1e-14 * lambda_max;
    Eigen::LLT<MatrixXd, Eigen::Lower> llt;
    for (int attempt = 0; attempt < 10; ++attempt) {
        MatrixXd shifted = gram;
        shifted.diagonal().array() += shift;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) break;
        shift *= 10.0;
    }
    if (llt.info() != Eigen::Success) throw IllConditioned("Gram matrix factorisation failed");
    gram.resize(0, 0);

    Rng rng(0x5eed5eedULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd v(cols, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < cols; ++i) v(i, j) = normal(rng);
    }
    v = orthonormalize(v);
    for (int it = 0; it < 6; ++it) {
        v = orthonormalize(llt.solve(v));
    }

    const auto ritz = [&](const MatrixXd& basis) {
        const MatrixXd w = rows * basis;
        Eigen::JacobiSVD<MatrixXd> small(w, Eigen::ComputeThinV);
        const VectorXd& s = small.singularValues();
        const Eigen::Index q = s.size();
        const MatrixXd vecs = basis * small.matrixV();
        out.values.resize(q);
        out.vectors.resize(cols, q);
        for (Eigen::Index j = 0; j < q; ++j) {
            out.values(j) = s(q - 1 - j);
            out.vectors.col(j) = vecs.col(q - 1 - j);
        }
    };
    ritz(v);

    // Only near-null directions need the refinement; stop at the first
    // vector that is clearly away from zero.
    const Eigen::Index limit = std::min<Eigen::Index>(refine, out.vectors.cols());
    MatrixXd refined(cols, out.vectors.cols());
    Eigen::Index m = 0;
    while (m < limit) {
        refined.col(m) = refine_null_vector(rows, llt, refined.leftCols(m), out.vectors.col(m));
        ++m;
        if ((rows * refined.col(m - 1)).norm() > near_null * out.sigma_max) break;
    }
    refined.rightCols(refined.cols() - m) = out.vectors.rightCols(refined.cols() - m);
    ritz(orthonormalize(refined));
    return out;
}

} // namespace

ProlongationMatrix prolong(std::span<const FormCoeffs> quadrics, int t,
                           const ProlongationOptions& options) {
    if (quadrics.empty()) throw InvalidArgument("prolongation of an empty quadric set");
    if (t < 2) throw InvalidArgument("prolongation degree must be >= 2");
    if (t > options.max_degree) {
        throw InvalidArgument("prolongation degree " + std::to_string(t) + " exceeds cap " +
                              std::to_string(options.max_degree));
    }
    const int n = quadrics.front().n;
    const MonomialBasis quad_basis(n, 2);
    for (const auto& q : quadrics) {
        if (q.n != n || q.degree != 2 || static_cast<std::size_t>(q.c.size()) != quad_basis.size()) {
            throw DimensionMismatch("prolongation inputs must be degree-2 forms in the same variables");
        }
    }
    const MonomialBasis mult_basis(n, t - 2);
    const MonomialBasis target(n, t);

    // Column index of (multiplier m, quadric monomial beta) is shared by all
    // quadrics; precompute it once.
    std::vector<std::size_t> product_index(mult_basis.size() * quad_basis.size());
    std::vector<int> alpha(static_cast<std::size_t>(n));
    for (std::size_t m = 0; m < mult_basis.size(); ++m) {
        auto em = mult_basis.exponent_at(m);
        for (std::size_t b = 0; b < quad_basis.size(); ++b) {
            auto eb = quad_basis.exponent_at(b);
            for (int j = 0; j < n; ++j) {
                alpha[static_cast<std::size_t>(j)] = em[static_cast<std::size_t>(j)] + eb[static_cast<std::size_t>(j)];
            }
            product_index[m * quad_basis.size() + b] = target.index_of(alpha);
        }
    }

    ProlongationMatrix out;
    out.n = n;
    out.degree = t;
    out.num_quadrics = static_cast<int>(quadrics.size());
    const auto row_count = static_cast<Eigen::Index>(quadrics.size() * mult_basis.size());
    const auto col_count = static_cast<Eigen::Index>(target.size());
    out.rows.resize(row_count, col_count);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(row_count) * quad_basis.size());
    Eigen::Index row = 0;
    for (const auto& q : quadrics) {
        for (std::size_t m = 0; m < mult_basis.size(); ++m, ++row) {
            for (std::size_t b = 0; b < quad_basis.size(); ++b) {
                const double v = q.c(static_cast<Eigen::Index>(b));
                if (v != 0.0) {
                    triplets.emplace_back(row, static_cast<Eigen::Index>(product_index[m * quad_basis.size() + b]), v);
                }
            }
        }
    }
    out.rows.setFromTriplets(triplets.begin(), triplets.end());
    out.rows.makeCompressed();

    Tail tail;
    if (static_cast<std::size_t>(col_count) <= options.spectral.dense_column_limit) {
        tail = dense_tail(out.rows);
        out.spectrum_complete = true;
        out.singular_values = tail.full;
    } else {
        int p = options.spectral.tail_size;
        if (options.rank.rule == RankOptions::Rule::Gap) {
            const int window = options.rank.gap_window > 0 ? options.rank.gap_window : default_gap_window(n);
            p = std::max(p, window + 1);
        }
        p = static_cast<int>(std::min<Eigen::Index>(std::max(p, 2), col_count));
        tail = iterative_tail(out.rows, p, options.spectral.tail_size);
        out.spectrum_complete = false;
    }
    out.sigma_max = tail.sigma_max;
    out.tail_values = std::move(tail.values);
    out.tail_vectors = std::move(tail.vectors);
    out.rule = options.rank.rule;
    out.codim = estimate_codim(out.tail_values, out.sigma_max, target.size(), n, options.rank,
                               &out.rank_tolerance);
    out.rank = target.size() - out.codim;
    return out;
}

NullDirection null_direction(const ProlongationMatrix& m) {
    if (m.codim != 1) {
        throw InvalidArgument("null direction requires codimension 1, got " + std::to_string(m.codim));
    }
    if (m.tail_vectors.cols() < 1) throw InvalidArgument("prolongation carries no spectral tail");
    NullDirection out;
    out.vector = m.tail_vectors.col(0).normalized();
    const double last = m.tail_values(0);
    const double prev = m.tail_values.size() > 1 ? m.tail_values(1) : m.sigma_max;
    out.gap = last > 0.0 ? prev / last : std::numeric_limits<double>::infinity();
    return out;
}

// ---------------------------------------------------------------------------
// Catalecticant

MatrixXd catalecticant_matrix(const VectorXd& moments, int n, int t) {
    if (t < 1) throw InvalidArgument("catalecticant needs degree >= 1");
    const MonomialBasis full(n, t);
    if (static_cast<std::size_t>(moments.size()) != full.size()) {
        throw DimensionMismatch("moment vector length does not match C(n+t-1, t)");
    }
    const MonomialBasis lower(n, t - 1);
    MatrixXd c(n, static_cast<Eigen::Index>(lower.size()));
    std::vector<int> alpha(static_cast<std::size_t>(n));
    for (std::size_t b = 0; b < lower.size(); ++b) {
        auto beta = lower.exponent_at(b);
        for (int i = 0; i < n; ++i) {
            std::copy(beta.begin(), beta.end(), alpha.begin());
            alpha[static_cast<std::size_t>(i)] += 1;
            c(i, static_cast<Eigen::Index>(b)) = moments(static_cast<Eigen::Index>(full.index_of(alpha)));
        }
    }
    return c;
}

CatalecticantResult catalecticant_extract(const VectorXd& moments, int n, int t,
                                          const CatalecticantOptions& options) {
    if (t < 2) throw InvalidArgument("catalecticant extraction needs degree >= 2");
    if (moments.size() == 0 || moments.cwiseAbs().maxCoeff() == 0.0) {
        throw InvalidArgument("catalecticant extraction of an all-zero moment vector");
    }
    const MatrixXd c = catalecticant_matrix(moments, n, t);
    Eigen::JacobiSVD<MatrixXd> svd(c, Eigen::ComputeThinU);
    const VectorXd& s = svd.singularValues();
    CatalecticantResult out;
    out.sigma1 = s(0);
    out.sigma2 = s.size() > 1 ? s(1) : 0.0;
    if (out.sigma2 > 0.0 && out.sigma1 / out.sigma2 < options.min_separation) {
        throw IllConditioned("catalecticant has no dominant rank-one component (sigma1/sigma2 = " +
                             std::to_string(out.sigma1 / out.sigma2) + ")");
    }
    VectorXd u = svd.matrixU().col(0);
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    if (u(imax) < 0.0) u = -u;
    out.direction = u.normalized();
    return out;
}

} // namespace phaseret
