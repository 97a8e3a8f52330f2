#pragma once

// Homogeneous polynomials in coefficient form, degree prolongation of
// quadric systems, numerical rank decisions and catalecticant extraction.
//
// Coefficient convention: f(z) = sum_alpha c_alpha z^alpha with no hidden
// multinomial weights, so evaluation is the plain inner product <c, v_t(z)>
// with the monomial (Veronese) vector v_t(z) = (z^alpha)_alpha.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace phaseret {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Binomial coefficient C(n, k) in 64-bit arithmetic (0 when k > n).
std::uint64_t binomial(int n, int k);

/// All exponent vectors alpha in N^n with |alpha| = t, in graded
/// colexicographic order: alpha precedes beta when, at the last coordinate
/// where they differ, alpha is smaller.
class MonomialBasis {
public:
    MonomialBasis(int n, int t);

    int n() const noexcept { return n_; }
    int degree() const noexcept { return t_; }
    std::size_t size() const noexcept { return size_; }

    std::span<const int> exponent_at(std::size_t index) const;
    /// Position of alpha in the basis; throws on wrong length or degree.
    std::size_t index_of(std::span<const int> alpha) const;

    /// Number of degree-t monomials in n variables, C(n + t - 1, t).
    static std::size_t count(int n, int t);

private:
    int n_;
    int t_;
    std::size_t size_;
    std::vector<int> exponents_; // row-major, size_ x n_
};

/// v_t(z) = (z^alpha) over the basis.
VectorXd monomial_vector(const MonomialBasis& basis, const VectorXd& z);

struct FormCoeffs {
    int n = 0;
    int degree = 0;
    VectorXd c;

    double evaluate(const VectorXd& z) const;
};

/// X^T A X as a degree-2 form: c_{2e_i} = A_ii, c_{e_i+e_j} = 2 A_ij.
FormCoeffs quadric_from_matrix(const MatrixXd& a);

struct RankOptions {
    /// Threshold: count values <= rel_tol * sigma_max.
    /// Hybrid: values under that threshold are candidates; the codimension
    ///   is placed at the largest ratio gap among them (values below a
    ///   roundoff floor compare as equal).
    /// Gap: largest ratio gap in a trailing window, no threshold.
    enum class Rule { Threshold, Hybrid, Gap };
    Rule rule = Rule::Hybrid;
    double rel_tol = 1e-8;
    /// Gap rule: number of trailing singular values inspected; 0 picks a
    /// window from the number of variables.
    int gap_window = 0;
};

struct SpectralOptions {
    /// Matrices with at most this many columns get a full dense SVD; wider
    /// ones use a Gram-matrix shift-invert subspace iteration for the tail.
    std::size_t dense_column_limit = 1200;
    /// Number of trailing singular triplets computed in the iterative path
    /// under the threshold rule.
    int tail_size = 8;
};

struct ProlongationOptions {
    /// Degrees above this are refused.
    int max_degree = 12;
    RankOptions rank;
    SpectralOptions spectral;
};

struct ProlongationMatrix {
    int n = 0;
    int degree = 0;
    int num_quadrics = 0;
    /// One row per (monomial of degree t-2, quadric) pair; quadric-major.
    Eigen::SparseMatrix<double, Eigen::RowMajor> rows;

    /// Full spectrum, descending, padded with zeros up to the column count.
    /// Empty when only the tail was computed.
    VectorXd singular_values;
    bool spectrum_complete = false;
    double sigma_max = 0.0;
    /// Smallest singular values, ascending, and their right singular vectors.
    VectorXd tail_values;
    MatrixXd tail_vectors;

    RankOptions::Rule rule = RankOptions::Rule::Threshold;
    /// Absolute tolerance applied (threshold rule), or the winning gap ratio
    /// (gap rule).
    double rank_tolerance = 0.0;
    std::size_t rank = 0;
    std::size_t codim = 0;

    std::size_t row_count() const { return static_cast<std::size_t>(rows.rows()); }
    std::size_t col_count() const { return static_cast<std::size_t>(rows.cols()); }
};

/// Stack the coefficient vectors of m * q for every degree-(t-2) monomial m
/// and quadric q, then analyse the spectrum and estimate the codimension.
ProlongationMatrix prolong(std::span<const FormCoeffs> quadrics, int t,
                           const ProlongationOptions& options = {});

/// Codimension estimate from trailing singular values (ascending) under the
/// given rule. Exposed for testing and for re-deciding with other options.
std::size_t estimate_codim(const VectorXd& tail_ascending, double sigma_max, std::size_t columns,
                           int n, const RankOptions& options, double* tolerance_out = nullptr);

struct NullDirection {
    VectorXd vector; // unit norm
    /// sigma_{last-1} / sigma_last; infinite when sigma_last is exactly zero.
    double gap = 0.0;
};

NullDirection null_direction(const ProlongationMatrix& m);

struct CatalecticantOptions {
    /// Minimum ratio sigma_1 / sigma_2 accepted as a rank-one structure.
    double min_separation = 2.0;
};

struct CatalecticantResult {
    VectorXd direction; // unit norm, largest-magnitude entry positive
    double sigma1 = 0.0;
    double sigma2 = 0.0;
};

/// Rank-one factorisation of a degree-t moment vector through the n x
/// C(n+t-2, t-1) catalecticant C[i, beta] = m_{e_i + beta}.
CatalecticantResult catalecticant_extract(const VectorXd& moments, int n, int t,
                                          const CatalecticantOptions& options = {});

MatrixXd catalecticant_matrix(const VectorXd& moments, int n, int t);

} // namespace phaseret
