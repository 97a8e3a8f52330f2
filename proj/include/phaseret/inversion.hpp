#pragma once

// Signal reconstruction from magnitude measurements.
//
// The ideal-regression inversion turns the k observed polynomials
// p_i = X^T A_i X - b_i into homogeneous quadrics
//     q_i = X^T (A_i / b_i - mean_j A_j / b_j) X,
// which all vanish on the line through the signal. Prolonging them degree by
// degree until the degree-t part of the ideal has codimension one leaves the
// moment vector v_t(z) as the only direction outside it; its catalecticant
// is rank one with left factor parallel to z. The scale follows from the
// measurements themselves.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phaseret/model.hpp"
#include "phaseret/polyspace.hpp"

namespace phaseret {

struct QuadricSet {
    int n = 0;
    std::vector<FormCoeffs> quadrics;
    /// Measurement index behind each retained quadric.
    std::vector<int> retained;
    /// Index of the quadric dropped after mean-centering.
    int dropped = -1;
};

/// Quadrics q_i = X^T (A_i/b_i - mean_j A_j/b_j) X for the k measurements,
/// minus the one of smallest coefficient norm (they sum to zero).
QuadricSet normalize_quadrics(const MeasurementEnsemble& ensemble, const Observation& obs,
                              double b_rel_tol = 1e-10);

struct ScaleFit {
    double alpha = 0.0; ///< multiplier: z_hat = alpha * direction
    VectorXd z_hat;
    bool fallback = false; ///< least-squares scale was used
};

/// Scale of a direction d so that (alpha d)^T A_i (alpha d) matches b_i:
/// log alpha = -1/2 mean_i [log(d^T A_i d) - log b_i]; when some quadratic
/// form value or measurement is non-positive, alpha^2 = sum b_i u_i / sum u_i^2.
ScaleFit recover_scale(const VectorXd& direction, const MeasurementEnsemble& ensemble,
                       const Observation& obs);

struct InversionOptions {
    /// Highest prolongation degree tried; 0 means n.
    int max_degree = 0;
    /// Rank rule; unset picks Hybrid for noiseless observations and Gap
    /// otherwise.
    std::optional<RankOptions::Rule> rank_rule;
    double rank_rel_tol = 1e-8;
    int gap_window = 0;
    SpectralOptions spectral;
    CatalecticantOptions catalecticant;
    /// Inversions whose codimension-one gap falls below this are rejected.
    double min_singular_gap = 2.0;
    double success_threshold = 1e-6;
    /// Exact data only: when the last degree leaves several candidate zero
    /// singular values, the smallest vector is still accepted if its
    /// catalecticant is rank one (sigma_2 / sigma_1 below this) and the
    /// signal it yields reproduces the measurements to this relative
    /// residual.
    double consistency_tol = 1e-5;
    /// Ground truth, when known, fills rel_error and success.
    std::optional<Signal> truth;
};

struct RecoveryReport {
    std::string solver;
    Signal z_hat = Signal::real(VectorXd::Zero(1));
    std::optional<double> rel_error;
    int stop_degree = 0;
    double singular_gap = 0.0;
    double alpha = 0.0;
    bool scale_fallback = false;
    bool success = false;
    bool underdetermined = false;
    /// Codimension one was certified by the consistency test.
    bool resolved_by_consistency = false;
    /// max_i |z^T A_i z - b_i| / max_i |b_i| at the estimate.
    double residual = 0.0;
    double catalecticant_ratio = 0.0;
    /// (degree, estimated codimension) for every prolongation tried.
    std::vector<std::pair<int, std::size_t>> codim_history;
    double wall_ms = 0.0;
};

/// Thrown errors: NotIdentifiable (codimension never reaches one),
/// NonGenericMeasurement, IllConditioned.
RecoveryReport invert_ideal_regression(const MeasurementEnsemble& ensemble, const Observation& obs,
                                       const InversionOptions& options = {});

/// Lifted linear least squares on Z = zz^T; exact once k >= n(n+1)/2.
RecoveryReport invert_lifted_least_squares(const MeasurementEnsemble& ensemble,
                                           const Observation& obs,
                                           const InversionOptions& options = {});

/// Ensemble A_1 = e_1 e_1^T, A_j = e_1 e_1^T + e_j e_1^T + e_1 e_j^T (j >= 2).
MeasurementEnsemble ramex_ensemble(int n);
/// z_1 = sqrt(b_1), z_j = (b_j - b_1) / (2 sqrt(b_1)).
Signal solve_ramex(const VectorXd& b, double tol = 1e-12);

/// Complex ensemble of 2n-1 measurements: A_1 = e_1 e_1^T, then
/// A_j = e_1 e_1^T + e_j e_1^T + e_1 e_j^T and
/// A~_j = e_1 e_1^T + i e_j e_1^T - i e_1 e_j^T for j = 2..n.
MeasurementEnsemble ex2b_ensemble(int n);
/// Splits an observation of ex2b_ensemble(n) into (b_1..b_n, c_2..c_n).
std::pair<VectorXd, VectorXd> split_ex2b_observation(const Observation& obs, int n);
/// Re z_j = (b_j - z_1^2) / (2 z_1), Im z_j = (c_j - z_1^2) / (2 z_1), z_1 = sqrt(b_1).
Signal solve_2b(const VectorXd& b, const VectorXd& c, double tol = 1e-12);

/// Largest-magnitude entry made positive (first one on ties).
VectorXd canonical_sign(const VectorXd& v);

} // namespace phaseret
