#pragma once

// Signals, measurement ensembles and the forward magnitude-measurement maps.
//
// Real signals z in R^n are measured through symmetric matrices A = P^T P,
// b = z^T A z = |P z|^2. Complex signals z = x + i y are kept split into
// their real and imaginary parts; a complex projector P = Q + i S enters
// through the pair B = Q^T Q + S^T S (symmetric) and C = Q^T S - S^T Q
// (antisymmetric), with P^* P = B + i C.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phaseret/rng.hpp"

namespace phaseret {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

enum class Mode { Real, ComplexSplit };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);

class Signal {
public:
    static Signal real(VectorXd x);
    static Signal complex_split(VectorXd x, VectorXd y);
    static Signal from_complex(const VectorXcd& z);

    Mode mode() const noexcept { return mode_; }
    int n() const noexcept { return static_cast<int>(x_.size()); }

    /// Real part (the whole signal in Real mode).
    const VectorXd& x() const noexcept { return x_; }
    /// Imaginary part; a zero vector in Real mode.
    const VectorXd& y() const noexcept { return y_; }

    VectorXcd as_complex() const;
    double norm() const;
    Signal negated() const;

private:
    Signal(Mode mode, VectorXd x, VectorXd y);

    Mode mode_;
    VectorXd x_;
    VectorXd y_;
};

enum class ProjectorDistribution { GenericGaussian, HaarOrthogonal, Explicit };

const char* to_string(ProjectorDistribution d);
ProjectorDistribution distribution_from_string(const std::string& s);

struct ProjectorSpec {
    int n = 1;
    int rank = 1;
    ProjectorDistribution distribution = ProjectorDistribution::HaarOrthogonal;
    Mode mode = Mode::Real;
    /// Only for Explicit: either one projector reused for every measurement,
    /// or exactly k of them. Real mode requires zero imaginary parts.
    std::vector<MatrixXcd> explicit_projectors;

    void validate() const;
};

class MeasurementMatrix {
public:
    /// Symmetric real measurement. Inputs asymmetric beyond 1e-12 (relative
    /// to the largest entry) are rejected; the stored matrix is exactly
    /// symmetric.
    static MeasurementMatrix real(const MatrixXd& a, int rank_bound = -1);
    static MeasurementMatrix complex_split(const MatrixXd& b, const MatrixXd& c,
                                           int rank_bound = -1);
    /// A = P^T P.
    static MeasurementMatrix from_projector(const MatrixXd& p);
    /// (B, C) from P = Q + iS.
    static MeasurementMatrix from_projector(const MatrixXcd& p);

    Mode mode() const noexcept { return mode_; }
    int n() const noexcept { return static_cast<int>(sym_.rows()); }
    int rank_bound() const noexcept { return rank_bound_; }

    /// A in Real mode, B in ComplexSplit mode.
    const MatrixXd& sym() const noexcept { return sym_; }
    /// C in ComplexSplit mode; an empty matrix in Real mode.
    const MatrixXd& skew() const noexcept { return skew_; }

    /// The value the forward map assigns to signal z.
    double measure(const Signal& z) const;

private:
    MeasurementMatrix(Mode mode, MatrixXd sym, MatrixXd skew, int rank_bound);

    Mode mode_;
    MatrixXd sym_;
    MatrixXd skew_;
    int rank_bound_;
};

struct MeasurementEnsemble {
    Mode mode = Mode::Real;
    int n = 0;
    std::vector<MeasurementMatrix> matrices;
    ProjectorSpec spec;
    std::optional<std::uint64_t> seed;

    int k() const noexcept { return static_cast<int>(matrices.size()); }
    /// Largest rank bound over the matrices.
    int rank() const;

    static MeasurementEnsemble from_matrices(std::vector<MeasurementMatrix> matrices);
    void validate() const;
};

struct Observation {
    VectorXd b;
    double sigma = 0.0;
    std::optional<VectorXd> clean;

    int k() const noexcept { return static_cast<int>(b.size()); }
};

/// Uniform sample on the unit sphere of R^n (Real) or C^n (ComplexSplit).
Signal sample_signal(int n, Mode mode, Rng& rng);

MatrixXd sample_gaussian(int rows, int cols, Rng& rng);
/// Haar-distributed orthogonal matrix (QR of a Gaussian, R diagonal made positive).
MatrixXd sample_haar_orthogonal(int n, Rng& rng);
/// Haar-distributed unitary matrix.
MatrixXcd sample_haar_unitary(int n, Rng& rng);

MeasurementEnsemble make_ensemble(const ProjectorSpec& spec, int k, Rng& rng);

Observation forward_measure(const Signal& z, const MeasurementEnsemble& ensemble);

/// b + eta with eta_i ~ N(0, sigma^2) i.i.d.; keeps the clean copy.
Observation add_noise(const Observation& obs, double sigma, Rng& rng);

/// min over global phases (signs in the real case) of |est - u truth| / |truth|.
double relative_error(const Signal& estimate, const Signal& truth);

/// One Monte-Carlo instance: signal and ensemble drawn from streams derived
/// from (master, tag, n, k, trial); noise-free observation.
struct Instance {
    Signal z;
    MeasurementEnsemble ensemble;
    Observation obs;
};

Instance make_instance(const ProjectorSpec& spec, int k, std::uint64_t master, std::uint64_t trial);

/// Invariant lift zz^*: (R, Phi) = (xx^T + yy^T, yx^T - xy^T).
std::pair<MatrixXd, MatrixXd> lift(const Signal& z);

} // namespace phaseret
