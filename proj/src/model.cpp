#include "phaseret/model.hpp"

#include "phaseret/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace phaseret {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonGenericMeasurement: return "NonGenericMeasurement";
    case ErrorKind::NonGenericSignal: return "NonGenericSignal";
    case ErrorKind::NotIdentifiable: return "NotIdentifiable";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

const char* to_string(Mode mode) {
    return mode == Mode::Real ? "real" : "complex";
}

Mode mode_from_string(const std::string& s) {
    if (s == "real") return Mode::Real;
    if (s == "complex" || s == "complex-split") return Mode::ComplexSplit;
    throw InvalidArgument("unknown mode '" + s + "'");
}

const char* to_string(ProjectorDistribution d) {
    switch (d) {
    case ProjectorDistribution::GenericGaussian: return "gaussian";
    case ProjectorDistribution::HaarOrthogonal: return "haar";
    case ProjectorDistribution::Explicit: return "explicit";
    }
    return "unknown";
}

ProjectorDistribution distribution_from_string(const std::string& s) {
    if (s == "gaussian") return ProjectorDistribution::GenericGaussian;
    if (s == "haar") return ProjectorDistribution::HaarOrthogonal;
    if (s == "explicit") return ProjectorDistribution::Explicit;
    throw InvalidArgument("unknown projector distribution '" + s + "'");
}

// ---------------------------------------------------------------------------
// Signal

Signal::Signal(Mode mode, VectorXd x, VectorXd y)
    : mode_(mode), x_(std::move(x)), y_(std::move(y)) {}

Signal Signal::real(VectorXd x) {
    if (x.size() < 1) throw InvalidArgument("signal dimension must be >= 1");
    VectorXd y = VectorXd::Zero(x.size());
    return Signal(Mode::Real, std::move(x), std::move(y));
}

Signal Signal::complex_split(VectorXd x, VectorXd y) {
    if (x.size() < 1) throw InvalidArgument("signal dimension must be >= 1");
    if (x.size() != y.size()) throw DimensionMismatch("real and imaginary parts differ in length");
    return Signal(Mode::ComplexSplit, std::move(x), std::move(y));
}

Signal Signal::from_complex(const VectorXcd& z) {
    return complex_split(z.real(), z.imag());
}

VectorXcd Signal::as_complex() const {
    VectorXcd z(n());
    z.real() = x_;
    z.imag() = y_;
    return z;
}

double Signal::norm() const {
    return std::sqrt(x_.squaredNorm() + y_.squaredNorm());
}

Signal Signal::negated() const {
    return Signal(mode_, -x_, -y_);
}

// ---------------------------------------------------------------------------
// Projector specs and measurement matrices

void ProjectorSpec::validate() const {
    if (n < 1) throw InvalidArgument("projector ambient dimension must be >= 1");
    if (rank < 1) throw InvalidArgument("projector rank must be >= 1");
    if (rank > n) {
        throw InvalidArgument("projector rank " + std::to_string(rank) +
                              " exceeds dimension " + std::to_string(n));
    }
    if (distribution == ProjectorDistribution::Explicit) {
        if (explicit_projectors.empty()) {
            throw InvalidArgument("explicit projector spec without matrices");
        }
        for (const auto& p : explicit_projectors) {
            if (p.cols() != n) throw DimensionMismatch("explicit projector has wrong column count");
            if (p.rows() > n || p.rows() < 1) {
                throw InvalidArgument("explicit projector row count must be in [1, n]");
            }
            if (mode == Mode::Real && p.imag().cwiseAbs().maxCoeff() != 0.0) {
                throw InvalidArgument("real-mode explicit projector has an imaginary part");
            }
        }
    }
}

namespace {

double max_abs(const MatrixXd& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

MatrixXd exact_symmetric_part(const MatrixXd& a) {
    MatrixXd s = 0.5 * (a + a.transpose());
    // (a_ij + a_ji) / 2 is evaluated identically for (i,j) and (j,i), but
    // force it anyway so the invariant never depends on expression templates.
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        for (Eigen::Index i = j + 1; i < s.rows(); ++i) s(j, i) = s(i, j);
    }
    return s;
}

MatrixXd exact_antisymmetric_part(const MatrixXd& c) {
    MatrixXd s = 0.5 * (c - c.transpose());
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        s(j, j) = 0.0;
        for (Eigen::Index i = j + 1; i < s.rows(); ++i) s(j, i) = -s(i, j);
    }
    return s;
}

} // namespace

MeasurementMatrix::MeasurementMatrix(Mode mode, MatrixXd sym, MatrixXd skew, int rank_bound)
    : mode_(mode), sym_(std::move(sym)), skew_(std::move(skew)), rank_bound_(rank_bound) {}

MeasurementMatrix MeasurementMatrix::real(const MatrixXd& a, int rank_bound) {
    if (a.rows() != a.cols() || a.rows() < 1) throw DimensionMismatch("measurement matrix must be square");
    const double scale = std::max(1.0, max_abs(a));
    if (max_abs(a - a.transpose()) > 1e-12 * scale) {
        throw InvalidArgument("real measurement matrix is not symmetric");
    }
    const int n = static_cast<int>(a.rows());
    if (rank_bound < 0) rank_bound = n;
    return MeasurementMatrix(Mode::Real, exact_symmetric_part(a), MatrixXd(), rank_bound);
}

MeasurementMatrix MeasurementMatrix::complex_split(const MatrixXd& b, const MatrixXd& c,
                                                   int rank_bound) {
    if (b.rows() != b.cols() || c.rows() != c.cols() || b.rows() != c.rows() || b.rows() < 1) {
        throw DimensionMismatch("complex measurement pair must be square and of equal size");
    }
    const double scale = std::max({1.0, max_abs(b), max_abs(c)});
    if (max_abs(b - b.transpose()) > 1e-12 * scale) {
        throw InvalidArgument("B part of complex measurement is not symmetric");
    }
    if (max_abs(c + c.transpose()) > 1e-12 * scale) {
        throw InvalidArgument("C part of complex measurement is not antisymmetric");
    }
    const int n = static_cast<int>(b.rows());
    if (rank_bound < 0) rank_bound = n;
    return MeasurementMatrix(Mode::ComplexSplit, exact_symmetric_part(b),
                             exact_antisymmetric_part(c), rank_bound);
}

MeasurementMatrix MeasurementMatrix::from_projector(const MatrixXd& p) {
    MatrixXd a = p.transpose() * p;
    return MeasurementMatrix(Mode::Real, exact_symmetric_part(a), MatrixXd(),
                             static_cast<int>(p.rows()));
}

MeasurementMatrix MeasurementMatrix::from_projector(const MatrixXcd& p) {
    const MatrixXd q = p.real();
    const MatrixXd s = p.imag();
    MatrixXd b = q.transpose() * q + s.transpose() * s;
    MatrixXd c = q.transpose() * s - s.transpose() * q;
    return MeasurementMatrix(Mode::ComplexSplit, exact_symmetric_part(b),
                             exact_antisymmetric_part(c), static_cast<int>(p.rows()));
}

double MeasurementMatrix::measure(const Signal& z) const {
    if (z.n() != n()) throw DimensionMismatch("signal and measurement dimensions differ");
    if (z.mode() != mode_) throw DimensionMismatch("signal and measurement modes differ");
    if (mode_ == Mode::Real) {
        return z.x().dot(sym_ * z.x());
    }
    // Frobenius pairing <R, B> + <Phi, C> with R = xx^T + yy^T and
    // Phi = yx^T - xy^T, which equals Re(z^* (B + iC) z) = |Pz|^2.
    const VectorXd& x = z.x();
    const VectorXd& y = z.y();
    return x.dot(sym_ * x) + y.dot(sym_ * y) + 2.0 * y.dot(skew_ * x);
}

// ---------------------------------------------------------------------------
// Ensembles

int MeasurementEnsemble::rank() const {
    int r = 0;
    for (const auto& m : matrices) r = std::max(r, m.rank_bound());
    return r;
}

void MeasurementEnsemble::validate() const {
    if (matrices.empty()) throw InvalidArgument("measurement ensemble is empty");
    for (const auto& m : matrices) {
        if (m.n() != n) throw DimensionMismatch("ensemble matrices differ in dimension");
        if (m.mode() != mode) throw DimensionMismatch("ensemble matrices differ in mode");
    }
}

MeasurementEnsemble MeasurementEnsemble::from_matrices(std::vector<MeasurementMatrix> matrices) {
    if (matrices.empty()) throw InvalidArgument("measurement ensemble is empty");
    MeasurementEnsemble e;
    e.mode = matrices.front().mode();
    e.n = matrices.front().n();
    e.matrices = std::move(matrices);
    e.spec.n = e.n;
    e.spec.mode = e.mode;
    e.spec.distribution = ProjectorDistribution::Explicit;
    e.spec.rank = e.rank();
    e.validate();
    return e;
}

// ---------------------------------------------------------------------------
// Sampling

MatrixXd sample_gaussian(int rows, int cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    MatrixXd g(rows, cols);
    // Column-major fill order is part of the determinism contract.
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) g(i, j) = normal(rng);
    }
    return g;
}

MatrixXd sample_haar_orthogonal(int n, Rng& rng) {
    const MatrixXd g = sample_gaussian(n, n, rng);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ();
    const auto& r = qr.matrixQR();
    for (int j = 0; j < n; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }
    return q;
}

MatrixXcd sample_haar_unitary(int n, Rng& rng) {
    const MatrixXd re = sample_gaussian(n, n, rng);
    const MatrixXd im = sample_gaussian(n, n, rng);
    MatrixXcd g(n, n);
    g.real() = re;
    g.imag() = im;
    Eigen::HouseholderQR<MatrixXcd> qr(g);
    MatrixXcd q = qr.householderQ();
    const auto& r = qr.matrixQR();
    for (int j = 0; j < n; ++j) {
        const double mag = std::abs(r(j, j));
        if (mag > 0.0) q.col(j) *= r(j, j) / mag;
    }
    return q;
}

Signal sample_signal(int n, Mode mode, Rng& rng) {
    if (n < 1) throw InvalidArgument("signal dimension must be >= 1");
    if (mode == Mode::Real) {
        VectorXd x = sample_gaussian(n, 1, rng).col(0);
        double nrm = x.norm();
        while (nrm == 0.0) {
            x = sample_gaussian(n, 1, rng).col(0);
            nrm = x.norm();
        }
        return Signal::real(x / nrm);
    }
    MatrixXd g = sample_gaussian(n, 2, rng);
    double nrm = g.norm();
    while (nrm == 0.0) {
        g = sample_gaussian(n, 2, rng);
        nrm = g.norm();
    }
    g /= nrm;
    return Signal::complex_split(g.col(0), g.col(1));
}

namespace {

MatrixXcd sample_projector(const ProjectorSpec& spec, Rng& rng) {
    const int n = spec.n;
    const int r = spec.rank;
    if (spec.mode == Mode::Real) {
        if (spec.distribution == ProjectorDistribution::GenericGaussian) {
            return sample_gaussian(r, n, rng).cast<std::complex<double>>();
        }
        const MatrixXd q = sample_haar_orthogonal(n, rng);
        return q.topRows(r).cast<std::complex<double>>();
    }
    if (spec.distribution == ProjectorDistribution::GenericGaussian) {
        const MatrixXd re = sample_gaussian(r, n, rng);
        const MatrixXd im = sample_gaussian(r, n, rng);
        MatrixXcd p(r, n);
        p.real() = re / std::sqrt(2.0);
        p.imag() = im / std::sqrt(2.0);
        return p;
    }
    return sample_haar_unitary(n, rng).topRows(r);
}

} // namespace

MeasurementEnsemble make_ensemble(const ProjectorSpec& spec, int k, Rng& rng) {
    spec.validate();
    if (k < 1) throw InvalidArgument("ensemble size k must be >= 1");
    if (spec.distribution == ProjectorDistribution::Explicit &&
        spec.explicit_projectors.size() != 1 &&
        static_cast<int>(spec.explicit_projectors.size()) != k) {
        throw InvalidArgument("explicit spec must hold one projector or exactly k of them");
    }
    MeasurementEnsemble e;
    e.mode = spec.mode;
    e.n = spec.n;
    e.spec = spec;
    e.matrices.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        MatrixXcd p;
        if (spec.distribution == ProjectorDistribution::Explicit) {
            p = spec.explicit_projectors.size() == 1 ? spec.explicit_projectors.front()
                                                     : spec.explicit_projectors[static_cast<std::size_t>(i)];
        } else {
            p = sample_projector(spec, rng);
        }
        if (spec.mode == Mode::Real) {
            e.matrices.push_back(MeasurementMatrix::from_projector(MatrixXd(p.real())));
        } else {
            e.matrices.push_back(MeasurementMatrix::from_projector(p));
        }
    }
    return e;
}

Observation forward_measure(const Signal& z, const MeasurementEnsemble& ensemble) {
    ensemble.validate();
    if (z.n() != ensemble.n) throw DimensionMismatch("signal and ensemble dimensions differ");
    if (z.mode() != ensemble.mode) throw DimensionMismatch("signal and ensemble modes differ");
    Observation obs;
    obs.b.resize(ensemble.k());
    for (int i = 0; i < ensemble.k(); ++i) {
        obs.b(i) = ensemble.matrices[static_cast<std::size_t>(i)].measure(z);
    }
    obs.sigma = 0.0;
    obs.clean = obs.b;
    return obs;
}

Observation add_noise(const Observation& obs, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw InvalidArgument("noise level must be >= 0");
    Observation out;
    const VectorXd base = obs.clean ? *obs.clean : obs.b;
    out.clean = base;
    out.sigma = sigma;
    out.b = base;
    if (sigma > 0.0) {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < out.b.size(); ++i) out.b(i) += sigma * normal(rng);
    }
    return out;
}

double relative_error(const Signal& estimate, const Signal& truth) {
    if (estimate.n() != truth.n()) throw DimensionMismatch("signals differ in dimension");
    const double tn = truth.norm();
    if (tn == 0.0) throw InvalidArgument("relative error against a zero signal");
    double err;
    if (truth.mode() == Mode::Real && estimate.mode() == Mode::Real) {
        err = std::min((estimate.x() - truth.x()).norm(), (estimate.x() + truth.x()).norm()) / tn;
    } else {
        // The best unit-modulus u aligns u t with e: u = <t, e> / |<t, e>|.
        const VectorXcd t = truth.as_complex();
        const std::complex<double> inner = t.dot(estimate.as_complex());
        const std::complex<double> u = std::abs(inner) > 0.0 ? inner / std::abs(inner) : 1.0;
        err = (estimate.as_complex() - u * t).norm() / tn;
    }
    return std::min(err, 2.0);
}

Instance make_instance(const ProjectorSpec& spec, int k, std::uint64_t master, std::uint64_t trial) {
    const auto n = static_cast<std::uint64_t>(spec.n);
    const auto kk = static_cast<std::uint64_t>(k);
    Rng signal_rng = make_stream(master, {kStreamSignal, n, kk, trial});
    Rng ensemble_rng = make_stream(master, {kStreamEnsemble, n, kk, trial});
    Signal z = sample_signal(spec.n, spec.mode, signal_rng);
    MeasurementEnsemble e = make_ensemble(spec, k, ensemble_rng);
    e.seed = master;
    Observation obs = forward_measure(z, e);
    return Instance{std::move(z), std::move(e), std::move(obs)};
}

std::pair<MatrixXd, MatrixXd> lift(const Signal& z) {
    const VectorXd& x = z.x();
    const VectorXd& y = z.y();
    MatrixXd r = x * x.transpose() + y * y.transpose();
    MatrixXd phi = y * x.transpose() - x * y.transpose();
    return {r, phi};
}

} // namespace phaseret
