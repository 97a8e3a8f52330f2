#include "phaseret/inversion.hpp"

#include "phaseret/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace phaseret {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void require_real(const MeasurementEnsemble& e, const Observation& obs, const char* who) {
    e.validate();
    if (e.mode != Mode::Real) {
        throw InvalidArgument(std::string(who) + " is implemented for real signals only");
    }
    if (obs.k() != e.k()) throw DimensionMismatch("observation length differs from ensemble size");
}

double measurement_residual(const Signal& z, const MeasurementEnsemble& e, const Observation& obs) {
    const double scale = std::max(obs.b.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    double worst = 0.0;
    for (int i = 0; i < e.k(); ++i) {
        worst = std::max(worst, std::abs(e.matrices[static_cast<std::size_t>(i)].measure(z) - obs.b(i)));
    }
    return worst / scale;
}

void finish_report(RecoveryReport& r, const MeasurementEnsemble& e, const Observation& obs,
                   const InversionOptions& options) {
    r.residual = measurement_residual(r.z_hat, e, obs);
    if (options.truth) {
        r.rel_error = relative_error(r.z_hat, *options.truth);
        r.success = *r.rel_error <= options.success_threshold;
    } else {
        r.success = true;
    }
}

} // namespace

VectorXd canonical_sign(const VectorXd& v) {
    if (v.size() == 0) return v;
    Eigen::Index imax = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > best) {
            best = std::abs(v(i));
            imax = i;
        }
    }
    return v(imax) < 0.0 ? VectorXd(-v) : v;
}

// ---------------------------------------------------------------------------

QuadricSet normalize_quadrics(const MeasurementEnsemble& ensemble, const Observation& obs,
                              double b_rel_tol) {
    require_real(ensemble, obs, "quadric normalisation");
    const int k = ensemble.k();
    const int n = ensemble.n;
    if (k < 2) throw InvalidArgument("quadric normalisation needs at least two measurements");
    const double bmax = obs.b.cwiseAbs().maxCoeff();
    const double tau = b_rel_tol * bmax;
    for (int i = 0; i < k; ++i) {
        if (!(std::abs(obs.b(i)) > tau)) {
            throw NonGenericMeasurement("measurement " + std::to_string(i) +
                                        " is (numerically) zero; the signal lies near the kernel of A_i");
        }
    }

    std::vector<MatrixXd> scaled;
    scaled.reserve(static_cast<std::size_t>(k));
    MatrixXd mean = MatrixXd::Zero(n, n);
    for (int i = 0; i < k; ++i) {
        scaled.push_back(ensemble.matrices[static_cast<std::size_t>(i)].sym() / obs.b(i));
        mean += scaled.back();
    }
    mean /= static_cast<double>(k);

    std::vector<FormCoeffs> all;
    all.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        MatrixXd m = scaled[static_cast<std::size_t>(i)] - mean;
        m = 0.5 * (m + m.transpose()).eval();
        all.push_back(quadric_from_matrix(m));
    }

    int drop = 0;
    for (int i = 1; i < k; ++i) {
        if (all[static_cast<std::size_t>(i)].c.norm() < all[static_cast<std::size_t>(drop)].c.norm()) drop = i;
    }
    QuadricSet qs;
    qs.n = n;
    qs.dropped = drop;
    for (int i = 0; i < k; ++i) {
        if (i == drop) continue;
        qs.quadrics.push_back(std::move(all[static_cast<std::size_t>(i)]));
        qs.retained.push_back(i);
    }
    return qs;
}

ScaleFit recover_scale(const VectorXd& direction, const MeasurementEnsemble& ensemble,
                       const Observation& obs) {
    require_real(ensemble, obs, "scale recovery");
    if (direction.size() != ensemble.n) throw DimensionMismatch("direction length differs from n");
    if (direction.norm() == 0.0) throw InvalidArgument("scale recovery of a zero direction");
    const int k = ensemble.k();
    const Signal d = Signal::real(direction);
    VectorXd u(k);
    bool positive = true;
    for (int i = 0; i < k; ++i) {
        u(i) = ensemble.matrices[static_cast<std::size_t>(i)].measure(d);
        if (!(u(i) > 0.0) || !(obs.b(i) > 0.0)) positive = false;
    }
    ScaleFit fit;
    if (positive) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) acc += std::log(u(i)) - std::log(obs.b(i));
        fit.alpha = std::exp(-0.5 * acc / static_cast<double>(k));
    } else {
        const double den = u.squaredNorm();
        const double alpha2 = den > 0.0 ? u.dot(obs.b) / den : 0.0;
        if (!(alpha2 > 0.0)) {
            throw IllConditioned("no positive scale fits the measurements along this direction");
        }
        fit.alpha = std::sqrt(alpha2);
        fit.fallback = true;
    }
    fit.z_hat = fit.alpha * direction;
    return fit;
}

namespace {

// Any basis of the quadric span generates the same ideal, but the prolonged
// matrices inherit the conditioning of the basis. An orthonormal one is best;
// keeping at most C(n+1,2)-1 directions also discards the component that
// noise adds along v_2(z).
void orthonormalize_span(std::vector<FormCoeffs>& quadrics) {
    if (quadrics.empty()) return;
    const int n = quadrics.front().n;
    const Eigen::Index cols = quadrics.front().c.size();
    MatrixXd coeffs(static_cast<Eigen::Index>(quadrics.size()), cols);
    for (std::size_t i = 0; i < quadrics.size(); ++i) {
        coeffs.row(static_cast<Eigen::Index>(i)) = quadrics[i].c.transpose();
    }
    Eigen::BDCSVD<MatrixXd> svd(coeffs, Eigen::ComputeThinV);
    const VectorXd& s = svd.singularValues();
    const double floor = s.size() > 0 ? s(0) * 1e-14 : 0.0;
    Eigen::Index keep = std::min<Eigen::Index>(s.size(), cols - 1);
    while (keep > 0 && !(s(keep - 1) > floor)) --keep;
    std::vector<FormCoeffs> out;
    out.reserve(static_cast<std::size_t>(keep));
    for (Eigen::Index i = 0; i < keep; ++i) out.push_back(FormCoeffs{n, 2, svd.matrixV().col(i)});
    quadrics = std::move(out);
}

bool consistent_moment_vector(const ProlongationMatrix& pm, const MeasurementEnsemble& ensemble,
                              const Observation& obs, const InversionOptions& options) {
    const VectorXd v = pm.tail_vectors.col(0).normalized();
    const MatrixXd cat = catalecticant_matrix(v, pm.n, pm.degree);
    Eigen::JacobiSVD<MatrixXd> svd(cat, Eigen::ComputeThinU);
    const VectorXd& s = svd.singularValues();
    if (s.size() < 2 || !(s(0) > 0.0) || s(1) > options.consistency_tol * s(0)) return false;
    try {
        const ScaleFit fit = recover_scale(svd.matrixU().col(0), ensemble, obs);
        return measurement_residual(Signal::real(fit.z_hat), ensemble, obs) <= options.consistency_tol;
    } catch (const Error&) {
        return false;
    }
}

} // namespace

// ---------------------------------------------------------------------------

RecoveryReport invert_ideal_regression(const MeasurementEnsemble& ensemble, const Observation& obs,
                                       const InversionOptions& options) {
    const auto start = Clock::now();
    require_real(ensemble, obs, "ideal-regression inversion");
    const int n = ensemble.n;
    RecoveryReport report;
    report.solver = "ideal-regression";

    VectorXd direction;
    if (n == 1) {
        if (!(obs.b.cwiseAbs().maxCoeff() > 0.0)) throw NonGenericMeasurement("all measurements are zero");
        direction = VectorXd::Ones(1);
        report.stop_degree = 0;
        report.singular_gap = std::numeric_limits<double>::infinity();
    } else {
        QuadricSet qs = normalize_quadrics(ensemble, obs);
        orthonormalize_span(qs.quadrics);

        ProlongationOptions popts;
        const int t_max = options.max_degree > 0 ? options.max_degree : n;
        popts.max_degree = std::max(t_max, 2);
        popts.rank.rule = options.rank_rule.value_or(obs.sigma > 0.0 ? RankOptions::Rule::Gap
                                                                      : RankOptions::Rule::Hybrid);
        popts.rank.rel_tol = options.rank_rel_tol;
        popts.rank.gap_window = options.gap_window;
        popts.spectral = options.spectral;

        std::optional<ProlongationMatrix> found;
        std::optional<ProlongationMatrix> last;
        for (int t = 2; t <= std::max(t_max, 2); ++t) {
            ProlongationMatrix pm = prolong(qs.quadrics, t, popts);
            report.codim_history.emplace_back(t, pm.codim);
            if (pm.codim == 1) {
                found = std::move(pm);
                break;
            }
            if (t == std::max(t_max, 2)) last = std::move(pm);
        }

        VectorXd null_vector;
        if (found) {
            const NullDirection nd = null_direction(*found);
            null_vector = nd.vector;
            report.singular_gap = nd.gap;
            report.stop_degree = found->degree;
        } else if (popts.rank.rule != RankOptions::Rule::Gap && last && last->codim > 1 &&
                   last->tail_vectors.cols() > 0) {
            // Several candidate zeros at the last degree. The smallest vector
            // still settles the question if it is a rank-one moment vector
            // whose signal reproduces the data; a genuinely larger null
            // space returns a mixture that fails this test.
            if (consistent_moment_vector(*last, ensemble, obs, options)) {
                null_vector = last->tail_vectors.col(0).normalized();
                report.stop_degree = last->degree;
                report.resolved_by_consistency = true;
                const double s0 = last->tail_values(0);
                report.singular_gap = s0 > 0.0 ? last->tail_values(1) / s0
                                               : std::numeric_limits<double>::infinity();
            }
        }
        if (null_vector.size() == 0) {
            std::string trail;
            for (const auto& [t, c] : report.codim_history) {
                trail += " t=" + std::to_string(t) + ":" + std::to_string(c);
            }
            throw NotIdentifiable("codimension never reached 1 up to degree " + std::to_string(t_max) +
                                  " (codims" + trail + ")");
        }
        if (report.singular_gap < options.min_singular_gap) {
            throw IllConditioned("codimension-one gap " + std::to_string(report.singular_gap) +
                                 " at degree " + std::to_string(report.stop_degree) + " is below " +
                                 std::to_string(options.min_singular_gap));
        }
        const CatalecticantResult cat =
            catalecticant_extract(null_vector, n, report.stop_degree, options.catalecticant);
        report.catalecticant_ratio =
            cat.sigma2 > 0.0 ? cat.sigma1 / cat.sigma2 : std::numeric_limits<double>::infinity();
        direction = cat.direction;
    }

    const ScaleFit fit = recover_scale(direction, ensemble, obs);
    report.alpha = fit.alpha;
    report.scale_fallback = fit.fallback;
    report.z_hat = Signal::real(canonical_sign(fit.z_hat));
    finish_report(report, ensemble, obs, options);
    report.wall_ms = elapsed_ms(start);
    return report;
}

RecoveryReport invert_lifted_least_squares(const MeasurementEnsemble& ensemble,
                                           const Observation& obs,
                                           const InversionOptions& options) {
    const auto start = Clock::now();
    require_real(ensemble, obs, "lifted least squares");
    const int n = ensemble.n;
    const int k = ensemble.k();
    const int m = n * (n + 1) / 2;
    RecoveryReport report;
    report.solver = "lifted-ls";
    report.underdetermined = k < m;

    // Unknowns: upper triangle of Z (row-major); Tr(A Z) = sum A_jj Z_jj + 2 sum_{j<l} A_jl Z_jl.
    MatrixXd lin(k, m);
    for (int i = 0; i < k; ++i) {
        const MatrixXd& a = ensemble.matrices[static_cast<std::size_t>(i)].sym();
        int col = 0;
        for (int j = 0; j < n; ++j) {
            for (int l = j; l < n; ++l, ++col) lin(i, col) = (j == l) ? a(j, j) : 2.0 * a(j, l);
        }
    }
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(lin);
    const VectorXd theta = cod.solve(obs.b);
    MatrixXd z(n, n);
    {
        int col = 0;
        for (int j = 0; j < n; ++j) {
            for (int l = j; l < n; ++l, ++col) {
                z(j, l) = theta(col);
                z(l, j) = theta(col);
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(z);
    const VectorXd& lam = eig.eigenvalues(); // ascending
    const double top = lam(n - 1);
    const VectorXd v = eig.eigenvectors().col(n - 1);
    report.singular_gap = n > 1 ? top / std::max(std::abs(lam(n - 2)), std::numeric_limits<double>::min())
                                : std::numeric_limits<double>::infinity();

    VectorXd estimate;
    try {
        const ScaleFit fit = recover_scale(v, ensemble, obs);
        report.alpha = fit.alpha;
        report.scale_fallback = fit.fallback;
        estimate = fit.z_hat;
    } catch (const IllConditioned&) {
        report.alpha = std::sqrt(std::max(top, 0.0));
        report.scale_fallback = true;
        estimate = report.alpha * v;
    }
    report.z_hat = Signal::real(canonical_sign(estimate));
    finish_report(report, ensemble, obs, options);
    report.wall_ms = elapsed_ms(start);
    return report;
}

// ---------------------------------------------------------------------------
// Closed-form solvers below the generic threshold

MeasurementEnsemble ramex_ensemble(int n) {
    if (n < 1) throw InvalidArgument("ensemble dimension must be >= 1");
    std::vector<MeasurementMatrix> mats;
    MatrixXd a1 = MatrixXd::Zero(n, n);
    a1(0, 0) = 1.0;
    mats.push_back(MeasurementMatrix::real(a1, 1));
    for (int j = 1; j < n; ++j) {
        MatrixXd a = a1;
        a(j, 0) = 1.0;
        a(0, j) = 1.0;
        mats.push_back(MeasurementMatrix::real(a, 2));
    }
    return MeasurementEnsemble::from_matrices(std::move(mats));
}

Signal solve_ramex(const VectorXd& b, double tol) {
    if (b.size() < 1) throw InvalidArgument("empty measurement vector");
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if (!(b(0) > tol * scale)) {
        throw NonGenericSignal("b_1 = |z_1|^2 vanishes; the first coordinate must be non-zero");
    }
    const double z1 = std::sqrt(b(0));
    VectorXd z(b.size());
    z(0) = z1;
    for (Eigen::Index j = 1; j < b.size(); ++j) z(j) = (b(j) - b(0)) / (2.0 * z1);
    return Signal::real(z);
}

MeasurementEnsemble ex2b_ensemble(int n) {
    if (n < 1) throw InvalidArgument("ensemble dimension must be >= 1");
    std::vector<MeasurementMatrix> mats;
    MatrixXd e11 = MatrixXd::Zero(n, n);
    e11(0, 0) = 1.0;
    const MatrixXd zero = MatrixXd::Zero(n, n);
    mats.push_back(MeasurementMatrix::complex_split(e11, zero, 1));
    for (int j = 1; j < n; ++j) {
        MatrixXd b = e11;
        b(j, 0) = 1.0;
        b(0, j) = 1.0;
        mats.push_back(MeasurementMatrix::complex_split(b, zero, 2));
    }
    for (int j = 1; j < n; ++j) {
        // Hermitian e_1e_1^T + i (e_j e_1^T - e_1 e_j^T): real part e_1e_1^T,
        // imaginary part antisymmetric.
        MatrixXd c = MatrixXd::Zero(n, n);
        c(j, 0) = 1.0;
        c(0, j) = -1.0;
        mats.push_back(MeasurementMatrix::complex_split(e11, c, 2));
    }
    return MeasurementEnsemble::from_matrices(std::move(mats));
}

std::pair<VectorXd, VectorXd> split_ex2b_observation(const Observation& obs, int n) {
    if (obs.k() != 2 * n - 1) throw DimensionMismatch("observation does not match the 2n-1 ensemble");
    return {obs.b.head(n), obs.b.tail(n - 1)};
}

Signal solve_2b(const VectorXd& b, const VectorXd& c, double tol) {
    if (b.size() < 1) throw InvalidArgument("empty measurement vector");
    if (c.size() != b.size() - 1) throw DimensionMismatch("c must hold n-1 measurements");
    const double scale = std::max({1.0, b.cwiseAbs().maxCoeff(), c.size() ? c.cwiseAbs().maxCoeff() : 0.0});
    if (!(b(0) > tol * scale)) {
        throw NonGenericSignal("b_1 = |z_1|^2 vanishes; the first coordinate must be non-zero");
    }
    const Eigen::Index n = b.size();
    const double z1 = std::sqrt(b(0));
    VectorXd x(n);
    VectorXd y = VectorXd::Zero(n);
    x(0) = z1;
    for (Eigen::Index j = 1; j < n; ++j) {
        x(j) = (b(j) - b(0)) / (2.0 * z1);
        y(j) = (c(j - 1) - b(0)) / (2.0 * z1);
    }
    return Signal::complex_split(x, y);
}

} // namespace phaseret
