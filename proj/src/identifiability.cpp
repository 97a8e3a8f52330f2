#include "phaseret/identifiability.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace phaseret {

JacobianRank jacobian_rank(const MeasurementEnsemble& ensemble, const Signal& z, double rel_tol) {
    if (ensemble.mode != Mode::Real || z.mode() != Mode::Real) {
        throw InvalidArgument("jacobian_rank works on real ensembles and signals");
    }
    if (z.n() != ensemble.n) throw DimensionMismatch("signal and ensemble dimensions differ");
    const int k = ensemble.k();
    const int n = ensemble.n;
    MatrixXd jac(k, n);
    for (int i = 0; i < k; ++i) {
        jac.row(i) = 2.0 * (ensemble.matrices[static_cast<std::size_t>(i)].sym() * z.x()).transpose();
    }
    JacobianRank out;
    if (k == 0) return out;
    Eigen::JacobiSVD<MatrixXd> svd(jac);
    out.singular_values = svd.singularValues();
    const double top = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
    const double tol = rel_tol * std::max(1.0, top);
    for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
        if (out.singular_values(i) > tol) ++out.rank;
    }
    out.smallest = k >= n ? out.singular_values(n - 1) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Census

namespace {

// Residuals and Jacobian of w -> (phi_i(w) - b_i) / scale, w = x (Real) or
// (x, y) (ComplexSplit).
struct System {
    const MeasurementEnsemble& e;
    const VectorXd& b;
    double scale;
    int n;
    bool complex;

    int unknowns() const { return complex ? 2 * n : n; }

    Signal signal(const VectorXd& w) const {
        return complex ? Signal::complex_split(w.head(n), w.tail(n)) : Signal::real(w);
    }

    void eval(const VectorXd& w, VectorXd& r, MatrixXd* jac) const {
        const int k = e.k();
        r.resize(k);
        if (jac) jac->resize(k, unknowns());
        for (int i = 0; i < k; ++i) {
            const auto& m = e.matrices[static_cast<std::size_t>(i)];
            const MatrixXd& a = m.sym();
            if (!complex) {
                const VectorXd ax = a * w;
                r(i) = (w.dot(ax) - b(i)) / scale;
                if (jac) jac->row(i) = (2.0 / scale) * ax.transpose();
            } else {
                const auto x = w.head(n);
                const auto y = w.tail(n);
                const MatrixXd& c = m.skew();
                const VectorXd bx = a * x;
                const VectorXd by = a * y;
                const VectorXd cx = c * x;
                r(i) = (x.dot(bx) + y.dot(by) + 2.0 * y.dot(cx) - b(i)) / scale;
                if (jac) {
                    jac->row(i).head(n) = (2.0 / scale) * (bx + c.transpose() * y).transpose();
                    jac->row(i).tail(n) = (2.0 / scale) * (by + cx).transpose();
                }
            }
        }
    }
};

// Levenberg-Marquardt from w; returns the final max-abs residual.
double levenberg_marquardt(const System& sys, VectorXd& w, int max_iterations) {
    VectorXd r;
    MatrixXd jac;
    sys.eval(w, r, &jac);
    double cost = r.squaredNorm();
    double mu = 1e-3;
    int stalls = 0;
    for (int it = 0; it < max_iterations && cost > 0.0; ++it) {
        const MatrixXd h = jac.transpose() * jac;
        const VectorXd g = jac.transpose() * r;
        const double hscale = std::max(h.diagonal().maxCoeff(), std::numeric_limits<double>::min());
        MatrixXd damped = h;
        damped.diagonal().array() += mu * hscale;
        const VectorXd step = damped.ldlt().solve(-g);
        if (!step.allFinite()) break;
        VectorXd trial = w + step;
        VectorXd tr;
        MatrixXd tj;
        sys.eval(trial, tr, &tj);
        const double tcost = tr.squaredNorm();
        if (tcost < cost) {
            const double gain = (cost - tcost) / cost;
            w = std::move(trial);
            r = std::move(tr);
            jac = std::move(tj);
            cost = tcost;
            mu = std::max(mu / 3.0, 1e-15);
            stalls = gain < 1e-12 ? stalls + 1 : 0;
        } else {
            mu *= 4.0;
            ++stalls;
        }
        if (stalls > 30 || mu > 1e16) break;
        if (step.norm() <= 1e-17 * std::max(1.0, w.norm()) && cost < 1e-28) break;
    }
    return r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
}

double class_distance(const Signal& a, const Signal& b) {
    if (a.mode() == Mode::Real) {
        return std::min((a.x() - b.x()).norm(), (a.x() + b.x()).norm());
    }
    const auto [ra, pa] = lift(a);
    const auto [rb, pb] = lift(b);
    return std::sqrt((ra - rb).squaredNorm() + (pa - pb).squaredNorm());
}

int complex_jacobian_rank(const System& sys, const VectorXd& w) {
    VectorXd r;
    MatrixXd jac;
    sys.eval(w, r, &jac);
    Eigen::JacobiSVD<MatrixXd> svd(jac);
    const VectorXd& s = svd.singularValues();
    const double tol = 1e-8 * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > tol ? 1 : 0;
    return rank;
}

} // namespace

SolutionCensus count_solutions(const MeasurementEnsemble& ensemble, const Observation& obs,
                               const CensusOptions& options) {
    ensemble.validate();
    const int n = ensemble.n;
    const bool complex = ensemble.mode == Mode::ComplexSplit;
    if (obs.k() != ensemble.k()) throw DimensionMismatch("observation length differs from k");
    const int cap = complex ? options.complex_cap : options.real_cap;
    if (n > cap) {
        throw InvalidArgument("census is capped at n <= " + std::to_string(cap) + " in " +
                              to_string(ensemble.mode) + " mode");
    }
    const double bmax = obs.b.cwiseAbs().maxCoeff();
    const System sys{ensemble, obs.b, bmax > 0.0 ? bmax : 1.0, n, complex};
    const int m = sys.unknowns();
    const int starts = options.starts.value_or(200 * (1 << m));
    if (starts < 1) throw InvalidArgument("census needs at least one start");

    // Typical signal norm: E[z^T A z] = |z|^2 tr(A) / n for isotropic z.
    double trace = 0.0;
    for (const auto& mat : ensemble.matrices) trace += mat.sym().trace();
    trace /= std::max(1, ensemble.k());
    const double mean_b = obs.b.cwiseAbs().mean();
    const double norm_guess = trace > 0.0 && mean_b > 0.0 ? std::sqrt(n * mean_b / trace) : 1.0;
    const double start_scale = norm_guess;

    SolutionCensus census;
    census.mode = ensemble.mode;
    census.starts = starts;
    census.radius = options.cluster_radius * std::max(norm_guess, bmax > 0.0 ? 0.0 : 1.0);
    if (!(census.radius > 0.0)) census.radius = options.cluster_radius;

    // Solutions can sit far from the signal scale (nearly dependent
    // measurements), so start radii are log-uniform over several decades.
    Rng rng(options.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> log_radius(std::log(0.1), std::log(100.0));
    for (int s = 0; s < starts; ++s) {
        VectorXd w(m);
        for (int j = 0; j < m; ++j) w(j) = normal(rng);
        w *= start_scale * std::exp(log_radius(rng)) / std::max(w.norm(), 1e-300);
        const double res = levenberg_marquardt(sys, w, options.max_iterations);
        if (!(res <= options.residual_tol) || !w.allFinite()) continue;
        ++census.converged;
        const Signal cand = sys.signal(w);
        bool merged = false;
        for (std::size_t c = 0; c < census.representatives.size(); ++c) {
            const double d = class_distance(cand, census.representatives[c]);
            if (d <= census.radius) {
                merged = true;
                ++census.clustered;
                census.spread = std::max(census.spread, d);
                if (res < census.residuals[c]) {
                    census.representatives[c] = cand;
                    census.residuals[c] = res;
                }
                break;
            }
        }
        if (!merged) {
            census.representatives.push_back(cand);
            census.residuals.push_back(res);
        }
    }
    if (census.converged == 0) throw NoConvergence("no multistart run converged");

    for (const auto& rep : census.representatives) {
        if (complex) {
            VectorXd w(2 * n);
            w << rep.x(), rep.y();
            census.jacobian_ranks.push_back(complex_jacobian_rank(sys, w));
        } else {
            census.jacobian_ranks.push_back(jacobian_rank(ensemble, rep, 1e-8).rank);
        }
    }
    const auto classes = static_cast<int>(census.representatives.size());
    census.non_isolated = classes > 64 || (census.converged >= 32 && 4 * classes > census.converged);
    return census;
}

// ---------------------------------------------------------------------------
// Threshold estimation

const char* to_string(ThresholdOracle oracle) {
    return oracle == ThresholdOracle::Census ? "census" : "ideal-regression";
}

ThresholdOracle oracle_from_string(const std::string& s) {
    if (s == "census") return ThresholdOracle::Census;
    if (s == "ideal-regression" || s == "ideal") return ThresholdOracle::IdealRegression;
    throw InvalidArgument("unknown threshold oracle '" + s + "'");
}

namespace {

bool trial_succeeds(const ProjectorSpec& spec, int k, std::uint64_t seed, int trial,
                    const ThresholdOptions& options) {
    const Instance inst = make_instance(spec, k, seed, static_cast<std::uint64_t>(trial));
    if (options.oracle == ThresholdOracle::Census) {
        CensusOptions co = options.census;
        co.seed = derive_seed(seed, {kStreamCensus, static_cast<std::uint64_t>(spec.n),
                                     static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(trial)});
        try {
            return count_solutions(inst.ensemble, inst.obs, co).unique();
        } catch (const NoConvergence&) {
            return false;
        }
    }
    if (spec.mode != Mode::Real) throw InvalidArgument("the inversion oracle needs real signals");
    InversionOptions io = options.inversion;
    io.truth = inst.z;
    try {
        return invert_ideal_regression(inst.ensemble, inst.obs, io).success;
    } catch (const Error&) {
        return false;
    }
}

void check_sweep(const std::vector<int>& k_range, int trials) {
    if (k_range.empty()) throw InvalidArgument("empty k range");
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
    for (int k : k_range) {
        if (k < 1) throw InvalidArgument("k must be >= 1");
    }
}

} // namespace

ThresholdReport estimate_generic_threshold(int n, const ProjectorSpec& spec_in,
                                           const std::vector<int>& k_range, int trials,
                                           std::uint64_t seed, const ThresholdOptions& options) {
    check_sweep(k_range, trials);
    ProjectorSpec spec = spec_in;
    spec.n = n;
    spec.validate();

    ThresholdReport report;
    report.n = n;
    report.rank = spec.rank;
    report.mode = spec.mode;
    report.distribution = spec.distribution;
    report.oracle = options.oracle;
    report.k_values = k_range;
    report.trials = trials;
    report.frequency_threshold = options.frequency_threshold;
    report.seed = seed;

    const std::size_t cells = k_range.size() * static_cast<std::size_t>(trials);
    std::vector<char> ok(cells, 0);
    parallel_for(
        cells,
        [&](std::size_t idx) {
            const int k = k_range[idx / static_cast<std::size_t>(trials)];
            const int trial = static_cast<int>(idx % static_cast<std::size_t>(trials));
            ok[idx] = trial_succeeds(spec, k, seed, trial, options) ? 1 : 0;
        },
        options.threads);

    for (std::size_t c = 0; c < k_range.size(); ++c) {
        int count = 0;
        for (int t = 0; t < trials; ++t) count += ok[c * static_cast<std::size_t>(trials) + static_cast<std::size_t>(t)];
        report.successes.push_back(count);
        report.frequencies.push_back(static_cast<double>(count) / trials);
    }
    for (std::size_t c = 0; c < k_range.size(); ++c) {
        if (report.frequencies[c] >= options.frequency_threshold &&
            (!report.lambda_hat || k_range[c] < *report.lambda_hat)) {
            report.lambda_hat = k_range[c];
        }
    }
    return report;
}

std::vector<ProjectorClassRow> compare_projector_classes(int n, const std::vector<int>& k_range,
                                                         const std::vector<int>& ranks, int trials,
                                                         std::uint64_t seed, ThresholdOptions options) {
    check_sweep(k_range, trials);
    if (ranks.empty()) throw InvalidArgument("empty rank list");
    std::vector<ProjectorClassRow> rows;
    for (auto dist : {ProjectorDistribution::GenericGaussian, ProjectorDistribution::HaarOrthogonal}) {
        for (int r : ranks) {
            ProjectorSpec spec;
            spec.n = n;
            spec.rank = r;
            spec.distribution = dist;
            const ThresholdReport rep = estimate_generic_threshold(n, spec, k_range, trials, seed, options);
            for (std::size_t c = 0; c < k_range.size(); ++c) {
                rows.push_back({dist, r, k_range[c], rep.successes[c], trials, rep.frequencies[c]});
            }
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Fixtures

MeasurementEnsemble example_2_14_ensemble() {
    std::vector<MeasurementMatrix> m;
    for (int i = 0; i < 3; ++i) {
        MatrixXd a = MatrixXd::Zero(3, 3);
        a(i, i) = 1.0;
        m.push_back(MeasurementMatrix::real(a, 1));
    }
    return MeasurementEnsemble::from_matrices(std::move(m));
}

MeasurementEnsemble example_2_12_ensemble() {
    MeasurementEnsemble e = example_2_14_ensemble();
    e.matrices.push_back(MeasurementMatrix::real(MatrixXd::Ones(3, 3), 1));
    return e;
}

const char* to_string(Identifiability c) {
    switch (c) {
    case Identifiability::StablyIdentifiable: return "perturbation-stably identifiable";
    case Identifiability::IdentifiableNotStable: return "identifiable, not perturbation-stably";
    case Identifiability::NotIdentifiable: return "not identifiable";
    }
    return "unknown";
}

bool in_example_2_12_z(const VectorXd& z, double tol) {
    if (z.size() != 3) throw DimensionMismatch("the fixture lives in dimension 3");
    const double t = tol * std::max(1.0, z.norm());
    return std::abs(z(0) + z(1)) <= t || std::abs(z(0) + z(2)) <= t || std::abs(z(1) + z(2)) <= t;
}

bool in_example_2_12_c(const VectorXd& z, double tol) {
    if (z.size() != 3) throw DimensionMismatch("the fixture lives in dimension 3");
    const double t = tol * std::max(1.0, z.norm());
    return (z.array().abs() <= t).any();
}

Example212Result check_example_2_12(const VectorXd& z, const CensusOptions& options) {
    const MeasurementEnsemble e = example_2_12_ensemble();
    const Signal s = Signal::real(z);
    Example212Result out;
    out.in_z = in_example_2_12_z(z);
    out.in_c = in_example_2_12_c(z);
    out.predicted = !out.in_z ? Identifiability::StablyIdentifiable
                    : out.in_c ? Identifiability::IdentifiableNotStable
                               : Identifiability::NotIdentifiable;
    out.jacobian_rank = jacobian_rank(e, s).rank;

    const Observation obs = forward_measure(s, e);
    if (obs.b.cwiseAbs().maxCoeff() == 0.0) {
        // The all-ones matrix plus the coordinate projections is positive
        // definite, so b = 0 forces z = 0.
        out.census_size = 1;
    } else {
        out.census_size = count_solutions(e, obs, options).size();
    }
    out.classification = out.census_size > 1       ? Identifiability::NotIdentifiable
                         : out.jacobian_rank < 3 ? Identifiability::IdentifiableNotStable
                                                 : Identifiability::StablyIdentifiable;
    return out;
}

} // namespace phaseret
