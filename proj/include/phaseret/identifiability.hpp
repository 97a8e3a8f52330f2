#pragma once

// Numerical identifiability checks: Jacobian rank as the local (perturbation
// stable) criterion, multistart solution counting on small instances,
// empirical generic thresholds and the classic three-coordinate fixtures.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "phaseret/inversion.hpp"
#include "phaseret/model.hpp"

namespace phaseret {

struct JacobianRank {
    int rank = 0;
    double smallest = 0.0;       ///< smallest singular value (0 if k < n)
    VectorXd singular_values;    ///< descending
};

/// Rank of the k x n matrix with rows 2 (A_i z)^T. Singular values at most
/// rel_tol * max(1, sigma_max) count as zero.
JacobianRank jacobian_rank(const MeasurementEnsemble& ensemble, const Signal& z,
                           double rel_tol = 1e-10);

struct CensusOptions {
    /// Number of random starts; unset means 200 * 2^(real unknowns).
    std::optional<int> starts;
    int max_iterations = 500;
    /// Points closer than this (relative to the signal scale) are merged.
    double cluster_radius = 1e-6;
    /// A start counts as converged when max_i |r_i| <= residual_tol * max|b|.
    double residual_tol = 1e-10;
    int real_cap = 5;
    int complex_cap = 3;
    std::uint64_t seed = 0;
};

struct SolutionCensus {
    Mode mode = Mode::Real;
    std::vector<Signal> representatives;
    /// max_i |z^T A_i z - b_i| / max|b| per representative.
    std::vector<double> residuals;
    /// Jacobian rank per representative (real unknowns; the phase direction
    /// is always in the kernel in ComplexSplit mode).
    std::vector<int> jacobian_ranks;
    int starts = 0;
    int converged = 0;
    int clustered = 0; ///< converged points merged into an existing class
    double radius = 0.0;
    /// Largest distance of a member to its class representative.
    double spread = 0.0;
    /// Converged points keep landing in new classes: the solution set is
    /// probably positive-dimensional (beyond the sign/phase symmetry).
    bool non_isolated = false;

    std::size_t size() const { return representatives.size(); }
    bool unique() const { return representatives.size() == 1 && !non_isolated; }
};

/// Multistart Levenberg-Marquardt census of {z : z^T A_i z = b_i}, modulo
/// sign (Real) or global phase (ComplexSplit, compared through the lift).
/// Gives a lower bound on the number of classes.
SolutionCensus count_solutions(const MeasurementEnsemble& ensemble, const Observation& obs,
                               const CensusOptions& options = {});

enum class ThresholdOracle { Census, IdealRegression };

const char* to_string(ThresholdOracle oracle);
ThresholdOracle oracle_from_string(const std::string& s);

struct ThresholdOptions {
    ThresholdOracle oracle = ThresholdOracle::Census;
    double frequency_threshold = 0.95;
    CensusOptions census;
    InversionOptions inversion;
    int threads = 0;
};

struct ThresholdReport {
    int n = 0;
    int rank = 1;
    Mode mode = Mode::Real;
    ProjectorDistribution distribution = ProjectorDistribution::HaarOrthogonal;
    ThresholdOracle oracle = ThresholdOracle::Census;
    std::vector<int> k_values;
    std::vector<int> successes;
    std::vector<double> frequencies;
    int trials = 0;
    double frequency_threshold = 0.95;
    /// Smallest k whose frequency reaches the threshold.
    std::optional<int> lambda_hat;
    std::uint64_t seed = 0;
};

/// Per trial: fresh signal and ensemble from streams derived from
/// (seed, n, k, trial); success means a unique census class (Census oracle)
/// or a successful inversion.
ThresholdReport estimate_generic_threshold(int n, const ProjectorSpec& spec,
                                           const std::vector<int>& k_range, int trials,
                                           std::uint64_t seed, const ThresholdOptions& options = {});

struct ProjectorClassRow {
    ProjectorDistribution distribution = ProjectorDistribution::HaarOrthogonal;
    int rank = 1;
    int k = 0;
    int successes = 0;
    int trials = 0;
    double frequency = 0.0;
};

/// Success frequency for every (class in {gaussian, haar}, rank, k). Default
/// oracle: ideal-regression inversion.
std::vector<ProjectorClassRow> compare_projector_classes(int n, const std::vector<int>& k_range,
                                                         const std::vector<int>& ranks, int trials,
                                                         std::uint64_t seed,
                                                         ThresholdOptions options = {
                                                             ThresholdOracle::IdealRegression});

// ---------------------------------------------------------------------------
// Three-coordinate fixtures

/// e1e1^T, e2e2^T, e3e3^T and the all-ones matrix.
MeasurementEnsemble example_2_12_ensemble();
/// e1e1^T, e2e2^T, e3e3^T.
MeasurementEnsemble example_2_14_ensemble();

enum class Identifiability { StablyIdentifiable, IdentifiableNotStable, NotIdentifiable };

const char* to_string(Identifiability c);

struct Example212Result {
    Identifiability classification = Identifiability::StablyIdentifiable;
    /// Classification implied by the set memberships alone.
    Identifiability predicted = Identifiability::StablyIdentifiable;
    bool in_z = false; ///< z_i = -z_j for some pair
    bool in_c = false; ///< some coordinate vanishes
    std::size_t census_size = 0;
    int jacobian_rank = 0;
};

/// z_i = -z_j for some i != j (tolerance relative to |z|).
bool in_example_2_12_z(const VectorXd& z, double tol = 1e-12);
/// z_l = 0 for some l.
bool in_example_2_12_c(const VectorXd& z, double tol = 1e-12);

/// Census > 1 class: not identifiable; otherwise a rank-deficient Jacobian
/// means identifiable but not stably; otherwise stably identifiable.
Example212Result check_example_2_12(const VectorXd& z, const CensusOptions& options = {});

} // namespace phaseret
