#include "doctest.h"

#include "phaseret/errors.hpp"
#include "phaseret/model.hpp"
#include "phaseret/polyspace.hpp"

#include <Eigen/LU>

#include <cmath>

using namespace phaseret;

namespace {

// Symmetric matrices M with z^T M z = 0.
std::vector<FormCoeffs> quadrics_through(const VectorXd& z, int count, Rng& rng) {
    std::vector<FormCoeffs> qs;
    for (int i = 0; i < count; ++i) {
        const MatrixXd g = sample_gaussian(z.size(), z.size(), rng);
        MatrixXd m = g + g.transpose();
        m -= (z.dot(m * z) / std::pow(z.squaredNorm(), 2)) * (z * z.transpose());
        qs.push_back(quadric_from_matrix(m));
    }
    return qs;
}

double cosine(const VectorXd& a, const VectorXd& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

} // namespace

TEST_CASE("monomial counts and ordering") {
    CHECK(MonomialBasis(3, 2).size() == 6);
    CHECK(MonomialBasis(6, 6).size() == 462);
    const MonomialBasis one(1, 5);
    REQUIRE(one.size() == 1);
    CHECK(one.exponent_at(0)[0] == 5);
    const MonomialBasis b(4, 3);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index_of(b.exponent_at(i)) == i);
    CHECK(binomial(10, 3) == 120);
}

TEST_CASE("quadric coefficients") {
    const FormCoeffs id = quadric_from_matrix(MatrixXd::Identity(2, 2));
    const MonomialBasis basis(2, 2);
    const int x2[] = {2, 0}, xy[] = {1, 1}, y2[] = {0, 2};
    CHECK(id.c(basis.index_of(x2)) == 1.0);
    CHECK(id.c(basis.index_of(xy)) == 0.0);
    CHECK(id.c(basis.index_of(y2)) == 1.0);

    MatrixXd off = MatrixXd::Zero(2, 2);
    off(0, 1) = off(1, 0) = 1.0;
    const FormCoeffs q = quadric_from_matrix(off);
    CHECK(q.c(basis.index_of(xy)) == 2.0);
    CHECK(q.c.cwiseAbs().sum() == 2.0);

    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const MatrixXd g = sample_gaussian(5, 5, rng);
        const MatrixXd a = g + g.transpose();
        const VectorXd z = sample_gaussian(5, 1, rng);
        CHECK(std::abs(quadric_from_matrix(a).evaluate(z) - z.dot(a * z)) < 1e-12 * (1 + std::abs(z.dot(a * z))));
    }
}

TEST_CASE("prolongation rows against pointwise products and brute-force rank") {
    Rng rng(31);
    const VectorXd z = sample_gaussian(3, 1, rng);
    const auto qs = quadrics_through(z, 3, rng);

    const ProlongationMatrix p2 = prolong(qs, 2);
    CHECK(p2.codim == 3);

    const ProlongationMatrix p3 = prolong(qs, 3);
    const MatrixXd dense = MatrixXd(p3.rows);
    REQUIRE(dense.rows() == 9);
    REQUIRE(dense.cols() == 10);
    Eigen::FullPivLU<MatrixXd> lu(dense);
    lu.setThreshold(1e-10);
    CHECK(10 - lu.rank() == 1);
    CHECK(p3.codim == 1);

    // Row (m, q) must be the coefficient vector of the product m(X) q(X):
    // compare values at random points.
    const MonomialBasis deg1(3, 1), deg3(3, 3);
    for (int s = 0; s < 5; ++s) {
        const VectorXd x = sample_gaussian(3, 1, rng);
        const VectorXd v3 = monomial_vector(deg3, x);
        for (int qi = 0; qi < 3; ++qi) {
            for (int mi = 0; mi < 3; ++mi) {
                const double expect = x(mi) * qs[qi].evaluate(x);
                bool found = false;
                for (Eigen::Index r = 0; r < dense.rows(); ++r) found |= std::abs(dense.row(r).dot(v3) - expect) < 1e-9;
                CHECK(found);
            }
        }
    }
    CHECK((dense * monomial_vector(deg3, z)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("null direction is the moment vector") {
    Rng rng(37);
    const VectorXd z = sample_gaussian(3, 1, rng);
    const auto qs = quadrics_through(z, 3, rng);
    const NullDirection d = null_direction(prolong(qs, 3));
    CHECK(cosine(d.vector, monomial_vector(MonomialBasis(3, 3), z)) >= 1 - 1e-9);
    CHECK_THROWS_AS(null_direction(prolong(std::vector<FormCoeffs>(qs.begin(), qs.begin() + 2), 2)),
                    InvalidArgument);

    auto noisy = qs;
    for (auto& q : noisy) q.c += 1e-6 * sample_gaussian(static_cast<int>(q.c.size()), 1, rng);
    ProlongationOptions opts;
    opts.rank.rule = RankOptions::Rule::Gap;
    const NullDirection dn = null_direction(prolong(noisy, 3, opts));
    CHECK(cosine(dn.vector, monomial_vector(MonomialBasis(3, 3), z)) >= 1 - 1e-3);
}

TEST_CASE("rank rules") {
    VectorXd tail(4);
    tail << 1e-15, 2e-15, 1e-3, 1e-2;
    RankOptions thr{RankOptions::Rule::Threshold, 1e-8, 0};
    CHECK(estimate_codim(tail, 1.0, 10, 3, thr) == 2);
    RankOptions hyb;
    CHECK(estimate_codim(tail, 1.0, 10, 3, hyb) == 2);
    // Both small values sit under the tolerance, but the gap after the first
    // is far larger than the one after the second.
    tail << 1e-16, 1e-9, 5e-8, 1e-2;
    CHECK(estimate_codim(tail, 1.0, 10, 3, thr) == 2);
    CHECK(estimate_codim(tail, 1.0, 10, 3, hyb) == 1);
}

TEST_CASE("catalecticant extraction") {
    const VectorXd z = VectorXd::LinSpaced(3, 1, 3);
    const VectorXd m = -2.0 * monomial_vector(MonomialBasis(3, 3), z);
    const CatalecticantResult r = catalecticant_extract(m, 3, 3);
    CHECK(cosine(r.direction, z) >= 1 - 1e-15);
    CHECK(r.direction.maxCoeff() > 0);
    CHECK(r.sigma2 <= 1e-10);
    CHECK(catalecticant_matrix(m, 3, 3).rows() == 3);

    const VectorXd e1 = VectorXd::Unit(3, 0);
    CHECK((catalecticant_extract(monomial_vector(MonomialBasis(3, 2), e1), 3, 2).direction - e1).norm() < 1e-15);

    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const VectorXd w = sample_gaussian(4, 1, rng).normalized();
        VectorXd mv = monomial_vector(MonomialBasis(4, 3), w);
        mv += 1e-6 * sample_gaussian(static_cast<int>(mv.size()), 1, rng);
        const VectorXd d = catalecticant_extract(mv, 4, 3).direction;
        CHECK(std::acos(std::min(1.0, cosine(d, w))) <= 1e-4);
    }
}
