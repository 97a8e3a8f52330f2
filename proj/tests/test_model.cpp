#include "doctest.h"

#include "phaseret/errors.hpp"
#include "phaseret/model.hpp"

#include <cmath>
#include <numbers>

using namespace phaseret;

TEST_CASE("signals are unit vectors and reproducible") {
    Rng a = make_stream(7, {kStreamSignal});
    Rng b = make_stream(7, {kStreamSignal});
    const Signal z = sample_signal(3, Mode::Real, a);
    CHECK(std::abs(z.norm() - 1.0) < 1e-15);
    CHECK(z.x() == sample_signal(3, Mode::Real, b).x());

    Rng c(11);
    const Signal one = sample_signal(1, Mode::Real, c);
    CHECK(std::abs(std::abs(one.x()(0)) - 1.0) < 1e-15);
    CHECK_THROWS_AS(sample_signal(0, Mode::Real, c), InvalidArgument);
}

TEST_CASE("projector ensembles") {
    Rng rng(3);
    ProjectorSpec haar;
    haar.n = 3;
    const MeasurementEnsemble e = make_ensemble(haar, 20, rng);
    for (const auto& m : e.matrices) {
        const MatrixXd& a = m.sym();
        CHECK(std::abs(a.trace() - 1.0) < 1e-12);
        CHECK((a * a - a).norm() < 1e-12);
        CHECK((a - a.transpose()).norm() == 0.0);
    }

    ProjectorSpec g;
    g.n = 4;
    g.rank = 2;
    g.distribution = ProjectorDistribution::GenericGaussian;
    for (const auto& m : make_ensemble(g, 10, rng).matrices) {
        Eigen::JacobiSVD<MatrixXd> svd(m.sym());
        const VectorXd s = svd.singularValues();
        CHECK(s(1) > 1e-8 * s(0));
        CHECK(s(2) < 1e-12 * s(0));
    }

    ProjectorSpec id;
    id.n = 3;
    id.distribution = ProjectorDistribution::Explicit;
    id.explicit_projectors = {MatrixXd::Identity(3, 3).cast<std::complex<double>>()};
    CHECK(make_ensemble(id, 2, rng).matrices[1].sym() == MatrixXd::Identity(3, 3));

    ProjectorSpec bad;
    bad.n = 2;
    bad.rank = 3;
    CHECK_THROWS_AS(make_ensemble(bad, 1, rng), InvalidArgument);
}

TEST_CASE("forward measurement on small fixtures") {
    const Signal z = Signal::real(VectorXd::LinSpaced(3, 1, 3));
    MatrixXd a = MatrixXd::Zero(3, 3);
    a(0, 0) = 1;
    CHECK(MeasurementMatrix::real(a).measure(z) == 1.0);
    a(0, 1) = a(1, 0) = 1;
    CHECK(MeasurementMatrix::real(a).measure(z) == 5.0);
}

TEST_CASE("complex split measurement equals |P z|^2 in complex arithmetic") {
    Rng rng(19);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + trial % 4;
        const int r = 1 + trial % n;
        MatrixXcd p(r, n);
        p.real() = sample_gaussian(r, n, rng);
        p.imag() = sample_gaussian(r, n, rng);
        VectorXcd zc(n);
        zc.real() = sample_gaussian(n, 1, rng);
        zc.imag() = sample_gaussian(n, 1, rng);
        const double oracle = (p * zc).squaredNorm();
        const double got = MeasurementMatrix::from_projector(p).measure(Signal::from_complex(zc));
        CHECK(std::abs(got - oracle) <= 1e-10 * std::max(1.0, oracle));
    }
}

TEST_CASE("sign, phase, lifting and symmetrisation invariances") {
    Rng rng(23);
    ProjectorSpec spec;
    spec.n = 4;
    spec.distribution = ProjectorDistribution::GenericGaussian;
    const MeasurementEnsemble e = make_ensemble(spec, 6, rng);
    const Signal z = sample_signal(4, Mode::Real, rng);
    const Observation o = forward_measure(z, e);
    CHECK(o.b == forward_measure(z.negated(), e).b);
    for (int i = 0; i < e.k(); ++i) {
        const MatrixXd zz = z.x() * z.x().transpose();
        CHECK(std::abs((zz * e.matrices[i].sym()).trace() - o.b(i)) < 1e-12);
    }

    const MatrixXd m = sample_gaussian(4, 4, rng);
    const MatrixXd sym = 0.5 * (m + m.transpose());
    CHECK(std::abs(z.x().dot(m * z.x()) - MeasurementMatrix::real(sym).measure(z)) < 1e-12);

    spec.mode = Mode::ComplexSplit;
    spec.rank = 2;
    const MeasurementEnsemble ec = make_ensemble(spec, 5, rng);
    const Signal w = sample_signal(4, Mode::ComplexSplit, rng);
    const double th = 0.7;
    const Signal rot = Signal::complex_split(w.x() * std::cos(th) - w.y() * std::sin(th),
                                             w.x() * std::sin(th) + w.y() * std::cos(th));
    CHECK((forward_measure(w, ec).b - forward_measure(rot, ec).b).norm() < 1e-12);
    CHECK(relative_error(rot, w) < 1e-12);
}

TEST_CASE("noise") {
    Rng rng(5);
    Observation o;
    o.b = VectorXd::Ones(1000);
    Rng r0 = make_stream(1, {kStreamNoise});
    CHECK(add_noise(o, 0.0, r0).b == o.b);
    Rng r1 = make_stream(1, {kStreamNoise});
    Rng r2 = make_stream(1, {kStreamNoise});
    const Observation n1 = add_noise(o, 1e-2, r1);
    CHECK(n1.b == add_noise(o, 1e-2, r2).b);
    const VectorXd d = n1.b - o.b;
    const double sd = std::sqrt((d.array() - d.mean()).square().sum() / (d.size() - 1));
    CHECK(sd >= 0.008);
    CHECK(sd <= 0.012);
    CHECK(n1.clean.has_value());
    CHECK_THROWS_AS(add_noise(o, -1.0, rng), InvalidArgument);
}

TEST_CASE("instances depend only on their key") {
    ProjectorSpec spec;
    spec.n = 5;
    const Instance a = make_instance(spec, 7, 42, 3);
    const Instance b = make_instance(spec, 7, 42, 3);
    const Instance c = make_instance(spec, 7, 42, 4);
    CHECK(a.z.x() == b.z.x());
    CHECK(a.obs.b == b.obs.b);
    CHECK(a.z.x() != c.z.x());
}
