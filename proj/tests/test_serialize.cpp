#include "doctest.h"

#include "phaseret/errors.hpp"
#include "phaseret/serialize.hpp"

#include <cstring>
#include <limits>

using namespace phaseret;

TEST_CASE("hex floats round trip bit for bit") {
    Rng rng(1);
    const MatrixXd m = sample_gaussian(20, 20, rng);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m.data()[i] * 1e-7;
        const double back = parse_hexfloat(hexfloat(v));
        CHECK(std::memcmp(&v, &back, sizeof v) == 0);
    }
    CHECK(parse_hexfloat(hexfloat(std::numeric_limits<double>::denorm_min())) ==
          std::numeric_limits<double>::denorm_min());
    CHECK(hexfloat(3.0) == "0x1.8p+1");
    CHECK_THROWS_AS(parse_hexfloat("0x1.8p+1junk"), InvalidArgument);
}

TEST_CASE("instance documents round trip") {
    for (Mode mode : {Mode::Real, Mode::ComplexSplit}) {
        ProjectorSpec spec;
        spec.n = 4;
        spec.rank = 2;
        spec.mode = mode;
        spec.distribution = ProjectorDistribution::GenericGaussian;
        const Instance inst = make_instance(spec, 6, 99, 2);
        InstanceDocument doc{inst.ensemble, inst.obs, inst.z};
        const InstanceDocument back = instance_from_json(Json::parse(to_json(doc).dump()));
        CHECK(back.ensemble.mode == mode);
        CHECK(back.ensemble.k() == 6);
        CHECK(back.ensemble.rank() == 2);
        CHECK(back.ensemble.seed == inst.ensemble.seed);
        CHECK(back.ensemble.spec.distribution == ProjectorDistribution::GenericGaussian);
        for (int i = 0; i < 6; ++i) {
            CHECK(back.ensemble.matrices[i].sym() == inst.ensemble.matrices[i].sym());
            if (mode == Mode::ComplexSplit) CHECK(back.ensemble.matrices[i].skew() == inst.ensemble.matrices[i].skew());
        }
        CHECK(back.obs.b == inst.obs.b);
        REQUIRE(back.truth);
        CHECK(back.truth->x() == inst.z.x());
        CHECK(back.truth->y() == inst.z.y());
    }
}

TEST_CASE("malformed documents are rejected") {
    ProjectorSpec spec;
    spec.n = 3;
    const Instance inst = make_instance(spec, 4, 1, 0);
    Json j = to_json(InstanceDocument{inst.ensemble, inst.obs, std::nullopt});
    Json wrong = j;
    wrong["schema"] = "something.else";
    CHECK_THROWS_AS(instance_from_json(wrong), InvalidArgument);
    wrong = j;
    wrong["version"] = 2;
    CHECK_THROWS_AS(instance_from_json(wrong), InvalidArgument);
    wrong = j;
    wrong["b"].erase(0);
    CHECK_THROWS_AS(instance_from_json(wrong), DimensionMismatch);
    wrong = j;
    wrong.erase("matrices");
    CHECK_THROWS_AS(instance_from_json(wrong), InvalidArgument);
    // Plain decimal numbers are accepted as well.
    j["b"] = Json::array({1.0, 2.0, 3.0, 4.0});
    CHECK(instance_from_json(j).obs.b(3) == 4.0);
}
