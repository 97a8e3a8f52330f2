#include "doctest.h"

#include "phaseret/errors.hpp"
#include "phaseret/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace phaseret;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("phaseret_test_" + name);
    fs::remove_all(p);
    return p;
}

std::size_t occurrences(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

ResultRow row(const std::string& solver, int k, double sigma, int trial, double err, bool ok) {
    ResultRow r;
    r.solver = solver;
    r.n = 3;
    r.k = k;
    r.sigma = sigma;
    r.trial = trial;
    r.rel_error = err;
    r.success = ok;
    return r;
}

} // namespace

TEST_CASE("quantiles interpolate between order statistics") {
    const std::vector<double> five{10.0, 1.0, 4.0, 3.0, 2.0};
    CHECK(quantile(five, 0.25) == 2.0);
    CHECK(quantile(five, 0.5) == 3.0);
    CHECK(quantile(five, 0.75) == 4.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({7.0}, 0.75) == 7.0);
    CHECK_THROWS_AS(quantile({}, 0.5), InvalidArgument);
}

TEST_CASE("aggregation") {
    ResultTable t;
    const double errs[] = {10.0, 1.0, 4.0, 3.0, 2.0};
    for (int i = 0; i < 5; ++i) t.rows.push_back(row("ideal-regression", 4, 0.0, i, errs[i], i != 0));
    for (int i = 0; i < 3; ++i) t.rows.push_back(row("lifted-ls", 4, 0.0, i, 1e-12, true));
    const Summary s = aggregate(t);
    REQUIRE(s.cells.size() == 2);
    CHECK(s.cells[0].solver == "ideal-regression");
    CHECK(s.cells[0].success_rate == doctest::Approx(0.8));
    CHECK(s.cells[0].q1 == 2.0);
    CHECK(s.cells[0].median == 3.0);
    CHECK(s.cells[0].q3 == 4.0);
    CHECK(s.cells[1].success_rate == 1.0);

    std::mt19937 g(4);
    for (int rep = 0; rep < 5; ++rep) {
        ResultTable shuffled = t;
        std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), g);
        CHECK(to_json(aggregate(shuffled)) == to_json(s));
    }
    CHECK_THROWS_AS(aggregate(ResultTable{}), InvalidArgument);
}

TEST_CASE("csv round trip") {
    ResultTable t;
    t.rows.push_back(row("ideal-regression", 7, 1e-4, 0, 0.1 + 0.2, true));
    t.rows.push_back(row("lifted-ls", 21, 0.0, 3, 1.0, false));
    t.rows[1].stop_degree = 5;
    t.rows[1].alpha = 1.0 / 3.0;
    t.rows[1].seed = 18446744073709551615ull;
    std::stringstream ss;
    write_csv(t, ss);
    CHECK(ss.str().find(kCsvHeader) != std::string::npos);
    const ResultTable back = read_csv(ss);
    CHECK(back.rows == t.rows);
    CHECK(format_double(1e-4) == "1e-04");
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(0.0) == "0");

    std::stringstream bad("solver,n\nx,1\n");
    CHECK_THROWS_AS(read_csv(bad), InvalidArgument);
}

TEST_CASE("experiments are deterministic and well shaped") {
    ExperimentConfig cfg;
    cfg.n = 3;
    cfg.k_range = {4, 6};
    cfg.trials = 4;
    cfg.sigmas = {0.0, 1e-6};
    cfg.solvers = {"ideal-regression", "lifted-ls"};
    cfg.seed = 5;
    cfg.out_dir = scratch("exp");
    const ResultTable a = run_experiment(cfg);
    CHECK(a.rows.size() == 2u * 2u * 2u * 4u);
    CHECK(a.rows.front().solver == "ideal-regression");
    CHECK(a.rows.back().solver == "lifted-ls");
    CHECK(a.rows.back().k == 6);
    CHECK(a.rows.back().trial == 3);
    cfg.threads = 3;
    const ResultTable b = run_experiment(cfg);
    std::stringstream sa, sb;
    write_csv(a, sa);
    write_csv(b, sb);
    CHECK(sa.str() == sb.str());
    for (const auto& r : a.rows) CHECK(r.wall_ms == 0.0);
}

TEST_CASE("lifted least squares is exact at k = n(n+1)/2") {
    ExperimentConfig cfg;
    cfg.n = 3;
    cfg.k_range = {6};
    cfg.trials = 10;
    cfg.solvers = {"lifted-ls"};
    cfg.out_dir = scratch("lifted");
    const Summary s = aggregate(run_experiment(cfg));
    REQUIRE(s.cells.size() == 1);
    CHECK(s.cells[0].success_rate == 1.0);
}

TEST_CASE("configuration files") {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    {
        std::ofstream(dir / "a.toml") << "n = 4\nk_min = 5\nk_max = 7\ntrials = 3\nsigmas = [0.0, 1e-4]\n"
                                         "solvers = [\"lifted-ls\"]\nseed = 12\n[projector]\nrank = 2\n"
                                         "distribution = \"gaussian\"\n";
        std::ofstream(dir / "b.json") << R"({"n": 4, "k": [5, 6, 7], "trials": 3, "sigmas": [0.0, 1e-4],
            "solvers": ["lifted-ls"], "seed": 12, "projector": {"rank": 2, "distribution": "gaussian"}})";
        std::ofstream(dir / "bad.json") << R"({"n": 4, "trails": 3})";
    }
    const ExperimentConfig a = load_config(dir / "a.toml");
    const ExperimentConfig b = load_config(dir / "b.json");
    CHECK(to_json(a) == to_json(b));
    CHECK(a.resolved_k_range() == std::vector<int>{5, 6, 7});
    CHECK(a.projector.rank == 2);
    CHECK(a.projector.distribution == ProjectorDistribution::GenericGaussian);
    CHECK_THROWS_AS(load_config(dir / "bad.json"), InvalidArgument);

    ExperimentConfig d;
    CHECK(d.resolved_k_range().front() == 7);
    CHECK(d.resolved_k_range().back() == 18);

    ExperimentConfig big;
    big.n = 10;
    CHECK_THROWS_AS(big.validate(), InvalidArgument);
    big.allow_large = true;
    CHECK_NOTHROW(big.validate());

    ExperimentConfig cx;
    cx.projector.mode = Mode::ComplexSplit;
    CHECK_THROWS_AS(cx.validate(), InvalidArgument);
    ExperimentConfig neg;
    neg.sigmas = {-1.0};
    CHECK_THROWS_AS(neg.validate(), InvalidArgument);
}

TEST_CASE("plots") {
    Summary s;
    for (int k = 4; k <= 6; ++k) {
        for (double sigma : {0.0, 1e-4, 1e-2}) {
            SummaryCell c;
            c.solver = "ideal-regression";
            c.n = 3;
            c.k = k;
            c.sigma = sigma;
            c.trials = 10;
            c.successes = sigma == 0.0 ? 10 : 0;
            c.success_rate = c.successes / 10.0;
            c.q1 = sigma * 0.5 + 1e-15;
            c.median = sigma + 2e-15;
            c.q3 = sigma * 2 + 4e-15;
            s.cells.push_back(c);
        }
    }
    const auto files = render_plots(s, PlotStyle{});
    REQUIRE(files.size() == 3);
    CHECK(files[0].first == "recovery.svg");
    CHECK(files[1].first == "error_sigma_1e-02.svg");
    CHECK(files[2].first == "error_sigma_1e-04.svg");
    const std::string& rec = files[0].second;
    CHECK(occurrences(rec, "<polyline") == 1);
    CHECK(rec.find(">k</text>") != std::string::npos);
    CHECK(rec.find(">rate</text>") != std::string::npos);
    CHECK(rec.rfind("<svg", 0) == 0);
    CHECK(rec.find("href") == std::string::npos);
    CHECK(occurrences(files[1].second, "<polygon") == 1);
    CHECK(render_plots(s, PlotStyle{}) == files);

    const fs::path dir = scratch("plots");
    CHECK(emit_plots(s, PlotStyle{}, dir).size() == 3);
    CHECK(fs::exists(dir / "recovery.svg"));
    CHECK_THROWS_AS(render_plots(Summary{}, PlotStyle{}), InvalidArgument);
}
