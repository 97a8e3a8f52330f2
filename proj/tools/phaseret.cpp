// Command-line front end: simulate, invert, certify, threshold, experiment, plot.

#include "CLI11.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/harness.hpp"
#include "phaseret/identifiability.hpp"
#include "phaseret/inversion.hpp"
#include "phaseret/serialize.hpp"

#include <fstream>
#include <iostream>

using namespace phaseret;

namespace {

enum Exit { kOk = 0, kFailure = 1, kNotIdentifiable = 2, kNonGeneric = 3, kIllConditioned = 4 };

void emit(const Json& j, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << j.dump(2) << '\n';
    } else {
        write_json_file(out, j);
    }
}

ProjectorSpec projector_from(int n, int r, const std::string& dist, const std::string& mode) {
    ProjectorSpec spec;
    spec.n = n;
    spec.rank = r;
    spec.distribution = distribution_from_string(dist);
    spec.mode = mode_from_string(mode);
    spec.validate();
    return spec;
}

struct ProjectorArgs {
    int n = 6;
    int r = 1;
    std::string distribution = "haar";
    std::string mode = "real";

    void add(CLI::App* app) {
        app->add_option("-n,--n", n, "signal dimension")->check(CLI::PositiveNumber);
        app->add_option("-r,--rank", r, "projector rank")->check(CLI::PositiveNumber);
        app->add_option("--distribution", distribution, "gaussian or haar")
            ->check(CLI::IsMember({"gaussian", "haar"}));
        app->add_option("--mode", mode, "real or complex")->check(CLI::IsMember({"real", "complex"}));
    }
};

int run_invert(const std::string& path, const std::string& solver, const std::string& out) {
    const InstanceDocument doc = instance_from_json(read_json_file(path));
    InversionOptions io;
    io.truth = doc.truth;
    try {
        const RecoveryReport rep = solver == "lifted-ls" ? invert_lifted_least_squares(doc.ensemble, doc.obs, io)
                                                         : invert_ideal_regression(doc.ensemble, doc.obs, io);
        emit(to_json(rep), out);
        return kOk;
    } catch (const NotIdentifiable& e) {
        std::cerr << "not identifiable: " << e.what() << '\n';
        return kNotIdentifiable;
    } catch (const NonGenericMeasurement& e) {
        std::cerr << "non-generic measurement: " << e.what() << '\n';
        return kNonGeneric;
    } catch (const IllConditioned& e) {
        std::cerr << "ill-conditioned: " << e.what() << '\n';
        return kIllConditioned;
    }
}

Json run_certify(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> starts) {
    const InstanceDocument doc = instance_from_json(read_json_file(path));
    CensusOptions co;
    co.starts = starts;
    co.seed = seed.value_or(doc.ensemble.seed.value_or(0));
    const SolutionCensus census = count_solutions(doc.ensemble, doc.obs, co);
    Json j{{"census", to_json(census)}, {"n", doc.ensemble.n}, {"k", doc.ensemble.k()}};
    if (doc.truth) j["jacobian_at_truth"] = to_json(jacobian_rank(doc.ensemble, *doc.truth));
    Json ranks = Json::array();
    for (const auto& z : census.representatives) ranks.push_back(to_json(jacobian_rank(doc.ensemble, z)));
    j["jacobian_at_representatives"] = std::move(ranks);
    return j;
}

void write_threshold_csv(const ThresholdReport& r, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "oracle,n,r,mode,distribution,k,trials,successes,frequency,seed\n";
    for (std::size_t i = 0; i < r.k_values.size(); ++i) {
        out << to_string(r.oracle) << ',' << r.n << ',' << r.rank << ',' << to_string(r.mode) << ','
            << to_string(r.distribution) << ',' << r.k_values[i] << ',' << r.trials << ',' << r.successes[i]
            << ',' << format_double(r.frequencies[i]) << ',' << r.seed << '\n';
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"phaseret: phase retrieval by ideal regression"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "draw one instance and write it as JSON");
    ProjectorArgs sim_proj;
    sim_proj.add(sim);
    int sim_k = 7;
    std::uint64_t sim_seed = 0, sim_trial = 0;
    double sim_sigma = 0.0;
    std::string sim_out;
    sim->add_option("-k,--k", sim_k, "number of measurements")->check(CLI::PositiveNumber);
    sim->add_option("--seed", sim_seed, "master seed");
    sim->add_option("--trial", sim_trial, "trial index within the seed");
    sim->add_option("--sigma", sim_sigma, "Gaussian noise level")->check(CLI::NonNegativeNumber);
    sim->add_option("--out", sim_out, "output file (default stdout)");

    // invert
    auto* inv = app.add_subcommand("invert", "recover the signal of an instance");
    std::string inv_path, inv_solver = "ideal-regression", inv_out;
    inv->add_option("instance", inv_path, "instance JSON")->required()->check(CLI::ExistingFile);
    inv->add_option("--solver", inv_solver, "ideal-regression or lifted-ls")
        ->check(CLI::IsMember(known_solvers()));
    inv->add_option("--out", inv_out, "report file (default stdout)");

    // certify
    auto* cert = app.add_subcommand("certify", "solution census and Jacobian ranks of an instance");
    std::string cert_path, cert_out;
    std::optional<std::uint64_t> cert_seed;
    std::optional<int> cert_starts;
    cert->add_option("instance", cert_path, "instance JSON")->required()->check(CLI::ExistingFile);
    cert->add_option("--seed", cert_seed, "census seed (default: the instance seed)");
    cert->add_option("--starts", cert_starts, "number of multistart runs")->check(CLI::PositiveNumber);
    cert->add_option("--out", cert_out, "report file (default stdout)");

    // threshold
    auto* thr = app.add_subcommand("threshold", "empirical generic identifiability threshold");
    ProjectorArgs thr_proj;
    thr_proj.n = 3;
    thr_proj.add(thr);
    int thr_kmin = 0, thr_kmax = 0, thr_trials = 50;
    std::uint64_t thr_seed = 0;
    std::string thr_oracle = "census", thr_out = "threshold";
    thr->add_option("--k-min", thr_kmin, "smallest k (default n)");
    thr->add_option("--k-max", thr_kmax, "largest k (default n + 2)");
    thr->add_option("--trials", thr_trials, "trials per k")->check(CLI::PositiveNumber);
    thr->add_option("--seed", thr_seed, "master seed");
    thr->add_option("--solver,--oracle", thr_oracle, "census or ideal-regression")
        ->check(CLI::IsMember({"census", "ideal-regression"}));
    thr->add_option("--out", thr_out, "output directory");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Monte-Carlo sweep writing results.csv and a summary");
    std::string exp_config;
    std::optional<std::uint64_t> exp_seed;
    std::optional<std::string> exp_out;
    std::vector<std::string> exp_solvers;
    std::optional<int> exp_trials;
    std::vector<double> exp_sigmas;
    bool exp_timing = false, exp_allow_large = false, exp_plots = false;
    exp->add_option("--config", exp_config, "TOML or JSON configuration")->check(CLI::ExistingFile);
    exp->add_option("--seed", exp_seed, "master seed override");
    exp->add_option("--out", exp_out, "output directory override");
    exp->add_option("--solver", exp_solvers, "solver override (repeatable)")->check(CLI::IsMember(known_solvers()));
    exp->add_option("--trials", exp_trials, "trials per cell override")->check(CLI::PositiveNumber);
    exp->add_option("--sigma", exp_sigmas, "noise level override (repeatable)")->check(CLI::NonNegativeNumber);
    exp->add_flag("--timing", exp_timing, "record wall-clock times (CSV is then not reproducible)");
    exp->add_flag("--allow-large", exp_allow_large, "permit n >= 10 (very slow, tens of GB)");
    exp->add_flag("--plots", exp_plots, "also write the SVG figures");

    // plot
    auto* plt = app.add_subcommand("plot", "SVG figures from a results CSV");
    std::string plt_in, plt_out = "plots", plt_title;
    plt->add_option("results", plt_in, "results.csv")->required()->check(CLI::ExistingFile);
    plt->add_option("--out", plt_out, "output directory");
    plt->add_option("--title", plt_title, "figure title prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            const ProjectorSpec spec = projector_from(sim_proj.n, sim_proj.r, sim_proj.distribution, sim_proj.mode);
            const Instance inst = make_instance(spec, sim_k, sim_seed, sim_trial);
            InstanceDocument doc{inst.ensemble, inst.obs, inst.z};
            if (sim_sigma > 0.0) {
                Rng noise = make_stream(sim_seed, {kStreamNoise, static_cast<std::uint64_t>(spec.n),
                                                   static_cast<std::uint64_t>(sim_k), sim_trial});
                doc.obs = add_noise(inst.obs, sim_sigma, noise);
            }
            emit(to_json(doc), sim_out);
        } else if (*inv) {
            return run_invert(inv_path, inv_solver, inv_out);
        } else if (*cert) {
            emit(run_certify(cert_path, cert_seed, cert_starts), cert_out);
        } else if (*thr) {
            const ProjectorSpec spec = projector_from(thr_proj.n, thr_proj.r, thr_proj.distribution, thr_proj.mode);
            const int lo = thr_kmin > 0 ? thr_kmin : spec.n;
            const int hi = thr_kmax > 0 ? thr_kmax : spec.n + 2;
            if (hi < lo) throw InvalidArgument("--k-max < --k-min");
            std::vector<int> ks;
            for (int k = lo; k <= hi; ++k) ks.push_back(k);
            ThresholdOptions opts;
            opts.oracle = oracle_from_string(thr_oracle);
            const ThresholdReport rep = estimate_generic_threshold(spec.n, spec, ks, thr_trials, thr_seed, opts);
            const std::filesystem::path dir = thr_out;
            write_json_file(dir / "threshold.json", to_json(rep));
            write_threshold_csv(rep, dir / "threshold.csv");
            std::cout << "lambda_hat = " << (rep.lambda_hat ? std::to_string(*rep.lambda_hat) : "none") << '\n';
        } else if (*exp) {
            ExperimentConfig cfg = exp_config.empty() ? ExperimentConfig{} : load_config(exp_config);
            if (exp_seed) cfg.seed = *exp_seed;
            if (exp_out) cfg.out_dir = *exp_out;
            if (!exp_solvers.empty()) cfg.solvers = exp_solvers;
            if (exp_trials) cfg.trials = *exp_trials;
            if (!exp_sigmas.empty()) cfg.sigmas = exp_sigmas;
            cfg.timing = cfg.timing || exp_timing;
            cfg.allow_large = cfg.allow_large || exp_allow_large;
            const ResultTable table = run_experiment(cfg);
            const Summary summary = aggregate(table);
            write_csv(table, cfg.out_dir / "results.csv");
            write_summary_csv(summary, cfg.out_dir / "summary.csv");
            write_json_file(cfg.out_dir / "config.json", to_json(cfg));
            if (exp_plots) emit_plots(summary, PlotStyle{}, cfg.out_dir);
            for (const auto& c : summary.cells) {
                std::cout << c.solver << " k=" << c.k << " sigma=" << format_double(c.sigma)
                          << " rate=" << format_double(c.success_rate) << " median=" << format_double(c.median)
                          << '\n';
            }
        } else if (*plt) {
            PlotStyle style;
            style.title = plt_title;
            for (const auto& p : emit_plots(aggregate(read_csv(std::filesystem::path(plt_in))), style, plt_out)) {
                std::cout << p.string() << '\n';
            }
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
        return kFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kOk;
}
