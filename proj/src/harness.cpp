#include "phaseret/harness.hpp"

#include "phaseret/errors.hpp"
#include "phaseret/inversion.hpp"
#include "phaseret/parallel.hpp"

#include "toml.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace phaseret {

const std::vector<std::string>& known_solvers() {
    static const std::vector<std::string> solvers{"ideal-regression", "lifted-ls"};
    return solvers;
}

// ---------------------------------------------------------------------------
// Configuration

std::vector<int> ExperimentConfig::resolved_k_range() const {
    if (!k_range.empty()) return k_range;
    std::vector<int> ks;
    for (int k = n + 1; k <= 3 * n; ++k) ks.push_back(k);
    return ks;
}

void ExperimentConfig::validate() const {
    if (n < 1) throw InvalidArgument("n must be >= 1");
    if (trials < 1) throw InvalidArgument("trials must be >= 1");
    if (sigmas.empty()) throw InvalidArgument("empty noise-level list");
    if (solvers.empty()) throw InvalidArgument("empty solver list");
    for (double s : sigmas) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("noise levels must be finite and >= 0");
    }
    for (int k : resolved_k_range()) {
        if (k < 1) throw InvalidArgument("k must be >= 1");
    }
    std::set<std::string> seen;
    for (const auto& s : solvers) {
        if (std::find(known_solvers().begin(), known_solvers().end(), s) == known_solvers().end()) {
            throw InvalidArgument("unknown solver '" + s + "'");
        }
        if (!seen.insert(s).second) throw InvalidArgument("solver '" + s + "' listed twice");
    }
    if (projector.mode != Mode::Real) {
        throw InvalidArgument("the harness solvers need real signals; projector mode is complex");
    }
    if (projector.distribution == ProjectorDistribution::Explicit) {
        throw InvalidArgument("experiments sample projectors; explicit ensembles are not supported");
    }
    if (!(success_threshold > 0.0)) throw InvalidArgument("success threshold must be > 0");
    if (n >= 10 && !allow_large &&
        std::find(solvers.begin(), solvers.end(), "ideal-regression") != solvers.end()) {
        throw InvalidArgument("n >= 10 prolongs up to degree n: expect tens of GB and hours per "
                              "cell; set allow_large to run it anyway");
    }
    ProjectorSpec spec = projector;
    spec.n = n;
    spec.validate();
}

namespace {

Json toml_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        Json j = Json::object();
        for (const auto& [key, value] : *t) j[std::string(key.str())] = toml_to_json(value);
        return j;
    }
    if (const auto* a = node.as_array()) {
        Json j = Json::array();
        for (const auto& value : *a) j.push_back(toml_to_json(value));
        return j;
    }
    if (const auto* v = node.as_integer()) return v->get();
    if (const auto* v = node.as_floating_point()) return v->get();
    if (const auto* v = node.as_boolean()) return v->get();
    if (const auto* v = node.as_string()) return v->get();
    throw InvalidArgument("unsupported TOML value (dates are not configuration values)");
}

std::vector<int> int_list(const Json& j, const char* key) {
    if (!j.is_array()) throw InvalidArgument(std::string(key) + " must be a list");
    return j.get<std::vector<int>>();
}

} // namespace

ExperimentConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("configuration must be a table");
    static const std::set<std::string> keys{
        "n", "k", "k_min", "k_max", "trials", "sigmas", "solvers", "seed", "out",
        "success_threshold", "allow_large", "timing", "threads", "projector"};
    for (const auto& [key, value] : j.items()) {
        if (!keys.count(key)) throw InvalidArgument("unknown configuration key '" + key + "'");
    }

    ExperimentConfig cfg;
    try {
        cfg.n = j.value("n", cfg.n);
        if (j.contains("k")) {
            if (j.contains("k_min") || j.contains("k_max")) {
                throw InvalidArgument("give either k or k_min/k_max");
            }
            cfg.k_range = int_list(j.at("k"), "k");
            if (cfg.k_range.empty()) throw InvalidArgument("empty k list");
        } else if (j.contains("k_min") || j.contains("k_max")) {
            const int lo = j.value("k_min", cfg.n + 1);
            const int hi = j.value("k_max", 3 * cfg.n);
            if (hi < lo) throw InvalidArgument("k_max < k_min");
            for (int k = lo; k <= hi; ++k) cfg.k_range.push_back(k);
        }
        cfg.trials = j.value("trials", cfg.trials);
        if (j.contains("sigmas")) cfg.sigmas = j.at("sigmas").get<std::vector<double>>();
        if (j.contains("solvers")) cfg.solvers = j.at("solvers").get<std::vector<std::string>>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
        cfg.success_threshold = j.value("success_threshold", cfg.success_threshold);
        cfg.allow_large = j.value("allow_large", cfg.allow_large);
        cfg.timing = j.value("timing", cfg.timing);
        cfg.threads = j.value("threads", cfg.threads);
        if (j.contains("projector")) {
            const Json& p = j.at("projector");
            for (const auto& [key, value] : p.items()) {
                if (key != "rank" && key != "distribution" && key != "mode") {
                    throw InvalidArgument("unknown projector key '" + key + "'");
                }
            }
            cfg.projector.rank = p.value("rank", cfg.projector.rank);
            if (p.contains("distribution")) {
                cfg.projector.distribution = distribution_from_string(p.at("distribution").get<std::string>());
            }
            if (p.contains("mode")) cfg.projector.mode = mode_from_string(p.at("mode").get<std::string>());
        }
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("bad configuration value: ") + e.what());
    }
    cfg.projector.n = cfg.n;
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    if (path.extension() == ".toml") {
        try {
            const toml::table t = toml::parse_file(path.string());
            return config_from_json(toml_to_json(t));
        } catch (const toml::parse_error& e) {
            throw IoError("malformed TOML in " + path.string() + ": " + std::string(e.description()));
        }
    }
    return config_from_json(read_json_file(path));
}

Json to_json(const ExperimentConfig& cfg) {
    return Json{
        {"n", cfg.n},
        {"k", cfg.resolved_k_range()},
        {"trials", cfg.trials},
        {"sigmas", cfg.sigmas},
        {"solvers", cfg.solvers},
        {"seed", cfg.seed},
        {"out", cfg.out_dir.string()},
        {"success_threshold", cfg.success_threshold},
        {"allow_large", cfg.allow_large},
        {"timing", cfg.timing},
        {"projector",
         {{"rank", cfg.projector.rank},
          {"distribution", to_string(cfg.projector.distribution)},
          {"mode", to_string(cfg.projector.mode)}}},
    };
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

ResultRow run_solver(const std::string& solver, const Instance& inst, const Observation& obs,
                     const ExperimentConfig& cfg) {
    ResultRow row;
    row.solver = solver;
    row.n = cfg.n;
    row.k = inst.ensemble.k();
    row.r = cfg.projector.rank;
    row.sigma = obs.sigma;
    row.seed = cfg.seed;

    InversionOptions io;
    io.truth = inst.z;
    io.success_threshold = cfg.success_threshold;
    try {
        const RecoveryReport rep = solver == "lifted-ls"
                                       ? invert_lifted_least_squares(inst.ensemble, obs, io)
                                       : invert_ideal_regression(inst.ensemble, obs, io);
        row.rel_error = rep.rel_error.value_or(1.0);
        row.success = rep.success;
        row.stop_degree = rep.stop_degree;
        row.alpha = rep.alpha;
        if (cfg.timing) row.wall_ms = rep.wall_ms;
    } catch (const NotIdentifiable&) {
    } catch (const NonGenericMeasurement&) {
    } catch (const IllConditioned&) {
    }
    return row;
}

} // namespace

ResultTable run_experiment(const ExperimentConfig& cfg_in) {
    ExperimentConfig cfg = cfg_in;
    cfg.projector.n = cfg.n;
    cfg.validate();
    if (!cfg.out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cfg.out_dir, ec);
        if (ec || !std::filesystem::is_directory(cfg.out_dir)) {
            throw IoError("output directory " + cfg.out_dir.string() + " is not writable");
        }
    }

    const std::vector<int> ks = cfg.resolved_k_range();
    const std::size_t n_solvers = cfg.solvers.size();
    const std::size_t n_sigmas = cfg.sigmas.size();
    const auto trials = static_cast<std::size_t>(cfg.trials);

    // One task per (k, trial); it runs every solver at every noise level so
    // the instance is drawn once.
    ResultTable table;
    table.rows.resize(n_solvers * ks.size() * n_sigmas * trials);
    auto slot = [&](std::size_t s, std::size_t ki, std::size_t si, std::size_t t) {
        return ((s * ks.size() + ki) * n_sigmas + si) * trials + t;
    };

    parallel_for(
        ks.size() * trials,
        [&](std::size_t task) {
            const std::size_t ki = task / trials;
            const std::size_t t = task % trials;
            const int k = ks[ki];
            const Instance inst = make_instance(cfg.projector, k, cfg.seed, t);
            for (std::size_t si = 0; si < n_sigmas; ++si) {
                Rng noise = make_stream(cfg.seed, {kStreamNoise, static_cast<std::uint64_t>(cfg.n),
                                                   static_cast<std::uint64_t>(k), t});
                const Observation obs = add_noise(inst.obs, cfg.sigmas[si], noise);
                for (std::size_t s = 0; s < n_solvers; ++s) {
                    ResultRow row = run_solver(cfg.solvers[s], inst, obs, cfg);
                    row.trial = static_cast<int>(t);
                    table.rows[slot(s, ki, si, t)] = std::move(row);
                }
            }
        },
        cfg.threads);
    return table;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_csv(const ResultTable& table, std::ostream& out) {
    out << kCsvVersionLine << '\n' << kCsvHeader << '\n';
    for (const auto& r : table.rows) {
        out << r.solver << ',' << r.n << ',' << r.k << ',' << r.r << ',' << format_double(r.sigma) << ','
            << r.trial << ',' << format_double(r.rel_error) << ',' << (r.success ? 1 : 0) << ','
            << r.stop_degree << ',' << format_double(r.alpha) << ',' << format_double(r.wall_ms) << ','
            << r.seed << '\n';
    }
}

void write_csv(const ResultTable& table, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(table, out);
    if (!out) throw IoError("write failed for " + path.string());
}

namespace {

template <typename T>
T parse_field(const std::string& s, const char* what) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw InvalidArgument(std::string("bad ") + what + " field '" + s + "'");
    }
    return v;
}

double parse_double_field(const std::string& s, const char* what) {
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return parse_field<double>(s, what);
}

} // namespace

ResultTable read_csv(std::istream& in) {
    ResultTable table;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != kCsvHeader) throw InvalidArgument("unexpected CSV header '" + line + "'");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 12) throw InvalidArgument("CSV line " + std::to_string(lineno) + ": expected 12 fields");
        ResultRow r;
        r.solver = f[0];
        r.n = parse_field<int>(f[1], "n");
        r.k = parse_field<int>(f[2], "k");
        r.r = parse_field<int>(f[3], "r");
        r.sigma = parse_double_field(f[4], "sigma");
        r.trial = parse_field<int>(f[5], "trial");
        r.rel_error = parse_double_field(f[6], "rel_error");
        r.success = parse_field<int>(f[7], "success") != 0;
        r.stop_degree = parse_field<int>(f[8], "stop_degree");
        r.alpha = parse_double_field(f[9], "alpha");
        r.wall_ms = parse_double_field(f[10], "wall_ms");
        r.seed = parse_field<std::uint64_t>(f[11], "seed");
        table.rows.push_back(std::move(r));
    }
    if (!header) throw InvalidArgument("CSV without header");
    return table;
}

ResultTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_csv(in);
}

// ---------------------------------------------------------------------------
// Aggregation

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary aggregate(const ResultTable& table) {
    if (table.rows.empty()) throw InvalidArgument("cannot aggregate an empty table");
    using Key = std::tuple<std::string, int, int, double>;
    std::map<Key, std::vector<const ResultRow*>> groups;
    for (const auto& r : table.rows) groups[{r.solver, r.n, r.k, r.sigma}].push_back(&r);

    Summary s;
    for (const auto& [key, rows] : groups) {
        SummaryCell c;
        std::tie(c.solver, c.n, c.k, c.sigma) = key;
        c.trials = static_cast<int>(rows.size());
        std::vector<double> errs;
        for (const ResultRow* r : rows) {
            c.successes += r->success ? 1 : 0;
            errs.push_back(r->rel_error);
        }
        c.success_rate = static_cast<double>(c.successes) / c.trials;
        c.q1 = quantile(errs, 0.25);
        c.median = quantile(errs, 0.5);
        c.q3 = quantile(errs, 0.75);
        s.cells.push_back(std::move(c));
    }
    return s;
}

Json to_json(const Summary& summary) {
    Json cells = Json::array();
    for (const auto& c : summary.cells) {
        cells.push_back({{"solver", c.solver},
                         {"n", c.n},
                         {"k", c.k},
                         {"sigma", c.sigma},
                         {"trials", c.trials},
                         {"successes", c.successes},
                         {"success_rate", c.success_rate},
                         {"q1", c.q1},
                         {"median", c.median},
                         {"q3", c.q3}});
    }
    return Json{{"cells", std::move(cells)}};
}

void write_summary_csv(const Summary& summary, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "solver,n,k,sigma,trials,successes,success_rate,q1,median,q3\n";
    for (const auto& c : summary.cells) {
        out << c.solver << ',' << c.n << ',' << c.k << ',' << format_double(c.sigma) << ',' << c.trials << ','
            << c.successes << ',' << format_double(c.success_rate) << ',' << format_double(c.q1) << ','
            << format_double(c.median) << ',' << format_double(c.q3) << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace phaseret
