#include "phaseret/serialize.hpp"

#include "phaseret/errors.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace phaseret {

std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_hexfloat(const std::string& s) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE) {
        throw InvalidArgument("not a floating-point literal: '" + s + "'");
    }
    return v;
}

namespace {

double number_from_json(const Json& j) {
    if (j.is_string()) return parse_hexfloat(j.get<std::string>());
    if (j.is_number()) return j.get<double>();
    throw InvalidArgument("expected a number or hex-float string");
}

// Finite values as numbers, the rest as strings JSON can carry.
Json real_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

const Json& field(const Json& j, const char* key) {
    if (!j.contains(key)) throw InvalidArgument(std::string("missing field '") + key + "'");
    return j.at(key);
}

} // namespace

Json to_json(const MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(hexfloat(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidArgument("matrix must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.front().size()) : 0;
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw DimensionMismatch("ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = number_from_json(row[static_cast<std::size_t>(c)]);
    }
    return m;
}

Json to_json(const VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(hexfloat(v(i)));
    return a;
}

VectorXd vector_from_json(const Json& j) {
    if (!j.is_array()) throw InvalidArgument("vector must be an array");
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(j[i]);
    return v;
}

Json to_json(const Signal& z) {
    Json j{{"mode", to_string(z.mode())}, {"x", to_json(z.x())}};
    if (z.mode() == Mode::ComplexSplit) j["y"] = to_json(z.y());
    return j;
}

Signal signal_from_json(const Json& j) {
    const Mode mode = mode_from_string(field(j, "mode").get<std::string>());
    VectorXd x = vector_from_json(field(j, "x"));
    if (mode == Mode::Real) return Signal::real(std::move(x));
    return Signal::complex_split(std::move(x), vector_from_json(field(j, "y")));
}

Json to_json(const InstanceDocument& doc) {
    const MeasurementEnsemble& e = doc.ensemble;
    Json mats = Json::array();
    for (const auto& m : e.matrices) {
        Json entry{{"sym", to_json(m.sym())}, {"rank", m.rank_bound()}};
        if (e.mode == Mode::ComplexSplit) entry["skew"] = to_json(m.skew());
        mats.push_back(std::move(entry));
    }
    Json j{
        {"schema", kInstanceSchema},
        {"version", kSchemaVersion},
        {"mode", to_string(e.mode)},
        {"n", e.n},
        {"k", e.k()},
        {"r", e.rank()},
        {"distribution", to_string(e.spec.distribution)},
        {"matrices", std::move(mats)},
        {"b", to_json(doc.obs.b)},
        {"sigma", doc.obs.sigma},
    };
    j["seed"] = e.seed ? Json(*e.seed) : Json(nullptr);
    if (doc.obs.clean) j["clean"] = to_json(*doc.obs.clean);
    if (doc.truth) j["truth"] = to_json(*doc.truth);
    return j;
}

InstanceDocument instance_from_json(const Json& j) {
    if (field(j, "schema").get<std::string>() != kInstanceSchema) {
        throw InvalidArgument("unexpected schema '" + j.at("schema").get<std::string>() + "'");
    }
    const int version = field(j, "version").get<int>();
    if (version != kSchemaVersion) {
        throw InvalidArgument("unsupported instance version " + std::to_string(version));
    }
    const Mode mode = mode_from_string(field(j, "mode").get<std::string>());
    const int n = field(j, "n").get<int>();
    const int k = field(j, "k").get<int>();

    std::vector<MeasurementMatrix> mats;
    for (const Json& m : field(j, "matrices")) {
        const int rank = m.value("rank", -1);
        if (mode == Mode::Real) {
            mats.push_back(MeasurementMatrix::real(matrix_from_json(field(m, "sym")), rank));
        } else {
            mats.push_back(MeasurementMatrix::complex_split(matrix_from_json(field(m, "sym")),
                                                            matrix_from_json(field(m, "skew")), rank));
        }
    }
    if (static_cast<int>(mats.size()) != k) throw DimensionMismatch("k does not match the matrix count");

    InstanceDocument doc;
    doc.ensemble = MeasurementEnsemble::from_matrices(std::move(mats));
    if (doc.ensemble.n != n) throw DimensionMismatch("n does not match the matrices");
    doc.ensemble.spec.n = n;
    doc.ensemble.spec.mode = mode;
    doc.ensemble.spec.rank = doc.ensemble.rank() > 0 ? doc.ensemble.rank() : 1;
    if (j.contains("distribution")) {
        doc.ensemble.spec.distribution = distribution_from_string(j.at("distribution").get<std::string>());
    }
    if (j.contains("seed") && !j.at("seed").is_null()) doc.ensemble.seed = j.at("seed").get<std::uint64_t>();

    doc.obs.b = vector_from_json(field(j, "b"));
    if (doc.obs.k() != k) throw DimensionMismatch("b has the wrong length");
    doc.obs.sigma = j.value("sigma", 0.0);
    if (j.contains("clean")) doc.obs.clean = vector_from_json(j.at("clean"));
    if (j.contains("truth")) doc.truth = signal_from_json(j.at("truth"));
    return doc;
}

Json to_json(const RecoveryReport& r) {
    Json hist = Json::array();
    for (const auto& [t, c] : r.codim_history) hist.push_back({{"degree", t}, {"codim", c}});
    Json j{
        {"solver", r.solver},
        {"z_hat", to_json(r.z_hat)},
        {"stop_degree", r.stop_degree},
        {"singular_gap", real_number(r.singular_gap)},
        {"alpha", real_number(r.alpha)},
        {"scale_fallback", r.scale_fallback},
        {"success", r.success},
        {"underdetermined", r.underdetermined},
        {"resolved_by_consistency", r.resolved_by_consistency},
        {"residual", real_number(r.residual)},
        {"catalecticant_ratio", real_number(r.catalecticant_ratio)},
        {"codim_history", std::move(hist)},
        {"wall_ms", r.wall_ms},
    };
    j["rel_error"] = r.rel_error ? real_number(*r.rel_error) : Json(nullptr);
    return j;
}

Json to_json(const SolutionCensus& c) {
    Json reps = Json::array();
    for (std::size_t i = 0; i < c.representatives.size(); ++i) {
        reps.push_back({{"signal", to_json(c.representatives[i])},
                        {"residual", c.residuals[i]},
                        {"jacobian_rank", c.jacobian_ranks[i]}});
    }
    return Json{
        {"mode", to_string(c.mode)},
        {"classes", c.size()},
        {"unique", c.unique()},
        {"representatives", std::move(reps)},
        {"starts", c.starts},
        {"converged", c.converged},
        {"clustered", c.clustered},
        {"radius", c.radius},
        {"spread", c.spread},
        {"non_isolated", c.non_isolated},
    };
}

Json to_json(const JacobianRank& r) {
    Json sv = Json::array();
    for (Eigen::Index i = 0; i < r.singular_values.size(); ++i) sv.push_back(r.singular_values(i));
    return Json{{"rank", r.rank}, {"smallest", r.smallest}, {"singular_values", std::move(sv)}};
}

Json to_json(const ThresholdReport& r) {
    Json cells = Json::array();
    for (std::size_t i = 0; i < r.k_values.size(); ++i) {
        cells.push_back({{"k", r.k_values[i]}, {"successes", r.successes[i]}, {"frequency", r.frequencies[i]}});
    }
    Json j{
        {"n", r.n},
        {"r", r.rank},
        {"mode", to_string(r.mode)},
        {"distribution", to_string(r.distribution)},
        {"oracle", to_string(r.oracle)},
        {"trials", r.trials},
        {"frequency_threshold", r.frequency_threshold},
        {"cells", std::move(cells)},
        {"seed", r.seed},
    };
    j["lambda_hat"] = r.lambda_hat ? Json(*r.lambda_hat) : Json(nullptr);
    return j;
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace phaseret
