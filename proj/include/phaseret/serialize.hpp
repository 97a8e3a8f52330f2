#pragma once

// Versioned JSON documents for ensembles, observations and reports. Matrix
// and vector entries are written as C99 hex-float strings ("0x1.8p+1") so
// they round-trip bit for bit.

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "phaseret/identifiability.hpp"
#include "phaseret/inversion.hpp"
#include "phaseret/model.hpp"

namespace phaseret {

using Json = nlohmann::json;

inline constexpr const char* kInstanceSchema = "phaseret.instance";
inline constexpr int kSchemaVersion = 1;

std::string hexfloat(double v);
double parse_hexfloat(const std::string& s);

Json to_json(const MatrixXd& m);        ///< array of rows
MatrixXd matrix_from_json(const Json& j);
Json to_json(const VectorXd& v);
VectorXd vector_from_json(const Json& j);

/// A measurement instance: ensemble, observation and optionally the signal.
struct InstanceDocument {
    MeasurementEnsemble ensemble;
    Observation obs;
    std::optional<Signal> truth;
};

Json to_json(const InstanceDocument& doc);
InstanceDocument instance_from_json(const Json& j);

Json to_json(const Signal& z);
Signal signal_from_json(const Json& j);

Json to_json(const RecoveryReport& r);
Json to_json(const SolutionCensus& c);
Json to_json(const JacobianRank& r);
Json to_json(const ThresholdReport& r);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

} // namespace phaseret
