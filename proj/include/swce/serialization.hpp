// JSON documents for replaying trials from disk. Complex numbers are
// [re, im] pairs; non-finite reals are the strings "inf", "-inf" and "nan".

#pragma once

#include <json.hpp>
#include <string>

#include "swce/estimator.hpp"

namespace swce {

using Json = nlohmann::json;

void to_json(Json& j, const SystemConfig& c);
void from_json(const Json& j, SystemConfig& c);

void to_json(Json& j, const TapSupport& s);
void from_json(const Json& j, TapSupport& s);

void to_json(Json& j, const PathParams& p);
void from_json(const Json& j, PathParams& p);

void to_json(Json& j, const Channel& c);
void from_json(const Json& j, Channel& c);

void to_json(Json& j, const QuantizerSpec& q);
void from_json(const Json& j, QuantizerSpec& q);

void to_json(Json& j, const DataPartition& p);
void from_json(const Json& j, DataPartition& p);

void to_json(Json& j, const QuantizedObservation& o);
void from_json(const Json& j, QuantizedObservation& o);

void to_json(Json& j, const CombinerSchedule& c);
void from_json(const Json& j, CombinerSchedule& c);

void to_json(Json& j, const EstimateState& s);
void from_json(const Json& j, EstimateState& s);

Json real_to_json(double x);
double real_from_json(const Json& j);
Json matrix_to_json(const MatrixXcd& m);  // row-major list of [re, im] rows
MatrixXcd matrix_from_json(const Json& j);

/// Dense sensing matrix dump.
Json operator_to_json(const SensingOperator& op);

void write_json(const Json& j, const std::string& path);
Json read_json(const std::string& path);

}  // namespace swce
