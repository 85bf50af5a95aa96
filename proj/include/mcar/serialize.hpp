#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mcar/analytic.hpp"
#include "mcar/hypothesis.hpp"
#include "mcar/measures.hpp"
#include "mcar/simulate.hpp"

namespace mcar::io {

using json = nlohmann::ordered_json;

json to_json(const Matrix& m);
json to_json(const Vector& v);
json to_json(const PatternSet& ps);  // 1-based, in source-column labels
json to_json(const MatrixSeq& seq);
json to_json(const VecSeq& seq);
json to_json(const SolveDiagnostics& d);
json to_json(const IncompatibilityReport& r);
json to_json(const std::vector<DroppedPattern>& dropped);
json to_json(const TestResult& t);
json to_json(const EMResult& e);
json to_json(const LittleResult& l);
json to_json(const sdp::SolverConfig& c);
json to_json(const OracleConfig& c);
json to_json(const BootstrapConfig& c);
json to_json(const sim::GeneratorSpec& g);
json to_json(const sim::DeletionSpec& d);
json to_json(const sim::PowerCurveSpec& s);
json to_json(const sim::PowerPoint& p);

// Overwrite only the fields present in j.
void apply(const json& j, sdp::SolverConfig& c);
void apply(const json& j, OracleConfig& c);
void apply(const json& j, BootstrapConfig& c);

// "pi/3", "5pi/6", "0.25*pi", "-pi", or a plain number.
double parse_angle(const std::string& s);
double angle_from_json(const json& j);

struct Preset {
  std::string name;
  std::string description;
  std::string reconstruction;
  std::vector<std::string> labels;
  std::vector<sim::PowerCurveSpec> curves;
};

// Column indices in presets are 1-based.
Preset preset_from_json(const json& j);
json preset_to_json(const Preset& p);

}  // namespace mcar::io
