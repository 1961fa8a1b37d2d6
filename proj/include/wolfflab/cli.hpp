#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "wolfflab/errors.hpp"
#include "wolfflab/measure.hpp"
#include "wolfflab/params.hpp"
#include "wolfflab/suite.hpp"

namespace wolfflab::cli {

using json = nlohmann::json;

/// One parsed configuration document: {params, quad, measures, command}.
struct RunConfig {
  ProblemParams params;
  QuadratureConfig quad;
  std::map<std::string, RadonMeasure> measures;
  json command = json::object();
  std::string base_dir = ".";  // relative CSV paths resolve here
};

/// Parse errors name the key nearest to the failure.
json parse_json_text(const std::string& text);
RunConfig parse_config(const json& doc, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

ProblemParams parse_params(const json& j, const std::string& path);
QuadratureConfig parse_quad(const json& j, const std::string& path, QuadratureConfig base = {});

/// 2 for configuration/exponent errors, 3 numerical failure, 4 no convergence.
int exit_code(ErrorCode code);

/// One JSON object per record, keys in a fixed order.
std::string to_jsonl(const CheckRecord& r);
std::string to_jsonl(const SolveRecord& r, const std::string& cell);

/// argv-style entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wolfflab::cli
