#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "gmatch/io.hpp"
#include "gmatch/model.hpp"

namespace gmatch {

enum class Command { Solve, Identify, Estimate, Statics, Simulate, OracleCheck, Overid, Payoffs };

const char* command_name(Command c);
Command command_from_string(const std::string& s);

struct RunConfig {
  Command command = Command::Solve;
  std::optional<MatchingModel> model;
  std::optional<MomentSet> moments;
  std::string sample_path;      // input CSV
  std::string sample_out_path;  // output CSV for simulate
  std::string out_path;         // result JSON target, optional
  std::optional<std::uint64_t> seed;
  Index n = 0;                  // draws for simulate
  Index points = 201;           // oracle grid points per dimension
  double trunc = 5.0;           // oracle truncation, marginal standard deviations
  double tol = 1e-12;           // oracle marginal residual target
  int max_iter = 100000;
  double gate = 1e-2;           // oracle-check pass threshold
  Index n_sim = 2000;
  Index n_permutations = 99;
  std::optional<Vector> at_x, at_y;  // evaluation point for payoffs
  double sigma = 1.0;                // scale for identify
  bool quiet = false;
  NumericPolicy policy;
  Json echo;  // resolved config, embedded in the result document
};

/// Validates a merged JSON config and builds the run plan. Rejects unknown
/// keys and reports every violated requirement.
RunConfig parse_config(const Json& j);

/// Executes the command, streaming the result document to `out` and
/// progress notes to `log`. Domain failures are thrown as gmatch::Error.
int run(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Exit code for an error escaping run(): 2 for config/usage trouble,
/// 1 for domain errors.
int exit_code_for(const Error& e);

}  // namespace gmatch
