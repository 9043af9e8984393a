#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "gmatch/cli.hpp"
#include "gmatch/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gauss-match: closed-form Gaussian matching-market solver and estimator"};
  app.set_version_flag("--version", gmatch::kVersion);

  std::string command;
  std::string config_path, moments_path, sample_path, out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  gmatch::Index points = 0;
  double trunc = 0.0, tol = 0.0;
  bool quiet = false;

  app.add_option("command", command,
                 "solve | identify | estimate | statics | simulate | oracle-check | overid | payoffs");
  app.add_option("-c,--config", config_path, "JSON config file");
  app.add_option("--moments", moments_path, "JSON file with Sigma_X, Sigma_Y, Sigma_XY");
  app.add_option("--sample", sample_path, "CSV sample file (x1..xm,y1..yn[,tau])");
  app.add_option("--out", out_path, "write the result document here as well");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (required for randomized commands)");
  app.add_option("--points", points, "oracle grid points per dimension");
  app.add_option("--trunc", trunc, "oracle truncation in marginal standard deviations");
  app.add_option("--tol", tol, "oracle marginal residual tolerance");
  app.add_flag("--quiet", quiet, "suppress progress notes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  seed_set = seed_opt->count() > 0;

  try {
    gmatch::Json cfg_json = gmatch::Json::object();
    if (!config_path.empty()) cfg_json = gmatch::load_json_file(config_path);
    if (!command.empty()) cfg_json["command"] = command;
    if (!moments_path.empty()) cfg_json["moments"] = gmatch::load_json_file(moments_path);
    if (!sample_path.empty()) cfg_json["sample"] = sample_path;
    if (!out_path.empty()) cfg_json["out"] = out_path;
    if (seed_set) cfg_json["seed"] = seed;
    if (points > 0) cfg_json["points"] = points;
    if (trunc > 0) cfg_json["trunc"] = trunc;
    if (tol > 0) cfg_json["tol"] = tol;
    if (quiet) cfg_json["quiet"] = true;

    gmatch::RunConfig cfg = gmatch::parse_config(cfg_json);
    return gmatch::run(cfg, std::cout, std::cerr);
  } catch (const gmatch::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gmatch::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
