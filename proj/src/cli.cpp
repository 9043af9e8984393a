#include "gmatch/cli.hpp"

#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "gmatch/equilibrium.hpp"
#include "gmatch/identification.hpp"
#include "gmatch/simulate.hpp"
#include "gmatch/statics.hpp"
#include "gmatch/version.hpp"

namespace gmatch {

const char* command_name(Command c) {
  switch (c) {
    case Command::Solve: return "solve";
    case Command::Identify: return "identify";
    case Command::Estimate: return "estimate";
    case Command::Statics: return "statics";
    case Command::Simulate: return "simulate";
    case Command::OracleCheck: return "oracle-check";
    case Command::Overid: return "overid";
    case Command::Payoffs: return "payoffs";
  }
  return "?";
}

Command command_from_string(const std::string& s) {
  for (Command c : {Command::Solve, Command::Identify, Command::Estimate, Command::Statics,
                    Command::Simulate, Command::OracleCheck, Command::Overid, Command::Payoffs})
    if (s == command_name(c)) return c;
  fail(Errc::ValidationError, "unknown command \"" + s + "\"");
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::ParseError:
    case Errc::ValidationError:
    case Errc::InvalidConfig:
    case Errc::HeaderMismatch:
    case Errc::NonNumericCell:
      return 2;
    default:
      return 1;
  }
}

namespace {

Vector vector_from_json(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) fail(Errc::ParseError, name + ": expected an array of numbers");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(Errc::ParseError, name + ": non-numeric entry");
    v[Index(i)] = j[i].get<double>();
  }
  return v;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

RunConfig parse_config(const Json& j) {
  if (!j.is_object()) fail(Errc::ParseError, "config: expected a JSON object");
  static const char* allowed[] = {"command", "model",   "moments", "sample", "sample_out",
                                  "out",     "seed",    "n",       "points", "trunc",
                                  "tol",     "max_iter", "gate",   "n_sim",  "n_permutations",
                                  "x",       "y",       "sigma",   "quiet"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) fail(Errc::ValidationError, "config: unknown key \"" + it.key() + "\"");
  }
  if (!j.contains("command")) fail(Errc::ValidationError, "config: \"command\" required");

  RunConfig cfg;
  cfg.command = command_from_string(j["command"].get<std::string>());
  if (j.contains("model")) cfg.model = model_from_json(j["model"]);
  if (j.contains("moments")) cfg.moments = moments_from_json(j["moments"]);
  if (j.contains("sample")) cfg.sample_path = j["sample"].get<std::string>();
  if (j.contains("sample_out")) cfg.sample_out_path = j["sample_out"].get<std::string>();
  if (j.contains("out")) cfg.out_path = j["out"].get<std::string>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("n")) cfg.n = j["n"].get<Index>();
  if (j.contains("points")) cfg.points = j["points"].get<Index>();
  if (j.contains("trunc")) cfg.trunc = j["trunc"].get<double>();
  if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
  if (j.contains("max_iter")) cfg.max_iter = j["max_iter"].get<int>();
  if (j.contains("gate")) cfg.gate = j["gate"].get<double>();
  if (j.contains("n_sim")) cfg.n_sim = j["n_sim"].get<Index>();
  if (j.contains("n_permutations")) cfg.n_permutations = j["n_permutations"].get<Index>();
  if (j.contains("x")) cfg.at_x = vector_from_json(j["x"], "config.x");
  if (j.contains("y")) cfg.at_y = vector_from_json(j["y"], "config.y");
  if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
  if (j.contains("quiet")) cfg.quiet = j["quiet"].get<bool>();
  cfg.echo = j;

  std::vector<std::string> missing;
  auto need = [&](bool present, const char* what) {
    if (!present) missing.push_back(what);
  };
  switch (cfg.command) {
    case Command::Solve:
      need(cfg.model.has_value(), "model");
      break;
    case Command::Identify:
      need(cfg.moments.has_value(), "moments");
      if (!(cfg.sigma > 0)) missing.push_back("positive sigma");
      break;
    case Command::Estimate:
      need(!cfg.sample_path.empty(), "sample");
      break;
    case Command::Statics:
      need(cfg.model.has_value() || cfg.moments.has_value(), "model or moments");
      break;
    case Command::Simulate:
      need(cfg.model.has_value(), "model");
      need(cfg.n > 0, "n > 0");
      need(cfg.seed.has_value(), "seed");
      need(!cfg.sample_out_path.empty(), "sample_out");
      break;
    case Command::OracleCheck:
      need(cfg.model.has_value(), "model");
      break;
    case Command::Overid:
      need(!cfg.sample_path.empty(), "sample");
      need(cfg.seed.has_value(), "seed");
      break;
    case Command::Payoffs:
      need(cfg.model.has_value(), "model");
      need(cfg.at_x.has_value(), "x");
      need(cfg.at_y.has_value(), "y");
      break;
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "config for \"" << command_name(cfg.command) << "\" is missing: ";
    for (size_t i = 0; i < missing.size(); ++i) msg << (i ? ", " : "") << missing[i];
    fail(Errc::ValidationError, msg.str());
  }
  return cfg;
}

namespace {

Json foc_to_json(const FocReport& r) {
  Json j;
  j["r1"] = r.r1;
  j["r2"] = r.r2;
  j["r1_scale"] = r.r1_scale;
  j["r2_scale"] = r.r2_scale;
  return j;
}

Json equilibrium_to_json(const Equilibrium& eq) {
  Json r;
  r["Sigma_XY"] = matrix_to_json(eq.cross_cov);
  r["T"] = matrix_to_json(eq.regression);
  r["Sigma_Y_given_X"] = matrix_to_json(eq.cond_var_y);
  r["Sigma_X_given_Y"] = matrix_to_json(eq.cond_var_x);
  r["Delta"] = matrix_to_json(eq.delta);
  r["Sigma"] = matrix_to_json(eq.joint_cov);
  r["welfare"] = eq.welfare;
  r["solved_by_swap"] = eq.solved_by_swap;
  r["small_sigma_limit"] = eq.small_sigma_limit;
  return r;
}

Equilibrium solve_logged(const MatchingModel& model, const NumericPolicy& policy,
                         std::ostream& log, bool quiet) {
  Equilibrium eq = solve(model, policy);
  FocReport foc = verify_foc(model, eq);
  if (!quiet)
    log << "solve: foc r1=" << foc.r1 << " (scale " << foc.r1_scale << "), r2=" << foc.r2
        << " (scale " << foc.r2_scale << ")\n";
  return eq;
}

Json estimate_to_json(const AffinityEstimate& est) {
  Json r;
  r["A"] = matrix_to_json(est.affinity);
  r["T"] = matrix_to_json(est.regression);
  r["Sigma_Y_given_X"] = matrix_to_json(est.cond_var_y);
  r["form_agreement"] = est.form_agreement;
  if (est.n_obs > 0) r["n_obs"] = est.n_obs;
  if (est.avar) {
    r["avar"] = matrix_to_json(*est.avar);
    Matrix se(est.affinity.rows(), est.affinity.cols());
    for (Index k = 0; k < se.size(); ++k)
      se(k % se.rows(), k / se.rows()) = std::sqrt(std::max(0.0, (*est.avar)(k, k)));
    r["se"] = matrix_to_json(se);
    r["avar_by_fd"] = est.avar_by_fd;
  }
  return r;
}

Json run_statics(const RunConfig& cfg, std::ostream& log) {
  Json r;
  const NumericPolicy& policy = cfg.policy;
  if (cfg.model) {
    Equilibrium eq = solve_logged(*cfg.model, policy, log, cfg.quiet);
    try {
      JacobianSet js = full_jacobians(*cfg.model, eq, policy);
      r["method"] = "closed-form";
      r["dA_dSigma_XY"] = matrix_to_json(js.dA_dSxy);
      r["dA_dSigma_X"] = matrix_to_json(js.dA_dSx);
      r["dA_dSigma_Y"] = matrix_to_json(js.dA_dSy);
      r["dSigma_XY_dA"] = matrix_to_json(js.dSxy_dA);
      r["dSigma_XY_dSigma_X"] = matrix_to_json(js.dSxy_dSx);
      r["dSigma_XY_dSigma_Y"] = matrix_to_json(js.dSxy_dSy);
      return r;
    } catch (const Error& e) {
      if (e.code() != Errc::SingularCross) throw;
      if (!cfg.quiet) log << "statics: " << e.what() << "; using finite differences\n";
    }
    // Finite-difference fallback for non-square or rank-deficient markets.
    const MatchingModel& model = *cfg.model;
    MomentSet moments = implied_moments(model, eq);
    double sigma = model.sigma;
    r["method"] = "finite-differences";
    r["dA_dSigma_XY"] = matrix_to_json(fd_jacobian(
        [&](const Matrix& c) {
          MomentSet mm = moments;
          mm.cross = c;
          return identify(mm, sigma, policy).affinity;
        },
        moments.cross, 0.0, FdMode::Full, policy));
    r["dA_dSigma_X"] = matrix_to_json(fd_jacobian(
        [&](const Matrix& s) {
          MomentSet mm = moments;
          mm.sigma_x = symmetrize(s);
          return identify(mm, sigma, policy).affinity;
        },
        moments.sigma_x, 0.0, FdMode::Symmetric, policy));
    r["dA_dSigma_Y"] = matrix_to_json(fd_jacobian(
        [&](const Matrix& s) {
          MomentSet mm = moments;
          mm.sigma_y = symmetrize(s);
          return identify(mm, sigma, policy).affinity;
        },
        moments.sigma_y, 0.0, FdMode::Symmetric, policy));
    r["dSigma_XY_dA"] = matrix_to_json(fd_jacobian(
        [&](const Matrix& a) {
          MatchingModel mm = model;
          mm.affinity = a;
          mm.split.reset();
          return solve(mm, policy).cross_cov;
        },
        model.affinity, 0.0, FdMode::Full, policy));
    r["dSigma_XY_dSigma_X"] = matrix_to_json(fd_jacobian(
        [&](const Matrix& s) {
          MatchingModel mm = model;
          mm.sigma_x = symmetrize(s);
          mm.split.reset();
          return solve(mm, policy).cross_cov;
        },
        model.sigma_x, 0.0, FdMode::Symmetric, policy));
    r["dSigma_XY_dSigma_Y"] = matrix_to_json(fd_jacobian(
        [&](const Matrix& s) {
          MatchingModel mm = model;
          mm.sigma_y = symmetrize(s);
          mm.split.reset();
          return solve(mm, policy).cross_cov;
        },
        model.sigma_y, 0.0, FdMode::Symmetric, policy));
    return r;
  }

  // Moments only: the identification half.
  IdentificationJacobians idj = identification_jacobians(*cfg.moments, cfg.sigma, policy);
  r["method"] = "closed-form";
  r["dA_dSigma_XY"] = matrix_to_json(idj.dA_dSxy);
  r["dA_dSigma_X"] = matrix_to_json(idj.dA_dSx);
  r["dA_dSigma_Y"] = matrix_to_json(idj.dA_dSy);
  return r;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  Json result;

  switch (cfg.command) {
    case Command::Solve: {
      Equilibrium eq = solve_logged(*cfg.model, cfg.policy, log, cfg.quiet);
      result = equilibrium_to_json(eq);
      result["foc"] = foc_to_json(verify_foc(*cfg.model, eq));
      break;
    }
    case Command::Identify: {
      AffinityEstimate est = identify(*cfg.moments, cfg.sigma, cfg.policy);
      result = estimate_to_json(est);
      break;
    }
    case Command::Estimate: {
      MatchedSample sample = read_sample(cfg.sample_path);
      AffinityEstimate est = estimate(sample, cfg.policy);
      result = estimate_to_json(est);
      break;
    }
    case Command::Statics: {
      result = run_statics(cfg, log);
      break;
    }
    case Command::Simulate: {
      Equilibrium eq = solve_logged(*cfg.model, cfg.policy, log, cfg.quiet);
      MatchedSample sample = sample_joint(eq, cfg.n, *cfg.seed);
      if (cfg.model->split) {
        Vector tau(sample.n_obs());
        for (Index r = 0; r < sample.n_obs(); ++r)
          tau[r] = payoffs(*cfg.model, eq, sample.x.row(r).transpose(),
                           sample.y.row(r).transpose())
                       .transfer;
        sample.transfers = tau;
      }
      write_sample(sample, cfg.sample_out_path);
      result["path"] = cfg.sample_out_path;
      result["n"] = sample.n_obs();
      result["seed"] = *cfg.seed;
      result["with_transfers"] = sample.transfers.has_value();
      if (sample.n_obs() >= 2) result["moments"] = moments_to_json(empirical_moments(sample));
      break;
    }
    case Command::OracleCheck: {
      Equilibrium eq = solve_logged(*cfg.model, cfg.policy, log, cfg.quiet);
      DiscretizedMarket market = discretize(*cfg.model, cfg.points, cfg.trunc, cfg.policy);
      Coupling coupling = ipfp_solve(market, cfg.model->sigma, cfg.tol, cfg.max_iter);
      Matrix oracle_cross = coupling_cross_cov(market, coupling);
      double diff = (oracle_cross - eq.cross_cov).cwiseAbs().maxCoeff();
      result["closed_form_Sigma_XY"] = matrix_to_json(eq.cross_cov);
      result["oracle_Sigma_XY"] = matrix_to_json(oracle_cross);
      result["max_abs_diff"] = diff;
      result["gate"] = cfg.gate;
      result["pass"] = coupling.converged && diff < cfg.gate;
      result["iterations"] = coupling.iterations;
      result["converged"] = coupling.converged;
      result["row_residual"] = coupling.row_residual;
      result["col_residual"] = coupling.col_residual;
      result["truncated_mass_x"] = market.truncated_mass_x;
      result["truncated_mass_y"] = market.truncated_mass_y;
      if (!cfg.quiet)
        log << "oracle-check: max|diff|=" << diff << " -> " << (diff < cfg.gate ? "PASS" : "FAIL")
            << "\n";
      break;
    }
    case Command::Overid: {
      MatchedSample sample = read_sample(cfg.sample_path);
      OveridResult res = overid_test(sample, cfg.n_sim, cfg.n_permutations, *cfg.seed, cfg.policy);
      result["statistic"] = res.statistic;
      result["p_value"] = res.p_value;
      result["n_sim"] = res.n_sim;
      result["n_permutations"] = res.n_permutations;
      break;
    }
    case Command::Payoffs: {
      Equilibrium eq = solve_logged(*cfg.model, cfg.policy, log, cfg.quiet);
      PayoffBreakdown pb = payoffs(*cfg.model, eq, *cfg.at_x, *cfg.at_y);
      result["x"] = vector_to_json(*cfg.at_x);
      result["y"] = vector_to_json(*cfg.at_y);
      result["tau"] = pb.transfer;
      result["U"] = pb.worker_utility;
      result["Pi"] = pb.firm_profit;
      result["a"] = pb.worker_multiplier;
      result["b"] = pb.firm_multiplier;
      break;
    }
  }

  Json doc;
  doc["schema"] = kResultSchema;
  doc["version"] = kVersion;
  doc["command"] = command_name(cfg.command);
  doc["config"] = cfg.echo;
  doc["result"] = result;

  std::string body = doc.dump(2);
  out << body << "\n";
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) fail(Errc::ParseError, "cannot write result to " + cfg.out_path);
    f << body << "\n";
  }
  return 0;
}

}  // namespace gmatch
