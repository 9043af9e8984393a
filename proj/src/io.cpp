#include "gmatch/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace gmatch {

Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& name, Index rows, Index cols) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    fail(Errc::ParseError, name + ": expected a nested array of numbers");
  const Index r = Index(j.size());
  const Index c = Index(j[0].size());
  Matrix M(r, c);
  for (Index i = 0; i < r; ++i) {
    if (!j[i].is_array() || Index(j[i].size()) != c)
      fail(Errc::ParseError, name + ": rows have inconsistent lengths");
    for (Index k = 0; k < c; ++k) {
      if (!j[i][k].is_number()) fail(Errc::ParseError, name + ": non-numeric entry");
      M(i, k) = j[i][k].get<double>();
    }
  }
  if ((rows >= 0 && r != rows) || (cols >= 0 && c != cols))
    fail(Errc::DimensionMismatch, name + ": unexpected shape " + std::to_string(r) + "x" +
                                      std::to_string(c));
  return M;
}

namespace {

void reject_unknown_keys(const Json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(Errc::ValidationError, where + ": unknown key \"" + it.key() + "\"");
  }
}

}  // namespace

Json model_to_json(const MatchingModel& model) {
  Json j;
  j["A"] = matrix_to_json(model.affinity);
  j["sigma"] = model.sigma;
  j["Sigma_X"] = matrix_to_json(model.sigma_x);
  j["Sigma_Y"] = matrix_to_json(model.sigma_y);
  if (model.split) {
    Json s;
    s["B"] = matrix_to_json(model.split->worker_amenity);
    s["Gamma"] = matrix_to_json(model.split->firm_productivity);
    s["sigma1"] = model.split->sigma1;
    s["sigma2"] = model.split->sigma2;
    j["split"] = std::move(s);
  }
  return j;
}

MatchingModel model_from_json(const Json& j) {
  if (!j.is_object()) fail(Errc::ParseError, "model: expected a JSON object");
  reject_unknown_keys(j, {"A", "sigma", "Sigma_X", "Sigma_Y", "split"}, "model");
  for (const char* key : {"A", "Sigma_X", "Sigma_Y"})
    if (!j.contains(key)) fail(Errc::ValidationError, std::string("model: \"") + key + "\" required");

  MatchingModel model;
  model.affinity = matrix_from_json(j["A"], "model.A");
  model.sigma = j.value("sigma", 1.0);
  if (!(model.sigma > 0)) fail(Errc::ValidationError, "model: sigma must be positive");
  model.sigma_x = matrix_from_json(j["Sigma_X"], "model.Sigma_X");
  model.sigma_y = matrix_from_json(j["Sigma_Y"], "model.Sigma_Y");

  if (j.contains("split")) {
    const Json& s = j["split"];
    reject_unknown_keys(s, {"B", "Gamma", "sigma1", "sigma2"}, "model.split");
    for (const char* key : {"B", "Gamma", "sigma1", "sigma2"})
      if (!s.contains(key))
        fail(Errc::ValidationError, std::string("model.split: \"") + key + "\" required");
    SurplusSplit split;
    split.worker_amenity = matrix_from_json(s["B"], "model.split.B");
    split.firm_productivity = matrix_from_json(s["Gamma"], "model.split.Gamma");
    split.sigma1 = s["sigma1"].get<double>();
    split.sigma2 = s["sigma2"].get<double>();
    model.split = std::move(split);
  }
  return model;
}

Json moments_to_json(const MomentSet& moments) {
  Json j;
  j["Sigma_X"] = matrix_to_json(moments.sigma_x);
  j["Sigma_Y"] = matrix_to_json(moments.sigma_y);
  j["Sigma_XY"] = matrix_to_json(moments.cross);
  j["n_obs"] = moments.n_obs;
  return j;
}

MomentSet moments_from_json(const Json& j) {
  if (!j.is_object()) fail(Errc::ParseError, "moments: expected a JSON object");
  reject_unknown_keys(j, {"Sigma_X", "Sigma_Y", "Sigma_XY", "n_obs"}, "moments");
  for (const char* key : {"Sigma_X", "Sigma_Y", "Sigma_XY"})
    if (!j.contains(key))
      fail(Errc::ValidationError, std::string("moments: \"") + key + "\" required");
  MomentSet moments;
  moments.cross = matrix_from_json(j["Sigma_XY"], "moments.Sigma_XY");
  moments.sigma_x =
      matrix_from_json(j["Sigma_X"], "moments.Sigma_X", moments.m(), moments.m());
  moments.sigma_y =
      matrix_from_json(j["Sigma_Y"], "moments.Sigma_Y", moments.n(), moments.n());
  moments.n_obs = j.value("n_obs", Index(0));
  return moments;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim whitespace
    size_t a = cell.find_first_not_of(" \t\r");
    size_t b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  return out;
}

}  // namespace

MatchedSample read_sample(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ParseError, "cannot open sample file: " + path);

  std::string line;
  if (!std::getline(in, line)) fail(Errc::HeaderMismatch, path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);

  // Header must be x1..xm,y1..yn with an optional trailing tau.
  size_t m = 0;
  while (m < header.size() && header[m] == "x" + std::to_string(m + 1)) ++m;
  size_t n = 0;
  while (m + n < header.size() && header[m + n] == "y" + std::to_string(n + 1)) ++n;
  bool has_tau = (m + n + 1 == header.size() && header.back() == "tau");
  if (m == 0 || n == 0 || (m + n != header.size() && !has_tau))
    fail(Errc::HeaderMismatch, path + ": header must be x1..xm,y1..yn[,tau], got \"" + line + "\"");

  std::vector<std::vector<double>> rows;
  Index lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      fail(Errc::ParseError, path + ": row " + std::to_string(lineno) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (size_t c = 0; c < cells.size(); ++c) {
      const std::string& s = cells[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        fail(Errc::NonNumericCell, path + ": non-numeric cell at row " + std::to_string(lineno) +
                                       ", column " + std::to_string(c + 1) + " (\"" + s + "\")");
      vals[c] = v;
    }
    rows.push_back(std::move(vals));
  }

  MatchedSample sample;
  const Index N = Index(rows.size());
  sample.x.resize(N, Index(m));
  sample.y.resize(N, Index(n));
  if (has_tau) sample.transfers = Vector(N);
  for (Index r = 0; r < N; ++r) {
    for (size_t c = 0; c < m; ++c) sample.x(r, Index(c)) = rows[r][c];
    for (size_t c = 0; c < n; ++c) sample.y(r, Index(c)) = rows[r][m + c];
    if (has_tau) (*sample.transfers)[r] = rows[r][m + n];
  }
  return sample;
}

void write_sample(const MatchedSample& sample, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::ParseError, "cannot open for writing: " + path);
  for (Index c = 0; c < sample.m(); ++c) out << (c ? "," : "") << "x" << (c + 1);
  for (Index c = 0; c < sample.n(); ++c) out << ",y" << (c + 1);
  if (sample.transfers) out << ",tau";
  out << "\n";
  char buf[32];
  auto put = [&](double v, bool lead_comma) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    if (lead_comma) out << ",";
    out << buf;
  };
  for (Index r = 0; r < sample.n_obs(); ++r) {
    for (Index c = 0; c < sample.m(); ++c) put(sample.x(r, c), c > 0);
    for (Index c = 0; c < sample.n(); ++c) put(sample.y(r, c), true);
    if (sample.transfers) put((*sample.transfers)[r], true);
    out << "\n";
  }
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::ParseError, "cannot open file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    fail(Errc::ParseError, path + ": " + e.what());
  }
  return j;
}

}  // namespace gmatch
