#include "wavelogit/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wavelogit/error.hpp"

namespace wavelogit {

using nlohmann::json;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw DataError("write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot move '" + tmp + "' onto '" + path + "'");
  }
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_cell(std::string_view cell, const std::string& where) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw ParseError(where + ": non-numeric cell '" + std::string(cell) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(where + ": non-finite value '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

CurveDataset load_dataset(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t pos = 0;
  int line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    const auto cells = split_line(line);
    if (!header_seen) {
      header_seen = true;
      if (trim(cells.front()) != "label") {
        throw ParseError(where + ": header must start with 'label'");
      }
      width = cells.size();
      if (width < 2) throw ParseError(where + ": no curve columns");
      continue;
    }
    if (cells.size() != width) {
      throw ParseError(where + ": row has " + std::to_string(cells.size()) +
                       " columns, header has " + std::to_string(width));
    }
    std::vector<double> row;
    row.reserve(width);
    for (auto cell : cells) row.push_back(parse_cell(cell, where));
    if (row.front() != 0.0 && row.front() != 1.0) {
      throw ParseError(where + ": label must be 0 or 1");
    }
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError(path + ": empty file");
  const long d = static_cast<long>(width) - 1;
  if (!is_power_of_two(d) || d < 2) {
    throw ParseError(path + ": curve length d = " + std::to_string(d) +
                     " is not a power of two >= 2");
  }
  if (rows.empty()) throw ParseError(path + ": no observations");

  CurveDataset data;
  data.curves.resize(static_cast<Eigen::Index>(rows.size()), d);
  data.labels.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    data.labels[r] = rows[i][0];
    for (long t = 0; t < d; ++t) {
      data.curves(r, t) = rows[i][static_cast<std::size_t>(t + 1)];
    }
  }
  return data;
}

void save_dataset(const CurveDataset& data, const std::string& path) {
  std::string out = "label";
  for (int t = 1; t <= data.d(); ++t) out += ",t" + std::to_string(t);
  out += '\n';
  for (int i = 0; i < data.n(); ++i) {
    out += data.labels[i] == 1.0 ? "1" : "0";
    for (int t = 0; t < data.d(); ++t) {
      out += ',';
      out += format_double(data.curves(i, t));
    }
    out += '\n';
  }
  atomic_write(path, out);
}

FittedModel make_fitted_model(const EstimatorFit& fit,
                              const WaveletBasis& basis) {
  if (fit.solution.omega.size() != basis.size()) {
    throw DimensionError("fitted coefficients do not match the wavelet basis");
  }
  FittedModel model;
  model.estimator = fit.config.estimator;
  model.basis = basis;
  model.lambda = fit.config.lambda;
  model.q = uses_reduction(fit.config.estimator) ? fit.config.q : 0;
  model.tau = fit.config.tau;
  model.intercept = fit.solution.intercept;
  model.omega = fit.solution.omega;
  model.reduction = fit.reduction;
  model.kkt_residual = fit.solution.kkt_residual;
  model.iterations = fit.solution.iterations;
  model.nonzero_detail_count = fit.solution.nonzero_detail_count;
  return model;
}

LabeledCoefficients to_coefficients(const CurveDataset& data,
                                    const WaveletBasis& basis) {
  if (data.d() != basis.size()) {
    throw DimensionError("curves have " + std::to_string(data.d()) +
                         " points, wavelet basis expects " +
                         std::to_string(basis.size()));
  }
  LabeledCoefficients out;
  out.theta = dwt_forward_rows(data.curves, basis);
  out.labels = data.labels;
  out.j0 = basis.j0();
  return out;
}

Eigen::VectorXd predict_linear(const FittedModel& model,
                               const Eigen::MatrixXd& curves) {
  if (curves.cols() != model.basis.size()) {
    throw DimensionError("curves have " + std::to_string(curves.cols()) +
                         " points, model expects " +
                         std::to_string(model.basis.size()));
  }
  return linear_predictors(model.state(), dwt_forward_rows(curves, model.basis));
}

Eigen::VectorXd predict_probabilities(const FittedModel& model,
                                      const Eigen::MatrixXd& curves) {
  Eigen::VectorXd p = predict_linear(model, curves);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = link_logistic(p[i]);
  return p;
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vector(const json& j, std::size_t expected,
                            const char* field) {
  if (!j.is_array() || j.size() != expected) {
    throw ParseError(std::string("model field '") + field + "' must be an array of " +
                     std::to_string(expected) + " numbers");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(expected));
  for (std::size_t i = 0; i < expected; ++i) {
    if (!j[i].is_number()) {
      throw ParseError(std::string("model field '") + field + "' has a non-number");
    }
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::string model_to_json(const FittedModel& model) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["estimator"] = estimator_name(model.estimator);
  doc["wavelet"] = {{"family", family_name(model.basis.family())},
                    {"j0", model.basis.j0()},
                    {"d", model.basis.size()}};
  doc["lambda"] = model.lambda;
  doc["q"] = model.q;
  doc["tau"] = model.tau;
  doc["intercept"] = model.intercept;
  doc["omega"] = vector_json(model.omega);
  if (model.reduction) {
    const ReducedBasis& r = *model.reduction;
    json loadings = json::array();
    for (int k = 0; k < r.q(); ++k) loadings.push_back(vector_json(r.loadings.col(k)));
    doc["reduction"] = {{"kind", reduction_name(r.kind)},
                        {"center", vector_json(r.center)},
                        {"scores_scale", vector_json(r.scores_scale)},
                        {"loadings", loadings}};
  } else {
    doc["reduction"] = nullptr;
  }
  doc["diagnostics"] = {{"kkt_residual", model.kkt_residual},
                        {"iterations", model.iterations},
                        {"nonzero_detail_count", model.nonzero_detail_count}};
  return doc.dump(1) + "\n";
}

FittedModel model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
      throw ParseError("model file lacks an integer format_version");
    }
    const int version = doc["format_version"].get<int>();
    if (version != kModelFormatVersion) {
      throw ParseError("unsupported model format_version " +
                       std::to_string(version) + " (this build reads version " +
                       std::to_string(kModelFormatVersion) + ")");
    }
    FittedModel model;
    model.estimator = parse_estimator(doc.at("estimator").get<std::string>());
    const json& w = doc.at("wavelet");
    model.basis = WaveletBasis(parse_family(w.at("family").get<std::string>()),
                               w.at("j0").get<int>(), w.at("d").get<int>());
    const auto d = static_cast<std::size_t>(model.basis.size());
    model.lambda = doc.at("lambda").get<double>();
    model.q = doc.at("q").get<int>();
    model.tau = doc.at("tau").get<double>();
    model.intercept = doc.at("intercept").get<double>();
    model.omega = json_vector(doc.at("omega"), d, "omega");
    const json& r = doc.at("reduction");
    if (!r.is_null()) {
      ReducedBasis basis;
      basis.kind = parse_reduction(r.at("kind").get<std::string>());
      basis.center = json_vector(r.at("center"), d, "reduction.center");
      const json& cols = r.at("loadings");
      if (!cols.is_array() || cols.empty()) {
        throw ParseError("model field 'reduction.loadings' must be a non-empty array");
      }
      basis.loadings.resize(static_cast<Eigen::Index>(d),
                            static_cast<Eigen::Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) {
        basis.loadings.col(static_cast<Eigen::Index>(k)) =
            json_vector(cols[k], d, "reduction.loadings");
      }
      basis.scores_scale =
          json_vector(r.at("scores_scale"), cols.size(), "reduction.scores_scale");
      model.reduction = std::move(basis);
    }
    const json& diag = doc.at("diagnostics");
    model.kkt_residual = diag.at("kkt_residual").get<double>();
    model.iterations = diag.at("iterations").get<int>();
    model.nonzero_detail_count = diag.at("nonzero_detail_count").get<int>();
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupted model field: ") + e.what());
  } catch (const ParameterError& e) {
    throw ParseError(std::string("corrupted model field: ") + e.what());
  }
}

void save_model(const FittedModel& model, const std::string& path) {
  atomic_write(path, model_to_json(model));
}

FittedModel load_model(const std::string& path) {
  try {
    return model_from_json(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void export_beta(const FittedModel& model, const std::string& path) {
  const Eigen::VectorXd beta = dwt_inverse(model.omega, model.basis);
  const int d = model.basis.size();
  std::string out = "t,beta\n";
  for (int j = 0; j < d; ++j) {
    out += format_double((j + 0.5) / d);
    out += ',';
    out += format_double(beta[j]);
    out += '\n';
  }
  atomic_write(path, out);
}

}  // namespace wavelogit
