#include "fusionkit/model_io.hpp"

#include <fstream>
#include <variant>

#include <json.hpp>

#include "fusionkit/errors.hpp"

namespace fusionkit {

namespace {

using nlohmann::json;

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const json& arr, const char* what) {
  if (!arr.is_array()) throw ValidationError(std::string("model JSON: ") + what + " must be an array");
  Vector v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Index>(i)) = arr[i].get<double>();
  return v;
}

Matrix matrix_from_json(const json& arr, const char* what) {
  if (!arr.is_array() || arr.empty())
    throw ValidationError(std::string("model JSON: ") + what + " must be a 2-D array");
  const Index rows = static_cast<Index>(arr.size());
  const Index cols = static_cast<Index>(arr[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = arr[static_cast<std::size_t>(i)];
    if (static_cast<Index>(row.size()) != cols)
      throw ValidationError(std::string("model JSON: ragged matrix in ") + what);
    for (Index j = 0; j < cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

void blocks_to_json(json& out, const BlockDims& d, const Vector& mu, const Matrix& sigma) {
  out["mu_X"] = vector_to_json(mu.head(d.x));
  out["mu_Y"] = vector_to_json(mu.segment(d.y_begin(), d.y));
  out["mu_Z"] = vector_to_json(mu.segment(d.z_begin(), d.z));
  out["Sigma_XX"] = matrix_to_json(sigma.block(0, 0, d.x, d.x));
  out["Sigma_XY"] = matrix_to_json(sigma.block(0, d.y_begin(), d.x, d.y));
  out["Sigma_XZ"] = matrix_to_json(sigma.block(0, d.z_begin(), d.x, d.z));
  out["Sigma_YY"] = matrix_to_json(sigma.block(d.y_begin(), d.y_begin(), d.y, d.y));
  out["Sigma_YZ"] = matrix_to_json(sigma.block(d.y_begin(), d.z_begin(), d.y, d.z));
  out["Sigma_ZZ"] = matrix_to_json(sigma.block(d.z_begin(), d.z_begin(), d.z, d.z));
}

void blocks_from_json(const json& in, BlockDims& d, Vector& mu, Matrix& sigma) {
  const Vector mu_x = vector_from_json(in.at("mu_X"), "mu_X");
  const Vector mu_y = vector_from_json(in.at("mu_Y"), "mu_Y");
  const Vector mu_z = vector_from_json(in.at("mu_Z"), "mu_Z");
  d = {mu_x.size(), mu_y.size(), mu_z.size()};

  mu.resize(d.total());
  mu << mu_x, mu_y, mu_z;

  sigma.resize(d.total(), d.total());
  const Matrix sxx = matrix_from_json(in.at("Sigma_XX"), "Sigma_XX");
  const Matrix sxy = matrix_from_json(in.at("Sigma_XY"), "Sigma_XY");
  const Matrix sxz = matrix_from_json(in.at("Sigma_XZ"), "Sigma_XZ");
  const Matrix syy = matrix_from_json(in.at("Sigma_YY"), "Sigma_YY");
  const Matrix syz = matrix_from_json(in.at("Sigma_YZ"), "Sigma_YZ");
  const Matrix szz = matrix_from_json(in.at("Sigma_ZZ"), "Sigma_ZZ");
  if (sxx.rows() != d.x || sxx.cols() != d.x || sxy.rows() != d.x ||
      sxy.cols() != d.y || sxz.rows() != d.x || sxz.cols() != d.z ||
      syy.rows() != d.y || syy.cols() != d.y || syz.rows() != d.y ||
      syz.cols() != d.z || szz.rows() != d.z || szz.cols() != d.z)
    throw ValidationError("model JSON: block dimensions are inconsistent");

  sigma.block(0, 0, d.x, d.x) = sxx;
  sigma.block(0, d.y_begin(), d.x, d.y) = sxy;
  sigma.block(0, d.z_begin(), d.x, d.z) = sxz;
  sigma.block(d.y_begin(), 0, d.y, d.x) = sxy.transpose();
  sigma.block(d.y_begin(), d.y_begin(), d.y, d.y) = syy;
  sigma.block(d.y_begin(), d.z_begin(), d.y, d.z) = syz;
  sigma.block(d.z_begin(), 0, d.z, d.x) = sxz.transpose();
  sigma.block(d.z_begin(), d.y_begin(), d.z, d.y) = syz.transpose();
  sigma.block(d.z_begin(), d.z_begin(), d.z, d.z) = szz;
}

json gaussian_to_json(const GaussianParams& p) {
  json out;
  blocks_to_json(out, p.dims, p.mu, p.sigma);
  return out;
}

json sn_to_json(const SkewNormalParams& p) {
  json out;
  blocks_to_json(out, p.dims, p.mu, p.sigma);
  out["delta_X"] = vector_to_json(p.delta.head(p.dims.x));
  out["delta_Y"] = vector_to_json(p.delta.segment(p.dims.y_begin(), p.dims.y));
  out["delta_Z"] = vector_to_json(p.delta.segment(p.dims.z_begin(), p.dims.z));
  return out;
}

GaussianParams gaussian_from_json(const json& in) {
  GaussianParams p;
  blocks_from_json(in, p.dims, p.mu, p.sigma);
  return p;
}

SkewNormalParams sn_from_json(const json& in) {
  SkewNormalParams p;
  blocks_from_json(in, p.dims, p.mu, p.sigma);
  const Vector dx = vector_from_json(in.at("delta_X"), "delta_X");
  const Vector dy = vector_from_json(in.at("delta_Y"), "delta_Y");
  const Vector dz = vector_from_json(in.at("delta_Z"), "delta_Z");
  if (dx.size() != p.dims.x || dy.size() != p.dims.y || dz.size() != p.dims.z)
    throw ValidationError("model JSON: delta block dimensions are inconsistent");
  p.delta.resize(p.dims.total());
  p.delta << dx, dy, dz;
  return p;
}

json model_to_json(const ModelParams& params) {
  json out;
  out["family"] = family_name(model_family(params));
  if (const auto* g = std::get_if<GaussianParams>(&params)) {
    out.update(gaussian_to_json(*g));
  } else if (const auto* s = std::get_if<SkewNormalParams>(&params)) {
    out.update(sn_to_json(*s));
  } else {
    const auto& mix = std::get<MixtureParams>(params);
    out["g"] = mix.g();
    out["pi"] = vector_to_json(mix.pi);
    json comps = json::array();
    for (const auto& comp : mix.components) {
      if (const auto* cg = std::get_if<GaussianParams>(&comp))
        comps.push_back(gaussian_to_json(*cg));
      else
        comps.push_back(sn_to_json(std::get<SkewNormalParams>(comp)));
    }
    out["components"] = std::move(comps);
  }
  return out;
}

ModelParams model_from_json(const json& in) {
  const ModelFamily family = family_from_name(in.at("family").get<std::string>());
  switch (family) {
    case ModelFamily::gaussian:
      return gaussian_from_json(in);
    case ModelFamily::skew_normal:
      return sn_from_json(in);
    case ModelFamily::gmm:
    case ModelFamily::snmix: {
      MixtureParams mix;
      mix.pi = vector_from_json(in.at("pi"), "pi");
      const auto& comps = in.at("components");
      if (!comps.is_array() || comps.empty())
        throw ValidationError("model JSON: components must be a non-empty array");
      for (const auto& comp : comps) {
        if (family == ModelFamily::gmm)
          mix.components.emplace_back(gaussian_from_json(comp));
        else
          mix.components.emplace_back(sn_from_json(comp));
      }
      if (mix.pi.size() != mix.g())
        throw ValidationError("model JSON: pi length != number of components");
      return mix;
    }
  }
  throw ValidationError("model JSON: unknown family");
}

}  // namespace

std::string model_to_json_string(const ModelParams& params, int indent) {
  return model_to_json(params).dump(indent);
}

ModelParams model_from_json_string(const std::string& text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model JSON parse failure: ") + e.what());
  }
  try {
    return model_from_json(parsed);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model JSON schema failure: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << model_to_json_string(params) << "\n";
  if (!out) throw ValidationError("I/O failure while writing: " + path);
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return model_from_json_string(text);
}

std::string report_to_json_string(const FitReport& report, int indent) {
  json out;
  out["family"] = report.family;
  out["converged"] = report.converged;
  out["iterations"] = report.iterations;
  out["final_loglik"] = report.final_loglik;
  out["loglik_trace"] = report.loglik_trace;
  json guards = json::array();
  for (const auto& g : report.guard_events)
    guards.push_back({{"iteration", g.iteration}, {"kind", g.kind}, {"detail", g.detail}});
  out["guard_events"] = std::move(guards);
  if (!report.restart_logliks.empty()) {
    out["restart_logliks"] = report.restart_logliks;
    out["chosen_restart"] = report.chosen_restart;
  }
  out["x_block_normaliser"] = report.x_block_normaliser;
  return out.dump(indent);
}

void save_report(const std::string& path, const FitReport& report) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << report_to_json_string(report) << "\n";
  if (!out) throw ValidationError("I/O failure while writing: " + path);
}

std::string summary_to_json_string(const SummaryTable& table, int indent) {
  json out = json::array();
  for (const auto& g : table.groups) {
    json row;
    row["group"] = g.group;
    row["n"] = g.n;
    row["rho_yz"] = g.rho_yz;
    row["mean"] = vector_to_json(g.mean);
    row["cov"] = matrix_to_json(g.cov);
    out.push_back(std::move(row));
  }
  return out.dump(indent);
}

void save_summary_json(const std::string& path, const SummaryTable& table) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open file for writing: " + path);
  out << summary_to_json_string(table) << "\n";
  if (!out) throw ValidationError("I/O failure while writing: " + path);
}

}  // namespace fusionkit
