#include "kklab/report_io.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace kklab {

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void flatten(const std::string& key, const json& v, std::vector<std::pair<std::string, json>>& out) {
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) flatten(key + "_" + std::to_string(i), v[i], out);
  } else if (v.is_object()) {
    for (const auto& [k, sub] : v.items()) flatten(key + "_" + k, sub, out);
  } else {
    out.emplace_back(key, v);
  }
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v.get<double>();
    return os.str();
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    return quoted + "\"";
  }
  return v.dump();
}

}  // namespace

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    a.push_back(std::move(row));
  }
  return a;
}

json cmat_json(const CMat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(json::array({number(m(i, j).real()), number(m(i, j).imag())}));
    a.push_back(std::move(row));
  }
  return a;
}

json to_json(const DecompositionReport& r) {
  json j;
  j["x"] = vec_json(r.x);
  j["R_P"] = number(r.R_P);
  j["R_M"] = number(r.R_M);
  j["R_G"] = number(r.R_G);
  j["F2_term"] = number(r.F2_term);
  j["Dgamma2_term"] = number(r.Dgamma2_term);
  j["j_norm2"] = number(r.j_norm2);
  j["J_tilde_direct"] = number(r.J_tilde_direct);
  j["J_tilde_geometric"] = number(r.J_tilde_geometric);
  j["residual"] = number(r.residual);
  j["convention"] = to_string(r.convention);
  j["line2_term"] = number(r.line2_term);
  j["line3_term"] = number(r.line3_term);
  j["remark_residual"] = number(r.remark_residual);
  return j;
}

json to_json(const HamiltonianCoeffs& c) {
  json j;
  j["x"] = vec_json(c.x);
  j["dim_v"] = c.dim_v;
  j["kinetic_inverse_metric"] = mat_json(c.kinetic_inverse_metric);
  j["laplacian_prefactor"] = number(c.laplacian_prefactor);
  json first = json::array();
  for (const auto& m : c.first_order) first.push_back(cmat_json(m));
  j["first_order"] = std::move(first);
  j["connection_zeroth"] = cmat_json(c.connection_zeroth);
  j["casimir_block"] = cmat_json(c.casimir_block);
  j["casimir_prefactor"] = number(c.casimir_prefactor);
  j["j_tilde"] = number(c.j_tilde);
  j["potential"] = number(c.potential);
  j["potential_matrix"] = cmat_json(c.potential_matrix);
  j["hermiticity_residual"] = number(hermiticity_residual(c.potential_matrix));
  return j;
}

json to_json(const KernelEstimate& k) {
  json j;
  j["value"] = number(k.value);
  j["std_error"] = number(k.std_error);
  j["n_paths"] = k.n_paths;
  j["n_discarded"] = k.n_discarded;
  j["time_step"] = number(k.time_step);
  j["x_a"] = vec_json(k.start);
  j["t_a"] = number(k.t_a);
  j["x_b"] = vec_json(k.end);
  j["t_b"] = number(k.t_b);
  j["smoothing_width"] = number(k.smoothing_width);
  return j;
}

json to_json(const ReductionCheck& r) {
  json j;
  j["case"] = r.case_name;
  j["lhs"] = number(r.lhs);
  j["rhs"] = number(r.rhs);
  j["ratio"] = number(r.ratio);
  j["stderr"] = number(r.combined_error);
  j["n_paths"] = r.n_paths;
  j["dt"] = number(r.dt);
  j["seed"] = r.seed;
  j["lhs_stderr"] = number(r.lhs_error);
  j["rhs_stderr"] = number(r.rhs_error);
  j["discarded_lhs"] = r.discarded_lhs;
  j["discarded_rhs"] = r.discarded_rhs;
  j["smoothing_width"] = number(r.smoothing_width);
  return j;
}

std::string rows_to_csv(const std::vector<json>& rows) {
  std::ostringstream os;
  bool header = false;
  for (const auto& row : rows) {
    std::vector<std::pair<std::string, json>> cells;
    for (const auto& [k, v] : row.items()) flatten(k, v, cells);
    if (!header) {
      for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i].first;
      os << '\n';
      header = true;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_cell(cells[i].second);
    os << '\n';
  }
  return os.str();
}

}  // namespace kklab
