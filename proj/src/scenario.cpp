#include "kklab/scenario.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>
#include <algorithm>
#include <numbers>

namespace kklab {

namespace {

const std::set<std::string> kBundleCommands = {"decompose", "jacobian", "verify-identity", "hamiltonian", "mc-reduce"};

Vec vec_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigError(what + " must be a non-empty array of at most " + std::to_string(kMaxDim) + " numbers");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must contain numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Mat mat_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nested array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(vec_from(j[0], what).size());
  if (rows > kMaxDim) throw ConfigError(what + " is too large");
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    const Vec r = vec_from(j[static_cast<std::size_t>(i)], what);
    if (r.size() != cols) throw ConfigError(what + " rows differ in length");
    m.row(i) = r.transpose();
  }
  return m;
}

void require_spd(const Mat& m, const std::string& what) {
  if (m.rows() != m.cols() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
    throw ConfigError(what + " must be symmetric");
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw ConfigError(what + " must be positive definite");
}

double positive(const json& j, const std::string& what) {
  if (!j.is_number() || !(j.get<double>() > 0.0)) throw ConfigError(what + " must be a positive number");
  return j.get<double>();
}

int positive_int(const json& j, const std::string& what) {
  if (!j.is_number_integer() || j.get<long long>() < 1 || j.get<long long>() > 1'000'000'000)
    throw ConfigError(what + " must be a positive integer");
  return j.get<int>();
}

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

Domain domain_from(const json& j, int dim) {
  if (j.is_null()) return Domain::periodic_box(dim, 0.0, 2.0 * std::numbers::pi);
  only_keys(j, {"lower", "upper", "periodic"}, "domain");
  const Vec lo = vec_from(j.at("lower"), "domain.lower");
  const Vec hi = vec_from(j.at("upper"), "domain.upper");
  if (lo.size() != dim || hi.size() != dim) throw ConfigError("domain bounds must match the dimension");
  if (!(hi.array() > lo.array()).all()) throw ConfigError("domain needs upper > lower");
  Domain d = Domain::box(lo, hi);
  if (j.contains("periodic")) {
    const json& p = j["periodic"];
    if (!p.is_array() || static_cast<int>(p.size()) != dim) throw ConfigError("domain.periodic must have one flag per axis");
    for (int k = 0; k < dim; ++k) d.periodic[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k)].get<bool>();
  }
  return d;
}

Representation representation_by_name(const std::string& name, const KKBundle& b) {
  const LieStructure& ls = b.group.structure;
  Representation rep;
  if (name == "trivial" || name == "scalar") {
    rep = trivial_representation(ls.dim());
  } else if (name == "spin-half") {
    if (b.group.chart.kind != GroupKind::SU2) throw RepresentationMismatch("spin-half needs the su2 structure group");
    rep = su2_spin_half();
  } else if (name == "adjoint") {
    rep = adjoint_representation(ls);
  } else if (name.rfind("charge", 0) == 0) {
    if (ls.dim() != 1) throw RepresentationMismatch("charge representations need a U(1) structure group");
    double q = 1.0;
    if (name.size() > 6) {
      if (name[6] != '(' || name.back() != ')') throw ConfigError("expected charge(q)");
      try {
        q = std::stod(name.substr(7, name.size() - 8));
      } catch (const std::exception&) {
        throw ConfigError("bad charge in '" + name + "'");
      }
    }
    rep = u1_charge(q);
  } else {
    throw ConfigError("unknown representation '" + name + "'");
  }
  if (rep.commutation_residual(ls) > 1e-12) throw ConfigError("representation does not match the structure group");
  return rep;
}

const Domain& point_domain(const Scenario& s, ChartedMetric& scratch) {
  if (s.command == "curvature" || !s.geometry.bundle) {
    scratch = s.geometry.total_metric();
    return scratch.domain;
  }
  return s.geometry.bundle->base_domain;
}

double default_margin(const Scenario& s, const Domain& d) {
  double reach = 0.0;
  for (int k = 0; k < d.dim(); ++k) reach = std::max(reach, s.fd.reach(k));
  // nested stencils (Laplacian of ln gamma, Christoffel derivatives) reach twice as far
  return 3.0 * reach;
}

std::string point_text(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

json fd_json(const FDScheme& s) {
  json j;
  j["step"] = s.step;
  j["order"] = s.order;
  j["richardson"] = s.richardson;
  return j;
}

}  // namespace

const std::vector<std::string>& scenario_commands() {
  static const std::vector<std::string> c = {"curvature", "decompose", "jacobian", "verify-identity", "hamiltonian", "mc-reduce"};
  return c;
}

Geometry geometry_from_json(const json& j) {
  if (j.is_string()) return resolve_geometry(j.get<std::string>());
  if (!j.is_object()) throw ConfigError("geometry must be a catalog name or an inline object");
  only_keys(j, {"name", "metric", "domain", "bundle"}, "geometry");
  Geometry g;
  g.name = j.value("name", std::string("inline"));
  if (j.contains("metric") == j.contains("bundle")) throw ConfigError("inline geometry needs exactly one of 'metric' or 'bundle'");
  if (j.contains("metric")) {
    const Mat G = mat_from(j["metric"], "geometry.metric");
    require_spd(G, "geometry.metric");
    ChartedMetric m;
    m.dim = static_cast<int>(G.rows());
    m.domain = domain_from(j.contains("domain") ? j["domain"] : json(), m.dim);
    m.metric_at = [G](const Vec&) { return G; };
    m.label = g.name;
    g.metric = std::move(m);
    return g;
  }
  const json& jb = j["bundle"];
  only_keys(jb, {"group", "h", "gamma", "A", "potential"}, "geometry.bundle");
  if (j.contains("domain")) throw ConfigError("inline bundles live on a flat periodic base; drop 'domain'");
  KKBundle b;
  b.label = g.name;
  b.group = group_by_name(jb.at("group").get<std::string>());
  const Mat h = mat_from(jb.at("h"), "bundle.h");
  const Mat gamma = mat_from(jb.at("gamma"), "bundle.gamma");
  require_spd(h, "bundle.h");
  require_spd(gamma, "bundle.gamma");
  b.base_dim = static_cast<int>(h.rows());
  const int ng = b.group.structure.dim();
  if (gamma.rows() != ng) throw ConfigError("bundle.gamma must be dim_g x dim_g");
  if (b.base_dim + ng > kMaxDim) throw ConfigError("total dimension exceeds " + std::to_string(kMaxDim));
  Mat A = Mat::Zero(b.base_dim, ng);
  if (jb.contains("A")) {
    A = mat_from(jb["A"], "bundle.A");
    if (A.rows() != b.base_dim || A.cols() != ng) throw ConfigError("bundle.A must be base_dim x dim_g");
  }
  b.base_domain = Domain::periodic_box(b.base_dim, 0.0, 2.0 * std::numbers::pi);
  b.h = [h](const Vec&) { return h; };
  b.gamma = [gamma](const Vec&) { return gamma; };
  b.A = [A](const Vec&) { return A; };
  if (jb.contains("potential")) {
    if (!jb["potential"].is_number()) throw ConfigError("bundle.potential must be a number");
    const double v = jb["potential"].get<double>();
    b.potential = [v](const Vec&) { return v; };
  }
  g.bundle = std::move(b);
  const CatalogCheck check = self_validate(g);
  if (!check.ok) throw ConfigError("inline geometry failed validation: " + check.failures.front());
  return g;
}

Scenario parse_scenario(const std::string& text, const std::string& command) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    only_keys(j, {"command", "geometry", "points", "grid", "random", "fd", "physical", "convention", "mc",
                  "representation", "casimir_prefactor", "tolerance"},
              "config");
    Scenario s;
    s.command = j.value("command", command);
    if (!command.empty() && s.command != command)
      throw ConfigError("config is for '" + s.command + "' but the command is '" + command + "'");
    const auto& cmds = scenario_commands();
    if (std::find(cmds.begin(), cmds.end(), s.command) == cmds.end())
      throw ConfigError("unknown command '" + s.command + "'");

    if (!j.contains("geometry")) throw ConfigError("config needs a 'geometry'");
    s.geometry = geometry_from_json(j["geometry"]);
    s.geometry_name = j["geometry"].is_string() ? j["geometry"].get<std::string>() : s.geometry.name;
    if (kBundleCommands.count(s.command) && !s.geometry.bundle)
      throw ConfigError("'" + s.command + "' needs a bundle geometry");

    if (j.contains("fd")) {
      only_keys(j["fd"], {"step", "order", "richardson"}, "fd");
      const json& f = j["fd"];
      if (f.contains("step")) {
        s.fd.step.clear();
        if (f["step"].is_array())
          for (const auto& v : f["step"]) s.fd.step.push_back(positive(v, "fd.step"));
        else
          s.fd.step.push_back(positive(f["step"], "fd.step"));
      }
      if (f.contains("order")) s.fd.order = f["order"].get<int>();
      if (f.contains("richardson")) s.fd.richardson = f["richardson"].get<bool>();
    }
    ChartedMetric scratch;
    const Domain& dom = point_domain(s, scratch);
    s.fd.validate(dom);

    if (j.contains("physical")) {
      only_keys(j["physical"], {"hbar", "m", "kappa"}, "physical");
      const json& p = j["physical"];
      if (p.contains("hbar")) s.physical.hbar = positive(p["hbar"], "physical.hbar");
      if (p.contains("m")) s.physical.m = positive(p["m"], "physical.m");
      if (p.contains("kappa")) s.physical.kappa = positive(p["kappa"], "physical.kappa");
    }
    if (j.contains("convention")) s.convention = parse_convention(j["convention"].get<std::string>());
    if (j.contains("tolerance")) s.tolerance = positive(j["tolerance"], "tolerance");
    if (j.contains("casimir_prefactor")) {
      if (!j["casimir_prefactor"].is_number()) throw ConfigError("casimir_prefactor must be a number");
      s.casimir_prefactor = j["casimir_prefactor"].get<double>();
    }
    if (j.contains("representation")) {
      s.representation = j["representation"].get<std::string>();
      if (s.command != "hamiltonian") throw ConfigError("'representation' only applies to hamiltonian");
    }
    if (s.command == "hamiltonian") representation_by_name(s.representation, *s.geometry.bundle);

    const int n_sources = int(j.contains("points")) + int(j.contains("grid")) + int(j.contains("random"));
    if (n_sources > 1) throw ConfigError("give at most one of points, grid, random");
    if (j.contains("points")) {
      if (!j["points"].is_array() || j["points"].empty()) throw ConfigError("points must be a non-empty array");
      for (const auto& p : j["points"]) {
        const Vec x = vec_from(p, "points entry");
        if (x.size() != dom.dim())
          throw ConfigError("point " + point_text(x) + " has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(dom.dim()));
        if (!dom.contains(x)) throw ConfigError("point " + point_text(x) + " is outside the chart");
        s.points.explicit_points.push_back(x);
      }
    }
    if (j.contains("grid")) {
      only_keys(j["grid"], {"counts", "lower", "upper", "margin"}, "grid");
      const json& g = j["grid"];
      std::vector<int> counts;
      for (const auto& c : g.at("counts")) counts.push_back(positive_int(c, "grid.counts"));
      if (static_cast<int>(counts.size()) != dom.dim()) throw ConfigError("grid.counts needs one entry per axis");
      s.points.grid_counts = counts;
      if (g.contains("lower") != g.contains("upper")) throw ConfigError("grid needs both lower and upper");
      if (g.contains("lower")) {
        s.points.grid_lower = vec_from(g["lower"], "grid.lower");
        s.points.grid_upper = vec_from(g["upper"], "grid.upper");
        if (s.points.grid_lower.size() != dom.dim() || s.points.grid_upper.size() != dom.dim())
          throw ConfigError("grid bounds need one entry per axis");
        if (!dom.contains(s.points.grid_lower) || !dom.contains(s.points.grid_upper))
          throw ConfigError("grid bounds must lie inside the chart");
      }
      if (g.contains("margin")) s.points.margin = g["margin"].get<double>();
    }
    if (j.contains("random")) {
      only_keys(j["random"], {"count", "seed", "margin"}, "random");
      const json& r = j["random"];
      if (r.contains("count")) s.points.random_count = positive_int(r["count"], "random.count");
      if (r.contains("seed")) s.points.random_seed = r["seed"].get<std::uint64_t>();
      if (r.contains("margin")) s.points.margin = r["margin"].get<double>();
    }

    if (j.contains("mc")) {
      if (s.command != "mc-reduce") throw ConfigError("'mc' only applies to mc-reduce");
      only_keys(j["mc"], {"t_a", "t_b", "dt", "n_paths", "seed", "smoothing_width", "workers", "haar_resolution",
                          "mollifier_order", "x_a", "x_b", "tolerance"},
                "mc");
      const json& m = j["mc"];
      MCConfig mc;
      if (m.contains("t_a")) mc.ensemble.t_a = m["t_a"].get<double>();
      if (m.contains("t_b")) mc.ensemble.t_b = m["t_b"].get<double>();
      if (m.contains("dt")) mc.ensemble.dt = positive(m["dt"], "mc.dt");
      if (m.contains("n_paths")) mc.ensemble.n_paths = positive_int(m["n_paths"], "mc.n_paths");
      if (m.contains("seed")) mc.ensemble.seed = m["seed"].get<std::uint64_t>();
      if (m.contains("workers")) mc.ensemble.workers = positive_int(m["workers"], "mc.workers");
      if (m.contains("smoothing_width")) mc.smoothing_width = positive(m["smoothing_width"], "mc.smoothing_width");
      if (m.contains("haar_resolution")) mc.haar_resolution = positive_int(m["haar_resolution"], "mc.haar_resolution");
      if (m.contains("mollifier_order")) mc.mollifier_order = positive_int(m["mollifier_order"], "mc.mollifier_order");
      if (m.contains("tolerance")) mc.tolerance = positive(m["tolerance"], "mc.tolerance");
      if (!m.contains("x_a") || !m.contains("x_b")) throw ConfigError("mc needs endpoints x_a and x_b");
      mc.x_a = vec_from(m["x_a"], "mc.x_a");
      mc.x_b = vec_from(m["x_b"], "mc.x_b");
      const Domain& base = s.geometry.bundle->base_domain;
      for (const Vec* x : {&mc.x_a, &mc.x_b})
        if (x->size() != base.dim() || !base.contains(*x))
          throw ConfigError("mc endpoint " + point_text(*x) + " is not a base point inside the chart");
      if (mc.ensemble.n_paths < 100) throw ConfigError("mc.n_paths must be at least 100");
      if (!(mc.ensemble.t_b > mc.ensemble.t_a)) throw ConfigError("mc needs t_b > t_a");
      const double steps = (mc.ensemble.t_b - mc.ensemble.t_a) / mc.ensemble.dt;
      if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw ConfigError("mc.dt must divide t_b - t_a");
      s.mc = mc;
    } else if (s.command == "mc-reduce") {
      throw ConfigError("mc-reduce needs an 'mc' section");
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

std::vector<Vec> resolve_points(const Scenario& s) {
  if (!s.points.explicit_points.empty()) return s.points.explicit_points;
  ChartedMetric scratch;
  const Domain& dom = point_domain(s, scratch);
  const double margin = s.points.margin.value_or(default_margin(s, dom));
  std::vector<Vec> out;
  if (s.points.grid_counts) {
    const auto& counts = *s.points.grid_counts;
    const int n = dom.dim();
    Vec lo(n), hi(n);
    for (int k = 0; k < n; ++k) {
      if (s.points.grid_lower.size() == n) {
        lo[k] = s.points.grid_lower[k];
        hi[k] = s.points.grid_upper[k];
      } else if (dom.periodic[static_cast<std::size_t>(k)]) {
        const double step = (dom.upper[k] - dom.lower[k]) / counts[static_cast<std::size_t>(k)];
        lo[k] = dom.lower[k];
        hi[k] = dom.upper[k] - step;
      } else {
        lo[k] = dom.lower[k] + margin;
        hi[k] = dom.upper[k] - margin;
      }
    }
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    while (true) {
      Vec p(n);
      for (int k = 0; k < n; ++k) {
        const int c = counts[static_cast<std::size_t>(k)];
        p[k] = c == 1 ? 0.5 * (lo[k] + hi[k]) : lo[k] + (hi[k] - lo[k]) * idx[static_cast<std::size_t>(k)] / (c - 1);
      }
      out.push_back(p);
      int k = n - 1;
      while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == counts[static_cast<std::size_t>(k)]) idx[static_cast<std::size_t>(k--)] = 0;
      if (k < 0) break;
    }
    return out;
  }
  std::mt19937_64 rng(s.points.random_seed);
  for (int i = 0; i < s.points.random_count; ++i) out.push_back(random_point(dom, rng, margin));
  return out;
}

ScenarioResult run_scenario(const Scenario& s) {
  ScenarioResult r;
  json& rep = r.report;
  rep["command"] = s.command;
  rep["geometry"] = s.geometry_name;
  rep["convention"] = to_string(s.convention);
  rep["fd"] = fd_json(s.fd);
  rep["physical"] = {{"hbar", s.physical.hbar}, {"m", s.physical.m}, {"kappa", s.physical.kappa}};
  auto fail = [&r](const std::string& msg) {
    r.checks_passed = false;
    r.failures.push_back(msg);
  };

  if (s.command == "mc-reduce") {
    const MCConfig& mc = *s.mc;
    ReductionOptions opt;
    opt.ensemble = mc.ensemble;
    opt.smoothing_width = mc.smoothing_width;
    opt.haar_resolution = mc.haar_resolution;
    opt.mollifier_order = mc.mollifier_order;
    ReductionCheck rc;
    try {
      rc = reduction_check(*s.geometry.bundle, mc.x_a, mc.x_b, opt, s.physical);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw NumericalFailure("mc-reduce " + point_text(mc.x_a) + " -> " + point_text(mc.x_b) + ": " + e.what());
    }
    json row = to_json(rc);
    row["x_a"] = vec_json(mc.x_a);
    row["x_b"] = vec_json(mc.x_b);
    row["t_a"] = mc.ensemble.t_a;
    row["t_b"] = mc.ensemble.t_b;
    const double dist = rc.stderr_distance();
    row["stderr_distance"] = dist;
    const bool within = dist <= 3.0 || (mc.tolerance && std::abs(rc.ratio - 1.0) <= *mc.tolerance);
    row["within_tolerance"] = within;
    if (!within) fail("ratio " + std::to_string(rc.ratio) + " is " + std::to_string(dist) + " standard errors from 1");
    const double discard = double(rc.discarded_lhs + rc.discarded_rhs) / (2.0 * rc.n_paths);
    if (discard > 1e-3) fail("discard rate " + std::to_string(discard) + " exceeds 0.1%");
    r.rows.push_back(std::move(row));
    rep["rows"] = r.rows;
    return r;
  }

  const std::vector<Vec> points = resolve_points(s);
  double max_identity = 0.0, max_alternate = 0.0, max_expansion_pos = 0.0, max_expansion_neg = 0.0;
  std::optional<Representation> rep_obj;
  if (s.command == "hamiltonian") rep_obj = representation_by_name(s.representation, *s.geometry.bundle);

  for (const Vec& x : points) {
    try {
      json row;
      if (s.command == "curvature") {
        const ChartedMetric m = s.geometry.total_metric();
        const CurvaturePack pack = curvature_pack(m, x, s.fd, s.convention);
        if (!std::isfinite(pack.scalar)) fail("non-finite scalar curvature at " + point_text(x));
        row["x"] = vec_json(x);
        row["scalar"] = pack.scalar;
        row["ricci"] = mat_json(pack.ricci);
      } else if (s.command == "decompose") {
        const DecompositionReport d = decomposition_report(*s.geometry.bundle, x, s.fd, s.convention);
        const double scale = std::max(1.0, std::abs(d.Dgamma2_term));
        if (d.Dgamma2_term < -1e-12 * scale || d.j_norm2 < -1e-12 * scale) fail("negative square norm at " + point_text(x));
        if (std::abs(d.Dgamma2_term - d.j_norm2) > 1e-8 * scale) fail("Dgamma2_term != j_norm2 at " + point_text(x));
        row = to_json(d);
      } else if (s.command == "verify-identity") {
        const KKBundle& b = *s.geometry.bundle;
        const DecompositionReport d = decomposition_report(b, x, s.fd, s.convention);
        const DecompositionReport alt = decomposition_report(b, x, s.fd, opposite(s.convention));
        auto relation = [](const DecompositionReport& q) {
          return q.convention == SignConvention::NegativeSpheres ? q.residual : q.remark_residual;
        };
        const double tol = s.tolerance.value_or(1e-5);
        row["x"] = vec_json(x);
        row["R_P"] = d.R_P;
        row["R_M"] = d.R_M;
        row["R_G"] = d.R_G;
        row["F2_term"] = d.F2_term;
        row["j_norm2"] = d.j_norm2;
        row["J_tilde_direct"] = d.J_tilde_direct;
        row["residual"] = relation(d);
        row["alternate_residual"] = relation(alt);
        const auto& pos = d.convention == SignConvention::PositiveSpheres ? d : alt;
        const auto& neg = d.convention == SignConvention::PositiveSpheres ? alt : d;
        max_identity = std::max(max_identity, std::abs(relation(d)));
        max_alternate = std::max(max_alternate, std::abs(relation(alt)));
        max_expansion_pos = std::max(max_expansion_pos, std::abs(pos.residual));
        max_expansion_neg = std::max(max_expansion_neg, std::abs(neg.residual));
        if (!(std::abs(relation(d)) < tol)) fail("identity residual " + std::to_string(relation(d)) + " at " + point_text(x));
        if (!(std::abs(relation(alt)) < tol))
          fail("alternate-convention residual " + std::to_string(relation(alt)) + " at " + point_text(x));
      } else if (s.command == "jacobian") {
        const KKBundle& b = *s.geometry.bundle;
        const JacobianValue jd = jacobian_direct(b, x, s.fd, s.physical);
        const double jg = jacobian_geometric(b, x, s.fd);
        row["x"] = vec_json(x);
        row["J_tilde_direct"] = jd.j_tilde;
        row["J_tilde_geometric"] = jg;
        row["difference"] = jd.j_tilde - jg;
        row["jacobian"] = jd.jacobian;
        if (!(std::abs(jd.j_tilde - jg) < s.tolerance.value_or(1e-4)))
          fail("J_tilde routes differ by " + std::to_string(jd.j_tilde - jg) + " at " + point_text(x));
      } else if (s.command == "hamiltonian") {
        HamiltonianOptions opt;
        opt.physical = s.physical;
        opt.casimir_prefactor = s.casimir_prefactor;
        const HamiltonianCoeffs c = s.representation == "scalar"
                                        ? scalar_hamiltonian_coeffs(*s.geometry.bundle, x, s.fd, s.physical)
                                        : matrix_hamiltonian_coeffs(*s.geometry.bundle, *rep_obj, x, s.fd, opt);
        row = to_json(c);
        if (!(hermiticity_residual(c.potential_matrix) < 1e-10)) fail("potential matrix not Hermitian at " + point_text(x));
      }
      r.rows.push_back(std::move(row));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw NumericalFailure(s.command + " at point " + point_text(x) + ": " + e.what());
    }
  }
  if (s.command == "verify-identity") {
    const double tol = s.tolerance.value_or(1e-5);
    std::string zeroed = "none";
    if (max_expansion_neg < tol && max_expansion_pos >= tol) zeroed = to_string(SignConvention::NegativeSpheres);
    if (max_expansion_pos < tol && max_expansion_neg >= tol) zeroed = to_string(SignConvention::PositiveSpheres);
    if (max_expansion_pos < tol && max_expansion_neg < tol) zeroed = "both";
    rep["summary"] = {{"tolerance", tol},
                      {"max_residual", max_identity},
                      {"max_alternate_residual", max_alternate},
                      {"alternate_convention", to_string(opposite(s.convention))},
                      {"expansion_zeroed_in", zeroed}};
  }
  rep["rows"] = r.rows;
  return r;
}

std::string render_report(const ScenarioResult& r, ReportFormat f, const std::string& timestamp) {
  if (f == ReportFormat::Csv) return rows_to_csv(r.rows);
  json out = r.report;
  out["status"] = r.checks_passed ? "ok" : "failed";
  out["failures"] = r.failures;
  out["timestamp"] = timestamp;
  return out.dump(2) + "\n";
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run_scenario_file(const std::string& command, const std::string& config_path, const std::string& out_dir,
                      ReportFormat f, std::ostream& err) {
  ScenarioResult result;
  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read config '" + config_path + "'");
    std::stringstream text;
    text << in.rdbuf();
    const Scenario s = parse_scenario(text.str(), command);
    result = run_scenario(s);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const RepresentationMismatch& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  const std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto path = dir / (command + (f == ReportFormat::Csv ? ".csv" : ".json"));
  std::ofstream out(path);
  if (!out) {
    err << "cannot write report '" << path.string() << "'\n";
    return 3;
  }
  out << render_report(result, f, utc_timestamp());
  for (const auto& msg : result.failures) err << "check failed: " << msg << "\n";
  return result.checks_passed ? 0 : 3;
}

}  // namespace kklab
