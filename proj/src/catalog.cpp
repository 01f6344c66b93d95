#include "kklab/catalog.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

namespace kklab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ParsedSpec {
  std::string name;
  std::vector<double> args;
};

ParsedSpec parse_spec(const std::string& spec) {
  ParsedSpec out;
  const auto open = spec.find('(');
  auto trim = [](std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
  };
  if (open == std::string::npos) {
    out.name = trim(spec);
    return out;
  }
  if (spec.back() != ')') throw ConfigError("malformed geometry '" + spec + "'");
  out.name = trim(spec.substr(0, open));
  std::stringstream body(spec.substr(open + 1, spec.size() - open - 2));
  std::string item;
  while (std::getline(body, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    try {
      out.args.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw ConfigError("geometry argument '" + item + "' is not a number");
    }
    if (used != item.size()) throw ConfigError("geometry argument '" + item + "' is not a number");
  }
  return out;
}

double arg(const ParsedSpec& p, std::size_t i, double fallback) { return i < p.args.size() ? p.args[i] : fallback; }

int int_arg(const ParsedSpec& p, std::size_t i, int fallback, int lo, int hi) {
  const double v = arg(p, i, fallback);
  if (v != std::floor(v) || v < lo || v > hi) {
    std::ostringstream msg;
    msg << "argument " << i << " of '" << p.name << "' must be an integer in [" << lo << ", " << hi << "]";
    throw ConfigError(msg.str());
  }
  return static_cast<int>(v);
}

double positive_arg(const ParsedSpec& p, std::size_t i, double fallback) {
  const double v = arg(p, i, fallback);
  if (!(v > 0.0)) throw ConfigError("argument " + std::to_string(i) + " of '" + p.name + "' must be positive");
  return v;
}

Vec vec_of(std::initializer_list<double> xs) {
  Vec v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

ChartedMetric flat_torus(int n) {
  return {n, [n](const Vec&) -> Mat { return Mat::Identity(n, n); }, Domain::periodic_box(n, 0.0, kTwoPi),
          "flat-torus(" + std::to_string(n) + ")"};
}

ChartedMetric sphere2(double r) {
  Domain d = Domain::box(vec_of({0.05, 0.0}), vec_of({kPi - 0.05, kTwoPi}));
  d.periodic[1] = true;
  return {2,
          [r](const Vec& p) -> Mat {
            Mat g = Mat::Zero(2, 2);
            const double s = std::sin(p[0]);
            g(0, 0) = r * r;
            g(1, 1) = r * r * s * s;
            return g;
          },
          d, "s2"};
}

ChartedMetric sphere3(double r) {
  Domain d = Domain::box(vec_of({0.05, 0.05, 0.0}), vec_of({kPi - 0.05, kPi - 0.05, kTwoPi}));
  d.periodic[2] = true;
  return {3,
          [r](const Vec& p) -> Mat {
            Mat g = Mat::Zero(3, 3);
            const double s1 = std::sin(p[0]);
            const double s2 = std::sin(p[1]);
            g(0, 0) = r * r;
            g(1, 1) = r * r * s1 * s1;
            g(2, 2) = r * r * s1 * s1 * s2 * s2;
            return g;
          },
          d, "s3"};
}

ChartedMetric polar_plane() {
  Domain d = Domain::box(vec_of({0.1, 0.0}), vec_of({10.0, kTwoPi}));
  d.periodic[1] = true;
  return {2,
          [](const Vec& p) -> Mat {
            Mat g = Mat::Identity(2, 2);
            g(1, 1) = p[0] * p[0];
            return g;
          },
          d, "polar-plane"};
}

KKBundle hopf() {
  KKBundle b;
  b.label = "hopf";
  b.base_dim = 2;
  b.base_domain = Domain::box(vec_of({kHopfPatchMargin, 0.0}), vec_of({kPi - kHopfPatchMargin, kTwoPi}));
  b.base_domain.periodic[1] = true;
  b.group = build_abelian(1);
  b.h = [](const Vec& x) -> Mat {
    Mat h = Mat::Zero(2, 2);
    const double s = std::sin(x[0]);
    h(0, 0) = 0.25;
    h(1, 1) = 0.25 * s * s;
    return h;
  };
  b.gamma = [](const Vec&) -> Mat { return Mat::Identity(1, 1); };
  b.A = [](const Vec& x) -> Mat {
    Mat a = Mat::Zero(2, 1);
    a(1, 0) = 0.5 * std::cos(x[0]);
    return a;
  };
  return b;
}

KKBundle trivial_product(LieGroup group, const std::string& label, int base_dim, double scale) {
  KKBundle b;
  b.label = label;
  b.base_dim = base_dim;
  b.base_domain = Domain::periodic_box(base_dim, 0.0, kTwoPi);
  const int ng = group.structure.dim();
  b.group = std::move(group);
  b.h = [base_dim](const Vec&) -> Mat { return Mat::Identity(base_dim, base_dim); };
  b.gamma = [ng, scale](const Vec&) -> Mat { return scale * Mat::Identity(ng, ng); };
  b.A = [base_dim, ng](const Vec&) -> Mat { return Mat::Zero(base_dim, ng); };
  return b;
}

KKBundle warped_su2() {
  KKBundle b;
  b.label = "warped-su2";
  b.base_dim = 2;
  b.base_domain = Domain::periodic_box(2, 0.0, kTwoPi);
  b.group = build_su2();
  b.h = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
  b.gamma = [](const Vec& x) -> Mat {
    const double x1 = x[0];
    const double x2 = x[1];
    Mat L(3, 3);
    L << 1.0 + 0.3 * std::sin(x1), 0.2 * std::cos(x2), 0.1 * std::sin(x1 + x2),  //
        0.15 * std::cos(x1), 0.9 + 0.25 * std::sin(x2), 0.1 * std::cos(x1 - x2),  //
        0.1 * std::sin(x2), 0.2 * std::sin(x1), 1.1 + 0.2 * std::cos(x1 + x2);
    return L.transpose() * L + 0.3 * Mat::Identity(3, 3);
  };
  b.A = [](const Vec& x) -> Mat {
    const double x1 = x[0];
    const double x2 = x[1];
    Mat a(2, 3);
    a << 0.3 * std::sin(x2), 0.2 * std::cos(x1), 0.1 + 0.1 * std::sin(x1 + x2),  //
        0.25 * std::cos(x1), 0.15 * std::sin(x1 - x2), 0.2 * std::sin(x1);
    return a;
  };
  return b;
}

KKBundle warped_u1_line(double eps, int power) {
  KKBundle b;
  std::ostringstream label;
  label << "warped-u1-line(" << eps << "," << power << ")";
  b.label = label.str();
  b.base_dim = 1;
  b.base_domain = Domain::box(vec_of({-10.0}), vec_of({10.0}));
  b.group = build_abelian(1);
  b.h = [](const Vec&) -> Mat { return Mat::Identity(1, 1); };
  b.gamma = [eps, power](const Vec& x) -> Mat {
    return Mat::Constant(1, 1, std::exp(2.0 * eps * std::pow(x[0], power)));
  };
  b.A = [](const Vec&) -> Mat { return Mat::Zero(1, 1); };
  return b;
}

bool is_spd(const Mat& m) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
  Eigen::LLT<Mat> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

ChartedMetric Geometry::total_metric() const {
  if (bundle) return assemble_kk_metric(*bundle);
  return *metric;
}

const std::vector<GeometryCatalogEntry>& catalog() {
  static const std::vector<GeometryCatalogEntry> entries = {
      {"flat-torus", "flat-torus(n=3)", "flat n-torus, Cartesian angles in [0, 2pi)", "scalar curvature 0", false},
      {"s2", "s2(r=1)", "round 2-sphere of radius r, chart (theta, phi)", "scalar curvature 2/r^2", false},
      {"s3", "s3(r=1)", "round 3-sphere of radius r, hyperspherical chart", "scalar curvature 6/r^2", false},
      {"polar-plane", "polar-plane", "flat plane in polar coordinates (r, theta), r in [0.1, 10]",
       "Gamma^r_thth = -r, Gamma^th_rth = 1/r, scalar curvature 0", false},
      {"hopf", "hopf",
       "S^3 -> S^2 as a U(1) bundle: base S^2(1/2) patch away from the poles, monopole A_phi = cos(theta)/2, gamma = 1",
       "R_P = 6, R_M = 8, R_G = 0, 1/4 gamma F^2 = 2, j = 0, J_tilde = 0 (positive-spheres)", true},
      {"trivial-su2-product", "trivial-su2-product(base_dim=2, scale=1)",
       "flat torus base times SU(2) with constant bi-invariant gamma = scale * I, A = 0",
       "R_P = R_G = 3/(2 scale), J_tilde = 0", true},
      {"trivial-u1-product", "trivial-u1-product(base_dim=1, scale=1)",
       "flat torus base times U(1) with constant gamma, A = 0", "all curvature terms 0", true},
      {"warped-su2", "warped-su2",
       "flat 2-torus base times SU(2), gamma = L^T L + 0.3 I with trigonometric L, non-abelian trigonometric A",
       "J_tilde_direct = J_tilde_geometric", true},
      {"warped-u1-line", "warped-u1-line(eps=0.1, power=1)",
       "line base x in [-10, 10] times U(1), gamma = exp(2 eps x^power)",
       "J_tilde = eps^2 (power 1); 4 eps + 4 eps^2 x^2 (power 2)", true},
  };
  return entries;
}

LieGroup group_by_name(const std::string& name) {
  if (name == "su2") return build_su2();
  if (name == "u1") return build_abelian(1);
  if (name.rfind("torus", 0) == 0) {
    try {
      const int n = std::stoi(name.substr(5));
      if (n >= 1 && n <= kMaxDim) return build_abelian(n);
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown group '" + name + "'");
}

Geometry resolve_geometry(const std::string& spec) {
  const ParsedSpec p = parse_spec(spec);
  Geometry g;
  g.name = spec;
  auto no_args = [&]() {
    if (!p.args.empty()) throw ConfigError("geometry '" + p.name + "' takes no arguments");
  };
  if (p.name == "flat-torus") {
    g.metric = flat_torus(int_arg(p, 0, 3, 1, kMaxDim));
  } else if (p.name == "s2") {
    g.metric = sphere2(positive_arg(p, 0, 1.0));
  } else if (p.name == "s3") {
    g.metric = sphere3(positive_arg(p, 0, 1.0));
  } else if (p.name == "polar-plane") {
    no_args();
    g.metric = polar_plane();
  } else if (p.name == "hopf") {
    no_args();
    g.bundle = hopf();
  } else if (p.name == "trivial-su2-product") {
    const int n = int_arg(p, 0, 2, 1, kMaxDim - 3);
    g.bundle = trivial_product(build_su2(), spec, n, positive_arg(p, 1, 1.0));
  } else if (p.name == "trivial-u1-product") {
    const int n = int_arg(p, 0, 1, 1, kMaxDim - 1);
    g.bundle = trivial_product(build_abelian(1), spec, n, positive_arg(p, 1, 1.0));
  } else if (p.name == "warped-su2") {
    no_args();
    g.bundle = warped_su2();
  } else if (p.name == "warped-u1-line") {
    g.bundle = warped_u1_line(arg(p, 0, 0.1), int_arg(p, 1, 1, 1, 4));
  } else {
    throw ConfigError("unknown geometry '" + p.name + "'");
  }
  return g;
}

Vec random_point(const Domain& d, std::mt19937_64& rng, double margin) {
  Vec p(d.dim());
  for (int k = 0; k < d.dim(); ++k) {
    const bool periodic = d.periodic[static_cast<std::size_t>(k)];
    const double lo = periodic ? d.lower[k] : d.lower[k] + margin;
    const double hi = periodic ? d.upper[k] : d.upper[k] - margin;
    std::uniform_real_distribution<double> u(lo, hi);
    p[k] = u(rng);
  }
  return p;
}

CatalogCheck self_validate(const Geometry& g, int n_points, std::uint64_t seed) {
  CatalogCheck check;
  check.name = g.name;
  std::mt19937_64 rng(seed);
  auto fail = [&](const std::string& what, const Vec& p) {
    std::ostringstream msg;
    msg << what << " not SPD at (" << p.transpose() << ")";
    check.ok = false;
    check.failures.push_back(msg.str());
  };
  const ChartedMetric total = g.total_metric();
  for (int i = 0; i < n_points; ++i) {
    const Vec q = random_point(total.domain, rng, 1e-6);
    if (!is_spd(total.at(q))) fail("total metric", q);
    if (g.bundle) {
      const KKBundle& b = *g.bundle;
      const Vec x = q.head(b.base_dim);
      if (!is_spd(b.h(x))) fail("h", x);
      if (!is_spd(b.gamma(x))) fail("gamma", x);
    }
  }
  return check;
}

}  // namespace kklab
