#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "kklab/chart_calculus.hpp"
#include "kklab/kk_geometry.hpp"

namespace kklab {

/// Distance the Hopf base patch keeps from the poles of S^2.
inline constexpr double kHopfPatchMargin = 0.2;

/// A resolved geometry: either a bare metric or a bundle (whose metric is the assembled one).
struct Geometry {
  std::string name;
  std::optional<ChartedMetric> metric;
  std::optional<KKBundle> bundle;

  bool is_bundle() const { return bundle.has_value(); }
  ChartedMetric total_metric() const;
};

struct GeometryCatalogEntry {
  std::string name;       // e.g. "s2"
  std::string signature;  // e.g. "s2(r=1)"
  std::string description;
  std::string reference;  // closed-form reference values where known
  bool is_bundle = false;
};

const std::vector<GeometryCatalogEntry>& catalog();

/// Parses "name" or "name(arg, ...)" and builds the geometry. Throws ConfigError.
Geometry resolve_geometry(const std::string& spec);

/// Group by scenario name: "su2", "u1", "torus<n>".
LieGroup group_by_name(const std::string& name);

struct CatalogCheck {
  std::string name;
  bool ok = true;
  std::vector<std::string> failures;
};

/// SPD checks of every field at `n_points` random chart points.
CatalogCheck self_validate(const Geometry& g, int n_points = 10, std::uint64_t seed = 20240611);

/// Uniform point in the domain, at least `margin` inside non-periodic walls.
Vec random_point(const Domain& d, std::mt19937_64& rng, double margin);

}  // namespace kklab
