#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "kklab/kk_geometry.hpp"
#include "kklab/reduced_quantum.hpp"
#include "kklab/stochastic_lab.hpp"

namespace kklab {

using json = nlohmann::ordered_json;

json vec_json(const Vec& v);
json mat_json(const Mat& m);
/// Row-major nested arrays of [re, im] pairs.
json cmat_json(const CMat& m);

json to_json(const DecompositionReport& r);
json to_json(const HamiltonianCoeffs& c);
json to_json(const KernelEstimate& k);
/// {case, lhs, rhs, ratio, stderr, n_paths, dt, seed} followed by diagnostics.
json to_json(const ReductionCheck& r);

/// Flat CSV: header from the keys of the first row, nested arrays expanded as key_0, key_1, ...
std::string rows_to_csv(const std::vector<json>& rows);

}  // namespace kklab
