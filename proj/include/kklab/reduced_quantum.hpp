#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "kklab/kk_geometry.hpp"
#include "kklab/physical_params.hpp"

namespace kklab {

/// Generators (J_alpha)_pq of a finite-dimensional representation of the structure group.
struct Representation {
  std::string label;
  std::vector<CMat> generators;

  int dim() const { return generators.empty() ? 1 : static_cast<int>(generators.front().rows()); }
  /// max |[J_a, J_b] - c^m_ab J_m|
  double commutation_residual(const LieStructure& ls) const;
};

/// All generators zero, acting on C^dim_v.
Representation trivial_representation(int dim_g, int dim_v = 1);
/// J_a = -(i/2) sigma_a; commutators match c = epsilon.
Representation su2_spin_half();
/// (J_a)_{bc} = c^b_{a c}
Representation adjoint_representation(const LieStructure& ls);
/// J = i q on C^1 for one U(1) factor.
Representation u1_charge(double q);

/// Coefficients of H = lap_prefactor (Delta_M + first_order^j d_j + connection_zeroth) + potential_matrix.
struct HamiltonianCoeffs {
  Vec x;
  int dim_v = 1;
  Mat kinetic_inverse_metric;       // h^{ij}
  double laplacian_prefactor = 0.0;  // -hbar^2 / 2m
  std::vector<CMat> first_order;     // per base direction j: 2 h^{ij} A^a_i J_a
  CMat connection_zeroth;            // h^{ij}(d_i G_j + G_i G_j - Gamma^m_ij G_m), G_i = A^a_i J_a
  CMat casimir_block;                // -gamma^{ab} J_a J_b
  double casimir_prefactor = 0.0;    // weight of casimir_block; default hbar^2 / 2m
  double j_tilde = 0.0;
  double potential = 0.0;
  CMat potential_matrix;             // casimir_prefactor casimir + (hbar^2/8m) j_tilde I + V I

  CMat zeroth_order() const { return laplacian_prefactor * connection_zeroth + potential_matrix; }
};

struct HamiltonianOptions {
  PhysicalParams physical;
  /// Overrides the weight on -gamma^{ab} J_a J_b; unset means hbar^2 / 2m.
  std::optional<double> casimir_prefactor;
};

HamiltonianCoeffs scalar_hamiltonian_coeffs(const KKBundle& b, const Vec& x, const FDScheme& s = {},
                                            const PhysicalParams& p = {});

/// Throws RepresentationMismatch if the generators do not close on b's structure constants.
HamiltonianCoeffs matrix_hamiltonian_coeffs(const KKBundle& b, const Representation& rep, const Vec& x,
                                            const FDScheme& s = {}, const HamiltonianOptions& opt = {});

/// Coefficients of the real-kappa generator
/// H_kappa = (hbar kappa / 2m) Delta_M - (hbar kappa / 8m) J_tilde + V / (hbar kappa).
struct KappaForm {
  std::complex<double> laplacian;
  std::complex<double> zeroth;
};

KappaForm kappa_form(double hbar, double m, std::complex<double> kappa, double j_tilde, double potential);

/// -(hbar / kappa) H_kappa at kappa = i, coefficientwise.
KappaForm continued_to_schroedinger(double hbar, double m, double j_tilde, double potential);

/// Max abs of X - X^dagger.
double hermiticity_residual(const CMat& m);

}  // namespace kklab
