#pragma once

#include <vector>

#include "cdfrc/types.hpp"

namespace cdfrc::numerics {

inline constexpr double kHermitianTol = 1e-12;       // relative symmetry tolerance
inline constexpr double kEigReconstructTol = 1e-10;  // relative reconstruction bound

/// True when max|A - A^H| <= tol * max|A|.
bool is_hermitian(const CMat& a, double tol = kHermitianTol);

/// Throws std::invalid_argument when the matrix is not Hermitian within tolerance.
void require_hermitian(const CMat& a, const char* who, double tol = kHermitianTol);

struct HermitianEig {
  RVec values;   // sorted descending
  CMat vectors;  // unitary, columns match values
};

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
/// Guarantees U diag(w) U^H reconstructs the input to kEigReconstructTol * max|A|.
HermitianEig hermitian_eig(const CMat& a);

/// Regularized lower incomplete gamma P(shape, x) = gamma(shape, x) / (shape-1)!
/// for integer shape >= 1; equals 1 - exp(-x) * sum_{k<shape} x^k / k!.
double regularized_lower_gamma(int shape, double x);

/// Distribution of sum_w scales[w] * G_w with G_w i.i.d. Erlang(shape, 1).
/// Scales must be positive after pruning of (near-)zero entries; callers prune.
struct ErlangMixture {
  std::vector<double> scales;
  int shape = 1;

  ErlangMixture(std::vector<double> scales_in, int shape_in);
};

/// CDF of the Erlang mixture at x >= 0. Nondecreasing, ->1 as x -> inf.
/// Near-equal scales (relative gap < 1e-6) are merged into a single
/// higher-shape component before evaluation; the underlying closed form is
/// ill-conditioned when distinct scales nearly coincide.
double erlang_mixture_cdf(const ErlangMixture& mix, double x);

/// Eigenvalue clipping: all eigenvalues raised to at least `floor`.
/// Frobenius-nearest PSD-floored matrix.
CMat psd_floor(const CMat& a, double floor = 0.0);

/// Hermitian PSD square root (eigenvalues below zero are clipped first).
CMat hermitian_sqrt(const CMat& a);

}  // namespace cdfrc::numerics
