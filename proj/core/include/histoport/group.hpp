#pragma once
#include <stdexcept>
#include <vector>

#include "histoport/mat.hpp"

namespace histoport {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Planar rotation, either a free angle or a member of a cyclic grid
/// C_N (index i <-> angle period*i/N).  `period` is 2*pi for the full
/// rotation group and pi for the quotient by the half-turn.
struct GroupElement {
  double angle = 0.0;  ///< reduced into [0, period)
  double period = kTwoPi;
  int index = -1;  ///< grid index, or -1 for a continuous element
  int order = 0;   ///< grid size N, or 0 for a continuous element

  static GroupElement rotation(double theta, double period = kTwoPi);
  static GroupElement discrete(int i, int n, double period = kTwoPi);

  bool is_discrete() const { return order > 0; }
  GroupElement compose(const GroupElement& other) const;
  GroupElement inverse() const;
};

enum class RepKind {
  kTrivial,          // 1-dim, every rotation acts as identity
  kStandard,         // 2-dim rotation matrix, frequency 1
  kIrrep,            // 2-dim rotation at frequency j (j >= 1)
  kIrrepSum,         // blockdiag(1, R(theta), ..., R(jc*theta)), dim 1+2jc
  kRegular,          // N-dim cyclic permutation of C_N
  kQuotientIrrepSum  // irrep sum of the half-turn quotient: R(j * 2*theta)
};

/// Which representation a feature-field channel block carries.
struct RepSpec {
  RepKind kind = RepKind::kTrivial;
  int freq = 0;      // kIrrep frequency j
  int max_freq = 0;  // kIrrepSum / kQuotientIrrepSum cutoff j_c
  int order = 0;     // kRegular N

  static RepSpec trivial() { return {RepKind::kTrivial, 0, 0, 0}; }
  static RepSpec standard() { return {RepKind::kStandard, 1, 0, 0}; }
  static RepSpec irrep(int j);
  static RepSpec irrep_sum(int jc);
  static RepSpec regular(int n);
  static RepSpec quotient_irrep_sum(int jc);

  int dim() const;

  /// Angular frequencies (in units of the full-group angle theta) carried by
  /// successive coefficient blocks: {0,1,...,jc} for an irrep sum,
  /// {0,2,...,2jc} for the quotient variant.
  std::vector<int> theta_frequencies() const;

  bool operator==(const RepSpec&) const = default;
};

/// rho(g) acting on column coefficient vectors, v' = rho(g) * v.
/// The regular representation is defined only on its own grid: passing a
/// continuous element (or one from a different grid) throws.
Mat rep_matrix(const RepSpec& rep, const GroupElement& g);

/// N x (1+2jc) matrix Q whose row i evaluates a band-limited function at
/// grid angle g_i:  row_i = [1, cos g_i, sin g_i, ..., cos(jc g_i), sin(jc g_i)].
/// The quotient variant keeps the N/2 rows of the half-turn quotient grid,
/// evaluated in the doubled angle alpha = 2*theta.
struct DiscretizationMatrix {
  int num_rows = 0;
  int max_freq = 0;
  bool quotient = false;
  Mat q;     // num_rows x (1+2jc)
  Mat pinv;  // exact left inverse D*Q^T when num_rows >= 1+2jc
};

DiscretizationMatrix discretization_matrix(int n, int jc, bool quotient = false);

/// Exact Fourier fit: coefficients c with Q*c == samples for band-limited
/// samples.  `samples` must have length n and n >= 1+2jc.
std::vector<double> fit_coefficients(const std::vector<double>& samples, int n, int jc);

}  // namespace histoport
