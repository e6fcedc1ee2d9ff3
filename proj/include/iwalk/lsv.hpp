#pragma once

#include <cstddef>
#include <vector>

namespace iwalk {

/// Parameters of the two-branch intermittent map whose left branch is
/// g(y) = y + kappa * y^(alpha + 1) on [0, c], tied by c + kappa c^(alpha+1) = 1.
struct LsvParams {
  double alpha;
  double c;
  double kappa;

  /// Solves the constraint for kappa.
  static LsvParams from_alpha_c(double alpha, double c);
  /// Solves the constraint for c (bisection; the left side is increasing in c).
  static LsvParams from_alpha_kappa(double alpha, double kappa);

  double branch(double y) const;  ///< g(y)
  /// Natural decay exponent of c_n, 1 / alpha.
  double natural_beta() const { return 1.0 / alpha; }
};

/// g^{-1}(target) for target in (0, 1], by bisection over
/// [target / (1 + kappa target^alpha), target] to relative tolerance `tol`
/// followed by one Newton step kept inside the bracket.
double lsv_inverse_branch(const LsvParams& params, double target, double tol);

/// c_1..c_count with c_n = g^{-n}(1), computed by bisection on the increasing
/// branch over [0, c_{n-1}] to relative tolerance `tol`, then one guarded
/// Newton step. c_1 equals params.c exactly. Throws NumericError if the
/// bracket cannot be reduced to `tol` or monotonicity is lost.
std::vector<double> lsv_cn_sequence(const LsvParams& params, std::size_t count,
                                    double tol = 1e-13);

/// Right-hand side of the bound n^{1/alpha} c_n <= ... .
double lsv_cn_bound(const LsvParams& params);
/// Right-hand side of the bound n^{1/alpha + 1} (c_{n-1} - c_n) <= ... .
double lsv_cn_difference_bound(const LsvParams& params);

}  // namespace iwalk
