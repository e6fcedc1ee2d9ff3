#pragma once

#include <cstdint>
#include <vector>

namespace iwalk {

/// pmf on the contiguous support offset, offset+1, ... with the mass that
/// was not tabulated (truncation or trimming) tracked as `deficit`.
/// Canonical form: first and last stored atoms are positive.
struct DiscreteDistribution {
  std::int64_t offset = 0;
  std::vector<double> probs{1.0};
  double deficit = 0.0;

  static DiscreteDistribution point_mass(std::int64_t at);

  /// Drops zero atoms at both ends. Throws ValidationError on negative or
  /// non-finite atoms.
  void canonicalize();

  std::int64_t min_support() const { return offset; }
  std::int64_t max_support() const { return offset + std::int64_t(probs.size()) - 1; }
  double prob(std::int64_t k) const;
  double stored_mass() const;
  /// |stored mass + deficit - 1|.
  double normalization_error() const;
  /// Moments over the stored atoms only.
  double mean() const;
  double variance() const;
};

/// Direct O(|a||b|) convolution of independent laws. Trims the largest
/// support points while their cumulative mass stays <= trunc_tol and adds it
/// to the deficit; the result's deficit is 1 - (1 - da)(1 - db) + trimmed.
DiscreteDistribution convolve(const DiscreteDistribution& a, const DiscreteDistribution& b,
                              double trunc_tol = 0.0);

/// Moves the largest atoms into the deficit while their total is <= tol.
/// Returns the trimmed mass.
double trim_upper_tail(DiscreteDistribution& d, double tol);

}  // namespace iwalk
