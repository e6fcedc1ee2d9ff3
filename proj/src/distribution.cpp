#include "iwalk/distribution.hpp"

#include <cmath>

#include "iwalk/error.hpp"

namespace iwalk {

DiscreteDistribution DiscreteDistribution::point_mass(std::int64_t at) {
  return DiscreteDistribution{at, {1.0}, 0.0};
}

void DiscreteDistribution::canonicalize() {
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw ValidationError("distribution atoms must be finite and non-negative");
    }
  }
  std::size_t first = 0;
  while (first < probs.size() && probs[first] == 0.0) ++first;
  std::size_t last = probs.size();
  while (last > first && probs[last - 1] == 0.0) --last;
  if (first > 0 || last < probs.size()) {
    probs = std::vector<double>(probs.begin() + std::ptrdiff_t(first),
                                probs.begin() + std::ptrdiff_t(last));
    offset += std::int64_t(first);
  }
}

double DiscreteDistribution::prob(std::int64_t k) const {
  if (k < offset || k > max_support()) return 0.0;
  return probs[std::size_t(k - offset)];
}

double DiscreteDistribution::stored_mass() const {
  double s = 0.0;
  for (std::size_t i = probs.size(); i-- > 0;) s += probs[i];
  return s;
}

double DiscreteDistribution::normalization_error() const {
  return std::abs(stored_mass() + deficit - 1.0);
}

double DiscreteDistribution::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += double(offset + std::int64_t(i)) * probs[i];
  return s;
}

double DiscreteDistribution::variance() const {
  const double m = mean();
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double d = double(offset + std::int64_t(i)) - m;
    s += d * d * probs[i];
  }
  return s;
}

double trim_upper_tail(DiscreteDistribution& d, double tol) {
  if (!(tol > 0.0)) return 0.0;
  double removed = 0.0;
  std::size_t keep = d.probs.size();
  while (keep > 1 && removed + d.probs[keep - 1] <= tol) {
    removed += d.probs[keep - 1];
    --keep;
  }
  d.probs.resize(keep);
  d.deficit += removed;
  return removed;
}

DiscreteDistribution convolve(const DiscreteDistribution& a, const DiscreteDistribution& b,
                              double trunc_tol) {
  DiscreteDistribution out;
  out.offset = a.offset + b.offset;
  out.probs.assign(a.probs.size() + b.probs.size() - 1, 0.0);
  const std::size_t nb = b.probs.size();
  for (std::size_t i = 0; i < a.probs.size(); ++i) {
    const double ai = a.probs[i];
    if (ai == 0.0) continue;
    double* o = out.probs.data() + i;
    const double* pb = b.probs.data();
    for (std::size_t j = 0; j < nb; ++j) o[j] += ai * pb[j];
  }
  out.deficit = 1.0 - (1.0 - a.deficit) * (1.0 - b.deficit);
  out.canonicalize();
  trim_upper_tail(out, trunc_tol);
  return out;
}

}  // namespace iwalk
