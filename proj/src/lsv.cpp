#include "iwalk/lsv.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iwalk/error.hpp"

namespace iwalk {

namespace {

void check_alpha(double alpha) {
  // alpha = 1 is admitted: the branch and its inverse orbit are still well
  // defined and it gives closed-form test values.
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("lsv alpha must lie in (0, 1], got " + std::to_string(alpha));
  }
}

void check_constraint(const LsvParams& p) {
  if (!(p.c > 0.0 && p.c < 1.0)) throw ValidationError("lsv c must lie in (0, 1)");
  if (!(p.kappa > 0.0) || !std::isfinite(p.kappa)) {
    throw ValidationError("lsv kappa must be positive");
  }
  const double lhs = p.c + p.kappa * std::pow(p.c, p.alpha + 1.0);
  if (std::abs(lhs - 1.0) > 1e-12) {
    throw ValidationError("lsv parameters violate c + kappa c^(alpha+1) = 1");
  }
}

}  // namespace

LsvParams LsvParams::from_alpha_c(double alpha, double c) {
  check_alpha(alpha);
  if (!(c > 0.0 && c < 1.0)) throw ValidationError("lsv c must lie in (0, 1)");
  LsvParams p{alpha, c, (1.0 - c) / std::pow(c, alpha + 1.0)};
  check_constraint(p);
  return p;
}

LsvParams LsvParams::from_alpha_kappa(double alpha, double kappa) {
  check_alpha(alpha);
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw ValidationError("lsv kappa must be positive");
  }
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (mid + kappa * std::pow(mid, alpha + 1.0) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const auto residual = [&](double c) {
    return std::abs(c + kappa * std::pow(c, alpha + 1.0) - 1.0);
  };
  LsvParams p{alpha, residual(lo) <= residual(hi) ? lo : hi, kappa};
  check_constraint(p);
  return p;
}

double LsvParams::branch(double y) const {
  return y + kappa * std::pow(y, alpha + 1.0);
}

double lsv_inverse_branch(const LsvParams& params, double target, double tol) {
  constexpr int kMaxIterations = 400;
  // g(y) = y (1 + kappa y^alpha) and y* <= target give a tight bracket.
  double lo = target / (1.0 + params.kappa * std::pow(target, params.alpha));
  double hi = target;
  int it = 0;
  while (hi - lo > tol * hi) {
    if (++it > kMaxIterations) {
      throw NumericError("lsv inverse branch: bisection did not converge for target " +
                         std::to_string(target));
    }
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (params.branch(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double y = 0.5 * (lo + hi);
  const double slope =
      1.0 + params.kappa * (params.alpha + 1.0) * std::pow(y, params.alpha);
  const double polished = y - (params.branch(y) - target) / slope;
  if (polished >= lo && polished <= hi) y = polished;
  return y;
}

std::vector<double> lsv_cn_sequence(const LsvParams& params, std::size_t count,
                                    double tol) {
  check_alpha(params.alpha);
  check_constraint(params);
  if (count == 0) throw ValidationError("lsv_cn_sequence: count must be positive");
  if (!(tol >= 4.0 * std::numeric_limits<double>::epsilon())) {
    throw ValidationError("lsv_cn_sequence: tolerance below machine precision");
  }

  std::vector<double> cn;
  cn.reserve(count);
  cn.push_back(params.c);  // g(c) = 1 by the constraint
  for (std::size_t n = 2; n <= count; ++n) {
    const double y = lsv_inverse_branch(params, cn.back(), tol);
    if (!(y < cn.back()) || !(y > 0.0)) {
      throw NumericError("lsv_cn_sequence: lost strict monotonicity at n = " +
                         std::to_string(n) + " (tolerance too coarse)");
    }
    cn.push_back(y);
  }
  return cn;
}

double lsv_cn_bound(const LsvParams& p) {
  const double ia = 1.0 / p.alpha;
  return p.c + p.c * std::pow(p.c / (1.0 - p.c), ia) * std::exp2(ia + ia * ia);
}

double lsv_cn_difference_bound(const LsvParams& p) {
  const double ia = 1.0 / p.alpha;
  return (1.0 - p.c) +
         p.c * std::pow(p.c / (1.0 - p.c), ia) * std::exp2(1.0 + 2.0 * ia + ia * ia);
}

}  // namespace iwalk
