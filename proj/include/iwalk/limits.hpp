#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iwalk/diagnostics.hpp"
#include "iwalk/environment.hpp"
#include "iwalk/walk.hpp"

namespace iwalk {

/// Density of N(mean, variance) at z. Throws ValidationError for variance <= 0.
double normal_density(double mean, double variance, double z);

/// Standard normal CDF.
double normal_cdf(double z);

struct LimitParams {
  enum class Source { fitted, supplied };

  double mu = 0;
  double sigma2 = 0;
  double sigma_tilde2 = 0;  ///< sigma2 / mu^3
  double eta = 0;
  Source source = Source::supplied;

  /// Requires mu > 1, sigma2 > 0, eta in [0, 1/2).
  static LimitParams make(double mu, double sigma2, double eta = 0.0,
                          Source source = Source::supplied);
};

struct LimitFit {
  double mu_hat = 0;       ///< mu_X / X
  double sigma2_hat = 0;   ///< sigma_X^2 / X (meaningless when not converged)
  bool variance_converged = false;
  std::vector<std::string> reasons;  ///< why the variance fit was rejected
  std::optional<LimitParams> params;  ///< only when mu_hat > 1 and the variance fit holds
  /// x^eta (log x)^{1/2} theta_i(x) for x = 0..X (NaN for x < 2).
  std::vector<double> scaled_theta1, scaled_theta2;
};

/// Throws ValidationError when the diagnosed prefix has fewer than 100 sites.
LimitFit fit_limit_params(const EnvDiagnostics& diag, double eta = 0.0);

/// Bracket [lo, hi] for a prediction whose inputs are only known up to the
/// truncation deficit.
struct Interval {
  double lo = 0;
  double hi = 0;
  double mid() const { return 0.5 * (lo + hi); }
  double half_width() const { return 0.5 * (hi - lo); }
};

/// mu^{-1} sum_{l=1}^n h_l(x) omega^x_{n-l} for x = 0..n with
/// h_l = density of N(M_l, l sigma_tilde^2). Needs M_l for l <= n in diag.
std::vector<Interval> llt_predictor(const Environment& env, const LimitParams& params,
                                    const EnvDiagnostics& diag, std::size_t n);

/// f_x(n) = phi(mu_x, sigma_x^2)(n), g_x(n) = phi(mu_x, n sigma^2 / mu)(n),
/// h_n(x) = phi(M_n, n sigma_tilde^2)(x); E1 = P(T_x = n) - f, E2 = f - g,
/// E3 = g - h / mu.
struct Decomposition {
  std::size_t x = 0, n = 0;
  double p_hit = 0, f = 0, g = 0, h_over_mu = 0;
  double e1 = 0, e2 = 0, e3 = 0;
  /// (E1 + E2 + E3) - (P(T_x = n) - h / mu)
  double residual = 0;
};

/// Empty optional when x is 0, outside the diagnosed prefix, or M_n is not
/// available.
std::optional<Decomposition> decompose(const LimitParams& params, const EnvDiagnostics& diag,
                                       std::size_t x, std::size_t n, double p_hit);

struct LltRow {
  std::size_t x = 0;
  double exact = 0;
  double exact_bound = 0;
  Interval predictor;
  std::optional<Decomposition> decomposition;
};

struct LltReport {
  std::size_t n = 0;
  std::vector<LltRow> rows;
  double sup_err_scaled = 0;       ///< sqrt(n) max_x |exact - predictor midpoint|
  double sup_slack_scaled = 0;     ///< sqrt(n) max_x (half-width + exact deficit bound)
  double predictor_mass = 0;       ///< sum_x of predictor midpoints
  double exact_deficit = 0;
};

std::vector<LltReport> llt_reports(const Environment& env, const LimitParams& params,
                                   const EnvDiagnostics& diag, std::span<const std::size_t> ns,
                                   const ExactOptions& opts = {});

/// {"n", "sup_err_scaled", "rows": [{"x", "exact", "pred_lo", "pred_hi", "E1", "E2", "E3"}]}
json llt_report_json(const LltReport& report);

/// Decomposition for every stored atom n <= n_max of T_x, for each x in xs.
/// Throws NumericError when the diagnosed prefix does not reach M_n.
std::vector<Decomposition> llt_error_decomposition(const Environment& env,
                                                   const LimitParams& params,
                                                   const EnvDiagnostics& diag,
                                                   std::span<const std::size_t> xs,
                                                   const ExactOptions& opts = {},
                                                   std::size_t n_max = SIZE_MAX);

/// Kolmogorov distance between a lattice law and N(0, 1) after the affine
/// map k -> (k - center) / scale, evaluated on both sides of every atom.
double kolmogorov_to_normal(const DiscreteDistribution& law, double center, double scale);

struct CltRow {
  std::size_t n = 0;
  double kolmogorov_x = 0;   ///< (X_n - n / mu) / (sqrt(n) sigma_tilde)
  std::size_t x_for_t = 0;   ///< M_n
  double kolmogorov_t = 0;   ///< (T_x - mu_x) / sigma_x
  double deficit = 0;
};

/// Throws NumericError when a standardization has zero variance.
std::vector<CltRow> clt_report(const Environment& env, const LimitParams& params,
                               const EnvDiagnostics& diag, std::span<const std::size_t> ns,
                               const ExactOptions& opts = {});

struct SllnReport {
  double mu = 0;
  bool within_hypothesis = false;  ///< mu > 1
  double band = 0;
  std::vector<std::size_t> times;
  std::vector<double> mean_ratio;   ///< average of X_n / n over paths
  std::vector<double> frac_within;  ///< share of paths with |X_n / n - 1/mu| < band
  std::size_t tail_start = 0;
  std::vector<double> path_max_tail_dev;  ///< per path, over checkpoints >= tail_start
  double frac_within_at_horizon = 0;
  double frac_within_tail = 0;
  double regression_slope = 0;  ///< least squares slope of mean X_n against n
  double implied_mu = 0;
};

/// Needs checkpoint positions in the sample. Checkpoints at n = 0 are skipped.
SllnReport slln_report(const McResult& sample, double mu, double band = 0.02,
                       double tail_fraction = 0.5);

}  // namespace iwalk
