#include "iwalk/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "iwalk/error.hpp"

namespace iwalk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// exp(-t) underflows to 0 in binary64 for t beyond this.
constexpr double kUnderflow = 746.0;

double density_unchecked(double mean, double variance, double z) {
  const double d = z - mean;
  const double t = d * d / (2.0 * variance);
  if (t > kUnderflow) return 0.0;
  return std::exp(-t) / std::sqrt(2.0 * std::numbers::pi * variance);
}

}  // namespace

double normal_density(double mean, double variance, double z) {
  if (!(variance > 0.0)) throw ValidationError("normal density needs positive variance");
  return density_unchecked(mean, variance, z);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

LimitParams LimitParams::make(double mu, double sigma2, double eta, Source source) {
  if (!(mu > 1.0) || !std::isfinite(mu)) throw ValidationError("mu must be finite and > 1");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw ValidationError("sigma^2 must be finite and > 0");
  }
  if (!(eta >= 0.0 && eta < 0.5)) throw ValidationError("eta must lie in [0, 1/2)");
  LimitParams p;
  p.mu = mu;
  p.sigma2 = sigma2;
  p.sigma_tilde2 = sigma2 / (mu * mu * mu);
  p.eta = eta;
  p.source = source;
  return p;
}

LimitFit fit_limit_params(const EnvDiagnostics& diag, double eta) {
  if (diag.sites < 100) {
    throw ValidationError("prefix too short: limit fits need at least 100 diagnosed sites, got " +
                          std::to_string(diag.sites));
  }
  if (!(eta >= 0.0 && eta < 0.5)) throw ValidationError("eta must lie in [0, 1/2)");
  LimitFit fit;
  const double X = double(diag.sites);
  fit.mu_hat = diag.mu[diag.sites] / X;
  fit.sigma2_hat = diag.sigma2[diag.sites] / X;

  if (!(diag.beta_star > 2.0)) {
    fit.reasons.push_back("beta_* = " + std::to_string(diag.beta_star) +
                          " <= 2: sojourn variances need not be finite");
  }
  double worst_growth = 0.0;
  bool infinite_tail = false;
  for (const auto& m : diag.moments) {
    worst_growth = std::max(worst_growth, m.second_growth);
    if (!std::isfinite(m.variance_tail)) infinite_tail = true;
  }
  if (infinite_tail) {
    fit.reasons.push_back("second-moment tail beyond the stored sojourn range is unbounded");
  }
  if (worst_growth > 0.05) {
    fit.reasons.push_back("second moment still growing across the stored tail (upper half carries " +
                          std::to_string(100.0 * worst_growth) + "%)");
  }
  fit.variance_converged = fit.reasons.empty() && fit.sigma2_hat > 0.0;
  if (fit.reasons.empty() && !(fit.sigma2_hat > 0.0)) {
    fit.reasons.push_back("fitted sigma^2 is zero (deterministic sojourns)");
  }
  if (!(fit.mu_hat > 1.0)) {
    fit.reasons.push_back("mu = " + std::to_string(fit.mu_hat) + " <= 1 is outside the hypotheses");
  }
  if (fit.variance_converged && fit.mu_hat > 1.0) {
    fit.params = LimitParams::make(fit.mu_hat, fit.sigma2_hat, eta, LimitParams::Source::fitted);
  }

  fit.scaled_theta1.assign(diag.sites + 1, kNaN);
  fit.scaled_theta2.assign(diag.sites + 1, kNaN);
  for (std::size_t x = 2; x <= diag.sites; ++x) {
    const double s = std::pow(double(x), eta) * std::sqrt(std::log(double(x)));
    fit.scaled_theta1[x] = s * diag.theta1[x];
    fit.scaled_theta2[x] = s * diag.theta2[x];
  }
  return fit;
}

std::vector<Interval> llt_predictor(const Environment& env, const LimitParams& params,
                                    const EnvDiagnostics& diag, std::size_t n) {
  std::vector<double> M(n + 1, 0.0);
  for (std::size_t l = 1; l <= n; ++l) M[l] = double(diag.generalized_inverse(l));
  const double s2 = params.sigma_tilde2;
  std::vector<Interval> out(n + 1);
  for (std::size_t x = 0; x <= n; ++x) {
    const TailSequence& site = env.site(x);
    const std::size_t last = site.last_index();
    const double d = site.deficit();
    double lo = 0.0, hi = 0.0;
    for (std::size_t l = 1; l <= n; ++l) {
      const double h = density_unchecked(M[l], double(l) * s2, double(x));
      if (h == 0.0) continue;
      const std::size_t k = n - l;
      if (k <= last) {
        const double w = site.values()[k];
        lo += h * w;
        hi += h * w;
      } else {
        hi += h * d;
      }
    }
    out[x] = {lo / params.mu, hi / params.mu};
  }
  return out;
}

std::optional<Decomposition> decompose(const LimitParams& params, const EnvDiagnostics& diag,
                                       std::size_t x, std::size_t n, double p_hit) {
  if (x == 0 || n == 0 || x > diag.sites || n >= diag.M.size()) return std::nullopt;
  const double mu_x = diag.mu[x], s2_x = diag.sigma2[x];
  if (!(s2_x > 0.0)) return std::nullopt;
  Decomposition d;
  d.x = x;
  d.n = n;
  d.p_hit = p_hit;
  const double nn = double(n);
  d.f = density_unchecked(mu_x, s2_x, nn);
  d.g = density_unchecked(mu_x, nn * params.sigma2 / params.mu, nn);
  d.h_over_mu =
      density_unchecked(double(diag.M[n]), nn * params.sigma_tilde2, double(x)) / params.mu;
  d.e1 = p_hit - d.f;
  d.e2 = d.f - d.g;
  d.e3 = d.g - d.h_over_mu;
  d.residual = (d.e1 + d.e2 + d.e3) - (p_hit - d.h_over_mu);
  return d;
}

std::vector<LltReport> llt_reports(const Environment& env, const LimitParams& params,
                                   const EnvDiagnostics& diag, std::span<const std::size_t> ns,
                                   const ExactOptions& opts) {
  // P(T_x = n) for every grid n, gathered during the same sweep.
  std::vector<std::vector<double>> p_hit(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) p_hit[i].assign(ns[i] + 1, 0.0);
  const auto laws = position_laws(env, ns, opts, [&](std::size_t x, const DiscreteDistribution& t) {
    for (std::size_t i = 0; i < ns.size(); ++i) {
      if (x <= ns[i]) p_hit[i][x] = t.prob(std::int64_t(ns[i]));
    }
  });
  std::vector<LltReport> out;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const std::size_t n = ns[i];
    const auto pred = llt_predictor(env, params, diag, n);
    LltReport r;
    r.n = n;
    r.exact_deficit = laws[i].deficit;
    const double root = std::sqrt(double(n));
    double err = 0.0, slack = 0.0;
    for (std::size_t x = 0; x <= n; ++x) {
      LltRow row;
      row.x = x;
      row.exact = laws[i].prob[x];
      row.exact_bound = laws[i].deficit_bound[x];
      row.predictor = pred[x];
      row.decomposition = decompose(params, diag, x, n, p_hit[i][x]);
      err = std::max(err, std::abs(row.exact - row.predictor.mid()));
      slack = std::max(slack, row.predictor.half_width() + row.exact_bound);
      r.predictor_mass += row.predictor.mid();
      r.rows.push_back(row);
    }
    r.sup_err_scaled = root * err;
    r.sup_slack_scaled = root * slack;
    out.push_back(std::move(r));
  }
  return out;
}

json llt_report_json(const LltReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json j = {{"x", row.x},
              {"exact", row.exact},
              {"pred_lo", row.predictor.lo},
              {"pred_hi", row.predictor.hi}};
    if (row.decomposition) {
      j["E1"] = row.decomposition->e1;
      j["E2"] = row.decomposition->e2;
      j["E3"] = row.decomposition->e3;
    } else {
      j["E1"] = j["E2"] = j["E3"] = nullptr;
    }
    rows.push_back(std::move(j));
  }
  return {{"n", report.n},
          {"sup_err_scaled", report.sup_err_scaled},
          {"sup_slack_scaled", report.sup_slack_scaled},
          {"predictor_mass", report.predictor_mass},
          {"exact_deficit", report.exact_deficit},
          {"rows", std::move(rows)}};
}

std::vector<Decomposition> llt_error_decomposition(const Environment& env,
                                                   const LimitParams& params,
                                                   const EnvDiagnostics& diag,
                                                   std::span<const std::size_t> xs,
                                                   const ExactOptions& opts,
                                                   std::size_t n_max) {
  std::vector<Decomposition> out;
  for (std::size_t x : xs) {
    const DiscreteDistribution t =
        n_max == SIZE_MAX ? hitting_time_distribution(env, x, opts)
                          : hitting_time_distribution(env, x, std::int64_t(n_max), opts);
    if (t.probs.empty()) continue;
    const std::int64_t hi =
        n_max >= std::size_t(t.max_support()) ? t.max_support() : std::int64_t(n_max);
    for (std::int64_t n = t.min_support(); n <= hi; ++n) {
      const auto d = decompose(params, diag, x, std::size_t(n), t.prob(n));
      if (!d) {
        throw NumericError("decomposition at x = " + std::to_string(x) + ", n = " +
                           std::to_string(n) + " needs a longer diagnosed prefix");
      }
      out.push_back(*d);
    }
  }
  return out;
}

double kolmogorov_to_normal(const DiscreteDistribution& law, double center, double scale) {
  if (!(scale > 0.0)) throw NumericError("standardization undefined: zero variance");
  double cdf = 0.0, dist = 0.0;
  for (std::size_t i = 0; i < law.probs.size(); ++i) {
    const double z = (double(law.offset + std::int64_t(i)) - center) / scale;
    const double phi = normal_cdf(z);
    dist = std::max(dist, std::abs(cdf - phi));
    cdf += law.probs[i];
    dist = std::max(dist, std::abs(cdf - phi));
  }
  return std::min(1.0, std::max(dist, std::abs(1.0 - cdf)));
}

std::vector<CltRow> clt_report(const Environment& env, const LimitParams& params,
                               const EnvDiagnostics& diag, std::span<const std::size_t> ns,
                               const ExactOptions& opts) {
  const auto laws = position_laws(env, ns, opts);
  std::vector<CltRow> out;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    CltRow row;
    row.n = ns[i];
    const double n = double(ns[i]);
    const double scale = std::sqrt(n * params.sigma_tilde2);
    row.kolmogorov_x = kolmogorov_to_normal(laws[i].distribution(), n / params.mu, scale);
    row.x_for_t = diag.generalized_inverse(ns[i]);
    const double s2 = diag.sigma2.at(row.x_for_t);
    if (!(s2 > 0.0)) throw NumericError("standardization undefined: sigma_x^2 = 0");
    // Only the bulk of T_x matters; widen the window until the mass past
    // it is negligible instead of convolving the whole heavy tail.
    const double mu_x = diag.mu[row.x_for_t], sd = std::sqrt(s2);
    DiscreteDistribution t;
    for (double span = 50.0;; span *= 4.0) {
      t = hitting_time_distribution(env, row.x_for_t, std::int64_t(std::ceil(mu_x + span * sd)), opts);
      row.kolmogorov_t = kolmogorov_to_normal(t, mu_x, sd);
      const double beyond = 1.0 - (t.stored_mass() + t.deficit);
      if (beyond <= 1e-3 * row.kolmogorov_t || beyond <= 1e-12 || span > 1e5) break;
    }
    row.deficit = std::max(laws[i].deficit, t.deficit);
    out.push_back(row);
  }
  return out;
}

SllnReport slln_report(const McResult& sample, double mu, double band, double tail_fraction) {
  if (sample.checkpoints.empty() || sample.checkpoint_x.empty()) {
    throw ValidationError("SLLN report needs checkpoint positions");
  }
  if (!(mu > 0.0)) throw ValidationError("mu must be positive");
  SllnReport r;
  r.mu = mu;
  r.within_hypothesis = mu > 1.0;
  r.band = band;
  const double target = 1.0 / mu;
  const std::size_t horizon = sample.checkpoints.back();
  r.tail_start = std::size_t(std::ceil(tail_fraction * double(horizon)));
  const std::size_t paths = sample.checkpoint_x.size();
  r.path_max_tail_dev.assign(paths, 0.0);
  std::size_t tail_ok = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t c = 0; c < sample.checkpoints.size(); ++c) {
    const std::size_t n = sample.checkpoints[c];
    if (n == 0) continue;
    double sum = 0.0, within = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
      const double ratio = double(sample.checkpoint_x[p][c]) / double(n);
      sum += ratio;
      const double dev = std::abs(ratio - target);
      if (dev < band) within += 1.0;
      if (n >= r.tail_start) r.path_max_tail_dev[p] = std::max(r.path_max_tail_dev[p], dev);
    }
    r.times.push_back(n);
    r.mean_ratio.push_back(sum / double(paths));
    r.frac_within.push_back(within / double(paths));
    const double mean_x = sum / double(paths) * double(n);
    sx += double(n);
    sy += mean_x;
    sxx += double(n) * double(n);
    sxy += double(n) * mean_x;
    cnt += 1.0;
  }
  if (r.times.empty()) throw ValidationError("SLLN report needs a checkpoint with n > 0");
  for (double dev : r.path_max_tail_dev) {
    if (dev < band) ++tail_ok;
  }
  r.frac_within_at_horizon = r.frac_within.back();
  r.frac_within_tail = double(tail_ok) / double(paths);
  const double denom = cnt * sxx - sx * sx;
  r.regression_slope = denom > 0.0 ? (cnt * sxy - sx * sy) / denom : sy / sx;
  r.implied_mu = 1.0 / r.regression_slope;
  return r;
}

}  // namespace iwalk
