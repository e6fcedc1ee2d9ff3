#include "iwalk/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwalk/error.hpp"

namespace iwalk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pow_n(double n, double e) { return std::exp(e * std::log(n)); }

}  // namespace

SiteMoments site_moments(const TailSequence& site, std::optional<double> beta,
                         double a_bound) {
  const auto w = site.values();
  const std::size_t N = site.last_index();
  const double d = site.deficit();

  // Summed smallest-first; the deficit acts as omega_{N+1}.
  SiteMoments out;
  double mean = d;
  double second = (2.0 * double(N) + 3.0) * d;
  double second_upper_half = second;
  const std::size_t half = N / 2;
  for (std::size_t n = N + 1; n-- > 0;) {
    mean += w[n];
    second += (2.0 * double(n) + 1.0) * w[n];
    if (n == half + 1) second_upper_half = second;
  }
  out.mean = mean;
  out.second = second;
  out.second_closed_form = second + 2.0 * mean;
  out.variance = second - mean * mean;
  out.second_growth = N >= 4 ? second_upper_half / second : 0.0;

  if (d == 0.0) {
    out.mean_tail = out.second_tail = out.variance_tail = 0.0;
  } else if (!beta) {
    out.mean_tail = out.second_tail = out.variance_tail = kInf;
  } else {
    const double b = *beta;
    const double base = double(N) + 1.0;
    out.mean_tail = a_bound * pow_n(base, 1.0 - b) / (b - 1.0);
    out.second_tail = b > 2.0 ? a_bound * (2.0 * pow_n(base, 2.0 - b) / (b - 2.0) +
                                           pow_n(base, 1.0 - b) / (b - 1.0))
                              : kInf;
    out.variance_tail = std::max(out.second_tail,
                                 2.0 * mean * out.mean_tail + out.mean_tail * out.mean_tail);
  }
  return out;
}

SiteSups site_sups(const TailSequence& site, double beta) {
  const std::size_t N = site.last_index();
  const double d = site.deficit();
  auto omega = [&](std::size_t n) { return n <= N ? site.values()[n] : (n == N + 1 ? d : 0.0); };

  double sup_a = 0.0;
  double sup_ap = 0.0;
  for (std::size_t n = 1; n <= N + 1; ++n) {
    const double nn = double(n);
    sup_a = std::max(sup_a, pow_n(nn, beta) * omega(n));
    sup_ap = std::max(sup_ap, pow_n(nn, beta + 1.0) * (omega(n - 1) - omega(n)));
  }
  SiteSups out;
  out.a = std::max(sup_a, 1.0);
  out.a_prime = std::max(sup_ap, 1.0);
  if (d > 0.0) {
    const double next = double(N) + 2.0;
    out.truncation_flag = pow_n(next, beta) * d > sup_a || pow_n(next, beta + 1.0) * d > sup_ap;
  }

  const double gap1 = omega(1) - omega(2);
  if (gap1 <= 0.0) {
    out.k = kInf;
  } else {
    double sup_ratio = 0.0;
    for (std::size_t n = 2; n <= N + 1; ++n) {
      sup_ratio = std::max(sup_ratio, (omega(n) - omega(n + 1)) / gap1);
    }
    out.k = sup_ratio + gap1 / (1.0 - omega(1));
  }
  return out;
}

std::size_t EnvDiagnostics::generalized_inverse(std::size_t n) const {
  if (n >= M.size()) {
    throw NumericError("M_" + std::to_string(n) + " needs more sites than the " +
                       std::to_string(sites) + " diagnosed (mu_X = " +
                       std::to_string(mu.back()) + ")");
  }
  return M[n];
}

std::vector<double> beta_for(const Environment& env, std::size_t sites,
                             std::optional<double> fallback) {
  std::vector<double> out(sites);
  for (std::size_t x = 0; x < sites; ++x) {
    std::optional<double> b = x < env.site_params().size() ? env.natural_beta(x) : std::nullopt;
    if (!b) b = fallback;
    if (!b) {
      throw ValidationError("no beta(x) available for site " + std::to_string(x) +
                            "; supply one explicitly");
    }
    out[x] = *b;
  }
  return out;
}

EnvDiagnostics diagnostics(const Environment& env, std::span<const double> beta,
                           std::size_t sites, std::optional<double> mu_ref,
                           std::optional<double> sigma2_ref) {
  if (sites == 0) throw ValidationError("diagnostics: empty site range");
  if (sites > env.size()) {
    throw ValidationError("diagnostics: range exceeds the " + std::to_string(env.size()) +
                          " materialized sites");
  }
  if (beta.size() != 1 && beta.size() < sites) {
    throw ValidationError("diagnostics: need one beta or one per site");
  }

  EnvDiagnostics d;
  d.sites = sites;
  d.beta.resize(sites);
  d.a.resize(sites);
  d.a_prime.resize(sites);
  d.k.resize(sites);
  d.truncation_flag.resize(sites);
  d.moments.resize(sites);
  d.mu.assign(sites + 1, 0.0);
  d.sigma2.assign(sites + 1, 0.0);
  d.beta_star = kInf;

  for (std::size_t x = 0; x < sites; ++x) {
    const double b = beta.size() == 1 ? beta[0] : beta[x];
    if (!(b > 1.0) || !std::isfinite(b)) {
      throw ValidationError("diagnostics: beta(" + std::to_string(x) + ") must exceed 1");
    }
    const TailSequence& s = env.site(x);
    // Sites sharing storage and beta share results.
    if (x > 0 && d.beta[x - 1] == b && s.same_values(env.site(x - 1))) {
      d.beta[x] = b;
      d.a[x] = d.a[x - 1];
      d.a_prime[x] = d.a_prime[x - 1];
      d.k[x] = d.k[x - 1];
      d.truncation_flag[x] = d.truncation_flag[x - 1];
      d.moments[x] = d.moments[x - 1];
    } else {
      const SiteSups sups = site_sups(s, b);
      d.beta[x] = b;
      d.a[x] = sups.a;
      d.a_prime[x] = sups.a_prime;
      d.k[x] = sups.k;
      d.truncation_flag[x] = sups.truncation_flag;
      d.moments[x] = site_moments(s, b, sups.a);
    }
    d.beta_star = std::min(d.beta_star, b);
    d.mu[x + 1] = d.mu[x] + d.moments[x].mean;
    d.sigma2[x + 1] = d.sigma2[x] + d.moments[x].variance;
  }

  const double mu_top = d.mu[sites];
  const auto n_max = static_cast<std::size_t>(std::floor(mu_top));
  d.M.resize(n_max + 1);
  std::size_t x = 0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    // relative slack absorbs rounding in the cumulative sums
    while (d.mu[x] < double(n) * (1.0 - 1e-12)) ++x;
    d.M[n] = x;
  }

  d.mu_ref = mu_ref.value_or(mu_top / double(sites));
  d.sigma2_ref = sigma2_ref.value_or(d.sigma2[sites] / double(sites));
  d.theta1.assign(sites + 1, kNaN);
  d.theta2.assign(sites + 1, kNaN);
  for (std::size_t y = 1; y <= sites; ++y) {
    d.theta1[y] = d.mu[y] / double(y) - d.mu_ref;
    d.theta2[y] = d.sigma2[y] / double(y) - d.sigma2_ref;
  }
  return d;
}

double window_fluctuation(const EnvDiagnostics& diag, double mu, std::size_t x, double u) {
  if (x < 2) throw ValidationError("window_fluctuation: x must be at least 2");
  if (!(u > 0.0)) throw ValidationError("window_fluctuation: u must be positive");
  if (x >= diag.sites) throw ValidationError("window_fluctuation: x outside diagnosed range");
  const double b = std::sqrt(double(x) * std::log(double(x)));
  const auto reach = static_cast<std::size_t>(std::floor(u * b));
  if (x + reach > diag.sites) {
    throw ValidationError("window_fluctuation: window [" + std::to_string(x) + ", " +
                          std::to_string(x + reach - 1) + "] exceeds the " +
                          std::to_string(diag.sites) + " diagnosed sites");
  }
  // prefix[k] = sum_{w < k} (m_w - mu)
  const std::size_t lo_site = x + 1 > reach + 1 ? x - reach - 1 : 0;
  const std::size_t hi_site = x + reach;
  std::vector<double> prefix(hi_site - lo_site + 1, 0.0);
  for (std::size_t w = lo_site; w < hi_site; ++w) {
    prefix[w - lo_site + 1] = prefix[w - lo_site] + (diag.m(w) - mu);
  }
  auto window = [&](std::size_t first, std::size_t last) {  // inclusive
    return prefix[last + 1 - lo_site] - prefix[first - lo_site];
  };
  double best = 0.0;
  for (std::size_t l = 1; l <= reach; ++l) {
    best = std::max(best, std::abs(window(x, x + l - 1)));
    const std::size_t first = x + 1 >= l + 1 ? x + 1 - (l + 1) : 0;  // x - l - 1, clipped
    best = std::max(best, std::abs(window(first, x)));
  }
  return best;
}

}  // namespace iwalk
