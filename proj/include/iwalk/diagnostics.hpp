#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "iwalk/environment.hpp"

namespace iwalk {

/// Moments of one site's sojourn time tau, P(tau = n) = omega_{n-1} - omega_n.
///
/// Stored values are summed with the deficit taken as omega_{N+1} and
/// omega_n = 0 beyond; the *_tail fields bound what the omitted tail can add
/// (infinite when no beta is available or the moment may diverge).
struct SiteMoments {
  double mean = 0;            ///< m = sum_n omega_n
  double mean_tail = 0;
  double second = 0;          ///< E tau^2 = sum_n (2n + 1) omega_n
  double second_tail = 0;
  double second_closed_form = 0;  ///< sum_n (2n + 3) omega_n, kept for comparison
  double variance = 0;        ///< s^2 = Var(tau)
  double variance_tail = 0;
  /// Relative growth of the truncated second moment between index N/2 and N.
  /// Large values indicate E tau^2 does not settle within the stored tail.
  double second_growth = 0;
};

/// Tail bounds use omega_n <= a_bound * n^-beta for n > N.
SiteMoments site_moments(const TailSequence& site, std::optional<double> beta = std::nullopt,
                         double a_bound = 1.0);

/// Per-site sup statistics for exponent beta.
struct SiteSups {
  double a = 1;        ///< (sup_n n^beta omega_n) v 1
  double a_prime = 1;  ///< (sup_n n^(beta+1) (omega_{n-1} - omega_n)) v 1
  double k = 0;        ///< aperiodicity ratio; +inf when omega_1 = omega_2
  /// Set when the first omitted index could exceed the stored sup.
  bool truncation_flag = false;
};

SiteSups site_sups(const TailSequence& site, double beta);

struct EnvDiagnostics {
  std::size_t sites = 0;                 ///< diagnosed prefix 0..sites-1
  std::vector<double> beta;
  double beta_star = 0;
  std::vector<double> a, a_prime, k;
  std::vector<std::uint8_t> truncation_flag;
  std::vector<SiteMoments> moments;
  std::vector<double> mu;      ///< mu_0..mu_sites, mu_0 = 0
  std::vector<double> sigma2;  ///< sigma_0^2..sigma_sites^2
  std::vector<std::size_t> M;  ///< M_0..M_floor(mu_sites)
  double mu_ref = 0;           ///< reference for theta1 (caller or mu_X / X)
  double sigma2_ref = 0;       ///< reference for theta2
  std::vector<double> theta1;  ///< index x = 1..sites; [0] is NaN
  std::vector<double> theta2;

  double m(std::size_t x) const { return moments.at(x).mean; }
  double s2(std::size_t x) const { return moments.at(x).variance; }
  /// Throws NumericError when n exceeds the computed range.
  std::size_t generalized_inverse(std::size_t n) const;
};

/// beta holds one value for all sites or one per site, each > 1. Throws
/// ValidationError for beta <= 1 or an empty/oversized range.
EnvDiagnostics diagnostics(const Environment& env, std::span<const double> beta,
                           std::size_t sites, std::optional<double> mu_ref = std::nullopt,
                           std::optional<double> sigma2_ref = std::nullopt);

/// beta(x) from the environment's site families, `fallback` where the family
/// has none. Throws ValidationError if neither is available.
std::vector<double> beta_for(const Environment& env, std::size_t sites,
                             std::optional<double> fallback);

/// L(x; u): max over |l| <= u b(x), b(x) = sqrt(x log x), of
/// |sum_{w in [x]_l} (m_w - mu)| with [x]_l = [x, x+l-1] for l >= 0 and
/// [x+l-1, x] for l < 0, clipped at 0. Requires x >= 2, u > 0, and the
/// window inside the diagnosed prefix.
double window_fluctuation(const EnvDiagnostics& diag, double mu, std::size_t x, double u);

}  // namespace iwalk
