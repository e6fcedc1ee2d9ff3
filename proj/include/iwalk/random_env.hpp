#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iwalk/environment.hpp"

namespace iwalk {

/// Law of one site-parameter coordinate.
struct Marginal {
  enum class Kind { uniform, discrete };
  Kind kind = Kind::uniform;
  double lo = 0, hi = 0;                   ///< uniform on [lo, hi]
  std::vector<double> values, weights;     ///< discrete

  static Marginal uniform(double lo, double hi);
  static Marginal discrete(std::vector<double> values, std::vector<double> weights = {});

  /// Inverse CDF at u in [0, 1).
  double quantile(double u) const;
  double min() const;
  double max() const;
};

enum class SiteFamily { geometric, powerlaw, lsv };

/// Stationary site-parameter process x -> gamma(Theta^x omega).
///
/// * iid: every coordinate is an independent draw from its marginal.
/// * moving_window: coordinate j at site x is the marginal quantile of
///   Phi(sum_{i=0..window} G_j(x+i) / sqrt(window+1)) for i.i.d. standard
///   normals G, so sites further than `window` apart are independent.
/// * markov: a stationary finite-state chain over `states`; must be
///   irreducible and aperiodic so mixing is geometric.
struct RandomEnvModel {
  enum class Kind { iid, moving_window, markov };
  Kind kind = Kind::iid;
  SiteFamily family = SiteFamily::powerlaw;
  /// geometric: {ratio}; powerlaw: {beta}; lsv: {alpha, c}.
  std::vector<Marginal> marginals;
  std::size_t window = 0;
  std::vector<std::vector<double>> transition;
  std::vector<SiteParams> states;

  /// Throws ValidationError when the model is inconsistent or its parameter
  /// support leaves the admissible range (lsv: alpha in (0, 1/2), c in (0, 1)).
  void validate() const;

  json to_json() const;
  static RandomEnvModel from_json(const json& j);

  /// Lag beyond which the alpha-mixing coefficient vanishes (iid: 0,
  /// moving window: window); empty for Markov models.
  std::optional<std::size_t> mixing_range() const;
  /// Per-step geometric decay bound for Markov models.
  std::optional<double> geometric_mixing_rate() const;
  std::string mixing_description() const;

  /// Smallest beta(x) over the parameter support, if the family defines beta.
  std::optional<double> declared_beta_star() const;
};

/// Per-(site, coordinate) noise. The default draws from counter-addressed
/// streams keyed by (seed, site), so values do not depend on the order in
/// which sites are materialized.
class NoiseSource {
 public:
  virtual ~NoiseSource() = default;
  virtual double uniform(std::size_t site, std::size_t coord) const = 0;
  virtual double gaussian(std::size_t site, std::size_t coord) const = 0;
};

class StreamNoise final : public NoiseSource {
 public:
  explicit StreamNoise(std::uint64_t seed) : seed_(seed) {}
  double uniform(std::size_t site, std::size_t coord) const override;
  double gaussian(std::size_t site, std::size_t coord) const override;

 private:
  std::uint64_t seed_;
};

std::vector<SiteParams> sample_parameters(const RandomEnvModel& model, std::size_t sites,
                                          const NoiseSource& noise);

struct QuenchedSample {
  Environment environment;
  std::vector<SiteParams> parameter_trace;
  RandomEnvModel model;
  std::uint64_t seed;
};

QuenchedSample sample_environment(const RandomEnvModel& model, std::uint64_t seed,
                                  const Truncation& trunc);

struct MomentReport {
  double q = 0;
  std::size_t sites = 0;
  double beta_star_sample = 0;
  std::optional<double> beta_star_declared;
  double mean_a_q = 0;        ///< empirical E[A^q]
  double mean_a_prime_q = 0;  ///< empirical E[A'^q]
  double mean_a_sq = 0;       ///< empirical E[A^2]
  bool b_is_a_prime = false;  ///< B = A' when beta_* in (2, 3], else A
  double mean_b_q = 0;
  double mean_k = 0;          ///< empirical E[K]
  bool moments_finite = false;  ///< bounded parameter support
  std::string mixing;
  double v_required = 0;      ///< 2q / (q - 8); NaN for q <= 8
  bool q_ok = false;          ///< q > 8
  bool mixing_ok = false;     ///< declared rate beats every polynomial order
  bool slln_conditions = false;
  bool clt_conditions = false;
  bool llt_conditions = false;
};

/// beta_fallback is used for sites whose family has no natural beta.
MomentReport moment_report(const QuenchedSample& sample, double q,
                           std::optional<double> beta_fallback = std::nullopt);

}  // namespace iwalk
