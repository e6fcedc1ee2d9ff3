#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "iwalk/lsv.hpp"
#include "iwalk/tail_sequence.hpp"
#include "json.hpp"

namespace iwalk {

using json = nlohmann::json;

/// omega_n = ratio^n.
struct GeometricSite {
  double ratio;
};

/// omega_n = (n + 1)^(-beta).
struct PowerLawSite {
  double beta;
};

/// omega = (1), i.e. a sojourn of exactly one step.
struct DegenerateSite {};

/// Parameters of one site; LsvParams sites use omega_n = c_n.
using SiteParams = std::variant<GeometricSite, PowerLawSite, LsvParams, DegenerateSite>;

/// beta(x) implied by the site family: beta for power-law sites, 1/alpha for
/// LSV sites. Geometric and degenerate sites have none (any beta works).
std::optional<double> natural_beta(const SiteParams& params);

json site_params_to_json(const SiteParams& params);
SiteParams site_params_from_json(const json& j);

/// Builds the truncated tail for one site. Throws ValidationError for bad
/// parameters and NumericError for root-finder failure.
TailSequence make_site(const SiteParams& params, const Truncation& trunc);

/// Memoizes make_site by parameter value, so environments with few distinct
/// site parameters share tail storage.
class SiteFactory {
 public:
  explicit SiteFactory(Truncation trunc);
  const TailSequence& get(const SiteParams& params);
  const Truncation& truncation() const noexcept { return trunc_; }

 private:
  Truncation trunc_;
  std::map<std::tuple<std::size_t, double, double, double>, TailSequence> cache_;
};

/// Site-indexed family of tail sequences plus a JSON model descriptor saying
/// how the sites were produced. Immutable once constructed.
class Environment {
 public:
  using Extender = std::function<Environment(std::size_t sites)>;

  Environment(std::vector<TailSequence> sites, json descriptor,
              std::vector<SiteParams> site_params = {}, Extender extender = {});

  std::size_t size() const noexcept { return sites_.size(); }

  /// Throws ValidationError when x is not materialized.
  const TailSequence& site(std::size_t x) const;
  std::span<const TailSequence> sites() const noexcept { return sites_; }

  const json& descriptor() const noexcept { return descriptor_; }

  /// Per-site parameters when known (empty for tabulated environments).
  std::span<const SiteParams> site_params() const noexcept { return site_params_; }

  /// beta(x) from the site family, if the family defines one.
  std::optional<double> natural_beta(std::size_t x) const;

  /// Same environment materialized on `sites` sites; the first size() sites
  /// are unchanged. Throws ValidationError for tabulated environments.
  Environment extended(std::size_t sites) const;

 private:
  std::vector<TailSequence> sites_;
  json descriptor_;
  std::vector<SiteParams> site_params_;
  Extender extender_;
};

Environment env_geometric(double ratio, const Truncation& trunc);

/// One beta shared by all sites, or one per site (betas.size() == trunc.sites).
Environment env_from_powerlaw(std::span<const double> betas, const Truncation& trunc);
Environment env_from_powerlaw(double beta, const Truncation& trunc);

/// One parameter set shared by all sites, or one per site.
Environment env_from_lsv(std::span<const LsvParams> params, const Truncation& trunc);
Environment env_from_lsv(const LsvParams& params, const Truncation& trunc);

/// Every sojourn lasts exactly one step (X_n = n).
Environment env_degenerate(std::size_t sites);

/// Arbitrary per-site parameters with a caller-supplied descriptor.
Environment env_from_site_params(std::vector<SiteParams> params, const Truncation& trunc,
                                 json descriptor);

/// Environment file: {"model": {...}, "sites": [{"omega": [...], "deficit": d}, ...]}.
/// Probabilities are written with 17 significant digits.
std::string environment_to_json(const Environment& env);
Environment environment_from_json(std::string_view text);

void write_text_file(const std::string& path, std::string_view text, bool overwrite);
std::string read_text_file(const std::string& path);

}  // namespace iwalk
