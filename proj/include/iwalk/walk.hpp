#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "iwalk/distribution.hpp"
#include "iwalk/environment.hpp"

namespace iwalk {

/// State Z_n = (X_n, Y_n) of the walk: site and remaining sojourn steps.
struct ChainState {
  std::size_t x = 0;
  std::size_t y = 0;
};

/// P(tau = n) = omega_{n-1} - omega_n on n = 1..N+1; the atom at N+1 is
/// omega_N - deficit and the deficit carries the rest.
DiscreteDistribution sojourn_pmf(const TailSequence& site);

struct ExactOptions {
  double trunc_tol = 1e-15;       ///< per-convolution upper-tail trimming
  double deficit_budget = 1e-6;   ///< NumericError beyond this
};

/// Law of T_x restricted to [0, horizon], built incrementally by
/// T_{x+1} = T_x * tau_x. Mass that lands beyond the horizon is dropped
/// exactly; deficit() bounds the mass whose location is unknown (trimmed or
/// carried by truncated sojourn tails).
class HittingTimeSweep {
 public:
  HittingTimeSweep(const Environment& env, std::int64_t horizon, double trunc_tol);

  std::size_t x() const noexcept { return x_; }
  std::int64_t horizon() const noexcept { return horizon_; }

  /// Stored atoms of the capped law. Empty once every atom lies beyond the
  /// horizon.
  const DiscreteDistribution& law() const noexcept { return law_; }
  double prob(std::int64_t k) const { return law_.prob(k); }
  bool exhausted() const noexcept { return law_.probs.empty(); }

  /// Moves to x + 1. Needs site x to be materialized.
  void advance();

 private:
  const Environment* env_;
  std::int64_t horizon_;
  double trunc_tol_;
  std::size_t x_ = 0;
  DiscreteDistribution law_;
  const TailSequence* cached_site_ = nullptr;
  std::vector<double> cached_pmf_;
};

/// Law of T_x. Throws NumericError when the accumulated deficit exceeds the
/// budget.
DiscreteDistribution hitting_time_distribution(const Environment& env, std::size_t x,
                                               const ExactOptions& opts = {});

/// Law of T_x restricted to [0, horizon]; mass past the horizon is simply
/// absent, so stored mass + deficit may fall short of 1.
DiscreteDistribution hitting_time_distribution(const Environment& env, std::size_t x,
                                               std::int64_t horizon, const ExactOptions& opts = {});

/// Law of X_n with a per-site error bar.
struct PositionLaw {
  std::size_t n = 0;
  std::vector<double> prob;           ///< x = 0..n
  std::vector<double> deficit_bound;  ///< bound on |true - prob| per x
  double deficit = 0;                 ///< 1 - sum(prob), clamped at 0

  DiscreteDistribution distribution() const;
};

/// Laws of X_n for several n from a single sweep over sites, using
/// P(X_n = x) = sum_{k=0}^n P(T_x = k) omega^x_{n-k}. If the environment runs
/// out of sites, P(T_size <= n) is added to the deficit. `visit` sees the
/// capped law of every T_x used.
using HittingVisitor = std::function<void(std::size_t x, const DiscreteDistribution& capped)>;
std::vector<PositionLaw> position_laws(const Environment& env, std::span<const std::size_t> ns,
                                       const ExactOptions& opts = {},
                                       const HittingVisitor& visit = {});

DiscreteDistribution position_distribution(const Environment& env, std::size_t n,
                                           const ExactOptions& opts = {});

/// P(Z_n = (x, y)) indexed [x][y].
std::vector<std::vector<double>> level_distribution(const Environment& env, std::size_t n,
                                                    const ExactOptions& opts = {});

struct SojournDraw {
  std::size_t n = 1;
  bool truncated = false;
};

/// Inverse CDF on half-open intervals: the n with
/// 1 - omega_{n-1} <= uniform < 1 - omega_n. Draws past the stored tail give
/// N + 1, flagged when they fall in the deficit region.
SojournDraw sample_sojourn(const TailSequence& site, double uniform);

enum class RecordMode { endpoint, full_path, hitting_times };

/// chain: step the kernel one time unit at a time.
/// renewal: add i.i.d. sojourns tau_0, tau_1, ... until the horizon.
enum class WalkEngine { chain, renewal };

struct McConfig {
  std::size_t paths = 1;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  RecordMode record = RecordMode::endpoint;
  WalkEngine engine = WalkEngine::chain;
  /// hitting_times mode records T_0..T_{hit_sites}.
  std::size_t hit_sites = 0;
  /// Times (<= horizon) at which every path's X_n is stored.
  std::vector<std::size_t> checkpoints;
};

struct PathRecord {
  std::size_t path, n, x, y;
};

struct McResult {
  std::size_t paths = 0;
  std::size_t horizon = 0;
  std::vector<std::uint64_t> endpoint_counts;  ///< X_horizon histogram
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> level_counts;  ///< Z_horizon
  std::vector<PathRecord> records;             ///< full_path mode
  std::vector<double> hit_mean, hit_var;       ///< per x, hitting_times mode
  std::vector<std::size_t> checkpoints;
  std::vector<std::vector<std::uint32_t>> checkpoint_x;  ///< [path][checkpoint]
  std::uint64_t truncated_draws = 0;
};

/// Throws ValidationError when paths == 0 or the environment has fewer than
/// horizon + 1 sites (hit_sites in hitting-times mode).
McResult simulate_paths(const Environment& env, const McConfig& cfg);

/// Total variation distance between an empirical histogram and a law on
/// x = 0, 1, ...
double total_variation(std::span<const std::uint64_t> counts, std::span<const double> prob);

}  // namespace iwalk
