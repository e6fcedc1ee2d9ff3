#include "iwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "iwalk/error.hpp"
#include "iwalk/rng.hpp"
#include "parallel.hpp"

namespace iwalk {

DiscreteDistribution sojourn_pmf(const TailSequence& site) {
  const auto w = site.values();
  DiscreteDistribution d;
  d.offset = 1;
  d.probs.resize(w.size());
  for (std::size_t n = 1; n < w.size(); ++n) d.probs[n - 1] = w[n - 1] - w[n];
  d.probs.back() = w.back() - site.deficit();
  d.deficit = site.deficit();
  d.canonicalize();
  return d;
}

HittingTimeSweep::HittingTimeSweep(const Environment& env, std::int64_t horizon,
                                   double trunc_tol)
    : env_(&env), horizon_(horizon), trunc_tol_(trunc_tol) {
  if (horizon < 0) throw ValidationError("horizon must be non-negative");
}

void HittingTimeSweep::advance() {
  const TailSequence& site = env_->site(x_);
  ++x_;
  if (law_.probs.empty()) return;
  if (!cached_site_ || !cached_site_->same_values(site)) {
    const auto w = site.values();
    cached_pmf_.resize(w.size());
    for (std::size_t n = 1; n < w.size(); ++n) cached_pmf_[n - 1] = w[n - 1] - w[n];
    cached_pmf_.back() = w.back() - site.deficit();
    cached_site_ = &site;
  }
  const std::int64_t lo = law_.offset + 1;
  if (lo > horizon_) {
    law_.probs.clear();
    return;
  }
  const std::int64_t na = std::int64_t(law_.probs.size());
  const std::int64_t nb = std::int64_t(cached_pmf_.size());
  const std::int64_t hi = std::min(law_.offset + na - 1 + nb, horizon_);
  std::vector<double> out(std::size_t(hi - lo + 1), 0.0);
  const std::int64_t len = std::int64_t(out.size());
  double mass = 0.0;
  for (std::int64_t i = 0; i < na; ++i) {
    const double a = law_.probs[std::size_t(i)];
    mass += a;
    if (a == 0.0) continue;
    const std::int64_t jmax = std::min(nb, len - i);
    double* o = out.data() + i;
    const double* b = cached_pmf_.data();
    for (std::int64_t j = 0; j < jmax; ++j) o[j] += a * b[j];
  }
  // Sojourns past the stored tail start at N + 2; only those that can land
  // inside the horizon leave mass of unknown location.
  double unknown = law_.deficit;
  if (site.deficit() > 0.0 && law_.offset + nb + 1 <= horizon_) unknown += mass * site.deficit();
  law_.offset = lo;
  law_.probs = std::move(out);
  law_.deficit = unknown;
  law_.canonicalize();
  if (!law_.probs.empty()) trim_upper_tail(law_, trunc_tol_);
}

DiscreteDistribution hitting_time_distribution(const Environment& env, std::size_t x,
                                               const ExactOptions& opts) {
  return hitting_time_distribution(env, x, std::numeric_limits<std::int64_t>::max() / 4, opts);
}

DiscreteDistribution hitting_time_distribution(const Environment& env, std::size_t x,
                                               std::int64_t horizon, const ExactOptions& opts) {
  HittingTimeSweep sweep(env, horizon, opts.trunc_tol);
  while (sweep.x() < x) sweep.advance();
  DiscreteDistribution law = sweep.law();
  if (law.deficit > opts.deficit_budget) {
    throw NumericError("hitting-time deficit " + std::to_string(law.deficit) +
                       " exceeds budget " + std::to_string(opts.deficit_budget) +
                       "; raise N_cap or lower tail_tol");
  }
  return law;
}

DiscreteDistribution PositionLaw::distribution() const {
  DiscreteDistribution d;
  d.offset = 0;
  d.probs = prob;
  d.deficit = deficit;
  d.canonicalize();
  return d;
}

std::vector<PositionLaw> position_laws(const Environment& env, std::span<const std::size_t> ns,
                                       const ExactOptions& opts, const HittingVisitor& visit) {
  std::vector<PositionLaw> laws(ns.size());
  std::size_t horizon = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    laws[i].n = ns[i];
    laws[i].prob.assign(ns[i] + 1, 0.0);
    laws[i].deficit_bound.assign(ns[i] + 1, 0.0);
    horizon = std::max(horizon, ns[i]);
  }
  std::vector<double> missing(ns.size(), 0.0);
  HittingTimeSweep sweep(env, std::int64_t(horizon), opts.trunc_tol);
  for (std::size_t x = 0; x <= horizon && !sweep.exhausted(); ++x) {
    const DiscreteDistribution& t = sweep.law();
    if (x >= env.size()) {
      // Walk has reached unmaterialized sites: P(X_n >= x) = P(T_x <= n).
      for (std::size_t i = 0; i < ns.size(); ++i) {
        double m = t.deficit;
        for (std::int64_t k = t.offset; k <= std::min<std::int64_t>(t.max_support(), ns[i]); ++k) {
          m += t.prob(k);
        }
        missing[i] = m;
      }
      break;
    }
    if (visit) visit(x, t);
    const TailSequence& site = env.site(x);
    const std::int64_t last = std::int64_t(site.last_index());
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const std::int64_t n = std::int64_t(ns[i]);
      if (std::int64_t(x) > n) continue;
      double p = 0.0, bound = t.deficit;
      const std::int64_t kmax = std::min(t.max_support(), n);
      for (std::int64_t k = t.offset; k <= kmax; ++k) {
        const double pk = t.probs[std::size_t(k - t.offset)];
        const std::int64_t w = n - k;
        if (w <= last) {
          p += pk * site.omega(std::size_t(w));
        } else {
          bound += pk * site.deficit();
        }
      }
      laws[i].prob[x] = p;
      laws[i].deficit_bound[x] = bound;
    }
    if (x < horizon) sweep.advance();
  }
  for (std::size_t i = 0; i < ns.size(); ++i) {
    double s = 0.0;
    for (std::size_t x = laws[i].prob.size(); x-- > 0;) s += laws[i].prob[x];
    laws[i].deficit = std::max(0.0, 1.0 - s);
    const double unknown = std::max(laws[i].deficit, missing[i]);
    if (unknown > opts.deficit_budget) {
      throw NumericError("position-law deficit " + std::to_string(unknown) + " at n = " +
                         std::to_string(ns[i]) + " exceeds budget " +
                         std::to_string(opts.deficit_budget) +
                         "; raise N_cap, lower tail_tol, or materialize more sites");
    }
  }
  return laws;
}

DiscreteDistribution position_distribution(const Environment& env, std::size_t n,
                                           const ExactOptions& opts) {
  const std::size_t ns[] = {n};
  return position_laws(env, ns, opts).front().distribution();
}

std::vector<std::vector<double>> level_distribution(const Environment& env, std::size_t n,
                                                    const ExactOptions& opts) {
  std::vector<std::vector<double>> out;
  HittingTimeSweep sweep(env, std::int64_t(n), opts.trunc_tol);
  for (std::size_t x = 0; x <= n && !sweep.exhausted(); ++x) {
    const TailSequence& site = env.site(x);
    const DiscreteDistribution& t = sweep.law();
    const std::int64_t last = std::int64_t(site.last_index());
    std::vector<double> row(site.last_index() + 1, 0.0);
    for (std::int64_t k = t.offset; k <= std::min<std::int64_t>(t.max_support(), std::int64_t(n));
         ++k) {
      const double pk = t.probs[std::size_t(k - t.offset)];
      const std::int64_t w = std::int64_t(n) - k;
      for (std::int64_t y = 0; y + w <= last; ++y) {
        const std::size_t i = std::size_t(y + w);
        row[std::size_t(y)] += pk * (site.omega(i) - site.omega_upper(i + 1));
      }
    }
    out.push_back(std::move(row));
    if (x < n) sweep.advance();
  }
  return out;
}

SojournDraw sample_sojourn(const TailSequence& site, double uniform) {
  const auto w = site.values();
  const std::size_t last = w.size() - 1;
  // Smallest n in [1, last] with uniform < 1 - omega_n; last + 1 if none.
  std::size_t lo = 1, hi = last + 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (uniform < 1.0 - w[mid]) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  SojournDraw d;
  d.n = lo;
  d.truncated = lo == last + 1 && site.deficit() > 0.0 && uniform >= 1.0 - site.deficit();
  return d;
}

namespace {

struct McPartial {
  std::vector<std::uint64_t> endpoint;
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> levels;
  std::vector<PathRecord> records;
  std::vector<std::uint64_t> hit_sum;
  std::vector<unsigned __int128> hit_sumsq;
  std::vector<std::vector<std::uint32_t>> checkpoint_x;
  std::uint64_t truncated = 0;
};

class PathRunner {
 public:
  PathRunner(const Environment& env, const McConfig& cfg, std::vector<std::size_t> needed)
      : env_(env), cfg_(cfg), needed_(std::move(needed)) {}

  void run(std::size_t path, McPartial& out) const {
    Stream rng(cfg_.seed,
               component_key(cfg_.engine == WalkEngine::chain ? "walk.chain" : "walk.renewal"),
               path);
    auto draw = [&](std::size_t x) {
      const SojournDraw d = sample_sojourn(env_.site(x), rng.uniform());
      if (d.truncated) ++out.truncated;
      return d.n;
    };
    std::vector<std::uint32_t> cps;
    std::size_t cp = 0;
    auto observe = [&](std::size_t n, std::size_t x, std::size_t y) {
      if (cfg_.record == RecordMode::full_path) out.records.push_back({path, n, x, y});
      while (cp < cfg_.checkpoints.size() && cfg_.checkpoints[cp] == n) {
        cps.push_back(std::uint32_t(x));
        ++cp;
      }
      if (n == cfg_.horizon && cfg_.record != RecordMode::hitting_times) {
        ++out.endpoint[x];
        ++out.levels[{x, y}];
      }
    };
    auto hit = [&](std::size_t x, std::uint64_t t) {
      out.hit_sum[x] += t;
      out.hit_sumsq[x] += static_cast<unsigned __int128>(t) * t;
    };
    const bool hitting = cfg_.record == RecordMode::hitting_times;

    if (cfg_.engine == WalkEngine::chain) {
      std::size_t x = 0, y = draw(0) - 1;
      if (hitting) {
        hit(0, 0);
        for (std::uint64_t n = 1; x < cfg_.hit_sites; ++n) {
          if (y > 0) {
            --y;
          } else {
            ++x;
            hit(x, n);
            if (x < cfg_.hit_sites) y = draw(x) - 1;
          }
        }
      } else {
        observe(0, x, y);
        for (std::size_t n = 1; n <= cfg_.horizon; ++n) {
          if (y > 0) {
            --y;
          } else {
            ++x;
            y = draw(x) - 1;
          }
          observe(n, x, y);
        }
      }
    } else {
      std::uint64_t t = 0;
      if (hitting) {
        for (std::size_t x = 0;; ++x) {
          hit(x, t);
          if (x == cfg_.hit_sites) break;
          t += draw(x);
        }
      } else {
        std::size_t next = 0;  // index into needed_
        for (std::size_t x = 0; t <= cfg_.horizon; ++x) {
          const std::uint64_t end = t + draw(x);  // X = x on [t, end)
          if (cfg_.record == RecordMode::full_path) {
            for (std::uint64_t n = t; n < end && n <= cfg_.horizon; ++n) {
              observe(n, x, std::size_t(end - 1 - n));
            }
          } else {
            while (next < needed_.size() && needed_[next] < end) {
              const std::size_t n = needed_[next++];
              observe(n, x, std::size_t(end - 1 - n));
            }
          }
          t = end;
        }
      }
    }
    if (!cfg_.checkpoints.empty()) out.checkpoint_x.push_back(std::move(cps));
  }

 private:
  const Environment& env_;
  const McConfig& cfg_;
  std::vector<std::size_t> needed_;
};

}  // namespace

McResult simulate_paths(const Environment& env, const McConfig& cfg) {
  if (cfg.paths == 0) throw ValidationError("paths must be at least 1");
  const bool hitting = cfg.record == RecordMode::hitting_times;
  const std::size_t sites_needed = hitting ? cfg.hit_sites : cfg.horizon + 1;
  if (env.size() < sites_needed) {
    throw ValidationError("horizon exceeds materialized sites: need " +
                          std::to_string(sites_needed) + ", environment has " +
                          std::to_string(env.size()));
  }
  for (std::size_t i = 0; i < cfg.checkpoints.size(); ++i) {
    if (cfg.checkpoints[i] > cfg.horizon || (i > 0 && cfg.checkpoints[i] <= cfg.checkpoints[i - 1])) {
      throw ValidationError("checkpoints must be strictly increasing and <= horizon");
    }
  }
  std::vector<std::size_t> needed = cfg.checkpoints;
  if (needed.empty() || needed.back() != cfg.horizon) needed.push_back(cfg.horizon);
  const PathRunner runner(env, cfg, needed);

  auto parts = detail::run_chunks<McPartial>(
      cfg.paths, 64, [&](std::size_t begin, std::size_t end, McPartial& part) {
        part.endpoint.assign(cfg.horizon + 1, 0);
        if (hitting) {
          part.hit_sum.assign(cfg.hit_sites + 1, 0);
          part.hit_sumsq.assign(cfg.hit_sites + 1, 0);
        }
        for (std::size_t p = begin; p < end; ++p) runner.run(p, part);
      });

  McResult r;
  r.paths = cfg.paths;
  r.horizon = cfg.horizon;
  r.checkpoints = cfg.checkpoints;
  r.endpoint_counts.assign(cfg.horizon + 1, 0);
  std::vector<std::uint64_t> hs(hitting ? cfg.hit_sites + 1 : 0, 0);
  std::vector<unsigned __int128> hq(hs.size(), 0);
  for (auto& part : parts) {
    for (std::size_t x = 0; x < part.endpoint.size(); ++x) r.endpoint_counts[x] += part.endpoint[x];
    for (const auto& [k, c] : part.levels) r.level_counts[k] += c;
    r.records.insert(r.records.end(), part.records.begin(), part.records.end());
    for (auto& row : part.checkpoint_x) r.checkpoint_x.push_back(std::move(row));
    for (std::size_t x = 0; x < hs.size(); ++x) {
      hs[x] += part.hit_sum[x];
      hq[x] += part.hit_sumsq[x];
    }
    r.truncated_draws += part.truncated;
  }
  if (hitting) {
    const double p = double(cfg.paths);
    r.hit_mean.resize(hs.size());
    r.hit_var.resize(hs.size());
    for (std::size_t x = 0; x < hs.size(); ++x) {
      const double mean = double(hs[x]) / p;
      r.hit_mean[x] = mean;
      r.hit_var[x] = cfg.paths > 1
                         ? std::max(0.0, (double(hq[x]) - p * mean * mean) / (p - 1.0))
                         : 0.0;
    }
  }
  return r;
}

double total_variation(std::span<const std::uint64_t> counts, std::span<const double> prob) {
  double total = 0.0;
  for (auto c : counts) total += double(c);
  if (total == 0.0) throw ValidationError("empty histogram");
  const std::size_t n = std::max(counts.size(), prob.size());
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = i < counts.size() ? double(counts[i]) / total : 0.0;
    const double b = i < prob.size() ? prob[i] : 0.0;
    tv += std::abs(a - b);
  }
  return 0.5 * tv;
}

}  // namespace iwalk
