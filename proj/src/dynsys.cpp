#include "iwalk/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iwalk/error.hpp"
#include "iwalk/rng.hpp"
#include "parallel.hpp"

namespace iwalk {

namespace {

// omega_n with omega_{N+1} read as the deficit.
double omega_ext(std::span<const double> w, double deficit, std::size_t n) {
  return n < w.size() ? w[n] : deficit;
}

// Returns false when u is below the resolved region.
template <class Real>
bool find_level(const TailSequence& site, Real u, std::size_t& level) {
  const auto w = site.values();
  const std::size_t last = w.size() - 1;
  if (u < Real(site.deficit())) return false;
  // Smallest y in [0, last] with u >= omega_{y+1}.
  std::size_t lo = 0, hi = last;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (u >= Real(omega_ext(w, site.deficit(), mid + 1))) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  level = lo;
  return true;
}

template <class Real>
Real apply_branch(const TailSequence& site, std::size_t y, Real u) {
  const auto w = site.values();
  const double d = site.deficit();
  if (y == 0) {
    const double w1 = omega_ext(w, d, 1);
    return Real(1) + (u - Real(w1)) / (Real(1) - Real(w1));
  }
  const Real hi = Real(w[y - 1]), mid = Real(w[y]), lo = Real(omega_ext(w, d, y + 1));
  return mid + (hi - mid) / (mid - lo) * (u - lo);
}

}  // namespace

CellInterval cell_interval(const Environment& env, std::size_t x, std::size_t y) {
  const TailSequence& site = env.site(x);
  if (y > site.last_index()) {
    throw ValidationError("level " + std::to_string(y) + " beyond stored tail of site " +
                          std::to_string(x));
  }
  const auto w = site.values();
  return {x, y, double(x) + omega_ext(w, site.deficit(), y + 1), double(x) + w[y]};
}

std::size_t level_of(const TailSequence& site, double u) {
  if (!(u >= 0.0 && u < 1.0)) throw ValidationError("u must lie in [0, 1)");
  std::size_t y = 0;
  if (!find_level(site, u, y)) {
    throw NumericError("u below the stored tail (deficit region); raise N_cap");
  }
  return y;
}

double local_map(const TailSequence& site, double u) {
  return apply_branch(site, level_of(site, u), u);
}

double global_step(const Environment& env, double u) {
  if (!(u >= 0.0) || !std::isfinite(u)) throw ValidationError("u must be finite and >= 0");
  const double fl = std::floor(u);
  const std::size_t x = std::size_t(fl);
  return fl + local_map(env.site(x), u - fl);
}

namespace {

struct TrajPartial {
  std::vector<std::vector<std::uint64_t>> cells;
  std::vector<std::map<std::pair<std::size_t, std::size_t>, std::uint64_t>> levels;
  std::vector<std::uint64_t> flagged;
  std::vector<std::vector<CellSample>> positions;
};

template <class Real>
Real initial_point(Stream& rng);

template <>
double initial_point<double>(Stream& rng) {
  return rng.uniform();
}

template <>
__float128 initial_point<__float128>(Stream& rng) {
  const std::uint64_t a = rng.next() >> 11, b = rng.next() >> 11;
  return __float128(a) * __float128(0x1p-53) + __float128(b) * __float128(0x1p-106);
}

template <class Real>
void run_paths(const Environment& env, const TrajectoryConfig& cfg,
               const std::vector<std::size_t>& times, std::size_t begin, std::size_t end,
               TrajPartial& out) {
  const std::uint64_t key = component_key("dynsys.trajectory");
  out.cells.assign(times.size(), {});
  out.levels.assign(times.size(), {});
  out.flagged.assign(times.size(), 0);
  out.positions.assign(cfg.keep_positions ? times.size() : 0, {});
  for (std::size_t p = begin; p < end; ++p) {
    Stream rng(cfg.seed, key, p);
    std::size_t x = 0;
    Real f = initial_point<Real>(rng);
    bool flagged = false;
    std::size_t ti = 0;
    for (std::size_t n = 0; n <= cfg.horizon && ti < times.size(); ++n) {
      const TailSequence& site = env.site(x);
      std::size_t y = 0;
      if (!flagged && !find_level(site, f, y)) flagged = true;
      if (n == times[ti]) {
        if (flagged) {
          for (std::size_t t = ti; t < times.size(); ++t) ++out.flagged[t];
          break;
        }
        auto& c = out.cells[ti];
        if (c.size() <= x) c.resize(x + 1, 0);
        ++c[x];
        ++out.levels[ti][{x, y}];
        if (cfg.keep_positions) {
          const auto w = site.values();
          const double lo = omega_ext(w, site.deficit(), y + 1);
          const double rel = double((f - Real(lo)) / (Real(w[y]) - Real(lo)));
          out.positions[ti].push_back({std::uint32_t(x), std::uint32_t(y), rel});
        }
        ++ti;
      }
      if (flagged) continue;
      Real v = apply_branch(site, y, f);
      if (v >= Real(1)) {
        v -= Real(1);
        ++x;
      }
      if (!(v >= Real(0) && v < Real(1))) flagged = true;  // rounding pushed past a cell edge
      f = v;
    }
  }
}

}  // namespace

TrajectoryResult simulate_trajectories(const Environment& env, const TrajectoryConfig& cfg) {
  if (cfg.paths == 0) throw ValidationError("paths must be at least 1");
  if (env.size() < cfg.horizon + 1) {
    throw ValidationError("horizon exceeds materialized sites: need " +
                          std::to_string(cfg.horizon + 1) + ", environment has " +
                          std::to_string(env.size()));
  }
  std::vector<std::size_t> times = cfg.record_times;
  if (times.empty()) times.push_back(cfg.horizon);
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] > cfg.horizon || (i > 0 && times[i] <= times[i - 1])) {
      throw ValidationError("record times must be strictly increasing and <= horizon");
    }
  }
  auto parts = detail::run_chunks<TrajPartial>(
      cfg.paths, 256, [&](std::size_t begin, std::size_t end, TrajPartial& part) {
        if (cfg.precision == Precision::extended) {
          run_paths<__float128>(env, cfg, times, begin, end, part);
        } else {
          run_paths<double>(env, cfg, times, begin, end, part);
        }
      });
  TrajectoryResult r;
  r.paths = cfg.paths;
  r.times = times;
  r.cell_counts.assign(times.size(), {});
  r.level_counts.assign(times.size(), {});
  r.flagged.assign(times.size(), 0);
  r.positions.assign(cfg.keep_positions ? times.size() : 0, {});
  for (auto& part : parts) {
    for (std::size_t t = 0; t < times.size(); ++t) {
      auto& c = r.cell_counts[t];
      if (c.size() < part.cells[t].size()) c.resize(part.cells[t].size(), 0);
      for (std::size_t x = 0; x < part.cells[t].size(); ++x) c[x] += part.cells[t][x];
      for (const auto& [k, v] : part.levels[t]) r.level_counts[t][k] += v;
      r.flagged[t] += part.flagged[t];
      if (cfg.keep_positions) {
        r.positions[t].insert(r.positions[t].end(), part.positions[t].begin(),
                              part.positions[t].end());
      }
    }
  }
  return r;
}

std::vector<CellUniformity> conditional_uniformity(const std::vector<CellSample>& samples,
                                                   std::size_t min_count) {
  std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> groups;
  for (const auto& s : samples) groups[{s.x, s.y}].push_back(s.rel);
  std::vector<CellUniformity> out;
  for (auto& [cell, v] : groups) {
    if (v.size() < min_count) continue;
    std::sort(v.begin(), v.end());
    const double m = double(v.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      ks = std::max({ks, double(i + 1) / m - v[i], v[i] - double(i) / m});
    }
    out.push_back({cell.first, cell.second, v.size(), ks});
  }
  return out;
}

}  // namespace iwalk
