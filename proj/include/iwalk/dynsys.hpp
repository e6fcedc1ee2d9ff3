#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "iwalk/environment.hpp"

namespace iwalk {

/// I_(x,y) = [x + omega^x_{y+1}, x + omega^x_y).
struct CellInterval {
  std::size_t x = 0;
  std::size_t y = 0;
  double lower = 0;
  double upper = 0;
};

/// Throws ValidationError when x is not materialized or y > N.
CellInterval cell_interval(const Environment& env, std::size_t x, std::size_t y);

/// Level y with omega_{y+1} <= u < omega_y, where omega_{N+1} is read as the
/// site's deficit. Throws NumericError when u lies below the deficit (the
/// region the stored tail cannot resolve).
std::size_t level_of(const TailSequence& site, double u);

/// Local map U_x on [0, 1): level y >= 1 is mapped affinely onto
/// [omega_y, omega_{y-1}), level 0 onto [1, 2).
double local_map(const TailSequence& site, double u);

/// floor(u) + U_floor(u)(u - floor(u)).
double global_step(const Environment& env, double u);

enum class Precision { binary64, extended };

struct TrajectoryConfig {
  std::size_t paths = 1;
  std::size_t horizon = 0;
  std::uint64_t seed = 0;
  /// extended keeps the fractional part in 113-bit binary floating point and
  /// draws 106-bit initial points; binary64 uses plain doubles.
  Precision precision = Precision::extended;
  /// Record times; empty means {horizon}. Must be increasing and <= horizon.
  std::vector<std::size_t> record_times;
  /// Keep (x, y, relative position inside I_(x,y)) per path and record time.
  bool keep_positions = false;
};

struct CellSample {
  std::uint32_t x, y;
  double rel;
};

struct TrajectoryResult {
  std::size_t paths = 0;
  std::vector<std::size_t> times;
  std::vector<std::vector<std::uint64_t>> cell_counts;  ///< [time][x]
  std::vector<std::map<std::pair<std::size_t, std::size_t>, std::uint64_t>> level_counts;
  /// Paths that entered the unresolved region at or before each time; they
  /// are excluded from the histograms from then on.
  std::vector<std::uint64_t> flagged;
  std::vector<std::vector<CellSample>> positions;  ///< keep_positions only
};

/// u_0 uniform on [0, 1), u_{n+1} = global step. Throws ValidationError when
/// paths == 0 or the environment has fewer than horizon + 1 sites.
TrajectoryResult simulate_trajectories(const Environment& env, const TrajectoryConfig& cfg);

/// Kolmogorov-Smirnov statistic of the relative positions inside one cell
/// against Uniform[0, 1).
struct CellUniformity {
  std::size_t x, y, count;
  double ks;
};

std::vector<CellUniformity> conditional_uniformity(const std::vector<CellSample>& samples,
                                                   std::size_t min_count);

}  // namespace iwalk
