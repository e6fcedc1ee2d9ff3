#include <cmath>
#include <random>

#include "doctest.h"
#include "iwalk/diagnostics.hpp"
#include "iwalk/error.hpp"
#include "iwalk/walk.hpp"
#include "oracles.hpp"

using namespace iwalk;

namespace {

Truncation trunc_sites(std::size_t sites) {
  Truncation t;
  t.sites = sites;
  return t;
}

// Strictly decreasing tail with omega_0 = 1 and at most `len` stored values.
std::vector<double> random_tail(std::mt19937_64& gen, std::size_t len) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  std::vector<double> w{1.0};
  for (std::size_t n = 1; n < len; ++n) w.push_back(w.back() * u(gen));
  return w;
}

double cdf(const DiscreteDistribution& d, std::int64_t k) {
  double s = 0;
  for (std::int64_t j = d.min_support(); j <= std::min(k, d.max_support()); ++j) s += d.prob(j);
  return s;
}

}  // namespace

TEST_CASE("sojourn pmf") {
  SUBCASE("short exact tail") {
    const TailSequence s({1.0, 0.5, 0.25}, 0.0, "t");
    const auto d = sojourn_pmf(s);
    CHECK(d.offset == 1);
    REQUIRE(d.probs.size() == 3);
    CHECK(d.probs[0] == 0.5);
    CHECK(d.probs[1] == 0.25);
    CHECK(d.probs[2] == 0.25);
    CHECK(d.deficit == 0.0);
  }
  SUBCASE("geometric half") {
    const auto env = env_geometric(0.5, trunc_sites(1));
    const auto d = sojourn_pmf(env.site(0));
    for (std::int64_t n = 1; n <= 30; ++n) CHECK(d.prob(n) == doctest::Approx(std::ldexp(1.0, -int(n))));
    CHECK(d.normalization_error() < 1e-12);
  }
  SUBCASE("tail identity P(tau >= n) = omega_{n-1}") {
    const auto env = env_from_powerlaw(2.5, trunc_sites(1));
    const auto& s = env.site(0);
    const auto d = sojourn_pmf(s);
    double tail = 1.0;
    for (std::size_t n = 1; n <= 200; ++n) {
      CHECK(tail == doctest::Approx(s.omega(n - 1)).epsilon(1e-9));
      tail -= d.prob(std::int64_t(n));
    }
  }
}

TEST_CASE("hitting times against closed forms") {
  const auto env = env_geometric(0.5, trunc_sites(30));
  const auto t0 = hitting_time_distribution(env, 0);
  CHECK(t0.offset == 0);
  CHECK(t0.probs == std::vector<double>{1.0});
  const auto t2 = hitting_time_distribution(env, 2);
  CHECK(t2.offset == 2);
  CHECK(t2.prob(2) == doctest::Approx(0.25));
  CHECK(t2.prob(3) == doctest::Approx(0.25));
  CHECK(t2.prob(4) == doctest::Approx(3.0 / 16));
  for (std::int64_t x : {1, 2, 5, 12}) {
    const auto t = hitting_time_distribution(env, std::size_t(x));
    CHECK(t.min_support() == x);
    for (std::int64_t k = x; k < x + 60; ++k)
      CHECK(std::abs(t.prob(k) - oracle::negative_binomial_half(k, x)) < 1e-13 + t.deficit);
    CHECK(std::abs(t.stored_mass() + t.deficit - 1.0) < 1e-9);
  }
}

TEST_CASE("hitting times equal brute-force enumeration on clipped supports") {
  std::mt19937_64 gen(20240611);
  std::uniform_int_distribution<std::size_t> len(1, 6);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<TailSequence> sites;
    std::vector<std::vector<double>> pmfs;
    for (int x = 0; x < 4; ++x) {
      auto w = random_tail(gen, len(gen));
      std::vector<double> pmf;
      for (std::size_t n = 1; n <= w.size(); ++n) pmf.push_back(w[n - 1] - (n < w.size() ? w[n] : 0.0));
      pmfs.push_back(pmf);
      sites.emplace_back(std::move(w), 0.0, "clip");
    }
    const Environment env(std::move(sites), json{{"kind", "tabulated"}});
    ExactOptions opts;
    opts.trunc_tol = 0.0;
    for (std::size_t x = 0; x <= 4; ++x) {
      const auto law = hitting_time_distribution(env, x, opts);
      const auto ref = oracle::brute_force_sum({pmfs.begin(), pmfs.begin() + std::ptrdiff_t(x)});
      for (std::int64_t k = 0; k <= 30; ++k) {
        const auto it = ref.find(k);
        CHECK(std::abs(law.prob(k) - (it == ref.end() ? 0.0 : it->second)) < 1e-12);
      }
    }
  }
}

TEST_CASE("position law for small n") {
  const auto env = env_geometric(0.5, trunc_sites(10));
  const auto d2 = position_distribution(env, 2);
  CHECK(d2.prob(0) == doctest::Approx(0.25));
  CHECK(d2.prob(1) == doctest::Approx(0.5));
  CHECK(d2.prob(2) == doctest::Approx(0.25));
  const auto d0 = position_distribution(env, 0);
  CHECK(d0.offset == 0);
  CHECK(d0.probs.size() == 1);
  CHECK(d0.prob(0) == doctest::Approx(1.0));

  const auto levels = level_distribution(env, 2);
  for (std::size_t x = 0; x <= 2; ++x) {
    double s = 0;
    for (double p : levels[x]) s += p;
    CHECK(s == doctest::Approx(d2.prob(std::int64_t(x))));
  }
  // Z_2 = (0, y) needs tau_0 >= 3 with Y = tau_0 - 3
  CHECK(levels[0][0] == doctest::Approx(0.125));
}

TEST_CASE("position laws: mass, support and the two-way identity") {
  Truncation t = trunc_sites(400);
  t.tail_tol = 1e-14;
  std::vector<Environment> envs = {env_geometric(0.5, t), env_from_powerlaw(3.0, t),
                                   env_from_lsv(LsvParams::from_alpha_c(0.3, 0.5), t)};
  const std::vector<std::size_t> ns = {0, 1, 7, 40, 150};
  for (const auto& env : envs) {
    const auto laws = position_laws(env, ns);
    REQUIRE(laws.size() == ns.size());
    for (const auto& law : laws) {
      CHECK(law.prob.size() == law.n + 1);
      double s = 0;
      for (double p : law.prob) {
        CHECK(p >= 0.0);
        s += p;
      }
      CHECK(std::abs(s + law.deficit - 1.0) < 1e-9);
      CHECK(law.deficit < 1e-6);
      const auto d = law.distribution();
      CHECK(d.min_support() >= 0);
      CHECK(d.max_support() <= std::int64_t(law.n));
      CHECK(d.prob(std::int64_t(law.n) + 1) == 0.0);
    }
    // X_n = x iff T_x <= n < T_{x+1}
    const auto& law = laws.back();
    HittingTimeSweep sweep(env, std::int64_t(law.n), 1e-15);
    double lhs = 0, rhs = 0;
    double a = cdf(sweep.law(), std::int64_t(law.n));
    for (std::size_t x = 0; x <= law.n; ++x) {
      sweep.advance();
      const double b = sweep.exhausted() ? 0.0 : cdf(sweep.law(), std::int64_t(law.n));
      CHECK(std::abs(law.prob[x] - (a - b)) <= 1e-9 * law.prob[x] + 1e-12);
      lhs += law.prob[x];
      rhs += a - b;
      a = b;
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("hitting-time moments match the cumulative diagnostics") {
  Truncation t = trunc_sites(60);
  t.tail_tol = 1e-15;
  t.n_cap = 400000;
  std::vector<Environment> envs = {env_geometric(0.5, t), env_geometric(0.2, t), env_from_powerlaw(5.0, t)};
  for (const auto& env : envs) {
    const auto beta = beta_for(env, env.size(), 3.0);
    const auto d = diagnostics(env, beta, env.size());
    HittingTimeSweep sweep(env, std::int64_t(1) << 40, 1e-15);
    for (std::size_t x = 1; x <= 40; ++x) {
      sweep.advance();
      if (x % 13 != 1) continue;
      CHECK(sweep.law().mean() == doctest::Approx(d.mu[x]).epsilon(1e-7));
      CHECK(sweep.law().variance() == doctest::Approx(d.sigma2[x]).epsilon(1e-5));
    }
  }
  const auto geo = env_geometric(0.5, t);
  CHECK(hitting_time_distribution(geo, 10).variance() == doctest::Approx(20.0).epsilon(1e-9));
}

TEST_CASE("deficit budget is enforced") {
  Truncation t = trunc_sites(200);
  t.tail_tol = 1e-3;
  const auto env = env_from_powerlaw(2.2, t);
  ExactOptions opts;
  opts.deficit_budget = 1e-9;
  const std::size_t ns[] = {100};
  CHECK_THROWS_AS(position_laws(env, ns, opts), NumericError);
}

TEST_CASE("inverse-CDF sojourn sampling") {
  const auto env = env_geometric(0.5, trunc_sites(1));
  const auto& s = env.site(0);
  CHECK(sample_sojourn(s, 0.0).n == 1);
  CHECK(sample_sojourn(s, 0.6).n == 2);
  CHECK(sample_sojourn(s, 0.5).n == 2);
  CHECK(sample_sojourn(s, std::nextafter(0.5, 0.0)).n == 1);
  // half-open intervals [1 - omega_{n-1}, 1 - omega_n)
  const std::size_t N = s.last_index();
  for (std::size_t n = 1; n <= std::min<std::size_t>(N, 30); ++n)
    CHECK(sample_sojourn(s, 1.0 - s.omega(n - 1)).n == n);

  const TailSequence cut({1.0, 0.5, 0.25}, 0.125, "t");
  CHECK(sample_sojourn(cut, 0.74).n == 2);
  const auto edge = sample_sojourn(cut, 0.75);
  CHECK(edge.n == 3);
  CHECK(!edge.truncated);
  const auto deep = sample_sojourn(cut, 0.9);
  CHECK(deep.n == 3);
  CHECK(deep.truncated);
}

TEST_CASE("degenerate environment moves one step per time") {
  const auto env = env_degenerate(60);
  const auto law = position_distribution(env, 50);
  CHECK(law.prob(50) == doctest::Approx(1.0));
  McConfig cfg;
  cfg.paths = 200;
  cfg.horizon = 50;
  cfg.seed = 1;
  for (auto engine : {WalkEngine::chain, WalkEngine::renewal}) {
    cfg.engine = engine;
    const auto r = simulate_paths(env, cfg);
    CHECK(r.endpoint_counts[50] == 200);
  }
}

TEST_CASE("Monte Carlo agrees with the exact laws") {
  const auto env = env_geometric(0.5, trunc_sites(40));
  McConfig cfg;
  cfg.paths = 100000;
  cfg.horizon = 2;
  cfg.seed = 42;
  const auto r = simulate_paths(env, cfg);
  const double p1 = double(r.endpoint_counts[1]) / double(cfg.paths);
  CHECK(std::abs(p1 - 0.5) <= 3.0 * std::sqrt(0.25 / double(cfg.paths)));

  cfg.paths = 40000;
  cfg.horizon = 25;
  Truncation t = trunc_sites(40);
  const auto pl = env_from_powerlaw(2.5, t);
  const auto exact = position_distribution(pl, 25);
  std::vector<double> probs(26);
  for (std::size_t x = 0; x <= 25; ++x) probs[x] = exact.prob(std::int64_t(x));
  std::vector<std::uint64_t> counts[2];
  for (auto engine : {WalkEngine::chain, WalkEngine::renewal}) {
    cfg.engine = engine;
    const auto res = simulate_paths(pl, cfg);
    CHECK(total_variation(res.endpoint_counts, probs) <= 4.0 * std::sqrt(26.0 / double(cfg.paths)));
    counts[engine == WalkEngine::renewal] = res.endpoint_counts;
  }
  double tv = 0;
  for (std::size_t x = 0; x < counts[0].size(); ++x)
    tv += std::abs(double(counts[0][x]) - double(counts[1][x])) / double(cfg.paths);
  CHECK(0.5 * tv <= 4.0 * std::sqrt(26.0 / double(cfg.paths)));
}

TEST_CASE("simulated hitting times match mu within three standard errors") {
  Truncation t = trunc_sites(30);
  const auto env = env_from_powerlaw(3.5, t);
  const auto d = diagnostics(env, beta_for(env, 30, std::nullopt), 30);
  McConfig cfg;
  cfg.paths = 20000;
  cfg.seed = 9;
  cfg.record = RecordMode::hitting_times;
  cfg.hit_sites = 30;
  for (auto engine : {WalkEngine::chain, WalkEngine::renewal}) {
    cfg.engine = engine;
    const auto r = simulate_paths(env, cfg);
    REQUIRE(r.hit_mean.size() == 31);
    CHECK(r.hit_mean[0] == 0.0);
    for (std::size_t x : {1, 5, 30}) {
      const double se = std::sqrt(r.hit_var[x] / double(cfg.paths));
      CHECK(std::abs(r.hit_mean[x] - d.mu[x]) <= 3.0 * se);
    }
  }
}

TEST_CASE("simulation is reproducible and records full paths") {
  const auto env = env_from_powerlaw(3.0, trunc_sites(20));
  McConfig cfg;
  cfg.paths = 50;
  cfg.horizon = 12;
  cfg.seed = 77;
  cfg.record = RecordMode::full_path;
  const auto a = simulate_paths(env, cfg);
  const auto b = simulate_paths(env, cfg);
  REQUIRE(a.records.size() == 50 * 13);
  CHECK(a.endpoint_counts == b.endpoint_counts);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& r = a.records[i];
    CHECK(r.x == b.records[i].x);
    CHECK(r.y == b.records[i].y);
    CHECK(r.x <= r.n);
    if (r.n > 0) {
      const auto& prev = a.records[i - 1];
      // descend, or jump to the next site from level 0
      CHECK(((r.x == prev.x && r.y + 1 == prev.y) || (prev.y == 0 && r.x == prev.x + 1)));
    }
  }
  cfg.horizon = 25;
  CHECK_THROWS_AS(simulate_paths(env, cfg), ValidationError);
  cfg.horizon = 5;
  cfg.paths = 0;
  CHECK_THROWS_AS(simulate_paths(env, cfg), ValidationError);
}

TEST_CASE("horizon-capped hitting law agrees with the full law below the cap") {
  Truncation t = trunc_sites(30);
  t.tail_tol = 1e-14;
  const auto env = env_from_powerlaw(2.5, t);
  const auto full = hitting_time_distribution(env, 12);
  const auto capped = hitting_time_distribution(env, 12, 80);
  CHECK(capped.max_support() <= 80);
  for (std::int64_t k = 0; k <= 80; ++k) CHECK(capped.prob(k) == doctest::Approx(full.prob(k)).epsilon(1e-12));
  CHECK(capped.stored_mass() + capped.deficit < 1.0);
  CHECK(hitting_time_distribution(env, 12, 5).probs.empty());
}
