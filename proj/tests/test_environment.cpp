#include <cmath>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "iwalk/diagnostics.hpp"
#include "iwalk/environment.hpp"
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

Environment tabulated(std::vector<std::vector<double>> omegas, double deficit = 0.0) {
  std::vector<TailSequence> sites;
  for (auto& w : omegas) sites.emplace_back(std::move(w), deficit, "test");
  return Environment(std::move(sites), json{{"kind", "tabulated"}});
}

}  // namespace

TEST_CASE("tail sequence invariants are enforced") {
  CHECK_NOTHROW(TailSequence({1.0, 0.5, 0.25}, 0.0, "t"));
  CHECK_THROWS_AS(TailSequence({0.9, 0.5}, 0.0, "t"), ValidationError);
  CHECK_THROWS_AS(TailSequence({1.0, 0.5, 0.5}, 0.0, "t"), ValidationError);
  CHECK_THROWS_AS(TailSequence({1.0, 0.5, 0.0}, 0.0, "t"), ValidationError);
  CHECK_THROWS_AS(TailSequence({1.0, 0.5}, 0.6, "t"), ValidationError);
  CHECK_THROWS_AS(TailSequence({1.0, 0.5}, -1e-3, "t"), ValidationError);
  CHECK_THROWS_AS(TailSequence({}, 0.0, "t"), ValidationError);
}

TEST_CASE("power-law family") {
  Truncation t = trunc_sites(3);
  t.n_cap = 10000;
  t.tail_tol = 1e-15;
  const Environment env = env_from_powerlaw(3.0, t);
  const TailSequence& s = env.site(0);
  CHECK(s.omega(1) == doctest::Approx(1.0 / 8));
  CHECK(s.omega(2) == doctest::Approx(1.0 / 27));
  CHECK(s.last_index() == 10000);
  CHECK(s.cap_reached());
  CHECK(s.deficit() == doctest::Approx(std::pow(10002.0, -3.0)));

  const double beta[] = {3.0};
  const auto d = diagnostics(env, beta, 3);
  CHECK(d.a[0] == 1.0);
  // m = sum (n+1)^-3 up to the stored index plus a bounded tail
  const double ref = oracle::zeta_partial(3.0, 10001);
  CHECK(std::abs(d.m(0) - ref) <= s.deficit() + 1e-12);
  CHECK(std::abs(d.m(0) - 1.2020569031595942) <= d.moments[0].mean_tail + s.deficit());
  CHECK_THROWS_AS(env_from_powerlaw(1.0, t), ValidationError);
}

TEST_CASE("geometric family: closed-form moments and K") {
  const Environment env = env_geometric(0.5, trunc_sites(20));
  const TailSequence& s = env.site(0);
  CHECK(s.omega(s.last_index()) <= 1e-12);
  CHECK(s.deficit() == doctest::Approx(std::ldexp(1.0, -int(s.last_index()) - 1)));
  const double beta[] = {3.0};
  const auto d = diagnostics(env, beta, 20);
  CHECK(d.m(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(d.moments[0].second == doctest::Approx(6.0).epsilon(1e-10));
  CHECK(d.s2(0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(d.k[0] == doctest::Approx(1.0));
  for (std::size_t x = 0; x <= 20; ++x) CHECK(d.mu[x] == doctest::Approx(2.0 * double(x)));
  for (std::size_t n = 0; n < d.M.size(); ++n) CHECK(d.M[n] == (n + 1) / 2);
  for (std::size_t x = 1; x <= 20; ++x) CHECK(std::abs(d.theta1[x]) < 1e-12);
  CHECK_THROWS_AS(env_geometric(1.0, trunc_sites(2)), ValidationError);
  CHECK_THROWS_AS(env_geometric(0.0, trunc_sites(2)), ValidationError);
}

TEST_CASE("exact short tail: direct and closed-form second moments") {
  const Environment env = tabulated({{1.0, 0.5, 0.25}});
  const double beta[] = {3.0};
  const auto d = diagnostics(env, beta, 1);
  CHECK(d.m(0) == doctest::Approx(1.75));
  // direct pmf sum 1 * 1/2 + 4 * 1/4 + 9 * 1/4
  CHECK(d.moments[0].second == doctest::Approx(3.75));
  CHECK(d.moments[0].second_closed_form == doctest::Approx(7.25));
  CHECK(d.moments[0].second_closed_form - d.moments[0].second == doctest::Approx(2.0 * d.m(0)));
}

TEST_CASE("LSV family tabulates c_n with the next value as deficit") {
  Truncation t = trunc_sites(2);
  t.n_cap = 3;
  const Environment env = env_from_lsv(LsvParams::from_alpha_kappa(1.0, 1.0), t);
  const TailSequence& s = env.site(1);
  const auto ref = oracle::lsv_cn(1.0, 1.0, 4);
  REQUIRE(s.last_index() == 3);
  CHECK(s.omega(0) == 1.0);
  CHECK(s.omega(1) == doctest::Approx(0.618034).epsilon(1e-6));
  CHECK(s.omega(2) == doctest::Approx(ref[1]).epsilon(1e-12));
  CHECK(s.omega(3) == doctest::Approx(ref[2]).epsilon(1e-12));
  CHECK(s.deficit() == doctest::Approx(ref[3]).epsilon(1e-12));
  CHECK(s.cap_reached());
  CHECK(env.natural_beta(0).value() == doctest::Approx(1.0));
}

TEST_CASE("diagnostic invariants across families") {
  Truncation t = trunc_sites(40);
  t.n_cap = 5000;
  std::vector<Environment> envs = {env_geometric(0.3, t), env_from_powerlaw(2.5, t),
                                   env_from_lsv(LsvParams::from_alpha_c(0.33, 0.5), t)};
  const double pl_betas[] = {2.2, 3.0, 4.5, 2.6};
  t.sites = 4;
  envs.push_back(env_from_powerlaw(pl_betas, t));
  for (const auto& env : envs) {
    const auto beta = beta_for(env, env.size(), 3.0);
    const auto d = diagnostics(env, beta, env.size());
    for (std::size_t x = 0; x < env.size(); ++x) {
      CHECK(d.a[x] >= 1.0);
      CHECK(d.a_prime[x] >= 1.0);
      CHECK(d.a[x] <= std::max(d.a_prime[x] * (1.0 + 1.0 / d.beta_star), 1.0) * (1 + 1e-12));
      CHECK(d.m(x) >= 1.0);
      CHECK(d.mu[x + 1] > d.mu[x]);
      // m from the tail sum equals the pmf mean
      const auto pmf = sojourn_pmf(env.site(x));
      CHECK(pmf.normalization_error() < 1e-9);
      const double pmf_mean = pmf.mean();
      CHECK(std::abs(d.m(x) - pmf_mean) <=
            1e-10 + (double(pmf.max_support()) + 1.0) * env.site(x).deficit());
    }
    for (std::size_t n = 0; n < d.M.size(); ++n) {
      CHECK(d.M[n] <= n);
      CHECK(d.mu[d.M[n]] >= double(n) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("diagnostics preconditions") {
  const Environment env = env_geometric(0.5, trunc_sites(5));
  const double bad[] = {1.0};
  CHECK_THROWS_AS(diagnostics(env, bad, 5), ValidationError);
  const double ok[] = {3.0};
  CHECK_THROWS_AS(diagnostics(env, ok, 0), ValidationError);
  CHECK_THROWS_AS(diagnostics(env, ok, 6), ValidationError);
  const auto d = diagnostics(env, ok, 5);
  CHECK_THROWS_AS(d.generalized_inverse(100), NumericError);
  const Environment tab = tabulated({{1.0, 0.5}});
  CHECK_THROWS_AS(beta_for(tab, 1, std::nullopt), ValidationError);
}

TEST_CASE("window fluctuation") {
  Truncation t = trunc_sites(200);
  const Environment flat = env_geometric(0.5, t);
  const double beta[] = {3.0};
  const auto d = diagnostics(flat, beta, 200, 2.0);
  for (std::size_t x : {2, 10, 50}) CHECK(window_fluctuation(d, 2.0, x, 1.0) == doctest::Approx(0.0).epsilon(1e-9));

  // one perturbed site inside every window around x = 20
  std::vector<SiteParams> params(200, GeometricSite{0.5});
  params[21] = GeometricSite{0.6};
  const Environment bumped = env_from_site_params(params, t, json{{"kind", "per-site"}});
  const auto db = diagnostics(bumped, beta, 200, 2.0);
  const double delta = db.m(21) - 2.0;
  CHECK(delta == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(window_fluctuation(db, 2.0, 20, 1.0) == doctest::Approx(delta).epsilon(1e-9));

  CHECK_THROWS_AS(window_fluctuation(d, 2.0, 1, 1.0), ValidationError);
  CHECK_THROWS_AS(window_fluctuation(d, 2.0, 10, 0.0), ValidationError);
  CHECK_THROWS_AS(window_fluctuation(d, 2.0, 195, 5.0), ValidationError);
}

TEST_CASE("environment file round trip") {
  Truncation t = trunc_sites(12);
  t.n_cap = 400;
  for (const auto& env : {env_geometric(0.5, t), env_from_powerlaw(3.0, t),
                          env_from_lsv(LsvParams::from_alpha_c(0.33, 0.5), t), env_degenerate(4)}) {
    const std::string text = environment_to_json(env);
    const Environment back = environment_from_json(text);
    REQUIRE(back.size() == env.size());
    for (std::size_t x = 0; x < env.size(); ++x) CHECK(back.site(x).same_values(env.site(x)));
    CHECK(environment_to_json(back) == text);
    const auto b1 = beta_for(env, env.size(), 3.0), b2 = beta_for(back, back.size(), 3.0);
    CHECK(b1 == b2);
    const auto d1 = diagnostics(env, b1, env.size()), d2 = diagnostics(back, b2, back.size());
    CHECK(d1.mu == d2.mu);
    CHECK(d1.sigma2 == d2.sigma2);
    CHECK(d1.a == d2.a);
    // constant environments stay extendable after a round trip
    CHECK(back.extended(20).size() == 20);
  }
  CHECK_THROWS_AS(environment_from_json("{not json"), ValidationError);
  CHECK_THROWS_AS(environment_from_json(R"({"sites": [{"omega": [0.5]}]})"), ValidationError);
}

TEST_CASE("extension keeps the prefix and files are never silently overwritten") {
  const Environment env = env_from_powerlaw(3.0, trunc_sites(5));
  const Environment longer = env.extended(9);
  CHECK(longer.size() == 9);
  for (std::size_t x = 0; x < 5; ++x) CHECK(longer.site(x).same_values(env.site(x)));
  CHECK_THROWS_AS(env.site(5), ValidationError);

  const auto dir = std::filesystem::temp_directory_path() / "iwalk_env_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "env.json").string();
  std::filesystem::remove(path);
  write_text_file(path, "a", false);
  CHECK_THROWS_AS(write_text_file(path, "b", false), IoError);
  CHECK_NOTHROW(write_text_file(path, "b", true));
  CHECK(read_text_file(path) == "b");
  CHECK_THROWS_AS(read_text_file((dir / "missing.json").string()), IoError);
}
