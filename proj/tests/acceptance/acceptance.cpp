// Acceptance suite: every criterion prints one PASS/FAIL line with the
// measured values and the tolerance it was judged against.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "iwalk/diagnostics.hpp"
#include "iwalk/dynsys.hpp"
#include "iwalk/environment.hpp"
#include "iwalk/iwalk.h"
#include "iwalk/limits.hpp"
#include "iwalk/lsv.hpp"
#include "iwalk/random_env.hpp"
#include "iwalk/walk.hpp"
#include "oracles.hpp"

using namespace iwalk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Truncation trunc_sites(std::size_t sites) {
  Truncation t;
  t.sites = sites;
  return t;
}

EnvDiagnostics diagnose(const Environment& env) {
  return diagnostics(env, beta_for(env, env.size(), 3.0), env.size());
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

// ---- 1 -----------------------------------------------------------------

Outcome oracle_equivalence() {
  // the first six tail values of each family, so sojourns live on 1..6
  Truncation t = trunc_sites(1);
  t.n_cap = 10;
  const std::vector<std::pair<const char*, Environment>> families = {
      {"geometric", env_geometric(0.5, t)},
      {"powerlaw", env_from_powerlaw(3.0, t)},
      {"lsv", env_from_lsv(LsvParams::from_alpha_c(0.33, 0.5), t)}};
  std::vector<TailSequence> clipped;
  for (const auto& [name, env] : families) {
    const auto w = env.site(0).values();
    clipped.emplace_back(std::vector<double>(w.begin(), w.begin() + 6), 0.0, name);
  }
  ExactOptions opts;
  opts.trunc_tol = 0.0;
  double worst = 0.0;
  std::size_t checked = 0;
  // every family alone plus an interleaved environment
  std::vector<std::vector<std::size_t>> layouts = {{0, 0, 0, 0}, {1, 1, 1, 1}, {2, 2, 2, 2}, {0, 1, 2, 1}};
  for (const auto& layout : layouts) {
    std::vector<TailSequence> sites;
    std::vector<std::vector<double>> pmfs;
    for (std::size_t f : layout) {
      sites.push_back(clipped[f]);
      const auto& w = clipped[f].values();
      std::vector<double> pmf;
      for (std::size_t n = 1; n <= 6; ++n) pmf.push_back(w[n - 1] - (n < 6 ? w[n] : 0.0));
      pmfs.push_back(pmf);
    }
    const Environment env(std::move(sites), json{{"kind", "tabulated"}});
    for (std::size_t x = 0; x <= 4; ++x) {
      const auto law = hitting_time_distribution(env, x, opts);
      const auto ref = oracle::brute_force_sum({pmfs.begin(), pmfs.begin() + std::ptrdiff_t(x)});
      for (std::int64_t k = 0; k <= 26; ++k) {
        const auto it = ref.find(k);
        worst = std::max(worst, std::abs(law.prob(k) - (it == ref.end() ? 0.0 : it->second)));
        ++checked;
      }
    }
  }
  return {worst <= 1e-12, fmt("max atom error %.3g over %zu atoms (tol 1e-12)", worst, checked)};
}

// ---- 2 -----------------------------------------------------------------

Outcome moment_identities() {
  bool ok = true;
  double worst_gap = 0.0;
  Truncation t = trunc_sites(1);
  for (const auto& env : {env_geometric(0.5, t), env_geometric(0.2, t), env_from_powerlaw(3.0, t),
                          env_from_powerlaw(2.2, t), env_from_lsv(LsvParams::from_alpha_c(0.33, 0.5), t)}) {
    const auto d = diagnose(env);
    const auto pmf = sojourn_pmf(env.site(0));
    const double allowed = 1e-10 + (double(pmf.max_support()) + 1.0) * env.site(0).deficit();
    const double gap = std::abs(d.m(0) - pmf.mean());
    worst_gap = std::max(worst_gap, gap / allowed);
    ok = ok && gap <= allowed;
  }
  const Environment exact({TailSequence({1.0, 0.5, 0.25}, 0.0, "t")}, json{{"kind", "tabulated"}});
  const auto de = diagnose(exact);
  const auto dg = diagnose(env_geometric(0.5, trunc_sites(1)));
  const double e2_exact = de.moments[0].second, e2_geo = dg.moments[0].second;
  const double flag_exact = de.moments[0].second_closed_form - e2_exact;
  const double flag_geo = dg.moments[0].second_closed_form - e2_geo;
  ok = ok && std::abs(e2_exact - 3.75) <= 1e-12 && std::abs(e2_geo - 6.0) <= 1e-9;
  // the (2n+3) form overshoots by exactly 2 m
  ok = ok && std::abs(flag_exact - 2.0 * de.m(0)) <= 1e-12 && std::abs(flag_geo - 2.0 * dg.m(0)) <= 1e-9;
  return {ok, fmt("m gap/allowed max %.5f; E tau^2 = %.15g (3.75), %.12g (6); (2n+3) excess %.6g = 2m %.6g, %.6g = 2m %.6g",
                  worst_gap, e2_exact, e2_geo, flag_exact, 2 * de.m(0), flag_geo, 2 * dg.m(0))};
}

// ---- 3 -----------------------------------------------------------------

Outcome walk_dynamics_equivalence() {
  const auto env = env_geometric(0.5, trunc_sites(51));
  TrajectoryConfig cfg;
  cfg.paths = 200000;
  cfg.horizon = 50;
  cfg.seed = 20240101;
  cfg.record_times = {10, 50};
  const auto traj = simulate_trajectories(env, cfg);
  const auto laws = position_laws(env, cfg.record_times);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const std::size_t n = laws[i].n;
    std::vector<std::uint64_t> counts(traj.cell_counts[i].begin(), traj.cell_counts[i].end());
    counts.resize(n + 1);
    const double tv = total_variation(counts, laws[i].prob);
    const double tol = 4.0 * std::sqrt(double(n) / double(cfg.paths));
    ok = ok && tv <= tol && traj.flagged[i] == 0;
    detail += fmt("n=%zu TV %.4f (tol %.4f, flagged %llu); ", n, tv, tol,
                  (unsigned long long)traj.flagged[i]);
  }
  // level-resolved at n = 10
  const auto levels = level_distribution(env, 10);
  double tv = 0.0, covered = 0.0;
  std::uint64_t inside = 0;
  for (std::size_t x = 0; x < levels.size(); ++x)
    for (std::size_t y = 0; y < levels[x].size(); ++y) {
      const auto it = traj.level_counts[0].find({x, y});
      const double c = it == traj.level_counts[0].end() ? 0.0 : double(it->second);
      inside += std::uint64_t(c);
      covered += levels[x][y];
      tv += std::abs(c / double(cfg.paths) - levels[x][y]);
    }
  tv = 0.5 * (tv + (1.0 - double(inside) / double(cfg.paths)) + (1.0 - covered));
  const double tol = 4.0 * std::sqrt(10.0 / double(cfg.paths));
  ok = ok && tv <= tol;
  detail += fmt("levels n=10 TV %.4f (tol %.4f)", tv, tol);
  return {ok, detail};
}

// ---- 4 -----------------------------------------------------------------

Outcome clt() {
  const auto env = env_geometric(0.5, trunc_sites(4001));
  const auto d = diagnose(env);
  const auto p = LimitParams::make(2.0, 2.0);
  const std::size_t ns[] = {250, 4000};
  const auto rows = clt_report(env, p, d, ns);
  const double a = rows[0].kolmogorov_x, b = rows[1].kolmogorov_x;
  return {b < 0.02 && b < a, fmt("Kolmogorov n=250 %.5f, n=4000 %.5f (need < 0.02 and decreasing)", a, b)};
}

// ---- 5 -----------------------------------------------------------------

Outcome llt() {
  const std::size_t ns[] = {500, 2000, 8000};
  bool ok = true;
  std::string detail;

  auto run = [&](const char* name, const Environment& env, const LimitParams& p, bool bound) {
    const auto d = diagnose(env);
    const auto reps = llt_reports(env, p, d, ns);
    std::vector<double> errs;
    for (const auto& r : reps) errs.push_back(r.sup_err_scaled);
    bool finite = true;
    for (double e : errs) finite = finite && std::isfinite(e);
    const bool dec = strictly_decreasing(errs);
    ok = ok && finite && dec;
    detail += fmt("%s sup sqrt(n)|err| %.5f / %.5f / %.5f", name, errs[0], errs[1], errs[2]);
    if (bound) {
      const double tol = 0.05 + reps.back().sup_slack_scaled;
      ok = ok && errs.back() < tol;
      detail += fmt(" (n=8000 tol %.5f)", tol);
    }
    detail += dec ? " decreasing; " : " NOT decreasing; ";
  };
  run("geometric", env_geometric(0.5, trunc_sites(8001)), LimitParams::make(2.0, 2.0), true);
  const double z2 = std::numbers::pi * std::numbers::pi / 6.0, z3 = 1.2020569031595942;
  run("powerlaw", env_from_powerlaw(3.0, trunc_sites(8001)), LimitParams::make(z3, 2 * z2 - z3 - z3 * z3), false);
  return {ok, detail};
}

// ---- 6 -----------------------------------------------------------------

Outcome decomposition() {
  const auto env = env_geometric(0.5, trunc_sites(2500));
  const auto d = diagnose(env);
  const auto p = LimitParams::make(2.0, 2.0);
  double worst = 0.0;
  std::vector<double> scaled;
  std::size_t rows = 0;
  for (std::size_t x : {50, 200, 800}) {
    const std::size_t xs[] = {x};
    double e1 = 0.0;
    for (const auto& r : llt_error_decomposition(env, p, d, xs)) {
      worst = std::max(worst, std::abs(r.e1 + r.e2 + r.e3 - (r.p_hit - r.h_over_mu)));
      e1 = std::max(e1, std::abs(r.e1));
      ++rows;
    }
    scaled.push_back(std::sqrt(double(x)) * e1);
  }
  const bool ok = worst <= 1e-15 && strictly_decreasing(scaled);
  return {ok, fmt("telescoping max %.3g over %zu (x,n) (tol 1e-15); sqrt(x) max|E1| %.5f / %.5f / %.5f",
                  worst, rows, scaled[0], scaled[1], scaled[2])};
}

// ---- 7 -----------------------------------------------------------------

Outcome slln() {
  const auto env = env_geometric(0.5, trunc_sites(100001));
  McConfig cfg;
  cfg.paths = 1000;
  cfg.horizon = 100000;
  cfg.seed = 77;
  cfg.engine = WalkEngine::renewal;
  for (std::size_t n = 10000; n <= 100000; n += 10000) cfg.checkpoints.push_back(n);
  const auto mc = simulate_paths(env, cfg);
  const auto r = slln_report(mc, 2.0, 0.02);
  return {r.frac_within_at_horizon >= 0.99,
          fmt("share within 0.02 of 1/2 at n=1e5: %.4f (need >= 0.99); implied mu %.5f",
              r.frac_within_at_horizon, r.implied_mu)};
}

// ---- 8 -----------------------------------------------------------------

Outcome lsv_bounds() {
  bool ok = true;
  std::size_t checked = 0;
  double worst1 = 0.0, worst2 = 0.0;
  for (double alpha : {0.25, 0.33, 0.45})
    for (double cc : {0.3, 0.5, 0.7}) {
      const auto p = LsvParams::from_alpha_c(alpha, cc);
      const auto c = lsv_cn_sequence(p, 20000);
      const double b1 = lsv_cn_bound(p), b2 = lsv_cn_difference_bound(p);
      const double a = 1.0 / alpha;
      for (std::size_t n = 1; n <= c.size(); ++n) {
        const double r1 = std::pow(double(n), a) * c[n - 1] / b1;
        const double prev = n == 1 ? 1.0 : c[n - 2];
        const double r2 = std::pow(double(n), a + 1) * (prev - c[n - 1]) / b2;
        worst1 = std::max(worst1, r1);
        worst2 = std::max(worst2, r2);
        ok = ok && r1 <= 1.0 && r2 <= 1.0;
        ++checked;
      }
    }
  return {ok, fmt("%zu terms; max ratio to first bound %.4f, to difference bound %.4f (need <= 1)",
                  checked, worst1, worst2)};
}

// ---- 9 -----------------------------------------------------------------

using Artifacts = std::map<std::string, std::string>;

bool collect(const char* tag, const std::function<iwalk_status(iwalk_report**)>& run,
             Artifacts& out) {
  iwalk_report* r = nullptr;
  if (run(&r) != IWALK_OK) {
    std::fprintf(stderr, "%s failed: %s\n", tag, iwalk_last_error());
    return false;
  }
  for (std::size_t i = 0; i < iwalk_report_artifact_count(r); ++i)
    out[iwalk_report_artifact_name(r, i)] = iwalk_report_artifact_text(r, i);
  for (std::size_t i = 0; i < iwalk_report_scalar_count(r); ++i)
    out[std::string(tag) + ":" + iwalk_report_scalar_name(r, i)] =
        fmt("%.17g", iwalk_report_scalar_value(r, i));
  out[std::string(tag) + ":summary"] = iwalk_report_summary(r);
  iwalk_report_free(r);
  return true;
}

bool pipeline(const char* model, Artifacts& out) {
  iwalk_truncation t = iwalk_truncation_default();
  t.sites = 300;
  t.n_cap = 20000;
  iwalk_env* env = nullptr;
  if (iwalk_env_random(model, 2718, &t, &env) != IWALK_OK) return false;
  char* text = nullptr;
  iwalk_env_to_json(env, &text);
  out["env.json"] = text;
  iwalk_string_free(text);
  bool ok = collect("env", [&](iwalk_report** r) { return iwalk_run_env_tables(env, nullptr, 10.0, r); }, out);
  const std::size_t ns[] = {0, 40, 200};
  ok = ok && collect("exact", [&](iwalk_report** r) { return iwalk_run_exact(env, ns, 3, nullptr, r); }, out);
  auto mc = iwalk_mc_options_default();
  mc.paths = 5000;
  mc.horizon = 200;
  mc.seed = 11;
  ok = ok && collect("mc", [&](iwalk_report** r) { return iwalk_run_mc(env, &mc, nullptr, r); }, out);
  auto dy = iwalk_dynsys_options_default();
  dy.paths = 5000;
  dy.horizon = 40;
  dy.seed = 12;
  ok = ok && collect("dynsys", [&](iwalk_report** r) { return iwalk_run_dynsys(env, &dy, nullptr, r); }, out);
  const std::size_t xs[] = {20};
  ok = ok && collect("llt", [&](iwalk_report** r) {
    return iwalk_run_llt(env, ns + 1, 2, xs, 1, nullptr, nullptr, r);
  }, out);
  ok = ok && collect("clt", [&](iwalk_report** r) { return iwalk_run_clt(env, ns + 1, 2, nullptr, nullptr, r); }, out);
  auto sl = iwalk_slln_options_default();
  sl.paths = 100;
  sl.horizon = 2000;
  sl.seed = 13;
  ok = ok && collect("slln", [&](iwalk_report** r) { return iwalk_run_slln(env, &sl, nullptr, nullptr, r); }, out);
  iwalk_env_free(env);
  return ok;
}

Outcome reproducibility() {
  const char* model = R"({"kind": "iid", "family": "powerlaw", "marginals": [{"uniform": [2.5, 4.0]}]})";
  Artifacts a, b;
  const bool ran = pipeline(model, a) && pipeline(model, b);
  std::size_t differing = 0;
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    if (it == b.end() || it->second != v) ++differing;
  }
  differing += a.size() != b.size();
  RandomEnvModel m = RandomEnvModel::from_json(json::parse(model));
  Truncation t = trunc_sites(500);
  const auto small = sample_environment(m, 2718, t);
  t.sites = 501;
  const auto large = sample_environment(m, 2718, t);
  std::size_t mismatched_sites = 0;
  for (std::size_t x = 0; x < 500; ++x)
    mismatched_sites += !small.environment.site(x).same_values(large.environment.site(x));
  return {ran && differing == 0 && mismatched_sites == 0,
          fmt("%zu outputs compared, %zu differ; shift consistency 500 vs 501 sites: %zu mismatches",
              a.size(), differing, mismatched_sites)};
}

// ---- 10 ----------------------------------------------------------------

Outcome violation_detection() {
  const auto env = env_from_powerlaw(1.5, trunc_sites(1000));
  const auto d = diagnose(env);
  const auto fit = fit_limit_params(d);
  iwalk_truncation t = iwalk_truncation_default();
  t.sites = 1000;
  iwalk_env* h = nullptr;
  iwalk_report* r = nullptr;
  iwalk_status st = IWALK_E_INTERNAL;
  if (iwalk_env_powerlaw(1.5, &t, &h) == IWALK_OK) {
    const std::size_t ns[] = {500};
    st = iwalk_run_clt(h, ns, 1, nullptr, nullptr, &r);
  }
  const std::string err = st == IWALK_OK ? "" : iwalk_last_error();
  iwalk_report_free(r);
  iwalk_env_free(h);
  const bool ok = !fit.variance_converged && !fit.params && st == IWALK_E_NUMERIC && r == nullptr;
  std::string reasons;
  for (const auto& s : fit.reasons) reasons += (reasons.empty() ? "" : "; ") + s;
  return {ok, fmt("fit converged=%d, CLT status %d, reason: %s", int(fit.variance_converged), int(st),
                  reasons.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"hitting-time convolution vs enumeration", oracle_equivalence},
      {"sojourn moment identities", moment_identities},
      {"walk / dynamical system equivalence", walk_dynamics_equivalence},
      {"central limit distance", clt},
      {"local limit predictor", llt},
      {"local limit error decomposition", decomposition},
      {"strong law", slln},
      {"intermittent map tail bounds", lsv_bounds},
      {"quenched reproducibility", reproducibility},
      {"hypothesis violation detection", violation_detection},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%zu] %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
