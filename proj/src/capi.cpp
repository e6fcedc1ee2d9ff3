#include "iwalk/iwalk.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <filesystem>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iwalk/diagnostics.hpp"
#include "iwalk/dynsys.hpp"
#include "iwalk/environment.hpp"
#include "iwalk/error.hpp"
#include "iwalk/limits.hpp"
#include "iwalk/random_env.hpp"
#include "iwalk/reports.hpp"
#include "iwalk/walk.hpp"

using namespace iwalk;

struct iwalk_env {
  Environment env;
  /// Set for quenched samples so the environment can be re-materialized
  /// on more sites with an identical prefix.
  std::optional<RandomEnvModel> model;
  std::uint64_t seed = 0;
  Truncation trunc;
};

struct iwalk_report {
  std::vector<std::pair<std::string, std::string>> artifacts;
  std::vector<std::pair<std::string, double>> scalars;
  std::string summary;

  void add(std::string name, std::string text) {
    artifacts.emplace_back(std::move(name), std::move(text));
  }
  void scalar(std::string name, double v) { scalars.emplace_back(std::move(name), v); }
  void line(const std::string& s) { summary += s + "\n"; }
};

namespace {

thread_local std::string g_last_error;

template <class F>
iwalk_status guarded(F&& f) noexcept {
  try {
    g_last_error.clear();
    f();
    return IWALK_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<iwalk_status>(static_cast<int>(e.kind()));
  } catch (const json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return IWALK_E_VALIDATION;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return IWALK_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return IWALK_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return IWALK_E_INTERNAL;
  }
}

template <class T>
T& require(T* p, const char* what) {
  if (!p) throw ValidationError(std::string(what) + " must not be null");
  return *p;
}

const char* cstr(const char* p, const char* what) {
  if (!p) throw ValidationError(std::string(what) + " must not be null");
  return p;
}

Truncation to_trunc(const iwalk_truncation* t) {
  Truncation out;
  if (t) {
    out.sites = t->sites;
    out.n_cap = t->n_cap;
    out.tail_tol = t->tail_tol;
  }
  return out;
}

iwalk_env* wrap(Environment env) { return new iwalk_env{std::move(env), std::nullopt, 0, {}}; }

/// Re-reads the random model from a descriptor so file-loaded quenched
/// samples stay extendable.
void attach_model(iwalk_env& h) {
  const json& d = h.env.descriptor();
  if (d.value("kind", std::string()) != "random" || !d.contains("model")) return;
  h.model = RandomEnvModel::from_json(d["model"]);
  h.seed = d.value("seed", std::uint64_t{0});
  h.trunc.n_cap = d.value("n_cap", h.trunc.n_cap);
  h.trunc.tail_tol = d.value("tail_tol", h.trunc.tail_tol);
  h.trunc.sites = h.env.size();
}

/// The environment on at least `needed` sites when it can be extended;
/// unchanged otherwise (callers surface the shortfall).
Environment with_sites(const iwalk_env& h, std::size_t needed) {
  if (h.env.size() >= needed) return h.env;
  if (h.model) {
    Truncation t = h.trunc;
    t.sites = needed;
    return sample_environment(*h.model, h.seed, t).environment;
  }
  try {
    return h.env.extended(needed);
  } catch (const ValidationError&) {
    return h.env;
  }
}

iwalk_numeric_options numeric(const iwalk_numeric_options* o) {
  return o ? *o : iwalk_numeric_options_default();
}

ExactOptions exact_opts(const iwalk_numeric_options& o) {
  ExactOptions e;
  e.trunc_tol = o.trunc_tol;
  e.deficit_budget = o.deficit_budget;
  return e;
}

EnvDiagnostics diagnose(const Environment& env, const iwalk_numeric_options& o,
                        std::size_t sites) {
  std::vector<double> beta;
  if (std::isnan(o.beta)) {
    beta = beta_for(env, sites, std::isnan(o.default_beta) ? std::nullopt
                                                           : std::optional<double>(o.default_beta));
  } else {
    beta = {o.beta};
  }
  return diagnostics(env, beta, sites);
}

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : "; ") + p;
  return s;
}

LimitParams resolve_params(const EnvDiagnostics& diag, const iwalk_limit_options& l,
                           LimitFit* fit_out = nullptr) {
  if (!std::isnan(l.mu) && !std::isnan(l.sigma2)) {
    return LimitParams::make(l.mu, l.sigma2, l.eta, LimitParams::Source::supplied);
  }
  LimitFit fit = fit_limit_params(diag, l.eta);
  if (fit_out) *fit_out = fit;
  if (!fit.variance_converged) {
    throw NumericError("sigma^2 fit did not converge: " + join(fit.reasons) +
                       "; no limit report produced");
  }
  const double mu = std::isnan(l.mu) ? fit.mu_hat : l.mu;
  const double s2 = std::isnan(l.sigma2) ? fit.sigma2_hat : l.sigma2;
  if (!(mu > 1.0)) throw NumericError("mu = " + format_real(mu) + " <= 1 is outside the hypotheses");
  return LimitParams::make(mu, s2, l.eta,
                           std::isnan(l.mu) || std::isnan(l.sigma2) ? LimitParams::Source::fitted
                                                                   : LimitParams::Source::supplied);
}

std::vector<std::size_t> grid(const size_t* n_grid, size_t count) {
  if (count == 0 || !n_grid) throw ValidationError("empty n grid");
  return std::vector<std::size_t>(n_grid, n_grid + count);
}

std::size_t max_of(const std::vector<std::size_t>& v) {
  std::size_t m = 0;
  for (auto x : v) m = std::max(m, x);
  return m;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string n_name(const char* stem, std::size_t n, const char* ext) {
  return std::string(stem) + "_n" + std::to_string(n) + ext;
}

}  // namespace

extern "C" {

const char* iwalk_last_error(void) { return g_last_error.c_str(); }
const char* iwalk_version(void) { return "0.1.0"; }
void iwalk_string_free(char* s) { std::free(s); }

iwalk_truncation iwalk_truncation_default(void) {
  const Truncation t;
  return {t.sites, t.n_cap, t.tail_tol};
}

iwalk_status iwalk_env_geometric(double r, const iwalk_truncation* t, iwalk_env** out) {
  return guarded([&] { require(out, "out") = wrap(env_geometric(r, to_trunc(t))); });
}

iwalk_status iwalk_env_powerlaw(double beta, const iwalk_truncation* t, iwalk_env** out) {
  return guarded([&] { require(out, "out") = wrap(env_from_powerlaw(beta, to_trunc(t))); });
}

iwalk_status iwalk_env_lsv(double alpha, double c, double kappa, const iwalk_truncation* t,
                           iwalk_env** out) {
  return guarded([&] {
    if (std::isnan(c) == std::isnan(kappa)) {
      throw ValidationError("give exactly one of c and kappa for the LSV family");
    }
    const LsvParams p =
        std::isnan(kappa) ? LsvParams::from_alpha_c(alpha, c) : LsvParams::from_alpha_kappa(alpha, kappa);
    require(out, "out") = wrap(env_from_lsv(p, to_trunc(t)));
  });
}

iwalk_status iwalk_env_degenerate(size_t sites, iwalk_env** out) {
  return guarded([&] {
    if (sites == 0) throw ValidationError("need at least one site");
    require(out, "out") = wrap(env_degenerate(sites));
  });
}

iwalk_status iwalk_env_random(const char* model_json, uint64_t seed, const iwalk_truncation* t,
                              iwalk_env** out) {
  return guarded([&] {
    const RandomEnvModel model = RandomEnvModel::from_json(json::parse(cstr(model_json, "model")));
    const Truncation tr = to_trunc(t);
    QuenchedSample s = sample_environment(model, seed, tr);
    require(out, "out") = new iwalk_env{std::move(s.environment), model, seed, tr};
  });
}

iwalk_status iwalk_env_parse(const char* json_text, iwalk_env** out) {
  return guarded([&] {
    auto* h = wrap(environment_from_json(cstr(json_text, "json_text")));
    try {
      attach_model(*h);
    } catch (...) {
      delete h;
      throw;
    }
    require(out, "out") = h;
  });
}

iwalk_status iwalk_env_read(const char* path, iwalk_env** out) {
  return guarded([&] {
    const std::string text = read_text_file(cstr(path, "path"));
    auto* h = wrap(environment_from_json(text));
    try {
      attach_model(*h);
    } catch (...) {
      delete h;
      throw;
    }
    require(out, "out") = h;
  });
}

iwalk_status iwalk_env_to_json(const iwalk_env* env, char** out) {
  return guarded([&] { require(out, "out") = dup_string(environment_to_json(require(env, "env").env)); });
}

size_t iwalk_env_size(const iwalk_env* env) { return env ? env->env.size() : 0; }

iwalk_status iwalk_env_omega(const iwalk_env* env, size_t x, size_t n, double* out) {
  return guarded([&] { require(out, "out") = require(env, "env").env.site(x).omega(n); });
}

iwalk_status iwalk_env_deficit(const iwalk_env* env, size_t x, double* out) {
  return guarded([&] { require(out, "out") = require(env, "env").env.site(x).deficit(); });
}

void iwalk_env_free(iwalk_env* env) { delete env; }

size_t iwalk_report_artifact_count(const iwalk_report* r) { return r ? r->artifacts.size() : 0; }

const char* iwalk_report_artifact_name(const iwalk_report* r, size_t i) {
  return r && i < r->artifacts.size() ? r->artifacts[i].first.c_str() : nullptr;
}

const char* iwalk_report_artifact_text(const iwalk_report* r, size_t i) {
  return r && i < r->artifacts.size() ? r->artifacts[i].second.c_str() : nullptr;
}

size_t iwalk_report_scalar_count(const iwalk_report* r) { return r ? r->scalars.size() : 0; }

const char* iwalk_report_scalar_name(const iwalk_report* r, size_t i) {
  return r && i < r->scalars.size() ? r->scalars[i].first.c_str() : nullptr;
}

double iwalk_report_scalar_value(const iwalk_report* r, size_t i) {
  return r && i < r->scalars.size() ? r->scalars[i].second
                                    : std::numeric_limits<double>::quiet_NaN();
}

iwalk_status iwalk_report_scalar(const iwalk_report* r, const char* name, double* out) {
  return guarded([&] {
    const std::string key = cstr(name, "name");
    for (const auto& [k, v] : require(r, "report").scalars) {
      if (k == key) {
        require(out, "out") = v;
        return;
      }
    }
    throw ValidationError("report has no scalar named '" + key + "'");
  });
}

const char* iwalk_report_summary(const iwalk_report* r) { return r ? r->summary.c_str() : ""; }

iwalk_status iwalk_report_write(const iwalk_report* r, const char* dir, int overwrite) {
  return guarded([&] {
    namespace fs = std::filesystem;
    const fs::path base(cstr(dir, "dir"));
    std::error_code ec;
    fs::create_directories(base, ec);
    if (ec) throw IoError("cannot create directory " + base.string() + ": " + ec.message());
    const auto& rep = require(r, "report");
    if (!overwrite) {
      for (const auto& [name, text] : rep.artifacts) {
        if (fs::exists(base / name, ec)) {
          throw IoError("refusing to overwrite existing file " + (base / name).string() +
                        " (use --force)");
        }
      }
    }
    for (const auto& [name, text] : rep.artifacts) {
      write_text_file((base / name).string(), text, overwrite != 0);
    }
  });
}

void iwalk_report_free(iwalk_report* r) { delete r; }

iwalk_numeric_options iwalk_numeric_options_default(void) {
  const ExactOptions e;
  return {std::numeric_limits<double>::quiet_NaN(), 3.0, e.trunc_tol, e.deficit_budget};
}

iwalk_status iwalk_run_env_tables(const iwalk_env* env, const iwalk_numeric_options* o,
                                  double q, iwalk_report** out) {
  return guarded([&] {
    const auto& h = require(env, "env");
    const auto opts = numeric(o);
    auto rep = std::make_unique<iwalk_report>();
    const EnvDiagnostics diag = diagnose(h.env, opts, h.env.size());
    rep->add("diagnostics.csv", diagnostics_csv(diag));
    rep->add("generalized_inverse.csv", generalized_inverse_csv(diag));
    rep->scalar("sites", double(diag.sites));
    rep->scalar("beta_star", diag.beta_star);
    rep->scalar("mu_hat", diag.mu_ref);
    rep->scalar("sigma2_hat", diag.sigma2_ref);
    rep->line("sites " + std::to_string(diag.sites) + ", beta_* " + format_real(diag.beta_star) +
              ", mu_X/X " + format_real(diag.mu_ref) + ", sigma_X^2/X " +
              format_real(diag.sigma2_ref));
    if (diag.sites >= 100) {
      const LimitFit fit = fit_limit_params(diag, 0.0);
      rep->add("fit.json", fit_json(fit).dump(2) + "\n");
      rep->add("fit_residuals.csv", fit_residuals_csv(diag, fit));
      rep->scalar("variance_converged", fit.variance_converged ? 1.0 : 0.0);
      rep->line(fit.variance_converged ? "variance fit converged"
                                       : "variance fit NOT converged: " + join(fit.reasons));
    } else {
      rep->line("limit fit skipped: fewer than 100 sites");
    }
    if (h.model) {
      const json& d = h.env.descriptor();
      std::vector<SiteParams> trace;
      for (const auto& j : d.at("parameter_trace")) trace.push_back(site_params_from_json(j));
      const QuenchedSample sample{h.env, trace, *h.model, h.seed};
      const std::optional<double> fallback =
          std::isnan(opts.default_beta) ? std::nullopt : std::optional<double>(opts.default_beta);
      const MomentReport mr = moment_report(sample, q, fallback);
      const json model = {{"model", h.model->to_json()},
                          {"seed", h.seed},
                          {"moment_report", moment_report_json(mr)}};
      rep->add("model.json", model.dump(2) + "\n");
    }
    require(out, "out") = rep.release();
  });
}

iwalk_status iwalk_run_exact(const iwalk_env* env, const size_t* n_grid, size_t count,
                             const iwalk_numeric_options* o, iwalk_report** out) {
  return guarded([&] {
    const auto& h = require(env, "env");
    const auto ns = grid(n_grid, count);
    const Environment e = with_sites(h, max_of(ns) + 1);
    const auto laws = position_laws(e, ns, exact_opts(numeric(o)));
    auto rep = std::make_unique<iwalk_report>();
    for (const auto& law : laws) {
      rep->add(n_name("exact", law.n, ".csv"), position_csv(law));
      rep->scalar(n_name("deficit", law.n, ""), law.deficit);
      rep->line("n " + std::to_string(law.n) + ": deficit " + format_real(law.deficit));
    }
    require(out, "out") = rep.release();
  });
}

iwalk_mc_options iwalk_mc_options_default(void) {
  return {1000, 100, 0, IWALK_RECORD_ENDPOINT, IWALK_ENGINE_CHAIN, 0};
}

iwalk_status iwalk_run_mc(const iwalk_env* env, const iwalk_mc_options* mc,
                          const iwalk_numeric_options* o, iwalk_report** out) {
  return guarded([&] {
    const auto& h = require(env, "env");
    const auto& m = require(mc, "mc options");
    const auto opts = numeric(o);
    McConfig cfg;
    cfg.paths = m.paths;
    cfg.horizon = m.horizon;
    cfg.seed = m.seed;
    cfg.hit_sites = m.hit_sites;
    cfg.engine = m.engine == IWALK_ENGINE_RENEWAL ? WalkEngine::renewal : WalkEngine::chain;
    switch (m.record) {
      case IWALK_RECORD_ENDPOINT: cfg.record = RecordMode::endpoint; break;
      case IWALK_RECORD_FULL_PATH: cfg.record = RecordMode::full_path; break;
      case IWALK_RECORD_HITTING_TIMES: cfg.record = RecordMode::hitting_times; break;
      default: throw ValidationError("unknown record mode");
    }
    const bool hitting = cfg.record == RecordMode::hitting_times;
    const Environment e = with_sites(h, hitting ? std::max<std::size_t>(cfg.hit_sites, 1)
                                                : cfg.horizon + 1);
    const McResult r = simulate_paths(e, cfg);
    auto rep = std::make_unique<iwalk_report>();
    rep->scalar("truncated_draws", double(r.truncated_draws));
    if (hitting) {
      const EnvDiagnostics diag = diagnose(e, opts, std::max<std::size_t>(cfg.hit_sites, 1));
      rep->add("mc_hitting.csv", hitting_csv(r, diag));
      double worst = 0.0;
      for (std::size_t x = 1; x < r.hit_mean.size() && x < diag.mu.size(); ++x) {
        const double se = std::sqrt(r.hit_var[x] / double(r.paths));
        if (se > 0.0) worst = std::max(worst, std::abs(r.hit_mean[x] - diag.mu[x]) / se);
      }
      rep->scalar("max_standard_errors", worst);
      rep->line("hitting times T_0..T_" + std::to_string(cfg.hit_sites) +
                ": largest deviation from mu_x " + format_real(worst) + " standard errors");
    } else {
      rep->add("mc_endpoint.csv", endpoint_csv(r));
      if (cfg.record == RecordMode::full_path) rep->add("mc_paths.csv", path_records_csv(r));
      // The matched exact law is affordable for moderate horizons.
      if (cfg.horizon <= 10000) {
        const std::size_t ns[] = {cfg.horizon};
        const auto law = position_laws(e, ns, exact_opts(opts)).front();
        const double tv = total_variation(r.endpoint_counts, law.prob);
        std::size_t support = 0;
        for (double p : law.prob) support += p > 0.0;
        const double tol = 4.0 * std::sqrt(double(std::max<std::size_t>(support, 1)) / double(r.paths));
        rep->add("mc_exact.csv", position_csv(law));
        rep->scalar("tv", tv);
        rep->scalar("tv_tolerance", tol);
        rep->line("TV(MC, exact) at n " + std::to_string(cfg.horizon) + " = " + format_real(tv) +
                  " (tolerance " + format_real(tol) + (tv <= tol ? ", within)" : ", EXCEEDED)"));
      }
    }
    require(out, "out") = rep.release();
  });
}

iwalk_dynsys_options iwalk_dynsys_options_default(void) {
  return {100000, 50, 0, 1, nullptr, 0};
}

iwalk_status iwalk_run_dynsys(const iwalk_env* env, const iwalk_dynsys_options* d,
                              const iwalk_numeric_options* o, iwalk_report** out) {
  return guarded([&] {
    const auto& h = require(env, "env");
    const auto& dd = require(d, "dynsys options");
    TrajectoryConfig cfg;
    cfg.paths = dd.paths;
    cfg.horizon = dd.horizon;
    cfg.seed = dd.seed;
    cfg.precision = dd.extended_precision ? Precision::extended : Precision::binary64;
    if (dd.times && dd.time_count) cfg.record_times.assign(dd.times, dd.times + dd.time_count);
    const Environment e = with_sites(h, cfg.horizon + 1);
    const TrajectoryResult r = simulate_trajectories(e, cfg);
    const auto laws = position_laws(e, r.times, exact_opts(numeric(o)));
    auto rep = std::make_unique<iwalk_report>();
    rep->add("dynsys_cells.csv", cells_csv(r));
    rep->add("dynsys_levels.csv", levels_csv(r));
    std::string exact = "n,x,prob,deficit_bound\n";
    std::string tv_csv = "n,tv,level_tv,tolerance,flagged,paths,within\n";
    for (std::size_t t = 0; t < r.times.size(); ++t) {
      const auto& law = laws[t];
      std::size_t support = 0;
      for (std::size_t x = 0; x < law.prob.size(); ++x) {
        exact += std::to_string(law.n) + "," + std::to_string(x) + "," + format_real(law.prob[x]) +
                 "," + format_real(law.deficit_bound[x]) + "\n";
        support += law.prob[x] > 0.0;
      }
      const std::uint64_t used = r.paths - r.flagged[t];
      const double tol = 4.0 * std::sqrt(double(std::max<std::size_t>(support, 1)) / double(used));
      const double tv = total_variation(r.cell_counts[t], law.prob);
      const auto levels = level_distribution(e, law.n, exact_opts(numeric(o)));
      double level_tv = 0.0, covered = 0.0;
      for (std::size_t x = 0; x < levels.size(); ++x) {
        for (std::size_t y = 0; y < levels[x].size(); ++y) {
          const auto it = r.level_counts[t].find({x, y});
          const double emp = it == r.level_counts[t].end() ? 0.0 : double(it->second) / double(used);
          level_tv += std::abs(emp - levels[x][y]);
          covered += emp;
        }
      }
      level_tv = 0.5 * (level_tv + (1.0 - covered));
      tv_csv += std::to_string(law.n) + "," + format_real(tv) + "," + format_real(level_tv) + "," +
                format_real(tol) + "," + std::to_string(r.flagged[t]) + "," +
                std::to_string(r.paths) + "," + (tv <= tol ? "1" : "0") + "\n";
      rep->scalar(n_name("tv", law.n, ""), tv);
      rep->scalar(n_name("level_tv", law.n, ""), level_tv);
      rep->scalar(n_name("tolerance", law.n, ""), tol);
      rep->scalar(n_name("flagged", law.n, ""), double(r.flagged[t]));
      rep->line("n " + std::to_string(law.n) + ": TV(cells, exact) " + format_real(tv) +
                ", level TV " + format_real(level_tv) + ", tolerance " + format_real(tol) +
                ", flagged paths " + std::to_string(r.flagged[t]));
    }
    rep->add("dynsys_exact.csv", std::move(exact));
    rep->add("dynsys_tv.csv", std::move(tv_csv));
    require(out, "out") = rep.release();
  });
}

iwalk_limit_options iwalk_limit_options_default(void) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, 0.0};
}

iwalk_status iwalk_run_llt(const iwalk_env* env, const size_t* n_grid, size_t count,
                           const size_t* decomposition_x, size_t x_count,
                           const iwalk_limit_options* l, const iwalk_numeric_options* o,
                           iwalk_report** out) {
  return guarded([&] {
    const auto& h = require(env, "env");
    const auto ns = grid(n_grid, count);
    const auto opts = numeric(o);
    const auto lim = l ? *l : iwalk_limit_options_default();
    std::vector<std::size_t> xs;
    if (decomposition_x && x_count) xs.assign(decomposition_x, decomposition_x + x_count);
    const Environment e = with_sites(h, max_of(ns) + 1);
    const EnvDiagnostics diag = diagnose(e, opts, e.size());
    const LimitParams params = resolve_params(diag, lim);
    const auto reports = llt_reports(e, params, diag, ns, exact_opts(opts));
    auto rep = std::make_unique<iwalk_report>();
    rep->scalar("mu", params.mu);
    rep->scalar("sigma2", params.sigma2);
    for (const auto& r : reports) {
      rep->add(n_name("llt", r.n, ".json"), llt_report_json(r).dump() + "\n");
      rep->scalar(n_name("sup_err_scaled", r.n, ""), r.sup_err_scaled);
      rep->scalar(n_name("sup_slack_scaled", r.n, ""), r.sup_slack_scaled);
      rep->line("n " + std::to_string(r.n) + ": sqrt(n) sup|exact - predictor| = " +
                format_real(r.sup_err_scaled) + " (interval slack " +
                format_real(r.sup_slack_scaled) + ")");
    }
    rep->add("llt_summary.csv", llt_summary_csv(reports));
    if (!xs.empty()) {
      // Decompose over the bulk of each T_x; M_n has to reach its far end,
      // so the diagnosed prefix may need more sites than the LLT grid.
      Environment de = with_sites(h, std::max(e.size(), max_of(xs) + 1));
      EnvDiagnostics dd = diagnose(de, opts, de.size());
      std::size_t n_hi = 0;
      for (auto x : xs) {
        const double sd = std::sqrt(std::max(dd.sigma2[x], 1.0));
        for (double span = 20.0;; span *= 2.0) {
          const auto cap = std::int64_t(std::ceil(dd.mu[x] + span * sd));
          const auto t = hitting_time_distribution(de, x, cap, exact_opts(opts));
          double mass = 0.0;
          std::int64_t n = t.min_support();
          for (; n < t.max_support(); ++n) {
            mass += t.prob(n);
            if (mass >= 1.0 - 1e-6) break;
          }
          if (mass >= 1.0 - 1e-6 || t.deficit > 1e-6 || span > 1e6) {
            n_hi = std::max(n_hi, std::size_t(n));
            break;
          }
        }
      }
      while (dd.M.size() <= n_hi && de.size() < (std::size_t(1) << 21)) {
        const double per_site = std::max(dd.mu[dd.sites] / double(dd.sites), 1.0);
        const auto want = std::size_t(double(n_hi) / per_site * 1.1) + 16;
        const Environment grown = with_sites(h, std::max(want, 2 * de.size()));
        if (grown.size() == de.size()) break;
        de = grown;
        dd = diagnose(de, opts, de.size());
      }
      const auto rows = llt_error_decomposition(de, params, dd, xs, exact_opts(opts), n_hi);
      rep->scalar("decomposition_n_max", double(n_hi));
      rep->add("llt_decomposition.csv", decomposition_csv(rows));
      for (auto x : xs) {
        double e1 = 0.0, resid = 0.0;
        for (const auto& d : rows) {
          if (d.x != x) continue;
          e1 = std::max(e1, std::abs(d.e1));
          resid = std::max(resid, std::abs(d.residual));
        }
        rep->scalar("sqrt_x_max_E1_x" + std::to_string(x), std::sqrt(double(x)) * e1);
        rep->scalar("max_residual_x" + std::to_string(x), resid);
        rep->line("x " + std::to_string(x) + ": sqrt(x) max_n |E1| = " +
                  format_real(std::sqrt(double(x)) * e1));
      }
    }
    require(out, "out") = rep.release();
  });
}

iwalk_status iwalk_run_clt(const iwalk_env* env, const size_t* n_grid, size_t count,
                           const iwalk_limit_options* l, const iwalk_numeric_options* o,
                           iwalk_report** out) {
  return guarded([&] {
    const auto& h = require(env, "env");
    const auto ns = grid(n_grid, count);
    const auto opts = numeric(o);
    const Environment e = with_sites(h, max_of(ns) + 1);
    const EnvDiagnostics diag = diagnose(e, opts, e.size());
    const LimitParams params = resolve_params(diag, l ? *l : iwalk_limit_options_default());
    const auto rows = clt_report(e, params, diag, ns, exact_opts(opts));
    auto rep = std::make_unique<iwalk_report>();
    rep->add("clt.csv", clt_csv(rows));
    for (const auto& r : rows) {
      rep->scalar(n_name("kolmogorov_x", r.n, ""), r.kolmogorov_x);
      rep->scalar(n_name("kolmogorov_t", r.n, ""), r.kolmogorov_t);
      rep->line("n " + std::to_string(r.n) + ": Kolmogorov X_n " + format_real(r.kolmogorov_x) +
                ", T_" + std::to_string(r.x_for_t) + " " + format_real(r.kolmogorov_t));
    }
    require(out, "out") = rep.release();
  });
}

iwalk_slln_options iwalk_slln_options_default(void) { return {1000, 100000, 0, 100, 0.02}; }

iwalk_status iwalk_run_slln(const iwalk_env* env, const iwalk_slln_options* s,
                            const iwalk_limit_options* l, const iwalk_numeric_options* o,
                            iwalk_report** out) {
  return guarded([&] {
    const auto& h = require(env, "env");
    const auto& so = require(s, "slln options");
    if (so.checkpoints == 0) throw ValidationError("need at least one checkpoint");
    if (so.horizon == 0) throw ValidationError("horizon must be positive");
    const Environment e = with_sites(h, so.horizon + 1);
    double mu = l ? l->mu : std::numeric_limits<double>::quiet_NaN();
    if (std::isnan(mu)) {
      const EnvDiagnostics diag = diagnose(e, numeric(o), e.size());
      mu = diag.mu_ref;
    }
    McConfig cfg;
    cfg.paths = so.paths;
    cfg.horizon = so.horizon;
    cfg.seed = so.seed;
    cfg.engine = WalkEngine::renewal;
    const std::size_t c = std::min(so.checkpoints, so.horizon);
    for (std::size_t k = 1; k <= c; ++k) {
      const std::size_t t = so.horizon * k / c;
      if (cfg.checkpoints.empty() || t > cfg.checkpoints.back()) cfg.checkpoints.push_back(t);
    }
    const McResult r = simulate_paths(e, cfg);
    const SllnReport rep_s = slln_report(r, mu, so.band);
    auto rep = std::make_unique<iwalk_report>();
    rep->add("slln.csv", slln_csv(rep_s));
    rep->add("slln_paths.csv", slln_paths_csv(rep_s));
    rep->scalar("mu", mu);
    rep->scalar("within_hypothesis", rep_s.within_hypothesis ? 1.0 : 0.0);
    rep->scalar("frac_within_at_horizon", rep_s.frac_within_at_horizon);
    rep->scalar("frac_within_tail", rep_s.frac_within_tail);
    rep->scalar("implied_mu", rep_s.implied_mu);
    if (!rep_s.within_hypothesis) {
      rep->line("mu = " + format_real(mu) + " <= 1: outside the hypotheses, reported only");
    }
    rep->line("horizon " + std::to_string(so.horizon) + ": " +
              format_real(100.0 * rep_s.frac_within_at_horizon) + "% of paths within " +
              format_real(so.band) + " of 1/mu; regression gives mu " +
              format_real(rep_s.implied_mu));
    require(out, "out") = rep.release();
  });
}

}  // extern "C"
