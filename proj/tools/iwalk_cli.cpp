// Command-line front end over the C API.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iwalk/iwalk.h"

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Raised after a failed library call; carries the exit code.
struct Failure {
  int code;
};

void check(iwalk_status s) {
  if (s != IWALK_OK) {
    std::cerr << "error: " << iwalk_last_error() << "\n";
    if (s == IWALK_E_NUMERIC) {
      std::cerr << "hint: raise --ncap, lower --tail-tol, materialize more sites with --xmax, "
                   "or relax --deficit-budget\n";
    }
    throw Failure{static_cast<int>(s)};
  }
}

// Ready-made random models selectable by name.
const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> m = {
      {"iid-powerlaw",
       R"({"kind":"iid","family":"powerlaw","marginals":[{"uniform":[2.5,4.0]}]})"},
      {"iid-geometric",
       R"({"kind":"iid","family":"geometric","marginals":[{"uniform":[0.3,0.7]}]})"},
      {"iid-lsv",
       R"({"kind":"iid","family":"lsv","marginals":[{"uniform":[0.2,0.4]},{"values":[0.5]}]})"},
      {"window-powerlaw",
       R"({"kind":"moving_window","window":3,"family":"powerlaw","marginals":[{"uniform":[2.5,4.0]}]})"},
      {"markov-powerlaw",
       R"({"kind":"markov","transition":[[0.7,0.3],[0.4,0.6]],)"
       R"("states":[{"family":"powerlaw","beta":2.5},{"family":"powerlaw","beta":4.0}]})"},
  };
  return m;
}

struct EnvSource {
  std::string file;
  std::string family;
  std::string random;
  double r = kNaN, beta = kNaN, alpha = kNaN, c = kNaN, kappa = kNaN;
  std::size_t xmax = 100;
  std::size_t ncap = 100000;
  double tail_tol = 1e-12;

  void add_to(CLI::App* app) {
    app->add_option("--env", file, "environment file written by the env command");
    app->add_option("--family", family, "geometric | powerlaw | lsv | degenerate")
        ->check(CLI::IsMember({"geometric", "powerlaw", "lsv", "degenerate"}));
    app->add_option("--random", random,
                    "random model: preset name (iid-powerlaw, iid-geometric, iid-lsv, "
                    "window-powerlaw, markov-powerlaw) or model JSON file");
    app->add_option("--r", r, "geometric ratio");
    app->add_option("--beta", beta, "power-law exponent");
    app->add_option("--alpha", alpha, "LSV exponent");
    app->add_option("--c", c, "LSV branch point");
    app->add_option("--kappa", kappa, "LSV coefficient (instead of --c)");
    app->add_option("--xmax", xmax, "number of materialized sites")->check(CLI::PositiveNumber);
    app->add_option("--ncap", ncap, "largest stored tail index")->check(CLI::PositiveNumber);
    app->add_option("--tail-tol", tail_tol, "truncate tails once omega_N <= tol");
  }

  iwalk_env* build(const std::optional<std::uint64_t>& seed) const {
    const int given = !file.empty() + !family.empty() + !random.empty();
    if (given != 1) {
      std::cerr << "error: give exactly one of --env, --family, --random\n";
      throw Failure{2};
    }
    iwalk_env* env = nullptr;
    if (!file.empty()) {
      check(iwalk_env_read(file.c_str(), &env));
      return env;
    }
    iwalk_truncation t{xmax, ncap, tail_tol};
    if (!random.empty()) {
      if (!seed) {
        std::cerr << "error: --random needs an explicit --seed\n";
        throw Failure{2};
      }
      std::string model;
      if (auto it = presets().find(random); it != presets().end()) {
        model = it->second;
      } else {
        std::ifstream in(random);
        if (!in) {
          std::cerr << "error: '" << random << "' is neither a preset nor a readable file\n";
          throw Failure{4};
        }
        std::stringstream ss;
        ss << in.rdbuf();
        model = ss.str();
      }
      check(iwalk_env_random(model.c_str(), *seed, &t, &env));
      return env;
    }
    auto need = [](double v, const char* flag) {
      if (std::isnan(v)) {
        std::cerr << "error: this family needs " << flag << "\n";
        throw Failure{2};
      }
    };
    if (family == "geometric") {
      need(r, "--r");
      check(iwalk_env_geometric(r, &t, &env));
    } else if (family == "powerlaw") {
      need(beta, "--beta");
      check(iwalk_env_powerlaw(beta, &t, &env));
    } else if (family == "lsv") {
      need(alpha, "--alpha");
      check(iwalk_env_lsv(alpha, c, kappa, &t, &env));
    } else {
      check(iwalk_env_degenerate(xmax, &env));
    }
    return env;
  }
};

struct Common {
  std::string out;
  bool force = false;
  std::optional<std::uint64_t> seed;
  double diag_beta = kNaN;
  double default_beta = 3.0;
  double trunc_tol = iwalk_numeric_options_default().trunc_tol;
  double deficit_budget = iwalk_numeric_options_default().deficit_budget;

  void add_to(CLI::App* app, bool seed_required) {
    auto* o = app->add_option("--seed", seed, "random seed (all randomness derives from it)");
    if (seed_required) o->required();
    app->add_option("--out", out, "output directory (default: $IWALK_OUT_DIR or .)");
    app->add_flag("--force", force, "overwrite existing output files");
    app->add_option("--diag-beta", diag_beta, "tail exponent for diagnostics (default: family's)");
    app->add_option("--default-beta", default_beta,
                    "tail exponent for families without one (default 3)");
    app->add_option("--trunc-tol", trunc_tol, "per-convolution trimming tolerance");
    app->add_option("--deficit-budget", deficit_budget, "largest tolerated untracked mass");
  }

  iwalk_numeric_options numeric() const {
    iwalk_numeric_options o = iwalk_numeric_options_default();
    o.beta = diag_beta;
    o.default_beta = default_beta;
    o.trunc_tol = trunc_tol;
    o.deficit_budget = deficit_budget;
    return o;
  }

  std::string out_dir() const {
    if (!out.empty()) return out;
    if (const char* e = std::getenv("IWALK_OUT_DIR"); e && *e) return e;
    return ".";
  }
};

struct EnvHandle {
  iwalk_env* p = nullptr;
  ~EnvHandle() { iwalk_env_free(p); }
};

struct ReportHandle {
  iwalk_report* p = nullptr;
  ~ReportHandle() { iwalk_report_free(p); }
};

void emit(const ReportHandle& r, const Common& common) {
  const std::string dir = common.out_dir();
  check(iwalk_report_write(r.p, dir.c_str(), common.force));
  std::cout << iwalk_report_summary(r.p);
  for (std::size_t i = 0; i < iwalk_report_artifact_count(r.p); ++i) {
    std::cout << "wrote " << dir << "/" << iwalk_report_artifact_name(r.p, i) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks in intermittent environments: exact laws, simulation, limit checks"};
  app.require_subcommand(1);

  EnvSource src;
  Common common;

  // env
  std::string env_name = "env.json";
  double q = 9.0;
  auto* env_cmd = app.add_subcommand("env", "build or sample an environment and tabulate it");
  src.add_to(env_cmd);
  common.add_to(env_cmd, false);
  env_cmd->add_option("--name", env_name, "environment file name inside --out");
  env_cmd->add_option("--q", q, "moment order for the random-model report");

  // exact
  std::vector<std::size_t> n_grid;
  auto* exact_cmd = app.add_subcommand("exact", "exact law of X_n");
  src.add_to(exact_cmd);
  common.add_to(exact_cmd, false);
  exact_cmd->add_option("--n", n_grid, "times n (comma separated)")->delimiter(',')->required();

  // mc
  iwalk_mc_options mc = iwalk_mc_options_default();
  std::string record = "endpoint", engine = "chain";
  auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo paths of the walk");
  src.add_to(mc_cmd);
  common.add_to(mc_cmd, true);
  mc_cmd->add_option("--paths", mc.paths, "number of paths")->check(CLI::PositiveNumber);
  mc_cmd->add_option("--n", mc.horizon, "horizon");
  mc_cmd->add_option("--record", record, "endpoint | full-path | hitting-times")
      ->check(CLI::IsMember({"endpoint", "full-path", "hitting-times"}));
  mc_cmd->add_option("--engine", engine, "chain | renewal")
      ->check(CLI::IsMember({"chain", "renewal"}));
  mc_cmd->add_option("--hit-sites", mc.hit_sites, "record T_0..T_k in hitting-times mode");

  // dynsys
  iwalk_dynsys_options dyn = iwalk_dynsys_options_default();
  std::vector<std::size_t> times;
  std::string precision = "extended";
  auto* dyn_cmd = app.add_subcommand("dynsys", "trajectories of the extended dynamical system");
  src.add_to(dyn_cmd);
  common.add_to(dyn_cmd, true);
  dyn_cmd->add_option("--paths", dyn.paths, "number of trajectories")->check(CLI::PositiveNumber);
  dyn_cmd->add_option("--n", dyn.horizon, "horizon");
  dyn_cmd->add_option("--times", times, "record times (comma separated, default: horizon)")
      ->delimiter(',');
  dyn_cmd->add_option("--precision", precision, "double | extended")
      ->check(CLI::IsMember({"double", "extended"}));

  // llt / clt limit parameters
  iwalk_limit_options lim = iwalk_limit_options_default();
  auto add_limit = [&](CLI::App* cmd) {
    cmd->add_option("--mu", lim.mu, "mu (default: fitted)");
    cmd->add_option("--sigma2", lim.sigma2, "sigma^2 (default: fitted)");
    cmd->add_option("--eta", lim.eta, "rate exponent eta in [0, 1/2)");
  };

  std::vector<std::size_t> decompose;
  auto* llt_cmd = app.add_subcommand("llt", "local limit predictor against the exact law");
  src.add_to(llt_cmd);
  common.add_to(llt_cmd, false);
  add_limit(llt_cmd);
  llt_cmd->add_option("--n", n_grid, "times n (comma separated)")->delimiter(',')->required();
  llt_cmd->add_option("--decompose", decompose, "sites x for the E1/E2/E3 table")->delimiter(',');

  auto* clt_cmd = app.add_subcommand("clt", "Kolmogorov distances to the normal limit");
  src.add_to(clt_cmd);
  common.add_to(clt_cmd, false);
  add_limit(clt_cmd);
  clt_cmd->add_option("--n", n_grid, "times n (comma separated)")->delimiter(',')->required();

  iwalk_slln_options sl = iwalk_slln_options_default();
  auto* slln_cmd = app.add_subcommand("slln", "X_n / n along simulated paths");
  src.add_to(slln_cmd);
  common.add_to(slln_cmd, true);
  slln_cmd->add_option("--mu", lim.mu, "mu (default: fitted)");
  slln_cmd->add_option("--paths", sl.paths, "number of paths")->check(CLI::PositiveNumber);
  slln_cmd->add_option("--n", sl.horizon, "horizon")->check(CLI::PositiveNumber);
  slln_cmd->add_option("--checkpoints", sl.checkpoints, "observation times")
      ->check(CLI::PositiveNumber);
  slln_cmd->add_option("--band", sl.band, "deviation band around 1/mu");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    EnvHandle env;
    env.p = src.build(common.seed);
    const iwalk_numeric_options num = common.numeric();
    ReportHandle rep;
    if (env_cmd->parsed()) {
      char* text = nullptr;
      check(iwalk_env_to_json(env.p, &text));
      check(iwalk_run_env_tables(env.p, &num, q, &rep.p));
      const std::string dir = common.out_dir();
      // Tables first so a refused overwrite leaves the directory untouched.
      iwalk_status s = iwalk_report_write(rep.p, dir.c_str(), common.force);
      if (s == IWALK_OK) {
        const std::string path = dir + "/" + env_name;
        std::FILE* probe = common.force ? nullptr : std::fopen(path.c_str(), "r");
        if (probe) {
          std::fclose(probe);
          iwalk_string_free(text);
          std::cerr << "error: refusing to overwrite existing file " << path << " (use --force)\n";
          return 4;
        }
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << text;
        if (!f) {
          iwalk_string_free(text);
          std::cerr << "error: cannot write " << path << "\n";
          return 4;
        }
        std::cout << "wrote " << path << "\n";
      }
      iwalk_string_free(text);
      check(s);
      std::cout << iwalk_report_summary(rep.p);
      return 0;
    }
    if (exact_cmd->parsed()) {
      check(iwalk_run_exact(env.p, n_grid.data(), n_grid.size(), &num, &rep.p));
    } else if (mc_cmd->parsed()) {
      mc.seed = *common.seed;
      mc.record = record == "endpoint"    ? IWALK_RECORD_ENDPOINT
                  : record == "full-path" ? IWALK_RECORD_FULL_PATH
                                          : IWALK_RECORD_HITTING_TIMES;
      mc.engine = engine == "chain" ? IWALK_ENGINE_CHAIN : IWALK_ENGINE_RENEWAL;
      check(iwalk_run_mc(env.p, &mc, &num, &rep.p));
    } else if (dyn_cmd->parsed()) {
      dyn.seed = *common.seed;
      dyn.extended_precision = precision == "extended";
      dyn.times = times.empty() ? nullptr : times.data();
      dyn.time_count = times.size();
      check(iwalk_run_dynsys(env.p, &dyn, &num, &rep.p));
    } else if (llt_cmd->parsed()) {
      check(iwalk_run_llt(env.p, n_grid.data(), n_grid.size(),
                          decompose.empty() ? nullptr : decompose.data(), decompose.size(), &lim,
                          &num, &rep.p));
    } else if (clt_cmd->parsed()) {
      check(iwalk_run_clt(env.p, n_grid.data(), n_grid.size(), &lim, &num, &rep.p));
    } else if (slln_cmd->parsed()) {
      sl.seed = *common.seed;
      check(iwalk_run_slln(env.p, &sl, &lim, &num, &rep.p));
    }
    emit(rep, common);
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
