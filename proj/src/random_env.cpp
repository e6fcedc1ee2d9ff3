#include "iwalk/random_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iwalk/diagnostics.hpp"
#include "iwalk/error.hpp"
#include "iwalk/rng.hpp"

namespace iwalk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Matrix = std::vector<std::vector<double>>;

Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Wielandt: a primitive s x s matrix has P^((s-1)^2 + 1) > 0 entrywise.
std::size_t wielandt_exponent(std::size_t s) { return (s - 1) * (s - 1) + 1; }

Matrix matrix_power(const Matrix& p, std::size_t k) {
  Matrix r = p;
  for (std::size_t i = 1; i < k; ++i) r = multiply(r, p);
  return r;
}

std::vector<double> stationary(const Matrix& p) {
  const std::size_t s = p.size();
  std::vector<double> pi(s, 1.0 / double(s));
  for (int it = 0; it < 100000; ++it) {
    std::vector<double> next(s, 0.0);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j) next[j] += pi[i] * p[i][j];
    double diff = 0.0;
    for (std::size_t j = 0; j < s; ++j) diff += std::abs(next[j] - pi[j]);
    pi = std::move(next);
    if (diff < 1e-15) break;
  }
  return pi;
}

std::size_t pick(std::span<const double> probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return probs.size() - 1;
}

std::size_t coordinates(SiteFamily f) { return f == SiteFamily::lsv ? 2 : 1; }

const char* family_name(SiteFamily f) {
  switch (f) {
    case SiteFamily::geometric: return "geometric";
    case SiteFamily::powerlaw: return "powerlaw";
    case SiteFamily::lsv: return "lsv";
  }
  return "?";
}

const char* kind_name(RandomEnvModel::Kind k) {
  switch (k) {
    case RandomEnvModel::Kind::iid: return "iid";
    case RandomEnvModel::Kind::moving_window: return "moving_window";
    case RandomEnvModel::Kind::markov: return "markov";
  }
  return "?";
}

SiteParams make_params(SiteFamily f, std::span<const double> coords) {
  switch (f) {
    case SiteFamily::geometric: return GeometricSite{coords[0]};
    case SiteFamily::powerlaw: return PowerLawSite{coords[0]};
    case SiteFamily::lsv: return LsvParams::from_alpha_c(coords[0], coords[1]);
  }
  throw ValidationError("unknown site family");
}

// Admissible range of each coordinate, as open intervals.
void check_coordinate(SiteFamily f, std::size_t j, double lo, double hi) {
  auto fail = [&](const char* what) {
    throw ValidationError(std::string("random ") + family_name(f) + " model: " + what);
  };
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) fail("empty or unbounded support");
  switch (f) {
    case SiteFamily::geometric:
      if (!(lo > 0.0 && hi < 1.0)) fail("ratio support must lie in (0, 1)");
      break;
    case SiteFamily::powerlaw:
      if (!(lo > 1.0)) fail("beta support must lie above 1");
      break;
    case SiteFamily::lsv:
      if (j == 0 && !(lo > 0.0 && hi < 0.5)) fail("alpha support must lie in (0, 1/2)");
      if (j == 1 && !(lo > 0.0 && hi < 1.0)) fail("c support must lie in (0, 1)");
      break;
  }
}

void check_state(const SiteParams& p) {
  if (const auto* g = std::get_if<GeometricSite>(&p)) {
    check_coordinate(SiteFamily::geometric, 0, g->ratio, g->ratio);
  } else if (const auto* b = std::get_if<PowerLawSite>(&p)) {
    check_coordinate(SiteFamily::powerlaw, 0, b->beta, b->beta);
  } else if (const auto* l = std::get_if<LsvParams>(&p)) {
    check_coordinate(SiteFamily::lsv, 0, l->alpha, l->alpha);
    check_coordinate(SiteFamily::lsv, 1, l->c, l->c);
  } else {
    throw ValidationError("markov states must be geometric, powerlaw or lsv sites");
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

Marginal Marginal::uniform(double lo, double hi) {
  Marginal m;
  m.kind = Kind::uniform;
  m.lo = lo;
  m.hi = hi;
  return m;
}

Marginal Marginal::discrete(std::vector<double> values, std::vector<double> weights) {
  if (values.empty()) throw ValidationError("discrete marginal needs values");
  if (weights.empty()) weights.assign(values.size(), 1.0);
  if (weights.size() != values.size()) throw ValidationError("discrete marginal: weight count");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("discrete marginal: weights must be positive");
  for (double& w : weights) {
    if (!(w >= 0.0)) throw ValidationError("discrete marginal: negative weight");
    w /= total;
  }
  Marginal m;
  m.kind = Kind::discrete;
  m.values = std::move(values);
  m.weights = std::move(weights);
  return m;
}

double Marginal::quantile(double u) const {
  if (kind == Kind::uniform) return lo + (hi - lo) * u;
  return values[pick(weights, u)];
}

double Marginal::min() const {
  return kind == Kind::uniform ? lo : *std::min_element(values.begin(), values.end());
}

double Marginal::max() const {
  return kind == Kind::uniform ? hi : *std::max_element(values.begin(), values.end());
}

void RandomEnvModel::validate() const {
  if (kind == Kind::markov) {
    const std::size_t s = states.size();
    if (s == 0) throw ValidationError("markov model needs at least one state");
    if (transition.size() != s) throw ValidationError("markov transition matrix shape");
    for (const auto& row : transition) {
      if (row.size() != s) throw ValidationError("markov transition matrix shape");
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw ValidationError("markov transition probabilities must be >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw ValidationError("markov rows must sum to 1");
    }
    for (const auto& st : states) check_state(st);
    const Matrix pk = matrix_power(transition, wielandt_exponent(s));
    for (const auto& row : pk)
      for (double p : row)
        if (!(p > 0.0)) {
          throw ValidationError("markov chain must be irreducible and aperiodic");
        }
    return;
  }
  if (marginals.size() != coordinates(family)) {
    throw ValidationError(std::string("random ") + family_name(family) + " model needs " +
                          std::to_string(coordinates(family)) + " marginal(s)");
  }
  for (std::size_t j = 0; j < marginals.size(); ++j) {
    check_coordinate(family, j, marginals[j].min(), marginals[j].max());
  }
}

json RandomEnvModel::to_json() const {
  json j{{"kind", kind_name(kind)}};
  if (kind == Kind::markov) {
    j["transition"] = transition;
    json st = json::array();
    for (const auto& s : states) st.push_back(site_params_to_json(s));
    j["states"] = std::move(st);
    return j;
  }
  j["family"] = family_name(family);
  json ms = json::array();
  for (const auto& m : marginals) {
    if (m.kind == Marginal::Kind::uniform) {
      ms.push_back({{"uniform", {m.lo, m.hi}}});
    } else {
      ms.push_back({{"values", m.values}, {"weights", m.weights}});
    }
  }
  j["marginals"] = std::move(ms);
  if (kind == Kind::moving_window) j["window"] = window;
  return j;
}

RandomEnvModel RandomEnvModel::from_json(const json& j) {
  RandomEnvModel m;
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "iid") {
      m.kind = Kind::iid;
    } else if (kind == "moving_window" || kind == "m-dependent") {
      m.kind = Kind::moving_window;
      m.window = j.at("window").get<std::size_t>();
    } else if (kind == "markov") {
      m.kind = Kind::markov;
      m.transition = j.at("transition").get<Matrix>();
      for (const auto& s : j.at("states")) m.states.push_back(site_params_from_json(s));
    } else {
      throw ValidationError("unknown random model kind '" + kind + "'");
    }
    if (m.kind != Kind::markov) {
      const auto family = j.at("family").get<std::string>();
      if (family == "geometric") m.family = SiteFamily::geometric;
      else if (family == "powerlaw") m.family = SiteFamily::powerlaw;
      else if (family == "lsv") m.family = SiteFamily::lsv;
      else throw ValidationError("unknown random model family '" + family + "'");
      for (const auto& mj : j.at("marginals")) {
        if (mj.contains("uniform")) {
          const auto r = mj["uniform"].get<std::vector<double>>();
          if (r.size() != 2) throw ValidationError("uniform marginal needs [lo, hi]");
          m.marginals.push_back(Marginal::uniform(r[0], r[1]));
        } else {
          m.marginals.push_back(Marginal::discrete(
              mj.at("values").get<std::vector<double>>(),
              mj.value("weights", std::vector<double>{})));
        }
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed random model: ") + e.what());
  }
  m.validate();
  return m;
}

std::optional<std::size_t> RandomEnvModel::mixing_range() const {
  switch (kind) {
    case Kind::iid: return 0;
    case Kind::moving_window: return window;
    case Kind::markov: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> RandomEnvModel::geometric_mixing_rate() const {
  if (kind != Kind::markov) return std::nullopt;
  const std::size_t k = wielandt_exponent(states.size());
  const Matrix pk = matrix_power(transition, k);
  double delta = 0.0;  // Dobrushin coefficient of P^k
  for (std::size_t a = 0; a < pk.size(); ++a)
    for (std::size_t b = a + 1; b < pk.size(); ++b) {
      double tv = 0.0;
      for (std::size_t l = 0; l < pk.size(); ++l) tv += std::abs(pk[a][l] - pk[b][l]);
      delta = std::max(delta, 0.5 * tv);
    }
  return std::pow(delta, 1.0 / double(k));
}

std::string RandomEnvModel::mixing_description() const {
  if (auto r = mixing_range()) {
    return "alpha(k) = 0 for k > " + std::to_string(*r);
  }
  return "alpha(k) <= C * " + std::to_string(*geometric_mixing_rate()) + "^k";
}

std::optional<double> RandomEnvModel::declared_beta_star() const {
  if (kind == Kind::markov) {
    std::optional<double> best;
    for (const auto& s : states) {
      const auto b = natural_beta(s);
      if (!b) return std::nullopt;
      best = best ? std::min(*best, *b) : *b;
    }
    return best;
  }
  switch (family) {
    case SiteFamily::powerlaw: return marginals[0].min();
    case SiteFamily::lsv: return 1.0 / marginals[0].max();
    case SiteFamily::geometric: return std::nullopt;
  }
  return std::nullopt;
}

double StreamNoise::uniform(std::size_t site, std::size_t coord) const {
  static const std::uint64_t key = component_key("env.uniform");
  return Stream(seed_, key + coord, site).uniform();
}

double StreamNoise::gaussian(std::size_t site, std::size_t coord) const {
  static const std::uint64_t key = component_key("env.gaussian");
  return Stream(seed_, key + coord, site).gaussian();
}

std::vector<SiteParams> sample_parameters(const RandomEnvModel& model, std::size_t sites,
                                          const NoiseSource& noise) {
  model.validate();
  std::vector<SiteParams> out;
  out.reserve(sites);

  if (model.kind == RandomEnvModel::Kind::markov) {
    const auto pi = stationary(model.transition);
    std::size_t state = 0;
    for (std::size_t x = 0; x < sites; ++x) {
      state = x == 0 ? pick(pi, noise.uniform(0, 0))
                     : pick(model.transition[state], noise.uniform(x, 0));
      out.push_back(model.states[state]);
    }
    return out;
  }

  const std::size_t dims = model.marginals.size();
  std::vector<double> coords(dims);
  const double scale = 1.0 / std::sqrt(double(model.window) + 1.0);
  for (std::size_t x = 0; x < sites; ++x) {
    for (std::size_t j = 0; j < dims; ++j) {
      double u;
      if (model.kind == RandomEnvModel::Kind::iid) {
        u = noise.uniform(x, j);
      } else {
        double z = 0.0;
        for (std::size_t i = 0; i <= model.window; ++i) z += noise.gaussian(x + i, j);
        u = std::min(normal_cdf(z * scale), std::nextafter(1.0, 0.0));
      }
      coords[j] = model.marginals[j].quantile(u);
      if (!(coords[j] >= model.marginals[j].min() && coords[j] <= model.marginals[j].max())) {
        throw ValidationError("sampled parameter left its declared range at site " +
                              std::to_string(x));
      }
    }
    out.push_back(make_params(model.family, coords));
  }
  return out;
}

QuenchedSample sample_environment(const RandomEnvModel& model, std::uint64_t seed,
                                  const Truncation& trunc) {
  auto params = sample_parameters(model, trunc.sites, StreamNoise(seed));
  json descriptor{{"kind", "random"},
                  {"model", model.to_json()},
                  {"seed", seed},
                  {"n_cap", trunc.n_cap},
                  {"tail_tol", trunc.tail_tol}};
  json trace = json::array();
  for (const auto& p : params) trace.push_back(site_params_to_json(p));
  descriptor["parameter_trace"] = std::move(trace);

  Environment built = env_from_site_params(params, trunc, descriptor);
  auto extender = [model, seed, trunc](std::size_t sites) {
    Truncation t = trunc;
    t.sites = sites;
    return sample_environment(model, seed, t).environment;
  };
  Environment env(std::vector<TailSequence>(built.sites().begin(), built.sites().end()),
                  std::move(descriptor), params, std::move(extender));
  return QuenchedSample{std::move(env), std::move(params), model, seed};
}

MomentReport moment_report(const QuenchedSample& sample, double q,
                           std::optional<double> beta_fallback) {
  const Environment& env = sample.environment;
  const auto beta = beta_for(env, env.size(), beta_fallback);
  const EnvDiagnostics d = diagnostics(env, beta, env.size());

  MomentReport r;
  r.q = q;
  r.sites = env.size();
  r.beta_star_sample = d.beta_star;
  r.beta_star_declared = sample.model.declared_beta_star();
  const double bstar = r.beta_star_declared.value_or(d.beta_star);
  r.b_is_a_prime = bstar > 2.0 && bstar <= 3.0;
  for (std::size_t x = 0; x < env.size(); ++x) {
    r.mean_a_q += std::pow(d.a[x], q);
    r.mean_a_prime_q += std::pow(d.a_prime[x], q);
    r.mean_a_sq += d.a[x] * d.a[x];
    r.mean_k += d.k[x];
  }
  const double n = double(env.size());
  r.mean_a_q /= n;
  r.mean_a_prime_q /= n;
  r.mean_a_sq /= n;
  r.mean_k /= n;
  r.mean_b_q = r.b_is_a_prime ? r.mean_a_prime_q : r.mean_a_q;

  // Every supported model has bounded parameter support inside the
  // admissible range, so A, A' and K are bounded functions of the site.
  r.moments_finite = std::isfinite(r.mean_a_q) && std::isfinite(r.mean_a_prime_q) &&
                     std::isfinite(r.mean_k);
  r.mixing = sample.model.mixing_description();
  r.q_ok = q > 8.0;
  r.v_required = r.q_ok ? 2.0 * q / (q - 8.0) : kNaN;
  // Finite-range and geometric mixing are O(n^-v) for every v.
  r.mixing_ok = true;
  r.slln_conditions = bstar > 1.0 && r.moments_finite;
  r.clt_conditions = bstar > 2.0 && r.moments_finite;
  r.llt_conditions = r.clt_conditions && r.q_ok && r.mixing_ok;
  return r;
}

}  // namespace iwalk
