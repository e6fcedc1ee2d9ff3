#include "iwalk/environment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "iwalk/error.hpp"

namespace iwalk {

namespace {

void check_truncation(const Truncation& t) {
  if (t.sites == 0) throw ValidationError("environment needs at least one site");
  if (t.n_cap == 0) throw ValidationError("n_cap must be positive");
  if (!(t.tail_tol > 0.0 && t.tail_tol < 1.0)) {
    throw ValidationError("tail_tol must lie in (0, 1)");
  }
}

json truncation_json(const Truncation& t) {
  return json{{"n_cap", t.n_cap}, {"tail_tol", t.tail_tol}};
}

// Generic builder: omega(n) for n = 0, 1, ... until omega_N <= tail_tol or
// N = n_cap; the deficit is the first omitted value.
template <class Omega>
TailSequence tabulate(Omega omega, const Truncation& t, std::string tag) {
  std::vector<double> values{1.0};
  double next = omega(1);
  while (values.back() > t.tail_tol && values.size() <= t.n_cap) {
    values.push_back(next);
    next = omega(values.size());
  }
  const bool cap = values.back() > t.tail_tol;
  return TailSequence(std::move(values), next, std::move(tag), cap);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::optional<double> natural_beta(const SiteParams& params) {
  if (const auto* p = std::get_if<PowerLawSite>(&params)) return p->beta;
  if (const auto* p = std::get_if<LsvParams>(&params)) return p->natural_beta();
  return std::nullopt;
}

json site_params_to_json(const SiteParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GeometricSite>) {
          return {{"family", "geometric"}, {"ratio", p.ratio}};
        } else if constexpr (std::is_same_v<T, PowerLawSite>) {
          return {{"family", "powerlaw"}, {"beta", p.beta}};
        } else if constexpr (std::is_same_v<T, LsvParams>) {
          return {{"family", "lsv"}, {"alpha", p.alpha}, {"c", p.c}, {"kappa", p.kappa}};
        } else {
          return {{"family", "degenerate"}};
        }
      },
      params);
}

SiteParams site_params_from_json(const json& j) {
  try {
    const auto family = j.at("family").get<std::string>();
    if (family == "geometric") return GeometricSite{j.at("ratio").get<double>()};
    if (family == "powerlaw") return PowerLawSite{j.at("beta").get<double>()};
    if (family == "degenerate") return DegenerateSite{};
    if (family == "lsv") {
      const double alpha = j.at("alpha").get<double>();
      if (j.contains("c")) return LsvParams::from_alpha_c(alpha, j.at("c").get<double>());
      return LsvParams::from_alpha_kappa(alpha, j.at("kappa").get<double>());
    }
    throw ValidationError("unknown site family '" + family + "'");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed site parameters: ") + e.what());
  }
}

TailSequence make_site(const SiteParams& params, const Truncation& trunc) {
  check_truncation(trunc);
  return std::visit(
      [&](const auto& p) -> TailSequence {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GeometricSite>) {
          if (!(p.ratio > 0.0 && p.ratio < 1.0)) {
            throw ValidationError("geometric ratio must lie in (0, 1)");
          }
          return tabulate([r = p.ratio](std::size_t n) { return std::pow(r, double(n)); },
                          trunc, "geometric");
        } else if constexpr (std::is_same_v<T, PowerLawSite>) {
          if (!(p.beta > 1.0) || !std::isfinite(p.beta)) {
            throw ValidationError("power-law beta must exceed 1");
          }
          return tabulate(
              [b = p.beta](std::size_t n) { return std::pow(double(n) + 1.0, -b); },
              trunc, "powerlaw");
        } else if constexpr (std::is_same_v<T, LsvParams>) {
          const LsvParams lsv = LsvParams::from_alpha_c(p.alpha, p.c);
          constexpr double kRootTol = 1e-13;
          double last = 1.0;
          return tabulate(
              [&](std::size_t n) {
                // Called with n = last_n + 1 in sequence.
                last = n == 1 ? lsv.c : lsv_inverse_branch(lsv, last, kRootTol);
                if (!(last > 0.0) || (n > 1 && !(last < 1.0))) {
                  throw NumericError("lsv c_n computation failed at n = " + std::to_string(n));
                }
                return last;
              },
              trunc, "lsv");
        } else {
          return TailSequence({1.0}, 0.0, "degenerate");
        }
      },
      params);
}

SiteFactory::SiteFactory(Truncation trunc) : trunc_(trunc) { check_truncation(trunc_); }

const TailSequence& SiteFactory::get(const SiteParams& params) {
  std::tuple<std::size_t, double, double, double> key{params.index(), 0.0, 0.0, 0.0};
  if (const auto* p = std::get_if<GeometricSite>(&params)) std::get<1>(key) = p->ratio;
  if (const auto* p = std::get_if<PowerLawSite>(&params)) std::get<1>(key) = p->beta;
  if (const auto* p = std::get_if<LsvParams>(&params)) key = {params.index(), p->alpha, p->c, p->kappa};
  auto it = cache_.find(key);
  if (it == cache_.end()) it = cache_.emplace(key, make_site(params, trunc_)).first;
  return it->second;
}

Environment::Environment(std::vector<TailSequence> sites, json descriptor,
                         std::vector<SiteParams> site_params, Extender extender)
    : sites_(std::move(sites)),
      descriptor_(std::move(descriptor)),
      site_params_(std::move(site_params)),
      extender_(std::move(extender)) {
  if (sites_.empty()) throw ValidationError("environment needs at least one site");
  if (!site_params_.empty() && site_params_.size() != sites_.size()) {
    throw ValidationError("site parameter trace does not match site count");
  }
}

const TailSequence& Environment::site(std::size_t x) const {
  if (x >= sites_.size()) {
    throw ValidationError("site " + std::to_string(x) + " is not materialized (" +
                          std::to_string(sites_.size()) + " sites)");
  }
  return sites_[x];
}

std::optional<double> Environment::natural_beta(std::size_t x) const {
  if (site_params_.empty()) return std::nullopt;
  if (x >= site_params_.size()) throw ValidationError("site out of range");
  return iwalk::natural_beta(site_params_[x]);
}

Environment Environment::extended(std::size_t sites) const {
  if (sites <= size()) return *this;
  if (!extender_) {
    throw ValidationError("environment of kind '" +
                          descriptor_.value("kind", std::string("tabulated")) +
                          "' cannot be extended beyond its materialized sites");
  }
  return extender_(sites);
}

namespace {

Environment constant_env(const SiteParams& params, const Truncation& trunc) {
  check_truncation(trunc);
  TailSequence site = make_site(params, trunc);
  json descriptor = truncation_json(trunc);
  descriptor["kind"] = "constant";
  descriptor["site"] = site_params_to_json(params);
  auto extender = [params, trunc](std::size_t sites) {
    Truncation t = trunc;
    t.sites = sites;
    return constant_env(params, t);
  };
  return Environment(std::vector<TailSequence>(trunc.sites, site), std::move(descriptor),
                     std::vector<SiteParams>(trunc.sites, params), extender);
}

}  // namespace

Environment env_geometric(double ratio, const Truncation& trunc) {
  return constant_env(GeometricSite{ratio}, trunc);
}

Environment env_from_powerlaw(double beta, const Truncation& trunc) {
  return constant_env(PowerLawSite{beta}, trunc);
}

Environment env_from_powerlaw(std::span<const double> betas, const Truncation& trunc) {
  if (betas.size() == 1) return env_from_powerlaw(betas[0], trunc);
  std::vector<SiteParams> params;
  for (double b : betas) params.emplace_back(PowerLawSite{b});
  json descriptor = truncation_json(trunc);
  descriptor["kind"] = "per-site";
  return env_from_site_params(std::move(params), trunc, std::move(descriptor));
}

Environment env_from_lsv(const LsvParams& params, const Truncation& trunc) {
  return constant_env(LsvParams::from_alpha_c(params.alpha, params.c), trunc);
}

Environment env_from_lsv(std::span<const LsvParams> params, const Truncation& trunc) {
  if (params.size() == 1) return env_from_lsv(params[0], trunc);
  std::vector<SiteParams> sp(params.begin(), params.end());
  json descriptor = truncation_json(trunc);
  descriptor["kind"] = "per-site";
  return env_from_site_params(std::move(sp), trunc, std::move(descriptor));
}

Environment env_degenerate(std::size_t sites) {
  Truncation t;
  t.sites = sites;
  return constant_env(DegenerateSite{}, t);
}

Environment env_from_site_params(std::vector<SiteParams> params, const Truncation& trunc,
                                 json descriptor) {
  check_truncation(trunc);
  if (params.size() != trunc.sites) {
    throw ValidationError("expected " + std::to_string(trunc.sites) +
                          " site parameter sets, got " + std::to_string(params.size()));
  }
  SiteFactory factory(trunc);
  std::vector<TailSequence> sites;
  sites.reserve(params.size());
  for (std::size_t x = 0; x < params.size(); ++x) {
    try {
      sites.push_back(factory.get(params[x]));
    } catch (const NumericError& e) {
      throw NumericError("site " + std::to_string(x) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("site " + std::to_string(x) + ": " + e.what());
    }
  }
  if (descriptor.value("kind", std::string()) == "per-site" && !descriptor.contains("sites")) {
    json list = json::array();
    for (const auto& p : params) list.push_back(site_params_to_json(p));
    descriptor["sites"] = std::move(list);
  }
  return Environment(std::move(sites), std::move(descriptor), std::move(params));
}

std::string environment_to_json(const Environment& env) {
  std::ostringstream out;
  out << "{\"model\": " << env.descriptor().dump() << ",\n \"sites\": [";
  for (std::size_t x = 0; x < env.size(); ++x) {
    const TailSequence& s = env.sites()[x];
    out << (x ? ",\n  " : "\n  ") << "{\"omega\": [";
    const auto v = s.values();
    for (std::size_t n = 0; n < v.size(); ++n) out << (n ? ", " : "") << format_double(v[n]);
    out << "], \"deficit\": " << format_double(s.deficit());
    if (s.cap_reached()) out << ", \"cap_reached\": true";
    out << "}";
  }
  out << "\n ]}\n";
  return out.str();
}

Environment environment_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("environment file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sites") || !doc["sites"].is_array()) {
    throw ValidationError("environment file needs a \"sites\" array");
  }
  json model = doc.value("model", json::object());
  std::vector<TailSequence> sites;
  try {
    for (const auto& s : doc["sites"]) {
      sites.emplace_back(s.at("omega").get<std::vector<double>>(),
                         s.value("deficit", 0.0), model.value("kind", std::string("tabulated")),
                         s.value("cap_reached", false));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed site entry: ") + e.what());
  }

  // Recover per-site parameters (and so beta(x)) from the descriptor.
  std::vector<SiteParams> params;
  Environment::Extender extender;
  const std::string kind = model.value("kind", std::string("tabulated"));
  if (kind == "constant" && model.contains("site")) {
    const SiteParams p = site_params_from_json(model["site"]);
    params.assign(sites.size(), p);
    Truncation t;
    t.n_cap = model.value("n_cap", t.n_cap);
    t.tail_tol = model.value("tail_tol", t.tail_tol);
    extender = [p, t](std::size_t n) {
      Truncation tt = t;
      tt.sites = n;
      return constant_env(p, tt);
    };
  } else if ((kind == "per-site" && model.contains("sites")) ||
             (kind == "random" && model.contains("parameter_trace"))) {
    const json& list = kind == "per-site" ? model["sites"] : model["parameter_trace"];
    for (const auto& j : list) params.push_back(site_params_from_json(j));
    if (params.size() != sites.size()) {
      throw ValidationError("descriptor parameter list does not match the site count");
    }
  }
  return Environment(std::move(sites), std::move(model), std::move(params), std::move(extender));
}

void write_text_file(const std::string& path, std::string_view text, bool overwrite) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!overwrite && fs::exists(path, ec)) {
    throw IoError("refusing to overwrite existing file " + path + " (use --force)");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace iwalk
