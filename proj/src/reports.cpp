#include "iwalk/reports.hpp"

#include <cmath>
#include <concepts>
#include <cstdio>
#include <cstdlib>

namespace iwalk {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace {

class Csv {
 public:
  explicit Csv(const char* header) : text_(header) { text_ += '\n'; }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((append(cells, first), first = false), ...);
    text_ += '\n';
  }

  std::string str() && { return std::move(text_); }

 private:
  void append(double v, bool first) {
    sep(first);
    text_ += format_real(v);
  }
  template <std::integral T>
  void append(T v, bool first) {
    sep(first);
    text_ += std::to_string(v);
  }
  void sep(bool first) {
    if (!first) text_ += ',';
  }

  std::string text_;
};

}  // namespace

std::string diagnostics_csv(const EnvDiagnostics& diag) {
  Csv csv("x,A,A_prime,K,m,s2,mu,sigma2");
  for (std::size_t x = 0; x < diag.sites; ++x) {
    csv.row(x, diag.a[x], diag.a_prime[x], diag.k[x], diag.m(x), diag.s2(x), diag.mu[x + 1],
            diag.sigma2[x + 1]);
  }
  return std::move(csv).str();
}

std::string generalized_inverse_csv(const EnvDiagnostics& diag) {
  Csv csv("n,M");
  for (std::size_t n = 0; n < diag.M.size(); ++n) csv.row(n, diag.M[n]);
  return std::move(csv).str();
}

std::string fit_residuals_csv(const EnvDiagnostics& diag, const LimitFit& fit) {
  Csv csv("x,theta1,theta2,scaled_theta1,scaled_theta2");
  for (std::size_t x = 1; x <= diag.sites; ++x) {
    csv.row(x, diag.theta1[x], diag.theta2[x], fit.scaled_theta1[x], fit.scaled_theta2[x]);
  }
  return std::move(csv).str();
}

json fit_json(const LimitFit& fit) {
  json j = {{"mu_hat", fit.mu_hat},
            {"sigma2_hat", fit.sigma2_hat},
            {"variance_converged", fit.variance_converged},
            {"reasons", fit.reasons}};
  if (fit.params) {
    j["sigma_tilde2"] = fit.params->sigma_tilde2;
    j["eta"] = fit.params->eta;
  }
  return j;
}

std::string position_csv(const PositionLaw& law) {
  Csv csv("x,prob,deficit_bound");
  for (std::size_t x = 0; x < law.prob.size(); ++x) {
    csv.row(x, law.prob[x], law.deficit_bound[x]);
  }
  return std::move(csv).str();
}

std::string distribution_csv(const DiscreteDistribution& d, const char* column) {
  Csv csv((std::string(column) + ",prob").c_str());
  for (std::size_t i = 0; i < d.probs.size(); ++i) {
    csv.row(std::int64_t(d.offset + std::int64_t(i)), d.probs[i]);
  }
  return std::move(csv).str();
}

std::string path_records_csv(const McResult& r) {
  Csv csv("path,n,x,y");
  for (const auto& rec : r.records) csv.row(rec.path, rec.n, rec.x, rec.y);
  return std::move(csv).str();
}

std::string endpoint_csv(const McResult& r) {
  Csv csv("x,count,paths");
  for (std::size_t x = 0; x < r.endpoint_counts.size(); ++x) {
    if (r.endpoint_counts[x] > 0) csv.row(x, r.endpoint_counts[x], r.paths);
  }
  return std::move(csv).str();
}

std::string hitting_csv(const McResult& r, const EnvDiagnostics& diag) {
  Csv csv("x,mean,var,paths,mu_x");
  for (std::size_t x = 0; x < r.hit_mean.size(); ++x) {
    const double mu_x = x < diag.mu.size() ? diag.mu[x] : std::nan("");
    csv.row(x, r.hit_mean[x], r.hit_var[x], r.paths, mu_x);
  }
  return std::move(csv).str();
}

std::string cells_csv(const TrajectoryResult& r) {
  Csv csv("n,x,count,paths");
  for (std::size_t t = 0; t < r.times.size(); ++t) {
    for (std::size_t x = 0; x < r.cell_counts[t].size(); ++x) {
      if (r.cell_counts[t][x] > 0) csv.row(r.times[t], x, r.cell_counts[t][x], r.paths);
    }
  }
  return std::move(csv).str();
}

std::string levels_csv(const TrajectoryResult& r) {
  Csv csv("n,x,y,count,paths");
  for (std::size_t t = 0; t < r.times.size(); ++t) {
    for (const auto& [cell, count] : r.level_counts[t]) {
      csv.row(r.times[t], cell.first, cell.second, count, r.paths);
    }
  }
  return std::move(csv).str();
}

std::string llt_summary_csv(const std::vector<LltReport>& reports) {
  Csv csv("n,sup_err_scaled,sup_slack_scaled,predictor_mass,exact_deficit");
  for (const auto& r : reports) {
    csv.row(r.n, r.sup_err_scaled, r.sup_slack_scaled, r.predictor_mass, r.exact_deficit);
  }
  return std::move(csv).str();
}

std::string decomposition_csv(const std::vector<Decomposition>& rows) {
  Csv csv("x,n,p_hit,f,g,h_over_mu,E1,E2,E3,residual");
  for (const auto& d : rows) {
    csv.row(d.x, d.n, d.p_hit, d.f, d.g, d.h_over_mu, d.e1, d.e2, d.e3, d.residual);
  }
  return std::move(csv).str();
}

std::string clt_csv(const std::vector<CltRow>& rows) {
  Csv csv("n,kolmogorov_x,x_for_t,kolmogorov_t,deficit");
  for (const auto& r : rows) csv.row(r.n, r.kolmogorov_x, r.x_for_t, r.kolmogorov_t, r.deficit);
  return std::move(csv).str();
}

std::string slln_csv(const SllnReport& r) {
  Csv csv("n,mean_ratio,frac_within");
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    csv.row(r.times[i], r.mean_ratio[i], r.frac_within[i]);
  }
  return std::move(csv).str();
}

std::string slln_paths_csv(const SllnReport& r) {
  Csv csv("path,max_tail_dev");
  for (std::size_t p = 0; p < r.path_max_tail_dev.size(); ++p) csv.row(p, r.path_max_tail_dev[p]);
  return std::move(csv).str();
}

json moment_report_json(const MomentReport& r) {
  json j = {{"q", r.q},
            {"sites", r.sites},
            {"beta_star_sample", r.beta_star_sample},
            {"mean_A_q", r.mean_a_q},
            {"mean_A_prime_q", r.mean_a_prime_q},
            {"mean_A_sq", r.mean_a_sq},
            {"B", r.b_is_a_prime ? "A_prime" : "A"},
            {"mean_B_q", r.mean_b_q},
            {"mean_K", r.mean_k},
            {"moments_finite", r.moments_finite},
            {"mixing", r.mixing},
            {"q_ok", r.q_ok},
            {"mixing_ok", r.mixing_ok},
            {"slln_conditions", r.slln_conditions},
            {"clt_conditions", r.clt_conditions},
            {"llt_conditions", r.llt_conditions}};
  j["beta_star_declared"] = r.beta_star_declared ? json(*r.beta_star_declared) : json(nullptr);
  j["v_required"] = std::isfinite(r.v_required) ? json(r.v_required) : json(nullptr);
  return j;
}

}  // namespace iwalk
