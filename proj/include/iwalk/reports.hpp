#pragma once

#include <string>

#include "iwalk/diagnostics.hpp"
#include "iwalk/dynsys.hpp"
#include "iwalk/limits.hpp"
#include "iwalk/random_env.hpp"
#include "iwalk/walk.hpp"

namespace iwalk {

/// Shortest text that round-trips the double ("nan", "inf", "-inf" for
/// non-finite values).
std::string format_real(double v);

/// x,A,A_prime,K,m,s2,mu,sigma2 (mu and sigma2 are the cumulative mu_x, sigma_x^2).
std::string diagnostics_csv(const EnvDiagnostics& diag);
/// n,M
std::string generalized_inverse_csv(const EnvDiagnostics& diag);
/// x,theta1,theta2,scaled_theta1,scaled_theta2
std::string fit_residuals_csv(const EnvDiagnostics& diag, const LimitFit& fit);
json fit_json(const LimitFit& fit);

/// x,prob,deficit_bound
std::string position_csv(const PositionLaw& law);
/// x,prob (law of T_x) with the deficit as a trailing comment-free row omitted
std::string distribution_csv(const DiscreteDistribution& d, const char* column);

/// path,n,x,y
std::string path_records_csv(const McResult& r);
/// x,count,paths
std::string endpoint_csv(const McResult& r);
/// x,mean,var,paths,mu_x
std::string hitting_csv(const McResult& r, const EnvDiagnostics& diag);

/// n,x,count,paths
std::string cells_csv(const TrajectoryResult& r);
/// n,x,y,count,paths
std::string levels_csv(const TrajectoryResult& r);

/// n,sup_err_scaled,sup_slack_scaled,predictor_mass,exact_deficit
std::string llt_summary_csv(const std::vector<LltReport>& reports);
/// x,n,p_hit,f,g,h_over_mu,E1,E2,E3,residual
std::string decomposition_csv(const std::vector<Decomposition>& rows);
/// n,kolmogorov_x,x_for_t,kolmogorov_t,deficit
std::string clt_csv(const std::vector<CltRow>& rows);
/// n,mean_ratio,frac_within
std::string slln_csv(const SllnReport& r);
/// path,max_tail_dev
std::string slln_paths_csv(const SllnReport& r);

json moment_report_json(const MomentReport& r);

}  // namespace iwalk
