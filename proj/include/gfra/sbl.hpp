#ifndef GFRA_SBL_HPP
#define GFRA_SBL_HPP

#include <Eigen/Dense>
#include <vector>

namespace gfra {

struct Hyperparams {
  double a = 1e-10;  // Gamma shape
  double b = 1e-10;  // Gamma rate
  int max_inner = 5;
  int max_total = 250;  // global iteration budget across outer rounds
  double alpha_cap = 1e12;
  double convergence_tol = 1e-6;

  void validate() const;  // throws std::invalid_argument
  int outer_rounds() const { return max_total / max_inner; }
};

// Per-AP VB state. One covariance serves all N_r antenna columns.
struct ApPosterior {
  Eigen::VectorXd alpha_mean;    // length M, in (0, alpha_cap]
  Eigen::MatrixXcd covariance;   // M x M Hermitian PD
  Eigen::MatrixXcd g_mean;       // M x N_r
};

// Posterior covariance via the Woodbury identity: the only factorized system
// is the W x W Hermitian PD matrix I_W + D P^-1 D^H.
Eigen::MatrixXcd vb_covariance(const Eigen::MatrixXcd& d,
                               const Eigen::VectorXd& alpha_mean);

Eigen::MatrixXcd vb_mean(const Eigen::MatrixXcd& sigma, const Eigen::MatrixXcd& d,
                         const Eigen::MatrixXcd& z);

// Gamma-posterior precision means, clamped to (0, alpha_cap].
Eigen::VectorXd alpha_update(const Eigen::MatrixXcd& g_mean,
                             const Eigen::VectorXd& sigma_diag,
                             const Hyperparams& hyper, int n_r);
Eigen::VectorXd alpha_update(const Eigen::MatrixXcd& g_mean,
                             const Eigen::MatrixXcd& sigma,
                             const Hyperparams& hyper, int n_r);

// Alternates covariance, mean and precision updates exactly max_inner times.
// The returned covariance/mean correspond to the precisions fed into the last
// covariance evaluation, as in the explicit alternation.
ApPosterior run_inner_loop(const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& z,
                           const Eigen::VectorXd& alpha_init,
                           const Hyperparams& hyper);

// Same iteration without materializing the M x M covariance; used by the
// harness where only alpha_mean, g_mean and diag(Sigma) are needed.
struct InnerState {
  Eigen::VectorXd alpha_mean;
  Eigen::VectorXd sigma_diag;  // of the covariance matching the final g_mean
  Eigen::MatrixXcd g_mean;
};
InnerState run_inner_loop_compact(const Eigen::MatrixXcd& d,
                                  const Eigen::MatrixXcd& z,
                                  const Eigen::VectorXd& alpha_init,
                                  const Hyperparams& hyper);

// Linear MMSE on the known support rows; zeros elsewhere. prior_var holds the
// effective per-row channel variance for each support row.
Eigen::MatrixXcd genie_estimate(const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& z,
                                const std::vector<int>& support_rows,
                                const std::vector<double>& prior_var);

}  // namespace gfra

#endif
