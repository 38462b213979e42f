#include "gfra/sbl.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

namespace gfra {

void Hyperparams::validate() const {
  if (a < 0 || b < 0) throw std::invalid_argument("hyper: a, b must be >= 0");
  if (max_inner < 1) throw std::invalid_argument("hyper: max_inner must be >= 1");
  if (max_total < max_inner)
    throw std::invalid_argument("hyper: max_total must be >= max_inner");
  if (alpha_cap <= 1) throw std::invalid_argument("hyper: alpha_cap must be > 1");
  if (convergence_tol <= 0)
    throw std::invalid_argument("hyper: convergence_tol must be > 0");
}

namespace {

Eigen::LLT<Eigen::MatrixXcd> inner_factorization(const Eigen::MatrixXcd& d,
                                                 const Eigen::VectorXd& pinv) {
  const auto w = d.rows();
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(w, w);
  a.noalias() += (d * pinv.asDiagonal()) * d.adjoint();
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("vb_covariance: inner W x W factorization failed");
  return llt;
}

void check_alpha(const Eigen::MatrixXcd& d, const Eigen::VectorXd& alpha_mean) {
  if (alpha_mean.size() != d.cols())
    throw std::invalid_argument("vb_covariance: alpha length != dictionary columns");
  if (alpha_mean.size() == 0 || alpha_mean.minCoeff() <= 0)
    throw std::invalid_argument("vb_covariance: alpha entries must be positive");
}

}  // namespace

Eigen::MatrixXcd vb_covariance(const Eigen::MatrixXcd& d,
                               const Eigen::VectorXd& alpha_mean) {
  check_alpha(d, alpha_mean);
  const Eigen::VectorXd pinv = alpha_mean.cwiseInverse();
  const auto llt = inner_factorization(d, pinv);
  const Eigen::MatrixXcd dp = d * pinv.asDiagonal();  // D P^-1, W x M
  Eigen::MatrixXcd sigma = -dp.adjoint() * llt.solve(dp);
  sigma.diagonal().array() += pinv.array();
  // Pin Hermitian symmetry against rounding in the triple product.
  sigma = 0.5 * (sigma + sigma.adjoint()).eval();
  return sigma;
}

Eigen::MatrixXcd vb_mean(const Eigen::MatrixXcd& sigma, const Eigen::MatrixXcd& d,
                         const Eigen::MatrixXcd& z) {
  if (sigma.cols() != d.cols() || d.rows() != z.rows())
    throw std::invalid_argument("vb_mean: shape mismatch");
  return sigma * (d.adjoint() * z);
}

Eigen::VectorXd alpha_update(const Eigen::MatrixXcd& g_mean,
                             const Eigen::VectorXd& sigma_diag,
                             const Hyperparams& hyper, int n_r) {
  const auto m = g_mean.rows();
  Eigen::VectorXd alpha(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double second_moment =
        g_mean.row(i).squaredNorm() + n_r * sigma_diag(i);
    const double denom = hyper.b + second_moment;
    const double value = denom > 0 ? (hyper.a + n_r) / denom
                                   : std::numeric_limits<double>::infinity();
    alpha(i) = std::min(value, hyper.alpha_cap);
  }
  return alpha;
}

Eigen::VectorXd alpha_update(const Eigen::MatrixXcd& g_mean,
                             const Eigen::MatrixXcd& sigma,
                             const Hyperparams& hyper, int n_r) {
  return alpha_update(g_mean, sigma.diagonal().real().eval(), hyper, n_r);
}

InnerState run_inner_loop_compact(const Eigen::MatrixXcd& d,
                                  const Eigen::MatrixXcd& z,
                                  const Eigen::VectorXd& alpha_init,
                                  const Hyperparams& hyper) {
  hyper.validate();
  check_alpha(d, alpha_init);
  const int n_r = static_cast<int>(z.cols());

  const Eigen::Index w = d.rows();
  const Eigen::MatrixXcd c = d.adjoint() * z;  // constant across iterations

  InnerState state;
  state.alpha_mean = alpha_init;
  Eigen::MatrixXcd u(w, d.cols());
  Eigen::MatrixXcd a(w, w);
  Eigen::LLT<Eigen::MatrixXcd> llt(w);
  for (int it = 0; it < hyper.max_inner; ++it) {
    const Eigen::VectorXd pinv = state.alpha_mean.cwiseInverse();

    // A = I + U U^H with U = D P^-1/2, built as a Hermitian rank update.
    u.noalias() = d * pinv.cwiseSqrt().asDiagonal();
    a.setIdentity();
    a.selfadjointView<Eigen::Lower>().rankUpdate(u);
    llt.compute(a);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("vb_covariance: inner W x W factorization failed");

    // diag(Sigma)_m = pinv_m * (1 - ||L^-1 u_m||^2).
    const Eigen::MatrixXcd v = llt.matrixL().solve(u);
    state.sigma_diag =
        pinv.array() * (1.0 - v.colwise().squaredNorm().transpose().array());

    // G = Sigma D^H Z without forming Sigma.
    const Eigen::MatrixXcd t = pinv.asDiagonal() * c;  // M x N_r
    state.g_mean = t - pinv.asDiagonal() * (d.adjoint() * llt.solve(d * t));

    state.alpha_mean = alpha_update(state.g_mean, state.sigma_diag, hyper, n_r);
  }
  return state;
}

ApPosterior run_inner_loop(const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& z,
                           const Eigen::VectorXd& alpha_init,
                           const Hyperparams& hyper) {
  hyper.validate();
  check_alpha(d, alpha_init);
  const int n_r = static_cast<int>(z.cols());

  ApPosterior post;
  Eigen::VectorXd alpha = alpha_init;
  for (int it = 0; it < hyper.max_inner; ++it) {
    post.covariance = vb_covariance(d, alpha);
    post.g_mean = vb_mean(post.covariance, d, z);
    alpha = alpha_update(post.g_mean, post.covariance, hyper, n_r);
  }
  post.alpha_mean = std::move(alpha);
  return post;
}

Eigen::MatrixXcd genie_estimate(const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& z,
                                const std::vector<int>& support_rows,
                                const std::vector<double>& prior_var) {
  if (support_rows.size() != prior_var.size())
    throw std::invalid_argument("genie_estimate: support/prior size mismatch");
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(d.cols(), z.cols());
  if (support_rows.empty()) return g;

  const int k = static_cast<int>(support_rows.size());
  Eigen::MatrixXcd ds(d.rows(), k);
  for (int j = 0; j < k; ++j) ds.col(j) = d.col(support_rows[j]);

  Eigen::MatrixXcd a = ds.adjoint() * ds;
  for (int j = 0; j < k; ++j) {
    if (prior_var[j] <= 0)
      throw std::invalid_argument("genie_estimate: prior variance must be positive");
    a(j, j) += 1.0 / prior_var[j];
  }
  const Eigen::MatrixXcd gs = a.ldlt().solve(ds.adjoint() * z);
  for (int j = 0; j < k; ++j) g.row(support_rows[j]) = gs.row(j);
  return g;
}

}  // namespace gfra
