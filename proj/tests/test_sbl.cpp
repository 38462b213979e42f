#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>

#include "gfra/dictionary.hpp"
#include "gfra/sbl.hpp"

using namespace gfra;

namespace {

std::complex<double> draw_cn(double var, Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(var * 0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

Eigen::MatrixXcd random_dictionary(int w, int m, Rng& rng) {
  Eigen::MatrixXcd d(w, m);
  for (int c = 0; c < m; ++c) {
    for (int r = 0; r < w; ++r) d(r, c) = draw_cn(1.0, rng);
    d.col(c) /= d.col(c).norm();
  }
  return d;
}

// Direct Eq. 12 route: (D^H D + P)^-1 without Woodbury.
Eigen::MatrixXcd direct_covariance(const Eigen::MatrixXcd& d,
                                   const Eigen::VectorXd& alpha) {
  Eigen::MatrixXcd a = d.adjoint() * d;
  a.diagonal() += alpha.cast<std::complex<double>>();
  return a.inverse();
}

}  // namespace

TEST_CASE("covariance with orthonormal columns and unit precisions is I/2") {
  Rng rng(2);
  const int w = 8;
  // orthonormal columns from a QR of a random matrix
  Eigen::MatrixXcd m(w, 4);
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < w; ++r) m(r, c) = draw_cn(1.0, rng);
  const Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(m)
                                 .householderQ() *
                             Eigen::MatrixXcd::Identity(w, 4);
  const Eigen::MatrixXcd sigma = vb_covariance(q, Eigen::VectorXd::Ones(4));
  CHECK((sigma - 0.5 * Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() <=
        1e-12);
}

TEST_CASE("Woodbury route matches the direct inverse") {
  Rng rng(5);
  std::uniform_int_distribution<int> wdist(3, 12), mdist(2, 30);
  std::uniform_real_distribution<double> adist(-2.0, 4.0);
  for (int rep = 0; rep < 30; ++rep) {
    const int w = wdist(rng), m = mdist(rng);
    const Eigen::MatrixXcd d = random_dictionary(w, m, rng);
    Eigen::VectorXd alpha(m);
    for (int i = 0; i < m; ++i) alpha(i) = std::pow(10.0, adist(rng));
    const Eigen::MatrixXcd sigma = vb_covariance(d, alpha);
    const Eigen::MatrixXcd ref = direct_covariance(d, alpha);
    CHECK((sigma - ref).cwiseAbs().maxCoeff() <= 1e-8);

    // Hermitian with real positive diagonal
    CHECK((sigma - sigma.adjoint()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(sigma.diagonal().real().minCoeff() > 0.0);
  }
}

TEST_CASE("a capped precision suppresses its coefficient") {
  Rng rng(8);
  const Eigen::MatrixXcd d = random_dictionary(6, 10, rng);
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(10);
  const double cap = 1e12;
  alpha(3) = cap;
  const Eigen::MatrixXcd sigma = vb_covariance(d, alpha);
  CHECK(sigma(3, 3).real() <= 1.0 / cap + 1e-12);
}

TEST_CASE("covariance rejects non-positive precisions") {
  Rng rng(4);
  const Eigen::MatrixXcd d = random_dictionary(4, 6, rng);
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(6);
  alpha(2) = 0.0;
  CHECK_THROWS_AS(vb_covariance(d, alpha), std::invalid_argument);
  alpha(2) = -1.0;
  CHECK_THROWS_AS(vb_covariance(d, alpha), std::invalid_argument);
}

TEST_CASE("posterior mean basics") {
  Rng rng(6);
  const Eigen::MatrixXcd d = random_dictionary(6, 8, rng);
  const Eigen::VectorXd alpha = Eigen::VectorXd::Ones(8);
  const Eigen::MatrixXcd sigma = vb_covariance(d, alpha);

  SUBCASE("zero observation gives zero mean") {
    const Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(6, 2);
    CHECK(vb_mean(sigma, d, z).norm() == 0.0);
  }
  SUBCASE("matrix form is the stacked vector form") {
    Eigen::MatrixXcd z(6, 2);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 2; ++c) z(r, c) = draw_cn(1.0, rng);
    const Eigen::MatrixXcd g = vb_mean(sigma, d, z);
    for (int n = 0; n < 2; ++n)
      CHECK((g.col(n) - vb_mean(sigma, d, z.col(n))).norm() <= 1e-14);
  }
  SUBCASE("shape mismatch rejected") {
    const Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(5, 2);
    CHECK_THROWS_AS(vb_mean(sigma, d, z), std::invalid_argument);
  }
}

TEST_CASE("alpha update hand values and clamping") {
  Hyperparams hyper;
  hyper.a = 0.0;
  hyper.b = 0.0;
  SUBCASE("second moment equal to N_r gives alpha 1") {
    Eigen::MatrixXcd g(1, 2);
    g << std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 1.0);
    Eigen::VectorXd sdiag = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd a = alpha_update(g, sdiag, hyper, 2);
    CHECK(a(0) == doctest::Approx(1.0));
  }
  SUBCASE("zero mean row with Sigma_mm = 0.5 and N_r = 2 gives 2") {
    const Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(1, 2);
    Eigen::VectorXd sdiag(1);
    sdiag << 0.5;
    const Eigen::VectorXd a = alpha_update(g, sdiag, hyper, 2);
    CHECK(a(0) == doctest::Approx(2.0));
  }
  SUBCASE("vanishing signal clamps at the cap") {
    hyper.b = 1e-13;  // (a + N_r)/b = 2e13 exceeds the cap
    const Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(1, 2);
    const Eigen::VectorXd sdiag = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd a = alpha_update(g, sdiag, hyper, 2);
    CHECK(a(0) == hyper.alpha_cap);
  }
}

TEST_CASE("inner loop rejects max_inner < 1") {
  Rng rng(10);
  const Eigen::MatrixXcd d = random_dictionary(4, 5, rng);
  const Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(4, 2);
  Hyperparams hyper;
  hyper.max_inner = 0;
  CHECK_THROWS_AS(run_inner_loop(d, z, Eigen::VectorXd::Ones(5), hyper),
                  std::invalid_argument);
}

TEST_CASE("compact inner loop equals the explicit alternation") {
  Rng rng(12);
  Hyperparams hyper;
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::MatrixXcd d = random_dictionary(8, 20, rng);
    Eigen::MatrixXcd z(8, 2);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 2; ++c) z(r, c) = draw_cn(1.0, rng);
    const Eigen::VectorXd init = Eigen::VectorXd::Ones(20);
    const ApPosterior full = run_inner_loop(d, z, init, hyper);
    const InnerState compact = run_inner_loop_compact(d, z, init, hyper);
    CHECK((full.alpha_mean - compact.alpha_mean).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((full.g_mean - compact.g_mean).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((full.covariance.diagonal().real() - compact.sigma_diag)
              .cwiseAbs()
              .maxCoeff() <= 1e-10);
  }
}

TEST_CASE("converged precisions are a fixed point of the update") {
  Rng rng(14);
  const Eigen::MatrixXcd d = random_dictionary(8, 12, rng);
  Eigen::MatrixXcd z(8, 2);
  // two planted rows plus noise
  Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Zero(12, 2);
  for (int c = 0; c < 2; ++c) {
    g0(2, c) = draw_cn(25.0, rng);
    g0(9, c) = draw_cn(25.0, rng);
  }
  z = d * g0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 2; ++c) z(r, c) += draw_cn(0.01, rng);

  Hyperparams one;
  one.max_inner = 1;
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(12);
  double change = 1.0;
  // precisions of pruned rows creep toward their noise-floor limit very
  // slowly, so the budget has to be generous for the change to settle
  for (int it = 0; it < 2000000 && change > 1e-9; ++it) {
    const Eigen::VectorXd next =
        run_inner_loop_compact(d, z, alpha, one).alpha_mean;
    change = (next - alpha).cwiseAbs().maxCoeff() /
             std::max(alpha.cwiseAbs().maxCoeff(), 1e-300);
    alpha = next;
  }
  REQUIRE(change <= 1e-7);
  const Eigen::VectorXd reapplied =
      run_inner_loop_compact(d, z, alpha, one).alpha_mean;
  const double rel = (reapplied - alpha).cwiseAbs().maxCoeff() /
                     alpha.cwiseAbs().maxCoeff();
  CHECK(rel <= Hyperparams{}.convergence_tol);
}

namespace {

// Variational free energy of the Gaussian-Gamma model, constants included so
// only iteration-to-iteration differences matter.
double elbo(const Eigen::MatrixXcd& d, const Eigen::MatrixXcd& z,
            const Eigen::MatrixXcd& sigma, const Eigen::MatrixXcd& g,
            const Hyperparams& hyper) {
  const int n_r = static_cast<int>(z.cols());
  const auto m = d.cols();
  const double a_post = hyper.a + n_r;
  const double psi_a = boost::math::digamma(a_post);
  const double lgamma_a = std::lgamma(a_post);

  double f = 0.0;
  // E[log p(Z|G)]
  f -= (z - d * g).squaredNorm();
  f -= n_r * (d * sigma * d.adjoint()).trace().real();
  // Gaussian entropy: N_r * log det Sigma (complex), additive constants dropped
  const Eigen::LLT<Eigen::MatrixXcd> llt(sigma);
  REQUIRE(llt.info() == Eigen::Success);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    logdet += 2.0 * std::log(llt.matrixLLT()(i, i).real());
  f += n_r * logdet;

  for (Eigen::Index i = 0; i < m; ++i) {
    const double e = g.row(i).squaredNorm() + n_r * sigma(i, i).real();
    const double b_post = hyper.b + e;
    const double mean_alpha = a_post / b_post;
    const double mean_log_alpha = psi_a - std::log(b_post);
    // E[log p(G|alpha)] + E[log p(alpha)]
    f += n_r * mean_log_alpha - mean_alpha * e;
    f += (hyper.a - 1.0) * mean_log_alpha - hyper.b * mean_alpha;
    // Gamma entropy
    f += a_post - std::log(b_post) + lgamma_a + (1.0 - a_post) * psi_a;
  }
  return f;
}

}  // namespace

TEST_CASE("variational free energy is non-decreasing across iterations") {
  Rng rng(21);
  const Eigen::MatrixXcd d = random_dictionary(8, 14, rng);
  Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Zero(14, 2);
  for (int c = 0; c < 2; ++c) {
    g0(4, c) = draw_cn(16.0, rng);
    g0(11, c) = draw_cn(16.0, rng);
  }
  Eigen::MatrixXcd z = d * g0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 2; ++c) z(r, c) += draw_cn(0.05, rng);

  Hyperparams hyper;
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(14);
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 25; ++it) {
    const Eigen::MatrixXcd sigma = vb_covariance(d, alpha);
    const Eigen::MatrixXcd g = vb_mean(sigma, d, z);
    const double f = elbo(d, z, sigma, g, hyper);
    CHECK(f >= prev - 1e-8 * std::max(1.0, std::abs(prev)));
    prev = f;
    alpha = alpha_update(g, sigma, hyper, 2);
  }
}

TEST_CASE("unit-modulus scaling of Z rotates G and leaves alpha unchanged") {
  Rng rng(31);
  const Eigen::MatrixXcd d = random_dictionary(8, 12, rng);
  Eigen::MatrixXcd z(8, 2);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 2; ++c) z(r, c) = draw_cn(4.0, rng);
  const std::complex<double> phase = std::polar(1.0, 0.7);

  Hyperparams hyper;
  const ApPosterior p1 = run_inner_loop(d, z, Eigen::VectorXd::Ones(12), hyper);
  const ApPosterior p2 =
      run_inner_loop(d, (phase * z).eval(), Eigen::VectorXd::Ones(12), hyper);
  CHECK((p1.alpha_mean - p2.alpha_mean).cwiseAbs().maxCoeff() <=
        1e-9 * p1.alpha_mean.cwiseAbs().maxCoeff());
  CHECK((phase * p1.g_mean - p2.g_mean).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("noiseless planted instance recovers the true row") {
  Rng rng(41);
  const int w = 12, m = 18;
  const Eigen::MatrixXcd d = random_dictionary(w, m, rng);
  Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Zero(m, 2);
  for (int c = 0; c < 2; ++c) g0(7, c) = draw_cn(1000.0, rng);
  const Eigen::MatrixXcd z = d * g0;

  Hyperparams hyper;
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(m);
  InnerState st;
  for (int r = 0; r < hyper.outer_rounds(); ++r) {
    st = run_inner_loop_compact(d, z, alpha, hyper);
    const double change = (st.alpha_mean - alpha).cwiseAbs().maxCoeff() /
                          std::max(alpha.cwiseAbs().maxCoeff(), 1e-300);
    alpha = st.alpha_mean;
    if (change < hyper.convergence_tol) break;
  }
  CHECK((st.g_mean.row(7) - g0.row(7)).squaredNorm() / g0.row(7).squaredNorm() <=
        1e-3);
  CHECK(alpha(7) < 1.0);
}

TEST_CASE("genie estimator") {
  Rng rng(51);
  SUBCASE("single column, unit prior, zero noise shrinks by 1/2") {
    const Eigen::MatrixXcd d = random_dictionary(6, 4, rng);
    Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Zero(4, 2);
    for (int c = 0; c < 2; ++c) g0(1, c) = draw_cn(1.0, rng);
    const Eigen::MatrixXcd z = d * g0;
    const Eigen::MatrixXcd g = genie_estimate(d, z, {1}, {1.0});
    CHECK((g.row(1) - 0.5 * g0.row(1)).norm() <= 1e-12);
    CHECK(g.row(0).norm() == 0.0);
  }
  SUBCASE("noiseless with huge prior is exact least squares") {
    const Eigen::MatrixXcd d = random_dictionary(8, 10, rng);
    Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Zero(10, 2);
    for (int c = 0; c < 2; ++c) {
      g0(2, c) = draw_cn(4.0, rng);
      g0(6, c) = draw_cn(4.0, rng);
    }
    const Eigen::MatrixXcd z = d * g0;
    const Eigen::MatrixXcd g = genie_estimate(d, z, {2, 6}, {1e14, 1e14});
    CHECK((g - g0).cwiseAbs().maxCoeff() <= 1e-10 * g0.cwiseAbs().maxCoeff());
  }
  SUBCASE("empty support returns zeros") {
    const Eigen::MatrixXcd d = random_dictionary(5, 6, rng);
    const Eigen::MatrixXcd z = Eigen::MatrixXcd::Ones(5, 2);
    CHECK(genie_estimate(d, z, {}, {}).norm() == 0.0);
  }
}
