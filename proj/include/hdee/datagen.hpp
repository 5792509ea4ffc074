#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "hdee/errors.hpp"
#include "hdee/models.hpp"
#include "hdee/rng.hpp"

namespace hdee {

enum class BetaMode { Dirac, Uniform };

// Seeded description of one synthetic dataset. `target`/`column` pick the
// coordinate whose true value lands in GeneratedData::theta_star.
struct GeneratorSpec {
  ModelKind kind = ModelKind::Linear;
  long n = 0;   // linear, ivr, clime, skeptic
  long n1 = 0;  // lda
  long n2 = 0;
  long T = 0;  // var1
  int d = 0;
  double rho = 0.0;
  BetaMode beta_mode = BetaMode::Dirac;
  double alpha_power = 5.0;
  std::uint64_t seed = 0;
  int target = 1;
  int column = 1;

  void validate() const {
    if (d < 1) throw BadSpec("GeneratorSpec: d must be >= 1");
    if (target < 1 || target > d) throw BadSpec("GeneratorSpec: target outside 1..d");
    if (column < 1 || column > d) throw BadSpec("GeneratorSpec: column outside 1..d");
    if (alpha_power <= 0.0) throw BadSpec("GeneratorSpec: alpha_power must be > 0");
    switch (kind) {
      case ModelKind::Linear:
      case ModelKind::Ivr:
      case ModelKind::Clime:
      case ModelKind::Skeptic:
        if (n < 2) throw BadSpec("GeneratorSpec: n must be >= 2");
        break;
      case ModelKind::Lda:
        if (n1 < 2 || n2 < 2) throw BadSpec("GeneratorSpec: n1 and n2 must be >= 2");
        break;
      case ModelKind::Var1:
        if (T < 2) throw BadSpec("GeneratorSpec: T must be >= 2");
        break;
    }
    const bool toeplitz_model =
        kind == ModelKind::Linear || kind == ModelKind::Ivr || kind == ModelKind::Lda;
    if (toeplitz_model && std::abs(rho) >= 1.0)
      throw BadSpec("GeneratorSpec: Toeplitz correlation needs |rho| < 1");
  }
};

struct GeneratedData {
  Dataset dataset;
  Eigen::VectorXd beta_star;  // column of Omega*/A for the matrix models
  double theta_star = 0.0;
  Eigen::MatrixXd truth_matrix;  // Sigma_X, Omega*, Sigma, or A per model
  // Population counterparts of the assembled equation; the equation at
  // beta_star with these matrices is exactly zero.
  Eigen::MatrixXd population_jacobian;
  Eigen::VectorXd population_rhs;
};

inline Eigen::MatrixXd toeplitz(int d, double rho) {
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i, j) = std::pow(rho, std::abs(i - j));
  return s;
}

inline Eigen::MatrixXd tridiagonal_precision(int d, double rho) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Identity(d, d);
  for (int i = 0; i + 1 < d; ++i) omega(i, i + 1) = omega(i + 1, i) = rho;
  return omega;
}

namespace detail {

inline Eigen::MatrixXd chol_or_throw(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite(std::string(what) + " is not positive definite");
  return llt.matrixL();
}

// Rows are independent N(0, L L'). Draw order is row major, coordinate by
// coordinate, so a fixed seed reproduces the same matrix on every build.
inline Eigen::MatrixXd gaussian_rows(RngStream& rng, long rows, const Eigen::MatrixXd& L) {
  const Eigen::Index d = L.rows();
  Eigen::MatrixXd X(rows, d);
  Eigen::VectorXd z(d);
  for (long i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = rng.normal();
    X.row(i) = (L * z).transpose();
  }
  return X;
}

inline Eigen::VectorXd draw_beta_star(RngStream& rng, int d, BetaMode mode) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  const int support = std::min(d, 3);
  for (int j = 0; j < support; ++j)
    beta(j) = mode == BetaMode::Dirac ? 1.0 : rng.uniform(0.0, 2.0);
  return beta;
}

inline Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite(std::string(what) + " is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace detail

// Spectral norm by power iteration on A'A; deterministic start vector.
inline double spectral_norm_estimate(const Eigen::MatrixXd& A, int iters = 200) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(A.cols()).normalized();
  Eigen::MatrixXd G = A.transpose() * A;
  double lam = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = G * v;
    lam = w.norm();
    if (lam == 0.0) return 0.0;
    v = w / lam;
  }
  return std::sqrt(lam);
}

// Stationary covariance of X_t = A' X_{t-1} + W_t:  S = A' S A + Psi,
// summed by squaring so the tail closes quadratically.
inline Eigen::MatrixXd discrete_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Psi,
                                         double tol = 1e-14, int max_doublings = 100) {
  Eigen::MatrixXd S = Psi;
  Eigen::MatrixXd M = A;
  for (int it = 0; it < max_doublings; ++it) {
    Eigen::MatrixXd inc = M.transpose() * S * M;
    S += inc;
    if (inc.lpNorm<Eigen::Infinity>() < tol) break;
    M = M * M;
  }
  return 0.5 * (S + S.transpose());
}

inline GeneratedData gen_linear(const GeneratorSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Linear) throw BadSpec("gen_linear: wrong kind");
  RngStream rng(spec.seed);
  GeneratedData g;
  Eigen::MatrixXd sigma = toeplitz(spec.d, spec.rho);
  Eigen::MatrixXd L = detail::chol_or_throw(sigma, "Toeplitz(rho)");
  g.beta_star = detail::draw_beta_star(rng, spec.d, spec.beta_mode);
  LinearData dat;
  dat.X = detail::gaussian_rows(rng, spec.n, L);
  Eigen::VectorXd eps(spec.n);
  for (long i = 0; i < spec.n; ++i) eps(i) = rng.normal();
  dat.y = dat.X * g.beta_star + eps;
  g.dataset = std::move(dat);
  g.theta_star = g.beta_star(spec.target - 1);
  g.truth_matrix = sigma;
  g.population_jacobian = sigma;
  g.population_rhs = sigma * g.beta_star;
  return g;
}

// Instrumental-variables design (the source papers simulate no IVR model, so
// this one is fixed here): W ~ N(0, Toeplitz(rho)); X = 0.8 W + E with
// E ~ N(0, 0.6^2 I); eps = 0.5 * rowmean(E) + eta with eta ~ N(0, 0.75).
// E[W eps] = 0 holds while X and eps share the E noise, so X is endogenous.
inline GeneratedData gen_ivr(const GeneratorSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Ivr) throw BadSpec("gen_ivr: wrong kind");
  RngStream rng(spec.seed);
  GeneratedData g;
  Eigen::MatrixXd sigma = toeplitz(spec.d, spec.rho);
  Eigen::MatrixXd L = detail::chol_or_throw(sigma, "Toeplitz(rho)");
  g.beta_star = detail::draw_beta_star(rng, spec.d, spec.beta_mode);
  IvrData dat;
  dat.W = detail::gaussian_rows(rng, spec.n, L);
  Eigen::MatrixXd E(spec.n, spec.d);
  for (long i = 0; i < spec.n; ++i)
    for (int j = 0; j < spec.d; ++j) E(i, j) = 0.6 * rng.normal();
  dat.X = 0.8 * dat.W + E;
  Eigen::VectorXd eps(spec.n);
  const double eta_sd = std::sqrt(0.75);
  for (long i = 0; i < spec.n; ++i) eps(i) = 0.5 * E.row(i).mean() + eta_sd * rng.normal();
  dat.y = dat.X * g.beta_star + eps;
  g.dataset = std::move(dat);
  g.theta_star = g.beta_star(spec.target - 1);
  g.truth_matrix = sigma;
  g.population_jacobian = 0.8 * sigma;  // E[W X'] = 0.8 Sigma_W
  g.population_rhs = g.population_jacobian * g.beta_star;
  return g;
}

inline GeneratedData gen_ggm(const GeneratorSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Clime) throw BadSpec("gen_ggm: wrong kind");
  RngStream rng(spec.seed);
  GeneratedData g;
  Eigen::MatrixXd omega = tridiagonal_precision(spec.d, spec.rho);
  Eigen::MatrixXd sigma = detail::invert_spd(omega, "tridiagonal precision");
  Eigen::MatrixXd L = detail::chol_or_throw(sigma, "Omega^{-1}");
  ClimeData dat;
  dat.X = detail::gaussian_rows(rng, spec.n, L);
  g.dataset = std::move(dat);
  g.beta_star = omega.col(spec.column - 1);
  g.theta_star = omega(spec.target - 1, spec.column - 1);
  g.truth_matrix = omega;
  g.population_jacobian = sigma;
  g.population_rhs = unit_vector(spec.d, spec.column);
  return g;
}

// Power transform of a latent Gaussian copula. The latent precision matrix
// is rescaled so Sigma = Omega^{-1} is a correlation matrix; the reported
// truth is the rescaled Omega*. The marginal divisor sqrt(E|Z|^{2 alpha}) is
// the closed-form Gaussian absolute moment 2^alpha Gamma(alpha + 1/2) /
// sqrt(pi).
inline GeneratedData gen_transelliptical(const GeneratorSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Skeptic) throw BadSpec("gen_transelliptical: wrong kind");
  RngStream rng(spec.seed);
  GeneratedData g;
  Eigen::MatrixXd omega0 = tridiagonal_precision(spec.d, spec.rho);
  Eigen::MatrixXd sigma0 = detail::invert_spd(omega0, "tridiagonal precision");
  Eigen::VectorXd dinv = sigma0.diagonal().array().rsqrt();
  Eigen::MatrixXd sigma = dinv.asDiagonal() * sigma0 * dinv.asDiagonal();
  sigma = 0.5 * (sigma + sigma.transpose());
  Eigen::MatrixXd omega = detail::invert_spd(sigma, "latent correlation");
  Eigen::MatrixXd L = detail::chol_or_throw(sigma, "latent correlation");

  const double alpha = spec.alpha_power;
  const double moment = std::pow(2.0, alpha) * std::tgamma(alpha + 0.5) / std::sqrt(M_PI);
  const double divisor = std::sqrt(moment);

  Eigen::MatrixXd Z = detail::gaussian_rows(rng, spec.n, L);
  SkepticData dat;
  dat.X.resize(spec.n, spec.d);
  for (long i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.d; ++j) {
      const double z = Z(i, j);
      const double f = (z >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(z), alpha);
      dat.X(i, j) = f / divisor;
    }
  }
  g.dataset = std::move(dat);
  g.beta_star = omega.col(spec.column - 1);
  g.theta_star = omega(spec.target - 1, spec.column - 1);
  g.truth_matrix = omega;
  g.population_jacobian = sigma;
  g.population_rhs = unit_vector(spec.d, spec.column);
  return g;
}

// Two Gaussian populations with shared covariance. mu1 = 0 and mu2 = -delta
// with delta = Sigma beta* for a Dirac beta*, so beta* = Omega(mu1 - mu2)
// holds by construction.
inline GeneratedData gen_lda(const GeneratorSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Lda) throw BadSpec("gen_lda: wrong kind");
  RngStream rng(spec.seed);
  GeneratedData g;
  Eigen::MatrixXd sigma = toeplitz(spec.d, spec.rho);
  Eigen::MatrixXd L = detail::chol_or_throw(sigma, "Toeplitz(rho)");
  g.beta_star = detail::draw_beta_star(rng, spec.d, BetaMode::Dirac);
  Eigen::VectorXd delta = sigma * g.beta_star;
  Eigen::VectorXd mu2 = -delta;
  Eigen::MatrixXd U = detail::gaussian_rows(rng, spec.n1 + spec.n2, L);
  LdaData dat;
  dat.X = U.topRows(spec.n1);
  dat.Y = U.bottomRows(spec.n2);
  dat.Y.rowwise() += mu2.transpose();
  g.dataset = std::move(dat);
  g.theta_star = g.beta_star(spec.target - 1);
  g.truth_matrix = sigma;
  g.population_jacobian = sigma;
  g.population_rhs = delta;
  return g;
}

// Stationary lag-1 autoregression with a caller-supplied transition matrix.
// The start X_0 ~ N(0, Sigma_0) is drawn from the exact stationary law, so
// no burn-in is involved.
inline GeneratedData var1_from_transition(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Psi,
                                          long T, std::uint64_t seed, int target, int column) {
  const int d = static_cast<int>(A.rows());
  if (A.cols() != d || Psi.rows() != d || Psi.cols() != d)
    throw DimensionMismatch("var1_from_transition: A and Psi must be square and conforming");
  const double snorm = spectral_norm_estimate(A);
  if (snorm >= 1.0)
    throw Unstable("var1_from_transition: spectral norm " + std::to_string(snorm) + " >= 1");
  RngStream rng(seed);
  GeneratedData g;
  Eigen::MatrixXd sigma0 = discrete_lyapunov(A, Psi);
  Eigen::MatrixXd L0 = detail::chol_or_throw(sigma0, "stationary covariance");
  Eigen::MatrixXd Lw = detail::chol_or_throw(Psi, "Psi");
  Var1Data dat;
  dat.X.resize(T, d);
  Eigen::VectorXd z(d);
  for (int j = 0; j < d; ++j) z(j) = rng.normal();
  dat.X.row(0) = (L0 * z).transpose();
  for (long t = 1; t < T; ++t) {
    for (int j = 0; j < d; ++j) z(j) = rng.normal();
    dat.X.row(t) = dat.X.row(t - 1) * A + (Lw * z).transpose();
  }
  g.dataset = std::move(dat);
  g.beta_star = A.col(column - 1);
  g.theta_star = A(target - 1, column - 1);
  g.truth_matrix = A;
  g.population_jacobian = sigma0;
  g.population_rhs = (sigma0 * A).col(column - 1);
  return g;
}

// Default design: A = 0.5 * (tridiagonal with unit diagonal and 0.4 bands),
// rescaled if necessary to keep the spectral norm at 0.9; Psi = I.
inline GeneratedData gen_var1(const GeneratorSpec& spec) {
  spec.validate();
  if (spec.kind != ModelKind::Var1) throw BadSpec("gen_var1: wrong kind");
  Eigen::MatrixXd A = 0.5 * tridiagonal_precision(spec.d, 0.4);
  const double snorm = spectral_norm_estimate(A);
  if (snorm > 0.9) A *= 0.9 / snorm;
  return var1_from_transition(A, Eigen::MatrixXd::Identity(spec.d, spec.d), spec.T, spec.seed,
                              spec.target, spec.column);
}

inline GeneratedData generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case ModelKind::Linear: return gen_linear(spec);
    case ModelKind::Ivr: return gen_ivr(spec);
    case ModelKind::Clime: return gen_ggm(spec);
    case ModelKind::Skeptic: return gen_transelliptical(spec);
    case ModelKind::Lda: return gen_lda(spec);
    case ModelKind::Var1: return gen_var1(spec);
  }
  throw BadSpec("generate: unknown model kind");
}

}  // namespace hdee
