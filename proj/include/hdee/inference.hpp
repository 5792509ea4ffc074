#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hdee/errors.hpp"
#include "hdee/lp.hpp"
#include "hdee/models.hpp"
#include "hdee/normal.hpp"

namespace hdee {

// How a regularization level is chosen. FixedFormula means c*sqrt(log d / n)
// with n the model's effective sample size.
struct TuningRule {
  enum class Kind { FixedFormula, FixedValue, CrossValidation };
  Kind kind = Kind::FixedFormula;
  double c = 0.5;
  double value = 0.0;
  std::vector<double> grid;
  int folds = 10;

  static TuningRule formula(double c_) {
    TuningRule r;
    r.kind = Kind::FixedFormula;
    r.c = c_;
    return r;
  }
  static TuningRule fixed(double v) {
    TuningRule r;
    r.kind = Kind::FixedValue;
    r.value = v;
    return r;
  }
  static TuningRule cv(std::vector<double> grid_, int folds_) {
    TuningRule r;
    r.kind = Kind::CrossValidation;
    r.grid = std::move(grid_);
    r.folds = folds_;
    return r;
  }

  void validate() const {
    switch (kind) {
      case Kind::FixedFormula:
        if (c < 0.0) throw BadSpec("TuningRule: formula constant must be >= 0");
        break;
      case Kind::FixedValue:
        if (value < 0.0) throw BadSpec("TuningRule: fixed value must be >= 0");
        break;
      case Kind::CrossValidation:
        if (grid.empty()) throw BadSpec("TuningRule: empty CV grid");
        if (folds < 2) throw BadSpec("TuningRule: need at least 2 folds");
        for (double g : grid)
          if (g < 0.0) throw BadSpec("TuningRule: negative grid value");
        break;
    }
  }
};

struct InferenceDiagnostics {
  LpStatus lp_status_beta = LpStatus::IterationLimit;
  LpStatus lp_status_v = LpStatus::IterationLimit;
  double residual_beta = 0.0;
  double residual_v = 0.0;
  bool delta_clamped = false;
};

struct InferenceResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd v_hat;
  double theta_tilde = 0.0;
  double delta_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
  double u_denominator = 0.0;  // v' jac_{*j}
  double lambda = 0.0;         // resolved values, for diagnostics
  double lambda_prime = 0.0;
  long n_eff = 0;
  InferenceDiagnostics diagnostics;
};

namespace detail {

inline LpSolution solve_or_throw(const DantzigProblem& pr, const char* what) {
  LpSolution sol = solve_dantzig(pr);
  if (sol.status != LpStatus::Optimal)
    throw InfeasibleProgram(std::string(what) + ": LP finished with status " +
                            to_string(sol.status));
  return sol;
}

}  // namespace detail

inline Eigen::VectorXd estimate_beta(const EquationMatrices& em, double lambda) {
  if (lambda < 0.0) throw OutOfRange("estimate_beta: lambda must be >= 0");
  return detail::solve_or_throw({em.jac, em.rhs, lambda}, "estimate_beta").x;
}

inline Eigen::VectorXd estimate_beta(const ModelInstance& model, double lambda) {
  return estimate_beta(assemble(model), lambda);
}

// Direction for the debiasing projection: the constraint is on v' jac - e_j,
// i.e. a Dantzig problem in jac^T.
inline Eigen::VectorXd estimate_projection(const EquationMatrices& em, int target,
                                           double lambda_prime) {
  if (lambda_prime < 0.0) throw OutOfRange("estimate_projection: lambda' must be >= 0");
  const int d = static_cast<int>(em.jac.rows());
  return detail::solve_or_throw(
             {em.jac.transpose(), unit_vector(d, target), lambda_prime}, "estimate_projection")
      .x;
}

inline Eigen::VectorXd estimate_projection(const ModelInstance& model, double lambda_prime) {
  return estimate_projection(assemble(model), model.target, lambda_prime);
}

// Root of the projected equation in the target coordinate. The equation is
// affine, so the root is closed form; the result is re-checked by direct
// substitution.
inline double solve_theta(const EquationMatrices& em, int target, const Eigen::VectorXd& beta_hat,
                          const Eigen::VectorXd& v_hat) {
  const double denom = v_hat.dot(em.jac.col(target - 1));
  if (std::abs(denom) < 1e-10)
    throw DegenerateProjection("solve_theta: |v' jac_{*j}| = " + std::to_string(std::abs(denom)));
  const double s0 = v_hat.dot(em.jac * beta_hat - em.rhs);
  const double theta = beta_hat(target - 1) - s0 / denom;
  Eigen::VectorXd shifted = beta_hat;
  shifted(target - 1) = theta;
  const double check = std::abs(v_hat.dot(em.jac * shifted - em.rhs));
  if (check > 1e-10)
    throw Error("solve_theta: projected equation residual " + std::to_string(check));
  return theta;
}

inline double solve_theta(const ModelInstance& model, const Eigen::VectorXd& beta_hat,
                          const Eigen::VectorXd& v_hat) {
  return solve_theta(assemble(model), model.target, beta_hat, v_hat);
}

inline std::pair<double, double> confidence_interval(double theta_tilde, double delta_hat,
                                                     long n_eff, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw BadAlpha("confidence_interval: alpha must be in (0,1)");
  if (delta_hat < 0.0) throw OutOfRange("confidence_interval: delta_hat must be >= 0");
  if (n_eff < 1) throw OutOfRange("confidence_interval: n_eff must be >= 1");
  const double z = inverse_normal_cdf(1.0 - alpha / 2.0);
  const double hw = z * std::sqrt(delta_hat / static_cast<double>(n_eff));
  return {theta_tilde - hw, theta_tilde + hw};
}

// 10-fold style cross validation of the fitting lambda. Linear models score
// a grid value by held-out mean squared prediction error. The graphical
// models fit the full precision matrix column by column on the training
// part, symmetrize, floor the spectrum at 1e-6 when needed, and score by the
// held-out Gaussian loss tr(S Omega) - logdet Omega. Grid values whose
// training program is infeasible score +inf. Ties pick the smallest lambda.
inline double cross_validate_lambda(const ModelInstance& model, const std::vector<double>& grid,
                                    int folds) {
  model.validate();
  if (grid.empty()) throw BadSpec("cross_validate_lambda: empty grid");
  if (folds < 2) throw BadSpec("cross_validate_lambda: need at least 2 folds");
  if (model.kind == ModelKind::Ivr || model.kind == ModelKind::Lda ||
      model.kind == ModelKind::Var1)
    throw UnsupportedModel("cross_validate_lambda: no CV loss for model '" +
                           std::string(to_string(model.kind)) + "'");

  const Eigen::MatrixXd& X = model.kind == ModelKind::Linear
                                 ? std::get<LinearData>(model.data).X
                                 : (model.kind == ModelKind::Clime
                                        ? std::get<ClimeData>(model.data).X
                                        : std::get<SkepticData>(model.data).X);
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (folds > n) throw BadSpec("cross_validate_lambda: more folds than rows");

  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> loss(sorted.size(), 0.0);

  // Contiguous blocks of rows; fold f covers [f*n/folds, (f+1)*n/folds).
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index lo = f * n / folds;
    const Eigen::Index hi = (f + 1) * n / folds;
    const Eigen::Index ntest = hi - lo;
    const Eigen::Index ntrain = n - ntest;
    if (ntest == 0 || ntrain == 0) continue;
    Eigen::MatrixXd Xtrain(ntrain, d), Xtest(ntest, d);
    Xtrain.topRows(lo) = X.topRows(lo);
    Xtrain.bottomRows(n - hi) = X.bottomRows(n - hi);
    Xtest = X.middleRows(lo, ntest);

    if (model.kind == ModelKind::Linear) {
      const auto& dat = std::get<LinearData>(model.data);
      Eigen::VectorXd ytrain(ntrain), ytest(ntest);
      ytrain.head(lo) = dat.y.head(lo);
      ytrain.tail(n - hi) = dat.y.tail(n - hi);
      ytest = dat.y.segment(lo, ntest);
      EquationMatrices em;
      em.jac = Xtrain.transpose() * Xtrain / static_cast<double>(ntrain);
      em.rhs = Xtrain.transpose() * ytrain / static_cast<double>(ntrain);
      for (std::size_t g = 0; g < sorted.size(); ++g) {
        LpSolution sol = solve_dantzig({em.jac, em.rhs, sorted[g]});
        if (sol.status != LpStatus::Optimal) {
          loss[g] = std::numeric_limits<double>::infinity();
          continue;
        }
        loss[g] += (ytest - Xtest * sol.x).squaredNorm() / static_cast<double>(ntest);
      }
    } else {
      Eigen::MatrixXd Strain, Stest;
      if (model.kind == ModelKind::Clime) {
        Strain = Xtrain.transpose() * Xtrain / static_cast<double>(ntrain);
        Stest = Xtest.transpose() * Xtest / static_cast<double>(ntest);
      } else {
        Strain = skeptic_transform(kendall_tau(Xtrain));
        Stest = skeptic_transform(kendall_tau(Xtest));
      }
      for (std::size_t g = 0; g < sorted.size(); ++g) {
        if (std::isinf(loss[g])) continue;
        Eigen::MatrixXd omega(d, d);
        bool feasible = true;
        for (int k = 1; k <= d && feasible; ++k) {
          LpSolution sol = solve_dantzig({Strain, unit_vector(static_cast<int>(d), k), sorted[g]});
          if (sol.status != LpStatus::Optimal) {
            feasible = false;
            break;
          }
          omega.col(k - 1) = sol.x;
        }
        if (!feasible) {
          loss[g] = std::numeric_limits<double>::infinity();
          continue;
        }
        Eigen::MatrixXd sym = 0.5 * (omega + omega.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
        Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(1e-6);
        Eigen::MatrixXd floored =
            eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
        const double logdet = ev.array().log().sum();
        loss[g] += (Stest * floored).trace() - logdet;
      }
    }
  }

  std::size_t best = sorted.size();
  for (std::size_t g = 0; g < sorted.size(); ++g) {
    if (std::isfinite(loss[g]) && (best == sorted.size() || loss[g] < loss[best])) best = g;
  }
  if (best == sorted.size())
    throw InfeasibleProgram("cross_validate_lambda: every grid value was infeasible");
  return sorted[best];
}

inline double resolve_tuning(const TuningRule& rule, const ModelInstance& model) {
  rule.validate();
  switch (rule.kind) {
    case TuningRule::Kind::FixedValue: return rule.value;
    case TuningRule::Kind::FixedFormula:
      return rule.c * std::sqrt(std::log(static_cast<double>(model.dim())) /
                                static_cast<double>(model.n_eff()));
    case TuningRule::Kind::CrossValidation:
      return cross_validate_lambda(model, rule.grid, rule.folds);
  }
  throw Error("resolve_tuning: unreachable");
}

// End-to-end pipeline: resolve the tuning levels, fit beta and the
// projection direction, take the closed-form root, estimate the variance and
// build the interval.
inline InferenceResult run_inference(const ModelInstance& model, const TuningRule& lambda_rule,
                                     const TuningRule& lambda_prime_rule, double alpha) {
  model.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw BadAlpha("run_inference: alpha must be in (0,1)");

  InferenceResult out;
  out.alpha = alpha;
  out.n_eff = model.n_eff();
  out.lambda = resolve_tuning(lambda_rule, model);
  out.lambda_prime = resolve_tuning(lambda_prime_rule, model);

  // For the rank-based model the tau tables serve both the equation matrix
  // and the variance estimate; compute them once.
  EquationMatrices em;
  KendallTables tables;
  const bool skeptic = model.kind == ModelKind::Skeptic;
  if (skeptic) {
    tables = kendall_tables(std::get<SkepticData>(model.data).X);
    em.jac = tables.s_tau;
    em.rhs = unit_vector(model.dim(), model.column);
  } else {
    em = assemble(model);
  }

  LpSolution beta_sol = solve_dantzig({em.jac, em.rhs, out.lambda});
  out.diagnostics.lp_status_beta = beta_sol.status;
  out.diagnostics.residual_beta = beta_sol.residual_inf;
  if (beta_sol.status != LpStatus::Optimal)
    throw InfeasibleProgram("run_inference: beta LP finished with status " +
                            std::string(to_string(beta_sol.status)));
  out.beta_hat = beta_sol.x;

  LpSolution v_sol = solve_dantzig(
      {em.jac.transpose(), unit_vector(model.dim(), model.target), out.lambda_prime});
  out.diagnostics.lp_status_v = v_sol.status;
  out.diagnostics.residual_v = v_sol.residual_inf;
  if (v_sol.status != LpStatus::Optimal)
    throw InfeasibleProgram("run_inference: projection LP finished with status " +
                            std::string(to_string(v_sol.status)));
  out.v_hat = v_sol.x;

  out.u_denominator = out.v_hat.dot(em.jac.col(model.target - 1));
  out.theta_tilde = solve_theta(em, model.target, out.beta_hat, out.v_hat);
  out.delta_hat = estimate_delta(model, out.beta_hat, out.v_hat, &out.diagnostics.delta_clamped,
                                 skeptic ? &tables : nullptr);
  auto ci = confidence_interval(out.theta_tilde, out.delta_hat, out.n_eff, alpha);
  out.ci_lo = ci.first;
  out.ci_hi = ci.second;
  return out;
}

}  // namespace hdee
