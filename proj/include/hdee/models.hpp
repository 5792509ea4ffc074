#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>

#include "hdee/errors.hpp"
#include "hdee/kendall.hpp"

namespace hdee {

enum class ModelKind { Linear, Ivr, Clime, Skeptic, Lda, Var1 };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Ivr: return "ivr";
    case ModelKind::Clime: return "clime";
    case ModelKind::Skeptic: return "skeptic";
    case ModelKind::Lda: return "lda";
    case ModelKind::Var1: return "var1";
  }
  return "?";
}

struct LinearData {
  Eigen::MatrixXd X;  // n x d
  Eigen::VectorXd y;  // n
};
struct IvrData {
  Eigen::MatrixXd X;  // n x d covariates
  Eigen::MatrixXd W;  // n x d instruments
  Eigen::VectorXd y;  // n
};
struct ClimeData {
  Eigen::MatrixXd X;  // n x d
};
struct SkepticData {
  Eigen::MatrixXd X;  // n x d
};
struct LdaData {
  Eigen::MatrixXd X;  // n1 x d, population 1
  Eigen::MatrixXd Y;  // n2 x d, population 2
};
struct Var1Data {
  Eigen::MatrixXd X;  // T x d, rows in time order
};

using Dataset = std::variant<LinearData, IvrData, ClimeData, SkepticData, LdaData, Var1Data>;

// One estimating-equation instance: the data, which backend interprets it,
// the coordinate of interest j (`target`, 1-based) and, for the matrix-
// valued models (Clime/Skeptic/Var1), the column m being estimated.
struct ModelInstance {
  ModelKind kind;
  Dataset data;
  int target = 1;
  int column = 1;

  int dim() const {
    return std::visit([](const auto& d) { return static_cast<int>(dim_of(d)); }, data);
  }

  long n_eff() const {
    return std::visit([](const auto& d) { return rows_of(d); }, data);
  }

  void validate() const {
    std::visit([](const auto& d) { check_data(d); }, data);
    const int dd = dim();
    if (target < 1 || target > dd)
      throw OutOfRange("ModelInstance: target " + std::to_string(target) + " outside 1.." +
                       std::to_string(dd));
    const bool uses_column =
        kind == ModelKind::Clime || kind == ModelKind::Skeptic || kind == ModelKind::Var1;
    if (uses_column && (column < 1 || column > dd))
      throw OutOfRange("ModelInstance: column " + std::to_string(column) + " outside 1.." +
                       std::to_string(dd));
  }

 private:
  static Eigen::Index dim_of(const LinearData& d) { return d.X.cols(); }
  static Eigen::Index dim_of(const IvrData& d) { return d.X.cols(); }
  static Eigen::Index dim_of(const ClimeData& d) { return d.X.cols(); }
  static Eigen::Index dim_of(const SkepticData& d) { return d.X.cols(); }
  static Eigen::Index dim_of(const LdaData& d) { return d.X.cols(); }
  static Eigen::Index dim_of(const Var1Data& d) { return d.X.cols(); }

  static long rows_of(const LinearData& d) { return d.X.rows(); }
  static long rows_of(const IvrData& d) { return d.X.rows(); }
  static long rows_of(const ClimeData& d) { return d.X.rows(); }
  static long rows_of(const SkepticData& d) { return d.X.rows(); }
  static long rows_of(const LdaData& d) { return d.X.rows() + d.Y.rows(); }
  static long rows_of(const Var1Data& d) { return d.X.rows(); }

  template <typename D>
  static void check_finite(const D& m, const char* what) {
    if (!m.allFinite()) throw NonFiniteInput(std::string("ModelInstance: NaN in ") + what);
  }
  static void check_data(const LinearData& d) {
    if (d.X.rows() != d.y.size()) throw DimensionMismatch("linear: X rows != y length");
    if (d.X.rows() < 2) throw DegenerateData("linear: need n >= 2");
    check_finite(d.X, "X");
    check_finite(d.y, "y");
  }
  static void check_data(const IvrData& d) {
    if (d.X.rows() != d.y.size() || d.W.rows() != d.X.rows() || d.W.cols() != d.X.cols())
      throw DimensionMismatch("ivr: X, W, y shapes disagree");
    if (d.X.rows() < 2) throw DegenerateData("ivr: need n >= 2");
    check_finite(d.X, "X");
    check_finite(d.W, "W");
    check_finite(d.y, "y");
  }
  static void check_data(const ClimeData& d) {
    if (d.X.rows() < 2) throw DegenerateData("clime: need n >= 2");
    check_finite(d.X, "X");
  }
  static void check_data(const SkepticData& d) {
    if (d.X.rows() < 2) throw DegenerateData("skeptic: need n >= 2");
    check_finite(d.X, "X");
  }
  static void check_data(const LdaData& d) {
    if (d.X.cols() != d.Y.cols()) throw DimensionMismatch("lda: X and Y dimension disagree");
    if (d.X.rows() < 2 || d.Y.rows() < 2) throw DegenerateData("lda: need n1, n2 >= 2");
    check_finite(d.X, "X");
    check_finite(d.Y, "Y");
  }
  static void check_data(const Var1Data& d) {
    if (d.X.rows() < 2) throw DegenerateData("var1: need T >= 2");
    check_finite(d.X, "X");
  }
};

// The fitted equation in affine form: t(Z, beta) = jac * beta - rhs. The
// Jacobian is constant in beta for every backend here.
struct EquationMatrices {
  Eigen::MatrixXd jac;
  Eigen::VectorXd rhs;
};

inline Eigen::VectorXd unit_vector(int d, int one_based_index) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
  e(one_based_index - 1) = 1.0;
  return e;
}

inline EquationMatrices assemble(const ModelInstance& model) {
  model.validate();
  EquationMatrices em;
  switch (model.kind) {
    case ModelKind::Linear: {
      const auto& d = std::get<LinearData>(model.data);
      const double n = static_cast<double>(d.X.rows());
      em.jac = d.X.transpose() * d.X / n;
      em.rhs = d.X.transpose() * d.y / n;
      break;
    }
    case ModelKind::Ivr: {
      const auto& d = std::get<IvrData>(model.data);
      const double n = static_cast<double>(d.X.rows());
      em.jac = d.W.transpose() * d.X / n;
      em.rhs = d.W.transpose() * d.y / n;
      break;
    }
    case ModelKind::Clime: {
      const auto& d = std::get<ClimeData>(model.data);
      const double n = static_cast<double>(d.X.rows());
      em.jac = d.X.transpose() * d.X / n;
      em.rhs = unit_vector(model.dim(), model.column);
      break;
    }
    case ModelKind::Skeptic: {
      const auto& d = std::get<SkepticData>(model.data);
      em.jac = skeptic_transform(kendall_tau(d.X));
      em.rhs = unit_vector(model.dim(), model.column);
      break;
    }
    case ModelKind::Lda: {
      const auto& d = std::get<LdaData>(model.data);
      const double n1 = static_cast<double>(d.X.rows());
      const double n2 = static_cast<double>(d.Y.rows());
      const double n = n1 + n2;
      Eigen::RowVectorXd xbar = d.X.colwise().mean();
      Eigen::RowVectorXd ybar = d.Y.colwise().mean();
      Eigen::MatrixXd Xc = d.X.rowwise() - xbar;
      Eigen::MatrixXd Yc = d.Y.rowwise() - ybar;
      em.jac = (Xc.transpose() * Xc + Yc.transpose() * Yc) / n;
      em.rhs = (xbar - ybar).transpose();
      break;
    }
    case ModelKind::Var1: {
      const auto& d = std::get<Var1Data>(model.data);
      const Eigen::Index T = d.X.rows();
      const double Td = static_cast<double>(T);
      em.jac = d.X.transpose() * d.X / Td;
      // rhs = column m of S1 = (T-1)^{-1} sum_t X_t X_{t+1}^T.
      em.rhs = d.X.topRows(T - 1).transpose() * d.X.bottomRows(T - 1).col(model.column - 1) /
               (Td - 1.0);
      break;
    }
  }
  return em;
}

inline Eigen::VectorXd eval_equation(const EquationMatrices& em, const Eigen::VectorXd& beta) {
  if (beta.size() != em.jac.cols())
    throw DimensionMismatch("eval_equation: beta has " + std::to_string(beta.size()) +
                            " entries, expected " + std::to_string(em.jac.cols()));
  return em.jac * beta - em.rhs;
}

namespace detail {

inline double delta_lda(const LdaData& d, const Eigen::VectorXd& beta_hat,
                        const Eigen::VectorXd& v_hat, bool* clamped) {
  const Eigen::Index n1 = d.X.rows();
  const Eigen::Index n2 = d.Y.rows();
  const double n = static_cast<double>(n1 + n2);
  Eigen::RowVectorXd xbar = d.X.colwise().mean();
  Eigen::RowVectorXd ybar = d.Y.colwise().mean();
  Eigen::MatrixXd Xc = d.X.rowwise() - xbar;
  Eigen::MatrixXd Yc = d.Y.rowwise() - ybar;
  // (v' (Xi - xbar))(beta' (Xi - xbar)) realizes v' (Xi - xbar)^{x2} beta.
  Eigen::VectorXd xv = Xc * v_hat, xb = Xc * beta_hat;
  Eigen::VectorXd yv = Yc * v_hat, yb = Yc * beta_hat;
  const double wx = n / static_cast<double>(n1);
  const double wy = n / static_cast<double>(n2);
  double acc = 0.0;
  acc += xv.cwiseProduct(xb).squaredNorm() / n;
  acc += (wx * xv).squaredNorm() / n;
  acc += yv.cwiseProduct(yb).squaredNorm() / n;
  acc += (wy * yv).squaredNorm() / n;
  const double mean_term = v_hat.dot((xbar - ybar).transpose());
  acc -= mean_term * mean_term;
  if (acc < -1e-6) throw NegativeVariance("lda: variance estimate " + std::to_string(acc));
  if (acc < 0.0) {
    if (clamped) *clamped = true;
    acc = 0.0;
  }
  return acc;
}

}  // namespace detail

// Model-specific estimator of the asymptotic variance of the projected
// equation. The LDA form can dip slightly negative in finite samples; values
// in (-1e-6, 0) are clamped to zero (reported through *clamped), anything
// lower throws NegativeVariance. The VAR product form gets the same
// treatment.
inline double estimate_delta(const ModelInstance& model, const Eigen::VectorXd& beta_hat,
                             const Eigen::VectorXd& v_hat, bool* clamped = nullptr,
                             const KendallTables* tables = nullptr) {
  model.validate();
  const int d = model.dim();
  if (beta_hat.size() != d || v_hat.size() != d)
    throw DimensionMismatch("estimate_delta: beta_hat/v_hat must have length d");
  if (clamped) *clamped = false;
  switch (model.kind) {
    case ModelKind::Linear: {
      const auto& dat = std::get<LinearData>(model.data);
      const double n = static_cast<double>(dat.X.rows());
      Eigen::VectorXd xv = dat.X * v_hat;
      const double quad = xv.squaredNorm() / n;  // v' Sigma_n v
      const double mse = (dat.y - dat.X * beta_hat).squaredNorm() / n;
      return quad * mse;
    }
    case ModelKind::Ivr: {
      const auto& dat = std::get<IvrData>(model.data);
      const double n = static_cast<double>(dat.X.rows());
      Eigen::VectorXd wv = dat.W * v_hat;
      Eigen::VectorXd res = dat.y - dat.X * beta_hat;
      return wv.cwiseProduct(res).squaredNorm() / n;
    }
    case ModelKind::Clime: {
      const auto& dat = std::get<ClimeData>(model.data);
      const double n = static_cast<double>(dat.X.rows());
      Eigen::VectorXd xv = dat.X * v_hat;
      Eigen::VectorXd xb = dat.X * beta_hat;
      const double center = xv.dot(xb) / n;  // v' Sigma_n beta
      return (xv.cwiseProduct(xb).array() - center).square().sum() / n;
    }
    case ModelKind::Skeptic: {
      const auto& dat = std::get<SkepticData>(model.data);
      KendallTables local;
      const KendallTables* t = tables;
      if (!t) {
        local = kendall_tables(dat.X);
        t = &local;
      }
      const double n = static_cast<double>(dat.X.rows());
      double acc = 0.0;
      for (const auto& th : t->theta_i) {
        const double s = v_hat.dot(th * beta_hat);
        acc += s * s;
      }
      return acc / n;
    }
    case ModelKind::Lda:
      return detail::delta_lda(std::get<LdaData>(model.data), beta_hat, v_hat, clamped);
    case ModelKind::Var1: {
      const auto& dat = std::get<Var1Data>(model.data);
      const double T = static_cast<double>(dat.X.rows());
      Eigen::MatrixXd S0 = dat.X.transpose() * dat.X / T;
      const double noise = S0(model.column - 1, model.column - 1) - beta_hat.dot(S0 * beta_hat);
      double delta = noise * v_hat.dot(S0 * v_hat);
      if (delta < -1e-6) throw NegativeVariance("var1: variance estimate " + std::to_string(delta));
      if (delta < 0.0) {
        if (clamped) *clamped = true;
        delta = 0.0;
      }
      return delta;
    }
  }
  throw Error("estimate_delta: unreachable");
}

// Gaussian-only alternative for the precision-matrix model:
//   delta = v_j beta_m + v_m beta_j.
inline double estimate_delta_clime_gaussian(const Eigen::VectorXd& v_hat,
                                            const Eigen::VectorXd& beta_hat, int target,
                                            int column) {
  const int d = static_cast<int>(v_hat.size());
  if (beta_hat.size() != d) throw DimensionMismatch("estimate_delta_clime_gaussian: lengths");
  if (target < 1 || target > d || column < 1 || column > d)
    throw OutOfRange("estimate_delta_clime_gaussian: index outside 1..d");
  return v_hat(target - 1) * beta_hat(column - 1) + v_hat(column - 1) * beta_hat(target - 1);
}

}  // namespace hdee
