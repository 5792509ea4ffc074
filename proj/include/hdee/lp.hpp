#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "hdee/errors.hpp"

namespace hdee {

// min ||x||_1  subject to  ||A x - b||_inf <= lambda.
struct DantzigProblem {
  Eigen::MatrixXd A;  // m x p
  Eigen::VectorXd b;  // m
  double lambda = 0.0;

  void validate() const {
    if (A.rows() != b.size())
      throw DimensionMismatch("DantzigProblem: A has " + std::to_string(A.rows()) +
                              " rows but b has " + std::to_string(b.size()) + " entries");
    if (A.rows() == 0 || A.cols() == 0) throw DimensionMismatch("DantzigProblem: empty A");
    if (!A.allFinite() || !b.allFinite() || !std::isfinite(lambda))
      throw NonFiniteInput("DantzigProblem: NaN or infinite entry");
    if (lambda < 0.0) throw OutOfRange("DantzigProblem: lambda must be >= 0");
  }
};

enum class LpStatus { Optimal, Infeasible, IterationLimit };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

struct LpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;     // ||x||_1, recomputed from x
  double residual_inf = 0.0;  // ||A x - b||_inf, recomputed from x
  LpStatus status = LpStatus::IterationLimit;
  long iterations = 0;
};

struct SolverConfig {
  double tol_feas = 1e-9;
  double tol_opt = 1e-9;
  long max_iter = 0;  // 0 means the default 50 * (p + m)
  enum class AntiCycling { Bland };
  AntiCycling anti_cycling = AntiCycling::Bland;
};

inline double check_feasibility(const DantzigProblem& problem, const Eigen::VectorXd& x) {
  if (x.size() != problem.A.cols())
    throw DimensionMismatch("check_feasibility: x has " + std::to_string(x.size()) +
                            " entries, expected " + std::to_string(problem.A.cols()));
  return (problem.A * x - problem.b).lpNorm<Eigen::Infinity>();
}

namespace detail {

// Primal simplex on the u/w split of the band LP, restricted to a subset of
// the original rows of A. Each retained row i contributes the pair
//   A_i (u - w) + s-  = b_i + lambda
//  -A_i (u - w) + s+  = lambda - b_i,
// with u, w, s >= 0 and cost sum(u) + sum(w). Dense tableau arithmetic with
// rank-1 pivot updates; entering variable is the most negative reduced cost
// until a degenerate stall, after which Bland's rule takes over for the rest
// of the solve. At claimed optimality the final basis is refactorized from
// the original data and certified by primal feasibility and dual
// feasibility; failing either, pivoting resumes on the rebuilt tableau.
class BandSimplex {
 public:
  BandSimplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double lambda,
              const std::vector<int>& rows, const SolverConfig& cfg)
      : cfg_(cfg) {
    const int p = static_cast<int>(A.cols());
    const int nr = static_cast<int>(rows.size());
    nrows_ = 2 * nr;
    nstruct_ = 2 * p;
    ncols_ = nstruct_ + nrows_;  // u, w, slacks
    p_ = p;

    M_.setZero(nrows_, ncols_);
    rhs_orig_.resize(nrows_);
    for (int k = 0; k < nr; ++k) {
      const int i = rows[k];
      M_.row(2 * k).head(p) = A.row(i);
      M_.row(2 * k).segment(p, p) = -A.row(i);
      rhs_orig_(2 * k) = b(i) + lambda;
      M_.row(2 * k + 1).head(p) = -A.row(i);
      M_.row(2 * k + 1).segment(p, p) = A.row(i);
      rhs_orig_(2 * k + 1) = lambda - b(i);
    }
    for (int r = 0; r < nrows_; ++r) {
      if (rhs_orig_(r) < 0.0) {
        M_.row(r) *= -1.0;
        rhs_orig_(r) *= -1.0;
        M_(r, nstruct_ + r) = -1.0;
      } else {
        M_(r, nstruct_ + r) = 1.0;
      }
    }

    cost_.setZero(ncols_);
    cost_.head(nstruct_).setOnes();
  }

  // Returns status; on Optimal the structural solution is in x().
  LpStatus solve(long max_iter, long* iterations_used) {
    iterations_ = 0;
    max_iter_ = max_iter;
    bland_mode_ = false;
    for (int attempt = 0; attempt < 2; ++attempt) {
      LpStatus st = run();
      *iterations_used = iterations_;
      if (st != LpStatus::IterationLimit || !needs_restart_) return st;
      // Numerical trouble: retry once with Bland's rule from scratch.
      needs_restart_ = false;
      bland_mode_ = true;
    }
    *iterations_used = iterations_;
    return LpStatus::IterationLimit;
  }

  Eigen::VectorXd x() const {
    Eigen::VectorXd out(p_);
    for (int j = 0; j < p_; ++j) out(j) = z_(j) - z_(p_ + j);
    return out;
  }

 private:
  LpStatus run() {
    recertifications_ = 0;
    // Initial basis: the slack where its column is +e_r, an artificial
    // otherwise (rows that were sign-flipped above).
    std::vector<int> art_rows;
    basis_.resize(nrows_);
    for (int r = 0; r < nrows_; ++r) {
      if (M_(r, nstruct_ + r) > 0.0) {
        basis_[r] = nstruct_ + r;
      } else {
        art_rows.push_back(r);
        basis_[r] = ncols_ + static_cast<int>(art_rows.size()) - 1;
      }
    }
    nart_ = static_cast<int>(art_rows.size());

    T_.resize(nrows_, ncols_);
    T_ = M_;
    rhs_ = rhs_orig_;

    if (nart_ > 0) {
      // Phase 1: minimize the sum of artificials. Artificial columns are
      // exactly unit vectors on art_rows, so they never need to be stored;
      // once one leaves the basis it is never priced again.
      red_.resize(ncols_);
      red_.setZero();
      obj_ = 0.0;
      for (int r : art_rows) {
        red_ -= T_.row(r);
        obj_ += rhs_(r);
      }
      in_phase1_ = true;
      LpStatus st = pivot_loop();
      if (st != LpStatus::Optimal) return st;
      double art_level = 0.0;
      for (int r = 0; r < nrows_; ++r)
        if (basis_[r] >= ncols_) art_level += std::max(0.0, rhs_(r));
      if (art_level > cfg_.tol_feas * (1.0 + rhs_orig_.lpNorm<Eigen::Infinity>()))
        return LpStatus::Infeasible;
      drive_out_artificials();
    }

    // Phase 2.
    in_phase1_ = false;
    recompute_costs();
    LpStatus st = pivot_loop();
    if (st != LpStatus::Optimal) return st;

    z_.setZero(ncols_);
    for (int r = 0; r < nrows_; ++r)
      if (basis_[r] < ncols_) z_(basis_[r]) = std::max(0.0, rhs_(r));
    return LpStatus::Optimal;
  }

  void recompute_costs() {
    red_ = cost_;
    obj_ = 0.0;
    for (int r = 0; r < nrows_; ++r) {
      const int j = basis_[r];
      const double cb = (j < ncols_) ? cost_(j) : 0.0;
      if (cb != 0.0) {
        red_ -= cb * T_.row(r);
        obj_ += cb * rhs_(r);
      }
    }
  }

  int entering() const {
    const double tol = -cfg_.tol_opt;
    if (bland_mode_) {
      for (int j = 0; j < ncols_; ++j)
        if (red_(j) < tol) return j;
      return -1;
    }
    int best = -1;
    double bestv = tol;
    for (int j = 0; j < ncols_; ++j) {
      if (red_(j) < bestv) {
        bestv = red_(j);
        best = j;
      }
    }
    return best;
  }

  int leaving(int q) const {
    constexpr double tol_piv = 1e-11;
    int best = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < nrows_; ++r) {
      const double a = T_(r, q);
      if (a <= tol_piv) continue;
      const double ratio = rhs_(r) / a;
      if (ratio < best_ratio - 1e-15 ||
          (ratio <= best_ratio + 1e-15 && (best < 0 || basis_[r] < basis_[best]))) {
        best_ratio = ratio;
        best = r;
      }
    }
    return best;
  }

  void pivot(int r, int q) {
    const double piv = T_(r, q);
    T_.row(r) /= piv;
    rhs_(r) /= piv;
    prow_ = T_.row(r);
    const double prhs = rhs_(r);
    pcol_ = T_.col(q);
    pcol_(r) = 0.0;
    T_.noalias() -= pcol_ * prow_;
    rhs_.noalias() -= pcol_ * prhs;
    const double dq = red_(q);
    red_.noalias() -= dq * prow_;
    obj_ += dq * prhs;  // entering variable takes value prhs
    basis_[r] = q;
    ++iterations_;
  }

  LpStatus pivot_loop() {
    long stall = 0;
    const long stall_limit = std::max<long>(64, nrows_);
    while (true) {
      if (iterations_ >= max_iter_) return LpStatus::IterationLimit;
      int q = entering();
      if (q < 0) {
        if (in_phase1_) return LpStatus::Optimal;
        if (certify()) return LpStatus::Optimal;
        if (needs_restart_) return LpStatus::IterationLimit;
        continue;  // certification rebuilt the tableau; keep pivoting
      }
      int r = leaving(q);
      if (r < 0) {
        // The band LP objective is bounded below by 0, so an unbounded ray
        // can only be numerical noise in this column; discourage it.
        red_(q) = 0.0;
        if (++stall > stall_limit) {
          needs_restart_ = true;
          return LpStatus::IterationLimit;
        }
        continue;
      }
      const double before = obj_;
      pivot(r, q);
      if (obj_ < before - 1e-13 * (1.0 + std::abs(before))) {
        stall = 0;
      } else if (++stall > stall_limit) {
        bland_mode_ = true;
      }
    }
  }

  // After phase 1, pivot zero-level artificials out of the basis (degenerate
  // pivots; reduced costs are rebuilt before phase 2 so the red_ updates made
  // here do not matter). A row with no usable entry is redundant: its
  // artificial stays basic at level zero with zero cost.
  void drive_out_artificials() {
    for (int r = 0; r < nrows_; ++r) {
      if (basis_[r] < ncols_) continue;
      int q = -1;
      double best = 1e-8;
      for (int j = 0; j < ncols_; ++j) {
        if (std::abs(T_(r, j)) > best) {
          best = std::abs(T_(r, j));
          q = j;
        }
      }
      if (q >= 0) pivot(r, q);
    }
  }

  // Refactorize B from the original data; certify primal and dual
  // feasibility. On failure, replace the tableau by the exact one and let
  // the caller continue pivoting.
  bool certify() {
    Eigen::MatrixXd B(nrows_, nrows_);
    Eigen::VectorXd cb(nrows_);
    for (int r = 0; r < nrows_; ++r) {
      const int j = basis_[r];
      if (j < ncols_) {
        B.col(r) = M_.col(j);
        cb(r) = cost_(j);
      } else {
        B.col(r).setZero();  // residual artificial on a redundant row
        B(art_row_of(j), r) = 1.0;
        cb(r) = 0.0;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Eigen::VectorXd xb = lu.solve(rhs_orig_);
    Eigen::VectorXd y = lu.transpose().solve(cb);
    Eigen::VectorXd red_exact = cost_ - M_.transpose() * y;

    const bool primal_ok = (xb.minCoeff() > -10.0 * cfg_.tol_feas) &&
                           (B * xb - rhs_orig_).lpNorm<Eigen::Infinity>() <
                               cfg_.tol_feas * (1.0 + rhs_orig_.lpNorm<Eigen::Infinity>());
    const bool dual_ok = red_exact.minCoeff() > -cfg_.tol_opt;
    if (primal_ok && dual_ok) {
      rhs_ = xb.cwiseMax(0.0);
      return true;
    }
    if (!primal_ok || ++recertifications_ > 50) {
      // A primal-infeasible basis means the pivot path went numerically bad;
      // the only sound recovery is a fresh Bland run.
      needs_restart_ = true;
      return false;
    }
    T_ = lu.solve(M_);
    rhs_ = xb.cwiseMax(0.0);
    red_ = red_exact;
    obj_ = cb.dot(xb);
    return false;
  }

  int art_row_of(int col) const {
    // Artificial columns are numbered in the order their rows were visited.
    int k = col - ncols_;
    for (int r = 0; r < nrows_; ++r) {
      if (M_(r, nstruct_ + r) < 0.0 && k-- == 0) return r;
    }
    throw Error("internal: artificial column out of range");
  }

  SolverConfig cfg_;
  int p_ = 0, nrows_ = 0, nstruct_ = 0, ncols_ = 0, nart_ = 0;
  Eigen::MatrixXd M_, T_;
  Eigen::VectorXd rhs_orig_, rhs_, cost_, z_;
  Eigen::RowVectorXd red_, prow_;
  Eigen::VectorXd pcol_;
  std::vector<int> basis_;
  double obj_ = 0.0;
  bool in_phase1_ = false, bland_mode_ = false, needs_restart_ = false;
  long iterations_ = 0, max_iter_ = 0;
  int recertifications_ = 0;
};

inline std::vector<int> all_rows(int m) {
  std::vector<int> rows(m);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace detail

// Primal simplex with Bland anti-cycling on the u/w split form. For large
// instances the solve runs over an actively grown subset of the rows of A:
// a solution of the row-restricted LP that violates none of the remaining
// band constraints is optimal for the full problem (the restriction is a
// relaxation). Every returned residual and objective is recomputed from the
// full original data.
inline LpSolution solve_dantzig(const DantzigProblem& problem, const SolverConfig& config = {}) {
  problem.validate();
  if (config.tol_feas <= 0.0 || config.tol_opt <= 0.0)
    throw OutOfRange("SolverConfig: tolerances must be positive");

  const int m = static_cast<int>(problem.A.rows());
  const int p = static_cast<int>(problem.A.cols());
  const long max_iter = config.max_iter > 0 ? config.max_iter : 50L * (p + m);

  LpSolution sol;
  sol.x = Eigen::VectorXd::Zero(p);

  const bool full_mode = (m <= 200);
  std::vector<int> rows;
  if (full_mode) {
    rows = detail::all_rows(m);
  } else {
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
      return std::abs(problem.b(i)) > std::abs(problem.b(j));
    });
    int violated = 0;
    for (int i = 0; i < m; ++i)
      if (std::abs(problem.b(i)) > problem.lambda) ++violated;
    const int k0 = std::min(m, std::max(64, std::min(violated, 256)));
    rows.assign(order.begin(), order.begin() + k0);
    std::sort(rows.begin(), rows.end());
  }

  long used_total = 0;
  while (true) {
    detail::BandSimplex simplex(problem.A, problem.b, problem.lambda, rows, config);
    long used = 0;
    LpStatus st = simplex.solve(max_iter - used_total, &used);
    used_total += used;
    sol.iterations = used_total;
    if (st == LpStatus::Infeasible) {
      // Infeasible restriction implies an infeasible full problem.
      sol.status = LpStatus::Infeasible;
      sol.residual_inf = problem.b.lpNorm<Eigen::Infinity>();
      sol.objective = 0.0;
      return sol;
    }
    if (st == LpStatus::IterationLimit) {
      sol.status = LpStatus::IterationLimit;
      return sol;
    }
    sol.x = simplex.x();
    Eigen::VectorXd r = problem.A * sol.x - problem.b;
    sol.residual_inf = r.lpNorm<Eigen::Infinity>();
    sol.objective = sol.x.lpNorm<1>();
    if (static_cast<int>(rows.size()) == m) {
      sol.status = LpStatus::Optimal;
      return sol;
    }
    std::vector<int> violated;
    std::vector<bool> active(m, false);
    for (int i : rows) active[i] = true;
    for (int i = 0; i < m; ++i)
      if (!active[i] && std::abs(r(i)) > problem.lambda + config.tol_feas) violated.push_back(i);
    if (violated.empty()) {
      sol.status = LpStatus::Optimal;
      return sol;
    }
    std::stable_sort(violated.begin(), violated.end(),
                     [&](int i, int j) { return std::abs(r(i)) > std::abs(r(j)); });
    const int add = std::min<int>(64, static_cast<int>(violated.size()));
    rows.insert(rows.end(), violated.begin(), violated.begin() + add);
    std::sort(rows.begin(), rows.end());
  }
}

// Exact optimum by exhaustive vertex enumeration; exponential time, test use
// only. An optimal x of the band LP can always be chosen so that p of the
// constraints {A_i x = b_i +/- lambda, x_j = 0} are active and independent,
// so every such square system is solved and the best feasible point wins.
inline LpSolution enumerate_oracle(const DantzigProblem& problem) {
  problem.validate();
  const int m = static_cast<int>(problem.A.rows());
  const int p = static_cast<int>(problem.A.cols());
  if (m > 6 || p > 6)
    throw TooLarge("enumerate_oracle: capped at p,m <= 6 (got p=" + std::to_string(p) +
                   ", m=" + std::to_string(m) + ")");

  LpSolution best;
  best.status = LpStatus::Infeasible;
  best.objective = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd S(p, p);
  Eigen::VectorXd t(p);
  for (int rmask = 0; rmask < (1 << m); ++rmask) {
    const int k = __builtin_popcount(static_cast<unsigned>(rmask));
    if (k > p) continue;
    std::vector<int> rsel;
    for (int i = 0; i < m; ++i)
      if (rmask & (1 << i)) rsel.push_back(i);
    for (int smask = 0; smask < (1 << k); ++smask) {
      for (int zmask = 0; zmask < (1 << p); ++zmask) {
        if (__builtin_popcount(static_cast<unsigned>(zmask)) != p - k) continue;
        int row = 0;
        for (int a = 0; a < k; ++a, ++row) {
          S.row(row) = problem.A.row(rsel[a]);
          const double sign = (smask & (1 << a)) ? -1.0 : 1.0;
          t(row) = problem.b(rsel[a]) + sign * problem.lambda;
        }
        for (int j = 0; j < p; ++j) {
          if (zmask & (1 << j)) {
            S.row(row).setZero();
            S(row, j) = 1.0;
            t(row) = 0.0;
            ++row;
          }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
        if (!lu.isInvertible()) continue;
        Eigen::VectorXd x = lu.solve(t);
        const double resid = (problem.A * x - problem.b).lpNorm<Eigen::Infinity>();
        if (resid > problem.lambda + 1e-9) continue;
        const double obj = x.lpNorm<1>();
        if (obj < best.objective - 1e-15) {
          best.x = x;
          best.objective = obj;
          best.residual_inf = resid;
          best.status = LpStatus::Optimal;
        }
      }
    }
  }
  if (best.status == LpStatus::Infeasible) {
    best.x = Eigen::VectorXd::Zero(p);
    best.objective = 0.0;
    best.residual_inf = problem.b.lpNorm<Eigen::Infinity>();
  }
  return best;
}

}  // namespace hdee
