#include <catch2/catch_amalgamated.hpp>

#include "hdee/lp.hpp"
#include "hdee/rng.hpp"

using hdee::DantzigProblem;
using hdee::LpStatus;
using hdee::SolverConfig;

namespace {

DantzigProblem random_problem(hdee::RngStream& rng, int m, int p, double lambda) {
  DantzigProblem pr;
  pr.A.resize(m, p);
  pr.b.resize(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < p; ++j) pr.A(i, j) = rng.normal();
  for (int i = 0; i < m; ++i) pr.b(i) = rng.normal();
  pr.lambda = lambda;
  return pr;
}

}  // namespace

TEST_CASE("identity matrix reduces to soft thresholding", "[lp]") {
  DantzigProblem pr;
  pr.A = Eigen::MatrixXd::Identity(2, 2);
  pr.b.resize(2);
  pr.b << 1.0, 0.5;
  pr.lambda = 0.25;
  auto sol = hdee::solve_dantzig(pr);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x(0) == Catch::Approx(0.75).margin(1e-9));
  CHECK(sol.x(1) == Catch::Approx(0.25).margin(1e-9));
  CHECK(sol.objective == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("large lambda admits the origin", "[lp]") {
  DantzigProblem pr;
  pr.A = Eigen::MatrixXd::Identity(2, 2);
  pr.b.resize(2);
  pr.b << 1.0, 0.5;
  pr.lambda = 2.0;
  auto sol = hdee::solve_dantzig(pr);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == 0.0);
  CHECK(sol.x.isZero(0.0));
}

TEST_CASE("solver matches the enumeration oracle on a fixed instance", "[lp]") {
  DantzigProblem pr;
  pr.A.resize(2, 2);
  pr.A << 1, 2, 0, 1;
  pr.b.resize(2);
  pr.b << 1, 1;
  pr.lambda = 0.1;
  auto sol = hdee::solve_dantzig(pr);
  auto ora = hdee::enumerate_oracle(pr);
  REQUIRE(sol.status == LpStatus::Optimal);
  REQUIRE(ora.status == LpStatus::Optimal);
  CHECK(std::abs(sol.objective - ora.objective) <= 1e-7);
}

TEST_CASE("check_feasibility computes the sup-norm residual", "[lp]") {
  DantzigProblem pr;
  pr.A = Eigen::MatrixXd::Identity(2, 2);
  pr.b.resize(2);
  pr.b << 1, 0;
  Eigen::VectorXd x(2);
  x << 1, 0;
  CHECK(hdee::check_feasibility(pr, x) == 0.0);
  x << 0, 0;
  CHECK(hdee::check_feasibility(pr, x) == 1.0);

  hdee::RngStream rng(11);
  auto pr3 = random_problem(rng, 3, 3, 0.0);
  Eigen::VectorXd z(3);
  z << rng.normal(), rng.normal(), rng.normal();
  double expected = 0.0;
  for (int i = 0; i < 3; ++i) {
    double r = -pr3.b(i);
    for (int j = 0; j < 3; ++j) r += pr3.A(i, j) * z(j);
    expected = std::max(expected, std::abs(r));
  }
  CHECK(hdee::check_feasibility(pr3, z) == Catch::Approx(expected).margin(1e-14));

  Eigen::VectorXd wrong(4);
  CHECK_THROWS_AS(hdee::check_feasibility(pr3, wrong), hdee::DimensionMismatch);
}

TEST_CASE("oracle handles the trivial cases", "[lp]") {
  DantzigProblem pr;
  pr.A = Eigen::MatrixXd::Identity(1, 1);
  pr.b.resize(1);
  pr.b << 1.0;
  pr.lambda = 0.4;
  auto sol = hdee::enumerate_oracle(pr);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x(0) == Catch::Approx(0.6).margin(1e-12));

  DantzigProblem eq;
  eq.A.resize(2, 2);
  eq.A << 1, 1, 1, -1;
  eq.b.resize(2);
  eq.b << 1, 0;
  eq.lambda = 0.0;
  auto sol2 = hdee::enumerate_oracle(eq);
  REQUIRE(sol2.status == LpStatus::Optimal);
  CHECK(sol2.x(0) == Catch::Approx(0.5).margin(1e-12));
  CHECK(sol2.x(1) == Catch::Approx(0.5).margin(1e-12));

  DantzigProblem big;
  big.A = Eigen::MatrixXd::Identity(7, 7);
  big.b = Eigen::VectorXd::Zero(7);
  CHECK_THROWS_AS(hdee::enumerate_oracle(big), hdee::TooLarge);
}

TEST_CASE("oracle dominates rejection sampled feasible points", "[lp]") {
  hdee::RngStream rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    auto pr = random_problem(rng, 4, 4, 0.3);
    auto ora = hdee::enumerate_oracle(pr);
    if (ora.status != LpStatus::Optimal) continue;
    // Sample feasible points near the exact solve of A z = b and keep the
    // ones inside the band.
    Eigen::VectorXd z0 = pr.A.fullPivLu().solve(pr.b);
    int kept = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXd z = z0;
      for (int j = 0; j < 4; ++j) z(j) += rng.uniform(-0.5, 0.5);
      if (hdee::check_feasibility(pr, z) > pr.lambda) continue;
      ++kept;
      CHECK(ora.objective <= z.lpNorm<1>() + 1e-7);
    }
    REQUIRE(kept > 0);
  }
}

TEST_CASE("solver agrees with the oracle on random small instances", "[lp]") {
  hdee::RngStream rng(23);
  int optimal_seen = 0;
  for (int rep = 0; rep < 60; ++rep) {
    const int m = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
    const int p = 1 + static_cast<int>(rng.uniform(0.0, 6.0));
    auto pr = random_problem(rng, std::min(m, 6), std::min(p, 6), rng.uniform(0.0, 0.5));
    auto sol = hdee::solve_dantzig(pr);
    auto ora = hdee::enumerate_oracle(pr);
    REQUIRE(sol.status == ora.status);
    if (sol.status == LpStatus::Optimal) {
      ++optimal_seen;
      CHECK(std::abs(sol.objective - ora.objective) <= 1e-7);
      CHECK(sol.residual_inf <= pr.lambda + 1e-9);
    }
  }
  REQUIRE(optimal_seen >= 40);
}

TEST_CASE("dominance over user-supplied feasible points", "[lp]") {
  hdee::RngStream rng(29);
  for (int rep = 0; rep < 40; ++rep) {
    auto pr = random_problem(rng, 5, 5, 0.2);
    Eigen::VectorXd z0 = pr.A.fullPivLu().solve(pr.b);
    auto sol = hdee::solve_dantzig(pr);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective <= z0.lpNorm<1>() + 1e-7);
  }
}

TEST_CASE("objective is monotone nonincreasing in lambda", "[lp]") {
  hdee::RngStream rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    auto pr = random_problem(rng, 4, 5, 0.0);  // wide: A x = b is solvable, so every lambda works
    double prev = std::numeric_limits<double>::infinity();
    for (double lam : {0.0, 0.05, 0.1, 0.3, 0.8}) {
      pr.lambda = lam;
      auto sol = hdee::solve_dantzig(pr);
      REQUIRE(sol.status == LpStatus::Optimal);
      CHECK(sol.objective <= prev + 1e-7);
      prev = sol.objective;
    }
  }
}

TEST_CASE("identical solves are bit identical", "[lp]") {
  hdee::RngStream rng(37);
  auto pr = random_problem(rng, 6, 5, 0.15);
  auto s1 = hdee::solve_dantzig(pr);
  auto s2 = hdee::solve_dantzig(pr);
  REQUIRE(s1.status == s2.status);
  REQUIRE(s1.iterations == s2.iterations);
  REQUIRE(std::memcmp(s1.x.data(), s2.x.data(), sizeof(double) * s1.x.size()) == 0);
}

TEST_CASE("infeasible band is detected", "[lp]") {
  DantzigProblem pr;
  pr.A = Eigen::MatrixXd::Zero(1, 1);
  pr.b.resize(1);
  pr.b << 1.0;
  pr.lambda = 0.5;  // need |0 - 1| <= 0.5: impossible
  auto sol = hdee::solve_dantzig(pr);
  CHECK(sol.status == LpStatus::Infeasible);
  auto ora = hdee::enumerate_oracle(pr);
  CHECK(ora.status == LpStatus::Infeasible);
}

TEST_CASE("input validation", "[lp]") {
  DantzigProblem pr;
  pr.A = Eigen::MatrixXd::Identity(2, 2);
  pr.b = Eigen::VectorXd::Zero(2);
  pr.lambda = -0.1;
  CHECK_THROWS_AS(hdee::solve_dantzig(pr), hdee::OutOfRange);
  pr.lambda = 0.1;
  pr.b(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(hdee::solve_dantzig(pr), hdee::NonFiniteInput);
  pr.b = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(hdee::solve_dantzig(pr), hdee::DimensionMismatch);
}

TEST_CASE("iteration limit is reported", "[lp]") {
  hdee::RngStream rng(41);
  auto pr = random_problem(rng, 6, 6, 0.01);
  SolverConfig cfg;
  cfg.max_iter = 1;
  auto sol = hdee::solve_dantzig(pr, cfg);
  CHECK(sol.status == LpStatus::IterationLimit);
  CHECK(sol.iterations <= 1);
}

TEST_CASE("row activation path matches the oracle on duplicated rows", "[lp]") {
  // Stacking identical copies of the rows leaves the feasible set unchanged,
  // so the large stacked problem (which runs through row activation) must
  // reach the small problem's optimum.
  hdee::RngStream rng(43);
  for (int rep = 0; rep < 5; ++rep) {
    auto base = random_problem(rng, 4, 4, 0.25);
    auto ora = hdee::enumerate_oracle(base);
    if (ora.status != LpStatus::Optimal) continue;
    const int copies = 70;  // 280 rows: beyond the full-solve threshold
    DantzigProblem big;
    big.A.resize(4 * copies, 4);
    big.b.resize(4 * copies);
    for (int c = 0; c < copies; ++c) {
      big.A.middleRows(4 * c, 4) = base.A;
      big.b.segment(4 * c, 4) = base.b;
    }
    big.lambda = base.lambda;
    auto sol = hdee::solve_dantzig(big);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(std::abs(sol.objective - ora.objective) <= 1e-7);
    CHECK(sol.residual_inf <= big.lambda + 1e-9);
  }
}
