#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qkp/glasso.hpp"

using namespace qkp;

namespace {

Matrix random_weights(Index m, std::mt19937_64& gen, double zero_share) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix w(m, m);
  for (Index c = 0; c < m; ++c)
    for (Index r = 0; r <= c; ++r) {
      const double v = u(gen) < zero_share ? 0.0 : 40.0 * u(gen);
      w(r, c) = w(c, r) = v;
    }
  return w;
}

}  // namespace

TEST_CASE("WeightMatrix validation") {
  Matrix w = Matrix::Ones(2, 2);
  w(0, 1) = 2.0;
  CHECK_THROWS_AS(WeightMatrix{w}, std::invalid_argument);
  CHECK_THROWS_AS(WeightMatrix{-Matrix::Ones(2, 2)}, std::invalid_argument);
  CHECK_NOTHROW(WeightMatrix{Matrix::Zero(3, 3)});
}

TEST_CASE("kronecker weights place lambda_jk * gamma_il at block_index") {
  Matrix lambda(2, 2), gamma(3, 3);
  lambda << 1, 2, 2, 5;
  gamma << 1, 3, 4, 3, 7, 6, 4, 6, 8;
  const WeightMatrix w = WeightMatrix::kronecker(lambda, gamma);
  const KroneckerShape sh(2, 3);
  for (Index j = 1; j <= 2; ++j)
    for (Index k = 1; k <= 2; ++k)
      for (Index i = 1; i <= 3; ++i)
        for (Index l = 1; l <= 3; ++l) {
          const auto [r, c] = block_index(sh, j, k, i, l);
          CHECK(w(r - 1, c - 1) == lambda(j - 1, k - 1) * gamma(i - 1, l - 1));
        }
}

TEST_CASE("no penalty on a diagonal covariance returns its inverse") {
  Vector d(3);
  d << 0.5, 2.0, 4.0;
  const auto sol = solve_weighted_glasso(SymMatrix::diagonal(d), 100.0,
                                         WeightMatrix(Matrix::Zero(3, 3)));
  CHECK(sol.converged);
  Matrix want = d.cwiseInverse().asDiagonal();
  CHECK((sol.s_hat.matrix() - want).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("scalar closed form") {
  const auto sol = solve_weighted_glasso(SymMatrix(Matrix::Constant(1, 1, 1.0)), 10.0,
                                         WeightMatrix::uniform(1, 5.0));
  CHECK(sol.s_hat(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("huge off-diagonal weights give exact zeros") {
  std::mt19937_64 gen(1);
  const SymMatrix sigma(oracle::random_spd(4, gen));
  Matrix w = Matrix::Constant(4, 4, 1e6);
  w.diagonal().setConstant(2.0);
  const auto sol = solve_weighted_glasso(sigma, 50.0, WeightMatrix(w));
  CHECK(sol.converged);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 4; ++c)
      if (r != c) CHECK(sol.s_hat(r, c) == 0.0);
  // Diagonal then solves the scalar problem per coordinate.
  for (Index a = 0; a < 4; ++a) {
    CHECK(sol.s_hat(a, a) ==
          doctest::Approx(50.0 / (50.0 * sigma(a, a) + 2.0 * 2.0)).epsilon(1e-8));
  }
}

TEST_CASE("matches the barrier oracle on random instances") {
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 15; ++rep) {
    const Index m = 2 + rep % 3;
    const SymMatrix sigma(oracle::random_spd(m, gen));
    const double n = 20.0 + 10.0 * rep;
    const Matrix w = random_weights(m, gen, 0.3);
    const auto sol = solve_weighted_glasso(sigma, n, WeightMatrix(w));
    const auto ref = oracle::barrier_glasso(sigma.matrix(), n, w);
    REQUIRE(ref.ok);
    CHECK(sol.converged);
    CHECK(sol.kkt_residual <= 1e-6 * n);
    CHECK((sol.s_hat.matrix() - ref.s).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("objective trace is non-increasing and the result is certified") {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 10; ++rep) {
    const Index m = 6;
    const SymMatrix sigma(oracle::random_spd(m, gen, 0.2));
    const Matrix w = random_weights(m, gen, 0.2);
    const auto sol = solve_weighted_glasso(sigma, 200.0, WeightMatrix(w));
    // Near the optimum steps are accepted on the KKT residual while f moves
    // only by rounding.
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
      const double slack = 1e-13 * std::max(1.0, std::abs(sol.objective_trace[i - 1]));
      CHECK(sol.objective_trace[i] <= sol.objective_trace[i - 1] + slack);
    }
    CHECK(cholesky_logdet(sol.s_hat).has_value());
    CHECK(sol.kkt_residual ==
          doctest::Approx(glasso_kkt_residual(sol.s_hat.matrix(), sigma, 200.0, WeightMatrix(w))));
    CHECK(sol.objective ==
          doctest::Approx(glasso_objective(sol.s_hat.matrix(), sigma, 200.0, WeightMatrix(w))));
  }
}

TEST_CASE("warm start never ends above the warm start objective") {
  std::mt19937_64 gen(31);
  const SymMatrix sigma(oracle::random_spd(5, gen));
  const WeightMatrix w(random_weights(5, gen, 0.0));
  const auto first = solve_weighted_glasso(sigma, 80.0, w);
  const auto again = solve_weighted_glasso(sigma, 80.0, w, {}, first.s_hat);
  CHECK(again.objective <= first.objective + 1e-9 * std::abs(first.objective));
  CHECK((again.s_hat.matrix() - first.s_hat.matrix()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("scaling N and W together leaves the minimizer unchanged") {
  std::mt19937_64 gen(41);
  for (int rep = 0; rep < 5; ++rep) {
    const SymMatrix sigma(oracle::random_spd(4, gen));
    const Matrix w = random_weights(4, gen, 0.2);
    SolverOptions tight;
    tight.kkt_tol = 1e-11;
    tight.max_newton_iter = 400;
    const auto a = solve_weighted_glasso(sigma, 30.0, WeightMatrix(w), tight);
    SolverOptions tight_c = tight;
    tight_c.kkt_tol = 1e-11 * 7.0;
    const auto b = solve_weighted_glasso(sigma, 30.0 * 7.0, WeightMatrix(w * 7.0), tight_c);
    CHECK((a.s_hat.matrix() - b.s_hat.matrix()).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(b.objective == doctest::Approx(7.0 * a.objective).epsilon(1e-10));
  }
}

TEST_CASE("different starting points reach the same minimizer") {
  std::mt19937_64 gen(43);
  for (int rep = 0; rep < 5; ++rep) {
    const SymMatrix sigma(oracle::random_spd(5, gen));
    const WeightMatrix w(random_weights(5, gen, 0.2));
    const auto a = solve_weighted_glasso(sigma, 60.0, w);
    const auto b = solve_weighted_glasso(sigma, 60.0, w, {}, SymMatrix(Matrix::Identity(5, 5) * 9.0));
    CHECK((a.s_hat.matrix() - b.s_hat.matrix()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("diagonal penalty toggle") {
  const SymMatrix sigma(Matrix::Constant(1, 1, 1.0));
  SolverOptions off;
  off.penalize_diagonal = false;
  const auto sol = solve_weighted_glasso(sigma, 10.0, WeightMatrix::uniform(1, 5.0), off);
  CHECK(sol.s_hat(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("errors") {
  Matrix a(2, 2);
  a << 1, 2, 2, 1;
  CHECK_THROWS_AS(solve_weighted_glasso(SymMatrix(a), 10.0, WeightMatrix::uniform(2, 1.0)),
                  NotPositiveDefinite);
  CHECK_THROWS_AS(solve_weighted_glasso(SymMatrix::identity(2), 10.0, WeightMatrix::uniform(3, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_weighted_glasso(SymMatrix::identity(2), 0.0, WeightMatrix::uniform(2, 1.0)),
                  std::invalid_argument);
  CHECK(std::isinf(glasso_objective(a, SymMatrix::identity(2), 10.0, WeightMatrix::uniform(2, 1.0))));
  CHECK_THROWS_AS(glasso_kkt_residual(a, SymMatrix::identity(2), 10.0, WeightMatrix::uniform(2, 1.0)),
                  NotPositiveDefinite);
}

TEST_CASE("iteration cap is reported, not thrown") {
  std::mt19937_64 gen(47);
  const SymMatrix sigma(oracle::random_spd(6, gen, 0.1));
  SolverOptions capped;
  capped.max_inner_iter = 1;
  capped.max_newton_iter = 0;
  const auto sol = solve_weighted_glasso(sigma, 100.0, WeightMatrix::uniform(6, 3.0), capped);
  CHECK_FALSE(sol.converged);
  CHECK(cholesky_logdet(sol.s_hat).has_value());
}
