#include <doctest.h>

#include <cmath>

#include "gmatch/equilibrium.hpp"
#include "gmatch/identification.hpp"
#include "gmatch/statics.hpp"
#include "test_util.hpp"

using namespace gmatch;
using namespace gmatch::testing;

namespace {

double rel_err(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

}  // namespace

TEST_CASE("fd_jacobian reproduces the inverse rule") {
  auto inv = [](const Matrix& M) { return Matrix(M.inverse()); };
  Matrix J = fd_jacobian(inv, Matrix::Identity(2, 2), 1e-5);
  CHECK((J + Matrix::Identity(4, 4)).norm() < 1e-8);

  CounterRng rng(61);
  Matrix A = random_spd(rng, 3);
  Matrix Jr = fd_jacobian(inv, A, 1e-5);
  Matrix expect = -kron(Matrix(A.inverse().transpose()), Matrix(A.inverse()));
  CHECK(rel_err(Jr, expect) < 1e-6);
}

TEST_CASE("fd_jacobian reproduces the square rule") {
  CounterRng rng(62);
  Matrix A = random_matrix(rng, 2, 2);
  auto sq = [](const Matrix& M) { return Matrix(M * M); };
  Matrix J = fd_jacobian(sq, A);
  Matrix expect = kron(Matrix::Identity(2, 2), A) + kron(Matrix(A.transpose()), Matrix::Identity(2, 2));
  CHECK(rel_err(J, expect) < 1e-6);
}

TEST_CASE("fd_jacobian reproduces the linear sandwich rule") {
  CounterRng rng(63);
  Matrix A = random_matrix(rng, 2, 3), B = random_matrix(rng, 2, 4);
  auto f = [&](const Matrix& X) { return Matrix(A * X * B); };
  Matrix J = fd_jacobian(f, random_matrix(rng, 3, 2));
  CHECK(rel_err(J, kron(Matrix(B.transpose()), A)) < 1e-8);

  // ... and the transpose rule.
  auto tr = [](const Matrix& X) { return Matrix(X.transpose()); };
  Matrix Jt = fd_jacobian(tr, random_matrix(rng, 3, 2));
  CHECK((Jt - commutation(3, 2)).norm() < 1e-10);
}

TEST_CASE("fd_jacobian in symmetric mode reproduces the square-root rule") {
  Matrix A = Matrix::Zero(2, 2);
  A.diagonal() << 4, 9;
  Matrix J = fd_jacobian([](const Matrix& M) { return sym_sqrt(M); }, A, 1e-5, FdMode::Symmetric);
  Matrix R = sym_sqrt(A);
  Matrix expect =
      Matrix((kron(Matrix::Identity(2, 2), R) + kron(R, Matrix::Identity(2, 2))).inverse()) *
      symmetric_projector(2);
  CHECK(rel_err(J, expect) < 1e-6);

  CounterRng rng(64);
  Matrix S = random_spd(rng, 3);
  Matrix Js = fd_jacobian([](const Matrix& M) { return sym_sqrt(M); }, S, 0.0, FdMode::Symmetric);
  Matrix Rs = sym_sqrt(S);
  Matrix es =
      Matrix((kron(Matrix::Identity(3, 3), Rs) + kron(Rs, Matrix::Identity(3, 3))).inverse()) *
      symmetric_projector(3);
  CHECK(rel_err(Js, es) < 1e-6);
}

TEST_CASE("product rule for matrix-valued curves") {
  CounterRng rng(65);
  const Index k = 3, m = 2, p = 3, q = 2;
  Matrix F0 = random_matrix(rng, m, p), G0 = random_matrix(rng, p, q);
  Matrix F1 = random_matrix(rng, m * p, k), G1 = random_matrix(rng, p * q, k);
  auto f = [&](const Matrix& v) { return Matrix(F0 + unvec(F1 * v, m, p)); };
  auto g = [&](const Matrix& v) { return Matrix(G0 + unvec(G1 * v, p, q)); };
  Matrix at = random_matrix(rng, k, 1);

  Matrix J_fd = fd_jacobian([&](const Matrix& v) { return Matrix(f(v) * g(v)); }, at);
  Matrix rule = kron(Matrix(g(at).transpose()), Matrix::Identity(m, m)) * F1 +
                kron(Matrix::Identity(q, q), f(at)) * G1;
  CHECK(rel_err(J_fd, rule) < 1e-6);
}

TEST_CASE("scalar golden sensitivities") {
  MatchingModel model = golden_model();
  Equilibrium eq = solve(model);
  JacobianSet js = full_jacobians(model, eq);

  CHECK(std::abs(js.dA_dSxy(0, 0) - 3.618033988749895) < 1e-9);
  CHECK(std::abs(js.dA_dSx(0, 0) - (-1.618033988749895)) < 1e-9);
  CHECK(std::abs(js.dA_dSy(0, 0) - (-1.618033988749895)) < 1e-9);
  CHECK(std::abs(js.dSxy_dA(0, 0) - 0.2763932022500210) < 1e-9);
  CHECK(std::abs(js.dSxy_dSx(0, 0) - 0.4472135954999579) < 1e-9);
  CHECK(std::abs(js.dSxy_dSy(0, 0) - 0.4472135954999579) < 1e-9);
}

TEST_CASE("closed forms match finite differences on square markets") {
  CounterRng rng(66);
  for (int t = 0; t < 20; ++t) {
    Index d = 1 + Index(rng.next_u64() % 3);
    MatchingModel model = random_model(rng, d, d, 0.3, 3.0);
    Equilibrium eq = solve(model);
    MomentSet moments = implied_moments(model, eq);
    double sigma = model.sigma;

    IdentificationJacobians idj = identification_jacobians(moments, sigma);
    Matrix fd_sxy = fd_jacobian(
        [&](const Matrix& c) {
          MomentSet mm = moments;
          mm.cross = c;
          return identify(mm, sigma).affinity;
        },
        moments.cross);
    CAPTURE(d);
    CHECK(rel_err(idj.dA_dSxy, fd_sxy) < 1e-6);

    Matrix fd_sx = fd_jacobian(
        [&](const Matrix& s) {
          MomentSet mm = moments;
          mm.sigma_x = symmetrize(s);
          return identify(mm, sigma).affinity;
        },
        moments.sigma_x, 0.0, FdMode::Symmetric);
    CHECK(rel_err(idj.dA_dSx * symmetric_projector(d), fd_sx) < 1e-6);

    Matrix fd_sy = fd_jacobian(
        [&](const Matrix& s) {
          MomentSet mm = moments;
          mm.sigma_y = symmetrize(s);
          return identify(mm, sigma).affinity;
        },
        moments.sigma_y, 0.0, FdMode::Symmetric);
    CHECK(rel_err(idj.dA_dSy * symmetric_projector(d), fd_sy) < 1e-6);

    EquilibriumJacobians eqj = equilibrium_jacobians(model, eq);
    Matrix fd_a = fd_jacobian(
        [&](const Matrix& a) {
          MatchingModel mm = model;
          mm.affinity = a;
          return solve(mm).cross_cov;
        },
        model.affinity);
    CHECK(rel_err(eqj.dSxy_dA, fd_a) < 1e-6);

    Matrix fd_mx = fd_jacobian(
        [&](const Matrix& s) {
          MatchingModel mm = model;
          mm.sigma_x = symmetrize(s);
          return solve(mm).cross_cov;
        },
        model.sigma_x, 0.0, FdMode::Symmetric);
    CHECK(rel_err(eqj.dSxy_dSx * symmetric_projector(d), fd_mx) < 1e-6);

    Matrix fd_my = fd_jacobian(
        [&](const Matrix& s) {
          MatchingModel mm = model;
          mm.sigma_y = symmetrize(s);
          return solve(mm).cross_cov;
        },
        model.sigma_y, 0.0, FdMode::Symmetric);
    CHECK(rel_err(eqj.dSxy_dSy * symmetric_projector(d), fd_my) < 1e-6);
  }
}

TEST_CASE("the two Jacobian halves are mutually inverse") {
  CounterRng rng(67);
  for (int t = 0; t < 10; ++t) {
    Index d = 1 + Index(rng.next_u64() % 3);
    MatchingModel model = random_model(rng, d, d, 0.3, 3.0);
    Equilibrium eq = solve(model);
    JacobianSet js = full_jacobians(model, eq);
    Matrix prod = js.dA_dSxy * js.dSxy_dA;
    CHECK((prod - Matrix::Identity(d * d, d * d)).norm() < 1e-8);
  }
}

TEST_CASE("transpose trick invariance") {
  CounterRng rng(68);
  MatchingModel model = random_model(rng, 2, 2, 0.5, 2.0);
  MatchingModel swapped;
  swapped.affinity = model.affinity.transpose();
  swapped.sigma = model.sigma;
  swapped.sigma_x = model.sigma_y;
  swapped.sigma_y = model.sigma_x;

  Equilibrium eq = solve(model), eqs = solve(swapped);
  JacobianSet js = full_jacobians(model, eq);
  JacobianSet jss = full_jacobians(swapped, eqs);

  Matrix T = commutation(2, 2);
  // vec A' = T vec A and vec Sxy' = T vec Sxy, so every block conjugates.
  CHECK((jss.dA_dSxy - T * js.dA_dSxy * T.transpose()).norm() < 1e-8);
  CHECK((jss.dSxy_dA - T * js.dSxy_dA * T.transpose()).norm() < 1e-8);
  CHECK((jss.dA_dSx - T * js.dA_dSy).norm() < 1e-8);
  CHECK((jss.dA_dSy - T * js.dA_dSx).norm() < 1e-8);
  CHECK((jss.dSxy_dSx - T * js.dSxy_dSy).norm() < 1e-8);
  CHECK((jss.dSxy_dSy - T * js.dSxy_dSx).norm() < 1e-8);
}

TEST_CASE("closed forms refuse non-square or singular bases") {
  CounterRng rng(69);
  MatchingModel rect = random_model(rng, 3, 2);
  Equilibrium eq = solve(rect);
  try {
    identification_jacobians(implied_moments(rect, eq), rect.sigma);
    FAIL("expected SingularCross");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SingularCross);
  }
  try {
    equilibrium_jacobians(rect, eq);
    FAIL("expected SingularCross");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SingularCross);
  }

  MomentSet degenerate;
  degenerate.sigma_x = Matrix::Identity(2, 2);
  degenerate.sigma_y = Matrix::Identity(2, 2);
  degenerate.cross = Matrix::Zero(2, 2);
  degenerate.cross(0, 0) = 0.5;  // rank 1
  CHECK_THROWS_AS(identification_jacobians(degenerate, 1.0), Error);
}

TEST_CASE("equilibrium Jacobians pass their built-in finite-difference audit") {
  CounterRng rng(70);
  MatchingModel model = random_model(rng, 2, 2, 0.5, 2.0);
  Equilibrium eq = solve(model);
  CHECK_NOTHROW(equilibrium_jacobians(model, eq, {}, /*validate_fd=*/true));
}
