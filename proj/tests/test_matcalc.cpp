#include <doctest.h>

#include <cmath>

#include "gmatch/matcalc.hpp"
#include "gmatch/rng.hpp"
#include "test_util.hpp"

using namespace gmatch;
using gmatch::testing::random_matrix;
using gmatch::testing::random_spd;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix M(2, 2);
  M << a, b, c, d;
  return M;
}

}  // namespace

TEST_CASE("vec stacks columns") {
  Matrix M = mat2(1, 2, 3, 4);
  Vector v = vec(M);
  REQUIRE(v.size() == 4);
  CHECK(v[0] == 1);
  CHECK(v[1] == 3);
  CHECK(v[2] == 2);
  CHECK(v[3] == 4);

  Matrix back = unvec(v, 2, 2);
  CHECK((back - M).norm() == 0.0);

  CHECK(vec(Matrix::Constant(1, 1, 5.0))[0] == 5.0);
}

TEST_CASE("unvec rejects length mismatch") {
  Vector v(3);
  v << 1, 2, 3;
  CHECK_THROWS_AS(unvec(v, 2, 2), Error);
}

TEST_CASE("unvec inverts vec on random shapes") {
  CounterRng rng(101);
  for (auto [r, c] : {std::pair<Index, Index>{2, 3}, {3, 2}, {4, 4}, {1, 5}}) {
    Matrix M = random_matrix(rng, r, c);
    CHECK((unvec(vec(M), r, c) - M).norm() == 0.0);
  }
}

TEST_CASE("kron basics") {
  CHECK((kron(Matrix::Constant(1, 1, 2.0), mat2(1, 2, 3, 4)) - mat2(2, 4, 6, 8)).norm() == 0.0);
  CHECK((kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)) - Matrix::Identity(4, 4)).norm() ==
        0.0);

  // Row-vector times column-vector: a' (x) b = b a'.
  Matrix at(1, 2);
  at << 1, 2;
  Matrix b(2, 1);
  b << 3, 4;
  Matrix expect = mat2(3, 6, 4, 8);
  CHECK((kron(at, b) - expect).norm() == 0.0);
}

TEST_CASE("kron carries the vec identity vec(BXA') = (A (x) B) vec(X)") {
  CounterRng rng(7);
  for (int t = 0; t < 20; ++t) {
    Matrix A = random_matrix(rng, 2, 3);  // m x p
    Matrix B = random_matrix(rng, 3, 2);  // n x q
    Matrix X = random_matrix(rng, 2, 3);  // q x p
    Vector lhs = vec(Matrix(B * X * A.transpose()));
    Vector rhs = kron(A, B) * vec(X);
    CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("kron mixed product") {
  CounterRng rng(8);
  for (int t = 0; t < 20; ++t) {
    Matrix A = random_matrix(rng, 2, 3), C = random_matrix(rng, 3, 2);
    Matrix B = random_matrix(rng, 3, 2), D = random_matrix(rng, 2, 3);
    Matrix lhs = kron(A, B) * kron(C, D);
    Matrix rhs = kron(Matrix(A * C), Matrix(B * D));
    CHECK((lhs - rhs).norm() < 1e-12 * rhs.norm());
  }
}

TEST_CASE("kron determinant exponents") {
  CounterRng rng(9);
  // On square factors of equal size the two exponent readings coincide.
  for (int t = 0; t < 10; ++t) {
    Matrix A = random_matrix(rng, 2, 2), B = random_matrix(rng, 2, 2);
    double direct = kron(A, B).determinant();
    double formula = std::pow(A.determinant(), 2) * std::pow(B.determinant(), 2);
    CHECK(direct == doctest::Approx(formula).epsilon(1e-10));
  }
  // Unequal sizes pin the exponents down: det(A (x) B) = det(A)^nB det(B)^nA,
  // each determinant raised to the *other* factor's size.
  for (int t = 0; t < 10; ++t) {
    Matrix A = random_matrix(rng, 2, 2), B = random_matrix(rng, 3, 3);
    double direct = kron(A, B).determinant();
    double cross = std::pow(A.determinant(), 3) * std::pow(B.determinant(), 2);
    double same = std::pow(A.determinant(), 2) * std::pow(B.determinant(), 3);
    CHECK(direct == doctest::Approx(cross).epsilon(1e-9));
    CHECK(std::abs(direct - same) > 1e-6 * std::abs(direct));
  }
}

TEST_CASE("commutation permutes vec to the transposed stacking") {
  Matrix T22 = commutation(2, 2);
  Vector v(4);
  v << 1, 3, 2, 4;
  Vector w = T22 * v;
  CHECK(w[0] == 1);
  CHECK(w[1] == 2);
  CHECK(w[2] == 3);
  CHECK(w[3] == 4);

  CHECK((commutation(1, 5) - Matrix::Identity(5, 5)).norm() == 0.0);
  CHECK((commutation(2, 3).transpose() - commutation(3, 2)).norm() == 0.0);
  CHECK((commutation(2, 3) * commutation(3, 2) - Matrix::Identity(6, 6)).norm() == 0.0);
}

TEST_CASE("commutation is a permutation and transposes every matrix") {
  CounterRng rng(10);
  for (auto [m, n] : {std::pair<Index, Index>{2, 3}, {3, 3}, {4, 2}}) {
    Matrix T = commutation(m, n);
    for (Index i = 0; i < T.rows(); ++i) {
      CHECK(T.row(i).sum() == 1.0);
      CHECK(T.col(i).sum() == 1.0);
      CHECK(T.row(i).maxCoeff() == 1.0);
    }
    Matrix M = random_matrix(rng, m, n);
    CHECK((T * vec(M) - vec(Matrix(M.transpose()))).norm() == 0.0);
  }
}

TEST_CASE("sym_sqrt on diagonal and identity") {
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 4, 9;
  Matrix R = sym_sqrt(D);
  CHECK(R(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(R(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(R(0, 1)) < 1e-14);
  CHECK((sym_sqrt(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("sym_sqrt of [[2,1],[1,2]]") {
  // Eigenvalues 1 and 3: the root is ((sqrt(3)+1)/2) on the diagonal and
  // ((sqrt(3)-1)/2) off it.
  Matrix S = mat2(2, 1, 1, 2);
  Matrix R = sym_sqrt(S);
  double dia = (std::sqrt(3.0) + 1.0) / 2.0;
  double off = (std::sqrt(3.0) - 1.0) / 2.0;
  CHECK(R(0, 0) == doctest::Approx(dia).epsilon(1e-12));
  CHECK(R(1, 1) == doctest::Approx(dia).epsilon(1e-12));
  CHECK(R(0, 1) == doctest::Approx(off).epsilon(1e-12));
  CHECK(R(1, 0) == doctest::Approx(off).epsilon(1e-12));
}

TEST_CASE("sym_sqrt squares back and clamps tiny negatives") {
  CounterRng rng(11);
  for (int t = 0; t < 20; ++t) {
    Matrix S = random_spd(rng, 4, 0.01);
    Matrix R = sym_sqrt(S);
    CHECK((R * R - S).norm() < 1e-12 * S.norm());
    CHECK((R - R.transpose()).norm() == 0.0);
  }
  // A barely-indefinite input (within the clamp band) is accepted.
  Matrix S = Matrix::Identity(2, 2);
  S(1, 1) = -1e-12;
  Matrix R = sym_sqrt(S);
  CHECK(R(1, 1) == 0.0);
}

TEST_CASE("sym_sqrt rejects indefinite input, sym_inv_sqrt rejects singular") {
  CHECK_THROWS_WITH_AS(sym_sqrt(Matrix::Constant(1, 1, -1.0)), doctest::Contains("eigenvalue"),
                       Error);
  try {
    sym_sqrt(mat2(1, 0, 0, -1));
    FAIL("expected NotPSD");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotPSD);
  }
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 1.0;
  try {
    sym_inv_sqrt(D);
    FAIL("expected Singular");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Singular);
  }
}

TEST_CASE("sym_inv_sqrt inverts sym_sqrt") {
  CounterRng rng(12);
  Matrix S = random_spd(rng, 3);
  CHECK((sym_inv_sqrt(S) * sym_sqrt(S) - Matrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("pinv basics") {
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << 2, 4;
  Matrix P = pinv(D);
  CHECK(P(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(P(1, 1) == doctest::Approx(0.25).epsilon(1e-14));

  Matrix proj = mat2(1, 0, 0, 0);
  CHECK((pinv(proj) - proj).norm() < 1e-14);

  Matrix row(1, 2);
  row << 1, 2;
  Matrix rp = pinv(row);
  CHECK(rp(0, 0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(rp(1, 0) == doctest::Approx(0.4).epsilon(1e-14));
}

TEST_CASE("pinv satisfies the four Penrose conditions") {
  CounterRng rng(13);
  auto check_mp = [&](const Matrix& M) {
    Matrix P = pinv(M);
    double scale = std::max(1.0, M.norm());
    CHECK((M * P * M - M).norm() < 1e-10 * scale);
    CHECK((P * M * P - P).norm() < 1e-10 * std::max(1.0, P.norm()));
    CHECK((Matrix(M * P) - Matrix((M * P).transpose())).norm() < 1e-10 * scale);
    CHECK((Matrix(P * M) - Matrix((P * M).transpose())).norm() < 1e-10 * scale);
  };
  check_mp(random_matrix(rng, 3, 3));
  check_mp(random_matrix(rng, 4, 2));
  check_mp(random_matrix(rng, 2, 4));
  // rank-deficient
  Matrix u = random_matrix(rng, 3, 1), v = random_matrix(rng, 2, 1);
  check_mp(Matrix(u * v.transpose()));
}

TEST_CASE("pinv involution and transpose commute; inverse on invertible input") {
  CounterRng rng(14);
  Matrix M = random_matrix(rng, 3, 2);
  CHECK((pinv(pinv(M)) - M).norm() < 1e-10 * M.norm());
  CHECK((pinv(Matrix(M.transpose())) - pinv(M).transpose()).norm() < 1e-10);

  Matrix S = random_spd(rng, 3);
  CHECK((pinv(S) - S.inverse()).norm() < 1e-10 * S.inverse().norm());
}
