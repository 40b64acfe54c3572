#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "feasproj/certify.hpp"

using namespace feasproj;

namespace {

std::string data_path(const std::string& name) {
  return std::string(FEASPROJ_DATA_DIR) + "/" + name;
}

// f(x) = x^2 - 1 over one variable
PolySystem one_dim_parabola(double constant = -1.0) {
  PolySystem sys;
  sys.dim = 1;
  QuadraticFunction f = QuadraticFunction::zero(1);
  f.Q.coeffRef(0, 0) = 1.0;
  f.d = constant;
  sys.equations.push_back(f);
  return sys;
}

// Random quadratic system with a known zero at x_star.
PolySystem random_system(Index m, Index n_eq, const Vector& x_star, std::mt19937& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  PolySystem sys;
  sys.dim = m;
  for (Index e = 0; e < n_eq; ++e) {
    QuadraticFunction f = QuadraticFunction::zero(m);
    for (Index i = 0; i < m; ++i)
      for (Index j = i; j < m; ++j) {
        const double v = 0.25 * d(rng);
        if (v != 0.0) {
          f.Q.coeffRef(i, j) += v;
          if (i != j) f.Q.coeffRef(j, i) += v;
        }
      }
    for (Index i = 0; i < m; ++i) f.c.coeffRef(i) = d(rng);
    f.d = -(x_star.dot(Matrix(f.Q) * x_star) + f.c.dot(x_star));
    sys.equations.push_back(f);
  }
  return sys;
}

}  // namespace

TEST_CASE("alpha0 equals (13 - 3 sqrt(17)) / 4") {
  CHECK(kAlpha0 == doctest::Approx((13.0 - 3.0 * std::sqrt(17.0)) / 4.0).epsilon(1e-15));
  CHECK(kAlpha0 == doctest::Approx(0.157671).epsilon(1e-5));
}

TEST_CASE("Newton step on x^2 - 1 at x = 2") {
  PolySystem sys = one_dim_parabola();
  Vector x(1);
  x << 2.0;
  const Vector nx = newton_step(sys, x);
  CHECK(nx[0] == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("a zero is a fixed point of the Newton operator") {
  PolySystem sys = one_dim_parabola();
  Vector x(1);
  x << 1.0;
  CHECK(newton_step(sys, x)[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("underdetermined circle takes the minimum-norm step") {
  PolySystem sys;
  sys.dim = 2;
  QuadraticFunction f = QuadraticFunction::zero(2);
  f.Q.coeffRef(0, 0) = 1.0;
  f.Q.coeffRef(1, 1) = 1.0;
  f.d = -1.0;
  sys.equations.push_back(f);
  Vector x(2);
  x << 2.0, 0.0;
  const Vector nx = newton_step(sys, x);
  CHECK(nx[0] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(nx[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("alpha test hand values at x = 1.1") {
  PolySystem sys = one_dim_parabola();
  Vector x(1);
  x << 1.1;
  const AlphaCertificate cert = alpha_test(sys, x);
  CHECK(cert.beta == doctest::Approx(0.21 / 2.2).epsilon(1e-12));
  CHECK(cert.gamma == doctest::Approx(1.0 / 2.2).epsilon(1e-12));
  CHECK(cert.alpha == doctest::Approx(0.0433884).epsilon(1e-4));
  CHECK(std::abs(cert.alpha - 0.0433884) <= 1e-6);
  CHECK(cert.certified);
  CHECK(cert.alpha == cert.beta * cert.gamma);
  CHECK(cert.distance_bound == 2.0 * cert.beta);
}

TEST_CASE("alpha vanishes at an exact zero") {
  PolySystem sys = one_dim_parabola();
  Vector x(1);
  x << 1.0;
  const AlphaCertificate cert = alpha_test(sys, x);
  CHECK(cert.beta == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(cert.alpha == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(cert.certified);
}

TEST_CASE("gamma bound is exact for one-dimensional quadratics") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.5, 3.0);
  for (int t = 0; t < 10; ++t) {
    const double a = u(rng), b = u(rng), c = -u(rng);
    PolySystem sys;
    sys.dim = 1;
    QuadraticFunction f = QuadraticFunction::zero(1);
    f.Q.coeffRef(0, 0) = a;
    f.c.coeffRef(0) = b;
    f.d = c;
    sys.equations.push_back(f);
    Vector x(1);
    x << u(rng);
    const AlphaCertificate cert = alpha_test(sys, x);
    const double jac = 2 * a * x[0] + b;
    const double truth = std::abs(a / jac);  // |J^-1 f''/2|
    CHECK(cert.gamma >= truth - 1e-12);
    CHECK(cert.gamma <= 3.0 * truth + 1e-12);
  }
}

TEST_CASE("newton_refine contracts within the approximate-zero envelope") {
  PolySystem sys = one_dim_parabola();
  Vector x0(1);
  x0 << 1.1;
  REQUIRE(alpha_test(sys, x0).certified);
  NewtonRefineResult r = newton_refine(sys, x0, 6, 1e-14);
  CHECK(r.converged);
  // iterate by hand and compare against the (1/2)^(2^(i-1)-1) envelope
  Vector x = x0;
  for (int i = 1; i <= 4; ++i) {
    x = newton_step(sys, x);
    const double bound = std::pow(0.5, std::pow(2.0, i - 1) - 1.0) * std::abs(x0[0] - 1.0);
    CHECK(std::abs(x[0] - 1.0) <= bound + 1e-15);
  }
}

TEST_CASE("quadratic convergence on 20 random certified systems") {
  std::mt19937 rng(31);
  int certified_count = 0;
  for (int t = 0; t < 200 && certified_count < 20; ++t) {
    const Index m = 2 + t % 3;
    Vector x_star(m);
    for (Index i = 0; i < m; ++i) x_star[i] = 0.5 + 0.1 * (i + 1);
    PolySystem sys = random_system(m, m, x_star, rng);
    Vector x0 = x_star + Vector::Constant(m, 1e-2);
    const AlphaCertificate cert = alpha_test(sys, x0);
    if (!cert.certified) continue;
    ++certified_count;
    NewtonRefineResult r = newton_refine(sys, x0, 50, 1e-13);
    REQUIRE(r.converged);
    const Vector zero = r.point;  // last iterate as the associated zero
    Vector x = x0;
    const double d0 = (x0 - zero).norm();
    for (int i = 1; i <= 4; ++i) {
      x = newton_step(sys, x);
      const double bound = std::pow(0.5, std::pow(2.0, i - 1) - 1.0) * d0;
      CHECK((x - zero).norm() <= bound + 1e-12);
    }
    // distance bound: the associated zero is within 2 beta
    CHECK((x0 - zero).norm() <= cert.distance_bound + 1e-12);
  }
  CHECK(certified_count == 20);
}

TEST_CASE("no real zero: x^2 + 1 does not converge") {
  PolySystem sys = one_dim_parabola(+1.0);
  Vector x0(1);
  x0 << 1.0;
  NewtonRefineResult r = newton_refine(sys, x0, 60, 1e-12);
  CHECK(!r.converged);
}

TEST_CASE("pseudoinverse contract on random rank-deficient Jacobians") {
  std::mt19937 rng(13);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Index n = 6, m = 8, r = 3;
    Matrix U(n, r), V(m, r);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < r; ++j) U(i, j) = d(rng);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < r; ++j) V(i, j) = d(rng);
    Matrix J = U * V.transpose();
    bool deficient = false;
    Matrix Jp = pseudo_inverse(J, 1e-10, &deficient);
    CHECK(deficient);  // rank 3 < min(6, 8)
    CHECK((J * Jp * J - J).norm() <= 1e-9 * J.norm());
    CHECK((Jp * J * Jp - Jp).norm() <= 1e-9 * Jp.norm());
  }
}

TEST_CASE("case9 power flow from a flat seed satisfies the full model") {
  CaseData cd = parse_case_file(data_path("case9.m"));
  FlowMatrices fm = build_flow_matrices(build_admittance(cd));
  PolySystem sys = build_power_flow_system(cd, fm);
  CHECK(sys.equations.size() == 2 * fm.n_bus);
  Vector x0 = Vector::Zero(2 * fm.n_bus);
  x0.head(fm.n_bus).setOnes();
  NewtonRefineResult r = newton_refine(sys, x0, 50, 1e-10);
  REQUIRE(r.converged);

  PopProblem op2 = build_op2(cd, fm);
  Vector chi = chi_from_voltage(op2, cd, fm, r.point);
  Evaluation ev = evaluate(op2, chi);
  CHECK(ev.max_violation <= 1e-6);  // the solved case is feasible as given
  // the certificate at the converged point is clean
  AlphaCertificate cert = alpha_test(sys, r.point);
  CHECK(cert.certified);
  CHECK(cert.beta <= 1e-8);
  // dispatch cost of the case-file setpoints, sanity band
  CHECK(ev.objective > 5000.0);
  CHECK(ev.objective < 6000.0);
}

TEST_CASE("project_stage3 returns feasible chi_tilde unchanged") {
  CaseData cd = parse_case_file(data_path("case9.m"));
  FlowMatrices fm = build_flow_matrices(build_admittance(cd));
  PopProblem op2 = build_op2(cd, fm);
  PolySystem sys = build_power_flow_system(cd, fm);
  Vector x0 = Vector::Zero(2 * fm.n_bus);
  x0.head(fm.n_bus).setOnes();
  NewtonRefineResult r = newton_refine(sys, x0, 50, 1e-10);
  REQUIRE(r.converged);
  Vector chi = chi_from_voltage(op2, cd, fm, r.point);
  NlpOptions opts;
  Stage3Result s3 = project_stage3(op2, cd, fm, chi, Stage3Mode::power_flow, NormKind::l2,
                                   opts);
  CHECK(s3.success);
  CHECK(s3.status == "already_feasible");
  CHECK(s3.distance == 0.0);
  for (Index i = 0; i < chi.size(); ++i) CHECK(s3.point[i] == chi[i]);
}

TEST_CASE("divergence is detected and reported") {
  // x^2 + 1 oscillates; from a tiny x the first steps blow up
  PolySystem sys = one_dim_parabola(+1.0);
  Vector x0(1);
  x0 << 1e-8;
  NewtonRefineResult r = newton_refine(sys, x0, 100, 1e-12);
  CHECK(!r.converged);
}
