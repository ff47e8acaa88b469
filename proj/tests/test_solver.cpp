#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "fembem/fem.hpp"
#include "fembem/solver.hpp"

using namespace fembem;

namespace {

Vector random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

std::shared_ptr<const Mesh> mesh_of(DomainId d, int uniform) {
  Mesh m = make_initial_mesh(d);
  for (int k = 0; k < uniform; ++k) m = refine_uniform(m).first;
  return std::make_shared<const Mesh>(std::move(m));
}

double energy(const SparseMatrix& S, const Vector& e) { return e.dot(S * e); }

}  // namespace

TEST_CASE("PCG energy error is non-increasing") {
  const auto mesh = mesh_of(DomainId::LShape, 4);
  const SparseMatrix S = assemble_riesz(*mesh);
  const Vector b = random_vector(S.rows(), 1);
  const Vector exact = cholesky_solve(S, b);
  for (const auto& P : {identity_preconditioner(), jacobi_preconditioner(S)}) {
    // replay the iterates by capping the iteration count
    double prev = energy(S, exact);
    for (int k = 1; k <= 40; ++k) {
      const auto r = pcg(S, b, Vector::Zero(S.rows()), P, StoppingRule::relative(1e-14, k));
      const double e = energy(S, exact - r.x);
      CHECK(e <= prev * (1 + 1e-12));
      prev = e;
    }
  }
}

TEST_CASE("exact preconditioner surrogate equals the energy error") {
  const auto mesh = mesh_of(DomainId::ZShape, 3);
  const SparseMatrix S = assemble_riesz(*mesh);
  const Vector b = random_vector(S.rows(), 2);
  const Vector exact = cholesky_solve(S, b);
  const Preconditioner P = exact_preconditioner(S);
  for (std::uint64_t seed : {3, 4, 5}) {
    const Vector x = random_vector(S.rows(), seed);
    const double e = energy(S, exact - x);
    CHECK(algebraic_error_surrogate(S, b, x, P) == doctest::Approx(e).epsilon(1e-10));
  }
  // with P = S one step solves the system
  const auto r = pcg(S, b, Vector::Zero(S.rows()), P, StoppingRule::relative(1e-12));
  CHECK(r.iterations == 1);
  CHECK((r.x - exact).lpNorm<Eigen::Infinity>() <= 1e-10 * exact.lpNorm<Eigen::Infinity>());
}

TEST_CASE("surrogate history matches the residual") {
  const auto mesh = mesh_of(DomainId::LShape, 3);
  const SparseMatrix S = assemble_riesz(*mesh);
  const Vector b = random_vector(S.rows(), 6);
  const Preconditioner P = jacobi_preconditioner(S);
  const auto r = pcg(S, b, Vector::Zero(S.rows()), P, StoppingRule::relative(1e-6));
  CHECK(r.converged);
  CHECK(r.energies.size() == static_cast<std::size_t>(r.iterations + 1));
  CHECK(r.surrogate() == doctest::Approx(algebraic_error_surrogate(S, b, r.x, P)).epsilon(1e-6));
  CHECK(std::sqrt(r.surrogate()) <= 1e-6 * std::sqrt(r.energies.front()));
  for (double e : r.energies) CHECK(e >= 0.0);
}

TEST_CASE("lambda criterion") {
  const auto mesh = mesh_of(DomainId::LShape, 3);
  const SparseMatrix S = assemble_riesz(*mesh);
  const Vector b = random_vector(S.rows(), 7);
  const Vector exact = cholesky_solve(S, b);
  const Preconditioner P = jacobi_preconditioner(S);
  const Vector x0 = Vector::Zero(S.rows());

  // stops at the first k with surrogate_k <= lambda * surrogate_0
  const double lambda = 0.1;
  const auto r = pcg(S, b, x0, P, StoppingRule::lambda(lambda));
  CHECK(r.converged);
  CHECK(r.surrogate() <= lambda * r.energies.front());
  for (int k = 0; k < r.iterations; ++k) CHECK(r.energies[static_cast<std::size_t>(k)] > lambda * r.energies.front());

  // exact start needs no iteration (solution representable without rounding)
  DenseMatrix T(2, 2);
  T << 2, 1, 1, 2;
  const Vector ones(Vector::Ones(2));
  for (const auto& rule : {StoppingRule::lambda(0.5), StoppingRule::relative(1e-3)}) {
    const auto z = pcg(T, Vector(3 * ones), ones, identity_preconditioner(), rule);
    CHECK(z.iterations == 0);
    CHECK(z.converged);
    CHECK(z.surrogate() == 0.0);
  }

  // lambda = 0 runs to the cap unless the residual vanishes
  const auto capped = pcg(S, b, x0, P, StoppingRule::lambda(0.0, 3));
  CHECK(capped.iterations == 3);
  CHECK_FALSE(capped.converged);

  CHECK_THROWS_AS(pcg(S, b, x0, P, StoppingRule::lambda(1.0)), SolverError);
  CHECK_THROWS_AS(pcg(S, b, x0, P, StoppingRule::lambda(-0.1)), SolverError);
  CHECK_THROWS_AS(pcg(S, b, x0, P, StoppingRule::relative(0.0)), SolverError);
}

TEST_CASE("small systems") {
  DenseMatrix T(2, 2);
  T << 2, 1, 1, 2;
  const Vector x = cholesky_solve(T, Vector(Vector::Ones(2)));
  CHECK(x[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const DenseMatrix I = DenseMatrix::Identity(5, 5);
  const Vector b = random_vector(5, 8);
  const auto r = pcg(I, b, Vector::Zero(5), identity_preconditioner(), StoppingRule::relative(1e-14));
  CHECK(r.iterations == 1);
  CHECK((r.x - b).norm() <= 1e-15 * b.norm());

  // random SPD: Cholesky against tightly converged PCG
  const DenseMatrix G = random_vector(2500, 9).reshaped(50, 50);
  const DenseMatrix A = G * G.transpose() + 50.0 * DenseMatrix::Identity(50, 50);
  const Vector c = random_vector(50, 10);
  const auto p = pcg(A, c, Vector::Zero(50), identity_preconditioner(), StoppingRule::relative(1e-12));
  CHECK((cholesky_solve(A, c) - p.x).norm() <= 1e-9 * p.x.norm());
  CHECK(algebraic_error_surrogate(A, c, cholesky_solve(A, c), identity_preconditioner()) <= 1e-24 * c.squaredNorm());
}

TEST_CASE("one Jacobi step meets the lambda criterion on the mass matrix") {
  // spectrum of diag(M)^{-1} M on P1 elements lies in [1/2, 2]
  for (auto d : {DomainId::LShape, DomainId::ZShape}) {
    const auto mesh = mesh_of(d, 4);
    const SparseMatrix M = assemble_mass(*mesh);
    const Vector b = random_vector(M.rows(), 11);
    const auto r = pcg(M, b, Vector::Zero(M.rows()), jacobi_preconditioner(M), StoppingRule::lambda(0.5));
    CHECK(r.iterations == 1);
  }
}

TEST_CASE("local multilevel preconditioner keeps iterations bounded") {
  auto coarse = mesh_of(DomainId::LShape, 0);
  auto hierarchy = std::make_shared<MeshHierarchy>(coarse);
  std::vector<int> its;
  for (int level = 1; level <= 8; ++level) {
    auto [fine, rel] = refine_uniform(hierarchy->finest());
    hierarchy->push(std::make_shared<const Mesh>(std::move(fine)), rel);
    const SparseMatrix S = assemble_riesz(hierarchy->finest());
    const Preconditioner P = local_multilevel_preconditioner(hierarchy);
    CHECK(P.kind == PreconditionerKind::LocalMultilevelDiagonal);
    // P^{-1} is symmetric positive definite
    const Vector u = random_vector(S.rows(), 10 + level), v = random_vector(S.rows(), 20 + level);
    CHECK(u.dot(P.apply(v)) == doctest::Approx(v.dot(P.apply(u))).epsilon(1e-12));
    CHECK(u.dot(P.apply(u)) > 0.0);

    const Vector b = random_vector(S.rows(), 30 + level);
    const auto r = pcg(S, b, Vector::Zero(S.rows()), P, StoppingRule::relative(1e-6));
    CHECK(r.converged);
    its.push_back(r.iterations);
    const auto jac = pcg(S, b, Vector::Zero(S.rows()), jacobi_preconditioner(S), StoppingRule::relative(1e-6));
    if (level >= 6) CHECK(r.iterations < jac.iterations);
  }
  CHECK(hierarchy->levels() == 9);
  for (int k : its) CHECK(k <= 40);
}

TEST_CASE("hierarchy with local refinement and identity steps") {
  auto hierarchy = std::make_shared<MeshHierarchy>(mesh_of(DomainId::ZShape, 1));
  const std::vector<Index> none;
  auto [same, id] = refine_nvb(hierarchy->finest(), none);
  hierarchy->push(std::make_shared<const Mesh>(std::move(same)), id);
  CHECK(hierarchy->levels() == 1);
  std::mt19937_64 rng(3);
  for (int step = 0; step < 6; ++step) {
    std::vector<Index> marked;
    for (std::size_t t = 0; t < hierarchy->finest().num_triangles(); ++t)
      if (rng() % 5 == 0) marked.push_back(static_cast<Index>(t));
    auto [fine, rel] = refine_nvb(hierarchy->finest(), marked);
    hierarchy->push(std::make_shared<const Mesh>(std::move(fine)), rel);
  }
  const SparseMatrix S = assemble_riesz(hierarchy->finest());
  const Preconditioner P = local_multilevel_preconditioner(hierarchy);
  const Vector b = random_vector(S.rows(), 40);
  const auto r = pcg(S, b, Vector::Zero(S.rows()), P, StoppingRule::relative(1e-8));
  CHECK(r.converged);
  CHECK((S * r.x - b).norm() <= 1e-6 * b.norm());
  CHECK_THROWS_AS(P.apply(Vector::Zero(3)), SolverError);

  Mesh other = make_initial_mesh(DomainId::LShape);
  auto [f2, rel2] = refine_uniform(other);
  CHECK_THROWS_AS(hierarchy->push(std::make_shared<const Mesh>(f2), rel2), MeshError);
}

TEST_CASE("Cholesky helpers") {
  DenseMatrix A(3, 3);
  A << 4, 1, 0, 1, 3, 1, 0, 1, 2;
  const Vector b(Vector::Ones(3));
  const Vector x = cholesky_solve(A, b);
  CHECK((A * x - b).norm() <= 1e-14);
  CHECK((cholesky_solve(SparseMatrix(A.sparseView()), b) - x).norm() <= 1e-14);
  // pivots of the factor: 4, 3 - 1/4, 2 - 1/(11/4)
  CHECK(min_cholesky_pivot(A) == doctest::Approx(2.0 - 4.0 / 11.0).epsilon(1e-14));

  DenseMatrix B = A;
  B(2, 2) = -1.0;
  CHECK(min_cholesky_pivot(B) <= 0.0);
  CHECK_THROWS_AS(cholesky_solve(B, b), NotSpdError);
  CHECK_THROWS_AS(cholesky_solve(SparseMatrix(B.sparseView()), b), NotSpdError);
  CHECK_THROWS_AS(exact_preconditioner(B), NotSpdError);
  CHECK_THROWS_AS(jacobi_preconditioner(Vector(Vector::Constant(3, -1.0))), NotSpdError);

  // indefinite operator breaks PCG down
  DenseMatrix C = DenseMatrix::Identity(2, 2);
  C(1, 1) = -1.0;
  CHECK_THROWS_AS(pcg(C, Vector(Vector::Ones(2)), Vector::Zero(2), identity_preconditioner(), StoppingRule::relative(1e-10)),
                  SolverError);
}
