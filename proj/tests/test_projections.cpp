#include "fracdg/projections.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace fracdg;

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

TEST(GaussRadau, ReproducesPolynomials) {
  for (int k = 1; k <= 4; ++k) {
    const Mesh mesh(2.0, 6, k);
    auto p = [k](double x) {
      double v = 0.0;
      for (int i = 0; i <= k; ++i) v += (i % 2 ? -0.5 : 1.0) * std::pow(x, i);
      return v;
    };
    const DGFunction want = l2_project(p, mesh, k, k + 4);
    for (RadauSide side : {RadauSide::left, RadauSide::right}) {
      const DGFunction got = gauss_radau_project(p, mesh, k, side);
      for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got.coefficients()[i], want.coefficients()[i], 1e-13);
    }
  }
}

TEST(GaussRadau, IncludedEndpointIsExact) {
  const int k = 2;
  const Mesh mesh(2.0 * pi, 16, k);
  auto v = [](double x) { return std::sin(x) + 0.3 * std::cos(3.0 * x); };
  const DGFunction right = gauss_radau_project(v, mesh, k, RadauSide::right);
  const DGFunction left = gauss_radau_project(v, mesh, k, RadauSide::left);
  for (int j = 0; j < 16; ++j) {
    EXPECT_NEAR(right.cell_value(j, 1.0), v(mesh.node(j + 1)), 1e-13);
    EXPECT_NEAR(left.cell_value(j, 0.0), v(mesh.node(j)), 1e-13);
  }
}

TEST(GaussRadau, OrthogonalToLowerDegree) {
  const int k = 3;
  const Mesh mesh(2.0 * pi, 8, k);
  auto v = [](double x) { return std::exp(std::sin(x)); };
  const DGFunction pr = gauss_radau_project(v, mesh, k, RadauSide::right, 12);
  const QuadratureRule& q = gauss_legendre(12);
  for (int j = 0; j < 8; ++j)
    for (int p = 0; p < k; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        const double x = mesh.point(j, q.nodes[i]);
        s += q.weights[i] * (v(x) - pr.cell_value(j, q.nodes[i])) * std::legendre(p, 2.0 * q.nodes[i] - 1.0);
      }
      EXPECT_NEAR(s, 0.0, 1e-12);
    }
}

TEST(GaussRadau, ApproximationOrder) {
  for (int k = 1; k <= 3; ++k) {
    for (RadauSide side : {RadauSide::left, RadauSide::right}) {
      double prev = 0.0;
      for (int N : {16, 32, 64, 128}) {
        const Mesh mesh(2.0 * pi, N, k);
        const DGFunction p = gauss_radau_project([](double x) { return std::sin(x); }, mesh, k, side);
        const QuadratureRule& q = gauss_legendre(k + 6);
        double e2 = 0.0;
        for (int j = 0; j < N; ++j)
          for (std::size_t i = 0; i < q.size(); ++i) {
            const double d = p.cell_value(j, q.nodes[i]) - std::sin(mesh.point(j, q.nodes[i]));
            e2 += q.weights[i] * mesh.h() * d * d;
          }
        const double e = std::sqrt(e2);
        if (prev > 0.0) EXPECT_NEAR(std::log2(prev / e), k + 1.0, 0.1) << "k=" << k << " N=" << N;
        prev = e;
      }
    }
  }
}

TEST(UpwindProject, MixesSidesPerCell) {
  const Mesh mesh(1.0, 4, 1);
  auto v = [](double x) { return x * x; };
  const ProjectionChoice choice = {RadauSide::left, RadauSide::right, RadauSide::left, RadauSide::right};
  const DGFunction mixed = upwind_project(v, choice, mesh, 1);
  const DGFunction l = gauss_radau_project(v, mesh, 1, RadauSide::left);
  const DGFunction r = gauss_radau_project(v, mesh, 1, RadauSide::right);
  for (int j = 0; j < 4; ++j) {
    const DGFunction& src = j % 2 == 0 ? l : r;
    EXPECT_EQ(mixed(j, 0), src(j, 0));
    EXPECT_EQ(mixed(j, 1), src(j, 1));
  }
  EXPECT_THROW(upwind_project(v, ProjectionChoice(3, RadauSide::left), mesh, 1), InvalidArgument);
}

TEST(UpwindChoice, FastRightMovingFlowPicksRight) {
  const Mesh mesh(1.0, 8, 1);
  const double h = mesh.h();
  const ProjectionChoice c0 = upwind_projection_choice([&](double) { return 2.0 * h; }, mesh, h, std::nullopt, 0);
  for (RadauSide s : c0) EXPECT_EQ(s, RadauSide::right);
  const ProjectionChoice c1 = upwind_projection_choice([&](double) { return 2.0 * h; }, mesh, h, c0, 1);
  for (RadauSide s : c1) EXPECT_EQ(s, RadauSide::right);
}

TEST(UpwindChoice, InitialZeroSpeedPicksLeftThenReuses) {
  const Mesh mesh(1.0, 8, 1);
  const double h = mesh.h();
  const ProjectionChoice c0 = upwind_projection_choice([](double) { return 0.0; }, mesh, h, std::nullopt, 0);
  for (RadauSide s : c0) EXPECT_EQ(s, RadauSide::left);
  const ProjectionChoice c1 = upwind_projection_choice([&](double) { return 0.5 * h; }, mesh, h, c0, 1);
  EXPECT_EQ(c1, c0);
}

TEST(UpwindChoice, AlternatingSignsAlternateSides) {
  const Mesh mesh(1.0, 8, 1);
  const double h = mesh.h();
  auto fp = [&](int j, double) { return (j % 2 == 0 ? 2.0 : -2.0) * h; };
  const ProjectionChoice prev(8, RadauSide::left);
  const ProjectionChoice c = upwind_projection_choice(fp, mesh, h, prev, 3);
  for (int j = 0; j < 8; ++j) EXPECT_EQ(c[j], j % 2 == 0 ? RadauSide::right : RadauSide::left);
}

TEST(UpwindChoice, MissingPreviousIsAnError) {
  const Mesh mesh(1.0, 8, 1);
  EXPECT_THROW(upwind_projection_choice([](double) { return 1.0; }, mesh, mesh.h(), std::nullopt, 2), InvalidArgument);
}

TEST(UpwindChoice, Deterministic) {
  const Mesh mesh(2.0 * pi, 16, 2);
  auto fp = [](double x) { return std::sin(x); };
  const ProjectionChoice prev(16, RadauSide::left);
  EXPECT_EQ(upwind_projection_choice(fp, mesh, mesh.h(), prev, 5), upwind_projection_choice(fp, mesh, mesh.h(), prev, 5));
}

TEST(UpwindChoice, HysteresisFreezesChoice) {
  const Mesh mesh(1.0, 8, 1);
  const double h = mesh.h();
  std::vector<ProjectionChoice> traj;
  traj.push_back(upwind_projection_choice([&](double) { return 3.0 * h; }, mesh, h, std::nullopt, 0));
  for (int n = 1; n < 20; ++n) {
    const double fp = 0.9 * h * std::sin(0.7 * n);  // never beyond the threshold
    traj.push_back(upwind_projection_choice([&](double) { return fp; }, mesh, h, traj.back(), n));
    EXPECT_EQ(traj.back(), traj.front());
  }
  const SwitchCounter sc = count_switches(traj);
  EXPECT_EQ(sc.max_count(), 0);
}

TEST(SwitchCounter, CountsPerCellChanges) {
  const ProjectionChoice a = {RadauSide::left, RadauSide::left};
  const ProjectionChoice b = {RadauSide::right, RadauSide::left};
  const SwitchCounter sc = count_switches({a, b, a, a, b});
  EXPECT_EQ(sc.counts, (std::vector<int>{3, 0}));
  EXPECT_EQ(sc.levels, 4);
  EXPECT_EQ(sc.max_count(), 3);
}

TEST(SwitchBound, ConstantSpeedNeverSwitches) {
  const Mesh mesh(1.0, 32, 1);
  std::vector<ProjectionChoice> traj;
  std::optional<ProjectionChoice> prev;
  for (int n = 0; n < 100; ++n) {
    traj.push_back(upwind_projection_choice([](double) { return 0.8; }, mesh, mesh.h(), prev, n));
    prev = traj.back();
  }
  const SwitchBoundReport r = verify_switch_bound(count_switches(traj), 1.0, mesh.h(), 2, 0.0);
  EXPECT_EQ(r.max_count, 0);
  EXPECT_TRUE(r.pass);
}

TEST(SwitchBound, OscillatingSpeedWithinBound) {
  const double A = 1.0, omega = 2.0 * pi, T = 1.0;
  std::vector<double> logs_h, logs_n;
  for (int e = 4; e <= 8; ++e) {
    const Mesh mesh(1.0, 1 << e, 1);
    const double h = mesh.h();
    const double tau = 0.1 * h;
    const int steps = static_cast<int>(std::ceil(T / tau));
    std::vector<ProjectionChoice> traj;
    std::optional<ProjectionChoice> prev;
    for (int n = 0; n <= steps; ++n) {
      const double t = std::min(T, n * tau);
      const double fp = A * std::sin(omega * t);
      traj.push_back(upwind_projection_choice([&](double) { return fp; }, mesh, h, prev, n));
      prev = traj.back();
    }
    const SwitchBoundReport r = verify_switch_bound(count_switches(traj), T, h, 2, A * omega * omega);
    EXPECT_TRUE(r.pass) << "h=" << h;
    EXPECT_NEAR(r.bound, 2.0 * T * std::sqrt(A * omega * omega) / std::sqrt(h), 1e-9 * r.bound);
    logs_h.push_back(std::log(h));
    logs_n.push_back(std::log(std::max(1, r.max_count)));
  }
  // switch count grows no faster than h^{-1/2} (+0.1 slack)
  const double slope = (logs_n.back() - logs_n.front()) / (logs_h.back() - logs_h.front());
  EXPECT_GE(slope, -0.6);
}

TEST(SwitchBound, RejectsBadArguments) {
  SwitchCounter sc;
  EXPECT_THROW(verify_switch_bound(sc, 1.0, 0.0, 2, 1.0), InvalidArgument);
  EXPECT_THROW(verify_switch_bound(sc, 1.0, 0.1, 0, 1.0), InvalidArgument);
}
