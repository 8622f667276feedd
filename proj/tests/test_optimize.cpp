#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "macmem/chain.hpp"
#include "macmem/optimize.hpp"
#include "macmem/protocols.hpp"

using namespace macmem;

TEST_CASE("boundary dimension counts realizable pairs") {
  CHECK(boundary_dimension(FeedbackKind::None, 5) == 3);
  CHECK(boundary_dimension(FeedbackKind::SF, 5) == 4);
  CHECK(boundary_dimension(FeedbackKind::CNC, 5) == 4);
  CHECK(boundary_dimension(FeedbackKind::ENE, 5) == 4);
  CHECK(boundary_dimension(FeedbackKind::Ternary, 5) == 5);
  CHECK(boundary_dimension(FeedbackKind::Ternary, 2) == 4);
  CHECK(boundary_dimension(FeedbackKind::NPlus1Ary, 5) == 10);
}

TEST_CASE("evaluator agrees with the exact chain") {
  const auto evaluate = slotted_evaluator(FeedbackKind::Ternary, 5);
  for (const auto& probs :
       {std::vector<double>{0.2, 0.1, 0.3, 0.9, 0.05},
        std::vector<double>{0.5, 0.5, 0.5, 0.5, 0.5},
        std::vector<double>{0.204442137315, 0.027828767898, 0.342499714126,
                            0.991334365678, 0.0001}}) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
        probs.data(), static_cast<Eigen::Index>(probs.size()));
    const auto [tau, delay] = evaluate(x);
    const auto m = metrics_reduced(one_slot(probs, FeedbackKind::Ternary, 5));
    CHECK(tau == doctest::Approx(m.tau_total).epsilon(1e-12));
    CHECK(delay == doctest::Approx(m.delay).epsilon(1e-12));
  }
}

TEST_CASE("evaluator flags chains without a unique stationary law") {
  const auto evaluate = slotted_evaluator(FeedbackKind::Ternary, 2);
  Eigen::VectorXd locked(4);
  locked << 0.0, 0.0, 1.0, 0.5;  // mirrored lock-in states, reducible
  const auto [tau, delay] = evaluate(locked);
  CHECK((std::isnan(tau) || std::isinf(delay)));
}

TEST_CASE("solver reaches the known boundary point") {
  const auto point =
      solve_at_tau(0.792, default_boundary_init(FeedbackKind::Ternary, 5),
                   FeedbackKind::Ternary, 5);
  REQUIRE(point.converged);
  CHECK(std::abs(point.achieved_tau - 0.792) <= 1e-4);
  CHECK(point.delay <= 41.5935 + 0.05);
  CHECK(point.delay >= 5.0 / (2.0 * 0.792) - 0.5);
  CHECK(point.protocol_vector.size() == 5);
  CHECK(point.protocol_vector.minCoeff() >= 1e-4 - 1e-12);
  CHECK(point.protocol_vector.maxCoeff() <= 1.0 - 1e-4 + 1e-12);
}

TEST_CASE("solver is deterministic") {
  const auto a =
      solve_at_tau(0.6, default_boundary_init(FeedbackKind::Ternary, 5),
                   FeedbackKind::Ternary, 5, 7);
  const auto b =
      solve_at_tau(0.6, default_boundary_init(FeedbackKind::Ternary, 5),
                   FeedbackKind::Ternary, 5, 7);
  REQUIRE(a.converged);
  CHECK(a.delay == b.delay);
  CHECK((a.protocol_vector - b.protocol_vector).norm() == 0.0);
}

TEST_CASE("sweep converges and respects the delay lower bound") {
  std::vector<double> grid;
  for (double t = 0.9; t > 0.29; t -= 0.1) grid.push_back(t);
  const auto points = boundary_sweep(grid, FeedbackKind::Ternary, 5);
  REQUIRE(points.size() == grid.size());
  for (const auto& p : points) {
    CHECK(p.converged);
    CHECK(std::abs(p.achieved_tau - p.target_tau) <= 1e-4);
    CHECK(p.delay >= 5.0 / (2.0 * p.target_tau) - 0.5 - 1e-9);
  }
  // Delay grows with the throughput demand on the upper branch.
  CHECK(points[0].delay > points[2].delay);
}

TEST_CASE("sweep validates its grid") {
  CHECK_THROWS_AS(boundary_sweep({}, FeedbackKind::Ternary, 5), ConfigError);
  CHECK_THROWS_AS(boundary_sweep({0.3, 0.5}, FeedbackKind::Ternary, 5),
                  ConfigError);
  CHECK_THROWS_AS(boundary_sweep({1.2, 0.5}, FeedbackKind::Ternary, 5),
                  ConfigError);
  CHECK_THROWS_AS(boundary_sweep({0.5, 0.0}, FeedbackKind::Ternary, 5),
                  ConfigError);
}

TEST_CASE("default init shape") {
  const auto x = default_boundary_init(FeedbackKind::Ternary, 5);
  REQUIRE(x.size() == 5);
  // Canonical order (W,0),(W,1),(W,e),(T,1),(T,e): hold the channel after a
  // success, stay quiet after seeing one, contend otherwise.
  CHECK(x(3) > 0.99);
  CHECK(x(1) < 0.01);
  CHECK(x(4) < 0.01);
  CHECK(x(0) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("utility picks the knee the weight asks for") {
  std::vector<BoundaryPoint> points(3);
  points[0] = {0.9, 0.9, 100.0, {}, true, 0.0};
  points[1] = {0.7, 0.7, 30.0, {}, true, 0.0};
  points[2] = {0.5, 0.5, 10.0, {}, true, 0.0};
  const auto [hi, _] = best_by_utility(points, 1000.0);
  CHECK(hi == 0);  // throughput-hungry weight
  const auto [lo, lo_u] = best_by_utility(points, 10.0);
  CHECK(lo == 2);  // delay-dominated weight
  CHECK(lo_u == doctest::Approx(-10.0).epsilon(1e-12));

  points[0].converged = false;
  points[1].converged = false;
  points[2].converged = false;
  CHECK(best_by_utility(points).first == -1);
}

TEST_CASE("random cloud is deterministic and exactly analyzed") {
  const auto a = random_protocol_cloud(40, 11, FeedbackKind::Ternary, 5);
  const auto b = random_protocol_cloud(40, 11, FeedbackKind::Ternary, 5);
  REQUIRE(a.size() == 40);
  REQUIRE(b.size() == 40);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].tau == b[i].tau);
    CHECK(a[i].delay == b[i].delay);
    CHECK(a[i].tau >= 0.0);
    CHECK(a[i].tau <= 1.0 + 1e-12);
  }
}

TEST_CASE("csv shapes") {
  CHECK(boundary_csv_header(FeedbackKind::Ternary, 5).find("target_tau") !=
        std::string::npos);
  BoundaryPoint p;
  p.target_tau = 0.5;
  p.achieved_tau = 0.5;
  p.delay = 12.0;
  p.protocol_vector = Eigen::VectorXd::Constant(5, 0.25);
  p.converged = true;
  const auto row = boundary_csv_row(p);
  CHECK(row.find("0.5") != std::string::npos);
  CHECK(std::count(row.begin(), row.end(), ',') >= 8);
  CHECK(cloud_csv_header().find("tau") != std::string::npos);
}
