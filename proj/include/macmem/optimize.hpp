#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "macmem/core.hpp"

namespace macmem {

struct BoundaryPoint {
  double target_tau = 0.0;
  double achieved_tau = 0.0;
  double delay = 0.0;
  Eigen::VectorXd protocol_vector;  // canonical history order
  bool converged = false;
  double constraint_residual = 0.0;
};

// Maps a probability vector to (total throughput, average delay). Infinite
// delay marks protocols without successes.
using Evaluator = std::function<std::pair<double, double>(const Eigen::VectorXd&)>;

// Exact slotted analysis of a 1-slot protocol for the given technology.
Evaluator slotted_evaluator(FeedbackKind kind, int n_users);

int boundary_dimension(FeedbackKind kind, int n_users);

// Default sweep start: transmit on after a success, near-zero after a
// collision or a seen success, spread contention otherwise.
Eigen::VectorXd default_boundary_init(FeedbackKind kind, int n_users);

// Minimizes delay subject to throughput = target over the box
// [1e-4, 1-1e-4]^dim: quadratic-penalty outer rounds (weight x10 per round,
// at most 8) around Nelder-Mead with seeded restart jitter. Deterministic for
// fixed arguments. Three extra starts cover the unstable band around the
// boundary's turning point. Never throws on non-convergence; the flag tells.
BoundaryPoint solve_at_tau(double target_tau, const Eigen::VectorXd& init,
                           const Evaluator& evaluate,
                           const std::vector<Eigen::VectorXd>& extra_inits = {},
                           uint64_t seed = 1);

BoundaryPoint solve_at_tau(double target_tau, const Eigen::VectorXd& init,
                           FeedbackKind kind, int n_users, uint64_t seed = 1);

// Continuation sweep over a strictly decreasing grid, warm-starting each point
// from its predecessor's solution.
std::vector<BoundaryPoint> boundary_sweep(const std::vector<double>& tau_grid,
                                          FeedbackKind kind, int n_users,
                                          uint64_t seed = 1);

std::vector<BoundaryPoint> boundary_sweep(const std::vector<double>& tau_grid,
                                          const Evaluator& evaluate,
                                          FeedbackKind kind, int n_users,
                                          uint64_t seed = 1);

struct CloudPoint {
  double tau = 0.0;
  double delay = 0.0;
  int seed_index = 0;
};

// Uniform samples over the probability box, analyzed exactly. Samples whose
// chain has no unique stationary distribution keep an infinite-delay marker.
std::vector<CloudPoint> random_protocol_cloud(int count, uint64_t seed,
                                              FeedbackKind kind, int n_users);

// Designer's post-processing over a computed boundary: picks the point
// maximizing U(tau, D) = -max(weight * (1 - tau), D). Returns the index into
// points and the utility value; index -1 when no point converged.
std::pair<int, double> best_by_utility(const std::vector<BoundaryPoint>& points,
                                       double weight = 200.0);

std::string boundary_csv_header(FeedbackKind kind, int n_users);
std::string boundary_csv_row(const BoundaryPoint& point);
std::string cloud_csv_header();
std::string cloud_csv_row(const CloudPoint& point);

}  // namespace macmem
