#include "macmem/optimize.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include "macmem/chain.hpp"
#include "macmem/protocols.hpp"
#include "macmem/rng.hpp"

namespace macmem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLo = 1e-4;
constexpr double kHi = 1.0 - 1e-4;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Eigen::VectorXd clamped(Eigen::VectorXd x) {
  return x.cwiseMax(kLo).cwiseMin(kHi);
}

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = kInf;
};

// Box-constrained Nelder-Mead; every candidate is clamped into the box.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, int max_iter) {
  const int dim = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(dim + 1, clamped(x0));
  for (int i = 0; i < dim; ++i) {
    double step = 0.08;
    if (xs[i + 1](i) + step > kHi) step = -0.08;
    xs[i + 1](i) = std::clamp(xs[i + 1](i) + step, kLo, kHi);
  }
  std::vector<double> fs(dim + 1);
  for (int i = 0; i <= dim; ++i) fs[i] = f(xs[i]);

  std::vector<int> order(dim + 1);
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i <= dim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return fs[a] < fs[b]; });
    const int best = order[0], worst = order[dim], second = order[dim - 1];

    double diameter = 0.0;
    for (int i = 1; i <= dim; ++i)
      diameter = std::max(diameter, (xs[order[i]] - xs[best]).cwiseAbs().maxCoeff());
    if (diameter < 1e-8 &&
        fs[worst] - fs[best] < 1e-8 * (1.0 + std::abs(fs[best])))
      break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i <= dim; ++i)
      if (i != worst) centroid += xs[i];
    centroid /= dim;

    const Eigen::VectorXd reflected = clamped(centroid + (centroid - xs[worst]));
    const double fr = f(reflected);
    if (fr < fs[best]) {
      const Eigen::VectorXd expanded =
          clamped(centroid + 2.0 * (centroid - xs[worst]));
      const double fe = f(expanded);
      if (fe < fr) { xs[worst] = expanded; fs[worst] = fe; }
      else { xs[worst] = reflected; fs[worst] = fr; }
      continue;
    }
    if (fr < fs[second]) { xs[worst] = reflected; fs[worst] = fr; continue; }
    const Eigen::VectorXd contracted =
        clamped(centroid + 0.5 * ((fr < fs[worst] ? reflected : xs[worst]) - centroid));
    const double fc = f(contracted);
    if (fc < std::min(fr, fs[worst])) { xs[worst] = contracted; fs[worst] = fc; continue; }
    for (int i = 0; i <= dim; ++i) {  // shrink toward the best vertex
      if (i == best) continue;
      xs[i] = clamped(xs[best] + 0.5 * (xs[i] - xs[best]));
      fs[i] = f(xs[i]);
    }
  }
  int best = 0;
  for (int i = 1; i <= dim; ++i)
    if (fs[i] < fs[best]) best = i;
  return {xs[best], fs[best]};
}

// Constant-vector start whose memoryless throughput matches the target where
// possible (the increasing branch caps at p = 1/N).
Eigen::VectorXd memoryless_matched_init(double target, int dim, int n) {
  double lo = kLo, hi = 1.0 / n;
  auto tau = [n](double p) { return n * p * std::pow(1.0 - p, n - 1); };
  double p = hi;
  if (tau(hi) > target) {
    for (int i = 0; i < 80; ++i) {
      const double mid = 0.5 * (lo + hi);
      (tau(mid) < target ? lo : hi) = mid;
    }
    p = 0.5 * (lo + hi);
  }
  return Eigen::VectorXd::Constant(dim, std::clamp(p, kLo, kHi));
}

// The documented extra starts for multi-start rounds: the sweep's default
// start, a throughput-matched constant vector, and a mid-box vector.
std::vector<Eigen::VectorXd> extra_starts(double target, FeedbackKind kind, int n) {
  const int dim = boundary_dimension(kind, n);
  return {default_boundary_init(kind, n),
          memoryless_matched_init(target, dim, n),
          Eigen::VectorXd::Constant(dim, 0.5)};
}

}  // namespace

Evaluator slotted_evaluator(FeedbackKind kind, int n_users) {
  // Precompute the pair index feeding each per-count rate so each evaluation
  // only builds a 2N-state matrix; the optimizer calls this thousands of times.
  const auto tech = build_feedback_technology(kind, n_users);
  const int n = n_users;
  std::vector<int> t_idx(n + 1, 0), w_idx(n, 0);
  for (int k = 1; k <= n; ++k)
    t_idx[k] = pair_index(tech, {Action::Transmit, feedback_of(tech, Action::Transmit, k)});
  for (int k = 0; k <= n - 1; ++k)
    w_idx[k] = pair_index(tech, {Action::Wait, feedback_of(tech, Action::Wait, k)});
  const int dim = static_cast<int>(realizable_pairs(tech).size());

  return [n, dim, t_idx, w_idx](const Eigen::VectorXd& x) -> std::pair<double, double> {
    if (x.size() != dim) throw ConfigError("protocol vector has wrong length");
    std::vector<double> ft(n + 1, 0.0), fw(n, 0.0);
    for (int k = 1; k <= n; ++k) ft[k] = x(t_idx[k]);
    for (int k = 0; k <= n - 1; ++k) fw[k] = x(w_idx[k]);
    try {
      const Metrics m = metrics_from_reduced_matrix(reduced_matrix(ft, fw, n), n);
      return {m.tau_total, m.delay};
    } catch (const NumericalError&) {
      return {std::numeric_limits<double>::quiet_NaN(), kInf};
    }
  };
}

int boundary_dimension(FeedbackKind kind, int n_users) {
  return static_cast<int>(
      realizable_pairs(build_feedback_technology(kind, n_users)).size());
}

Eigen::VectorXd default_boundary_init(FeedbackKind kind, int n_users) {
  const auto tech = build_feedback_technology(kind, n_users);
  const auto pairs = realizable_pairs(tech);
  Eigen::VectorXd init(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    if (pair.action == Action::Transmit) {
      init(i) = pair.feedback.label == "1" ? kHi : kLo;
    } else if (pair.feedback.contains(0)) {
      init(i) = 1.0 / n_users;
    } else if (pair.feedback.contains(1)) {
      init(i) = kLo;
    } else {
      init(i) = 1.0 / std::max(1, n_users - 2);
    }
  }
  return clamped(init);
}

BoundaryPoint solve_at_tau(double target_tau, const Eigen::VectorXd& init,
                           const Evaluator& evaluate,
                           const std::vector<Eigen::VectorXd>& extra_inits,
                           uint64_t seed) {
  if (!(target_tau > 0.0 && target_tau < 1.0))
    throw ConfigError("target throughput must lie in (0,1)");
  const int dim = static_cast<int>(init.size());
  SplitMix64 rng(seed ^ std::bit_cast<uint64_t>(target_tau));

  // Penalty weights sized to the objective's magnitude, so time-valued
  // delays (microseconds) feel the same constraint pressure as slot counts.
  double delay_scale = 1.0;
  {
    const auto [init_tau, init_delay] = evaluate(clamped(init));
    (void)init_tau;
    if (std::isfinite(init_delay))
      delay_scale = std::max(1.0, init_delay / 100.0);
  }

  auto penalized = [&](double mu) {
    return [&evaluate, mu, target_tau](const Eigen::VectorXd& x) {
      const auto [tau, delay] = evaluate(x);
      if (!std::isfinite(tau) || !std::isfinite(delay))
        return 1e12 + (std::isfinite(tau) ? std::abs(tau - target_tau) : 1.0) * 1e6;
      const double r = tau - target_tau;
      return delay + mu * r * r;
    };
  };

  Eigen::VectorXd best_feasible, best_any = clamped(init);
  double best_feasible_delay = kInf, best_any_residual = kInf, best_any_delay = kInf;
  auto consider = [&](const Eigen::VectorXd& x) {
    const auto [tau, delay] = evaluate(x);
    if (!std::isfinite(tau)) return;
    const double residual = std::abs(tau - target_tau);
    if (residual <= 1e-4 && delay < best_feasible_delay) {
      best_feasible = x;
      best_feasible_delay = delay;
    }
    if (residual < best_any_residual - 1e-12 ||
        (residual < best_any_residual + 1e-12 && delay < best_any_delay)) {
      best_any = x;
      best_any_residual = residual;
      best_any_delay = delay;
    }
  };

  consider(clamped(init));
  Eigen::VectorXd current = clamped(init);
  double previous_feasible_delay = kInf;
  for (int round = 0; round < 8; ++round) {
    const double mu = delay_scale * 100.0 * std::pow(10.0, round);
    const auto objective = penalized(mu);

    // Weak early rounds can walk away from the target basin toward the
    // delay-minimal region, so every round restarts from the original init
    // and from the best point seen so far, not only from its predecessor.
    std::vector<Eigen::VectorXd> starts = {current};
    auto add_start = [&starts](const Eigen::VectorXd& candidate) {
      for (const auto& existing : starts)
        if ((existing - candidate).cwiseAbs().maxCoeff() < 1e-9) return;
      starts.push_back(candidate);
    };
    add_start(clamped(init));
    add_start(std::isfinite(best_feasible_delay) ? best_feasible : best_any);
    if (round == 0)
      for (const auto& extra : extra_inits) add_start(clamped(extra));
    Eigen::VectorXd jittered = current;
    for (int i = 0; i < dim; ++i)
      jittered(i) = std::clamp(jittered(i) + rng.uniform(-0.03, 0.03), kLo, kHi);
    add_start(jittered);

    NelderMeadResult round_best;
    for (const auto& start : starts) {
      const auto result = nelder_mead(objective, start, 400 * dim);
      consider(result.x);
      if (result.value < round_best.value) round_best = result;
    }
    current = round_best.x;

    if (std::isfinite(best_feasible_delay)) {
      if (previous_feasible_delay - best_feasible_delay < 1e-7 && round >= 1) break;
      previous_feasible_delay = best_feasible_delay;
    }
  }

  BoundaryPoint point;
  point.target_tau = target_tau;
  point.protocol_vector =
      std::isfinite(best_feasible_delay) ? best_feasible : best_any;
  const auto [tau, delay] = evaluate(point.protocol_vector);
  point.achieved_tau = tau;
  point.delay = delay;
  point.constraint_residual = std::abs(tau - target_tau);
  point.converged = std::isfinite(delay) && point.constraint_residual <= 1e-4;
  return point;
}

BoundaryPoint solve_at_tau(double target_tau, const Eigen::VectorXd& init,
                           FeedbackKind kind, int n_users, uint64_t seed) {
  return solve_at_tau(target_tau, init, slotted_evaluator(kind, n_users),
                      extra_starts(target_tau, kind, n_users), seed);
}

std::vector<BoundaryPoint> boundary_sweep(const std::vector<double>& tau_grid,
                                          const Evaluator& evaluate,
                                          FeedbackKind kind, int n_users,
                                          uint64_t seed) {
  if (tau_grid.empty()) throw ConfigError("empty throughput grid");
  for (size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] > 0.0 && tau_grid[i] < 1.0))
      throw ConfigError("grid values must lie in (0,1)");
    if (i && !(tau_grid[i] < tau_grid[i - 1]))
      throw ConfigError("grid must be strictly decreasing");
  }
  std::vector<BoundaryPoint> points;
  Eigen::VectorXd warm = default_boundary_init(kind, n_users);
  for (const double target : tau_grid) {
    // Extra starts only help inside the unstable band near the turning point;
    // elsewhere the warm start dominates and the extras just cost time.
    std::vector<Eigen::VectorXd> extras;
    if (target >= 0.38 && target <= 0.52)
      extras = extra_starts(target, kind, n_users);
    auto point = solve_at_tau(target, warm, evaluate, extras, seed);
    if (!point.converged) {
      // A failed continuation step usually means the optimal family switched
      // under this target; a cold multi-start restart finds the new branch.
      auto retry = solve_at_tau(target, default_boundary_init(kind, n_users),
                                evaluate, extra_starts(target, kind, n_users),
                                seed ^ 0x9e3779b97f4a7c15ull);
      if (retry.constraint_residual < point.constraint_residual ||
          (retry.converged && retry.delay < point.delay))
        point = std::move(retry);
    }
    if (point.converged) warm = point.protocol_vector;
    points.push_back(std::move(point));
  }
  return points;
}

std::vector<BoundaryPoint> boundary_sweep(const std::vector<double>& tau_grid,
                                          FeedbackKind kind, int n_users,
                                          uint64_t seed) {
  return boundary_sweep(tau_grid, slotted_evaluator(kind, n_users), kind,
                        n_users, seed);
}

std::vector<CloudPoint> random_protocol_cloud(int count, uint64_t seed,
                                              FeedbackKind kind, int n_users) {
  if (count < 1) throw ConfigError("count must be >= 1");
  const auto evaluate = slotted_evaluator(kind, n_users);
  const int dim = boundary_dimension(kind, n_users);
  SplitMix64 rng(seed);
  std::vector<CloudPoint> points;
  points.reserve(count);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) x(j) = rng.uniform(kLo, kHi);
    const auto [tau, delay] = evaluate(x);
    points.push_back({tau, delay, i});
  }
  return points;
}

std::pair<int, double> best_by_utility(const std::vector<BoundaryPoint>& points,
                                       double weight) {
  int best = -1;
  double best_value = -kInf;
  for (int i = 0; i < static_cast<int>(points.size()); ++i) {
    if (!points[i].converged) continue;
    const double value =
        -std::max(weight * (1.0 - points[i].achieved_tau), points[i].delay);
    if (value > best_value) {
      best_value = value;
      best = i;
    }
  }
  return {best, best_value};
}

std::string boundary_csv_header(FeedbackKind kind, int n_users) {
  std::string out = "target_tau,achieved_tau,delay,converged";
  for (const auto& pair :
       realizable_pairs(build_feedback_technology(kind, n_users)))
    out += ",f(" + std::string(pair.action == Action::Transmit ? "T" : "W") +
           "," + pair.feedback.label + ")";
  return out;
}

std::string boundary_csv_row(const BoundaryPoint& point) {
  std::string out = fmt(point.target_tau) + "," + fmt(point.achieved_tau) + "," +
                    fmt(point.delay) + "," + (point.converged ? "1" : "0");
  for (int i = 0; i < point.protocol_vector.size(); ++i)
    out += "," + fmt(point.protocol_vector(i));
  return out;
}

std::string cloud_csv_header() { return "tau,delay,seed_index"; }

std::string cloud_csv_row(const CloudPoint& point) {
  return fmt(point.tau) + "," + fmt(point.delay) + "," +
         std::to_string(point.seed_index);
}

}  // namespace macmem
