#include "macmem/wlan.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace macmem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Metrics no_success_metrics(double p0, double p1, double p2) {
  Metrics m;
  m.tau_user = 0.0;
  m.tau_total = 0.0;
  m.delay = kInf;
  m.interpacket = kInf;
  m.p0 = p0;
  m.p1 = p1;
  m.p2 = p2;
  return m;
}

// The newest outcome decides whether a state's slot was idle, a success, or a
// collision.
Eigen::VectorXd duration_vector(int n, const WlanTiming& timing) {
  Eigen::VectorXd b(2 * n);
  for (int i = 0; i < 2 * n; ++i) {
    const int k = reduced_state_at(i, n).k;
    b(i) = k == 0 ? timing.sigma0 : (k == 1 ? timing.sigma1 : timing.sigma2);
  }
  return b;
}

Metrics wlan_from_matrix(const Eigen::MatrixXd& matrix, int n,
                         const WlanTiming& timing) {
  auto name = [n](int i) { return to_string(reduced_state_at(i, n)); };
  const Eigen::VectorXd v = stationary_distribution(matrix, name);
  const int success = reduced_state_index({Action::Transmit, 1}, n);
  const double p0 = v(reduced_state_index({Action::Wait, 0}, n));
  const double p1 =
      v(success) + (n >= 2 ? v(reduced_state_index({Action::Wait, 1}, n)) : 0.0);
  const double p2 = std::max(0.0, 1.0 - p0 - p1);
  if (v(success) < 1e-12) {
    Metrics m = no_success_metrics(p0, p1, p2);
    m.stationary = v;
    return m;
  }
  const Eigen::VectorXd b = duration_vector(n, timing);
  const double total_time = v.dot(b);
  const Eigen::VectorXd d = first_passage_times(matrix, {success}, b);
  // A random time instant lands in a state's slot proportionally to time
  // spent there and sits halfway through it on average.
  const Eigen::VectorXd y = v.cwiseProduct(b) / total_time;
  Metrics m;
  m.tau_user = v(success) * timing.mean_payload / total_time;
  m.tau_total = p1 * timing.mean_payload / total_time;
  m.delay = y.dot(d - 0.5 * b);
  m.interpacket = d(success);
  m.p0 = p0;
  m.p1 = p1;
  m.p2 = p2;
  m.stationary = v;
  return m;
}

// Per-probe transmission probability of binary exponential backoff with
// initial window w and m doublings, given conditional collision probability p.
double backoff_tau(double p, int w, int m) {
  if (std::abs(1.0 - 2.0 * p) < 1e-9)
    return 4.0 / (2.0 * w + 2.0 + w * m);  // removable singularity at p = 1/2
  return 2.0 * (1.0 - 2.0 * p) /
         ((1.0 - 2.0 * p) * (w + 1) + p * w * (1.0 - std::pow(2.0 * p, m)));
}

}  // namespace

void validate(const WlanTiming& timing) {
  if (!(timing.sigma0 > 0.0 && timing.sigma1 > 0.0 && timing.sigma2 > 0.0))
    throw ConfigError("slot durations must be positive");
  if (!(timing.mean_payload > 0.0))
    throw ConfigError("mean payload must be positive");
  if (timing.mean_payload > timing.sigma1)
    throw ConfigError("payload cannot exceed the success slot duration");
}

WlanTiming preset_80211a_mode8() { return {9.0, 419.56, 400.48, 341.33}; }

WlanTiming timing_preset(const std::string& name) {
  if (name == "80211a-mode8") return preset_80211a_mode8();
  if (name == "unit") return {1.0, 1.0, 1.0, 1.0};
  throw ConfigError("unknown timing preset: " + name);
}

WlanTiming load_timing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const auto j = nlohmann::json::parse(buf.str());
    WlanTiming t;
    t.sigma0 = j.at("sigma0").get<double>();
    t.sigma1 = j.at("sigma1").get<double>();
    t.sigma2 = j.at("sigma2").get<double>();
    t.mean_payload = j.at("mean_payload").get<double>();
    validate(t);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad timing JSON: ") + e.what());
  }
}

double wlan_throughput_bound(const WlanTiming& timing) {
  return timing.mean_payload / timing.sigma1;
}

Metrics wlan_metrics(const Protocol& protocol, const WlanTiming& timing) {
  validate(timing);
  const auto chain = build_reduced_chain(protocol);
  return wlan_from_matrix(chain.matrix, protocol.config.n_users, timing);
}

Metrics wlan_memoryless(double p, int n_users, const WlanTiming& timing) {
  validate(timing);
  if (n_users < 1) throw ConfigError("n_users must be >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0,1]");
  const int n = n_users;
  const double p0 = std::pow(1.0 - p, n);
  const double p1 = n * p * std::pow(1.0 - p, n - 1);
  const double p2 = std::max(0.0, 1.0 - p0 - p1);
  if (p1 < 1e-12) return no_success_metrics(p0, p1, p2);
  const double s0 = timing.sigma0, s1 = timing.sigma1, s2 = timing.sigma2;
  const double total = p0 * s0 + p1 * s1 + p2 * s2;
  const double residual =
      (p0 * s0 * s0 + p1 * s1 * s1 + p2 * s2 * s2) / (2.0 * total);
  const double to_next =
      (n * (p0 * s0 + p2 * s2) + (n - 1) * p1 * s1) / p1;
  Metrics m;
  m.tau_total = p1 * timing.mean_payload / total;
  m.tau_user = m.tau_total / n;
  m.delay = residual + to_next;
  m.interpacket = to_next + s1;
  m.p0 = p0;
  m.p1 = p1;
  m.p2 = p2;
  return m;
}

Evaluator wlan_evaluator(FeedbackKind kind, int n_users,
                         const WlanTiming& timing) {
  validate(timing);
  const auto tech = build_feedback_technology(kind, n_users);
  const int n = n_users;
  std::vector<int> t_idx(n + 1, 0), w_idx(n, 0);
  for (int k = 1; k <= n; ++k)
    t_idx[k] = pair_index(
        tech, {Action::Transmit, feedback_of(tech, Action::Transmit, k)});
  for (int k = 0; k <= n - 1; ++k)
    w_idx[k] =
        pair_index(tech, {Action::Wait, feedback_of(tech, Action::Wait, k)});
  const int dim = static_cast<int>(realizable_pairs(tech).size());

  return [n, dim, t_idx, w_idx,
          timing](const Eigen::VectorXd& x) -> std::pair<double, double> {
    if (x.size() != dim) throw ConfigError("protocol vector has wrong length");
    std::vector<double> ft(n + 1, 0.0), fw(n, 0.0);
    for (int k = 1; k <= n; ++k) ft[k] = x(t_idx[k]);
    for (int k = 0; k <= n - 1; ++k) fw[k] = x(w_idx[k]);
    try {
      const Metrics m = wlan_from_matrix(reduced_matrix(ft, fw, n), n, timing);
      return {m.tau_total, m.delay};
    } catch (const NumericalError&) {
      return {std::numeric_limits<double>::quiet_NaN(), kInf};
    }
  };
}

void validate(const DcfParams& params) {
  if (params.cw_min < 1) throw ConfigError("cw_min must be >= 1");
  if (params.n_users < 1) throw ConfigError("n_users must be >= 1");
  if (params.cw_max < params.cw_min || params.cw_max % params.cw_min != 0)
    throw ConfigError("cw_max must be cw_min * 2^m");
  const int q = params.cw_max / params.cw_min;
  if ((q & (q - 1)) != 0) throw ConfigError("cw_max must be cw_min * 2^m");
}

double dcf_probability(const DcfParams& params) {
  validate(params);
  const int w = params.cw_min;
  const int m = static_cast<int>(
      std::lround(std::log2(static_cast<double>(params.cw_max) / params.cw_min)));
  if (params.n_users == 1) return backoff_tau(0.0, w, m);

  auto excess = [&](double p) {
    const double tau = backoff_tau(p, w, m);
    return p - (1.0 - std::pow(1.0 - tau, params.n_users - 1));
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  const double p = 0.5 * (lo + hi);
  if (std::abs(excess(p)) > 1e-12)
    throw NumericalError("collision-probability fixed point did not converge");
  return backoff_tau(p, w, m);
}

}  // namespace macmem
