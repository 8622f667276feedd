#include "macmem/chain.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace macmem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> binomial_pmf(int n, double p) {
  std::vector<double> coeff(n + 1, 1.0);
  for (int i = 1; i <= n; ++i)
    for (int j = i - 1; j >= 1; --j) coeff[j] += coeff[j - 1];
  std::vector<double> pmf(n + 1);
  for (int x = 0; x <= n; ++x)
    pmf[x] = coeff[x] * std::pow(p, x) * std::pow(1.0 - p, n - x);
  return pmf;
}

// P(x + y = m) for x ~ Bin(nx, px), y ~ Bin(ny, py), independent.
std::vector<double> convolve(int nx, double px, int ny, double py) {
  const auto a = binomial_pmf(nx, px);
  const auto b = binomial_pmf(ny, py);
  std::vector<double> out(nx + ny + 1, 0.0);
  for (int x = 0; x <= nx; ++x)
    for (int y = 0; y <= ny; ++y) out[x + y] += a[x] * b[y];
  return out;
}

// Strongly connected components of the positive-support graph, in reverse
// topological order (Tarjan, iterative).
std::vector<std::vector<int>> support_sccs(const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(q.rows());
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
  std::vector<int> stack, call_state(n, 0), call_edge(n, 0);
  std::vector<std::vector<int>> sccs;
  int counter = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<int> dfs = {root};
    while (!dfs.empty()) {
      int u = dfs.back();
      if (call_state[u] == 0) {
        call_state[u] = 1;
        index[u] = low[u] = counter++;
        stack.push_back(u);
        on_stack[u] = 1;
        call_edge[u] = 0;
      }
      bool descended = false;
      for (int& v = call_edge[u]; v < n; ++v) {
        if (q(u, v) <= 0.0) continue;
        if (index[v] < 0) {
          dfs.push_back(v);
          descended = true;
          ++v;
          break;
        }
        if (on_stack[v]) low[u] = std::min(low[u], index[v]);
      }
      if (descended) continue;
      dfs.pop_back();
      if (!dfs.empty()) low[dfs.back()] = std::min(low[dfs.back()], low[u]);
      if (low[u] == index[u]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
        } while (w != u);
        sccs.push_back(std::move(comp));
      }
    }
  }
  return sccs;
}

std::vector<std::vector<int>> terminal_sccs(const Eigen::MatrixXd& q) {
  const auto sccs = support_sccs(q);
  const int n = static_cast<int>(q.rows());
  std::vector<int> comp_of(n);
  for (int c = 0; c < static_cast<int>(sccs.size()); ++c)
    for (int s : sccs[c]) comp_of[s] = c;
  std::vector<std::vector<int>> terminal;
  for (const auto& comp : sccs) {
    bool leaves = false;
    for (int u : comp) {
      for (int v = 0; v < n && !leaves; ++v)
        if (q(u, v) > 0.0 && comp_of[v] != comp_of[u]) leaves = true;
      if (leaves) break;
    }
    if (!leaves) terminal.push_back(comp);
  }
  return terminal;
}

std::string format_states(const std::vector<int>& states,
                          const std::function<std::string(int)>& name) {
  std::string out = "{";
  const size_t shown = std::min<size_t>(states.size(), 8);
  for (size_t i = 0; i < shown; ++i) {
    if (i) out += ", ";
    out += name ? name(states[i]) : std::to_string(states[i]);
  }
  if (states.size() > shown) out += ", ...";
  return out + "}";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Metrics infinite_delay_metrics(const Eigen::VectorXd& v, double p0, double p1) {
  Metrics m;
  m.tau_user = 0.0;
  m.tau_total = 0.0;
  m.delay = kInf;
  m.interpacket = kInf;
  m.p0 = p0;
  m.p1 = p1;
  m.p2 = std::max(0.0, 1.0 - p0 - p1);
  m.stationary = v;
  return m;
}

// Exact Cesaro limit of v0 Q^t for a chain with several closed classes: the
// stationary distribution of each closed class, weighted by the probability of
// absorption into it from the start state.
Eigen::VectorXd cesaro_limit(const Eigen::MatrixXd& q, int start) {
  const auto n = q.rows();
  const auto terminal = terminal_sccs(q);
  std::vector<int> in_terminal(n, -1);
  for (int c = 0; c < static_cast<int>(terminal.size()); ++c)
    for (int s : terminal[c]) in_terminal[s] = c;
  std::vector<int> transient;
  for (int s = 0; s < n; ++s)
    if (in_terminal[s] < 0) transient.push_back(s);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int c = 0; c < static_cast<int>(terminal.size()); ++c) {
    const auto& comp = terminal[c];
    const auto cn = static_cast<Eigen::Index>(comp.size());
    Eigen::MatrixXd sub(cn, cn);
    for (Eigen::Index i = 0; i < cn; ++i)
      for (Eigen::Index j = 0; j < cn; ++j) sub(i, j) = q(comp[i], comp[j]);
    const Eigen::VectorXd pi = stationary_distribution(sub);

    double weight;
    if (in_terminal[start] >= 0) {
      weight = in_terminal[start] == c ? 1.0 : 0.0;
    } else {
      // Absorption probability into this class from each transient state.
      const auto tn = static_cast<Eigen::Index>(transient.size());
      Eigen::MatrixXd a(tn, tn);
      Eigen::VectorXd b = Eigen::VectorXd::Zero(tn);
      for (Eigen::Index i = 0; i < tn; ++i) {
        for (Eigen::Index j = 0; j < tn; ++j)
          a(i, j) = (i == j ? 1.0 : 0.0) - q(transient[i], transient[j]);
        for (int s : comp) b(i) += q(transient[i], s);
      }
      const Eigen::VectorXd h = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(b);
      weight = 0.0;
      for (Eigen::Index i = 0; i < tn; ++i)
        if (transient[i] == start) weight = h(i);
    }
    for (Eigen::Index i = 0; i < cn; ++i) out(comp[i]) += weight * pi(i);
  }
  return out;
}

}  // namespace

Eigen::VectorXd first_passage_times(const Eigen::MatrixXd& matrix,
                                    const std::vector<int>& targets,
                                    const Eigen::VectorXd& step_costs) {
  const auto n = matrix.rows();
  if (step_costs.size() != n)
    throw ConfigError("step costs must have one entry per state");
  Eigen::MatrixXd q0 = matrix;
  for (int t : targets) q0.col(t).setZero();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - q0;
  Eigen::VectorXd d = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(step_costs);
  // Residual scaled by the solution: hitting times blow up like 1/p near
  // absorbing corners and an absolute test would reject them spuriously.
  const double scale =
      1.0 + step_costs.cwiseAbs().maxCoeff() + d.cwiseAbs().maxCoeff();
  if (!d.allFinite() ||
      (a * d - step_costs).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw NumericalError("first-passage system is singular");
  return d;
}

Eigen::VectorXd first_passage_times(const Eigen::MatrixXd& matrix,
                                    const std::vector<int>& targets) {
  return first_passage_times(matrix, targets,
                             Eigen::VectorXd::Ones(matrix.rows()));
}

int reduced_state_index(const ReducedState& state, int n_users) {
  if (state.action == Action::Transmit) {
    if (state.k < 1 || state.k > n_users)
      throw ConfigError("(T,k) requires 1 <= k <= N");
    return state.k - 1;
  }
  if (state.k < 0 || state.k > n_users - 1)
    throw ConfigError("(W,k) requires 0 <= k <= N-1");
  return n_users + state.k;
}

ReducedState reduced_state_at(int index, int n_users) {
  if (index < 0 || index >= 2 * n_users) throw ConfigError("state index out of range");
  if (index < n_users) return {Action::Transmit, index + 1};
  return {Action::Wait, index - n_users};
}

std::string to_string(const ReducedState& state) {
  return std::string("(") + (state.action == Action::Transmit ? "T" : "W") + "," +
         std::to_string(state.k) + ")";
}

Eigen::MatrixXd reduced_matrix(const std::vector<double>& ft,
                               const std::vector<double>& fw, int n_users) {
  const int n = n_users;
  if (static_cast<int>(ft.size()) != n + 1 || static_cast<int>(fw.size()) != n)
    throw ConfigError("rate vectors must have sizes N+1 and N");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 1; k <= n; ++k) {  // rows from (T,k)
    const double own = ft[k];
    const double waiters_p = (k <= n - 1) ? fw[k] : 0.0;
    const auto conv = convolve(k - 1, ft[k], n - k, waiters_p);
    const int row = reduced_state_index({Action::Transmit, k}, n);
    for (int kp = 1; kp <= n; ++kp)
      q(row, reduced_state_index({Action::Transmit, kp}, n)) = own * conv[kp - 1];
    for (int kp = 0; kp <= n - 1; ++kp)
      q(row, reduced_state_index({Action::Wait, kp}, n)) = (1.0 - own) * conv[kp];
  }
  for (int k = 0; k <= n - 1; ++k) {  // rows from (W,k)
    const double own = fw[k];
    const double transmitters_p = (k >= 1) ? ft[k] : 0.0;
    const auto conv = convolve(k, transmitters_p, n - 1 - k, fw[k]);
    const int row = reduced_state_index({Action::Wait, k}, n);
    for (int kp = 1; kp <= n; ++kp)
      q(row, reduced_state_index({Action::Transmit, kp}, n)) = own * conv[kp - 1];
    for (int kp = 0; kp <= n - 1; ++kp)
      q(row, reduced_state_index({Action::Wait, kp}, n)) = (1.0 - own) * conv[kp];
  }
  return q;
}

ReducedChain build_reduced_chain(const Protocol& protocol) {
  if (protocol.config.memory_slots != 1)
    throw ConfigError("reduced chain requires a 1-slot-memory protocol");
  const int n = protocol.config.n_users;
  const auto& tech = protocol.feedback;
  auto rule_of = [&](Action a, int k) {
    History h;
    h.pairs.push_back({a, feedback_of(tech, a, k)});
    return protocol.rule(h);
  };
  std::vector<double> ft(n + 1, 0.0), fw(n, 0.0);
  for (int k = 1; k <= n; ++k) ft[k] = rule_of(Action::Transmit, k);
  for (int k = 0; k <= n - 1; ++k) fw[k] = rule_of(Action::Wait, k);
  return {reduced_matrix(ft, fw, n), protocol};
}

Eigen::VectorXd stationary_distribution(
    const Eigen::MatrixXd& matrix,
    const std::function<std::string(int)>& state_name) {
  const auto terminal = terminal_sccs(matrix);
  if (terminal.size() > 1)
    throw ReducibleChainError(format_states(terminal.front(), state_name));
  const auto n = matrix.rows();
  Eigen::MatrixXd a = matrix.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(0).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(0) = 1.0;
  Eigen::VectorXd v = Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(b);
  if (!v.allFinite()) throw NumericalError("stationary solve failed");
  const double residual = (matrix.transpose() * v - v).cwiseAbs().maxCoeff();
  if (residual > 1e-10)
    throw NumericalError("stationary residual " + fmt(residual));
  v = v.cwiseMax(0.0);
  v /= v.sum();
  return v;
}

Metrics metrics_from_reduced_matrix(const Eigen::MatrixXd& matrix, int n_users) {
  const int n = n_users;
  auto name = [n](int i) { return to_string(reduced_state_at(i, n)); };
  const Eigen::VectorXd v = stationary_distribution(matrix, name);
  const int success = reduced_state_index({Action::Transmit, 1}, n);
  const int idle = reduced_state_index({Action::Wait, 0}, n);
  const double tau_user = v(success);
  const double p0 = v(idle);
  const double p1 =
      v(success) + (n >= 2 ? v(reduced_state_index({Action::Wait, 1}, n)) : 0.0);
  if (tau_user < 1e-12) return infinite_delay_metrics(v, p0, p1);

  const Eigen::VectorXd d = first_passage_times(matrix, {success});
  Metrics m;
  m.tau_user = tau_user;
  m.tau_total = n * tau_user;
  m.delay = v.dot(d) - 0.5;
  m.interpacket = d(success);
  m.p0 = p0;
  m.p1 = p1;
  m.p2 = std::max(0.0, 1.0 - p0 - p1);
  m.stationary = v;
  return m;
}

Metrics metrics_reduced(const Protocol& protocol) {
  const auto chain = build_reduced_chain(protocol);
  return metrics_from_reduced_matrix(chain.matrix, protocol.config.n_users);
}

GeneralChain build_general_chain(const Protocol& protocol,
                                 const GeneralChainOptions& options) {
  const int n = protocol.config.n_users;
  const int m = protocol.config.memory_slots;
  if (n * m > 16)
    throw ConfigError("general chain needs 2^(N*M) states; N*M > 16 refused");
  const long long count = 1LL << (n * m);
  if (count > options.max_states)
    throw ConfigError("general chain would have " + std::to_string(count) +
                      " states (cap " + std::to_string(options.max_states) +
                      "); raise max_states to override");
  if (count > (1 << 13))
    throw ConfigError("general chain above 2^13 states exceeds the dense-solve ceiling");

  const auto& tech = protocol.feedback;
  const uint32_t slot_mask = (1u << n) - 1;
  // Pair digit per (own action, total transmissions).
  std::vector<int> digit_wait(n, 0), digit_transmit(n + 1, 0);
  for (int k = 0; k <= n - 1; ++k)
    digit_wait[k] = pair_index(tech, {Action::Wait, feedback_of(tech, Action::Wait, k)});
  for (int k = 1; k <= n; ++k)
    digit_transmit[k] =
        pair_index(tech, {Action::Transmit, feedback_of(tech, Action::Transmit, k)});
  const int base = static_cast<int>(realizable_pairs(tech).size());

  GeneralChain chain;
  chain.n_users = n;
  chain.memory_slots = m;
  chain.states.resize(count);
  chain.matrix = Eigen::MatrixXd::Zero(count, count);
  std::vector<double> p(n);
  for (uint32_t key = 0; key < count; ++key) {
    chain.states[key] = key;
    for (int i = 0; i < n; ++i) {
      long long idx = 0;
      for (int s = 0; s < m; ++s) {  // oldest slot in the highest bits
        const uint32_t outcome = (key >> (n * (m - 1 - s))) & slot_mask;
        const int k = std::popcount(outcome);
        const bool transmitted = (outcome >> i) & 1u;
        idx = idx * base + (transmitted ? digit_transmit[k] : digit_wait[k]);
      }
      p[i] = protocol.probabilities[idx];
    }
    for (uint32_t next = 0; next <= slot_mask; ++next) {
      double pr = 1.0;
      for (int i = 0; i < n; ++i) pr *= ((next >> i) & 1u) ? p[i] : 1.0 - p[i];
      const uint32_t succ = ((key << n) | next) & static_cast<uint32_t>(count - 1);
      chain.matrix(key, succ) += pr;
    }
  }
  return chain;
}

Metrics metrics_general(const Protocol& protocol,
                        const GeneralChainOptions& options) {
  const auto chain = build_general_chain(protocol, options);
  const int n = chain.n_users;
  const long long count = static_cast<long long>(chain.states.size());
  const uint32_t slot_mask = (1u << n) - 1;
  auto name = [&](int key) {
    std::string out;
    for (int s = 0; s < chain.memory_slots; ++s) {
      const uint32_t outcome =
          (static_cast<uint32_t>(key) >> (n * (chain.memory_slots - 1 - s))) & slot_mask;
      out += out.empty() ? "" : "|";
      for (int i = 0; i < n; ++i) out += ((outcome >> i) & 1u) ? 'T' : 'W';
    }
    return out;
  };

  Eigen::VectorXd v;
  try {
    v = stationary_distribution(chain.matrix, name);
  } catch (const ReducibleChainError&) {
    if (!options.use_cesaro) throw;
    v = cesaro_limit(chain.matrix, 0);
  }

  std::vector<int> success_states;  // newest slot: user 0 transmitted alone
  double tau_user = 0.0, p0 = 0.0, p1 = 0.0;
  for (long long key = 0; key < count; ++key) {
    const uint32_t newest = static_cast<uint32_t>(key) & slot_mask;
    const int k = std::popcount(newest);
    if (k == 0) p0 += v(key);
    if (k == 1) p1 += v(key);
    if (newest == 1u) {
      success_states.push_back(static_cast<int>(key));
      tau_user += v(key);
    }
  }
  if (tau_user < 1e-12) return infinite_delay_metrics(v, p0, p1);

  Eigen::VectorXd d;
  try {
    d = first_passage_times(chain.matrix, success_states);
  } catch (const NumericalError&) {
    return infinite_delay_metrics(v, p0, p1);
  }
  double recurrence = 0.0;
  for (int s : success_states) recurrence += v(s) * d(s);
  Metrics m;
  m.tau_user = tau_user;
  m.tau_total = n * tau_user;
  m.delay = v.dot(d) - 0.5;
  m.interpacket = recurrence / tau_user;
  m.p0 = p0;
  m.p1 = p1;
  m.p2 = std::max(0.0, 1.0 - p0 - p1);
  m.stationary = v;
  return m;
}

double pk_decompose(const Metrics& metrics, double kappa) {
  if (kappa < 0.0) throw ConfigError("coefficient of variation must be >= 0");
  if (metrics.interpacket < 1.0)
    throw ConfigError("inter-packet time below one slot");
  return 0.5 * (1.0 + kappa * kappa) * metrics.interpacket;
}

std::string metrics_csv_header() {
  return "protocol,n,m,feedback,tau_total,tau_user,delay,interpacket,p0,p1,p2";
}

std::string metrics_csv_row(const Protocol& protocol, const Metrics& metrics) {
  std::string out = protocol.name;
  out += "," + std::to_string(protocol.config.n_users);
  out += "," + std::to_string(protocol.config.memory_slots);
  out += "," + to_string(protocol.feedback.kind);
  for (double x : {metrics.tau_total, metrics.tau_user, metrics.delay,
                   metrics.interpacket, metrics.p0, metrics.p1, metrics.p2})
    out += "," + fmt(x);
  return out;
}

}  // namespace macmem
