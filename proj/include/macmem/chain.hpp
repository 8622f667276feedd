#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "macmem/core.hpp"

namespace macmem {

// Per-user state of the reduced chain: own action in the previous slot and the
// total number of transmissions in that slot. Index order is
// (T,1),...,(T,N),(W,0),...,(W,N-1).
struct ReducedState {
  Action action = Action::Wait;
  int k = 0;
};

int reduced_state_index(const ReducedState& state, int n_users);
ReducedState reduced_state_at(int index, int n_users);
std::string to_string(const ReducedState& state);

struct ReducedChain {
  Eigen::MatrixXd matrix;  // 2N x 2N, row stochastic
  Protocol protocol;
};

struct Metrics {
  double tau_user = 0.0;      // per-user throughput
  double tau_total = 0.0;     // N * tau_user
  double delay = 0.0;         // average delay, slots (or time units for WLAN)
  double interpacket = 0.0;   // mean time between a user's successes
  double p0 = 0.0, p1 = 0.0, p2 = 0.0;  // idle / success / collision fractions
  Eigen::VectorXd stationary;
};

// Requires memory_slots = 1; throws ConfigError otherwise.
ReducedChain build_reduced_chain(const Protocol& protocol);

// Matrix-level entry points for hot loops (the optimizer evaluates thousands
// of candidate vectors): transition matrix from per-state transmission rates
// ft[k] (after transmitting among k) for k = 1..N and fw[k] (after waiting
// with k transmissions seen) for k = 0..N-1, and metrics from such a matrix.
Eigen::MatrixXd reduced_matrix(const std::vector<double>& ft,
                               const std::vector<double>& fw, int n_users);
Metrics metrics_from_reduced_matrix(const Eigen::MatrixXd& matrix, int n_users);

// Solves vQ = v, v·1 = 1 by a dense direct solve. Throws ReducibleChainError
// (naming one absorbing class) when the support graph has more than one closed
// communicating class; state_name renders a state index for that message.
Eigen::VectorXd stationary_distribution(
    const Eigen::MatrixXd& matrix,
    const std::function<std::string(int)>& state_name = {});

// Expected cost accumulated until the target set is next entered, counting the
// entering step: d = c + Q0 d with the columns into the target zeroed. The
// cost per step is 1 (slots) unless given, e.g. per-state slot durations.
Eigen::VectorXd first_passage_times(const Eigen::MatrixXd& matrix,
                                    const std::vector<int>& targets);
Eigen::VectorXd first_passage_times(const Eigen::MatrixXd& matrix,
                                    const std::vector<int>& targets,
                                    const Eigen::VectorXd& step_costs);

Metrics metrics_reduced(const Protocol& protocol);

struct GeneralChainOptions {
  // 2^(N*M) states; N*M > 16 is always refused. Beyond max_states the
  // construction refuses too unless the cap is raised explicitly (hard memory
  // ceiling 2^13 states for the dense solve).
  long long max_states = 1 << 12;
  // Reducible chains normally raise; with the flag set the stationary part is
  // replaced by the Cesaro average of v0 Q^t from the initial history.
  bool use_cesaro = false;
};

struct GeneralChain {
  Eigen::MatrixXd matrix;
  int n_users = 0;
  int memory_slots = 0;
  // State key: M join-action bitmasks (bit i = user i transmitted), oldest
  // slot in the highest bits, newest in the lowest N bits.
  std::vector<uint32_t> states;
};

GeneralChain build_general_chain(const Protocol& protocol,
                                 const GeneralChainOptions& options = {});

Metrics metrics_general(const Protocol& protocol,
                        const GeneralChainOptions& options = {});

// Average-delay prediction from the inter-packet time and its coefficient of
// variation: (1 + kappa^2) / 2 * interpacket.
double pk_decompose(const Metrics& metrics, double kappa);

std::string metrics_csv_header();
std::string metrics_csv_row(const Protocol& protocol, const Metrics& metrics);

}  // namespace macmem
