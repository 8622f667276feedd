#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "macmem/core.hpp"

namespace macmem {

struct SimConfig {
  long long slots = 100000;
  uint64_t seed = 1;
  double error_epsilon = 0.0;  // per wrong class, waiting users only
  int n_users = 1;
  // When set, the protocol's rule is built for this user count instead of
  // n_users and observations are matched to it by feedback-class label.
  std::optional<int> estimated_n;
  bool record_trace = false;
};

void validate(const SimConfig& config);

// Equal-length time slices of one run, for batch-means standard errors.
struct BatchStats {
  double tau = 0.0;
  double delay = 0.0;
  double interpacket_mean = 0.0;
  double interpacket_cv = 0.0;
};

struct SimResult {
  double throughput_total = 0.0;
  std::vector<double> throughput_per_user;
  // Mean over users and slot boundaries of the time to the next success,
  // minus 0.5. Boundaries after a user's last success are dropped; with no
  // successes at all the value is the horizon lower bound and the flag is set.
  double average_delay = 0.0;
  bool delay_censored = false;
  double interpacket_mean = 0.0;
  double interpacket_cv = 0.0;
  std::optional<long long> convergence_slot;  // start of a lasting TDMA rotation
  std::vector<BatchStats> batches;
  std::vector<std::string> trace;  // "t,k,outcome_type,successful_user|-"
};

// Runs the slotted system. Each slot every user draws Transmit with its rule
// probability on its own remembered history; the true transmission count
// decides the outcome. A transmitter's observation is exact (its own outcome
// pins it); a waiting user sees the true feedback class with probability
// 1 - (c-1) * epsilon and each of the c-1 wrong classes with probability
// epsilon, independently across users. An erroneous class with no realizable
// pair falls back to the true one.
SimResult simulate(const Protocol& protocol, const SimConfig& config);

enum class TdmaVariant { Theorem1, Reservation };

std::string to_string(TdmaVariant variant);
TdmaVariant tdma_variant_from_string(const std::string& text);

struct TdmaRun {
  uint64_t seed = 0;
  std::optional<long long> convergence_slot;
  // Exactly 1 and N once a rotation locks; unset fields mean a censored run.
  double post_throughput = 0.0;
  int post_period = 0;
};

// Simulates the chosen converging rule once per seed and finds the first slot
// from which outcomes form a pure rotation (every user succeeds once per N
// slots). A rotation must persist 10 N slots plus a verification stretch
// before it counts; runs that exhaust the horizon are censored.
std::vector<TdmaRun> simulate_tdma_convergence(int n_users, TdmaVariant variant,
                                               const std::vector<uint64_t>& seeds,
                                               long long horizon = 100000);

struct EstimatedNPoint {
  int estimated_n = 0;
  double tau = 0.0;
  double delay = 0.0;
  bool optimizer_converged = false;
};

// For each estimate in [estimate_lo, estimate_hi], designs the delay-efficient
// protocol for that user count at target_tau and simulates it with
// base.n_users actual users.
std::vector<EstimatedNPoint> simulate_estimated_n(
    int estimate_lo, int estimate_hi, double target_tau, const SimConfig& base,
    FeedbackKind kind = FeedbackKind::Ternary);

struct EstimateUpdateConfig {
  long long update_period = 1000;
  double threshold = 0.02;
};

struct EstimateUpdateResult {
  std::vector<int> estimates;      // shared estimate after each update
  std::vector<double> window_tau;  // realized throughput per window
  double tau = 0.0;
  double delay = 0.0;
};

// One continuous run in which all users share an estimate of the user count,
// starting from initial_estimate. Every update_period slots the realized
// window throughput is compared to target_tau: more than threshold below
// raises the estimate, more than threshold above lowers it (clamped to the
// range). Histories carry over across switches.
EstimateUpdateResult simulate_estimate_updates(
    int initial_estimate, int estimate_lo, int estimate_hi, double target_tau,
    const SimConfig& base, const EstimateUpdateConfig& update = {},
    FeedbackKind kind = FeedbackKind::Ternary);

struct JoinLeaveEvent {
  long long slot = 1;
  bool join = true;
  int user = 0;
};

struct FrameSample {
  long long slot = 0;
  int frame_length = 0;
  int active_users = 0;
};

struct JoinLeaveResult {
  std::vector<FrameSample> frames;  // sampled at start and on frame-length change
  int final_frame_length = 0;
  long long reserved_collisions = 0;  // renegotiations forced by joins
};

// Frame-based slot reservation with renegotiation. Frames start at max_n
// slots; unreserved users contend in unowned slots and a success reserves the
// slot. A frame with no collisions in which every active user succeeded once
// is compressed to the active count (empty slots deleted). A joining user
// transmits in every slot until it wins one; the collision this causes in a
// reserved slot resets all estimates to max_n and restarts negotiation.
JoinLeaveResult simulate_join_leave(int initial_n, int max_n,
                                    std::vector<JoinLeaveEvent> events,
                                    long long slots, uint64_t seed);

std::string sim_csv_header();
std::string sim_csv_row(double epsilon, const SimResult& result);

}  // namespace macmem
