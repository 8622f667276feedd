#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace macmem {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a chain has more than one closed communicating class; carries a
// human-readable description of one absorbing class.
struct ReducibleChainError : NumericalError {
  explicit ReducibleChainError(const std::string& absorbing)
      : NumericalError("reducible chain; absorbing class: " + absorbing),
        absorbing_class(absorbing) {}
  std::string absorbing_class;
};

enum class Action { Transmit, Wait };

struct SystemConfig {
  int n_users = 1;
  int memory_slots = 1;
};

void validate(const SystemConfig& config);

// A feedback class aggregates transmission counts a user cannot tell apart.
// Members are kept sorted. The label is the canonical display name and also the
// identity used for cross-instance protocol lookups (member sets depend on N,
// labels do not, except for the finest per-count kind).
struct FeedbackClass {
  std::vector<int> members;
  std::string label;

  bool contains(int k) const;
  int min_member() const { return members.front(); }
};

enum class FeedbackKind { None, SF, CNC, ENE, Ternary, NPlus1Ary };

std::string to_string(FeedbackKind kind);
FeedbackKind feedback_kind_from_string(const std::string& text);

struct FeedbackTechnology {
  FeedbackKind kind = FeedbackKind::None;
  int n_users = 1;
  std::vector<FeedbackClass> partition;  // disjoint cover of {0,...,N}

  const FeedbackClass& class_of(int k) const;
};

struct ActionFeedbackPair {
  Action action = Action::Wait;
  FeedbackClass feedback;
};

// Pair identity is (action, label), so protocols transfer across instances
// built for different user counts as long as the labels match.
bool same_pair(const ActionFeedbackPair& a, const ActionFeedbackPair& b);

// Oldest pair first.
struct History {
  std::vector<ActionFeedbackPair> pairs;
};

FeedbackTechnology build_feedback_technology(FeedbackKind kind, int n_users);

// What a user observes after a slot with k total transmissions. A transmitter
// with k = 1 always learns the exact success class {1} via its ACK; a
// transmitter in a collision learns its channel class restricted to {2,...,N}.
FeedbackClass feedback_of(const FeedbackTechnology& tech, Action action, int k);

// All realizable pairs in canonical order: Wait pairs by ascending class
// minimum, then Transmit pairs by ascending class minimum. A Wait pair is
// realizable only if its class contains some count a waiter can actually see
// (at most N-1 others transmit).
std::vector<ActionFeedbackPair> realizable_pairs(const FeedbackTechnology& tech);

// Index of a pair in realizable_pairs order, matched by (action, label).
// Throws ConfigError if the pair is not realizable for this technology.
int pair_index(const FeedbackTechnology& tech, const ActionFeedbackPair& pair);

// All M-tuples over the realizable pairs, lexicographic with the oldest slot
// most significant. Index 0 is the initial all-(Wait, class-of-0) history.
std::vector<History> enumerate_histories(const SystemConfig& config,
                                         const FeedbackTechnology& tech);

History initial_history(const SystemConfig& config,
                        const FeedbackTechnology& tech);

long long history_index(const SystemConfig& config,
                        const FeedbackTechnology& tech,
                        const History& history);

// Symmetric protocol: one rule shared by all users, stored as a dense
// probability vector over the canonical history order.
struct Protocol {
  SystemConfig config;
  FeedbackTechnology feedback;
  std::string name;
  std::vector<double> probabilities;

  double rule(const History& history) const;
};

Protocol make_protocol(const SystemConfig& config, FeedbackKind kind,
                       std::string name, std::vector<double> probabilities);

std::string protocol_to_json(const Protocol& protocol);
Protocol protocol_from_json(const std::string& text);
void save_protocol(const Protocol& protocol, const std::string& path);
Protocol load_protocol(const std::string& path);

}  // namespace macmem
