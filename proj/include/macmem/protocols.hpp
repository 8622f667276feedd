#pragma once

#include <optional>
#include <vector>

#include "macmem/core.hpp"

namespace macmem {

// Generalized slotted-Aloha parameters. With eta set, p_free is pinned to 1 and
// p_backlogged follows from the short-term fairness parameter.
struct TwoStateSpec {
  double p_free = 1.0;
  double p_backlogged = 0.0;
  std::optional<double> eta;
};

// Constant transmission probability, 1-slot memory, no channel feedback.
Protocol memoryless(double p, int n_users);

// The 1-slot, ACK-only equivalent of a two-state protocol with short-term
// fairness eta: f(T,1) = 1, f(W,.) = f(T,e) = 1 - (1 - 1/eta)^(1/(N-1)).
Protocol two_state_equivalent(double eta, int n_users);
TwoStateSpec two_state_spec(double eta, int n_users);

// Converging-to-TDMA rule with (N-1)-slot memory under success/failure
// feedback: stop transmitting after an own success in the window, otherwise
// contend with probability 1/(N - #successes seen).
Protocol theorem1_protocol(int n_users);

// Slot-reservation rule with N-slot memory under success/failure feedback: an
// own success N slots ago reserves the current slot; a foreign success N slots
// ago or a pending own success blocks it; otherwise contend for the remainder.
Protocol reservation_protocol(int n_users);

// Arbitrary 1-slot protocol given probabilities in canonical history order.
Protocol one_slot(const std::vector<double>& probabilities, FeedbackKind kind,
                  int n_users);

// Built-in delay-efficient 1-slot ternary preset for five users; sits on the
// boundary at total throughput 0.792 with average delay 41.59 slots.
Protocol fo_preset();

}  // namespace macmem
