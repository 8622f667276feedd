#include "macmem/protocols.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>

namespace macmem {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

bool is_success(const ActionFeedbackPair& pair) {
  return pair.feedback.label == "1";
}

bool is_own_success(const ActionFeedbackPair& pair) {
  return pair.action == Action::Transmit && is_success(pair);
}

}  // namespace

Protocol memoryless(double p, int n_users) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p must lie in [0,1]");
  const auto tech = build_feedback_technology(FeedbackKind::None, n_users);
  std::vector<double> probs(realizable_pairs(tech).size(), p);
  return make_protocol({n_users, 1}, FeedbackKind::None,
                       "memoryless(" + fmt(p) + ")", std::move(probs));
}

TwoStateSpec two_state_spec(double eta, int n_users) {
  if (n_users < 2) throw ConfigError("two-state equivalence needs N >= 2");
  if (eta < 1.0) throw ConfigError("eta must be >= 1");
  TwoStateSpec spec;
  spec.eta = eta;
  spec.p_free = 1.0;
  spec.p_backlogged = 1.0 - std::pow(1.0 - 1.0 / eta, 1.0 / (n_users - 1));
  return spec;
}

Protocol two_state_equivalent(double eta, int n_users) {
  const auto spec = two_state_spec(eta, n_users);
  const double pg = spec.p_backlogged;
  auto p = one_slot({pg, 1.0, pg}, FeedbackKind::None, n_users);
  p.name = "two-state(" + fmt(eta) + ")";
  return p;
}

Protocol theorem1_protocol(int n_users) {
  if (n_users < 2) throw ConfigError("needs N >= 2");
  const SystemConfig config{n_users, n_users - 1};
  const auto tech = build_feedback_technology(FeedbackKind::SF, n_users);
  std::vector<double> probs;
  for (const auto& history : enumerate_histories(config, tech)) {
    bool own = false;
    int successes = 0;
    for (const auto& pair : history.pairs) {
      own = own || is_own_success(pair);
      successes += is_success(pair);
    }
    assert(successes <= n_users - 1);
    probs.push_back(own ? 0.0 : 1.0 / (n_users - successes));
  }
  auto p = make_protocol(config, FeedbackKind::SF, "theorem1", std::move(probs));
  return p;
}

Protocol reservation_protocol(int n_users) {
  if (n_users < 2) throw ConfigError("needs N >= 2");
  const SystemConfig config{n_users, n_users};
  const auto tech = build_feedback_technology(FeedbackKind::SF, n_users);
  std::vector<double> probs;
  for (const auto& history : enumerate_histories(config, tech)) {
    const auto& oldest = history.pairs.front();  // the slot one frame ago
    double p;
    if (is_own_success(oldest)) {
      p = 1.0;
    } else if (is_success(oldest)) {
      p = 0.0;  // reserved by another user
    } else {
      bool pending = false;
      int successes = 0;
      for (size_t i = 1; i < history.pairs.size(); ++i) {
        pending = pending || is_own_success(history.pairs[i]);
        successes += is_success(history.pairs[i]);
      }
      assert(successes <= n_users - 1);
      p = pending ? 0.0 : 1.0 / (n_users - successes);
    }
    probs.push_back(p);
  }
  return make_protocol(config, FeedbackKind::SF, "reservation", std::move(probs));
}

Protocol one_slot(const std::vector<double>& probabilities, FeedbackKind kind,
                  int n_users) {
  std::string name = "one-slot(";
  for (size_t i = 0; i < probabilities.size(); ++i)
    name += (i ? ";" : "") + fmt(probabilities[i]);
  return make_protocol({n_users, 1}, kind, name + ")", probabilities);
}

Protocol fo_preset() {
  auto p = one_slot({0.204442137315, 0.027828767898, 0.342499714126,
                     0.991334365678, 0.0001},
                    FeedbackKind::Ternary, 5);
  p.name = "fo";
  return p;
}

}  // namespace macmem
