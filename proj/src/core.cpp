#include "macmem/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace macmem {

void validate(const SystemConfig& config) {
  if (config.n_users < 1) throw ConfigError("n_users must be >= 1");
  if (config.memory_slots < 1) throw ConfigError("memory_slots must be >= 1");
}

bool FeedbackClass::contains(int k) const {
  return std::binary_search(members.begin(), members.end(), k);
}

std::string to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::None: return "none";
    case FeedbackKind::SF: return "sf";
    case FeedbackKind::CNC: return "cnc";
    case FeedbackKind::ENE: return "ene";
    case FeedbackKind::Ternary: return "ternary";
    case FeedbackKind::NPlus1Ary: return "nplus1";
  }
  throw ConfigError("unknown feedback kind");
}

FeedbackKind feedback_kind_from_string(const std::string& text) {
  if (text == "none") return FeedbackKind::None;
  if (text == "sf") return FeedbackKind::SF;
  if (text == "cnc") return FeedbackKind::CNC;
  if (text == "ene") return FeedbackKind::ENE;
  if (text == "ternary") return FeedbackKind::Ternary;
  if (text == "nplus1") return FeedbackKind::NPlus1Ary;
  throw ConfigError("unknown feedback kind: " + text);
}

const FeedbackClass& FeedbackTechnology::class_of(int k) const {
  for (const auto& cls : partition)
    if (cls.contains(k)) return cls;
  throw ConfigError("count " + std::to_string(k) + " outside partition range");
}

bool same_pair(const ActionFeedbackPair& a, const ActionFeedbackPair& b) {
  return a.action == b.action && a.feedback.label == b.feedback.label;
}

namespace {

std::vector<int> range_set(int lo, int hi) {  // {lo,...,hi}, empty if lo > hi
  std::vector<int> out;
  for (int k = lo; k <= hi; ++k) out.push_back(k);
  return out;
}

// Display names for the class shapes the six kinds produce. The full
// collision set {2,...,N} is always "e", even when it is the singleton {2}
// at N=2, so labels stay stable across instances with different N.
std::string label_for(const std::vector<int>& members, int n) {
  const bool has0 = std::binary_search(members.begin(), members.end(), 0);
  const bool has1 = std::binary_search(members.begin(), members.end(), 1);
  const int collision_count = static_cast<int>(members.size()) - has0 - has1;
  const bool full_e = n >= 2 && collision_count == n - 1;
  if (has0 && has1 && full_e) return "∅";  // no information
  if (!has0 && !has1 && full_e) return "e";
  if (has0 && !has1 && full_e) return "0∪e";
  if (!has0 && has1 && full_e) return "1∪e";
  if (has0 && has1 && collision_count == 0) return "0∪1";
  if (members.size() == 1) return std::to_string(members.front());
  std::string out;
  for (int k : members) out += (out.empty() ? "" : ",") + std::to_string(k);
  return "{" + out + "}";
}

FeedbackClass make_class(std::vector<int> members, int n) {
  FeedbackClass cls;
  cls.label = label_for(members, n);
  cls.members = std::move(members);
  return cls;
}

}  // namespace

FeedbackTechnology build_feedback_technology(FeedbackKind kind, int n_users) {
  if (n_users < 1) throw ConfigError("n_users must be >= 1");
  const int n = n_users;
  std::vector<std::vector<int>> sets;
  switch (kind) {
    case FeedbackKind::None:
      sets = {range_set(0, n)};
      break;
    case FeedbackKind::SF: {
      std::vector<int> fail = {0};
      for (int k = 2; k <= n; ++k) fail.push_back(k);
      sets = {{1}, fail};
      break;
    }
    case FeedbackKind::CNC:
      sets = {{0, 1}, range_set(2, n)};
      break;
    case FeedbackKind::ENE:
      sets = {{0}, range_set(1, n)};
      break;
    case FeedbackKind::Ternary:
      sets = {{0}, {1}, range_set(2, n)};
      break;
    case FeedbackKind::NPlus1Ary:
      for (int k = 0; k <= n; ++k) sets.push_back({k});
      break;
  }
  FeedbackTechnology tech;
  tech.kind = kind;
  tech.n_users = n;
  for (auto& s : sets)
    if (!s.empty()) tech.partition.push_back(make_class(std::move(s), n));
  return tech;
}

FeedbackClass feedback_of(const FeedbackTechnology& tech, Action action, int k) {
  if (k < 0 || k > tech.n_users)
    throw ConfigError("transmission count outside {0,...,N}");
  if (action == Action::Wait) return tech.class_of(k);
  if (k == 0)
    throw ConfigError("a transmitting user is counted in the transmission count");
  if (k == 1) return make_class({1}, tech.n_users);
  std::vector<int> members;
  for (int m : tech.class_of(k).members)
    if (m >= 2) members.push_back(m);
  return make_class(std::move(members), tech.n_users);
}

std::vector<ActionFeedbackPair> realizable_pairs(const FeedbackTechnology& tech) {
  std::vector<ActionFeedbackPair> wait, transmit;
  for (const auto& cls : tech.partition)
    if (cls.min_member() <= tech.n_users - 1)
      wait.push_back({Action::Wait, cls});
  transmit.push_back({Action::Transmit, feedback_of(tech, Action::Transmit, 1)});
  for (const auto& cls : tech.partition) {
    auto hit = std::find_if(cls.members.begin(), cls.members.end(),
                            [](int m) { return m >= 2; });
    if (hit != cls.members.end())
      transmit.push_back({Action::Transmit, feedback_of(tech, Action::Transmit, *hit)});
  }
  auto by_min = [](const ActionFeedbackPair& a, const ActionFeedbackPair& b) {
    return a.feedback.min_member() < b.feedback.min_member();
  };
  std::sort(wait.begin(), wait.end(), by_min);
  std::sort(transmit.begin(), transmit.end(), by_min);
  wait.insert(wait.end(), transmit.begin(), transmit.end());
  return wait;
}

int pair_index(const FeedbackTechnology& tech, const ActionFeedbackPair& pair) {
  const auto pairs = realizable_pairs(tech);
  for (int i = 0; i < static_cast<int>(pairs.size()); ++i)
    if (same_pair(pairs[i], pair)) return i;
  throw ConfigError("pair (" +
                    std::string(pair.action == Action::Transmit ? "T" : "W") +
                    "," + pair.feedback.label + ") not realizable");
}

std::vector<History> enumerate_histories(const SystemConfig& config,
                                         const FeedbackTechnology& tech) {
  validate(config);
  if (config.n_users != tech.n_users)
    throw ConfigError("config and feedback technology disagree on N");
  const auto pairs = realizable_pairs(tech);
  const int base = static_cast<int>(pairs.size());
  const int m = config.memory_slots;
  long long total = 1;
  for (int s = 0; s < m; ++s) total *= base;
  std::vector<History> out;
  out.reserve(total);
  for (long long idx = 0; idx < total; ++idx) {
    History h;
    h.pairs.resize(m);
    long long rest = idx;
    for (int s = m - 1; s >= 0; --s) {  // oldest slot is most significant
      h.pairs[s] = pairs[rest % base];
      rest /= base;
    }
    out.push_back(std::move(h));
  }
  return out;
}

History initial_history(const SystemConfig& config,
                        const FeedbackTechnology& tech) {
  validate(config);
  History h;
  h.pairs.assign(config.memory_slots, {Action::Wait, tech.class_of(0)});
  return h;
}

long long history_index(const SystemConfig& config,
                        const FeedbackTechnology& tech,
                        const History& history) {
  if (static_cast<int>(history.pairs.size()) != config.memory_slots)
    throw ConfigError("history length does not match memory_slots");
  const auto pairs = realizable_pairs(tech);
  const int base = static_cast<int>(pairs.size());
  long long idx = 0;
  for (const auto& pair : history.pairs) {
    int digit = -1;
    for (int i = 0; i < base; ++i)
      if (same_pair(pairs[i], pair)) { digit = i; break; }
    if (digit < 0)
      throw ConfigError("history contains a pair outside the protocol domain: (" +
                        std::string(pair.action == Action::Transmit ? "T" : "W") +
                        "," + pair.feedback.label + ")");
    idx = idx * base + digit;
  }
  return idx;
}

double Protocol::rule(const History& history) const {
  return probabilities.at(history_index(config, feedback, history));
}

Protocol make_protocol(const SystemConfig& config, FeedbackKind kind,
                       std::string name, std::vector<double> probabilities) {
  validate(config);
  Protocol p;
  p.config = config;
  p.feedback = build_feedback_technology(kind, config.n_users);
  p.name = std::move(name);
  const auto pairs = realizable_pairs(p.feedback);
  long long expect = 1;
  for (int s = 0; s < config.memory_slots; ++s) expect *= pairs.size();
  if (static_cast<long long>(probabilities.size()) != expect)
    throw ConfigError("probability vector has " +
                      std::to_string(probabilities.size()) + " entries, expected " +
                      std::to_string(expect));
  for (double v : probabilities)
    if (!(v >= 0.0 && v <= 1.0))
      throw ConfigError("probabilities must lie in [0,1]");
  p.probabilities = std::move(probabilities);
  return p;
}

std::string protocol_to_json(const Protocol& protocol) {
  nlohmann::json j;
  j["name"] = protocol.name;
  j["n_users"] = protocol.config.n_users;
  j["memory_slots"] = protocol.config.memory_slots;
  j["feedback_kind"] = to_string(protocol.feedback.kind);
  j["probabilities"] = protocol.probabilities;
  return j.dump(2) + "\n";
}

Protocol protocol_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad protocol JSON: ") + e.what());
  }
  try {
    SystemConfig config{j.at("n_users").get<int>(),
                        j.at("memory_slots").get<int>()};
    return make_protocol(config,
                         feedback_kind_from_string(j.at("feedback_kind").get<std::string>()),
                         j.value("name", std::string("unnamed")),
                         j.at("probabilities").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad protocol JSON: ") + e.what());
  }
}

void save_protocol(const Protocol& protocol, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << protocol_to_json(protocol);
}

Protocol load_protocol(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return protocol_from_json(buf.str());
}

}  // namespace macmem
