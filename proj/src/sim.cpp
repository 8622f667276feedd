#include "macmem/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "macmem/optimize.hpp"
#include "macmem/protocols.hpp"
#include "macmem/rng.hpp"

namespace macmem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Protocol-domain digits for every observation the actual system can produce,
// matched by class label so a rule designed for another user count still
// applies.
struct DigitTables {
  int base = 1;
  long long pow_high = 1;       // base^(M-1)
  long long initial_index = 0;  // all-(W, class of 0) history
  std::vector<int> transmit_digit;       // by true count, k = 1..N
  std::vector<int> wait_digit;           // by true count, k = 0..N-1
  int n_classes = 0;                     // actual technology partition size
  std::vector<int> class_of_count;       // partition index per count 0..N-1
  std::vector<int> wait_digit_by_class;  // -1 when the pair is unrealizable
  std::vector<std::vector<int>> wrong_classes;
};

DigitTables build_digit_tables(const Protocol& protocol, int actual_n) {
  const auto actual = build_feedback_technology(protocol.feedback.kind, actual_n);
  const int m = protocol.config.memory_slots;

  DigitTables t;
  t.base = static_cast<int>(realizable_pairs(protocol.feedback).size());
  for (int s = 0; s + 1 < m; ++s) t.pow_high *= t.base;

  auto digit_of = [&](Action action, int k) {
    return pair_index(protocol.feedback, {action, feedback_of(actual, action, k)});
  };
  t.transmit_digit.assign(actual_n + 1, 0);
  t.wait_digit.assign(actual_n, 0);
  try {
    for (int k = 1; k <= actual_n; ++k)
      t.transmit_digit[k] = digit_of(Action::Transmit, k);
    for (int k = 0; k <= actual_n - 1; ++k)
      t.wait_digit[k] = digit_of(Action::Wait, k);
  } catch (const ConfigError& e) {
    throw ConfigError("protocol cannot drive " + std::to_string(actual_n) +
                      " users: " + e.what());
  }
  const int w0 = t.wait_digit[0];
  for (int s = 0; s < m; ++s) t.initial_index = t.initial_index * t.base + w0;

  t.n_classes = static_cast<int>(actual.partition.size());
  t.class_of_count.assign(actual_n, 0);
  t.wait_digit_by_class.assign(t.n_classes, -1);
  for (int j = 0; j < t.n_classes; ++j) {
    for (int k = 0; k <= actual_n - 1; ++k)
      if (actual.partition[j].contains(k)) t.class_of_count[k] = j;
    try {
      t.wait_digit_by_class[j] =
          pair_index(protocol.feedback, {Action::Wait, actual.partition[j]});
    } catch (const ConfigError&) {
    }
  }
  t.wrong_classes.assign(t.n_classes, {});
  for (int j = 0; j < t.n_classes; ++j)
    for (int o = 0; o < t.n_classes; ++o)
      if (o != j) t.wrong_classes[j].push_back(o);
  return t;
}

struct SlotEngine {
  int n = 0;
  double epsilon = 0.0;
  DigitTables tables;
  std::vector<SplitMix64> rngs;
  std::vector<long long> index;
  std::vector<uint8_t> transmitted;

  SlotEngine(const Protocol& protocol, int actual_n, double eps, uint64_t seed)
      : n(actual_n),
        epsilon(eps),
        tables(build_digit_tables(protocol, actual_n)) {
    SplitMix64 master(seed);
    rngs.reserve(n);
    for (int i = 0; i < n; ++i) rngs.emplace_back(master.next());
    index.assign(n, tables.initial_index);
    transmitted.assign(n, 0);
  }

  // Plays one slot against the given probability table; returns the
  // transmission count and the successful user (or -1).
  std::pair<int, int> step(const double* probs) {
    int k = 0, last = -1;
    for (int i = 0; i < n; ++i) {
      const bool t = rngs[i].uniform() < probs[index[i]];
      transmitted[i] = t;
      if (t) {
        ++k;
        last = i;
      }
    }
    const int success = (k == 1) ? last : -1;
    for (int i = 0; i < n; ++i) {
      int digit;
      if (transmitted[i]) {
        digit = tables.transmit_digit[k];
      } else {
        digit = tables.wait_digit[k];
        if (epsilon > 0.0 && tables.n_classes > 1) {
          const double u = rngs[i].uniform();
          if (u < (tables.n_classes - 1) * epsilon) {
            const int pick =
                std::min(static_cast<int>(u / epsilon), tables.n_classes - 2);
            const int cls = tables.wrong_classes[tables.class_of_count[k]][pick];
            if (tables.wait_digit_by_class[cls] >= 0)
              digit = tables.wait_digit_by_class[cls];
          }
        }
      }
      index[i] = (index[i] % tables.pow_high) * tables.base + digit;
    }
    return {k, success};
  }
};

// Start of the final rotation suffix of the run: every slot in [s, T] is a
// success, users repeat with period n, the window users are distinct, and the
// suffix spans at least 10 n slots. success_user is 1-based.
std::optional<long long> rotation_start(const std::vector<int>& success_user,
                                        long long last_slot, int n) {
  if (last_slot < 10LL * n || success_user[last_slot] < 0) return std::nullopt;
  long long s = last_slot;
  while (s > 1) {
    const long long c = s - 1;
    if (success_user[c] < 0) break;
    if (c + n <= last_slot && success_user[c + n] != success_user[c]) break;
    s = c;
  }
  if (last_slot - s + 1 < 10LL * n) return std::nullopt;
  std::vector<uint8_t> seen(n, 0);
  for (long long t = s; t < s + n; ++t) {
    const int u = success_user[t];
    if (u < 0 || u >= n || seen[u]) return std::nullopt;
    seen[u] = 1;
  }
  return s;
}

struct DesignedRule {
  Protocol protocol;
  bool converged = false;
};

// One designed rule per admissible estimate. The designs are constrained to
// the family where a collision leads to waiting (collision-retransmission
// probabilities pinned at the box floor) and warm-started from each other;
// without both, near-optimal competing families make the achieved throughput
// wobble instead of varying smoothly with the estimate.
std::vector<DesignedRule> design_rules(int estimate_lo, int estimate_hi,
                                       double target_tau, FeedbackKind kind) {
  std::vector<DesignedRule> rules;
  Eigen::VectorXd warm;
  for (int est = estimate_lo; est <= estimate_hi; ++est) {
    const auto pairs =
        realizable_pairs(build_feedback_technology(kind, est));
    std::vector<int> pinned;
    for (size_t i = 0; i < pairs.size(); ++i)
      if (pairs[i].action == Action::Transmit && !pairs[i].feedback.contains(1))
        pinned.push_back(static_cast<int>(i));
    const auto base = slotted_evaluator(kind, est);
    const Evaluator evaluate = [base, pinned](const Eigen::VectorXd& x) {
      Eigen::VectorXd y = x;
      for (const int i : pinned) y(i) = 1e-4;
      return base(y);
    };

    Eigen::VectorXd init = default_boundary_init(kind, est);
    std::vector<Eigen::VectorXd> extras;
    if (warm.size() == init.size())
      init = warm;
    else
      extras.push_back(Eigen::VectorXd::Constant(init.size(), 0.5));
    auto solved = solve_at_tau(target_tau, init, evaluate, extras);
    for (const int i : pinned) solved.protocol_vector(i) = 1e-4;
    if (solved.converged) warm = solved.protocol_vector;
    const std::vector<double> probs(
        solved.protocol_vector.data(),
        solved.protocol_vector.data() + solved.protocol_vector.size());
    rules.push_back({one_slot(probs, kind, est), solved.converged});
  }
  return rules;
}

}  // namespace

void validate(const SimConfig& config) {
  if (config.slots < 1) throw ConfigError("slots must be >= 1");
  if (!(config.error_epsilon >= 0.0 && config.error_epsilon < 0.5))
    throw ConfigError("error_epsilon must lie in [0, 0.5)");
  if (config.n_users < 1) throw ConfigError("n_users must be >= 1");
  if (config.estimated_n && *config.estimated_n < 1)
    throw ConfigError("estimated_n must be >= 1");
}

SimResult simulate(const Protocol& protocol, const SimConfig& config) {
  validate(config);
  const int pn = protocol.config.n_users;
  if (config.estimated_n ? pn != *config.estimated_n : pn != config.n_users)
    throw ConfigError(config.estimated_n
                          ? "protocol user count must equal estimated_n"
                          : "protocol and simulation user counts differ");

  const int n = config.n_users;
  const long long T = config.slots;
  SlotEngine engine(protocol, n, config.error_epsilon, config.seed);
  const double* probs = protocol.probabilities.data();

  const int nb = static_cast<int>(std::min<long long>(20, T));
  std::vector<long long> b_slots(nb, 0), b_succ(nb, 0), b_bnd(nb, 0), b_gcnt(nb, 0);
  std::vector<double> b_tri(nb, 0.0), b_gsum(nb, 0.0), b_gsq(nb, 0.0);
  std::vector<long long> user_succ(n, 0), last(n, 0);
  std::vector<uint8_t> had(n, 0);
  std::vector<int> success_user(T + 1, -1);

  SimResult result;
  if (config.record_trace) result.trace.reserve(T);
  for (long long t = 1; t <= T; ++t) {
    const auto [k, su] = engine.step(probs);
    const int b = static_cast<int>((t - 1) * nb / T);
    ++b_slots[b];
    success_user[t] = su;
    if (su >= 0) {
      ++user_succ[su];
      ++b_succ[b];
      // Every boundary since the previous success sees this one next; the
      // residuals g, g-1, ..., 1 sum to g (g + 1) / 2.
      const long long g = t - last[su];
      b_tri[b] += 0.5 * static_cast<double>(g) * static_cast<double>(g + 1);
      b_bnd[b] += g;
      if (had[su]) {
        b_gsum[b] += static_cast<double>(g);
        b_gsq[b] += static_cast<double>(g) * static_cast<double>(g);
        ++b_gcnt[b];
      }
      had[su] = 1;
      last[su] = t;
    }
    if (config.record_trace) {
      const char* type = k == 0 ? "idle" : (k == 1 ? "success" : "collision");
      std::string line =
          std::to_string(t) + "," + std::to_string(k) + "," + type + ",";
      line += su >= 0 ? std::to_string(su) : "-";
      result.trace.push_back(std::move(line));
    }
  }

  long long successes = 0, bnd = 0, gcnt = 0;
  double tri = 0.0, gsum = 0.0, gsq = 0.0;
  for (int b = 0; b < nb; ++b) {
    successes += b_succ[b];
    bnd += b_bnd[b];
    gcnt += b_gcnt[b];
    tri += b_tri[b];
    gsum += b_gsum[b];
    gsq += b_gsq[b];
  }
  result.throughput_total = static_cast<double>(successes) / T;
  result.throughput_per_user.resize(n);
  for (int i = 0; i < n; ++i)
    result.throughput_per_user[i] = static_cast<double>(user_succ[i]) / T;
  if (bnd > 0) {
    result.average_delay = tri / bnd - 0.5;
    result.delay_censored =
        std::any_of(had.begin(), had.end(), [](uint8_t h) { return !h; });
  } else {
    result.average_delay = 0.5 * static_cast<double>(T);  // horizon lower bound
    result.delay_censored = true;
  }
  if (gcnt > 0) {
    const double mean = gsum / gcnt;
    const double var = std::max(0.0, gsq / gcnt - mean * mean);
    result.interpacket_mean = mean;
    result.interpacket_cv = std::sqrt(var) / mean;
  } else {
    result.interpacket_mean = kInf;
    result.interpacket_cv = 0.0;
  }
  result.batches.resize(nb);
  for (int b = 0; b < nb; ++b) {
    auto& s = result.batches[b];
    s.tau = static_cast<double>(b_succ[b]) / b_slots[b];
    s.delay = b_bnd[b] > 0 ? b_tri[b] / b_bnd[b] - 0.5 : kNaN;
    if (b_gcnt[b] > 0) {
      const double mean = b_gsum[b] / b_gcnt[b];
      const double var = std::max(0.0, b_gsq[b] / b_gcnt[b] - mean * mean);
      s.interpacket_mean = mean;
      s.interpacket_cv = std::sqrt(var) / mean;
    } else {
      s.interpacket_mean = kNaN;
      s.interpacket_cv = kNaN;
    }
  }
  result.convergence_slot = rotation_start(success_user, T, n);
  return result;
}

std::string to_string(TdmaVariant variant) {
  return variant == TdmaVariant::Theorem1 ? "theorem1" : "reservation";
}

TdmaVariant tdma_variant_from_string(const std::string& text) {
  if (text == "theorem1") return TdmaVariant::Theorem1;
  if (text == "reservation") return TdmaVariant::Reservation;
  throw ConfigError("unknown TDMA variant: " + text);
}

std::vector<TdmaRun> simulate_tdma_convergence(int n_users, TdmaVariant variant,
                                               const std::vector<uint64_t>& seeds,
                                               long long horizon) {
  if (n_users < 2) throw ConfigError("TDMA convergence needs N >= 2");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  const Protocol protocol = variant == TdmaVariant::Theorem1
                                ? theorem1_protocol(n_users)
                                : reservation_protocol(n_users);
  const double* probs = protocol.probabilities.data();
  const int n = n_users;
  const long long persist = 10LL * n;
  const long long verify = 2000;

  std::vector<TdmaRun> runs;
  runs.reserve(seeds.size());
  std::vector<int> success_user(horizon + 1, -1);
  std::vector<uint8_t> seen(n, 0);
  for (const uint64_t seed : seeds) {
    SlotEngine engine(protocol, n, 0.0, seed);
    long long cand = 1, declared = -1, last_slot = 0;
    for (long long t = 1; t <= horizon; ++t) {
      const int su = engine.step(probs).second;
      success_user[t] = su;
      last_slot = t;
      if (su < 0) {
        cand = t + 1;
        declared = -1;
        continue;
      }
      if (t - cand >= n && su != success_user[t - n]) {
        cand = t - n + 1;  // the shorter all-success suffix may still rotate
        declared = -1;
      }
      if (declared < 0 && t - cand + 1 >= persist) {
        std::fill(seen.begin(), seen.end(), 0);
        bool distinct = true;
        for (long long x = t - n + 1; x <= t; ++x) {
          const int u = success_user[x];
          if (u < 0 || seen[u]) {
            distinct = false;
            break;
          }
          seen[u] = 1;
        }
        if (distinct) declared = t;
      }
      if (declared > 0 && t - declared >= verify) break;
    }
    TdmaRun run;
    run.seed = seed;
    if (declared > 0) {
      long long s = cand;  // extend to the true start of the rotation
      while (s > 1) {
        const long long c = s - 1;
        if (success_user[c] < 0) break;
        if (c + n <= last_slot && success_user[c + n] != success_user[c]) break;
        s = c;
      }
      run.convergence_slot = s;
      run.post_throughput = 1.0;
      run.post_period = n;
    }
    runs.push_back(run);
  }
  return runs;
}

std::vector<EstimatedNPoint> simulate_estimated_n(int estimate_lo,
                                                  int estimate_hi,
                                                  double target_tau,
                                                  const SimConfig& base,
                                                  FeedbackKind kind) {
  if (estimate_lo < 2 || estimate_hi < estimate_lo)
    throw ConfigError("estimates must satisfy 2 <= lo <= hi");
  validate(base);
  const auto rules = design_rules(estimate_lo, estimate_hi, target_tau, kind);
  std::vector<EstimatedNPoint> points;
  for (size_t i = 0; i < rules.size(); ++i) {
    const int est = estimate_lo + static_cast<int>(i);
    SimConfig config = base;
    config.estimated_n = est;
    config.seed = SplitMix64(base.seed ^ static_cast<uint64_t>(est)).next();
    const SimResult r = simulate(rules[i].protocol, config);
    points.push_back(
        {est, r.throughput_total, r.average_delay, rules[i].converged});
  }
  return points;
}

EstimateUpdateResult simulate_estimate_updates(int initial_estimate,
                                               int estimate_lo, int estimate_hi,
                                               double target_tau,
                                               const SimConfig& base,
                                               const EstimateUpdateConfig& update,
                                               FeedbackKind kind) {
  if (estimate_lo < 2 || estimate_hi < estimate_lo)
    throw ConfigError("estimates must satisfy 2 <= lo <= hi");
  if (initial_estimate < estimate_lo || initial_estimate > estimate_hi)
    throw ConfigError("initial estimate outside the range");
  if (update.update_period < 1) throw ConfigError("update period must be >= 1");
  if (!(update.threshold >= 0.0)) throw ConfigError("threshold must be >= 0");
  validate(base);

  // All designed rules must share the protocol domain so a user's history
  // survives a switch.
  std::vector<Protocol> rules;
  for (auto& designed :
       design_rules(estimate_lo, estimate_hi, target_tau, kind))
    rules.push_back(std::move(designed.protocol));
  const auto reference = realizable_pairs(rules.front().feedback);
  for (const auto& rule : rules) {
    const auto pairs = realizable_pairs(rule.feedback);
    bool same = pairs.size() == reference.size();
    for (size_t i = 0; same && i < pairs.size(); ++i)
      same = same_pair(pairs[i], reference[i]);
    if (!same)
      throw ConfigError(
          "estimates map to different protocol domains; raise estimate_lo");
  }

  const int n = base.n_users;
  const long long T = base.slots;
  SlotEngine engine(rules.front(), n, base.error_epsilon, base.seed);
  int est = initial_estimate;

  EstimateUpdateResult result;
  long long window_succ = 0, successes = 0, bnd = 0;
  double tri = 0.0;
  std::vector<long long> last(n, 0);
  for (long long t = 1; t <= T; ++t) {
    const int su = engine.step(rules[est - estimate_lo].probabilities.data()).second;
    if (su >= 0) {
      ++successes;
      ++window_succ;
      const long long g = t - last[su];
      tri += 0.5 * static_cast<double>(g) * static_cast<double>(g + 1);
      bnd += g;
      last[su] = t;
    }
    if (t % update.update_period == 0) {
      const double w =
          static_cast<double>(window_succ) / update.update_period;
      result.window_tau.push_back(w);
      if (w < target_tau - update.threshold)
        est = std::min(est + 1, estimate_hi);
      else if (w > target_tau + update.threshold)
        est = std::max(est - 1, estimate_lo);
      result.estimates.push_back(est);
      window_succ = 0;
    }
  }
  result.tau = static_cast<double>(successes) / T;
  result.delay = bnd > 0 ? tri / bnd - 0.5 : 0.5 * static_cast<double>(T);
  return result;
}

JoinLeaveResult simulate_join_leave(int initial_n, int max_n,
                                    std::vector<JoinLeaveEvent> events,
                                    long long slots, uint64_t seed) {
  if (max_n < 1) throw ConfigError("max_n must be >= 1");
  if (initial_n < 1 || initial_n > max_n)
    throw ConfigError("initial_n must lie in [1, max_n]");
  if (slots < 1) throw ConfigError("slots must be >= 1");
  std::stable_sort(events.begin(), events.end(),
                   [](const JoinLeaveEvent& a, const JoinLeaveEvent& b) {
                     return a.slot < b.slot;
                   });
  {
    std::vector<uint8_t> planned(max_n, 0);
    for (int i = 0; i < initial_n; ++i) planned[i] = 1;
    int count = initial_n;
    for (const auto& e : events) {
      if (e.user < 0 || e.user >= max_n)
        throw ConfigError("event references an absent user");
      if (e.slot < 1 || e.slot > slots)
        throw ConfigError("event slot outside the run");
      if (e.join) {
        if (planned[e.user]) throw ConfigError("join of an already active user");
        planned[e.user] = 1;
        if (++count > max_n) throw ConfigError("joins exceed max_n users");
      } else {
        if (!planned[e.user]) throw ConfigError("leave of an inactive user");
        planned[e.user] = 0;
        --count;
      }
    }
  }

  SplitMix64 master(seed);
  std::vector<SplitMix64> rngs;
  rngs.reserve(max_n);
  for (int i = 0; i < max_n; ++i) rngs.emplace_back(master.next());

  std::vector<uint8_t> active(max_n, 0), immediate(max_n, 0);
  for (int i = 0; i < initial_n; ++i) active[i] = 1;
  int n_active = initial_n;
  int frame_len = max_n;
  int pos = 0;
  std::vector<int> owner(max_n, -1);     // by frame position
  std::vector<int> reserved(max_n, -1);  // by user
  bool frame_collision = false;
  int frame_successes = 0;

  JoinLeaveResult result;
  auto sample = [&](long long slot) {
    result.frames.push_back({slot, frame_len, n_active});
  };
  sample(0);

  size_t next_event = 0;
  for (long long t = 1; t <= slots; ++t) {
    while (next_event < events.size() && events[next_event].slot == t) {
      const auto& e = events[next_event++];
      if (e.join) {
        active[e.user] = 1;
        immediate[e.user] = 1;  // transmit every slot until a slot is won
        ++n_active;
      } else {
        active[e.user] = 0;
        immediate[e.user] = 0;
        reserved[e.user] = -1;  // others still believe the slot is taken
        --n_active;
      }
    }

    int believed_owned = 0;
    for (int p = 0; p < frame_len; ++p)
      if (owner[p] >= 0) ++believed_owned;
    const double p_contend = 1.0 / std::max(1, frame_len - believed_owned);

    int k = 0, su = -1;
    for (int u = 0; u < max_n; ++u) {
      if (!active[u]) continue;
      bool tr;
      if (immediate[u])
        tr = true;
      else if (reserved[u] == pos)
        tr = true;
      else if (reserved[u] >= 0)
        tr = false;
      else if (owner[pos] < 0)
        tr = rngs[u].uniform() < p_contend;
      else
        tr = false;
      if (tr) {
        ++k;
        su = u;
      }
    }
    if (k != 1) su = -1;

    if (k >= 2 && owner[pos] >= 0) {
      // A collision where a reservation should be: the signal to renegotiate.
      ++result.reserved_collisions;
      std::fill(owner.begin(), owner.end(), -1);
      std::fill(reserved.begin(), reserved.end(), -1);
      frame_len = max_n;
      pos = 0;
      frame_collision = false;
      frame_successes = 0;
      sample(t);
      continue;
    }
    if (k >= 2) frame_collision = true;
    if (su >= 0) {
      owner[pos] = su;  // win, renewal, or takeover of a departed user's slot
      reserved[su] = pos;
      immediate[su] = 0;
      ++frame_successes;
    }

    if (++pos >= frame_len) {
      if (!frame_collision && frame_successes == n_active && n_active > 0) {
        std::vector<int> keep;  // deleting the empty slots keeps owner order
        for (int p = 0; p < frame_len; ++p)
          if (owner[p] >= 0 && active[owner[p]] && reserved[owner[p]] == p)
            keep.push_back(owner[p]);
        if (static_cast<int>(keep.size()) == n_active) {
          std::fill(owner.begin(), owner.end(), -1);
          std::fill(reserved.begin(), reserved.end(), -1);
          for (int p = 0; p < n_active; ++p) {
            owner[p] = keep[p];
            reserved[keep[p]] = p;
          }
          if (n_active != frame_len) {
            frame_len = n_active;
            sample(t);
          }
        }
      }
      pos = 0;
      frame_collision = false;
      frame_successes = 0;
    }
  }
  result.final_frame_length = frame_len;
  return result;
}

std::string sim_csv_header() { return "epsilon,tau,delay"; }

std::string sim_csv_row(double epsilon, const SimResult& result) {
  return fmt(epsilon) + "," + fmt(result.throughput_total) + "," +
         fmt(result.average_delay);
}

}  // namespace macmem
