#pragma once

#include <string>

#include "macmem/chain.hpp"
#include "macmem/core.hpp"
#include "macmem/optimize.hpp"

namespace macmem {

// Heterogeneous slot durations: idle, success, and collision slots take
// different amounts of time, and a success carries mean_payload of useful
// payload time. All values in the same time unit (microseconds for the
// built-in preset).
struct WlanTiming {
  double sigma0 = 9.0;
  double sigma1 = 419.56;
  double sigma2 = 400.48;
  double mean_payload = 341.33;
};

void validate(const WlanTiming& timing);

// 802.11a PHY mode 8 with 1000-byte payloads, basic access.
WlanTiming preset_80211a_mode8();

// Named presets: "80211a-mode8" and "unit" (all durations 1 slot).
WlanTiming timing_preset(const std::string& name);

// JSON file with fields sigma0, sigma1, sigma2, mean_payload.
WlanTiming load_timing(const std::string& path);

// E[P] / sigma1, the throughput every protocol stays below; approached as the
// success fraction tends to 1.
double wlan_throughput_bound(const WlanTiming& timing);

// Slotted analysis re-weighted by per-state slot durations: tau is payload
// time over elapsed time, delay and interpacket are in time units.
Metrics wlan_metrics(const Protocol& protocol, const WlanTiming& timing);

// Closed forms for the constant-probability protocol.
Metrics wlan_memoryless(double p, int n_users, const WlanTiming& timing);

// (tau, delay) over 1-slot protocol vectors, for boundary sweeps in the
// timed model.
Evaluator wlan_evaluator(FeedbackKind kind, int n_users,
                         const WlanTiming& timing);

struct DcfParams {
  int cw_min = 16;
  int cw_max = 1024;  // must be cw_min * 2^m
  int n_users = 1;
};

void validate(const DcfParams& params);

// Per-user transmission probability of saturated binary-exponential-backoff
// DCF, from Bianchi's fixed point between the transmission probability and
// the conditional collision probability, solved by bisection.
double dcf_probability(const DcfParams& params);

}  // namespace macmem
