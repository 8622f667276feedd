#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "macmem/chain.hpp"
#include "macmem/core.hpp"
#include "macmem/optimize.hpp"
#include "macmem/protocols.hpp"
#include "macmem/rng.hpp"
#include "macmem/sim.hpp"
#include "macmem/wlan.hpp"

namespace fs = std::filesystem;
using namespace macmem;

namespace {

constexpr const char* kVersion = "1.0.0";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& text) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (...) {
    used = 0;
  }
  if (text.empty() || used != text.size())
    throw ConfigError("bad number: '" + text + "'");
  return v;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part));
  return out;
}

// Run bookkeeping: every CSV gets a manifest sidecar so a rerun is verifiable
// by command line and config hash.
struct Artifacts {
  std::string command;
  std::vector<uint64_t> seeds;
  fs::path out_dir;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  void write_atomic(const fs::path& path, const std::string& content) const {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw ConfigError("cannot write " + tmp.string());
      out << content;
    }
    fs::rename(tmp, path);
  }

  void write_csv(const std::string& filename, std::string content,
                 const std::vector<std::string>& extra_outputs = {}) const {
    if (content.empty() || content.back() != '\n') content += '\n';
    const fs::path csv = out_dir / filename;
    write_atomic(csv, content);

    nlohmann::json manifest;
    manifest["command"] = command;
    manifest["seeds"] = seeds;
    manifest["config_hash"] = fnv1a_hex(std::string(kVersion) + "|" + command);
    std::vector<std::string> outputs = {csv.string()};
    outputs.insert(outputs.end(), extra_outputs.begin(), extra_outputs.end());
    manifest["outputs"] = outputs;
    manifest["version"] = kVersion;
    manifest["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    write_atomic(csv.string() + ".manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << csv.string() << "\n";
  }
};

Protocol parse_protocol(const std::string& spec, FeedbackKind kind, int n) {
  if (!spec.empty() && spec[0] == '@') return load_protocol(spec.substr(1));
  if (spec == "fo") return fo_preset();
  if (spec == "theorem1") return theorem1_protocol(n);
  if (spec == "reservation") return reservation_protocol(n);
  const auto colon = spec.find(':');
  const std::string head = spec.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (head == "memoryless") return memoryless(parse_double(arg), n);
  if (head == "two-state") return two_state_equivalent(parse_double(arg), n);
  if (head == "one-slot") return one_slot(parse_double_list(arg), kind, n);
  if (head == "dcf") {
    DcfParams params{16, 1024, n};
    if (!arg.empty()) {
      const auto parts = split(arg, ',');
      if (parts.size() != 2)
        throw ConfigError("dcf spec takes cw_min,cw_max");
      params.cw_min = static_cast<int>(parse_double(parts[0]));
      params.cw_max = static_cast<int>(parse_double(parts[1]));
    }
    auto p = memoryless(dcf_probability(params), n);
    p.name = "dcf(" + std::to_string(params.cw_min) + "," +
             std::to_string(params.cw_max) + ")";
    return p;
  }
  throw ConfigError(
      "unknown protocol spec '" + spec +
      "' (expected memoryless:<p>, two-state:<eta>, one-slot:<p1,...>, "
      "fo, theorem1, reservation, dcf[:<cwmin>,<cwmax>], or @file.json)");
}

WlanTiming parse_timing(const std::string& spec) {
  if (!spec.empty() && spec[0] == '@') return load_timing(spec.substr(1));
  return timing_preset(spec);
}

std::vector<double> decreasing_grid(double from, double to, double step) {
  if (!(step > 0.0)) throw ConfigError("grid step must be positive");
  if (!(from > to)) throw ConfigError("grid must run downward");
  const int count = static_cast<int>(std::lround((from - to) / step)) + 1;
  std::vector<double> grid(count);
  for (int i = 0; i < count; ++i) grid[i] = from - i * step;
  return grid;
}

std::string stem_of(const std::string& filename) {
  const fs::path p(filename);
  return (p.parent_path() / p.stem()).string();
}

// ---- analyze ----

struct AnalyzeOpts {
  std::string protocol = "fo";
  int n = 5;
  std::string feedback = "ternary";
  std::string wlan;
  std::string output = "analyze.csv";
};

void run_analyze(const AnalyzeOpts& o, const Artifacts& artifacts) {
  const Protocol p =
      parse_protocol(o.protocol, feedback_kind_from_string(o.feedback), o.n);
  Metrics m;
  if (!o.wlan.empty()) {
    m = wlan_metrics(p, parse_timing(o.wlan));
  } else if (p.config.memory_slots == 1) {
    m = metrics_reduced(p);
  } else {
    m = metrics_general(p);
  }
  artifacts.write_csv(o.output,
                      metrics_csv_header() + "\n" + metrics_csv_row(p, m));
}

// ---- boundary ----

struct BoundaryOpts {
  int n = 5;
  std::string feedback = "ternary";
  std::string grid;  // fig2 | fig5 | fig7
  std::string taus;  // explicit decreasing list
  std::string wlan;
  uint64_t seed = 1;
  int cloud = 0;
  double utility_weight = 0.0;
  std::string output = "boundary.csv";
};

void run_boundary(const BoundaryOpts& o, Artifacts& artifacts) {
  artifacts.seeds = {o.seed};
  std::string wlan = o.wlan;
  std::vector<double> grid;
  if (o.grid == "fig2") {
    grid = decreasing_grid(0.99, 0.01, 0.01);
  } else if (o.grid == "fig5") {
    grid = decreasing_grid(0.99, 0.01, 0.01);
  } else if (o.grid == "fig7") {
    grid = decreasing_grid(0.81, 0.01, 0.01);
    if (wlan.empty()) wlan = "80211a-mode8";
  } else if (!o.grid.empty()) {
    throw ConfigError("unknown grid preset: " + o.grid);
  } else if (!o.taus.empty()) {
    grid = parse_double_list(o.taus);
  } else {
    grid = decreasing_grid(0.99, 0.01, 0.01);
  }

  std::vector<FeedbackKind> kinds;
  if (o.grid == "fig5") {
    kinds = {FeedbackKind::None,    FeedbackKind::SF,
             FeedbackKind::CNC,     FeedbackKind::ENE,
             FeedbackKind::Ternary, FeedbackKind::NPlus1Ary};
  } else {
    kinds = {feedback_kind_from_string(o.feedback)};
  }

  for (const FeedbackKind kind : kinds) {
    const Evaluator evaluate = wlan.empty()
                                   ? slotted_evaluator(kind, o.n)
                                   : wlan_evaluator(kind, o.n, parse_timing(wlan));
    const auto points = boundary_sweep(grid, evaluate, kind, o.n, o.seed);
    std::string csv = boundary_csv_header(kind, o.n) + "\n";
    for (const auto& point : points) csv += boundary_csv_row(point) + "\n";
    const std::string filename =
        kinds.size() > 1 ? stem_of(o.output) + "_" + to_string(kind) + ".csv"
                         : o.output;
    artifacts.write_csv(filename, csv);
    if (o.utility_weight > 0.0) {
      const auto [index, utility] = best_by_utility(points, o.utility_weight);
      if (index < 0) {
        std::cout << to_string(kind) << ": no converged point\n";
      } else {
        std::cout << to_string(kind) << ": best utility " << fmt(utility)
                  << " at tau=" << fmt(points[index].achieved_tau)
                  << " delay=" << fmt(points[index].delay) << "\n";
      }
    }
  }
  if (o.cloud > 0) {
    const FeedbackKind kind = feedback_kind_from_string(o.feedback);
    const auto cloud = random_protocol_cloud(o.cloud, o.seed, kind, o.n);
    std::string csv = cloud_csv_header() + "\n";
    for (const auto& point : cloud) csv += cloud_csv_row(point) + "\n";
    artifacts.write_csv(stem_of(o.output) + "_cloud.csv", csv);
  }
}

// ---- simulate ----

struct SimulateOpts {
  std::string protocol = "fo";
  int n = 5;
  std::string feedback = "ternary";
  long long slots = 100000;
  uint64_t seed = 1;
  double epsilon = 0.0;
  int estimated_n = 0;
  std::string trace;
  std::string output = "simulate.csv";
};

void run_simulate(const SimulateOpts& o, Artifacts& artifacts) {
  artifacts.seeds = {o.seed};
  const int build_n = o.estimated_n > 0 ? o.estimated_n : o.n;
  const Protocol p = parse_protocol(
      o.protocol, feedback_kind_from_string(o.feedback), build_n);
  SimConfig config;
  config.slots = o.slots;
  config.seed = o.seed;
  config.error_epsilon = o.epsilon;
  config.n_users = o.n;
  if (o.estimated_n > 0) config.estimated_n = o.estimated_n;
  config.record_trace = !o.trace.empty();
  const SimResult result = simulate(p, config);

  std::vector<std::string> extra;
  if (!o.trace.empty()) {
    std::string text;
    for (const auto& line : result.trace) text += line + "\n";
    const fs::path path = artifacts.out_dir / o.trace;
    artifacts.write_atomic(path, text);
    extra.push_back(path.string());
  }
  artifacts.write_csv(o.output,
                      sim_csv_header() + "\n" + sim_csv_row(o.epsilon, result),
                      extra);
}

// ---- robustness (feedback-error batch) ----

struct RobustnessOpts {
  std::string protocol = "fo";
  int n = 5;
  std::string feedback = "ternary";
  long long slots = 100000;
  int runs = 10;
  uint64_t seed = 1;
  std::string epsilons = "0,0.01,0.02,0.03,0.05,0.07,0.1,0.2";
  std::string output = "robustness.csv";
};

void run_robustness(const RobustnessOpts& o, Artifacts& artifacts) {
  if (o.runs < 1) throw ConfigError("runs must be >= 1");
  const Protocol p =
      parse_protocol(o.protocol, feedback_kind_from_string(o.feedback), o.n);
  SplitMix64 master(o.seed);
  std::string csv = sim_csv_header() + "\n";
  for (const double epsilon : parse_double_list(o.epsilons)) {
    double tau = 0.0, delay = 0.0;
    for (int r = 0; r < o.runs; ++r) {
      SimConfig config;
      config.slots = o.slots;
      config.seed = master.next();
      config.error_epsilon = epsilon;
      config.n_users = o.n;
      artifacts.seeds.push_back(config.seed);
      const SimResult result = simulate(p, config);
      tau += result.throughput_total;
      delay += result.average_delay;
    }
    SimResult mean;
    mean.throughput_total = tau / o.runs;
    mean.average_delay = delay / o.runs;
    csv += sim_csv_row(epsilon, mean) + "\n";
  }
  artifacts.write_csv(o.output, csv);
}

// ---- tdma ----

struct TdmaOpts {
  int n = 5;
  std::string variant = "theorem1";
  int seeds = 1000;
  uint64_t seed = 1;
  long long horizon = 100000;
  std::string output = "tdma.csv";
};

void run_tdma(const TdmaOpts& o, Artifacts& artifacts) {
  if (o.seeds < 1) throw ConfigError("seeds must be >= 1");
  SplitMix64 master(o.seed);
  std::vector<uint64_t> seeds(o.seeds);
  for (auto& s : seeds) s = master.next();
  artifacts.seeds = seeds;
  const auto runs = simulate_tdma_convergence(
      o.n, tdma_variant_from_string(o.variant), seeds, o.horizon);

  std::string csv = "seed,converged,convergence_slot,post_throughput,post_period\n";
  long long converged = 0;
  double total_slot = 0.0;
  for (const auto& run : runs) {
    csv += std::to_string(run.seed) + ",";
    if (run.convergence_slot) {
      ++converged;
      total_slot += static_cast<double>(*run.convergence_slot);
      csv += "1," + std::to_string(*run.convergence_slot) + "," +
             fmt(run.post_throughput) + "," + std::to_string(run.post_period);
    } else {
      csv += "0,,,";
    }
    csv += "\n";
  }
  artifacts.write_csv(o.output, csv);
  std::cout << "converged " << converged << "/" << runs.size();
  if (converged > 0)
    std::cout << ", mean convergence slot "
              << fmt(total_slot / static_cast<double>(converged));
  std::cout << "\n";
}

// ---- compare (protocol families at one N) ----

struct CompareOpts {
  int n = 5;
  uint64_t seed = 1;
  std::string output = "compare.csv";
};

void run_compare(const CompareOpts& o, Artifacts& artifacts) {
  artifacts.seeds = {o.seed};
  std::string csv = "family,param,tau,delay\n";
  auto row = [&](const std::string& family, double param, double tau,
                 double delay) {
    csv += family + "," + fmt(param) + "," + fmt(tau) + "," + fmt(delay) + "\n";
  };
  for (int i = 1; i <= 100; ++i) {  // param is 1/eta, the fairness ratio
    const double x = i / 100.0;
    const Metrics m = metrics_reduced(two_state_equivalent(1.0 / x, o.n));
    row("two-state", x, m.tau_total, m.delay);
  }
  for (int i = 1; i <= 99; ++i) {
    const double p = i / 100.0;
    const Metrics m = metrics_reduced(memoryless(p, o.n));
    row("memoryless", p, m.tau_total, m.delay);
  }
  const auto boundary = boundary_sweep(decreasing_grid(0.55, 0.01, 0.01),
                                       FeedbackKind::None, o.n, o.seed);
  for (const auto& point : boundary)
    if (point.converged)
      row("one-slot", point.target_tau, point.achieved_tau, point.delay);
  row("tdma", o.n, 1.0, o.n / 2.0);
  artifacts.write_csv(o.output, csv);
}

// ---- estimate (unknown user count scenarios) ----

struct EstimateOpts {
  int actual_n = 10;
  int lo = 7;
  int hi = 13;
  double target = 0.9;
  long long slots = 100000;
  uint64_t seed = 1;
  std::string mode = "sweep";
  int initial = 13;
  long long update_period = 1000;
  double threshold = 0.02;
  std::string output = "estimate.csv";
};

void run_estimate(const EstimateOpts& o, Artifacts& artifacts) {
  artifacts.seeds = {o.seed};
  SimConfig base;
  base.slots = o.slots;
  base.seed = o.seed;
  base.n_users = o.actual_n;
  if (o.mode == "sweep") {
    const auto points = simulate_estimated_n(o.lo, o.hi, o.target, base);
    std::string csv = "estimated_n,tau,delay,optimizer_converged\n";
    for (const auto& p : points)
      csv += std::to_string(p.estimated_n) + "," + fmt(p.tau) + "," +
             fmt(p.delay) + "," + (p.optimizer_converged ? "1" : "0") + "\n";
    artifacts.write_csv(o.output, csv);
  } else if (o.mode == "update") {
    const auto result = simulate_estimate_updates(
        o.initial, o.lo, o.hi, o.target, base,
        {o.update_period, o.threshold});
    std::string csv = "update,estimate,window_tau\n";
    for (size_t i = 0; i < result.estimates.size(); ++i)
      csv += std::to_string(i + 1) + "," + std::to_string(result.estimates[i]) +
             "," + fmt(result.window_tau[i]) + "\n";
    artifacts.write_csv(o.output, csv);
    std::cout << "overall tau " << fmt(result.tau) << ", delay "
              << fmt(result.delay) << "\n";
  } else {
    throw ConfigError("mode must be sweep or update");
  }
}

// ---- joinleave ----

struct JoinLeaveOpts {
  int initial_n = 4;
  int max_n = 8;
  long long slots = 5000;
  uint64_t seed = 1;
  std::vector<std::string> joins;
  std::vector<std::string> leaves;
  std::string output = "joinleave.csv";
};

void run_joinleave(const JoinLeaveOpts& o, Artifacts& artifacts) {
  artifacts.seeds = {o.seed};
  std::vector<JoinLeaveEvent> events;
  auto parse_events = [&](const std::vector<std::string>& specs, bool join) {
    for (const auto& spec : specs) {
      const auto parts = split(spec, ':');
      if (parts.size() != 2)
        throw ConfigError("event takes slot:user, got '" + spec + "'");
      events.push_back({static_cast<long long>(parse_double(parts[0])), join,
                        static_cast<int>(parse_double(parts[1]))});
    }
  };
  parse_events(o.joins, true);
  parse_events(o.leaves, false);
  const auto result =
      simulate_join_leave(o.initial_n, o.max_n, events, o.slots, o.seed);
  std::string csv = "slot,frame_length,active_users\n";
  for (const auto& frame : result.frames)
    csv += std::to_string(frame.slot) + "," +
           std::to_string(frame.frame_length) + "," +
           std::to_string(frame.active_users) + "\n";
  artifacts.write_csv(o.output, csv);
  std::cout << "final frame length " << result.final_frame_length << ", "
            << result.reserved_collisions << " renegotiations\n";
}

}  // namespace

int main(int argc, char** argv) {
  Artifacts artifacts;
  for (int i = 0; i < argc; ++i)
    artifacts.command += std::string(i ? " " : "") + argv[i];
  const char* env_dir = std::getenv("MACMEM_OUT_DIR");
  std::string out_dir = env_dir ? env_dir : ".";

  CLI::App app{"slotted random-access protocols with memory: exact chain "
               "analysis, delay-efficiency boundaries, and simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("macmem ") + kVersion);
  app.add_option("--out-dir", out_dir,
                 "output directory (default $MACMEM_OUT_DIR or .)");

  AnalyzeOpts analyze;
  auto* cmd_analyze = app.add_subcommand(
      "analyze", "metrics of one protocol (CSV row)");
  cmd_analyze->add_option("--protocol", analyze.protocol, "protocol spec");
  cmd_analyze->add_option("--n", analyze.n, "number of users");
  cmd_analyze->add_option("--feedback", analyze.feedback, "feedback kind");
  cmd_analyze->add_option("--wlan", analyze.wlan,
                          "timing preset or @file for the timed model");
  cmd_analyze->add_option("-o,--output", analyze.output, "CSV filename");

  BoundaryOpts boundary;
  auto* cmd_boundary = app.add_subcommand(
      "boundary", "delay-efficiency boundary sweep (CSV)");
  cmd_boundary->add_option("--n", boundary.n, "number of users");
  cmd_boundary->add_option("--feedback", boundary.feedback, "feedback kind");
  cmd_boundary->add_option("--grid", boundary.grid,
                           "grid preset: fig2, fig5 (all kinds), fig7 (timed)");
  cmd_boundary->add_option("--tau", boundary.taus,
                           "explicit decreasing target list");
  cmd_boundary->add_option("--wlan", boundary.wlan, "timing preset or @file");
  cmd_boundary->add_option("--seed", boundary.seed, "solver restart seed");
  cmd_boundary->add_option("--cloud", boundary.cloud,
                           "also sample this many random protocols");
  cmd_boundary->add_option("--utility-weight", boundary.utility_weight,
                           "report the best point under "
                           "U = -max(w (1 - tau), delay)");
  cmd_boundary->add_option("-o,--output", boundary.output, "CSV filename");

  SimulateOpts simulate;
  auto* cmd_simulate = app.add_subcommand(
      "simulate", "one seeded Monte Carlo run (CSV)");
  cmd_simulate->add_option("--protocol", simulate.protocol, "protocol spec");
  cmd_simulate->add_option("--n", simulate.n, "number of users");
  cmd_simulate->add_option("--feedback", simulate.feedback, "feedback kind");
  cmd_simulate->add_option("--slots", simulate.slots, "horizon in slots");
  cmd_simulate->add_option("--seed", simulate.seed, "RNG seed");
  cmd_simulate->add_option("--epsilon", simulate.epsilon,
                           "channel feedback error probability");
  cmd_simulate->add_option("--estimated-n", simulate.estimated_n,
                           "build the rule for this user count instead of --n");
  cmd_simulate->add_option("--trace", simulate.trace,
                           "also write a per-slot outcome log to this file");
  cmd_simulate->add_option("-o,--output", simulate.output, "CSV filename");

  RobustnessOpts robustness;
  auto* cmd_robustness = app.add_subcommand(
      "robustness", "throughput/delay vs feedback error rate (CSV)");
  cmd_robustness->add_option("--protocol", robustness.protocol, "protocol spec");
  cmd_robustness->add_option("--n", robustness.n, "number of users");
  cmd_robustness->add_option("--feedback", robustness.feedback, "feedback kind");
  cmd_robustness->add_option("--slots", robustness.slots, "horizon per run");
  cmd_robustness->add_option("--runs", robustness.runs, "runs per point");
  cmd_robustness->add_option("--seed", robustness.seed, "base seed");
  cmd_robustness->add_option("--epsilons", robustness.epsilons,
                             "comma-separated error probabilities");
  cmd_robustness->add_option("-o,--output", robustness.output, "CSV filename");

  TdmaOpts tdma;
  auto* cmd_tdma = app.add_subcommand(
      "tdma", "convergence statistics of the TDMA-forming rules (CSV)");
  cmd_tdma->add_option("--n", tdma.n, "number of users");
  cmd_tdma->add_option("--variant", tdma.variant, "theorem1 or reservation");
  cmd_tdma->add_option("--seeds", tdma.seeds, "number of seeds");
  cmd_tdma->add_option("--seed", tdma.seed, "seed-stream base");
  cmd_tdma->add_option("--horizon", tdma.horizon, "horizon in slots");
  cmd_tdma->add_option("-o,--output", tdma.output, "CSV filename");

  CompareOpts compare;
  auto* cmd_compare = app.add_subcommand(
      "compare", "two-state vs memoryless vs 1-slot boundary vs TDMA (CSV)");
  cmd_compare->add_option("--n", compare.n, "number of users");
  cmd_compare->add_option("--seed", compare.seed, "solver restart seed");
  cmd_compare->add_option("-o,--output", compare.output, "CSV filename");

  EstimateOpts estimate;
  auto* cmd_estimate = app.add_subcommand(
      "estimate", "performance under an estimated user count (CSV)");
  cmd_estimate->add_option("--actual-n", estimate.actual_n, "actual users");
  cmd_estimate->add_option("--lo", estimate.lo, "lowest estimate");
  cmd_estimate->add_option("--hi", estimate.hi, "highest estimate");
  cmd_estimate->add_option("--target", estimate.target, "target throughput");
  cmd_estimate->add_option("--slots", estimate.slots, "horizon in slots");
  cmd_estimate->add_option("--seed", estimate.seed, "RNG seed");
  cmd_estimate->add_option("--mode", estimate.mode, "sweep or update");
  cmd_estimate->add_option("--initial", estimate.initial,
                           "starting estimate (update mode)");
  cmd_estimate->add_option("--update-period", estimate.update_period,
                           "slots between estimate updates");
  cmd_estimate->add_option("--threshold", estimate.threshold,
                           "dead band around the target");
  cmd_estimate->add_option("-o,--output", estimate.output, "CSV filename");

  JoinLeaveOpts joinleave;
  auto* cmd_joinleave = app.add_subcommand(
      "joinleave", "frame renegotiation with joining/leaving users (CSV)");
  cmd_joinleave->add_option("--initial-n", joinleave.initial_n,
                            "initially active users");
  cmd_joinleave->add_option("--max-n", joinleave.max_n, "maximum users");
  cmd_joinleave->add_option("--slots", joinleave.slots, "horizon in slots");
  cmd_joinleave->add_option("--seed", joinleave.seed, "RNG seed");
  cmd_joinleave->add_option("--join", joinleave.joins,
                            "join event slot:user (repeatable)");
  cmd_joinleave->add_option("--leave", joinleave.leaves,
                            "leave event slot:user (repeatable)");
  cmd_joinleave->add_option("-o,--output", joinleave.output, "CSV filename");

  try {
    app.parse(argc, argv);
    artifacts.out_dir = out_dir;
    if (cmd_analyze->parsed()) run_analyze(analyze, artifacts);
    if (cmd_boundary->parsed()) run_boundary(boundary, artifacts);
    if (cmd_simulate->parsed()) run_simulate(simulate, artifacts);
    if (cmd_robustness->parsed()) run_robustness(robustness, artifacts);
    if (cmd_tdma->parsed()) run_tdma(tdma, artifacts);
    if (cmd_compare->parsed()) run_compare(compare, artifacts);
    if (cmd_estimate->parsed()) run_estimate(estimate, artifacts);
    if (cmd_joinleave->parsed()) run_joinleave(joinleave, artifacts);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
