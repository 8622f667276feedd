#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "macmem/chain.hpp"
#include "macmem/protocols.hpp"

using namespace macmem;

namespace {

Protocol replicated_memory2(const Protocol& base) {
  // Same behavior with 2-slot memory: the rule ignores the older slot.
  const auto pairs = realizable_pairs(base.feedback);
  const int b = static_cast<int>(pairs.size());
  std::vector<double> probs(static_cast<size_t>(b) * b);
  for (int old = 0; old < b; ++old)
    for (int recent = 0; recent < b; ++recent)
      probs[static_cast<size_t>(old) * b + recent] = base.probabilities[recent];
  return make_protocol(SystemConfig{base.config.n_users, 2},
                       base.feedback.kind, base.name + "-m2", probs);
}

}  // namespace

TEST_CASE("reduced state indexing round-trips") {
  const int n = 5;
  for (int i = 0; i < 2 * n; ++i) {
    const auto s = reduced_state_at(i, n);
    CHECK(reduced_state_index(s, n) == i);
  }
  CHECK(reduced_state_index({Action::Transmit, 1}, n) == 0);
  CHECK(reduced_state_index({Action::Transmit, n}, n) == n - 1);
  CHECK(reduced_state_index({Action::Wait, 0}, n) == n);
  CHECK(reduced_state_index({Action::Wait, n - 1}, n) == 2 * n - 1);
}

TEST_CASE("reduced chain rows are stochastic") {
  const auto p = fo_preset();
  const auto chain = build_reduced_chain(p);
  REQUIRE(chain.matrix.rows() == 10);
  REQUIRE(chain.matrix.cols() == 10);
  for (int r = 0; r < chain.matrix.rows(); ++r) {
    CHECK(chain.matrix.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(chain.matrix.row(r).minCoeff() >= 0.0);
  }
  CHECK_THROWS_AS(build_reduced_chain(theorem1_protocol(3)), ConfigError);
}

TEST_CASE("memoryless metrics match the closed form") {
  // p = 1/5, N = 5: tau = N p (1-p)^(N-1), and the per-user success process is
  // Bernoulli with rate q = p (1-p)^(N-1), so gaps are geometric and the
  // residual-time delay is exactly 1/q - 0.5.
  const double p = 0.2;
  const int n = 5;
  const auto m = metrics_reduced(memoryless(p, n));
  const double q = p * std::pow(1.0 - p, n - 1);
  CHECK(m.tau_total == doctest::Approx(n * q).epsilon(1e-12));
  CHECK(m.tau_total == doctest::Approx(0.4096).epsilon(1e-12));
  CHECK(m.interpacket == doctest::Approx(1.0 / q).epsilon(1e-10));
  // Geometric inter-success times: D = E[L(L+1)/2]/E[L] - 0.5 = 1/q - 0.5.
  CHECK(m.delay == doctest::Approx(1.0 / q - 0.5).epsilon(1e-10));
  CHECK(m.delay == doctest::Approx(11.70703125).epsilon(1e-10));
  CHECK(m.p0 == doctest::Approx(std::pow(1.0 - p, n)).epsilon(1e-12));
  CHECK(m.p1 == doctest::Approx(n * q).epsilon(1e-12));
  CHECK(m.p0 + m.p1 + m.p2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("delay-efficient preset metrics") {
  const auto m = metrics_reduced(fo_preset());
  CHECK(m.tau_total == doctest::Approx(0.792).epsilon(1e-9));
  CHECK(m.delay == doctest::Approx(41.5934646204).epsilon(1e-9));
  CHECK(m.interpacket == doctest::Approx(1.0 / m.tau_user).epsilon(1e-9));
  CHECK(m.p0 == doctest::Approx(0.0696835644).epsilon(1e-7));
  CHECK(m.p2 == doctest::Approx(0.1383164356).epsilon(1e-7));
  CHECK(m.stationary.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.stationary.minCoeff() >= -1e-15);
}

TEST_CASE("stationary distribution solves a hand-checkable chain") {
  Eigen::MatrixXd q(2, 2);
  q << 0.9, 0.1, 0.3, 0.7;
  const auto v = stationary_distribution(q);
  CHECK(v(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(v(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("first passage times on a two-state chain") {
  // From state 0, hit state 1: d0 = 1/p with p = 0.25.
  Eigen::MatrixXd q(2, 2);
  q << 0.75, 0.25, 0.5, 0.5;
  const auto d = first_passage_times(q, {1});
  CHECK(d(0) == doctest::Approx(4.0).epsilon(1e-12));
  // For a state already in the target this is the return time: 1 + 0.5 d0,
  // which is also 1/pi(1) by Kac's formula.
  CHECK(d(1) == doctest::Approx(3.0).epsilon(1e-12));
  const auto v = stationary_distribution(q);
  CHECK(d(1) == doctest::Approx(1.0 / v(1)).epsilon(1e-12));

  Eigen::VectorXd costs(2);
  costs << 2.0, 5.0;
  const auto dc = first_passage_times(q, {1}, costs);
  // dc0 = 2 + 0.75 dc0 => dc0 = 8; dc1 = 5 + 0.5 dc0 = 9.
  CHECK(dc(0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(dc(1) == doctest::Approx(9.0).epsilon(1e-12));

  // Unreachable target: identity transition matrix leaves (I - Q0) singular.
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(first_passage_times(id, {1}), NumericalError);
}

TEST_CASE("reducible chain is reported with an absorbing class") {
  // N = 2, f(T,1) = 1, f(W,0) = f(W,1) = 0 under ternary feedback: a user who
  // just succeeded transmits forever while the other never does, and the
  // mirrored pair of lock-in states cannot communicate.
  const auto p = one_slot({0.0, 0.0, 1.0, 0.5}, FeedbackKind::Ternary, 2);
  REQUIRE(p.probabilities.size() == 4);
  try {
    metrics_reduced(p);
    FAIL("expected ReducibleChainError");
  } catch (const ReducibleChainError& e) {
    CHECK(!e.absorbing_class.empty());
    CHECK(std::string(e.what()).find("absorbing") != std::string::npos);
  }
}

TEST_CASE("general chain agrees with the reduced chain") {
  const auto base = fo_preset();
  const auto reduced = metrics_reduced(base);
  const auto general = metrics_general(base);
  CHECK(general.tau_total == doctest::Approx(reduced.tau_total).epsilon(1e-9));
  CHECK(general.delay == doctest::Approx(reduced.delay).epsilon(1e-9));
  CHECK(general.p0 == doctest::Approx(reduced.p0).epsilon(1e-9));
  CHECK(general.p2 == doctest::Approx(reduced.p2).epsilon(1e-9));

  const auto wide = metrics_general(replicated_memory2(memoryless(0.3, 3)));
  const auto narrow = metrics_reduced(memoryless(0.3, 3));
  CHECK(wide.tau_total == doctest::Approx(narrow.tau_total).epsilon(1e-9));
  CHECK(wide.delay == doctest::Approx(narrow.delay).epsilon(1e-9));
}

TEST_CASE("general chain refuses oversized state spaces") {
  GeneralChainOptions opts;
  opts.max_states = 64;
  // N*M = 12 fits the hard rule but 2^12 states exceed the configured cap.
  CHECK_THROWS_AS(build_general_chain(theorem1_protocol(4), opts), ConfigError);
  // N*M = 30 is refused outright.
  CHECK_THROWS_AS(metrics_general(theorem1_protocol(6)), ConfigError);
}

TEST_CASE("cesaro fallback handles the converging-to-TDMA rule") {
  // The rule's chain is reducible by design (it locks into a rotation), so the
  // strict path throws and the averaged path reports perfect throughput.
  CHECK_THROWS_AS(metrics_general(theorem1_protocol(3)), ReducibleChainError);
  GeneralChainOptions opts;
  opts.use_cesaro = true;
  const auto m = metrics_general(theorem1_protocol(3), opts);
  CHECK(m.tau_total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.delay == doctest::Approx(1.5).epsilon(1e-9));  // N/2 for a rotation
}

TEST_CASE("all-transmit protocol has zero throughput and infinite delay") {
  const auto m = metrics_reduced(memoryless(1.0, 3));
  CHECK(m.tau_total == 0.0);
  CHECK(std::isinf(m.delay));
}

TEST_CASE("delay equals the renewal-reward form") {
  // D = (1 + kappa^2) / 2 * interpacket exactly, with kappa the coefficient of
  // variation of the inter-success gap. Memoryless gaps are geometric, so
  // kappa^2 = 1 - q with q the per-slot success rate.
  for (const double p : {0.15, 0.2, 0.35}) {
    const auto m = metrics_reduced(memoryless(p, 4));
    const double q = 1.0 / m.interpacket;
    const double kappa = std::sqrt(1.0 - q);
    CHECK(pk_decompose(m, kappa) == doctest::Approx(m.delay).epsilon(1e-9));
  }
}

TEST_CASE("matrix-level entry points match the protocol path") {
  const auto proto = fo_preset();
  const int n = proto.config.n_users;
  // Canonical ternary order: (W,0),(W,1),(W,e),(T,1),(T,e).
  const auto& x = proto.probabilities;
  std::vector<double> ft(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> fw(static_cast<size_t>(n), 0.0);
  ft[1] = x[3];
  for (int k = 2; k <= n; ++k) ft[static_cast<size_t>(k)] = x[4];
  fw[0] = x[0];
  fw[1] = x[1];
  for (int k = 2; k < n; ++k) fw[static_cast<size_t>(k)] = x[2];
  const auto matrix = reduced_matrix(ft, fw, n);
  const auto direct = metrics_from_reduced_matrix(matrix, n);
  const auto via_protocol = metrics_reduced(proto);
  CHECK(direct.tau_total ==
        doctest::Approx(via_protocol.tau_total).epsilon(1e-12));
  CHECK(direct.delay == doctest::Approx(via_protocol.delay).epsilon(1e-12));
}

TEST_CASE("throughput identity holds") {
  for (const double p : {0.1, 0.25, 0.4}) {
    const auto m = metrics_reduced(memoryless(p, 5));
    CHECK(m.tau_total == doctest::Approx(5 * m.tau_user).epsilon(1e-12));
    CHECK(m.p1 == doctest::Approx(m.tau_total).epsilon(1e-12));
    CHECK(m.interpacket * m.tau_user == doctest::Approx(1.0).epsilon(1e-10));
  }
}
