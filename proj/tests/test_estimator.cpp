#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fixtures.hpp"
#include "maxent/estimator.hpp"
#include "maxent/model.hpp"

using namespace maxent;

namespace {

// 2-context, 3-symbol, 2-feature instance used for the maximum-likelihood
// equivalence check. Feature 1 fires on (x,0), feature 2 on (x,1).
ParametersFile ml_parameters() {
  ParametersFile p;
  p.alphabet_size = 3;
  p.conditional.push_back({1, 1.0, 5.0 / 12.0});
  p.conditional.push_back({2, 1.0, 4.0 / 12.0});
  return p;
}

EventsFile ml_events() {
  EventsFile e;
  e.conditional.push_back({0, 0, 4, {1}});
  e.conditional.push_back({0, 1, 2, {2}});
  e.conditional.push_back({0, 2, 2, {}});
  e.conditional.push_back({1, 0, 1, {1}});
  e.conditional.push_back({1, 1, 2, {2}});
  e.conditional.push_back({1, 2, 1, {}});
  return e;
}

// Corpus negative log likelihood of the ml fixture at (lambda1, lambda2),
// written out directly; shares nothing with the library paths.
double ml_nll(double l1, double l2) {
  const double a1 = std::exp(l1);
  const double a2 = std::exp(l2);
  const double z = a1 + a2 + 1.0;
  double total = 0.0;
  total -= 4.0 * std::log(a1 / z);
  total -= 2.0 * std::log(a2 / z);
  total -= 2.0 * std::log(1.0 / z);
  total -= 1.0 * std::log(a1 / z);
  total -= 2.0 * std::log(a2 / z);
  total -= 1.0 * std::log(1.0 / z);
  return total;
}

// Coordinate ternary search; the likelihood is concave along each axis.
std::pair<double, double> ml_direct_maximum() {
  double l1 = 0.0;
  double l2 = 0.0;
  for (int round = 0; round < 200; ++round) {
    for (int axis = 0; axis < 2; ++axis) {
      double lo = (axis == 0 ? l1 : l2) - 5.0;
      double hi = (axis == 0 ? l1 : l2) + 5.0;
      for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        const double f1 = axis == 0 ? ml_nll(m1, l2) : ml_nll(l1, m1);
        const double f2 = axis == 0 ? ml_nll(m2, l2) : ml_nll(l1, m2);
        if (f1 < f2) {
          hi = m2;
        } else {
          lo = m1;
        }
      }
      (axis == 0 ? l1 : l2) = 0.5 * (lo + hi);
    }
  }
  return {l1, l2};
}

}  // namespace

TEST_CASE("summarize_empirical computes T, f(x), and empirical expectations") {
  const EmpiricalSummary s = summarize_empirical(fixtures::t1_events());
  CHECK(s.total_count == 4);
  CHECK(s.frequency(0) == 1.0);
  CHECK(s.target_of(1) == 0.25);

  EventsFile nary;
  nary.conditional.push_back({0, 0, 5, {1, 1}});
  const EmpiricalSummary s2 = summarize_empirical(nary);
  CHECK(s2.target_of(1) == 2.0);

  EventsFile empty;
  empty.conditional.push_back({0, 0, 0, {1}});
  CHECK_THROWS_MATCHES(summarize_empirical(empty), Error, Catch::Matchers::Predicate<Error>([](
      const Error& e) { return e.code() == ErrorCode::EmptyCorpus; }));
}

TEST_CASE("context frequencies sum to one") {
  fixtures::Rng rng(77);
  for (int i = 0; i < 20; ++i) {
    const auto [params, events] = fixtures::random_model_instance(rng, 16);
    const EmpiricalSummary s = summarize_empirical(events);
    double total = 0.0;
    for (const auto& [ctx, f] : s.contexts) {
      CHECK(f > 0.0);
      total += f;
    }
    CHECK(total == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("newton_update closed forms") {
  const NewtonResult linear = newton_update({{1, 0.5}}, 0.25);
  CHECK(linear.converged);
  CHECK(linear.beta == Catch::Approx(0.5).epsilon(1e-14));

  const NewtonResult square = newton_update({{2, 1.0}}, 4.0);
  CHECK(square.converged);
  CHECK(square.beta == Catch::Approx(2.0).epsilon(1e-12));

  const NewtonResult mixed = newton_update({{1, 0.5}, {2, 0.5}}, 1.0);
  CHECK(mixed.converged);
  CHECK(mixed.beta == Catch::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_MATCHES(newton_update({{0, 1.0}}, 0.5), Error, Catch::Matchers::Predicate<Error>([](
      const Error& e) { return e.code() == ErrorCode::NoSolution; }));
}

TEST_CASE("newton_update agrees with a bisection oracle") {
  fixtures::Rng rng(1234);
  for (int i = 0; i < 200; ++i) {
    std::map<std::uint64_t, double> coeffs;
    const int terms = static_cast<int>(fixtures::uniform(rng, 1, 4));
    for (int j = 0; j < terms; ++j) {
      coeffs[fixtures::uniform(rng, 1, 6)] += std::uniform_real_distribution<>(0.01, 2.0)(rng);
    }
    const double target = std::uniform_real_distribution<>(0.01, 5.0)(rng);
    const NewtonResult r = newton_update(coeffs, target);

    double lo = 0.0;
    double hi = 1.0;
    const auto h = [&](double b) {
      double s = -target;
      for (const auto& [k, c] : coeffs) {
        s += c * std::pow(b, static_cast<double>(k));
      }
      return s;
    };
    while (h(hi) < 0.0) {
      hi *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) < 0.0 ? lo : hi) = mid;
    }
    CHECK(r.beta == Catch::Approx(0.5 * (lo + hi)).epsilon(1e-9));
  }
}

TEST_CASE("model_expectations on T1") {
  const EventsFile events = fixtures::t1_events();
  const EmpiricalSummary summary = summarize_empirical(events);

  const Model uniform(fixtures::t1_parameters(), events);
  CHECK(model_expectations(uniform, summary, events).at(1) == Catch::Approx(0.5).epsilon(1e-14));

  const Model converged(fixtures::t1_parameters(1.0 / 3.0), events);
  CHECK(model_expectations(converged, summary, events).at(1) ==
        Catch::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("model_expectations matches the naive double sum") {
  fixtures::Rng rng(31337);
  for (int i = 0; i < 50; ++i) {
    const auto [params, events] = fixtures::random_model_instance(rng, 24);
    const Model model(params, events);
    const EmpiricalSummary summary = summarize_empirical(events);
    const auto fast = model_expectations(model, summary, events);
    const auto naive = fixtures::OracleModel::from(params, events).expectations(events);
    for (const auto& [idx, v] : naive) {
      CHECK(std::fabs(fast.at(idx) - v) <= 1e-10 * std::max(1.0, std::fabs(v)));
    }
  }
}

TEST_CASE("iis_step follows the auxiliary update equation on T1") {
  const EventsFile events = fixtures::t1_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  Model model(fixtures::t1_parameters(), events);

  // total activation is 1 on the only active pair, so the update is the
  // closed form a / m[g]: beta = 0.25 / 0.5.
  const Diagnostics d = iis_step(model, summary, events, {{1, 0.25}});
  CHECK(model.alpha(1) == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(d.distance == Catch::Approx(0.25).epsilon(1e-12));
  CHECK(d.update_norm == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(d.max_alpha == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("iis_step at a fixed point leaves the model unchanged") {
  const EventsFile events = fixtures::t1_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  Model model(fixtures::t1_parameters(), events);
  // target equals the uniform model's expectation
  const Diagnostics d = iis_step(model, summary, events, {{1, 0.5}});
  CHECK(d.update_norm == 0.0);
  CHECK(model.alpha(1) == 1.0);
}

TEST_CASE("iis_step rejects zero targets on active features") {
  const EventsFile events = fixtures::t1_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  Model model(fixtures::t1_parameters(), events);
  CHECK_THROWS_MATCHES(iis_step(model, summary, events, {{1, 0.0}}), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == ErrorCode::ZeroTarget; }));
}

TEST_CASE("codelength closed forms") {
  const EventsFile events = fixtures::t1_events();
  const Model uniform(fixtures::t1_parameters(), events);
  CHECK(codelength(uniform, events) == Catch::Approx(4.0 * std::log(2.0)).epsilon(1e-12));

  const Model converged(fixtures::t1_parameters(1.0 / 3.0), events);
  CHECK(codelength(converged, events) ==
        Catch::Approx(3.0 * std::log(4.0 / 3.0) + std::log(4.0)).epsilon(1e-12));

  // degenerate single-symbol alphabet: the only event is certain
  ParametersFile p;
  p.alphabet_size = 1;
  p.conditional.push_back({1, 1.0, 1.0});
  EventsFile e;
  e.conditional.push_back({0, 0, 1, {1}});
  const Model certain(p, e);
  CHECK(codelength(certain, e) == 0.0);
}

TEST_CASE("conditional_entropy closed forms") {
  const EventsFile events = fixtures::t1_events();
  const EmpiricalSummary summary = summarize_empirical(events);

  const Model uniform(fixtures::t1_parameters(), events);
  CHECK(conditional_entropy(uniform, summary) == Catch::Approx(std::log(2.0)).epsilon(1e-12));

  const Model converged(fixtures::t1_parameters(1.0 / 3.0), events);
  CHECK(conditional_entropy(converged, summary) ==
        Catch::Approx(-(0.75 * std::log(0.75) + 0.25 * std::log(0.25))).epsilon(1e-12));

  // near-deterministic model at the lambda clamp
  const Model spiked(fixtures::t1_parameters(std::exp(30.0)), events);
  CHECK(conditional_entropy(spiked, summary) <= 1e-11);
}

TEST_CASE("train reaches the T1 fixed point with a decreasing distance history") {
  const EventsFile events = fixtures::t1_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  const ParametersFile params = fixtures::t1_parameters();
  Model model(params, events);
  TrainConfig config;
  config.iterations = 50;
  const auto history = train(model, events, summary, targets_of(params), config);
  REQUIRE(history.size() == 50);
  CHECK(model.alpha(1) == Catch::Approx(1.0 / 3.0).epsilon(1e-10));
  const auto expectations = model_expectations(model, summary, events);
  CHECK(std::fabs(expectations.at(1) - 0.25) <= 1e-10);
  for (std::size_t i = 1; i < history.size(); ++i) {
    CHECK(history[i].distance <= history[i - 1].distance + 1e-9);
    CHECK(history[i].codelength <= history[i - 1].codelength + 1e-9);
    CHECK(history[i].update_norm <= history[i - 1].update_norm + 1e-9);
  }
  CHECK(history.back().distance <= 1e-10);
}

TEST_CASE("monotonic training stops when the codelength rises") {
  const EventsFile events = fixtures::inconsistent_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  const ParametersFile params = fixtures::inconsistent_parameters();
  Model model(params, events);
  TrainConfig config;
  config.iterations = 10;
  config.monotonic = true;
  const double initial = codelength(model, events);
  const auto history = train(model, events, summary, targets_of(params), config);
  CHECK(history.size() < config.iterations);
  double previous = initial;
  for (const Diagnostics& d : history) {
    CHECK(d.codelength <= previous);
    previous = d.codelength;
  }
}

TEST_CASE("zero-iteration training is a no-op") {
  const EventsFile events = fixtures::t1_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  const ParametersFile params = fixtures::t1_parameters();
  Model model(params, events);
  TrainConfig config;
  config.iterations = 0;
  const auto history = train(model, events, summary, targets_of(params), config);
  CHECK(history.empty());
  CHECK(model.alpha(1) == 1.0);
}

TEST_CASE("updates past the lambda clamp are capped and counted") {
  // a 1e14-symbol alphabet makes m[g] tiny, so the raw update would push
  // lambda past 30
  ParametersFile params;
  params.alphabet_size = 100000000000000ULL;
  params.conditional.push_back({1, 1.0, 1.0});
  EventsFile events;
  events.conditional.push_back({0, 1, 1, {1}});
  const EmpiricalSummary summary = summarize_empirical(events);
  Model model(params, events);
  const Diagnostics d = iis_step(model, summary, events, targets_of(params));
  CHECK(d.clamped_updates == 1);
  CHECK(model.alpha(1) == Catch::Approx(std::exp(30.0)).epsilon(1e-12));
  CHECK(d.update_norm == Catch::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("an exhausted root-solve budget is reported, not fatal") {
  const EventsFile events = fixtures::inconsistent_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  Model model(fixtures::inconsistent_parameters(), events);
  TrainConfig config;
  config.newton_max_steps = 1;  // starve the solver
  const Diagnostics d =
      iis_step(model, summary, events, targets_of(fixtures::inconsistent_parameters()), config);
  CHECK(d.nonconverged_updates > 0);
}

TEST_CASE("random empirical-target instances converge monotonically") {
  fixtures::Rng rng(8086);
  for (int i = 0; i < 8; ++i) {
    const auto [params, events] = fixtures::random_convergent_instance(rng);
    const EmpiricalSummary summary = summarize_empirical(events);
    Model model(params, events);
    const auto targets = targets_of(params);
    TrainConfig config;
    config.iterations = 200;
    const auto history = train(model, events, summary, targets, config);
    const auto expectations = model_expectations(model, summary, events);
    for (const auto& [idx, a] : targets) {
      CHECK(std::fabs(expectations.at(idx) - a) <= 1e-6);
    }
    for (std::size_t j = 1; j < history.size(); ++j) {
      CHECK(history[j].codelength <= history[j - 1].codelength + 1e-9);
      CHECK(history[j].distance <= history[j - 1].distance + 1e-9);
      CHECK(history[j].update_norm <= history[j - 1].update_norm + 1e-9);
    }
  }
}

TEST_CASE("trained model matches a direct likelihood maximization") {
  const ParametersFile params = ml_parameters();
  const EventsFile events = ml_events();
  const EmpiricalSummary summary = summarize_empirical(events);
  Model model(params, events);
  TrainConfig config;
  config.iterations = 300;
  train(model, events, summary, targets_of(params), config);

  const auto [l1, l2] = ml_direct_maximum();
  const double a1 = std::exp(l1);
  const double a2 = std::exp(l2);
  const double z = a1 + a2 + 1.0;
  const double direct[3] = {a1 / z, a2 / z, 1.0 / z};
  for (std::uint64_t x = 0; x < 2; ++x) {
    for (std::uint64_t y = 0; y < 3; ++y) {
      CHECK(std::fabs(model.cond_prob(x, y) - direct[y]) <= 1e-4);
    }
  }
}
