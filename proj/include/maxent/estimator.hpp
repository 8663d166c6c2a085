#pragma once

// Improved iterative scaling over an events file. Each iteration solves, per
// feature i, the monotone polynomial equation
//
//     sum_{x,y} f(x) m(y|x) g_i(x,y) beta^{M(x,y)} = a_i
//
// where M(x,y) is the total activation n(y) + n(x,y) of the pair, and applies
// alpha_i <- alpha_i * beta_i. Expectations and coefficients are assembled
// sparsely: conditional features touch only listed events, marginal features
// touch the marginal table plus listed-event corrections.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/formats.hpp"
#include "maxent/model.hpp"
#include "maxent/numeric.hpp"

namespace maxent {

struct EmpiricalSummary {
  std::uint64_t total_count = 0;                           // T
  std::vector<std::pair<std::uint64_t, double>> contexts;  // (x, f(x)) in file order
  std::unordered_map<std::uint64_t, double> context_freq;
  std::unordered_map<std::uint64_t, double> targets;       // empirical f[g_i]

  double frequency(std::uint64_t context) const {
    auto it = context_freq.find(context);
    return it == context_freq.end() ? 0.0 : it->second;
  }

  double target_of(std::uint64_t index) const {
    auto it = targets.find(index);
    return it == targets.end() ? 0.0 : it->second;
  }
};

struct Diagnostics {
  double distance = 0.0;      // d(m[g_i], a_i), pre-update
  double update_norm = 0.0;   // |Update|, Euclidean norm of applied lambda deltas
  double max_alpha = 0.0;     // Max(alpha) after the update
  double codelength = 0.0;    // L(C|m) after the update, nats
  std::optional<double> entropy;  // H(m|f) after the update, nats
  std::size_t clamped_updates = 0;
  std::size_t nonconverged_updates = 0;
};

struct TrainConfig {
  std::uint64_t iterations = 1;
  bool monotonic = false;
  double newton_tol = 1e-12;
  int newton_max_steps = 100;
  double lambda_clamp = 30.0;
  bool compute_entropy = false;
};

struct NewtonResult {
  double beta = 1.0;
  bool converged = false;
  int steps = 0;
};

inline EmpiricalSummary summarize_empirical(const EventsFile& events) {
  EmpiricalSummary s;
  for (const ConditionalEvent& e : events.conditional) {
    s.total_count += e.count;
  }
  if (s.total_count == 0) {
    throw Error(ErrorCode::EmptyCorpus, "events file has zero total frequency");
  }
  const double T = static_cast<double>(s.total_count);

  std::unordered_map<std::uint64_t, std::size_t> slot;
  std::vector<std::uint64_t> ctx_counts;
  for (const ConditionalEvent& e : events.conditional) {
    auto [it, inserted] = slot.try_emplace(e.context, s.contexts.size());
    if (inserted) {
      s.contexts.emplace_back(e.context, 0.0);
      ctx_counts.push_back(0);
    }
    ctx_counts[it->second] += e.count;
  }
  for (std::size_t i = 0; i < s.contexts.size(); ++i) {
    s.contexts[i].second = static_cast<double>(ctx_counts[i]) / T;
    s.context_freq.emplace(s.contexts[i].first, s.contexts[i].second);
  }

  // Integer numerators keep the empirical expectations exact.
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> marg_of;
  for (const MarginalEvent& e : events.marginal) {
    marg_of.emplace(e.symbol, e.feature_indices);
  }
  std::unordered_map<std::uint64_t, std::uint64_t> numer;
  for (const ConditionalEvent& e : events.conditional) {
    if (e.count == 0) {
      continue;
    }
    for (std::uint64_t idx : e.feature_indices) {
      numer[idx] += e.count;
    }
    if (auto it = marg_of.find(e.symbol); it != marg_of.end()) {
      for (std::uint64_t idx : it->second) {
        numer[idx] += e.count;
      }
    }
  }
  for (const auto& [idx, num] : numer) {
    s.targets.emplace(idx, static_cast<double>(num) / T);
  }
  return s;
}

namespace detail {

inline std::unordered_map<std::uint64_t, double> partition_cache(const Model& model,
                                                                 const EmpiricalSummary& summary) {
  std::unordered_map<std::uint64_t, double> z;
  z.reserve(summary.contexts.size());
  for (const auto& [ctx, f] : summary.contexts) {
    z.emplace(ctx, model.partition(ctx));
  }
  return z;
}

inline double product_of(const Model& model, const std::vector<std::uint64_t>& indices) {
  double w = 1.0;
  for (std::uint64_t idx : indices) {
    w *= model.alpha(idx);
  }
  return w;
}

}  // namespace detail

// m[g_i] = sum_x f(x) sum_y m(y|x) g_i(x,y) for every parameter index,
// computed without ever iterating contexts x alphabet.
inline std::unordered_map<std::uint64_t, double> model_expectations(
    const Model& model, const EmpiricalSummary& summary, const EventsFile& events) {
  const auto z = detail::partition_cache(model, summary);

  detail::KahanSum a_sum;  // A = sum_x f(x)/Z(x)
  for (const auto& [ctx, f] : summary.contexts) {
    a_sum.add(f / z.at(ctx));
  }
  const double A = a_sum.value();

  std::unordered_map<std::uint64_t, detail::KahanSum> acc;

  // Conditional features are zero on unlisted events, so the listed events
  // are the whole support.
  for (const ConditionalEvent& e : events.conditional) {
    if (e.feature_indices.empty()) {
      continue;
    }
    const double fz = summary.frequency(e.context) / z.at(e.context);
    const double wc = model.weight_marg(e.symbol) * detail::product_of(model, e.feature_indices);
    const double p = fz * wc;
    for (std::uint64_t idx : e.feature_indices) {
      acc[idx].add(p);
    }
  }

  // Marginal features: A * sum_{y in S_j} g_j(y) r(y), corrected on listed
  // events where r(y|x) differs from r(y).
  std::unordered_map<std::uint64_t, detail::KahanSum> base;
  for (std::uint64_t y : model.marginal_symbols()) {
    const double r = model.weight_marg(y);
    for (std::uint64_t idx : *model.marginal_indices(y)) {
      base[idx].add(r);
    }
  }
  for (const ConditionalEvent& e : events.conditional) {
    if (e.feature_indices.empty()) {
      continue;
    }
    const std::vector<std::uint64_t>* marg = model.marginal_indices(e.symbol);
    if (marg == nullptr) {
      continue;
    }
    const double fz = summary.frequency(e.context) / z.at(e.context);
    const double wm = model.weight_marg(e.symbol);
    const double wc = wm * detail::product_of(model, e.feature_indices);
    const double delta = fz * (wc - wm);
    for (std::uint64_t idx : *marg) {
      acc[idx].add(delta);
    }
  }

  std::unordered_map<std::uint64_t, double> out;
  out.reserve(model.indices().size());
  for (std::uint64_t idx : model.indices()) {
    double v = 0.0;
    if (auto it = base.find(idx); it != base.end()) {
      v += A * it->second.value();
    }
    if (auto it = acc.find(idx); it != acc.end()) {
      v += it->second.value();
    }
    out.emplace(idx, v);
  }
  return out;
}

// Solves sum_k b_k beta^k = target for the unique positive root. Safeguarded
// Newton from beta = 1 inside a sign-change bracket; bisection when a step
// leaves the bracket.
inline NewtonResult newton_update(const std::map<std::uint64_t, double>& coeffs, double target,
                                  double tol = 1e-12, int max_steps = 100) {
  bool any_positive = false;
  double b0 = 0.0;
  for (const auto& [k, b] : coeffs) {
    if (k == 0) {
      b0 = b;
    } else if (b > 0.0) {
      any_positive = true;
    }
  }
  if (!any_positive) {
    throw Error(ErrorCode::NoSolution, "no positive coefficient with positive exponent");
  }
  if (!(target > b0)) {
    throw Error(ErrorCode::NoSolution, "target not reachable by any positive update");
  }

  const auto h = [&](double beta) {
    detail::KahanSum s;
    for (const auto& [k, b] : coeffs) {
      if (b != 0.0) {
        s.add(b * std::pow(beta, static_cast<double>(k)));
      }
    }
    return s.value() - target;
  };
  const auto dh = [&](double beta) {
    double s = 0.0;
    for (const auto& [k, b] : coeffs) {
      if (k > 0 && b != 0.0) {
        s += static_cast<double>(k) * b * std::pow(beta, static_cast<double>(k) - 1.0);
      }
    }
    return s;
  };

  double lo = 0.0;
  double hi = 1.0;
  while (h(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }

  NewtonResult r;
  double beta = std::min(std::max(1.0, lo), hi);
  for (r.steps = 0; r.steps < max_steps; ++r.steps) {
    const double hv = h(beta);
    if (hv == 0.0) {
      r.beta = beta;
      r.converged = true;
      return r;
    }
    if (hv < 0.0) {
      lo = beta;
    } else {
      hi = beta;
    }
    const double d = dh(beta);
    double next = (d > 0.0 && std::isfinite(hv)) ? beta - hv / d : 0.5 * (lo + hi);
    if (!(next >= lo && next <= hi) || !std::isfinite(next)) {
      next = 0.5 * (lo + hi);
    }
    if (std::fabs(next - beta) <= tol * std::max(std::fabs(next), 1e-300)) {
      r.beta = next;
      r.converged = true;
      return r;
    }
    beta = next;
  }
  r.beta = beta;
  r.converged = false;
  return r;
}

// -ln likelihood of the corpus, nats.
inline double codelength(const Model& model, const EventsFile& events) {
  std::unordered_map<std::uint64_t, double> z;
  detail::KahanSum total;
  for (const ConditionalEvent& e : events.conditional) {
    if (e.count == 0) {
      continue;
    }
    auto it = z.find(e.context);
    if (it == z.end()) {
      it = z.emplace(e.context, model.partition(e.context)).first;
    }
    const double w = model.weight_marg(e.symbol) * detail::product_of(model, e.feature_indices);
    total.add(static_cast<double>(e.count) * (std::log(it->second) - std::log(w)));
  }
  return total.value();
}

// H(m|f) = -sum_x f(x) sum_y m(y|x) ln m(y|x). The inner sum groups symbols
// outside Y_x+ by their r(y) value; only conditionally active symbols are
// touched individually.
inline double conditional_entropy(const Model& model, const EmpiricalSummary& summary) {
  const auto phi = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };

  // Distinct r(y) values with multiplicities, including the featureless bulk.
  std::map<double, std::uint64_t> groups;
  for (std::uint64_t y : model.marginal_symbols()) {
    groups[model.weight_marg(y)] += 1;
  }
  const std::uint64_t plain = model.alphabet_size() - model.marginal_symbols().size();
  if (plain > 0) {
    groups[1.0] += plain;
  }

  detail::KahanSum total;
  for (const auto& [ctx, f] : summary.contexts) {
    const double z = model.partition(ctx);
    detail::KahanSum inner;
    for (const auto& [r, count] : groups) {
      inner.add(static_cast<double>(count) * phi(r / z));
    }
    if (const auto* entries = model.context_entries(ctx)) {
      for (const Model::ContextEntry& e : *entries) {
        const double wm = model.weight_marg(e.symbol);
        const double wc = wm * detail::product_of(model, e.indices);
        inner.add(phi(wc / z) - phi(wm / z));
      }
    }
    total.add(f * inner.value());
  }
  return total.value();
}

// One improved-iterative-scaling step; the model is updated in place.
inline Diagnostics iis_step(Model& model, const EmpiricalSummary& summary,
                            const EventsFile& events,
                            const std::unordered_map<std::uint64_t, double>& targets,
                            const TrainConfig& config = {}) {
  const auto expectations = model_expectations(model, summary, events);
  const auto z = detail::partition_cache(model, summary);

  detail::KahanSum a_sum;
  for (const auto& [ctx, f] : summary.contexts) {
    a_sum.add(f / z.at(ctx));
  }
  const double A = a_sum.value();

  // b_{i,k}: coefficient of beta^k in feature i's update equation.
  std::unordered_map<std::uint64_t, std::map<std::uint64_t, double>> coeffs;

  for (const ConditionalEvent& e : events.conditional) {
    if (e.feature_indices.empty()) {
      continue;
    }
    const double fz = summary.frequency(e.context) / z.at(e.context);
    const double wm = model.weight_marg(e.symbol);
    const double wc = wm * detail::product_of(model, e.feature_indices);
    const std::uint64_t m_total = model.marginal_activation(e.symbol) + e.activation();
    const double p = fz * wc;
    for (std::uint64_t idx : e.feature_indices) {
      coeffs[idx][m_total] += p;
    }
    // Listed pairs shift the marginal features of this symbol from exponent
    // n(y) to exponent n(y) + n(x,y) and from weight r(y) to r(y|x).
    if (const auto* marg = model.marginal_indices(e.symbol)) {
      const std::uint64_t n_y = marg->size();
      for (std::uint64_t idx : *marg) {
        auto& row = coeffs[idx];
        row[n_y] -= fz * wm;
        row[m_total] += fz * wc;
      }
    }
  }
  for (std::uint64_t y : model.marginal_symbols()) {
    const double r = model.weight_marg(y);
    const std::uint64_t n_y = model.marginal_activation(y);
    for (std::uint64_t idx : *model.marginal_indices(y)) {
      coeffs[idx][n_y] += r * A;
    }
  }

  Diagnostics diag;
  detail::KahanSum dist2;
  for (std::uint64_t idx : model.indices()) {
    double a = 0.0;
    if (auto it = targets.find(idx); it != targets.end()) {
      a = it->second;
    }
    const double dev = expectations.at(idx) - a;
    dist2.add(dev * dev);
  }
  diag.distance = std::sqrt(std::max(0.0, dist2.value()));

  detail::KahanSum norm2;
  std::vector<std::pair<std::uint64_t, double>> updates;
  for (std::uint64_t idx : model.indices()) {
    auto cit = coeffs.find(idx);
    if (cit == coeffs.end()) {
      continue;  // feature never active in the events file; alpha unchanged
    }
    for (auto& [k, b] : cit->second) {
      if (b < 0.0) {
        b = 0.0;  // mathematically >= 0; clear rounding residue
      }
    }
    double a = 0.0;
    if (auto it = targets.find(idx); it != targets.end()) {
      a = it->second;
    }
    if (!(a > 0.0)) {
      throw Error(ErrorCode::ZeroTarget,
                  "feature " + std::to_string(idx) +
                      " is active but its target expectation is zero; the update would drive "
                      "alpha to zero");
    }
    const NewtonResult nr =
        newton_update(cit->second, a, config.newton_tol, config.newton_max_steps);
    if (!nr.converged) {
      ++diag.nonconverged_updates;
    }
    const double lambda_old = std::log(model.alpha(idx));
    double lambda_new = lambda_old + std::log(nr.beta);
    if (lambda_new > config.lambda_clamp || lambda_new < -config.lambda_clamp) {
      lambda_new = std::clamp(lambda_new, -config.lambda_clamp, config.lambda_clamp);
      if (lambda_new != lambda_old) {
        ++diag.clamped_updates;
      }
    }
    const double delta = lambda_new - lambda_old;
    norm2.add(delta * delta);
    updates.emplace_back(idx, std::exp(lambda_new));
  }
  diag.update_norm = std::sqrt(std::max(0.0, norm2.value()));

  for (const auto& [idx, alpha] : updates) {
    model.set_alpha(idx, alpha);
  }
  model.refresh();

  double max_alpha = 0.0;
  for (std::uint64_t idx : model.indices()) {
    max_alpha = std::max(max_alpha, model.alpha(idx));
  }
  diag.max_alpha = max_alpha;
  diag.codelength = codelength(model, events);
  if (config.compute_entropy) {
    diag.entropy = conditional_entropy(model, summary);
  }
  return diag;
}

// Runs up to config.iterations steps. With the monotonic option, a step that
// strictly increases the codelength is reverted and excluded from the
// returned history.
inline std::vector<Diagnostics> train(Model& model, const EventsFile& events,
                                      const EmpiricalSummary& summary,
                                      const std::unordered_map<std::uint64_t, double>& targets,
                                      const TrainConfig& config) {
  std::vector<Diagnostics> history;
  double previous = config.monotonic ? codelength(model, events) : 0.0;
  for (std::uint64_t it = 0; it < config.iterations; ++it) {
    std::vector<std::pair<std::uint64_t, double>> saved;
    if (config.monotonic) {
      saved.reserve(model.indices().size());
      for (std::uint64_t idx : model.indices()) {
        saved.emplace_back(idx, model.alpha(idx));
      }
    }
    Diagnostics diag = iis_step(model, summary, events, targets, config);
    if (config.monotonic && diag.codelength > previous) {
      for (const auto& [idx, alpha] : saved) {
        model.set_alpha(idx, alpha);
      }
      model.refresh();
      break;
    }
    previous = diag.codelength;
    history.push_back(std::move(diag));
  }
  return history;
}

inline std::unordered_map<std::uint64_t, double> targets_of(const ParametersFile& params) {
  std::unordered_map<std::uint64_t, double> t;
  for (const Parameter& p : params.marginal) {
    t.emplace(p.index, p.target);
  }
  for (const Parameter& p : params.conditional) {
    t.emplace(p.index, p.target);
  }
  return t;
}

}  // namespace maxent
