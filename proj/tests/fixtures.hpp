#pragma once

// Shared fixtures, random instance generators, and independent brute-force
// oracles for the test suites. The oracles recompute weights, partitions,
// and expectations from the raw documents with plain products and full
// alphabet sums; they never touch the sparse paths they are used to check.

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "maxent/estimator.hpp"
#include "maxent/formats.hpp"

namespace fixtures {

using maxent::ConditionalEvent;
using maxent::EventsFile;
using maxent::MarginalEvent;
using maxent::Parameter;
using maxent::ParametersFile;

// Two-symbol, single-feature instance with the closed-form optimum
// alpha_1 = 1/3: counts 3 and 1 in one context, feature 1 on the rare pair.
inline ParametersFile t1_parameters(double alpha = 1.0) {
  ParametersFile p;
  p.alphabet_size = 2;
  p.conditional.push_back({1, alpha, 0.25});
  return p;
}

inline EventsFile t1_events() {
  EventsFile e;
  e.conditional.push_back({0, 0, 3, {}});
  e.conditional.push_back({0, 1, 1, {1}});
  return e;
}

// Three symbols; marginal feature 10 (alpha 2) on symbol 0, conditional
// feature 20 (alpha 4) on (5, 0). weight_cond(5,0) = 8, Z(5) = 10.
inline ParametersFile t2_parameters() {
  ParametersFile p;
  p.alphabet_size = 3;
  p.marginal.push_back({10, 2.0, 0.5});
  p.conditional.push_back({20, 4.0, 0.125});
  return p;
}

inline EventsFile t2_events() {
  EventsFile e;
  e.marginal.push_back({0, {10}});
  e.conditional.push_back({5, 0, 1, {20}});
  return e;
}

// Inconsistent-target fixture for the monotonic option: two features on the
// same pair with targets 0.7 and 0.8 (sum > 1). From alphas (0.2, 1.0) the
// codelength drops once and then rises, so -m keeps exactly one iteration.
inline ParametersFile inconsistent_parameters() {
  ParametersFile p;
  p.alphabet_size = 2;
  p.conditional.push_back({1, 0.2, 0.7});
  p.conditional.push_back({2, 1.0, 0.8});
  return p;
}

inline EventsFile inconsistent_events() {
  EventsFile e;
  e.conditional.push_back({0, 0, 2, {}});
  e.conditional.push_back({0, 1, 2, {1, 2}});
  return e;
}

// ---------------------------------------------------------------------------
// Brute-force oracle.

struct OracleModel {
  std::uint64_t alphabet = 0;
  std::map<std::uint64_t, double> alpha;
  std::map<std::uint64_t, std::vector<std::uint64_t>> marg;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::uint64_t>> cond;

  static OracleModel from(const ParametersFile& params, const EventsFile& events) {
    OracleModel m;
    m.alphabet = params.alphabet_size;
    for (const Parameter& p : params.marginal) {
      m.alpha[p.index] = p.alpha;
    }
    for (const Parameter& p : params.conditional) {
      m.alpha[p.index] = p.alpha;
    }
    for (const MarginalEvent& e : events.marginal) {
      m.marg[e.symbol] = e.feature_indices;
    }
    for (const ConditionalEvent& e : events.conditional) {
      m.cond[{e.context, e.symbol}] = e.feature_indices;
    }
    return m;
  }

  double weight(std::uint64_t x, std::uint64_t y) const {
    double w = 1.0;
    if (auto it = marg.find(y); it != marg.end()) {
      for (std::uint64_t idx : it->second) {
        w *= alpha.at(idx);
      }
    }
    if (auto it = cond.find({x, y}); it != cond.end()) {
      for (std::uint64_t idx : it->second) {
        w *= alpha.at(idx);
      }
    }
    return w;
  }

  double partition(std::uint64_t x) const {
    double z = 0.0;
    for (std::uint64_t y = 0; y < alphabet; ++y) {
      z += weight(x, y);
    }
    return z;
  }

  double prob(std::uint64_t x, std::uint64_t y) const { return weight(x, y) / partition(x); }

  // Naive m[g_i]: observed contexts times the full alphabet.
  std::map<std::uint64_t, double> expectations(const EventsFile& events) const {
    std::map<std::uint64_t, std::uint64_t> ctx_counts;
    std::uint64_t total = 0;
    for (const ConditionalEvent& e : events.conditional) {
      ctx_counts[e.context] += e.count;
      total += e.count;
    }
    std::map<std::uint64_t, double> out;
    for (const auto& [idx, a] : alpha) {
      out[idx] = 0.0;
    }
    for (const auto& [x, c] : ctx_counts) {
      const double fx = static_cast<double>(c) / static_cast<double>(total);
      for (std::uint64_t y = 0; y < alphabet; ++y) {
        const double p = fx * prob(x, y);
        if (auto it = cond.find({x, y}); it != cond.end()) {
          for (std::uint64_t idx : it->second) {
            out[idx] += p;
          }
        }
        if (auto it = marg.find(y); it != marg.end()) {
          for (std::uint64_t idx : it->second) {
            out[idx] += p;
          }
        }
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Random generators. All deterministic under a caller-supplied engine.

using Rng = std::mt19937_64;

inline std::uint64_t uniform(Rng& rng, std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng);
}

inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::uniform_real_distribution<double>(lo, hi)(rng));
}

// Valid random documents for round-trip and canonicality checks.
inline ParametersFile random_parameters(Rng& rng) {
  ParametersFile p;
  p.alphabet_size = uniform(rng, 1, 1000);
  const std::uint64_t n_marg = uniform(rng, 0, 6);
  const std::uint64_t n_cond = uniform(rng, 0, 6);
  std::set<std::uint64_t> used;
  const auto fresh_index = [&] {
    for (;;) {
      const std::uint64_t idx = uniform(rng, 1, 5000);
      if (used.insert(idx).second) {
        return idx;
      }
    }
  };
  for (std::uint64_t i = 0; i < n_marg; ++i) {
    p.marginal.push_back({fresh_index(), log_uniform(rng, -20.0, 20.0),
                          std::uniform_real_distribution<double>(0.0, 1.5)(rng)});
  }
  for (std::uint64_t i = 0; i < n_cond; ++i) {
    p.conditional.push_back({fresh_index(), log_uniform(rng, -20.0, 20.0),
                             std::uniform_real_distribution<double>(0.0, 1.5)(rng)});
  }
  return p;
}

inline EventsFile random_events(Rng& rng) {
  EventsFile e;
  const std::uint64_t n_marg = uniform(rng, 0, 5);
  std::set<std::uint64_t> symbols;
  for (std::uint64_t i = 0; i < n_marg; ++i) {
    const std::uint64_t y = uniform(rng, 0, 30);
    if (!symbols.insert(y).second) {
      continue;
    }
    MarginalEvent ev;
    ev.symbol = y;
    const std::uint64_t n = uniform(rng, 0, 4);
    for (std::uint64_t j = 0; j < n; ++j) {
      ev.feature_indices.push_back(uniform(rng, 1, 100));
    }
    e.marginal.push_back(std::move(ev));
  }
  const std::uint64_t n_cond = uniform(rng, 1, 8);
  std::set<std::pair<std::uint64_t, std::uint64_t>> pairs;
  for (std::uint64_t i = 0; i < n_cond; ++i) {
    const std::uint64_t x = uniform(rng, 0, 10);
    const std::uint64_t y = uniform(rng, 0, 30);
    if (!pairs.insert({x, y}).second) {
      continue;
    }
    ConditionalEvent ev;
    ev.context = x;
    ev.symbol = y;
    ev.count = uniform(rng, 0, 50);
    const std::uint64_t n = uniform(rng, 0, 4);
    for (std::uint64_t j = 0; j < n; ++j) {
      ev.feature_indices.push_back(uniform(rng, 1, 100));
    }
    e.conditional.push_back(std::move(ev));
  }
  return e;
}

inline maxent::ExpressionNode random_expression_node(Rng& rng, int depth,
                                                     maxent::ExpressionNode::Kind parent,
                                                     bool top) {
  using Node = maxent::ExpressionNode;
  const std::uint64_t roll = uniform(rng, 0, depth >= 3 ? 1 : 5);
  Node node;
  if (roll <= 1) {
    node.kind = Node::Kind::Event;
    node.event.context = uniform(rng, 0, 10);
    node.event.symbol = uniform(rng, 0, 30);
    node.event.count = 1;
    const std::uint64_t n = uniform(rng, 0, 3);
    for (std::uint64_t j = 0; j < n; ++j) {
      node.event.feature_indices.push_back(uniform(rng, 1, 100));
    }
    return node;
  }
  const bool want_product =
      top ? (roll % 2 == 0) : (parent == Node::Kind::Sum);
  node.kind = want_product ? Node::Kind::Product : Node::Kind::Sum;
  const std::uint64_t n_children = uniform(rng, 0, 4);
  for (std::uint64_t j = 0; j < n_children; ++j) {
    node.children.push_back(random_expression_node(rng, depth + 1, node.kind, false));
  }
  return node;
}

inline maxent::ExpressionsFile random_expressions(Rng& rng) {
  maxent::ExpressionsFile x;
  const std::uint64_t n = uniform(rng, 1, 4);
  for (std::uint64_t i = 0; i < n; ++i) {
    x.expressions.push_back(
        random_expression_node(rng, 0, maxent::ExpressionNode::Kind::Event, true));
  }
  return x;
}

// Random consistent model instance for the sparse-vs-brute-force oracles:
// every pair listed, alphas log-uniform in [e^-3, e^3].
inline std::pair<ParametersFile, EventsFile> random_model_instance(Rng& rng,
                                                                   std::uint64_t max_alphabet) {
  const std::uint64_t k = uniform(rng, 1, max_alphabet);
  const std::uint64_t n_ctx = uniform(rng, 1, 6);
  ParametersFile params;
  params.alphabet_size = k;
  EventsFile events;

  std::uint64_t next_index = 1;
  const std::uint64_t n_marg_feats = uniform(rng, 0, std::min<std::uint64_t>(k, 4));
  std::set<std::uint64_t> marg_syms;
  for (std::uint64_t i = 0; i < n_marg_feats; ++i) {
    marg_syms.insert(uniform(rng, 0, k - 1));
  }
  std::map<std::uint64_t, std::vector<std::uint64_t>> marg_of;
  for (std::uint64_t y : marg_syms) {
    const std::uint64_t idx = next_index++;
    params.marginal.push_back({idx, log_uniform(rng, -3.0, 3.0), 0.1});
    // occasionally n-ary: the index repeats
    std::vector<std::uint64_t> list(uniform(rng, 1, 2), idx);
    marg_of[y] = list;
  }
  for (const auto& [y, list] : marg_of) {
    events.marginal.push_back({y, list});
  }

  const std::uint64_t n_cond_feats = uniform(rng, 1, 8);
  std::vector<std::uint64_t> cond_idx;
  for (std::uint64_t i = 0; i < n_cond_feats; ++i) {
    const std::uint64_t idx = next_index++;
    params.conditional.push_back({idx, log_uniform(rng, -3.0, 3.0), 0.1});
    cond_idx.push_back(idx);
  }
  for (std::uint64_t x = 0; x < n_ctx; ++x) {
    for (std::uint64_t y = 0; y < k; ++y) {
      ConditionalEvent e{x, y, uniform(rng, 1, 20), {}};
      const std::uint64_t n_here = uniform(rng, 0, 2);
      for (std::uint64_t j = 0; j < n_here && !cond_idx.empty(); ++j) {
        e.feature_indices.push_back(cond_idx[uniform(rng, 0, cond_idx.size() - 1)]);
      }
      std::sort(e.feature_indices.begin(), e.feature_indices.end());
      events.conditional.push_back(std::move(e));
    }
  }
  return {std::move(params), std::move(events)};
}

// Random instance tuned so improved iterative scaling reaches the empirical
// targets well within 200 iterations: binary features, all pairs observed,
// per-context covered mass capped at 2/3, marginal supports disjoint from
// conditional placements.
inline std::pair<ParametersFile, EventsFile> random_convergent_instance(Rng& rng) {
  const std::uint64_t k = uniform(rng, 2, 6);
  const std::uint64_t n_ctx = uniform(rng, 1, 8);
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
  std::map<std::uint64_t, std::uint64_t> ctx_total;
  for (std::uint64_t x = 0; x < n_ctx; ++x) {
    for (std::uint64_t y = 0; y < k; ++y) {
      counts[{x, y}] = uniform(rng, 1, 20);
      ctx_total[x] += counts[{x, y}];
    }
  }

  const std::uint64_t n_feat = uniform(rng, 1, 12);
  std::map<std::uint64_t, std::uint64_t> covered;  // context -> covered count mass
  std::set<std::uint64_t> marg_syms;
  std::map<std::uint64_t, std::uint64_t> marg_feature;              // symbol -> index
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> cond_feature;  // pair -> index
  std::uint64_t next_index = 1;

  for (std::uint64_t i = 0; i < n_feat; ++i) {
    const bool try_marginal = uniform(rng, 0, 4) == 0 && marg_syms.size() < 2;
    if (try_marginal) {
      std::vector<std::uint64_t> cands;
      for (std::uint64_t y = 0; y < k; ++y) {
        if (marg_syms.contains(y)) {
          continue;
        }
        bool ok = true;
        for (std::uint64_t x = 0; x < n_ctx && ok; ++x) {
          ok = 3 * (covered[x] + counts[{x, y}]) <= 2 * ctx_total[x];
        }
        bool clash = false;
        for (std::uint64_t x = 0; x < n_ctx; ++x) {
          clash = clash || cond_feature.contains({x, y});
        }
        if (ok && !clash) {
          cands.push_back(y);
        }
      }
      if (!cands.empty()) {
        const std::uint64_t y = cands[uniform(rng, 0, cands.size() - 1)];
        marg_syms.insert(y);
        marg_feature[y] = next_index++;
        for (std::uint64_t x = 0; x < n_ctx; ++x) {
          covered[x] += counts[{x, y}];
        }
        continue;
      }
    }
    std::vector<std::pair<std::uint64_t, std::uint64_t>> cands;
    for (std::uint64_t x = 0; x < n_ctx; ++x) {
      for (std::uint64_t y = 0; y < k; ++y) {
        if (marg_syms.contains(y) || cond_feature.contains({x, y})) {
          continue;
        }
        if (3 * (covered[x] + counts[{x, y}]) <= 2 * ctx_total[x]) {
          cands.emplace_back(x, y);
        }
      }
    }
    if (cands.empty()) {
      break;
    }
    const auto pair = cands[uniform(rng, 0, cands.size() - 1)];
    cond_feature[pair] = next_index++;
    covered[pair.first] += counts.at(pair);
  }
  if (marg_feature.empty() && cond_feature.empty()) {
    // the lightest pair always fits the covered-mass cap for k >= 2
    auto lightest = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second < lightest->second) {
        lightest = it;
      }
    }
    cond_feature[lightest->first] = next_index++;
  }

  ParametersFile params;
  params.alphabet_size = k;
  EventsFile events;
  for (const auto& [y, idx] : marg_feature) {
    params.marginal.push_back({idx, 1.0, 0.0});
    events.marginal.push_back({y, {idx}});
  }
  for (const auto& [pair, idx] : cond_feature) {
    params.conditional.push_back({idx, 1.0, 0.0});
  }
  std::sort(params.conditional.begin(), params.conditional.end(),
            [](const Parameter& a, const Parameter& b) { return a.index < b.index; });
  for (std::uint64_t x = 0; x < n_ctx; ++x) {
    for (std::uint64_t y = 0; y < k; ++y) {
      ConditionalEvent e{x, y, counts[{x, y}], {}};
      if (auto it = cond_feature.find({x, y}); it != cond_feature.end()) {
        e.feature_indices.push_back(it->second);
      }
      events.conditional.push_back(std::move(e));
    }
  }

  // empirical targets
  const maxent::EmpiricalSummary summary = maxent::summarize_empirical(events);
  for (Parameter& p : params.marginal) {
    p.target = summary.target_of(p.index);
  }
  for (Parameter& p : params.conditional) {
    p.target = summary.target_of(p.index);
  }
  return {std::move(params), std::move(events)};
}

}  // namespace fixtures
