#pragma once

// Expression evaluation in negative-log space. Each expression yields one
// value in nats; +infinity encodes probability zero (the empty sum).

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/formats.hpp"
#include "maxent/model.hpp"
#include "maxent/numeric.hpp"

namespace maxent {

inline constexpr double kInfinityNats = std::numeric_limits<double>::infinity();

// -ln(sum_j exp(-t_j)) with the shift taken on the smallest element, so the
// largest probability is computed at full scale. Empty input is probability
// zero, +infinity.
inline double neglog_sum(const std::vector<double>& terms) {
  if (terms.empty()) {
    return kInfinityNats;
  }
  double lowest = kInfinityNats;
  for (double t : terms) {
    lowest = std::min(lowest, t);
  }
  if (lowest == kInfinityNats) {
    return kInfinityNats;
  }
  detail::KahanSum sum;
  for (double t : terms) {
    sum.add(std::exp(lowest - t));
  }
  return lowest - std::log(sum.value());
}

namespace detail {

class Evaluator {
 public:
  explicit Evaluator(const Model& model) : model_(model) {}

  double node_value(const ExpressionNode& node) {
    switch (node.kind) {
      case ExpressionNode::Kind::Event:
        return event_value(node.event);
      case ExpressionNode::Kind::Product: {
        KahanSum total;
        for (const ExpressionNode& child : node.children) {
          const double v = node_value(child);
          if (v == kInfinityNats) {
            return kInfinityNats;
          }
          total.add(v);
        }
        return total.value();  // empty product: 0 nats, probability one
      }
      case ExpressionNode::Kind::Sum: {
        std::vector<double> terms;
        terms.reserve(node.children.size());
        for (const ExpressionNode& child : node.children) {
          terms.push_back(node_value(child));
        }
        return neglog_sum(terms);
      }
    }
    return kInfinityNats;
  }

 private:
  // -ln m(y|x): conditional activations from the expression record, marginal
  // activations and Z(x) from the events file the model was built with.
  double event_value(const ConditionalEvent& e) {
    double w = model_.weight_marg(e.symbol);
    for (std::uint64_t idx : e.feature_indices) {
      w *= model_.alpha(idx);
    }
    return std::log(partition(e.context)) - std::log(w);
  }

  double partition(std::uint64_t context) {
    auto it = z_cache_.find(context);
    if (it == z_cache_.end()) {
      it = z_cache_.emplace(context, model_.partition(context)).first;
    }
    return it->second;
  }

  const Model& model_;
  std::unordered_map<std::uint64_t, double> z_cache_;
};

}  // namespace detail

// One value per expression, in input order.
inline std::vector<double> evaluate(const Model& model, const ExpressionsFile& expressions) {
  detail::Evaluator ev(model);
  std::vector<double> results;
  results.reserve(expressions.expressions.size());
  for (const ExpressionNode& node : expressions.expressions) {
    results.push_back(ev.node_value(node));
  }
  return results;
}

}  // namespace maxent
