#pragma once

// File verification mirroring me.checker: every finding carries a stable
// code, a location, and a message; a set of documents is compatible iff no
// finding is an error. Checks are pure and deterministic.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/estimator.hpp"
#include "maxent/formats.hpp"
#include "maxent/numeric.hpp"

namespace maxent {

enum class FindingCode {
  // errors
  ZeroIndex,
  DuplicateIndex,
  OverlappingIndex,
  NonPositiveAlpha,
  DuplicateEvent,
  SymbolOutOfRange,
  UnknownFeature,
  MisplacedMarginal,
  MisplacedConditional,
  OrphanZeroCountEvent,
  NoConditionalEvents,
  NoActiveFeature,
  NonUnitFrequency,
  FeatureMismatch,
  // warnings
  ExtremeAlpha,
  TargetAboveOne,
  TargetDiffersFromEmpirical,
  EmptyMarginalBlock,
  InactiveFeature,
};

inline std::string_view to_string(FindingCode code) {
  switch (code) {
    case FindingCode::ZeroIndex:                 return "ZeroIndex";
    case FindingCode::DuplicateIndex:            return "DuplicateIndex";
    case FindingCode::OverlappingIndex:          return "OverlappingIndex";
    case FindingCode::NonPositiveAlpha:          return "NonPositiveAlpha";
    case FindingCode::DuplicateEvent:            return "DuplicateEvent";
    case FindingCode::SymbolOutOfRange:          return "SymbolOutOfRange";
    case FindingCode::UnknownFeature:            return "UnknownFeature";
    case FindingCode::MisplacedMarginal:         return "MisplacedMarginal";
    case FindingCode::MisplacedConditional:      return "MisplacedConditional";
    case FindingCode::OrphanZeroCountEvent:      return "OrphanZeroCountEvent";
    case FindingCode::NoConditionalEvents:       return "NoConditionalEvents";
    case FindingCode::NoActiveFeature:           return "NoActiveFeature";
    case FindingCode::NonUnitFrequency:          return "NonUnitFrequency";
    case FindingCode::FeatureMismatch:           return "FeatureMismatch";
    case FindingCode::ExtremeAlpha:              return "ExtremeAlpha";
    case FindingCode::TargetAboveOne:            return "TargetAboveOne";
    case FindingCode::TargetDiffersFromEmpirical:return "TargetDiffersFromEmpirical";
    case FindingCode::EmptyMarginalBlock:        return "EmptyMarginalBlock";
    case FindingCode::InactiveFeature:           return "InactiveFeature";
  }
  return "UnknownFinding";
}

struct Finding {
  enum class Severity { Error, Warning };

  Severity severity;
  FindingCode code;
  std::string location;
  std::string message;
};

struct Report {
  std::vector<Finding> errors;
  std::vector<Finding> warnings;

  bool compatible() const { return errors.empty(); }

  bool has_error(FindingCode code) const {
    return std::any_of(errors.begin(), errors.end(),
                       [code](const Finding& f) { return f.code == code; });
  }
  bool has_warning(FindingCode code) const {
    return std::any_of(warnings.begin(), warnings.end(),
                       [code](const Finding& f) { return f.code == code; });
  }

  void error(FindingCode code, std::string location, std::string message) {
    errors.push_back(
        {Finding::Severity::Error, code, std::move(location), std::move(message)});
  }
  void warning(FindingCode code, std::string location, std::string message) {
    warnings.push_back(
        {Finding::Severity::Warning, code, std::move(location), std::move(message)});
  }
  void merge(Report other) {
    for (Finding& f : other.errors) {
      errors.push_back(std::move(f));
    }
    for (Finding& f : other.warnings) {
      warnings.push_back(std::move(f));
    }
  }
};

namespace detail {

constexpr double kExtremeAlphaLow = 1e-9;
constexpr double kExtremeAlphaHigh = 1e9;
constexpr double kTargetMatchTolerance = 1e-9;

enum class ParamClass { Marginal, Conditional };

inline std::unordered_map<std::uint64_t, ParamClass> classify(const ParametersFile& params) {
  std::unordered_map<std::uint64_t, ParamClass> cls;
  for (const Parameter& p : params.marginal) {
    cls.emplace(p.index, ParamClass::Marginal);
  }
  for (const Parameter& p : params.conditional) {
    cls.emplace(p.index, ParamClass::Conditional);
  }
  return cls;
}

inline std::string pair_text(std::uint64_t x, std::uint64_t y) {
  return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

}  // namespace detail

inline Report check_parameters(const ParametersFile& params, bool verbose = false) {
  Report report;
  std::unordered_set<std::uint64_t> marg_seen;
  std::unordered_set<std::uint64_t> cond_seen;

  const auto check_block = [&](const std::vector<Parameter>& block, const char* block_name,
                               std::unordered_set<std::uint64_t>& own,
                               const std::unordered_set<std::uint64_t>& other) {
    std::size_t row = 0;
    for (const Parameter& p : block) {
      const std::string loc = std::string("parameters:") + block_name + "[" + std::to_string(row) + "]";
      if (p.index == 0) {
        report.error(FindingCode::ZeroIndex, loc,
                     "index 0 is reserved for the distinguished slack feature");
      } else if (other.contains(p.index)) {
        report.error(FindingCode::OverlappingIndex, loc,
                     "index " + std::to_string(p.index) +
                         " is assigned to both a marginal and a conditional parameter");
      } else if (!own.insert(p.index).second) {
        report.error(FindingCode::DuplicateIndex, loc,
                     "index " + std::to_string(p.index) + " appears twice");
      }
      if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) {
        report.error(FindingCode::NonPositiveAlpha, loc,
                     "alpha must be positive and finite, got " + detail::format_f64(p.alpha));
      } else if (p.alpha <= detail::kExtremeAlphaLow || p.alpha >= detail::kExtremeAlphaHigh) {
        report.warning(FindingCode::ExtremeAlpha, loc,
                       "alpha " + detail::format_f64(p.alpha) +
                           (verbose ? " is extreme; the targets are likely inconsistent" : ""));
      }
      if (p.target > 1.0) {
        report.warning(FindingCode::TargetAboveOne, loc,
                       "target " + detail::format_f64(p.target) +
                           (verbose ? " exceeds 1; only n-ary features can reach this" : " exceeds 1"));
      }
      ++row;
    }
  };
  check_block(params.marginal, "marginal", marg_seen, cond_seen);
  check_block(params.conditional, "conditional", cond_seen, marg_seen);
  return report;
}

// Cross-checks an events file, against a parameters file when one is given.
// evaluation_mode relaxes the frequency-based restrictions, which apply to
// training corpora only.
inline Report check_events(const EventsFile& events, const ParametersFile* params,
                           bool evaluation_mode = false, bool verbose = false) {
  Report report;
  const auto cls =
      params ? detail::classify(*params) : std::unordered_map<std::uint64_t, detail::ParamClass>{};

  const auto check_indices = [&](const std::vector<std::uint64_t>& indices,
                                 const std::string& loc, bool marginal_event) {
    for (std::uint64_t idx : indices) {
      if (idx == 0) {
        report.error(FindingCode::ZeroIndex, loc, "feature index 0 is reserved");
        continue;
      }
      if (!params) {
        continue;
      }
      auto it = cls.find(idx);
      if (it == cls.end()) {
        report.error(FindingCode::UnknownFeature, loc,
                     "feature " + std::to_string(idx) + " is not in the parameters file");
      } else if (marginal_event && it->second == detail::ParamClass::Conditional) {
        report.error(FindingCode::MisplacedConditional, loc,
                     "conditional parameter " + std::to_string(idx) +
                         " listed in a marginal event");
      } else if (!marginal_event && it->second == detail::ParamClass::Marginal) {
        report.error(FindingCode::MisplacedMarginal, loc,
                     "marginal parameter " + std::to_string(idx) +
                         " listed in a conditional event" +
                         (verbose ? "; marginal activations are implied by the symbol" : ""));
      }
    }
  };

  std::unordered_set<std::uint64_t> marg_syms;
  std::size_t row = 0;
  for (const MarginalEvent& e : events.marginal) {
    const std::string loc = "events:marginal[" + std::to_string(row) + "]";
    if (!marg_syms.insert(e.symbol).second) {
      report.error(FindingCode::DuplicateEvent, loc,
                   "marginal event for symbol " + std::to_string(e.symbol) + " repeated");
    }
    if (params && e.symbol >= params->alphabet_size) {
      report.error(FindingCode::SymbolOutOfRange, loc,
                   "symbol " + std::to_string(e.symbol) + " outside alphabet of size " +
                       std::to_string(params->alphabet_size));
    }
    check_indices(e.feature_indices, loc, true);
    ++row;
  }

  std::unordered_map<std::uint64_t, std::uint64_t> ctx_total;
  for (const ConditionalEvent& e : events.conditional) {
    ctx_total[e.context] += e.count;
  }

  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, detail::PairHash> pairs;
  bool any_active = false;
  row = 0;
  for (const ConditionalEvent& e : events.conditional) {
    const std::string loc = "events:conditional[" + std::to_string(row) + "]";
    if (!pairs.insert({e.context, e.symbol}).second) {
      report.error(FindingCode::DuplicateEvent, loc,
                   "conditional event " + detail::pair_text(e.context, e.symbol) + " repeated");
    }
    if (params && e.symbol >= params->alphabet_size) {
      report.error(FindingCode::SymbolOutOfRange, loc,
                   "symbol " + std::to_string(e.symbol) + " outside alphabet of size " +
                       std::to_string(params->alphabet_size));
    }
    check_indices(e.feature_indices, loc, false);
    if (!evaluation_mode && e.count == 0 &&
        (e.feature_indices.empty() || ctx_total[e.context] == 0)) {
      report.error(FindingCode::OrphanZeroCountEvent, loc,
                   "event " + detail::pair_text(e.context, e.symbol) +
                       " has zero frequency and does not activate a conditional feature in a "
                       "context with positive frequency");
    }
    if (ctx_total[e.context] > 0 && !e.feature_indices.empty()) {
      any_active = true;
    }
    ++row;
  }

  if (events.conditional.empty()) {
    report.error(FindingCode::NoConditionalEvents, "events",
                 "an events file must hold at least one conditional event");
  }
  const bool any_positive_ctx =
      std::any_of(ctx_total.begin(), ctx_total.end(), [](const auto& kv) { return kv.second > 0; });
  const bool any_marginal_active = std::any_of(
      events.marginal.begin(), events.marginal.end(),
      [](const MarginalEvent& e) { return !e.feature_indices.empty(); });
  if (!evaluation_mode && !events.conditional.empty() &&
      !(any_positive_ctx && (any_marginal_active || any_active))) {
    report.error(FindingCode::NoActiveFeature, "events",
                 "no context with positive frequency activates any feature");
  }

  if (events.marginal.empty()) {
    report.warning(FindingCode::EmptyMarginalBlock, "events",
                   std::string("no marginal events") +
                       (verbose ? "; the model will be uniform over novel contexts" : ""));
  }

  if (params) {
    // Parameters never activated by the events file.
    std::unordered_set<std::uint64_t> used;
    for (const MarginalEvent& e : events.marginal) {
      used.insert(e.feature_indices.begin(), e.feature_indices.end());
    }
    for (const ConditionalEvent& e : events.conditional) {
      used.insert(e.feature_indices.begin(), e.feature_indices.end());
    }
    for (const auto* block : {&params->marginal, &params->conditional}) {
      for (const Parameter& p : *block) {
        if (!used.contains(p.index)) {
          report.warning(FindingCode::InactiveFeature, "parameters",
                         "feature " + std::to_string(p.index) +
                             " is never activated by the events file");
        }
      }
    }
    // Supplied targets vs the empirical expectations of this events file;
    // meaningful for training corpora only.
    if (!evaluation_mode && !events.conditional.empty()) {
      bool total_positive = false;
      for (const ConditionalEvent& e : events.conditional) {
        if (e.count > 0) {
          total_positive = true;
          break;
        }
      }
      if (total_positive) {
        const EmpiricalSummary summary = summarize_empirical(events);
        for (const auto* block : {&params->marginal, &params->conditional}) {
          for (const Parameter& p : *block) {
            if (!used.contains(p.index)) {
              continue;
            }
            const double f = summary.target_of(p.index);
            if (std::fabs(p.target - f) >
                detail::kTargetMatchTolerance * std::max(1.0, std::fabs(f))) {
              report.warning(
                  FindingCode::TargetDiffersFromEmpirical, "parameters",
                  "target of feature " + std::to_string(p.index) + " is " +
                      detail::format_f64(p.target) + ", empirical expectation is " +
                      detail::format_f64(f) +
                      (verbose ? "; non-empirical targets can prevent convergence" : ""));
            }
          }
        }
      }
    }
  }
  return report;
}

inline Report check_expressions(const ExpressionsFile& expressions, const EventsFile& events,
                                const ParametersFile& params, bool verbose = false) {
  (void)verbose;
  Report report;
  const auto cls = detail::classify(params);

  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::uint64_t>,
                     detail::PairHash>
      listed;
  for (const ConditionalEvent& e : events.conditional) {
    std::vector<std::uint64_t> sorted = e.feature_indices;
    std::sort(sorted.begin(), sorted.end());
    listed.emplace(std::make_pair(e.context, e.symbol), std::move(sorted));
  }

  std::size_t expr_idx = 0;
  const auto check_event = [&](const ConditionalEvent& e, const std::string& loc) {
    if (e.count != 1) {
      report.error(FindingCode::NonUnitFrequency, loc,
                   "expression event frequency must be 1, got " + std::to_string(e.count));
    }
    if (e.symbol >= params.alphabet_size) {
      report.error(FindingCode::SymbolOutOfRange, loc,
                   "symbol " + std::to_string(e.symbol) + " outside alphabet of size " +
                       std::to_string(params.alphabet_size));
    }
    for (std::uint64_t idx : e.feature_indices) {
      if (idx == 0) {
        report.error(FindingCode::ZeroIndex, loc, "feature index 0 is reserved");
        continue;
      }
      auto it = cls.find(idx);
      if (it == cls.end()) {
        report.error(FindingCode::UnknownFeature, loc,
                     "feature " + std::to_string(idx) + " is not in the parameters file");
      } else if (it->second == detail::ParamClass::Marginal) {
        report.error(FindingCode::MisplacedMarginal, loc,
                     "marginal parameter " + std::to_string(idx) +
                         " listed in an expression event");
      }
    }
    if (auto it = listed.find({e.context, e.symbol}); it != listed.end()) {
      std::vector<std::uint64_t> sorted = e.feature_indices;
      std::sort(sorted.begin(), sorted.end());
      if (sorted != it->second) {
        report.error(FindingCode::FeatureMismatch, loc,
                     "expression event " + detail::pair_text(e.context, e.symbol) +
                         " lists a different activation multiset than the events file");
      }
    }
  };

  const auto walk = [&](const ExpressionNode& node, const std::string& loc,
                        const auto& self) -> void {
    switch (node.kind) {
      case ExpressionNode::Kind::Event:
        check_event(node.event, loc);
        break;
      case ExpressionNode::Kind::Product:
      case ExpressionNode::Kind::Sum: {
        std::size_t child_idx = 0;
        for (const ExpressionNode& child : node.children) {
          self(child, loc + "." + std::to_string(child_idx), self);
          ++child_idx;
        }
        break;
      }
    }
  };
  for (const ExpressionNode& node : expressions.expressions) {
    walk(node, "expressions:expr[" + std::to_string(expr_idx) + "]", walk);
    ++expr_idx;
  }
  return report;
}

// Union of the applicable checks for whichever documents are supplied.
// Expression evaluation inputs relax the training-corpus frequency rules.
inline Report verify(const ParametersFile* params, const EventsFile* events,
                     const ExpressionsFile* expressions, bool verbose = false) {
  if (params == nullptr && events == nullptr && expressions == nullptr) {
    throw Error(ErrorCode::NoInput, "no documents supplied");
  }
  const bool evaluation_mode = expressions != nullptr;
  Report report;
  if (params != nullptr) {
    report.merge(check_parameters(*params, verbose));
  }
  if (events != nullptr) {
    report.merge(check_events(*events, params, evaluation_mode, verbose));
  }
  if (expressions != nullptr && events != nullptr && params != nullptr) {
    report.merge(check_expressions(*expressions, *events, *params, verbose));
  }
  return report;
}

}  // namespace maxent
