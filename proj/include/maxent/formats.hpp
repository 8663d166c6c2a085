#pragma once

// Parsers and canonical writers for the toolkit's three ASCII documents:
// parameters, events, and expressions. Parsing is a single streaming pass
// with one token of lookahead; any byte stream yields either a valid
// document or an Error, never a malformed document.

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/lexer.hpp"
#include "maxent/numeric.hpp"

namespace maxent {

struct Parameter {
  std::uint64_t index = 0;   // feature id i, >= 1
  double alpha = 1.0;        // alpha_i = exp(lambda_i), > 0 and finite
  double target = 0.0;       // a_i, >= 0

  bool operator==(const Parameter&) const = default;
};

struct ParametersFile {
  std::uint64_t alphabet_size = 0;   // |Y|
  std::vector<Parameter> marginal;
  std::vector<Parameter> conditional;

  bool operator==(const ParametersFile&) const = default;
};

struct MarginalEvent {
  std::uint64_t symbol = 0;                    // y
  std::vector<std::uint64_t> feature_indices;  // multiset; size == n(y)

  std::uint64_t activation() const { return feature_indices.size(); }
  bool operator==(const MarginalEvent&) const = default;
};

struct ConditionalEvent {
  std::uint64_t context = 0;                   // x
  std::uint64_t symbol = 0;                    // y
  std::uint64_t count = 0;                     // c(x,y)
  std::vector<std::uint64_t> feature_indices;  // multiset; size == n(x,y)

  std::uint64_t activation() const { return feature_indices.size(); }
  bool operator==(const ConditionalEvent&) const = default;
};

struct EventsFile {
  std::vector<MarginalEvent> marginal;
  std::vector<ConditionalEvent> conditional;

  bool operator==(const EventsFile&) const = default;
};

// Expression tree. Products hold events or sums, sums hold events or
// products; the parser rejects sum-in-sum and product-in-product.
struct ExpressionNode {
  enum class Kind { Event, Product, Sum };

  Kind kind = Kind::Event;
  ConditionalEvent event;                 // Kind::Event only; count must be 1
  std::vector<ExpressionNode> children;   // Kind::Product / Kind::Sum

  bool operator==(const ExpressionNode&) const = default;
};

struct ExpressionsFile {
  std::vector<ExpressionNode> expressions;

  bool operator==(const ExpressionsFile&) const = default;
};

// Strict parsing enforces every content rule (reserved index zero, duplicate
// indices and events, positive alphas, unit expression frequencies) and is the
// library default. Lenient parsing enforces only the grammar and defers those
// content rules to the checker, which reports them as findings; the CLI reads
// files this way so me.checker can diagnose them instead of failing to parse.
enum class ParseStrictness { Strict, Lenient };

namespace detail {

constexpr std::size_t kMaxExpressionDepth = 64;

inline std::uint64_t read_u64(Lexer& lex, const char* what, ErrorCode missing_code) {
  const std::string* tok = lex.peek();
  if (tok == nullptr) {
    throw Error(missing_code, std::string("unexpected end of input, expected ") + what,
                lex.current_line());
  }
  if (is_keyword(*tok)) {
    throw Error(missing_code, std::string("expected ") + what + ", found '" + *tok + "'",
                lex.line());
  }
  auto v = try_parse_u64(*tok);
  if (!v) {
    throw Error(ErrorCode::NonNumericToken,
                std::string("expected ") + what + ", found '" + *tok + "'", lex.line());
  }
  lex.take();
  return *v;
}

inline double read_f64(Lexer& lex, const char* what) {
  const std::string* tok = lex.peek();
  if (tok == nullptr) {
    throw Error(ErrorCode::NonNumericToken,
                std::string("unexpected end of input, expected ") + what, lex.current_line());
  }
  auto v = try_parse_f64(*tok);
  if (!v || is_keyword(*tok)) {
    throw Error(ErrorCode::NonNumericToken,
                std::string("expected ") + what + ", found '" + *tok + "'", lex.line());
  }
  lex.take();
  return *v;
}

inline void expect_keyword(Lexer& lex, const char* kw) {
  const std::string* tok = lex.peek();
  if (tok == nullptr) {
    throw Error(ErrorCode::MalformedHeader,
                std::string("unexpected end of input, expected '") + kw + "'",
                lex.current_line());
  }
  if (*tok != kw) {
    throw Error(ErrorCode::MalformedHeader,
                std::string("expected '") + kw + "', found '" + *tok + "'", lex.line());
  }
  lex.take();
}

inline void expect_end_of_input(Lexer& lex) {
  if (const std::string* tok = lex.peek()) {
    throw Error(ErrorCode::MalformedHeader, "trailing content after document: '" + *tok + "'",
                lex.line());
  }
}

// True when the next token opens a record (numeric) rather than closing the
// block. Throws CountMismatch when a keyword other than end_kw shows up.
inline bool at_record_start(Lexer& lex, const char* end_kw, std::uint64_t declared,
                            std::uint64_t seen) {
  const std::string* tok = lex.peek();
  if (tok == nullptr || *tok == end_kw) {
    if (seen < declared) {
      throw Error(ErrorCode::CountMismatch,
                  "declared " + std::to_string(declared) + " record(s), found " +
                      std::to_string(seen),
                  lex.current_line());
    }
    return false;
  }
  if (is_keyword(*tok)) {
    throw Error(ErrorCode::CountMismatch,
                std::string("expected record or '") + end_kw + "', found '" + *tok + "'",
                lex.line());
  }
  if (seen >= declared) {
    throw Error(ErrorCode::CountMismatch,
                "more records than the declared " + std::to_string(declared), lex.line());
  }
  return true;
}

inline std::uint64_t read_feature_index(Lexer& lex, ErrorCode missing_code,
                                         ParseStrictness strictness) {
  const std::uint64_t idx = read_u64(lex, "feature index", missing_code);
  if (idx == 0 && strictness == ParseStrictness::Strict) {
    throw Error(ErrorCode::ZeroIndex, "feature index 0 is reserved", lex.line());
  }
  return idx;
}

inline void read_parameter_block(Lexer& lex, std::uint64_t declared, const char* end_kw,
                                 std::vector<Parameter>& out,
                                 std::unordered_set<std::uint64_t>& seen_indices,
                                 ParseStrictness strictness) {
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(declared, 1 << 20)));
  std::uint64_t seen = 0;
  while (at_record_start(lex, end_kw, declared, seen)) {
    Parameter p;
    p.index = read_u64(lex, "parameter index", ErrorCode::NonNumericToken);
    if (p.index == 0 && strictness == ParseStrictness::Strict) {
      throw Error(ErrorCode::ZeroIndex, "parameter index 0 is reserved for the slack feature",
                  lex.line());
    }
    if (!seen_indices.insert(p.index).second && strictness == ParseStrictness::Strict) {
      throw Error(ErrorCode::DuplicateIndex,
                  "parameter index " + std::to_string(p.index) + " appears more than once",
                  lex.line());
    }
    p.alpha = read_f64(lex, "alpha");
    if ((!(p.alpha > 0.0) || !std::isfinite(p.alpha)) &&
        strictness == ParseStrictness::Strict) {
      throw Error(ErrorCode::NonPositiveAlpha,
                  "alpha must be positive and finite, got " + format_f64(p.alpha), lex.line());
    }
    p.target = read_f64(lex, "target expectation");
    if (!(p.target >= 0.0) || !std::isfinite(p.target)) {
      throw Error(ErrorCode::NegativeTarget,
                  "target expectation must be a finite non-negative value, got " +
                      format_f64(p.target),
                  lex.line());
    }
    out.push_back(p);
    ++seen;
  }
  expect_keyword(lex, end_kw);
}

inline ConditionalEvent read_conditional_record(Lexer& lex, ParseStrictness strictness) {
  ConditionalEvent e;
  e.context = read_u64(lex, "context", ErrorCode::ArityMismatch);
  e.symbol = read_u64(lex, "symbol", ErrorCode::ArityMismatch);
  e.count = read_u64(lex, "count", ErrorCode::ArityMismatch);
  const std::uint64_t n = read_u64(lex, "activation", ErrorCode::ArityMismatch);
  e.feature_indices.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1 << 16)));
  for (std::uint64_t i = 0; i < n; ++i) {
    e.feature_indices.push_back(read_feature_index(lex, ErrorCode::ArityMismatch, strictness));
  }
  return e;
}

inline ExpressionNode parse_expression_node(Lexer& lex, ExpressionNode::Kind parent,
                                            std::size_t depth, bool top_level,
                                            ParseStrictness strictness) {
  if (depth > kMaxExpressionDepth) {
    throw Error(ErrorCode::IllegalNesting, "expression nesting exceeds supported depth",
                lex.line());
  }
  const std::string* tok = lex.peek();
  if (tok == nullptr) {
    throw Error(ErrorCode::MalformedHeader, "unexpected end of input inside expression",
                lex.current_line());
  }
  if (*tok == "begin.product" || *tok == "begin.sum") {
    const bool product = (*tok == "begin.product");
    if (!top_level) {
      if (product && parent == ExpressionNode::Kind::Product) {
        throw Error(ErrorCode::IllegalNesting, "product nested directly inside product",
                    lex.line());
      }
      if (!product && parent == ExpressionNode::Kind::Sum) {
        throw Error(ErrorCode::IllegalNesting, "sum nested directly inside sum", lex.line());
      }
    }
    lex.take();
    const char* end_kw = product ? "end.product" : "end.sum";
    const std::uint64_t declared = read_u64(lex, "number-terms", ErrorCode::MalformedHeader);
    ExpressionNode node;
    node.kind = product ? ExpressionNode::Kind::Product : ExpressionNode::Kind::Sum;
    std::uint64_t seen = 0;
    for (;;) {
      const std::string* next = lex.peek();
      if (next == nullptr) {
        throw Error(ErrorCode::MalformedHeader,
                    std::string("unexpected end of input, expected '") + end_kw + "'",
                    lex.current_line());
      }
      if (*next == end_kw) {
        lex.take();
        break;
      }
      node.children.push_back(parse_expression_node(lex, node.kind, depth + 1, false, strictness));
      ++seen;
    }
    if (seen != declared) {
      throw Error(ErrorCode::CountMismatch,
                  "declared " + std::to_string(declared) + " term(s), found " +
                      std::to_string(seen),
                  lex.line());
    }
    return node;
  }
  if (is_keyword(*tok)) {
    throw Error(ErrorCode::MalformedHeader, "unexpected '" + *tok + "' inside expression",
                lex.line());
  }
  ExpressionNode node;
  node.kind = ExpressionNode::Kind::Event;
  node.event = read_conditional_record(lex, strictness);
  if (node.event.count != 1 && strictness == ParseStrictness::Strict) {
    throw Error(ErrorCode::NonUnitFrequency,
                "expression event frequency must be 1, got " + std::to_string(node.event.count),
                lex.line());
  }
  return node;
}

}  // namespace detail

inline ParametersFile parse_parameters(std::istream& in,
                                        ParseStrictness strictness = ParseStrictness::Strict) {
  detail::Lexer lex(in);
  detail::expect_keyword(lex, "begin.parameters");
  ParametersFile doc;
  doc.alphabet_size = detail::read_u64(lex, "alphabet-size", ErrorCode::MalformedHeader);
  if (doc.alphabet_size == 0) {
    throw Error(ErrorCode::MalformedHeader, "alphabet-size must be positive", lex.line());
  }
  const std::uint64_t declared_total =
      detail::read_u64(lex, "number-parameters", ErrorCode::MalformedHeader);

  std::unordered_set<std::uint64_t> seen_indices;
  detail::expect_keyword(lex, "begin.marginal");
  const std::uint64_t n_marg =
      detail::read_u64(lex, "number-marginal", ErrorCode::MalformedHeader);
  detail::read_parameter_block(lex, n_marg, "end.marginal", doc.marginal, seen_indices,
                               strictness);

  detail::expect_keyword(lex, "begin.conditional");
  const std::uint64_t n_cond =
      detail::read_u64(lex, "number-conditional", ErrorCode::MalformedHeader);
  detail::read_parameter_block(lex, n_cond, "end.conditional", doc.conditional, seen_indices,
                               strictness);

  detail::expect_keyword(lex, "end.parameters");
  detail::expect_end_of_input(lex);

  if (declared_total != n_marg + n_cond) {
    throw Error(ErrorCode::CountMismatch,
                "header declares " + std::to_string(declared_total) + " parameter(s), blocks hold " +
                    std::to_string(n_marg + n_cond));
  }
  return doc;
}

inline EventsFile parse_events(std::istream& in,
                               ParseStrictness strictness = ParseStrictness::Strict) {
  detail::Lexer lex(in);
  detail::expect_keyword(lex, "begin.events");
  const std::uint64_t declared_total =
      detail::read_u64(lex, "number-events", ErrorCode::MalformedHeader);
  EventsFile doc;

  detail::expect_keyword(lex, "begin.marginal");
  const std::uint64_t n_marg =
      detail::read_u64(lex, "number-marginal", ErrorCode::MalformedHeader);
  std::unordered_set<std::uint64_t> seen_symbols;
  std::uint64_t seen = 0;
  while (detail::at_record_start(lex, "end.marginal", n_marg, seen)) {
    MarginalEvent e;
    e.symbol = detail::read_u64(lex, "symbol", ErrorCode::ArityMismatch);
    const std::uint64_t n = detail::read_u64(lex, "activation", ErrorCode::ArityMismatch);
    e.feature_indices.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1 << 16)));
    for (std::uint64_t i = 0; i < n; ++i) {
      e.feature_indices.push_back(
          detail::read_feature_index(lex, ErrorCode::ArityMismatch, strictness));
    }
    if (!seen_symbols.insert(e.symbol).second && strictness == ParseStrictness::Strict) {
      throw Error(ErrorCode::DuplicateEvent,
                  "marginal event for symbol " + std::to_string(e.symbol) + " repeated",
                  lex.line());
    }
    doc.marginal.push_back(std::move(e));
    ++seen;
  }
  detail::expect_keyword(lex, "end.marginal");

  detail::expect_keyword(lex, "begin.conditional");
  const std::uint64_t n_cond =
      detail::read_u64(lex, "number-conditional", ErrorCode::MalformedHeader);
  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, detail::PairHash> seen_pairs;
  seen = 0;
  while (detail::at_record_start(lex, "end.conditional", n_cond, seen)) {
    ConditionalEvent e = detail::read_conditional_record(lex, strictness);
    if (!seen_pairs.insert({e.context, e.symbol}).second &&
        strictness == ParseStrictness::Strict) {
      throw Error(ErrorCode::DuplicateEvent,
                  "conditional event (" + std::to_string(e.context) + "," +
                      std::to_string(e.symbol) + ") repeated",
                  lex.line());
    }
    doc.conditional.push_back(std::move(e));
    ++seen;
  }
  detail::expect_keyword(lex, "end.conditional");

  detail::expect_keyword(lex, "end.events");
  detail::expect_end_of_input(lex);

  if (declared_total != n_marg + n_cond) {
    throw Error(ErrorCode::CountMismatch,
                "header declares " + std::to_string(declared_total) + " event(s), blocks hold " +
                    std::to_string(n_marg + n_cond));
  }
  return doc;
}

inline ExpressionsFile parse_expressions(std::istream& in,
                                          ParseStrictness strictness = ParseStrictness::Strict) {
  detail::Lexer lex(in);
  detail::expect_keyword(lex, "begin.expressions");
  const std::uint64_t declared =
      detail::read_u64(lex, "number-expressions", ErrorCode::MalformedHeader);
  if (declared == 0) {
    throw Error(ErrorCode::MalformedHeader, "an expressions file must hold at least one expression",
                lex.line());
  }
  ExpressionsFile doc;
  std::uint64_t seen = 0;
  for (;;) {
    const std::string* tok = lex.peek();
    if (tok == nullptr) {
      throw Error(ErrorCode::MalformedHeader, "unexpected end of input, expected 'end.expressions'",
                  lex.current_line());
    }
    if (*tok == "end.expressions") {
      lex.take();
      break;
    }
    doc.expressions.push_back(
        detail::parse_expression_node(lex, ExpressionNode::Kind::Event, 0, true, strictness));
    ++seen;
  }
  if (seen != declared) {
    throw Error(ErrorCode::CountMismatch,
                "declared " + std::to_string(declared) + " expression(s), found " +
                    std::to_string(seen));
  }
  detail::expect_end_of_input(lex);
  return doc;
}

// ---------------------------------------------------------------------------
// Validation used by the canonical writers.

namespace detail {

inline void require(bool ok, const std::string& message) {
  if (!ok) {
    throw Error(ErrorCode::InvariantViolation, message);
  }
}

inline void validate(const ParametersFile& doc) {
  require(doc.alphabet_size >= 1, "alphabet-size must be positive");
  std::unordered_set<std::uint64_t> seen;
  for (const auto* block : {&doc.marginal, &doc.conditional}) {
    for (const Parameter& p : *block) {
      require(p.index >= 1, "parameter index 0 is reserved");
      require(seen.insert(p.index).second,
              "parameter index " + std::to_string(p.index) + " repeated");
      require(p.alpha > 0.0 && std::isfinite(p.alpha), "alpha must be positive and finite");
      require(p.target >= 0.0 && std::isfinite(p.target), "target must be non-negative");
    }
  }
}

inline void validate(const EventsFile& doc) {
  std::unordered_set<std::uint64_t> seen_symbols;
  for (const MarginalEvent& e : doc.marginal) {
    require(seen_symbols.insert(e.symbol).second,
            "marginal event for symbol " + std::to_string(e.symbol) + " repeated");
    for (std::uint64_t idx : e.feature_indices) {
      require(idx >= 1, "feature index 0 is reserved");
    }
  }
  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> seen_pairs;
  for (const ConditionalEvent& e : doc.conditional) {
    require(seen_pairs.insert({e.context, e.symbol}).second,
            "conditional event (" + std::to_string(e.context) + "," +
                std::to_string(e.symbol) + ") repeated");
    for (std::uint64_t idx : e.feature_indices) {
      require(idx >= 1, "feature index 0 is reserved");
    }
  }
}

inline void validate_node(const ExpressionNode& node, ExpressionNode::Kind parent,
                          std::size_t depth, bool top_level) {
  require(depth <= kMaxExpressionDepth, "expression nesting exceeds supported depth");
  switch (node.kind) {
    case ExpressionNode::Kind::Event:
      require(node.event.count == 1, "expression event frequency must be 1");
      for (std::uint64_t idx : node.event.feature_indices) {
        require(idx >= 1, "feature index 0 is reserved");
      }
      require(node.children.empty(), "event node cannot hold children");
      break;
    case ExpressionNode::Kind::Product:
      require(top_level || parent != ExpressionNode::Kind::Product,
              "product nested directly inside product");
      for (const ExpressionNode& child : node.children) {
        require(child.kind != ExpressionNode::Kind::Product,
                "product nested directly inside product");
        validate_node(child, node.kind, depth + 1, false);
      }
      break;
    case ExpressionNode::Kind::Sum:
      require(top_level || parent != ExpressionNode::Kind::Sum, "sum nested directly inside sum");
      for (const ExpressionNode& child : node.children) {
        require(child.kind != ExpressionNode::Kind::Sum, "sum nested directly inside sum");
        validate_node(child, node.kind, depth + 1, false);
      }
      break;
  }
}

inline void validate(const ExpressionsFile& doc) {
  require(!doc.expressions.empty(), "an expressions file must hold at least one expression");
  for (const ExpressionNode& node : doc.expressions) {
    validate_node(node, ExpressionNode::Kind::Event, 0, true);
  }
}

inline void write_conditional_record(std::ostream& out, const ConditionalEvent& e) {
  out << e.context << ' ' << e.symbol << ' ' << e.count << ' ' << e.feature_indices.size();
  for (std::uint64_t idx : e.feature_indices) {
    out << ' ' << idx;
  }
  out << '\n';
}

inline void write_node(std::ostream& out, const ExpressionNode& node) {
  switch (node.kind) {
    case ExpressionNode::Kind::Event:
      write_conditional_record(out, node.event);
      break;
    case ExpressionNode::Kind::Product:
    case ExpressionNode::Kind::Sum: {
      const bool product = node.kind == ExpressionNode::Kind::Product;
      out << (product ? "begin.product " : "begin.sum ") << node.children.size() << '\n';
      for (const ExpressionNode& child : node.children) {
        write_node(out, child);
      }
      out << (product ? "end.product" : "end.sum") << '\n';
      break;
    }
  }
}

}  // namespace detail

// Canonical writers: one record per line, single-space delimited, LF line
// ends, floats in shortest round-trip form. parse(serialize(doc)) == doc.

inline void serialize(const ParametersFile& doc, std::ostream& out) {
  detail::validate(doc);
  out << "begin.parameters " << doc.alphabet_size << ' '
      << doc.marginal.size() + doc.conditional.size() << '\n';
  out << "begin.marginal " << doc.marginal.size() << '\n';
  for (const Parameter& p : doc.marginal) {
    out << p.index << ' ' << detail::format_f64(p.alpha) << ' ' << detail::format_f64(p.target)
        << '\n';
  }
  out << "end.marginal\n";
  out << "begin.conditional " << doc.conditional.size() << '\n';
  for (const Parameter& p : doc.conditional) {
    out << p.index << ' ' << detail::format_f64(p.alpha) << ' ' << detail::format_f64(p.target)
        << '\n';
  }
  out << "end.conditional\n";
  out << "end.parameters\n";
}

inline void serialize(const EventsFile& doc, std::ostream& out) {
  detail::validate(doc);
  out << "begin.events " << doc.marginal.size() + doc.conditional.size() << '\n';
  out << "begin.marginal " << doc.marginal.size() << '\n';
  for (const MarginalEvent& e : doc.marginal) {
    out << e.symbol << ' ' << e.feature_indices.size();
    for (std::uint64_t idx : e.feature_indices) {
      out << ' ' << idx;
    }
    out << '\n';
  }
  out << "end.marginal\n";
  out << "begin.conditional " << doc.conditional.size() << '\n';
  for (const ConditionalEvent& e : doc.conditional) {
    detail::write_conditional_record(out, e);
  }
  out << "end.conditional\n";
  out << "end.events\n";
}

inline void serialize(const ExpressionsFile& doc, std::ostream& out) {
  detail::validate(doc);
  out << "begin.expressions " << doc.expressions.size() << '\n';
  for (const ExpressionNode& node : doc.expressions) {
    detail::write_node(out, node);
  }
  out << "end.expressions\n";
}

template <typename Doc>
std::string to_text(const Doc& doc) {
  std::ostringstream out;
  serialize(doc, out);
  return out.str();
}

inline ParametersFile parse_parameters(const std::string& text,
                                        ParseStrictness strictness = ParseStrictness::Strict) {
  std::istringstream in(text);
  return parse_parameters(in, strictness);
}

inline EventsFile parse_events(const std::string& text,
                               ParseStrictness strictness = ParseStrictness::Strict) {
  std::istringstream in(text);
  return parse_events(in, strictness);
}

inline ExpressionsFile parse_expressions(const std::string& text,
                                         ParseStrictness strictness = ParseStrictness::Strict) {
  std::istringstream in(text);
  return parse_expressions(in, strictness);
}

}  // namespace maxent
