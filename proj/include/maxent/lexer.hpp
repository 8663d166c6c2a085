#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "maxent/errors.hpp"

namespace maxent::detail {

// Whitespace-run tokenizer over a byte stream. One token of lookahead,
// 1-based line tracking for diagnostics. LF and CRLF both count one line.
class Lexer {
 public:
  explicit Lexer(std::istream& in) : in_(in) {}

  // Token waiting at the head of the stream, or nullptr at end of input.
  const std::string* peek() {
    if (!have_) {
      have_ = scan();
    }
    return have_ ? &token_ : nullptr;
  }

  std::string take() {
    peek();
    have_ = false;
    return std::move(token_);
  }

  // Line on which the peeked/last token started.
  std::size_t line() const { return token_line_; }
  std::size_t current_line() const { return line_; }

 private:
  bool scan() {
    token_.clear();
    int c = in_.get();
    while (c != EOF && is_space(c)) {
      if (c == '\n') ++line_;
      c = in_.get();
    }
    if (c == EOF) {
      return false;
    }
    token_line_ = line_;
    while (c != EOF && !is_space(c)) {
      token_.push_back(static_cast<char>(c));
      c = in_.get();
    }
    if (c == '\n') ++line_;
    return true;
  }

  static bool is_space(int c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
  }

  std::istream& in_;
  std::string token_;
  bool have_ = false;
  std::size_t line_ = 1;
  std::size_t token_line_ = 1;
};

inline bool is_keyword(std::string_view tok) {
  return tok.starts_with("begin.") || tok.starts_with("end.");
}

inline std::optional<std::uint64_t> try_parse_u64(std::string_view tok) {
  std::uint64_t value = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    return std::nullopt;
  }
  return value;
}

inline std::optional<double> try_parse_f64(std::string_view tok) {
  double value = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (ec != std::errc() || ptr != last) {
    return std::nullopt;
  }
  return value;
}

// Shortest decimal form that parses back to the same double.
inline std::string format_f64(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace maxent::detail
