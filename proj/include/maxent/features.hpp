#pragma once

// Corpus-to-files feature builder. Scans a token corpus, interns history
// equivalence classes <last-n-symbols, trigger bits>, extracts Markov and
// trigger features above a count threshold, and emits a mutually consistent
// events/parameters pair with unit alphas and empirical targets.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <sstream>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/estimator.hpp"
#include "maxent/formats.hpp"
#include "maxent/lexer.hpp"
#include "maxent/numeric.hpp"

namespace maxent {

struct Corpus {
  std::uint64_t alphabet_size = 0;
  std::vector<std::uint64_t> tokens;
};

// Header line "alphabet <k>" followed by whitespace-separated symbol ids.
inline Corpus parse_corpus(std::istream& in) {
  detail::Lexer lex(in);
  const std::string* tok = lex.peek();
  if (tok == nullptr || *tok != "alphabet") {
    throw Error(ErrorCode::MalformedHeader, "corpus must start with 'alphabet <k>'",
                lex.current_line());
  }
  lex.take();
  Corpus corpus;
  corpus.alphabet_size = detail::read_u64(lex, "alphabet size", ErrorCode::MalformedHeader);
  if (corpus.alphabet_size == 0) {
    throw Error(ErrorCode::MalformedHeader, "alphabet size must be positive", lex.line());
  }
  while (lex.peek() != nullptr) {
    const std::uint64_t symbol = detail::read_u64(lex, "token", ErrorCode::NonNumericToken);
    if (symbol >= corpus.alphabet_size) {
      throw Error(ErrorCode::SymbolOutOfRange,
                  "token " + std::to_string(symbol) + " outside alphabet of size " +
                      std::to_string(corpus.alphabet_size),
                  lex.line());
    }
    corpus.tokens.push_back(symbol);
  }
  if (corpus.tokens.empty()) {
    throw Error(ErrorCode::EmptyCorpus, "corpus holds no tokens");
  }
  return corpus;
}

inline Corpus parse_corpus(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

enum class MarkovMode { Basic, Overlapping, Complemented, Heterogeneous };

inline std::string_view to_string(MarkovMode mode) {
  switch (mode) {
    case MarkovMode::Basic:         return "basic";
    case MarkovMode::Overlapping:   return "overlapping";
    case MarkovMode::Complemented:  return "complemented";
    case MarkovMode::Heterogeneous: return "heterogeneous";
  }
  return "unknown";
}

struct FeatureSpec {
  std::uint64_t order = 1;
  MarkovMode mode = MarkovMode::Overlapping;
  std::uint64_t c_min = 0;               // kept features satisfy count > c_min
  std::vector<std::uint64_t> triggers;   // distinct trigger words
};

struct Feature {
  enum class Kind { Markov, ComplementedMarkov, Trigger };

  std::uint64_t id = 0;
  Kind kind = Kind::Markov;
  std::vector<std::uint64_t> suffix;   // Markov kinds; boundary = alphabet_size
  std::uint64_t trigger_word = 0;      // Trigger kind
  std::uint64_t predicted = 0;         // z
  std::uint64_t count = 0;
  bool is_marginal = false;
};

struct FeatureSet {
  std::vector<Feature> features;  // id order
};

struct ContextKey {
  std::vector<std::uint64_t> suffix;  // always spec.order symbols, boundary-padded
  std::vector<bool> bits;             // one per trigger word

  bool operator==(const ContextKey&) const = default;
};

struct ContextKeyHash {
  std::size_t operator()(const ContextKey& key) const {
    std::uint64_t h = 0x12345678u;
    for (std::uint64_t s : key.suffix) {
      h = detail::mix64(h ^ s);
    }
    for (bool b : key.bits) {
      h = detail::mix64(h ^ (b ? 2u : 1u));
    }
    return static_cast<std::size_t>(h);
  }
};

struct ContextTable {
  std::vector<ContextKey> keys;          // context id -> key, first-occurrence order
  std::vector<std::uint64_t> counts;     // context id -> c(x)
  std::unordered_map<ContextKey, std::uint64_t, ContextKeyHash> lookup;

  std::uint64_t size() const { return keys.size(); }
};

namespace detail {

inline void validate_spec(const Corpus& corpus, const FeatureSpec& spec) {
  std::unordered_set<std::uint64_t> seen;
  for (std::uint64_t w : spec.triggers) {
    if (w >= corpus.alphabet_size) {
      throw Error(ErrorCode::SymbolOutOfRange,
                  "trigger word " + std::to_string(w) + " outside alphabet of size " +
                      std::to_string(corpus.alphabet_size));
    }
    if (!seen.insert(w).second) {
      throw Error(ErrorCode::InvariantViolation,
                  "trigger word " + std::to_string(w) + " listed twice");
    }
  }
}

// Calls fn(position, key) for every corpus position with the key of the
// history preceding it. Histories shorter than the order are padded at the
// front with the boundary marker (= alphabet_size).
template <typename Fn>
void scan_positions(const Corpus& corpus, const FeatureSpec& spec, Fn&& fn) {
  const std::uint64_t boundary = corpus.alphabet_size;
  ContextKey key;
  key.suffix.assign(spec.order, boundary);
  key.bits.assign(spec.triggers.size(), false);
  std::vector<bool> seen(corpus.alphabet_size, false);
  for (std::size_t t = 0; t < corpus.tokens.size(); ++t) {
    for (std::size_t j = 0; j < spec.triggers.size(); ++j) {
      key.bits[j] = seen[spec.triggers[j]];
    }
    fn(t, key);
    if (spec.order > 0) {
      key.suffix.erase(key.suffix.begin());
      key.suffix.push_back(corpus.tokens[t]);
    }
    seen[corpus.tokens[t]] = true;
  }
}

inline bool suffix_matches(const std::vector<std::uint64_t>& context_suffix,
                           const std::vector<std::uint64_t>& feature_suffix) {
  if (feature_suffix.size() > context_suffix.size()) {
    return false;
  }
  return std::equal(feature_suffix.rbegin(), feature_suffix.rend(), context_suffix.rbegin());
}

inline std::vector<std::uint64_t> tail(const std::vector<std::uint64_t>& suffix,
                                       std::uint64_t length) {
  return {suffix.end() - static_cast<std::ptrdiff_t>(length), suffix.end()};
}

}  // namespace detail

inline ContextTable intern_contexts(const Corpus& corpus, const FeatureSpec& spec) {
  detail::validate_spec(corpus, spec);
  ContextTable table;
  detail::scan_positions(corpus, spec, [&](std::size_t, const ContextKey& key) {
    auto [it, inserted] = table.lookup.try_emplace(key, table.keys.size());
    if (inserted) {
      table.keys.push_back(key);
      table.counts.push_back(0);
    }
    table.counts[it->second] += 1;
  });
  return table;
}

inline FeatureSet extract_features(const Corpus& corpus, const FeatureSpec& spec) {
  detail::validate_spec(corpus, spec);
  using SuffixKey = std::pair<std::vector<std::uint64_t>, std::uint64_t>;  // (w^i, z)

  std::vector<Feature> collected;

  const auto collect_plain = [&](std::uint64_t order_lo, std::uint64_t order_hi) {
    for (std::uint64_t i = order_lo; i <= order_hi; ++i) {
      std::map<SuffixKey, std::uint64_t> counts;
      detail::scan_positions(corpus, spec, [&](std::size_t t, const ContextKey& key) {
        std::vector<std::uint64_t> w =
            i == 0 ? std::vector<std::uint64_t>{} : detail::tail(key.suffix, i);
        counts[{std::move(w), corpus.tokens[t]}] += 1;
      });
      for (const auto& [sk, count] : counts) {
        if (count > spec.c_min) {
          Feature f;
          f.kind = Feature::Kind::Markov;
          f.suffix = sk.first;
          f.predicted = sk.second;
          f.count = count;
          f.is_marginal = f.suffix.empty();
          collected.push_back(std::move(f));
        }
      }
    }
  };

  // Complemented features are thresholded on the count of positions they win:
  // a lower-order feature fires only where no selected higher-order feature
  // in its family covers the position.
  const auto collect_complemented = [&] {
    std::vector<bool> covered(corpus.tokens.size(), false);
    for (std::uint64_t step = 0; step <= spec.order; ++step) {
      const std::uint64_t i = spec.order - step;
      std::map<SuffixKey, std::uint64_t> counts;
      detail::scan_positions(corpus, spec, [&](std::size_t t, const ContextKey& key) {
        if (covered[t]) {
          return;
        }
        std::vector<std::uint64_t> w =
            i == 0 ? std::vector<std::uint64_t>{} : detail::tail(key.suffix, i);
        counts[{std::move(w), corpus.tokens[t]}] += 1;
      });
      std::map<SuffixKey, std::uint64_t> selected;
      for (const auto& [sk, count] : counts) {
        if (count > spec.c_min) {
          selected.emplace(sk, count);
          Feature f;
          f.kind = Feature::Kind::ComplementedMarkov;
          f.suffix = sk.first;
          f.predicted = sk.second;
          f.count = count;
          f.is_marginal = false;  // firing depends on the context even at order 0
          collected.push_back(std::move(f));
        }
      }
      if (!selected.empty()) {
        detail::scan_positions(corpus, spec, [&](std::size_t t, const ContextKey& key) {
          if (covered[t]) {
            return;
          }
          std::vector<std::uint64_t> w =
              i == 0 ? std::vector<std::uint64_t>{} : detail::tail(key.suffix, i);
          if (selected.contains({std::move(w), corpus.tokens[t]})) {
            covered[t] = true;
          }
        });
      }
    }
  };

  switch (spec.mode) {
    case MarkovMode::Basic:
      collect_plain(spec.order, spec.order);
      break;
    case MarkovMode::Overlapping:
      collect_plain(0, spec.order);
      break;
    case MarkovMode::Complemented:
      collect_complemented();
      break;
    case MarkovMode::Heterogeneous:
      collect_plain(0, spec.order);
      collect_complemented();
      break;
  }

  if (!spec.triggers.empty()) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t> counts;
    detail::scan_positions(corpus, spec, [&](std::size_t t, const ContextKey& key) {
      for (std::size_t j = 0; j < spec.triggers.size(); ++j) {
        if (key.bits[j]) {
          counts[{spec.triggers[j], corpus.tokens[t]}] += 1;
        }
      }
    });
    for (const auto& [wz, count] : counts) {
      if (count > spec.c_min) {
        Feature f;
        f.kind = Feature::Kind::Trigger;
        f.trigger_word = wz.first;
        f.predicted = wz.second;
        f.count = count;
        f.is_marginal = false;
        collected.push_back(std::move(f));
      }
    }
  }

  const auto rank = [](const Feature& f) {
    switch (f.kind) {
      case Feature::Kind::Markov:             return 0;
      case Feature::Kind::ComplementedMarkov: return 1;
      case Feature::Kind::Trigger:            return 2;
    }
    return 3;
  };
  std::sort(collected.begin(), collected.end(), [&](const Feature& a, const Feature& b) {
    if (rank(a) != rank(b)) {
      return rank(a) < rank(b);
    }
    if (a.kind == Feature::Kind::Trigger) {
      return std::tie(a.trigger_word, a.predicted) < std::tie(b.trigger_word, b.predicted);
    }
    return std::tie(a.suffix, a.predicted) < std::tie(b.suffix, b.predicted);
  });

  FeatureSet fs;
  fs.features = std::move(collected);
  std::uint64_t next_id = 1;
  for (Feature& f : fs.features) {
    f.id = next_id++;
  }
  return fs;
}

namespace detail {

// Conditional feature ids active on (context, symbol), complementation
// applied: a complemented feature fires only when no selected higher-order
// complemented feature predicting the same symbol matches the context.
// candidates holds the non-marginal features predicting this symbol.
inline std::vector<std::uint64_t> active_conditional(const ContextKey& key,
                                                     const std::vector<const Feature*>& candidates,
                                                     const std::vector<std::uint64_t>& triggers) {
  std::vector<std::uint64_t> active;
  std::size_t best_comp_order = 0;
  bool any_comp = false;
  for (const Feature* f : candidates) {
    if (f->kind == Feature::Kind::ComplementedMarkov && suffix_matches(key.suffix, f->suffix)) {
      any_comp = true;
      best_comp_order = std::max(best_comp_order, f->suffix.size());
    }
  }
  for (const Feature* f : candidates) {
    switch (f->kind) {
      case Feature::Kind::Markov:
        if (suffix_matches(key.suffix, f->suffix)) {
          active.push_back(f->id);
        }
        break;
      case Feature::Kind::ComplementedMarkov:
        if (any_comp && f->suffix.size() == best_comp_order &&
            suffix_matches(key.suffix, f->suffix)) {
          active.push_back(f->id);
        }
        break;
      case Feature::Kind::Trigger:
        for (std::size_t j = 0; j < triggers.size(); ++j) {
          if (triggers[j] == f->trigger_word && key.bits[j]) {
            active.push_back(f->id);
            break;
          }
        }
        break;
    }
  }
  std::sort(active.begin(), active.end());
  return active;
}

}  // namespace detail

// One conditional record per (context, symbol) pair that was observed or
// activates a conditional feature; one marginal record per symbol with a
// marginal feature.
inline EventsFile emit_events(const Corpus& corpus, const FeatureSpec& spec,
                              const ContextTable& table, const FeatureSet& fs) {
  detail::validate_spec(corpus, spec);
  EventsFile events;

  std::map<std::uint64_t, std::vector<std::uint64_t>> marginal_by_symbol;
  for (const Feature& f : fs.features) {
    if (f.is_marginal) {
      marginal_by_symbol[f.predicted].push_back(f.id);
    }
  }
  for (auto& [symbol, ids] : marginal_by_symbol) {
    std::sort(ids.begin(), ids.end());
    events.marginal.push_back(MarginalEvent{symbol, ids});
  }

  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::uint64_t, detail::PairHash>
      pair_counts;
  detail::scan_positions(corpus, spec, [&](std::size_t t, const ContextKey& key) {
    pair_counts[{table.lookup.at(key), corpus.tokens[t]}] += 1;
  });

  std::vector<std::vector<const Feature*>> by_symbol(corpus.alphabet_size);
  for (const Feature& f : fs.features) {
    if (!f.is_marginal && f.predicted < corpus.alphabet_size) {
      by_symbol[f.predicted].push_back(&f);
    }
  }

  for (std::uint64_t ctx = 0; ctx < table.size(); ++ctx) {
    const ContextKey& key = table.keys[ctx];
    for (std::uint64_t z = 0; z < corpus.alphabet_size; ++z) {
      std::uint64_t count = 0;
      if (auto it = pair_counts.find({ctx, z}); it != pair_counts.end()) {
        count = it->second;
      }
      std::vector<std::uint64_t> active =
          detail::active_conditional(key, by_symbol[z], spec.triggers);
      if (count > 0 || !active.empty()) {
        events.conditional.push_back(ConditionalEvent{ctx, z, count, std::move(active)});
      }
    }
  }
  return events;
}

// Unit alphas, empirical targets taken from the emitted events file.
inline ParametersFile emit_parameters(const FeatureSet& fs, const EventsFile& events,
                                      std::uint64_t alphabet_size) {
  const EmpiricalSummary summary = summarize_empirical(events);
  ParametersFile params;
  params.alphabet_size = alphabet_size;
  for (const Feature& f : fs.features) {
    Parameter p{f.id, 1.0, summary.target_of(f.id)};
    if (f.is_marginal) {
      params.marginal.push_back(p);
    } else {
      params.conditional.push_back(p);
    }
  }
  return params;
}

}  // namespace maxent
