#pragma once

// Conditional exponential model m(y|x) = r(y|x) / Z(x). The partition
// function uses the marginal/conditional split: Z(x) is the cached marginal
// mass plus a correction term per symbol that is conditionally active in x,
// so a query costs O(|Y_x+|) instead of O(|Y|).

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "maxent/errors.hpp"
#include "maxent/formats.hpp"
#include "maxent/numeric.hpp"

namespace maxent {

class Model {
 public:
  struct ContextEntry {
    std::uint64_t symbol;
    std::vector<std::uint64_t> indices;  // conditional activation multiset, non-empty
  };

  Model(const ParametersFile& params, const EventsFile& events) {
    alphabet_size_ = params.alphabet_size;
    for (const Parameter& p : params.marginal) {
      alphas_.emplace(p.index, p.alpha);
      marginal_set_.insert(p.index);
      all_indices_.push_back(p.index);
    }
    for (const Parameter& p : params.conditional) {
      alphas_.emplace(p.index, p.alpha);
      conditional_set_.insert(p.index);
      all_indices_.push_back(p.index);
    }
    std::sort(all_indices_.begin(), all_indices_.end());

    for (const MarginalEvent& e : events.marginal) {
      check_symbol(e.symbol);
      for (std::uint64_t idx : e.feature_indices) {
        if (!alphas_.contains(idx)) {
          throw Error(ErrorCode::UnknownFeature,
                      "marginal event lists feature " + std::to_string(idx) +
                          " absent from the parameters");
        }
        if (!marginal_set_.contains(idx)) {
          throw Error(ErrorCode::ClassMismatch,
                      "conditional parameter " + std::to_string(idx) +
                          " listed in a marginal event");
        }
      }
      if (!e.feature_indices.empty()) {
        marg_symbols_.push_back(e.symbol);
        marg_act_.emplace(e.symbol, e.feature_indices);
      }
    }
    std::sort(marg_symbols_.begin(), marg_symbols_.end());

    for (const ConditionalEvent& e : events.conditional) {
      check_symbol(e.symbol);
      for (std::uint64_t idx : e.feature_indices) {
        if (!alphas_.contains(idx)) {
          throw Error(ErrorCode::UnknownFeature,
                      "conditional event lists feature " + std::to_string(idx) +
                          " absent from the parameters");
        }
        if (!conditional_set_.contains(idx)) {
          throw Error(ErrorCode::ClassMismatch,
                      "marginal parameter " + std::to_string(idx) +
                          " listed in a conditional event");
        }
      }
      if (e.feature_indices.empty()) {
        continue;  // r(y|x) == r(y); contributes nothing to the correction
      }
      auto [it, inserted] = ctx_lookup_.try_emplace(e.context, contexts_.size());
      if (inserted) {
        contexts_.push_back(e.context);
        ctx_entries_.emplace_back();
      }
      ctx_entries_[it->second].push_back(ContextEntry{e.symbol, e.feature_indices});
    }
    refresh();
  }

  std::uint64_t alphabet_size() const { return alphabet_size_; }

  double alpha(std::uint64_t index) const {
    auto it = alphas_.find(index);
    if (it == alphas_.end()) {
      throw Error(ErrorCode::UnknownFeature, "no parameter with index " + std::to_string(index));
    }
    return it->second;
  }

  void set_alpha(std::uint64_t index, double value) {
    auto it = alphas_.find(index);
    if (it == alphas_.end()) {
      throw Error(ErrorCode::UnknownFeature, "no parameter with index " + std::to_string(index));
    }
    it->second = value;
  }

  bool is_marginal_index(std::uint64_t index) const { return marginal_set_.contains(index); }

  // Sorted list of every parameter index; the deterministic iteration order
  // used by the estimator.
  const std::vector<std::uint64_t>& indices() const { return all_indices_; }

  // Recompute the per-symbol marginal weights and the marginal mass after
  // alpha updates.
  void refresh() {
    marg_weight_.clear();
    detail::KahanSum mass;
    for (std::uint64_t y : marg_symbols_) {
      double w = 1.0;
      for (std::uint64_t idx : marg_act_.at(y)) {
        w *= alphas_.at(idx);
      }
      marg_weight_[y] = w;
      mass.add(w);
    }
    mass.add(static_cast<double>(alphabet_size_ - marg_symbols_.size()));
    marg_mass_ = mass.value();
  }

  double marginal_mass() const { return marg_mass_; }

  // r(y): product of the marginal alphas active on y; 1 when none are.
  double weight_marg(std::uint64_t symbol) const {
    check_symbol(symbol);
    auto it = marg_weight_.find(symbol);
    return it == marg_weight_.end() ? 1.0 : it->second;
  }

  // r(y|x) = r(y) * prod of the conditional alphas active on (x,y).
  double weight_cond(std::uint64_t context, std::uint64_t symbol) const {
    double w = weight_marg(symbol);
    if (const ContextEntry* e = find_entry(context, symbol)) {
      for (std::uint64_t idx : e->indices) {
        w *= alphas_.at(idx);
      }
    }
    return w;
  }

  // Z(x) via the sparse decomposition; O(|Y_x+|).
  double partition(std::uint64_t context) const {
    detail::KahanSum z;
    z.add(marg_mass_);
    if (const std::vector<ContextEntry>* entries = context_entries(context)) {
      for (const ContextEntry& e : *entries) {
        const double wm = weight_marg(e.symbol);
        double wc = wm;
        for (std::uint64_t idx : e.indices) {
          wc *= alphas_.at(idx);
        }
        z.add(wc - wm);
      }
    }
    return z.value();
  }

  // Test oracle: the same sum taken naively over the whole alphabet.
  double partition_bruteforce(std::uint64_t context) const {
    detail::KahanSum z;
    for (std::uint64_t y = 0; y < alphabet_size_; ++y) {
      z.add(weight_cond(context, y));
    }
    return z.value();
  }

  double cond_prob(std::uint64_t context, std::uint64_t symbol) const {
    return weight_cond(context, symbol) / partition(context);
  }

  // n(y): total marginal activation of a symbol.
  std::uint64_t marginal_activation(std::uint64_t symbol) const {
    auto it = marg_act_.find(symbol);
    return it == marg_act_.end() ? 0 : it->second.size();
  }

  const std::vector<std::uint64_t>* marginal_indices(std::uint64_t symbol) const {
    auto it = marg_act_.find(symbol);
    return it == marg_act_.end() ? nullptr : &it->second;
  }

  // Symbols carrying marginal activations, ascending.
  const std::vector<std::uint64_t>& marginal_symbols() const { return marg_symbols_; }

  // Conditionally active entries of a context, or nullptr for novel contexts.
  const std::vector<ContextEntry>* context_entries(std::uint64_t context) const {
    auto it = ctx_lookup_.find(context);
    return it == ctx_lookup_.end() ? nullptr : &ctx_entries_[it->second];
  }

 private:
  void check_symbol(std::uint64_t symbol) const {
    if (symbol >= alphabet_size_) {
      throw Error(ErrorCode::SymbolOutOfRange,
                  "symbol " + std::to_string(symbol) + " outside alphabet of size " +
                      std::to_string(alphabet_size_));
    }
  }

  const ContextEntry* find_entry(std::uint64_t context, std::uint64_t symbol) const {
    const std::vector<ContextEntry>* entries = context_entries(context);
    if (entries == nullptr) {
      return nullptr;
    }
    for (const ContextEntry& e : *entries) {
      if (e.symbol == symbol) {
        return &e;
      }
    }
    return nullptr;
  }

  std::uint64_t alphabet_size_ = 0;
  std::unordered_map<std::uint64_t, double> alphas_;
  std::unordered_set<std::uint64_t> marginal_set_;
  std::unordered_set<std::uint64_t> conditional_set_;
  std::vector<std::uint64_t> all_indices_;

  std::vector<std::uint64_t> marg_symbols_;
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> marg_act_;
  std::unordered_map<std::uint64_t, double> marg_weight_;
  double marg_mass_ = 0.0;

  std::vector<std::uint64_t> contexts_;  // first-occurrence order
  std::vector<std::vector<ContextEntry>> ctx_entries_;
  std::unordered_map<std::uint64_t, std::size_t> ctx_lookup_;
};

}  // namespace maxent
