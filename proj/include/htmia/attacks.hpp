// Copyright 2026 The htmia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Membership inference attacks over token traces.
//
// Every attack returns a score oriented so that a higher value means "more
// likely a training member". Loss-style quantities are negated here so that
// downstream metrics never need per-attack orientation flags.
//
// Degenerate inputs (empty traces, zero variance, zero reference loss) yield a
// finite sentinel with `degenerate` set instead of an error, so that a single
// bad sample does not abort a batch audit.

#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "htmia/errors.hpp"
#include "htmia/trace.hpp"

namespace htmia {

enum class Attack { kHtMia, kLoss, kRatio, kZlib, kMinKpp, kLowercase, kPac };

inline constexpr std::array<Attack, 7> kAllAttacks = {
    Attack::kHtMia, Attack::kLoss,      Attack::kRatio, Attack::kZlib,
    Attack::kMinKpp, Attack::kLowercase, Attack::kPac};

inline std::string_view attack_name(Attack a) {
  switch (a) {
    case Attack::kHtMia:
      return "ht_mia";
    case Attack::kLoss:
      return "loss";
    case Attack::kRatio:
      return "ratio";
    case Attack::kZlib:
      return "zlib";
    case Attack::kMinKpp:
      return "min_k_pp";
    case Attack::kLowercase:
      return "lowercase";
    case Attack::kPac:
      break;
  }
  return "pac";
}

inline std::optional<Attack> parse_attack(std::string_view name) {
  for (auto a : kAllAttacks) {
    if (attack_name(a) == name) return a;
  }
  return std::nullopt;
}

struct AttackScore {
  std::string sample_id;
  Attack attack = Attack::kHtMia;
  double score = 0.0;
  bool degenerate = false;
};

// Which model's probabilities rank positions when picking hard tokens.
enum class SelectionStrategy { kByTarget, kByReference };

inline std::string_view strategy_name(SelectionStrategy s) {
  return s == SelectionStrategy::kByTarget ? "by_target" : "by_reference";
}

inline std::optional<SelectionStrategy> parse_strategy(std::string_view s) {
  if (s == "by_target") return SelectionStrategy::kByTarget;
  if (s == "by_reference") return SelectionStrategy::kByReference;
  return std::nullopt;
}

struct SelectionConfig {
  std::int64_t min_k = 5;
  std::int64_t max_k = 100;
  double alpha = 0.2;
  SelectionStrategy strategy = SelectionStrategy::kByTarget;
  // A selected position counts as improved iff delta > margin. Zero is the
  // plain hard-token rule; other values exist for sweeps.
  double margin = 0.0;

  void validate() const {
    if (min_k < 1) throw UsageError("min_k must be a positive integer");
    if (max_k < min_k) throw UsageError("max_k must be >= min_k");
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw UsageError("alpha must lie in (0, 1]");
    }
    if (!std::isfinite(margin)) throw UsageError("margin must be finite");
  }
};

// Absorbs representation error in alpha * L (e.g. 0.29 * 100) before flooring.
inline constexpr double kFloorSlack = 1e-9;

// Number of hard tokens to inspect in a sequence with L scored positions.
inline std::size_t select_k(std::size_t length, const SelectionConfig& cfg) {
  const auto scaled = static_cast<std::int64_t>(
      std::floor(cfg.alpha * static_cast<double>(length) + kFloorSlack));
  const std::int64_t k = std::min(cfg.max_k, std::max(cfg.min_k, scaled));
  return std::min(static_cast<std::size_t>(k), length);
}

// Indices of the k smallest values, ties broken by ascending index. The
// returned indices are in no particular order.
inline std::vector<std::size_t> smallest_k_positions(
    std::span<const double> values, std::size_t k) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  auto before = [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  };
  if (k < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                     idx.end(), before);
  }
  idx.resize(k);
  return idx;
}

// Fraction of `positions` at which target - reference > margin.
inline double fraction_improved(std::span<const double> target,
                                std::span<const double> reference,
                                std::span<const std::size_t> positions,
                                double margin = 0.0) {
  if (positions.empty()) return 0.5;
  std::size_t improved = 0;
  for (auto i : positions) {
    if (target[i] - reference[i] > margin) ++improved;
  }
  return static_cast<double>(improved) / static_cast<double>(positions.size());
}

inline AttackScore ht_mia_score(const SampleRecord& rec,
                                const SelectionConfig& cfg) {
  const auto& qf = rec.target.next_token_probs;
  const auto& qb = rec.reference.next_token_probs;
  AttackScore out{rec.sample_id, Attack::kHtMia, 0.5, false};
  const std::size_t k = select_k(std::min(qf.size(), qb.size()), cfg);
  if (k == 0) {
    out.degenerate = true;
    return out;
  }
  const auto& ranking =
      cfg.strategy == SelectionStrategy::kByTarget ? qf : qb;
  const auto hard = smallest_k_positions(ranking, k);
  out.score = fraction_improved(qf, qb, hard, cfg.margin);
  return out;
}

namespace detail {

inline double total_nll(std::span<const double> probs) {
  double s = 0.0;
  for (double p : probs) s -= floored_log(p);
  return s;
}

inline double mean_nll(std::span<const double> probs) {
  return total_nll(probs) / static_cast<double>(probs.size());
}

inline std::vector<double> log_probs(std::span<const double> probs) {
  std::vector<double> g(probs.size());
  std::transform(probs.begin(), probs.end(), g.begin(), floored_log);
  return g;
}

}  // namespace detail

inline AttackScore loss_score(const TokenTrace& trace) {
  AttackScore out{trace.sample_id, Attack::kLoss, 0.0, false};
  if (trace.empty()) {
    out.degenerate = true;
    return out;
  }
  out.score = -detail::mean_nll(trace.next_token_probs);
  return out;
}

inline AttackScore ratio_score(const SampleRecord& rec) {
  AttackScore out{rec.sample_id, Attack::kRatio, 0.0, false};
  const double nll_tgt = detail::total_nll(rec.target.next_token_probs);
  const double nll_ref = detail::total_nll(rec.reference.next_token_probs);
  if (nll_ref == 0.0) {
    out.degenerate = true;
    out.score = nll_tgt == 0.0 ? 0.0 : std::numeric_limits<double>::lowest();
    return out;
  }
  out.score = -nll_tgt / nll_ref;
  return out;
}

// Compressed bytes per input byte, using the zlib stream format at level 6.
inline double zlib_entropy(std::string_view bytes) {
  if (bytes.empty()) return 0.0;
  uLongf size = compressBound(static_cast<uLong>(bytes.size()));
  std::vector<Bytef> buf(size);
  const int rc = compress2(buf.data(), &size,
                           reinterpret_cast<const Bytef*>(bytes.data()),
                           static_cast<uLong>(bytes.size()), 6);
  if (rc != Z_OK) {
    throw Error(ErrorKind::kInternal,
                "zlib compress2 failed with code " + std::to_string(rc));
  }
  return static_cast<double>(size) / static_cast<double>(bytes.size());
}

inline AttackScore zlib_score(const TokenTrace& trace,
                              std::string_view raw_text) {
  AttackScore out{trace.sample_id, Attack::kZlib, 0.0, false};
  const double entropy = zlib_entropy(raw_text);
  if (trace.empty() || entropy == 0.0) {
    out.degenerate = true;
    return out;
  }
  out.score = -detail::mean_nll(trace.next_token_probs) / entropy;
  return out;
}

// Number of positions covered by a fraction of a sequence, at least one.
inline std::size_t fraction_count(double fraction, std::size_t length) {
  auto n = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(length) - kFloorSlack));
  return std::clamp<std::size_t>(n, 1, length);
}

// Min-K%++ with mean and population standard deviation taken over the
// sequence's own token log-probabilities.
inline AttackScore min_k_pp_score(const TokenTrace& trace, double k_fraction) {
  AttackScore out{trace.sample_id, Attack::kMinKpp, 0.0, false};
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) {
    throw UsageError("min_k_pp fraction must lie in (0, 1]");
  }
  if (trace.empty()) {
    out.degenerate = true;
    return out;
  }
  const auto g = detail::log_probs(trace.next_token_probs);
  const auto [lo, hi] = std::minmax_element(g.begin(), g.end());
  if (*lo == *hi) {
    out.degenerate = true;
    return out;
  }
  const double n = static_cast<double>(g.size());
  const double mu = std::accumulate(g.begin(), g.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : g) ss += (v - mu) * (v - mu);
  const double sigma = std::sqrt(ss / n);

  const auto chosen = smallest_k_positions(g, fraction_count(k_fraction,
                                                             g.size()));
  double z = 0.0;
  for (auto i : chosen) z += (g[i] - mu) / sigma;
  out.score = z / static_cast<double>(chosen.size());
  return out;
}

inline double perplexity(const TokenTrace& trace) {
  if (trace.empty()) return 1.0;
  return std::exp(detail::mean_nll(trace.next_token_probs));
}

inline AttackScore lowercase_score(const SampleRecord& rec) {
  AttackScore out{rec.sample_id, Attack::kLowercase, 0.0, false};
  const auto* lower =
      rec.find_variant(rec.target.model_id, Variant::lowercase());
  if (lower == nullptr) {
    throw ValidationError("sample '" + rec.sample_id +
                          "': missing lowercase variant trace for model '" +
                          rec.target.model_id + "'");
  }
  if (rec.target.empty() || lower->empty()) {
    out.degenerate = true;
    return out;
  }
  out.score = perplexity(rec.target) - perplexity(*lower);
  return out;
}

// Mean of the k largest log-probabilities minus mean of the k smallest, with
// k = min(k_tokens, L). For L < k_tokens both sets span the whole sequence.
inline double polarized_distance(const TokenTrace& trace,
                                 std::size_t k_tokens) {
  if (trace.empty()) return 0.0;
  auto g = detail::log_probs(trace.next_token_probs);
  std::sort(g.begin(), g.end());
  const std::size_t k = std::min(k_tokens, g.size());
  const double bottom = std::accumulate(g.begin(), g.begin() + k, 0.0);
  const double top = std::accumulate(g.end() - k, g.end(), 0.0);
  return (top - bottom) / static_cast<double>(k);
}

inline AttackScore pac_score(const SampleRecord& rec, std::size_t k_tokens,
                             std::size_t n_aug) {
  AttackScore out{rec.sample_id, Attack::kPac, 0.0, false};
  if (k_tokens == 0 || n_aug == 0) {
    throw UsageError("pac k_tokens and n_aug must be positive");
  }
  std::vector<const TokenTrace*> augmented;
  for (std::size_t j = 0; j < n_aug; ++j) {
    const auto* t = rec.find_variant(rec.target.model_id,
                                     Variant::augmented(static_cast<int>(j)));
    if (t == nullptr) {
      throw ValidationError("sample '" + rec.sample_id + "': pac needs " +
                            std::to_string(n_aug) +
                            " augmented traces, augmented(" +
                            std::to_string(j) + ") is missing");
    }
    augmented.push_back(t);
  }
  out.degenerate = rec.target.empty();
  double neighbours = 0.0;
  for (const auto* t : augmented) {
    out.degenerate = out.degenerate || t->empty();
    neighbours += polarized_distance(*t, k_tokens);
  }
  out.score = polarized_distance(rec.target, k_tokens) -
              neighbours / static_cast<double>(n_aug);
  return out;
}

enum class Decision { kMember, kNonmember };

inline Decision classify(double score, double tau) {
  return score >= tau ? Decision::kMember : Decision::kNonmember;
}

struct AttackParams {
  SelectionConfig selection;
  double min_k_pp_fraction = 0.2;
  std::size_t pac_k_tokens = 10;
  std::size_t pac_n_aug = 5;

  void validate() const {
    selection.validate();
    if (!(min_k_pp_fraction > 0.0 && min_k_pp_fraction <= 1.0)) {
      throw UsageError("min_k_pp fraction must lie in (0, 1]");
    }
    if (pac_k_tokens == 0 || pac_n_aug == 0) {
      throw UsageError("pac k_tokens and n_aug must be positive");
    }
  }
};

struct ScoreFailure {
  std::string sample_id;
  Attack attack;
  std::string reason;
};

struct BatchScores {
  std::vector<AttackScore> scores;  // ordered by (sample_id, attack name)
  std::vector<ScoreFailure> failures;
};

// Raw texts are needed only by the zlib attack.
inline AttackScore score_one(const SampleRecord& rec, Attack attack,
                             const AttackParams& params,
                             const std::map<std::string, std::string>* texts) {
  switch (attack) {
    case Attack::kHtMia:
      return ht_mia_score(rec, params.selection);
    case Attack::kLoss:
      return loss_score(rec.target);
    case Attack::kRatio:
      return ratio_score(rec);
    case Attack::kZlib: {
      if (texts == nullptr) {
        throw ValidationError("zlib attack requires a raw-text sidecar");
      }
      auto it = texts->find(rec.sample_id);
      if (it == texts->end()) {
        throw ValidationError("sample '" + rec.sample_id +
                              "': missing sidecar text");
      }
      return zlib_score(rec.target, it->second);
    }
    case Attack::kMinKpp:
      return min_k_pp_score(rec.target, params.min_k_pp_fraction);
    case Attack::kLowercase:
      return lowercase_score(rec);
    case Attack::kPac:
      return pac_score(rec, params.pac_k_tokens, params.pac_n_aug);
  }
  throw Error(ErrorKind::kInternal, "unhandled attack");
}

inline BatchScores score_batch(
    const std::vector<SampleRecord>& records, std::vector<Attack> attacks,
    const AttackParams& params,
    const std::map<std::string, std::string>* texts = nullptr) {
  params.validate();
  std::sort(attacks.begin(), attacks.end(), [](Attack a, Attack b) {
    return attack_name(a) < attack_name(b);
  });
  attacks.erase(std::unique(attacks.begin(), attacks.end()), attacks.end());

  std::vector<const SampleRecord*> order;
  order.reserve(records.size());
  for (const auto& r : records) order.push_back(&r);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    return a->sample_id < b->sample_id;
  });

  BatchScores out;
  for (const auto* rec : order) {
    for (auto attack : attacks) {
      try {
        out.scores.push_back(score_one(*rec, attack, params, texts));
      } catch (const ValidationError& e) {
        out.failures.push_back({rec->sample_id, attack, e.what()});
      }
    }
  }
  return out;
}

}  // namespace htmia
