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

// Empirical checks of the statistical guarantees behind hard-token scoring,
// the synthetic trace generator, and the DP-SGD aggregation step.
//
// The score model: each of K selected tokens contributes an independent
// indicator Z_i ~ Bernoulli(p_mem) for members and Bernoulli(p_non) for
// nonmembers, and the score is S = mean(Z_i). Hoeffding gives
//
//   P[S <= tau | member]    <= exp(-2 K (p_mem - tau)^2)
//   P[S >= tau | nonmember] <= exp(-2 K (tau - p_non)^2)
//
// All stochastic routines take a mandatory seed and draw from htmia::Rng.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htmia/attacks.hpp"
#include "htmia/errors.hpp"
#include "htmia/rng.hpp"
#include "htmia/trace.hpp"

namespace htmia {

// Width of the Monte Carlo envelope, in binomial standard errors.
inline constexpr double kMonteCarloSlack = 3.0;

inline double binomial_se(double p, std::uint64_t n) {
  p = std::clamp(p, 0.0, 1.0);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

inline double hoeffding_bound(std::uint64_t k, double deviation) {
  return std::exp(-2.0 * static_cast<double>(k) * deviation * deviation);
}

struct BernoulliWorld {
  double p_mem = 0.9;
  double p_non = 0.1;
  std::uint64_t k = 1;
  std::uint64_t seed = 0;

  double gap() const { return p_mem - p_non; }

  void validate() const {
    if (!(p_mem > 0.0 && p_mem < 1.0 && p_non > 0.0 && p_non < 1.0)) {
      throw UsageError("p_mem and p_non must lie in (0, 1)");
    }
    if (!(p_non < p_mem)) throw UsageError("p_non must be below p_mem");
    if (k == 0) throw UsageError("K must be positive");
  }
};

// Number of successes in k Bernoulli(p) draws.
inline std::uint64_t draw_successes(Rng& rng, double p, std::uint64_t k) {
  std::uint64_t c = 0;
  for (std::uint64_t i = 0; i < k; ++i) c += rng.bernoulli(p) ? 1 : 0;
  return c;
}

inline double bernoulli_mean_score(Rng& rng, double p, std::uint64_t k) {
  return static_cast<double>(draw_successes(rng, p, k)) /
         static_cast<double>(k);
}

struct ErrorRates {
  double empirical_fnr = 0.0;
  double empirical_fpr = 0.0;
  double bound_fnr = 0.0;
  double bound_fpr = 0.0;
  std::uint64_t n_trials = 0;

  // Empirical rate within the Monte Carlo envelope of its bound.
  bool within_bounds() const {
    auto ok = [&](double emp, double bound) {
      const double b = std::min(bound, 1.0);
      return emp <= b + kMonteCarloSlack * binomial_se(b, n_trials);
    };
    return ok(empirical_fnr, bound_fnr) && ok(empirical_fpr, bound_fpr);
  }
};

// Member trials use stream split_seed(seed, 0), nonmember trials stream 1.
inline ErrorRates simulate_errors(const BernoulliWorld& world, double tau,
                                  std::uint64_t n_trials) {
  world.validate();
  if (!(tau > world.p_non && tau < world.p_mem)) {
    throw UsageError("tau must lie strictly between p_non and p_mem");
  }
  if (n_trials == 0) throw UsageError("n_trials must be positive");

  Rng mem(split_seed(world.seed, 0));
  Rng non(split_seed(world.seed, 1));
  std::uint64_t false_neg = 0, false_pos = 0;
  for (std::uint64_t t = 0; t < n_trials; ++t) {
    if (bernoulli_mean_score(mem, world.p_mem, world.k) <= tau) ++false_neg;
    if (bernoulli_mean_score(non, world.p_non, world.k) >= tau) ++false_pos;
  }
  const double n = static_cast<double>(n_trials);
  return {static_cast<double>(false_neg) / n,
          static_cast<double>(false_pos) / n,
          hoeffding_bound(world.k, world.p_mem - tau),
          hoeffding_bound(world.k, tau - world.p_non), n_trials};
}

// Smallest K with exp(-2 K gamma^2) <= beta.
inline std::uint64_t sample_complexity(double gamma, double beta) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw UsageError("gamma must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw UsageError("beta must lie in (0, 1)");
  const double k = std::log(1.0 / beta) / (2.0 * gamma * gamma);
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(k - kFloorSlack)));
}

struct HoeffdingCell {
  std::uint64_t k = 0;
  double gamma = 0.0;
  double p_mem = 0.0;
  double p_non = 0.0;
  double tau = 0.0;
  ErrorRates rates;
  bool pass = false;
};

struct HoeffdingGridConfig {
  std::vector<std::uint64_t> ks{1, 5, 20, 50, 200};
  std::vector<double> gammas{0.1, 0.2, 0.4};
  // Thresholds placed at p_non + f * gamma.
  std::vector<double> tau_fractions{0.25, 0.5, 0.75};
  // Worlds are centred here, where Bernoulli variance is largest.
  double center = 0.5;
  std::uint64_t n_trials = 10000;
  std::uint64_t seed = 0;
};

inline std::vector<HoeffdingCell> hoeffding_grid(
    const HoeffdingGridConfig& cfg) {
  std::vector<HoeffdingCell> cells;
  std::uint64_t index = 0;
  for (auto k : cfg.ks) {
    for (double g : cfg.gammas) {
      for (double f : cfg.tau_fractions) {
        HoeffdingCell c;
        c.k = k;
        c.gamma = g;
        c.p_mem = cfg.center + g / 2.0;
        c.p_non = cfg.center - g / 2.0;
        c.tau = c.p_non + f * g;
        BernoulliWorld w{c.p_mem, c.p_non, k, split_seed(cfg.seed, index++)};
        c.rates = simulate_errors(w, c.tau, cfg.n_trials);
        c.pass = c.rates.within_bounds();
        cells.push_back(c);
      }
    }
  }
  return cells;
}

struct PowerCheck {
  double gamma = 0.0;
  double beta = 0.0;
  std::uint64_t k = 0;
  double p_mem = 0.0;
  double p_non = 0.0;
  double tau = 0.0;
  double empirical_power = 0.0;
  double floor = 0.0;  // 1 - beta - slack * SE
  bool pass = false;
};

// Draws member scores with K = sample_complexity(gamma, beta) and the
// threshold midway between p_non = p_mem - gamma and p_mem.
inline PowerCheck check_power(double gamma, double beta, double p_mem,
                              std::uint64_t n_trials, std::uint64_t seed) {
  PowerCheck pc;
  pc.gamma = gamma;
  pc.beta = beta;
  pc.k = sample_complexity(gamma, beta);
  pc.p_mem = p_mem;
  pc.p_non = p_mem - gamma;
  BernoulliWorld{pc.p_mem, pc.p_non, pc.k, seed}.validate();
  pc.tau = (pc.p_mem + pc.p_non) / 2.0;
  Rng rng(split_seed(seed, 0));
  std::uint64_t detected = 0;
  for (std::uint64_t t = 0; t < n_trials; ++t) {
    const double s = bernoulli_mean_score(rng, pc.p_mem, pc.k);
    if (classify(s, pc.tau) == Decision::kMember) ++detected;
  }
  pc.empirical_power =
      static_cast<double>(detected) / static_cast<double>(n_trials);
  pc.floor = 1.0 - beta - kMonteCarloSlack * binomial_se(beta, n_trials);
  pc.pass = pc.empirical_power >= pc.floor;
  return pc;
}

inline constexpr std::size_t kMaxEnumerationLength = 20;

// Positions of the k smallest p_F values (ties by index), ascending.
inline std::vector<std::size_t> hard_set(
    std::span<const std::pair<double, double>> tokens, std::size_t k) {
  std::vector<double> p(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) p[i] = tokens[i].first;
  auto idx = smallest_k_positions(p, k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Exhaustively checks that the k hardest tokens maximize the total signal
// sum |mu_i| over all size-k subsets. `tokens` holds (p_F_i, |mu_i|).
inline bool verify_selection_optimality(
    std::span<const std::pair<double, double>> tokens, std::size_t k) {
  const std::size_t n = tokens.size();
  if (n > kMaxEnumerationLength) {
    throw UsageError("subset enumeration is limited to " +
                     std::to_string(kMaxEnumerationLength) + " tokens");
  }
  if (k == 0 || k > n) throw UsageError("k must lie in [1, L]");

  double chosen = 0.0;
  for (auto i : hard_set(tokens, k)) chosen += tokens[i].second;

  double best = -1.0;
  // Gosper's hack: iterate all n-bit masks with exactly k bits set.
  std::uint32_t mask = (1u << k) - 1;
  const std::uint32_t limit = 1u << n;
  while (mask < limit) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) s += tokens[i].second;
    }
    best = std::max(best, s);
    const std::uint32_t c = mask & (~mask + 1);
    const std::uint32_t r = mask + c;
    mask = (((r ^ mask) >> 2) / c) | r;
  }
  return chosen >= best - 1e-12 * std::max(1.0, std::abs(best));
}

// Random instance whose |mu| is non-increasing in p_F.
inline std::vector<std::pair<double, double>> monotone_instance(
    std::size_t n, Rng& rng) {
  std::vector<double> p(n), mu(n);
  for (auto& v : p) v = rng.uniform01();
  for (auto& v : mu) v = rng.uniform(0.0, 1.0);
  std::sort(p.begin(), p.end());
  std::sort(mu.begin(), mu.end(), std::greater<>());
  std::vector<std::pair<double, double>> tokens(n);
  for (std::size_t i = 0; i < n; ++i) tokens[i] = {p[i], mu[i]};
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(tokens[i - 1], tokens[j]);
  }
  return tokens;
}

inline std::vector<double> binomial_pmf(std::uint64_t k, double p) {
  std::vector<double> pmf(k + 1);
  const double kk = static_cast<double>(k);
  for (std::uint64_t j = 0; j <= k; ++j) {
    const double jj = static_cast<double>(j);
    pmf[j] = std::exp(std::lgamma(kk + 1) - std::lgamma(jj + 1) -
                      std::lgamma(kk - jj + 1) + jj * std::log(p) +
                      (kk - jj) * std::log1p(-p));
  }
  return pmf;
}

struct ThresholdDominance {
  std::size_t rules_tested = 0;
  std::size_t comparisons = 0;
  std::size_t violations = 0;
};

// Neyman-Pearson check on the exact score distributions of a Bernoulli world.
// Random decision rules flag a random subset of score values as "member";
// every threshold rule must match or beat the TPR of each random rule whose
// FPR does not exceed its own.
inline ThresholdDominance check_threshold_dominance(
    const BernoulliWorld& world, std::size_t n_rules) {
  world.validate();
  const auto k = world.k;
  const auto pm = binomial_pmf(k, world.p_mem);
  const auto pn = binomial_pmf(k, world.p_non);

  // Threshold rule t flags counts >= t, for t = k+1 (nothing) .. 0 (all).
  std::vector<std::pair<double, double>> thresholds;  // (fpr, tpr)
  double fpr = 0.0, tpr = 0.0;
  thresholds.emplace_back(fpr, tpr);
  for (std::uint64_t t = k + 1; t-- > 0;) {
    fpr += pn[t];
    tpr += pm[t];
    thresholds.emplace_back(fpr, tpr);
  }

  Rng rng(world.seed);
  ThresholdDominance out;
  constexpr double kTol = 1e-12;
  while (out.rules_tested < n_rules) {
    std::vector<bool> flag(k + 1);
    for (std::uint64_t j = 0; j <= k; ++j) flag[j] = rng.bernoulli(0.5);
    // Skip rules that are themselves thresholds (including empty / all).
    std::uint64_t first = k + 1;
    while (first > 0 && flag[first - 1]) --first;
    bool is_threshold = true;
    for (std::uint64_t j = 0; j < first; ++j) is_threshold &= !flag[j];
    if (is_threshold) continue;

    double rule_fpr = 0.0, rule_tpr = 0.0;
    for (std::uint64_t j = 0; j <= k; ++j) {
      if (flag[j]) {
        rule_fpr += pn[j];
        rule_tpr += pm[j];
      }
    }
    ++out.rules_tested;
    for (const auto& [tf, tt] : thresholds) {
      if (rule_fpr <= tf + kTol) {
        ++out.comparisons;
        if (tt < rule_tpr - kTol) ++out.violations;
      }
    }
  }
  return out;
}

struct SelectionOptimalityResult {
  std::size_t instances = 0;
  std::size_t counterexamples = 0;
};

inline SelectionOptimalityResult check_selection_optimality(
    std::size_t instances, std::uint64_t seed) {
  SelectionOptimalityResult out;
  Rng rng(seed);
  for (std::size_t i = 0; i < instances; ++i) {
    const auto n = static_cast<std::size_t>(
        rng.uniform_int(1, kMaxEnumerationLength));
    const auto k = static_cast<std::size_t>(
        rng.uniform_int(1, static_cast<std::int64_t>(n)));
    const auto tokens = monotone_instance(n, rng);
    ++out.instances;
    if (!verify_selection_optimality(tokens, k)) ++out.counterexamples;
  }
  return out;
}

struct TheoryConfig {
  HoeffdingGridConfig hoeffding;
  std::vector<double> power_gammas{0.1, 0.2, 0.3};
  double power_beta = 0.05;
  // Member improvement rate at hard tokens used for the power check.
  double power_p_mem = 0.91;
  std::uint64_t power_trials = 10000;
  std::size_t selection_instances = 100;
  std::size_t dominance_rules = 1000;
  std::vector<std::uint64_t> dominance_ks{1, 5, 20, 50};
  std::uint64_t seed = 0;
};

struct TheoryReport {
  std::vector<HoeffdingCell> hoeffding;
  std::vector<PowerCheck> power;
  SelectionOptimalityResult selection;
  std::vector<std::pair<BernoulliWorld, ThresholdDominance>> dominance;

  bool pass() const {
    for (const auto& c : hoeffding) {
      if (!c.pass) return false;
    }
    for (const auto& p : power) {
      if (!p.pass) return false;
    }
    for (const auto& d : dominance) {
      if (d.second.violations) return false;
    }
    return selection.counterexamples == 0;
  }
};

// Streams: 0 Hoeffding grid, 1 power checks, 2 subset enumeration,
// 3 threshold dominance.
inline TheoryReport run_theory(TheoryConfig cfg) {
  TheoryReport r;
  cfg.hoeffding.seed = split_seed(cfg.seed, 0);
  r.hoeffding = hoeffding_grid(cfg.hoeffding);
  const auto power_seed = split_seed(cfg.seed, 1);
  for (std::size_t i = 0; i < cfg.power_gammas.size(); ++i) {
    r.power.push_back(check_power(cfg.power_gammas[i], cfg.power_beta,
                                  cfg.power_p_mem, cfg.power_trials,
                                  split_seed(power_seed, i)));
  }
  r.selection =
      check_selection_optimality(cfg.selection_instances,
                                 split_seed(cfg.seed, 2));
  const auto dom_seed = split_seed(cfg.seed, 3);
  std::uint64_t idx = 0;
  for (auto k : cfg.dominance_ks) {
    for (double g : cfg.hoeffding.gammas) {
      BernoulliWorld w{0.5 + g / 2, 0.5 - g / 2, k, split_seed(dom_seed, idx++)};
      r.dominance.emplace_back(w, check_threshold_dominance(
                                      w, cfg.dominance_rules));
    }
  }
  return r;
}

// Synthetic traces with membership signal planted at hard tokens.
//
// Each position is hard with probability hard_fraction, a "generalization"
// position with probability generalization_fraction, and easy otherwise.
//   easy:            reference ~ U(easy_lo, easy_hi), target = reference
//   generalization:  reference ~ hard distribution, target ~ U(easy_lo,
//                    easy_hi) for every sample, member or not
//   hard:            reference ~ log-uniform(hard_lo, hard_hi); the target
//                    is raised to reference * (1 + uplift_gain) with the
//                    class's uplift probability, else equals the reference
// Uplift indicators along a sequence form a Markov chain: each hard token
// repeats the previous indicator with probability uplift_correlation and is
// otherwise a fresh Bernoulli draw (marginal rate unchanged).
struct SyntheticTraceSpec {
  std::uint64_t n_per_class = 1000;
  std::uint64_t min_length = 150;  // scored positions L
  std::uint64_t max_length = 300;
  double easy_lo = 0.6;
  double easy_hi = 0.99;
  double hard_lo = 0.01;
  double hard_hi = 0.2;
  double hard_fraction = 0.3;
  double generalization_fraction = 0.0;
  double member_uplift = 0.91;
  double nonmember_uplift = 0.70;
  double uplift_gain = 0.25;
  double uplift_correlation = 0.0;
  std::int64_t vocab_size = 50257;
  std::uint64_t seed = 0;

  void validate() const {
    auto open01 = [](double v) { return v > 0.0 && v < 1.0; };
    auto closed01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (n_per_class == 0) throw UsageError("n_per_class must be positive");
    if (min_length == 0 || max_length < min_length) {
      throw UsageError("need 1 <= min_length <= max_length");
    }
    if (!(open01(easy_lo) && open01(easy_hi) && easy_lo <= easy_hi)) {
      throw UsageError("easy probability range must lie in (0, 1)");
    }
    if (!(open01(hard_lo) && open01(hard_hi) && hard_lo <= hard_hi)) {
      throw UsageError("hard probability range must lie in (0, 1)");
    }
    if (!open01(hard_fraction)) {
      throw UsageError("hard_fraction must lie in (0, 1)");
    }
    if (!(generalization_fraction >= 0.0 &&
          hard_fraction + generalization_fraction < 1.0)) {
      throw UsageError(
          "generalization_fraction must be >= 0 and leave room for easy "
          "tokens");
    }
    if (!closed01(member_uplift) || !closed01(nonmember_uplift) ||
        !closed01(uplift_correlation)) {
      throw UsageError("uplift rates and correlation must lie in [0, 1]");
    }
    if (!(uplift_gain > 0.0)) throw UsageError("uplift_gain must be positive");
    if (vocab_size < 1) throw UsageError("vocab_size must be positive");
  }
};

struct SyntheticData {
  TraceFileHeader target_header;
  TraceFileHeader reference_header;
  std::vector<TokenTrace> target;
  std::vector<TokenTrace> reference;
  std::map<std::string, Label> labels;
  std::map<std::string, std::string> texts;  // pseudo-words, for zlib
};

namespace detail {

inline std::string pseudo_word(std::int64_t id) {
  std::string w;
  do {
    w.push_back(static_cast<char>('a' + id % 26));
    id /= 26;
  } while (id > 0);
  return w;
}

}  // namespace detail

// Sample i (members first) draws from stream split_seed(seed, i).
inline SyntheticData generate_synthetic(const SyntheticTraceSpec& spec) {
  spec.validate();
  SyntheticData out;
  const auto max_tokens = static_cast<std::int64_t>(spec.max_length + 1);
  out.target_header = {std::string(kSchemaVersion), "synthetic",
                       "synthetic-target", max_tokens};
  out.reference_header = {std::string(kSchemaVersion), "synthetic",
                          "synthetic-reference", max_tokens};
  const double log_lo = std::log(spec.hard_lo);
  const double log_hi = std::log(spec.hard_hi);

  for (std::uint64_t i = 0; i < 2 * spec.n_per_class; ++i) {
    const bool member = i < spec.n_per_class;
    const double uplift = member ? spec.member_uplift : spec.nonmember_uplift;
    Rng rng(split_seed(spec.seed, i));
    char id[32];
    std::snprintf(id, sizeof(id), "syn-%06llu",
                  static_cast<unsigned long long>(i));

    const auto len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(spec.min_length),
                        static_cast<std::int64_t>(spec.max_length)));
    TokenTrace ref{id, out.reference_header.model_id, Variant::original(),
                   {}, {}};
    ref.token_ids.resize(len + 1);
    for (auto& t : ref.token_ids) t = rng.uniform_int(0, spec.vocab_size - 1);
    TokenTrace tgt = ref;
    tgt.model_id = out.target_header.model_id;
    ref.next_token_probs.resize(len);
    tgt.next_token_probs.resize(len);

    bool have_prev = false, prev = false;
    for (std::size_t pos = 0; pos < len; ++pos) {
      const double u = rng.uniform01();
      double& r = ref.next_token_probs[pos];
      double& t = tgt.next_token_probs[pos];
      if (u < spec.hard_fraction) {
        r = std::exp(rng.uniform(log_lo, log_hi));
        bool up = have_prev && rng.bernoulli(spec.uplift_correlation)
                      ? prev
                      : rng.bernoulli(uplift);
        have_prev = true;
        prev = up;
        t = up ? std::min(1.0, r * (1.0 + spec.uplift_gain)) : r;
      } else if (u < spec.hard_fraction + spec.generalization_fraction) {
        r = std::exp(rng.uniform(log_lo, log_hi));
        t = rng.uniform(spec.easy_lo, spec.easy_hi);
      } else {
        r = rng.uniform(spec.easy_lo, spec.easy_hi);
        t = r;
      }
    }

    std::string text;
    for (std::size_t j = 0; j < ref.token_ids.size(); ++j) {
      if (j) text.push_back(' ');
      text += detail::pseudo_word(ref.token_ids[j]);
    }
    out.texts.emplace(id, std::move(text));
    out.labels.emplace(id, member ? Label::kMember : Label::kNonmember);
    out.target.push_back(std::move(tgt));
    out.reference.push_back(std::move(ref));
  }
  return out;
}

struct GradientBatch {
  std::vector<std::vector<double>> gradients;  // one per example
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
  std::uint64_t seed = 0;
};

struct DpSgdResult {
  std::vector<double> noisy_mean;
  std::vector<double> clipped_norms;
};

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Scales g to norm at most c. The scale is nudged down by ulps if rounding
// would leave the clipped norm above c.
inline std::vector<double> clip_gradient(std::span<const double> g, double c) {
  const double norm = l2_norm(g);
  std::vector<double> out(g.begin(), g.end());
  if (norm <= c) return out;
  double scale = 1.0 / (norm / c);
  for (;;) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * scale;
    if (l2_norm(out) <= c) return out;
    scale = std::nextafter(scale, 0.0);
  }
}

// Per-example clipping, summation, Gaussian noise N(0, sigma^2 C^2 I) and
// division by the batch size. Noise draws come from Rng(batch.seed), one
// normal() per coordinate in order.
inline DpSgdResult dp_sgd_step(const GradientBatch& batch) {
  if (batch.gradients.empty()) throw UsageError("gradient batch is empty");
  const std::size_t dim = batch.gradients.front().size();
  if (dim == 0) throw UsageError("gradients must have positive dimension");
  for (const auto& g : batch.gradients) {
    if (g.size() != dim) {
      throw UsageError("all gradients must have the same dimension");
    }
  }
  if (!(batch.clip_norm > 0.0)) throw UsageError("clip norm must be positive");
  if (!(batch.noise_multiplier >= 0.0)) {
    throw UsageError("noise multiplier must be non-negative");
  }

  DpSgdResult out;
  std::vector<double> sum(dim, 0.0);
  for (const auto& g : batch.gradients) {
    const auto clipped = clip_gradient(g, batch.clip_norm);
    out.clipped_norms.push_back(l2_norm(clipped));
    for (std::size_t i = 0; i < dim; ++i) sum[i] += clipped[i];
  }
  const double stddev = batch.noise_multiplier * batch.clip_norm;
  if (stddev > 0.0) {
    Rng rng(batch.seed);
    for (auto& s : sum) s += rng.normal(0.0, stddev);
  }
  const double k = static_cast<double>(batch.gradients.size());
  out.noisy_mean.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) out.noisy_mean[i] = sum[i] / k;
  return out;
}

}  // namespace htmia
