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

#include "htmia/attacks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <string>

#include "oracles.hpp"

namespace htmia {
namespace {

using oracle::make_record;
using oracle::make_trace;

SelectionConfig cfg(std::int64_t min_k, std::int64_t max_k, double alpha,
                    SelectionStrategy s = SelectionStrategy::kByTarget,
                    double margin = 0.0) {
  return {min_k, max_k, alpha, s, margin};
}

TEST(SelectK, Examples) {
  EXPECT_EQ(select_k(100, cfg(5, 100, 0.2)), 20u);
  EXPECT_EQ(select_k(10, cfg(5, 100, 0.2)), 5u);
  EXPECT_EQ(select_k(3, cfg(5, 100, 0.2)), 3u);
  EXPECT_EQ(select_k(0, cfg(5, 100, 0.2)), 0u);
  EXPECT_EQ(select_k(1000, cfg(5, 100, 0.2)), 100u);
  // 0.29 * 100 is 28.999999999999996 in binary
  EXPECT_EQ(select_k(100, cfg(1, 100, 0.29)), 29u);
}

TEST(SelectK, Invariants) {
  Rng rng(1);
  for (int i = 0; i < 5000; ++i) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(0, 400));
    const auto lo = rng.uniform_int(1, 30);
    const auto c = cfg(lo, lo + rng.uniform_int(0, 60), rng.uniform(0.01, 1.0));
    const auto k = select_k(len, c);
    ASSERT_LE(k, len);
    ASSERT_EQ(k == 0, len == 0);
    ASSERT_LE(static_cast<std::int64_t>(k), c.max_k);
    if (len >= static_cast<std::size_t>(c.min_k)) {
      ASSERT_GE(static_cast<std::int64_t>(k), c.min_k);
    }
  }
}

TEST(HtMia, WorkedExample) {
  auto rec = make_record("x", {0.1, 0.9, 0.2, 0.8, 0.05},
                         {0.2, 0.5, 0.1, 0.9, 0.01});
  // K = 2; hardest positions 4 (gain) and 0 (loss).
  auto s = ht_mia_score(rec, cfg(1, 3, 0.5));
  EXPECT_EQ(s.score, 0.5);
  EXPECT_FALSE(s.degenerate);
  EXPECT_EQ(s.attack, Attack::kHtMia);
  EXPECT_EQ(s.score, oracle::ht_mia({0.1, 0.9, 0.2, 0.8, 0.05},
                                    {0.2, 0.5, 0.1, 0.9, 0.01}, 1, 3, 0.5));
}

TEST(HtMia, EmptySequenceIsUninformative) {
  auto s = ht_mia_score(make_record("e", {}, {}), SelectionConfig{});
  EXPECT_EQ(s.score, 0.5);
  EXPECT_TRUE(s.degenerate);
}

TEST(HtMia, AllImprovedAndNoneImproved) {
  Rng rng(9);
  std::vector<double> qb(50), qf(50);
  for (int i = 0; i < 50; ++i) {
    qb[i] = rng.uniform(0.0, 0.9);
    qf[i] = qb[i] + 0.05;
  }
  EXPECT_EQ(ht_mia_score(make_record("u", qf, qb), SelectionConfig{}).score, 1.0);
  EXPECT_EQ(ht_mia_score(make_record("q", qb, qb), SelectionConfig{}).score, 0.0);
}

TEST(HtMia, MatchesOracleOnRandomInputs) {
  Rng rng(77);
  for (int i = 0; i < 3000; ++i) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(0, 300));
    const bool ties = rng.bernoulli(0.5);
    auto qf = oracle::random_probs(rng, len, ties);
    auto qb = oracle::random_probs(rng, len, ties);
    const auto lo = rng.uniform_int(1, 10);
    const auto c = cfg(lo, lo + rng.uniform_int(0, 100), rng.uniform(0.01, 1.0),
                       rng.bernoulli(0.5) ? SelectionStrategy::kByTarget
                                          : SelectionStrategy::kByReference,
                       rng.bernoulli(0.3) ? rng.uniform(-0.2, 0.2) : 0.0);
    const double expected =
        oracle::ht_mia(qf, qb, c.min_k, c.max_k, c.alpha,
                       c.strategy == SelectionStrategy::kByReference, c.margin);
    ASSERT_EQ(ht_mia_score(make_record("r", qf, qb), c).score, expected)
        << "case " << i;
  }
}

TEST(HtMia, TiesBreakByPosition) {
  // Every target probability equal: the first K positions are selected.
  std::vector<double> qf(10, 0.3), qb(10, 0.1);
  for (int i = 0; i < 5; ++i) qb[i] = 0.5;  // positions 0..4 lose, 5..9 gain
  EXPECT_EQ(ht_mia_score(make_record("t", qf, qb), cfg(5, 5, 0.5)).score, 0.0);
  auto hard = smallest_k_positions(qf, 5);
  std::sort(hard.begin(), hard.end());
  EXPECT_EQ(hard, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  // Identical inputs always give identical scores.
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(ht_mia_score(make_record("t", qf, qb), cfg(3, 7, 0.5)).score,
              ht_mia_score(make_record("t", qf, qb), cfg(3, 7, 0.5)).score);
  }
}

TEST(HtMia, ReferenceStrategyRanksByReference) {
  // Target-hard positions 0,1 lose; reference-hard positions 2,3 gain.
  auto rec = make_record("s", {0.01, 0.02, 0.5, 0.6}, {0.3, 0.3, 0.05, 0.06});
  EXPECT_EQ(ht_mia_score(rec, cfg(2, 2, 0.5)).score, 0.0);
  EXPECT_EQ(
      ht_mia_score(rec, cfg(2, 2, 0.5, SelectionStrategy::kByReference)).score,
      1.0);
}

TEST(HtMia, MarginIsStrict) {
  auto rec = make_record("m", {0.5, 0.5}, {0.25, 0.375});
  EXPECT_EQ(ht_mia_score(rec, cfg(2, 2, 1.0)).score, 1.0);
  EXPECT_EQ(ht_mia_score(rec, cfg(2, 2, 1.0, SelectionStrategy::kByTarget, 0.125))
                .score,
            0.5);
  EXPECT_EQ(ht_mia_score(rec, cfg(2, 2, 1.0, SelectionStrategy::kByTarget, 0.25))
                .score,
            0.0);
}

TEST(HtMia, ComplementUnderSwap) {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(1, 100));
    auto qf = oracle::random_probs(rng, len, false);
    auto qb = oracle::random_probs(rng, len, false);
    std::vector<std::size_t> pos;
    for (std::size_t j = 0; j < len; ++j) {
      if (qf[j] != qb[j] && rng.bernoulli(0.5)) pos.push_back(j);
    }
    if (pos.empty()) continue;
    ASSERT_EQ(fraction_improved(qf, qb, pos) + fraction_improved(qb, qf, pos),
              1.0);
  }
}

TEST(HtMia, RaisingOneSelectedTargetAddsOneOverK) {
  Rng rng(6);
  for (int i = 0; i < 500; ++i) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(2, 100));
    auto qf = oracle::random_probs(rng, len, false);
    auto qb = oracle::random_probs(rng, len, false);
    auto pos = smallest_k_positions(qf, select_k(len, SelectionConfig{}));
    std::size_t flip = pos.size();
    for (std::size_t j = 0; j < pos.size(); ++j) {
      if (qf[pos[j]] < qb[pos[j]]) flip = j;
    }
    if (flip == pos.size()) continue;
    const double before = fraction_improved(qf, qb, pos);
    qf[pos[flip]] = std::nextafter(qb[pos[flip]], 2.0);
    const double after = fraction_improved(qf, qb, pos);
    ASSERT_NEAR(after - before, 1.0 / static_cast<double>(pos.size()), 1e-15);
  }
}

TEST(Loss, Examples) {
  EXPECT_EQ(loss_score(make_trace("a", {1.0, 1.0, 1.0})).score, 0.0);
  EXPECT_NEAR(loss_score(make_trace("a", {std::exp(-1.0), std::exp(-3.0)})).score,
              -2.0, 1e-15);
  EXPECT_NEAR(loss_score(make_trace("a", {0.5, 0.25})).score,
              -(std::log(2.0) + std::log(4.0)) / 2.0, 1e-15);
  auto empty = loss_score(make_trace("e", {}));
  EXPECT_TRUE(empty.degenerate);
  EXPECT_EQ(empty.score, 0.0);
  // zero probabilities are floored
  EXPECT_NEAR(loss_score(make_trace("z", {0.0})).score, std::log(1e-12), 1e-12);
}

TEST(Ratio, Examples) {
  const double e1 = std::exp(-1.0), e2 = std::exp(-2.0);
  EXPECT_NEAR(ratio_score(make_record("r", {e1, e1}, {e2, e2})).score, -0.5,
              1e-15);
  EXPECT_EQ(ratio_score(make_record("r", {0.3, 0.7}, {0.3, 0.7})).score, -1.0);
  auto zero_ref = ratio_score(make_record("r", {0.5}, {1.0}));
  EXPECT_TRUE(zero_ref.degenerate);
  EXPECT_EQ(zero_ref.score, std::numeric_limits<double>::lowest());
  auto both_zero = ratio_score(make_record("r", {1.0}, {1.0}));
  EXPECT_TRUE(both_zero.degenerate);
  EXPECT_EQ(ratio_score(make_record("r", {}, {})).degenerate, true);
}

TEST(Ratio, MatchesOracleAndIgnoresCertainTokens) {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(1, 80));
    auto qf = oracle::random_probs(rng, len, false);
    auto qb = oracle::random_probs(rng, len, false);
    const double s = ratio_score(make_record("r", qf, qb)).score;
    ASSERT_NEAR(s, -oracle::sum_nll(qf) / oracle::sum_nll(qb),
                1e-12 * std::abs(s));
    qf.push_back(1.0);
    qb.push_back(1.0);
    ASSERT_EQ(ratio_score(make_record("r", qf, qb)).score, s);
  }
}

TEST(Zlib, GoldenCompressedLength) {
  std::string text;
  for (int i = 0; i < 50; ++i) text += "ab";
  // 13 compressed bytes at level 6
  EXPECT_EQ(zlib_entropy(text), 13.0 / 100.0);
  auto t = make_trace("z", {std::exp(-1.0), std::exp(-1.0)});
  EXPECT_NEAR(zlib_score(t, text).score, -1.0 / 0.13, 1e-12);
}

TEST(Zlib, FormulaAndDegenerateCases) {
  const std::string text = "The quick brown fox jumps over the lazy dog.";
  const double h = zlib_entropy(text);
  EXPECT_GT(h, 0.0);
  auto t = make_trace("z", {std::exp(-2.0), std::exp(-2.0), std::exp(-2.0)});
  EXPECT_NEAR(zlib_score(t, text).score, -2.0 / h, 1e-12);
  EXPECT_EQ(zlib_entropy(""), 0.0);
  auto d = zlib_score(t, "");
  EXPECT_TRUE(d.degenerate);
  EXPECT_EQ(d.score, 0.0);
  EXPECT_TRUE(zlib_score(make_trace("z", {}), text).degenerate);
}

TEST(MinKpp, Examples) {
  std::vector<double> p;
  for (int i = 1; i <= 5; ++i) p.push_back(std::exp(-i));
  EXPECT_NEAR(min_k_pp_score(make_trace("m", p), 0.4).score,
              -1.0606601717798212, 1e-12);
  auto flat = min_k_pp_score(make_trace("m", {0.2, 0.2, 0.2}), 0.4);
  EXPECT_TRUE(flat.degenerate);
  EXPECT_EQ(flat.score, 0.0);
  EXPECT_NEAR(min_k_pp_score(make_trace("m", p), 1.0).score, 0.0, 1e-12);
  EXPECT_TRUE(min_k_pp_score(make_trace("m", {}), 0.2).degenerate);
  EXPECT_THROW(min_k_pp_score(make_trace("m", p), 0.0), UsageError);
}

TEST(MinKpp, MatchesOracle) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(2, 200));
    auto p = oracle::random_probs(rng, len, false);
    const double k = rng.uniform(0.01, 1.0);
    ASSERT_NEAR(min_k_pp_score(make_trace("m", p), k).score,
                oracle::min_k_pp(p, k), 1e-9);
  }
}

TEST(MinKpp, FractionCount) {
  EXPECT_EQ(fraction_count(0.2, 10), 2u);
  EXPECT_EQ(fraction_count(0.2, 11), 3u);
  EXPECT_EQ(fraction_count(0.01, 10), 1u);
  EXPECT_EQ(fraction_count(1.0, 7), 7u);
}

SampleRecord with_variants(std::vector<double> orig,
                           std::vector<std::vector<double>> augmented,
                           std::vector<double>* lower = nullptr) {
  auto rec = make_record("v", orig, orig);
  for (std::size_t j = 0; j < augmented.size(); ++j) {
    rec.variant_traces.emplace(
        VariantKey{"target", Variant::augmented(static_cast<int>(j))},
        make_trace("v", augmented[j], "target",
                   Variant::augmented(static_cast<int>(j))));
  }
  if (lower) {
    rec.variant_traces.emplace(
        VariantKey{"target", Variant::lowercase()},
        make_trace("v", *lower, "target", Variant::lowercase()));
  }
  return rec;
}

TEST(Lowercase, Examples) {
  std::vector<double> same = {0.4, 0.6};
  EXPECT_NEAR(lowercase_score(with_variants({0.4, 0.6}, {}, &same)).score, 0.0,
              1e-15);
  std::vector<double> tenth(4, 0.1);
  auto s = lowercase_score(with_variants(std::vector<double>(4, 0.05), {}, &tenth));
  EXPECT_NEAR(s.score, 10.0, 1e-9);
  EXPECT_THROW(lowercase_score(with_variants({0.5}, {})), ValidationError);
}

TEST(Lowercase, MatchesPerplexityOracle) {
  Rng rng(13);
  for (int i = 0; i < 200; ++i) {
    auto a = oracle::random_probs(rng, rng.uniform_int(1, 50), false);
    auto b = oracle::random_probs(rng, rng.uniform_int(1, 50), false);
    const double expected = oracle::perplexity(a) - oracle::perplexity(b);
    ASSERT_NEAR(lowercase_score(with_variants(a, {}, &b)).score, expected,
                1e-9 * std::max(1.0, std::abs(expected)));
  }
}

TEST(Pac, Examples) {
  std::vector<double> p = {0.9, 0.1, 0.5};
  EXPECT_NEAR(pac_score(with_variants(p, {p, p}), 10, 2).score, 0.0, 1e-15);
  // PD(orig) = 3, PD(aug) = 1 and 2
  auto rec = with_variants({1.0, std::exp(-3.0)},
                           {{1.0, std::exp(-1.0)}, {1.0, std::exp(-2.0)}});
  EXPECT_NEAR(pac_score(rec, 1, 2).score, 1.5, 1e-12);
  EXPECT_THROW(pac_score(rec, 1, 3), ValidationError);
}

TEST(Pac, ShortSequencesUseWholeSequence) {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    auto p = oracle::random_probs(rng, rng.uniform_int(1, 15), false);
    auto t = make_trace("p", p);
    ASSERT_NEAR(polarized_distance(t, 10), oracle::polarized_distance(p, 10),
                1e-9);
  }
}

TEST(Classify, ThresholdIsInclusive) {
  EXPECT_EQ(classify(0.7, 0.5), Decision::kMember);
  EXPECT_EQ(classify(0.5, 0.5), Decision::kMember);
  EXPECT_EQ(classify(0.3, 0.5), Decision::kNonmember);
}

TEST(Batch, OrderingAndFailures) {
  std::vector<SampleRecord> recs = {make_record("b", {0.5}, {0.4}),
                                    make_record("a", {0.2}, {0.3})};
  auto out = score_batch(recs, {Attack::kLoss, Attack::kHtMia, Attack::kLowercase},
                         AttackParams{});
  ASSERT_EQ(out.scores.size(), 4u);
  EXPECT_EQ(out.scores[0].sample_id, "a");
  EXPECT_EQ(out.scores[0].attack, Attack::kHtMia);
  EXPECT_EQ(out.scores[1].attack, Attack::kLoss);
  EXPECT_EQ(out.scores[2].sample_id, "b");
  ASSERT_EQ(out.failures.size(), 2u);
  EXPECT_EQ(out.failures[0].attack, Attack::kLowercase);
  EXPECT_NE(out.failures[0].reason.find("lowercase"), std::string::npos);

  auto z = score_batch(recs, {Attack::kZlib}, AttackParams{});
  EXPECT_EQ(z.failures.size(), 2u);
}

TEST(Names, RoundTrip) {
  for (auto a : kAllAttacks) EXPECT_EQ(parse_attack(attack_name(a)), a);
  EXPECT_FALSE(parse_attack("nope").has_value());
}

}  // namespace
}  // namespace htmia
