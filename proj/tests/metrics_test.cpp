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

#include "htmia/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "htmia/theory.hpp"
#include "oracles.hpp"

namespace htmia {
namespace {

std::vector<LabeledScore> labeled(const std::vector<double>& members,
                                  const std::vector<double>& nonmembers) {
  std::vector<LabeledScore> out;
  for (double s : members) out.push_back({s, Label::kMember});
  for (double s : nonmembers) out.push_back({s, Label::kNonmember});
  return out;
}

std::vector<LabeledScore> random_set(Rng& rng, bool ties) {
  const auto m = rng.uniform_int(1, 120), n = rng.uniform_int(1, 120);
  std::vector<double> a, b;
  auto draw = [&] {
    return ties ? static_cast<double>(rng.uniform_int(0, 6)) / 6.0
                : rng.normal();
  };
  for (std::int64_t i = 0; i < m; ++i) a.push_back(draw() + 0.3);
  for (std::int64_t i = 0; i < n; ++i) b.push_back(draw());
  return labeled(a, b);
}

std::pair<std::vector<double>, std::vector<double>> split(
    const std::vector<LabeledScore>& s) {
  std::vector<double> a, b;
  for (const auto& x : s) (x.label == Label::kMember ? a : b).push_back(x.score);
  return {a, b};
}

TEST(Roc, PerfectSeparation) {
  auto c = roc(labeled({0.9, 0.8}, {0.2, 0.1}));
  EXPECT_EQ(auc(c), 1.0);
  bool corner = false;
  for (const auto& p : c.points) corner |= p.fpr == 0.0 && p.tpr == 1.0;
  EXPECT_TRUE(corner);
  auto op = tpr_at_fpr(c, 0.01);
  EXPECT_EQ(op.tpr, 1.0);
  EXPECT_EQ(op.achieved_fpr, 0.0);
  EXPECT_EQ(op.threshold, 0.8);
}

TEST(Roc, AllTiedIsTheDiagonal) {
  auto c = roc(labeled({0.5, 0.5, 0.5}, {0.5, 0.5}));
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0].fpr, 0.0);
  EXPECT_EQ(c.points[0].tpr, 0.0);
  EXPECT_EQ(c.points[1].fpr, 1.0);
  EXPECT_EQ(c.points[1].tpr, 1.0);
  EXPECT_EQ(auc(c), 0.5);
}

TEST(Roc, InterleavedHalf) {
  EXPECT_EQ(auc(roc(labeled({0.8, 0.2}, {0.6, 0.4}))), 0.5);
}

TEST(Roc, EndpointsAndMonotonicity) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    auto c = roc(random_set(rng, rng.bernoulli(0.5)));
    EXPECT_EQ(c.points.front().fpr, 0.0);
    EXPECT_EQ(c.points.front().tpr, 0.0);
    EXPECT_EQ(c.points.back().fpr, 1.0);
    EXPECT_EQ(c.points.back().tpr, 1.0);
    for (std::size_t j = 1; j < c.points.size(); ++j) {
      ASSERT_GE(c.points[j].fpr, c.points[j - 1].fpr);
      ASSERT_GE(c.points[j].tpr, c.points[j - 1].tpr);
      ASSERT_LT(c.points[j].threshold, c.points[j - 1].threshold);
    }
  }
}

TEST(Roc, MissingClassNamesIt) {
  try {
    roc(labeled({0.1, 0.2}, {}));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("nonmember"), std::string::npos);
  }
  EXPECT_THROW(roc(labeled({}, {0.3})), ValidationError);
  EXPECT_THROW(roc(labeled({std::nan("")}, {0.3})), ValidationError);
  std::vector<LabeledScore> unk = {{0.1, Label::kUnknown}};
  EXPECT_THROW(roc(unk), ValidationError);
}

TEST(Auc, MatchesPairwiseCount) {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    auto s = random_set(rng, rng.bernoulli(0.5));
    auto [a, b] = split(s);
    const double expected = oracle::pairwise_auc(a, b);
    ASSERT_NEAR(auc(roc(s)), expected, 1e-12);
    ASSERT_NEAR(mann_whitney_auc(s), expected, 1e-12);
  }
}

TEST(Auc, InvariantUnderIncreasingTransform) {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    auto s = random_set(rng, rng.bernoulli(0.5));
    auto t = s;
    for (auto& x : t) x.score = std::exp(3.0 * x.score) - 7.0;
    ASSERT_EQ(auc(roc(s)), auc(roc(t)));
  }
}

TEST(Auc, LabelSwapComplements) {
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    auto s = random_set(rng, rng.bernoulli(0.5));
    auto t = s;
    for (auto& x : t) {
      x.label = x.label == Label::kMember ? Label::kNonmember : Label::kMember;
    }
    ASSERT_NEAR(auc(roc(t)), 1.0 - auc(roc(s)), 1e-15);
  }
}

TEST(Auc, DuplicatingEverySampleChangesNothing) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    auto s = random_set(rng, rng.bernoulli(0.5));
    auto d = s;
    d.insert(d.end(), s.begin(), s.end());
    auto cs = roc(s), cd = roc(d);
    ASSERT_EQ(auc(cs), auc(cd));
    ASSERT_EQ(cs.points.size(), cd.points.size());
    for (std::size_t j = 0; j < cs.points.size(); ++j) {
      ASSERT_EQ(cs.points[j].fpr, cd.points[j].fpr);
      ASSERT_EQ(cs.points[j].tpr, cd.points[j].tpr);
    }
  }
}

TEST(TprAtFpr, NoInterpolation) {
  RocCurve c;
  c.n_members = 10;
  c.n_nonmembers = 100;
  c.points = {{0.0, 0.0, INFINITY, 0, 0},
              {0.08, 0.6, 0.7, 8, 6},
              {0.12, 0.7, 0.5, 12, 7},
              {1.0, 1.0, 0.0, 100, 10}};
  auto op = tpr_at_fpr(c, 0.1);
  EXPECT_EQ(op.tpr, 0.6);
  EXPECT_EQ(op.achieved_fpr, 0.08);
  EXPECT_EQ(op.threshold, 0.7);
}

TEST(TprAtFpr, BelowResolutionGivesOrigin) {
  std::vector<double> members, non;
  for (int i = 0; i < 10; ++i) {
    members.push_back(i);
    non.push_back(i + 0.5);
  }
  auto op = tpr_at_fpr(roc(labeled(members, non)), 0.05);
  EXPECT_EQ(op.achieved_fpr, 0.0);
  EXPECT_EQ(op.tpr, 0.0);
  EXPECT_TRUE(std::isinf(op.threshold));
}

TEST(TprAtFpr, MonotoneInTarget) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    auto c = roc(random_set(rng, rng.bernoulli(0.5)));
    double prev = -1.0;
    for (double t = 0.0; t <= 1.0; t += 0.01) {
      auto op = tpr_at_fpr(c, t);
      ASSERT_GE(op.tpr, prev);
      ASSERT_LE(op.achieved_fpr, t);
      prev = op.tpr;
    }
  }
}

TEST(Evaluate, GroupsByAttackAndExcludesUnknown) {
  std::vector<ScoreRow> rows = {
      {"a", Label::kMember, "loss", 1.0, false},
      {"b", Label::kNonmember, "loss", 0.0, false},
      {"c", Label::kUnknown, "loss", 0.5, false},
      {"a", Label::kMember, "ht_mia", 0.2, true},
      {"b", Label::kNonmember, "ht_mia", 0.4, false},
  };
  auto r = evaluate(rows, {0.1, 0.5});
  ASSERT_EQ(r.attacks.size(), 2u);
  EXPECT_EQ(r.attacks[0].attack, "ht_mia");
  EXPECT_EQ(r.attacks[0].auc, 0.0);
  EXPECT_EQ(r.attacks[0].degenerate_count, 1u);
  EXPECT_EQ(r.attacks[1].attack, "loss");
  EXPECT_EQ(r.attacks[1].auc, 1.0);
  EXPECT_EQ(r.attacks[1].excluded_unknown, 1u);
  EXPECT_EQ(r.attacks[1].tpr_at_fpr.at(0.1).tpr, 1.0);
  EXPECT_THROW(evaluate(rows, {1.5}), UsageError);
}

TEST(Evaluate, SingleClassIsAnError) {
  std::vector<ScoreRow> rows = {{"a", Label::kMember, "loss", 1.0, false},
                                {"b", Label::kMember, "loss", 0.0, false}};
  try {
    evaluate(rows, {0.1});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("loss"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("nonmember"), std::string::npos);
  }
}

std::vector<SampleRecord> synthetic_records(SyntheticTraceSpec spec) {
  auto d = generate_synthetic(spec);
  auto j = join_samples(d.target, d.reference, d.labels);
  EXPECT_TRUE(j.summary.clean());
  return j.records;
}

TEST(Sweep, SinglePointMatchesDirectEvaluation) {
  SyntheticTraceSpec spec;
  spec.n_per_class = 60;
  spec.seed = 3;
  auto recs = synthetic_records(spec);
  SelectionConfig c;
  auto rows = sweep(recs, {c}, 1);
  ASSERT_EQ(rows.size(), 1u);
  std::vector<LabeledScore> direct;
  for (const auto& r : recs) direct.push_back({ht_mia_score(r, c).score, r.label});
  EXPECT_EQ(rows[0].auc, auc(roc(direct)));
}

TEST(Sweep, GridOrderAndThreadIndependence) {
  SyntheticTraceSpec spec;
  spec.n_per_class = 40;
  auto recs = synthetic_records(spec);
  const double alphas[] = {0.1, 0.3};
  const std::int64_t mins[] = {5};
  const std::int64_t maxs[] = {50, 100};
  const SelectionStrategy strategies[] = {SelectionStrategy::kByTarget,
                                          SelectionStrategy::kByReference};
  const double margins[] = {0.0};
  auto grid = make_grid(alphas, mins, maxs, strategies, margins);
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_EQ(grid[1].strategy, SelectionStrategy::kByReference);
  EXPECT_EQ(grid[2].max_k, 100);
  EXPECT_EQ(grid[4].alpha, 0.3);
  auto one = sweep(recs, grid, 1), four = sweep(recs, grid, 4);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(one[i].auc, four[i].auc);
    EXPECT_EQ(one[i].config.alpha, grid[i].alpha);
  }
}

TEST(Sweep, TargetRankingBeatsReferenceRankingUnderDecoys) {
  // Positions that every sample's target has learned look hard to the
  // reference model, so ranking by reference picks them up as noise.
  SyntheticTraceSpec spec;
  spec.n_per_class = 200;
  spec.hard_fraction = 0.2;
  spec.generalization_fraction = 0.6;
  spec.seed = 11;
  auto recs = synthetic_records(spec);
  const double alphas[] = {0.2};
  const std::int64_t mins[] = {5};
  const std::int64_t maxs[] = {100};
  const SelectionStrategy strategies[] = {SelectionStrategy::kByTarget,
                                          SelectionStrategy::kByReference};
  const double margins[] = {0.0};
  auto rows = sweep(recs, make_grid(alphas, mins, maxs, strategies, margins));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[0].auc, rows[1].auc + 0.05)
      << rows[0].auc << " vs " << rows[1].auc;
}

TEST(Sweep, HugeMarginIsUninformative) {
  SyntheticTraceSpec spec;
  spec.n_per_class = 30;
  auto recs = synthetic_records(spec);
  SelectionConfig c;
  c.margin = 10.0;
  EXPECT_EQ(sweep(recs, {c})[0].auc, 0.5);
}

TEST(Sweep, NeedsBothClasses) {
  SyntheticTraceSpec spec;
  spec.n_per_class = 5;
  auto recs = synthetic_records(spec);
  for (auto& r : recs) r.label = Label::kMember;
  recs[0].label = Label::kNonmember;
  EXPECT_THROW(sweep(recs, {SelectionConfig{}}), ValidationError);
}

}  // namespace
}  // namespace htmia
