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

// ROC analysis of labeled attack scores.
//
// A sample is classified as a member iff score >= threshold. The ROC curve is
// traced by lowering the threshold through the distinct score values, so tied
// scores enter as one block and produce a single (possibly diagonal) step.
// Curve points keep the integer TP/FP counts, which makes the trapezoidal
// AUC an exact rational and lets it be checked against the rank-sum form of
// the Mann-Whitney statistic.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "htmia/attacks.hpp"
#include "htmia/errors.hpp"
#include "htmia/trace.hpp"

namespace htmia {

struct LabeledScore {
  double score = 0.0;
  Label label = Label::kUnknown;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  // Smallest score classified as member at this point; +inf for (0, 0).
  double threshold = std::numeric_limits<double>::infinity();
  std::uint64_t fp = 0;
  std::uint64_t tp = 0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending fpr, first (0,0), last (1,1)
  std::uint64_t n_members = 0;
  std::uint64_t n_nonmembers = 0;
};

inline RocCurve roc(std::span<const LabeledScore> scores) {
  RocCurve curve;
  for (const auto& s : scores) {
    if (s.label == Label::kUnknown) {
      throw ValidationError(
          "roc input contains unknown labels; exclude them first");
    }
    if (std::isnan(s.score)) throw ValidationError("roc input contains NaN");
    ++(s.label == Label::kMember ? curve.n_members : curve.n_nonmembers);
  }
  if (curve.n_members == 0) {
    throw ValidationError("cannot build ROC: no member samples");
  }
  if (curve.n_nonmembers == 0) {
    throw ValidationError("cannot build ROC: no nonmember samples");
  }

  std::vector<LabeledScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.score > b.score; });

  const double p = static_cast<double>(curve.n_members);
  const double n = static_cast<double>(curve.n_nonmembers);
  curve.points.push_back(RocPoint{});
  std::uint64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double block = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == block; ++i) {
      ++(sorted[i].label == Label::kMember ? tp : fp);
    }
    curve.points.push_back(RocPoint{static_cast<double>(fp) / n,
                                    static_cast<double>(tp) / p, block, fp,
                                    tp});
  }
  return curve;
}

// Trapezoidal area under the curve.
inline double auc(const RocCurve& curve) {
  std::uint64_t twice_area = 0;  // in units of 1 / (P * N)
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    twice_area += (b.fp - a.fp) * (a.tp + b.tp);
  }
  return static_cast<double>(twice_area) /
         (2.0 * static_cast<double>(curve.n_members) *
          static_cast<double>(curve.n_nonmembers));
}

// P(member score > nonmember score) + 0.5 P(tie), via midranks.
inline double mann_whitney_auc(std::span<const LabeledScore> scores) {
  std::vector<LabeledScore> sorted;
  for (const auto& s : scores) {
    if (s.label != Label::kUnknown) sorted.push_back(s);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.score < b.score; });
  // Midranks doubled to stay integral: rank sum * 2.
  std::uint64_t twice_rank_sum = 0, members = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    std::uint64_t block_members = 0;
    for (; j < sorted.size() && sorted[j].score == sorted[i].score; ++j) {
      if (sorted[j].label == Label::kMember) ++block_members;
    }
    // ranks i+1 .. j, midrank (i+1+j)/2
    twice_rank_sum += block_members * (i + 1 + j);
    members += block_members;
    i = j;
  }
  const std::uint64_t nonmembers = sorted.size() - members;
  if (members == 0 || nonmembers == 0) {
    throw ValidationError("Mann-Whitney AUC needs both classes");
  }
  // U = R - m(m+1)/2
  const std::uint64_t twice_u = twice_rank_sum - members * (members + 1);
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(members) *
          static_cast<double>(nonmembers));
}

struct OperatingPoint {
  double tpr = 0.0;
  double achieved_fpr = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
};

// Highest-TPR curve point whose FPR does not exceed target_fpr. No
// interpolation between points.
inline OperatingPoint tpr_at_fpr(const RocCurve& curve, double target_fpr) {
  OperatingPoint best;
  for (const auto& pt : curve.points) {
    if (pt.fpr > target_fpr) break;
    best = {pt.tpr, pt.fpr, pt.threshold};
  }
  return best;
}

// Drops unknown-labeled entries, returning how many were dropped.
inline std::size_t exclude_unknown(std::vector<LabeledScore>& scores) {
  const auto before = scores.size();
  std::erase_if(scores,
                [](const auto& s) { return s.label == Label::kUnknown; });
  return before - scores.size();
}

inline constexpr double kAucSelfCheckTolerance = 1e-12;

struct ScoreRow {
  std::string sample_id;
  Label label = Label::kUnknown;
  std::string attack;
  double score = 0.0;
  bool degenerate = false;
};

struct AttackEval {
  std::string attack;
  double auc = 0.0;
  std::map<double, OperatingPoint> tpr_at_fpr;
  std::uint64_t n_members = 0;
  std::uint64_t n_nonmembers = 0;
  std::size_t excluded_unknown = 0;
  std::size_t degenerate_count = 0;
  RocCurve curve;
};

struct EvalReport {
  std::vector<AttackEval> attacks;  // ascending attack name
  std::vector<double> fpr_targets;
};

inline void validate_fpr_targets(std::span<const double> targets) {
  for (double t : targets) {
    if (!(t > 0.0 && t < 1.0)) {
      throw UsageError("FPR targets must lie in (0, 1)");
    }
  }
}

// Evaluates every attack present in `rows`. Throws ValidationError if an
// attack lacks one of the two classes after dropping unknown labels.
inline EvalReport evaluate(std::span<const ScoreRow> rows,
                           std::vector<double> fpr_targets) {
  validate_fpr_targets(fpr_targets);
  std::map<std::string, std::vector<const ScoreRow*>> by_attack;
  for (const auto& r : rows) by_attack[r.attack].push_back(&r);

  EvalReport report;
  report.fpr_targets = fpr_targets;
  for (const auto& [name, group] : by_attack) {
    AttackEval ev;
    ev.attack = name;
    std::vector<LabeledScore> labeled;
    for (const auto* r : group) {
      if (r->degenerate) ++ev.degenerate_count;
      labeled.push_back({r->score, r->label});
    }
    ev.excluded_unknown = exclude_unknown(labeled);
    try {
      ev.curve = roc(labeled);
    } catch (const ValidationError& e) {
      throw ValidationError("attack '" + name + "': " + e.what());
    }
    ev.auc = auc(ev.curve);
    const double mw = mann_whitney_auc(labeled);
    if (std::abs(mw - ev.auc) > kAucSelfCheckTolerance) {
      throw Error(ErrorKind::kInternal,
                  "AUC self-check failed for attack '" + name + "'");
    }
    ev.n_members = ev.curve.n_members;
    ev.n_nonmembers = ev.curve.n_nonmembers;
    for (double t : fpr_targets) ev.tpr_at_fpr[t] = tpr_at_fpr(ev.curve, t);
    report.attacks.push_back(std::move(ev));
  }
  return report;
}

inline std::vector<ScoreRow> to_rows(const std::vector<AttackScore>& scores,
                                     const std::map<std::string, Label>& labels) {
  std::vector<ScoreRow> rows;
  rows.reserve(scores.size());
  for (const auto& s : scores) {
    auto it = labels.find(s.sample_id);
    rows.push_back({s.sample_id,
                    it == labels.end() ? Label::kUnknown : it->second,
                    std::string(attack_name(s.attack)), s.score,
                    s.degenerate});
  }
  return rows;
}

struct SweepRow {
  SelectionConfig config;
  double auc = 0.0;
  OperatingPoint at_fpr_0_1;
  OperatingPoint at_fpr_0_01;
};

// Cartesian product in fixed axis order: alpha, min_k, max_k, strategy,
// margin (last axis varies fastest).
inline std::vector<SelectionConfig> make_grid(
    std::span<const double> alphas, std::span<const std::int64_t> min_ks,
    std::span<const std::int64_t> max_ks,
    std::span<const SelectionStrategy> strategies,
    std::span<const double> margins) {
  std::vector<SelectionConfig> grid;
  for (double a : alphas) {
    for (auto lo : min_ks) {
      for (auto hi : max_ks) {
        for (auto s : strategies) {
          for (double m : margins) {
            SelectionConfig c{lo, hi, a, s, m};
            c.validate();
            grid.push_back(c);
          }
        }
      }
    }
  }
  return grid;
}

inline SweepRow evaluate_config(const std::vector<SampleRecord>& records,
                                const SelectionConfig& cfg) {
  std::vector<LabeledScore> labeled;
  labeled.reserve(records.size());
  for (const auto& r : records) {
    if (r.label == Label::kUnknown) continue;
    labeled.push_back({ht_mia_score(r, cfg).score, r.label});
  }
  const auto curve = roc(labeled);
  return {cfg, auc(curve), tpr_at_fpr(curve, 0.1), tpr_at_fpr(curve, 0.01)};
}

// One row per grid point, in grid order. Grid points are evaluated on up to
// `threads` worker threads (0 = hardware concurrency).
inline std::vector<SweepRow> sweep(const std::vector<SampleRecord>& records,
                                   const std::vector<SelectionConfig>& grid,
                                   unsigned threads = 0) {
  std::size_t members = 0, nonmembers = 0;
  for (const auto& r : records) {
    if (r.label == Label::kMember) ++members;
    if (r.label == Label::kNonmember) ++nonmembers;
  }
  if (members < 2 || nonmembers < 2) {
    throw ValidationError(
        "sweep needs at least 2 member and 2 nonmember samples, got " +
        std::to_string(members) + " and " + std::to_string(nonmembers));
  }
  for (const auto& c : grid) c.validate();

  std::vector<SweepRow> rows(grid.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, std::max<std::size_t>(grid.size(), 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (auto i = next++; i < grid.size(); i = next++) {
      rows[i] = evaluate_config(records, grid[i]);
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  return rows;
}

}  // namespace htmia
