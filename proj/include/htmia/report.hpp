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

// CSV and JSON serialization of scores, evaluation reports, sweeps and theory
// validation results. Every output carries a provenance record (tool version,
// config hash, seed) and nothing that varies between identical runs.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "htmia/attacks.hpp"
#include "htmia/errors.hpp"
#include "htmia/metrics.hpp"
#include "htmia/theory.hpp"
#include "htmia/trace.hpp"
#include "json.hpp"

namespace htmia {

inline constexpr std::string_view kToolVersion = "0.1.0";

using OrderedJson = nlohmann::ordered_json;

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Provenance {
  std::string tool_version{kToolVersion};
  std::string config_hash;
  std::uint64_t seed = 0;

  // Hash of a canonical key=value listing (std::map keeps keys sorted).
  static Provenance from_config(const std::map<std::string, std::string>& cfg,
                                std::uint64_t seed) {
    std::string canon;
    for (const auto& [k, v] : cfg) canon += k + "=" + v + "\n";
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canon)));
    return {std::string(kToolVersion), hex, seed};
  }

  std::string csv_comment() const {
    return "# htmia " + tool_version + " config_hash=" + config_hash +
           " seed=" + std::to_string(seed) + "\n";
  }

  OrderedJson to_json() const {
    OrderedJson j;
    j["tool"] = "htmia";
    j["tool_version"] = tool_version;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    return j;
  }
};

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line,
                                               std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back().push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back().push_back(c);
    }
  }
  if (quoted) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": unterminated quoted CSV field");
  }
  return fields;
}

inline double parse_double(const std::string& s, std::size_t line_no) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": not a number: '" + s + "'");
  }
  return v;
}

inline OrderedJson finite_or_null(double v) {
  return std::isfinite(v) ? OrderedJson(v) : OrderedJson(nullptr);
}

}  // namespace detail

inline constexpr std::string_view kScoreCsvHeader =
    "sample_id,label,attack,score,degenerate_flag";

inline void write_score_csv(std::ostream& out, const std::vector<ScoreRow>& rows,
                            const Provenance& prov) {
  out << prov.csv_comment() << kScoreCsvHeader << "\n";
  for (const auto& r : rows) {
    out << detail::csv_field(r.sample_id) << ',' << label_name(r.label) << ','
        << r.attack << ',' << detail::format_double(r.score) << ','
        << (r.degenerate ? 1 : 0) << "\n";
  }
}

inline std::vector<ScoreRow> read_score_csv(std::istream& in) {
  std::vector<ScoreRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line) || line.front() == '#') continue;
    if (!header_seen) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line != kScoreCsvHeader) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": expected score CSV header '" +
                              std::string(kScoreCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = detail::split_csv_line(line, line_no);
    if (f.size() != 5) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": expected 5 fields, got " +
                            std::to_string(f.size()));
    }
    auto label = parse_label(f[1]);
    if (!label) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": bad label '" + f[1] + "'");
    }
    if (f[4] != "0" && f[4] != "1") {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": degenerate_flag must be 0 or 1");
    }
    rows.push_back({f[0], *label, f[2], detail::parse_double(f[3], line_no),
                    f[4] == "1"});
  }
  if (!header_seen) throw ValidationError("score CSV has no header line");
  return rows;
}

inline OrderedJson eval_report_json(const EvalReport& report,
                                    const Provenance& prov,
                                    const OrderedJson& config) {
  OrderedJson j;
  j["provenance"] = prov.to_json();
  j["config"] = config;
  j["fpr_targets"] = report.fpr_targets;
  OrderedJson attacks = OrderedJson::array();
  for (const auto& a : report.attacks) {
    OrderedJson e;
    e["attack"] = a.attack;
    e["auc"] = a.auc;
    OrderedJson ops = OrderedJson::array();
    for (double t : report.fpr_targets) {
      const auto& op = a.tpr_at_fpr.at(t);
      ops.push_back({{"target_fpr", t},
                     {"tpr", op.tpr},
                     {"achieved_fpr", op.achieved_fpr},
                     {"threshold", detail::finite_or_null(op.threshold)}});
    }
    e["tpr_at_fpr"] = ops;
    e["n_members"] = a.n_members;
    e["n_nonmembers"] = a.n_nonmembers;
    e["excluded_unknown"] = a.excluded_unknown;
    e["degenerate_count"] = a.degenerate_count;
    attacks.push_back(e);
  }
  j["attacks"] = attacks;
  return j;
}

inline void write_eval_csv(std::ostream& out, const EvalReport& report,
                           const Provenance& prov) {
  out << prov.csv_comment() << "attack,auc";
  for (double t : report.fpr_targets) {
    const auto s = detail::format_double(t);
    out << ",tpr@" << s << ",achieved_fpr@" << s << ",threshold@" << s;
  }
  out << ",n_members,n_nonmembers,excluded_unknown,degenerate_count\n";
  for (const auto& a : report.attacks) {
    out << a.attack << ',' << detail::format_double(a.auc);
    for (double t : report.fpr_targets) {
      const auto& op = a.tpr_at_fpr.at(t);
      out << ',' << detail::format_double(op.tpr) << ','
          << detail::format_double(op.achieved_fpr) << ','
          << detail::format_double(op.threshold);
    }
    out << ',' << a.n_members << ',' << a.n_nonmembers << ','
        << a.excluded_unknown << ',' << a.degenerate_count << "\n";
  }
}

inline void write_roc_csv(std::ostream& out, const RocCurve& curve,
                          const Provenance& prov) {
  out << prov.csv_comment() << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    out << detail::format_double(p.fpr) << ',' << detail::format_double(p.tpr)
        << ',' << detail::format_double(p.threshold) << "\n";
  }
}

inline void write_sweep_csv(std::ostream& out,
                            const std::vector<SweepRow>& rows,
                            const Provenance& prov) {
  out << prov.csv_comment()
      << "alpha,min_k,max_k,strategy,margin,auc,tpr@0.1,achieved_fpr@0.1,"
         "tpr@0.01,achieved_fpr@0.01\n";
  for (const auto& r : rows) {
    out << detail::format_double(r.config.alpha) << ',' << r.config.min_k
        << ',' << r.config.max_k << ',' << strategy_name(r.config.strategy)
        << ',' << detail::format_double(r.config.margin) << ','
        << detail::format_double(r.auc) << ','
        << detail::format_double(r.at_fpr_0_1.tpr) << ','
        << detail::format_double(r.at_fpr_0_1.achieved_fpr) << ','
        << detail::format_double(r.at_fpr_0_01.tpr) << ','
        << detail::format_double(r.at_fpr_0_01.achieved_fpr) << "\n";
  }
}

inline OrderedJson theory_report_json(const TheoryReport& r,
                                      const Provenance& prov) {
  OrderedJson j;
  j["provenance"] = prov.to_json();
  OrderedJson cells = OrderedJson::array();
  for (const auto& c : r.hoeffding) {
    cells.push_back({{"k", c.k},
                     {"gamma", c.gamma},
                     {"p_mem", c.p_mem},
                     {"p_non", c.p_non},
                     {"tau", c.tau},
                     {"n_trials", c.rates.n_trials},
                     {"empirical_fnr", c.rates.empirical_fnr},
                     {"bound_fnr", c.rates.bound_fnr},
                     {"empirical_fpr", c.rates.empirical_fpr},
                     {"bound_fpr", c.rates.bound_fpr},
                     {"pass", c.pass}});
  }
  j["hoeffding"] = cells;
  OrderedJson power = OrderedJson::array();
  for (const auto& p : r.power) {
    power.push_back({{"gamma", p.gamma},
                     {"beta", p.beta},
                     {"k", p.k},
                     {"p_mem", p.p_mem},
                     {"p_non", p.p_non},
                     {"tau", p.tau},
                     {"empirical_power", p.empirical_power},
                     {"power_floor", p.floor},
                     {"pass", p.pass}});
  }
  j["sample_complexity"] = power;
  j["selection_optimality"] = {
      {"instances", r.selection.instances},
      {"counterexamples", r.selection.counterexamples},
      {"pass", r.selection.counterexamples == 0}};
  OrderedJson dom = OrderedJson::array();
  for (const auto& [w, d] : r.dominance) {
    dom.push_back({{"k", w.k},
                   {"p_mem", w.p_mem},
                   {"p_non", w.p_non},
                   {"rules_tested", d.rules_tested},
                   {"comparisons", d.comparisons},
                   {"violations", d.violations},
                   {"pass", d.violations == 0}});
  }
  j["threshold_dominance"] = dom;
  j["pass"] = r.pass();
  return j;
}

// Plain-text table of AUC and TPR at each FPR target, one row per attack.
inline std::string format_eval_table(const OrderedJson& report) {
  std::ostringstream out;
  const auto& targets = report.at("fpr_targets");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-12s %8s", "attack", "AUC");
  out << buf;
  for (const auto& t : targets) {
    std::snprintf(buf, sizeof(buf), " %14s",
                  ("TPR@FPR=" + OrderedJson(t).dump()).c_str());
    out << buf;
  }
  out << "\n";
  for (const auto& a : report.at("attacks")) {
    std::snprintf(buf, sizeof(buf), "%-12s %8.4f",
                  a.at("attack").get<std::string>().c_str(),
                  a.at("auc").get<double>());
    out << buf;
    for (const auto& op : a.at("tpr_at_fpr")) {
      std::snprintf(buf, sizeof(buf), " %14.4f", op.at("tpr").get<double>());
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace htmia
