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

// htmia: membership-inference audit tool.
//
//   htmia validate <trace.jsonl>... [--labels F] [--text F]
//   htmia score    --target T --reference R [--variants V...] [--labels F]
//   htmia eval     (--scores S | --target T --reference R) [--labels F]
//   htmia sweep    --target T --reference R --labels F [grid axes]
//   htmia simulate [generator knobs]
//   htmia theory   [--trials N]
//   htmia report   --eval eval_report.json
//
// Options may also come from a TOML file given with --config before the
// subcommand; flags given on the command line take precedence. Subcommand
// options live in a section named after the subcommand, e.g.
//
//   [score]
//   alpha = 0.1
//   attacks = ["ht_mia", "loss"]
//
// Exit codes: 0 clean, 1 usage or configuration error, 2 data validation
// error (or failed theory validation), 3 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htmia/htmia.hpp"

namespace fs = std::filesystem;

namespace {

using namespace htmia;

constexpr const char* kOutputDirEnv = "HTMIA_OUTPUT_DIR";

struct InputOptions {
  std::string target;
  std::string reference;
  std::vector<std::string> variants;
  std::string labels;
  std::string text;
};

struct SelectionOptions {
  std::int64_t min_k = SelectionConfig{}.min_k;
  std::int64_t max_k = SelectionConfig{}.max_k;
  double alpha = SelectionConfig{}.alpha;
  std::string strategy = "by_target";
  double margin = 0.0;
};

struct Options {
  std::string output_dir;
  std::uint64_t seed = 0;

  std::vector<std::string> validate_files;

  InputOptions in;
  SelectionOptions sel;
  std::vector<std::string> attacks{"ht_mia", "loss", "min_k_pp", "ratio"};
  double min_k_pp_fraction = 0.2;
  std::size_t pac_k = 10;
  std::size_t pac_n_aug = 5;
  double max_join_error_rate = 0.0;
  std::string out;

  std::string scores;
  std::vector<double> fpr{0.1, 0.01};

  std::vector<double> alphas;
  std::vector<std::int64_t> min_ks;
  std::vector<std::int64_t> max_ks;
  std::vector<std::string> strategies;
  std::vector<double> margins;
  unsigned threads = 0;

  SyntheticTraceSpec synth;

  std::uint64_t trials = 10000;
  double power_p_mem = TheoryConfig{}.power_p_mem;

  std::string eval_path;
};

// Options that name destinations rather than change results.
bool is_destination(const std::string& name) {
  return name == "--out" || name == "--output-dir" || name == "--help" ||
         name == "--config" || name == "--threads";
}

std::map<std::string, std::string> config_snapshot(const CLI::App& sub) {
  std::map<std::string, std::string> snap;
  for (const auto* opt : sub.get_options()) {
    const auto name = opt->get_name();
    if (name.empty() || is_destination(name)) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) {
        if (!value.empty()) value += ",";
        value += r;
      }
    } else {
      value = opt->get_default_str();
    }
    snap[name.substr(name.find_first_not_of('-'))] = value;
  }
  return snap;
}

OrderedJson snapshot_json(const std::map<std::string, std::string>& snap) {
  OrderedJson j = OrderedJson::object();
  for (const auto& [k, v] : snap) j[k] = v;
  return j;
}

fs::path output_dir(const Options& o) {
  fs::path dir = o.output_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path(".");
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw UsageError("cannot create output directory '" + dir.string() +
                     "': " + ec.message());
  }
  return dir;
}

fs::path resolve_output(const Options& o, const std::string& default_name) {
  if (!o.out.empty()) {
    fs::path p = o.out;
    if (p.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(p.parent_path(), ec);
    }
    return p;
  }
  return output_dir(o) / default_name;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write output file '" + path.string() + "'");
  return out;
}

template <typename Fn>
auto with_path(const std::string& path, Fn&& fn) {
  auto in = open_input(path);
  try {
    return fn(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

SelectionConfig selection(const SelectionOptions& s) {
  auto strategy = parse_strategy(s.strategy);
  if (!strategy) throw UsageError("unknown strategy '" + s.strategy + "'");
  SelectionConfig cfg{s.min_k, s.max_k, s.alpha, *strategy, s.margin};
  cfg.validate();
  return cfg;
}

struct LoadedInputs {
  JoinResult joined;
  std::map<std::string, Label> labels;
  std::optional<std::map<std::string, std::string>> texts;
};

void print_join_summary(const JoinSummary& s, std::size_t joined) {
  std::cerr << "join: " << joined << " samples joined, "
            << s.unmatched_target.size() << " target-only, "
            << s.unmatched_reference.size() << " reference-only, "
            << s.errors.size() << " errors\n";
  for (const auto& id : s.unmatched_target) {
    std::cerr << "  unmatched target sample '" << id << "'\n";
  }
  for (const auto& id : s.unmatched_reference) {
    std::cerr << "  unmatched reference sample '" << id << "'\n";
  }
  for (const auto& [id, why] : s.errors) {
    std::cerr << "  join error for '" << id << "': " << why << "\n";
  }
}

LoadedInputs load_inputs(const InputOptions& in) {
  if (in.target.empty() || in.reference.empty()) {
    throw UsageError("--target and --reference are required");
  }
  auto target = read_trace_file(in.target);
  auto reference = read_trace_file(in.reference);
  if (target.header.tokenizer_id != reference.header.tokenizer_id) {
    std::cerr << "warning: tokenizer ids differ ('"
              << target.header.tokenizer_id << "' vs '"
              << reference.header.tokenizer_id
              << "'); samples are joined only where token ids coincide\n";
  }
  std::vector<TokenTrace> variants;
  for (const auto& path : in.variants) {
    auto f = read_trace_file(path);
    for (auto& t : f.traces) variants.push_back(std::move(t));
  }
  LoadedInputs out;
  if (!in.labels.empty()) {
    out.labels = with_path(in.labels, [](auto& s) { return parse_labels(s); });
  }
  if (!in.text.empty()) {
    out.texts =
        with_path(in.text, [](auto& s) { return parse_text_sidecar(s); });
  }
  out.joined = join_samples(target.traces, reference.traces, out.labels,
                            variants);
  print_join_summary(out.joined.summary, out.joined.records.size());
  return out;
}

std::vector<Attack> parse_attacks(const std::vector<std::string>& names) {
  std::vector<Attack> out;
  for (const auto& n : names) {
    auto a = parse_attack(n);
    if (!a) throw UsageError("unknown attack '" + n + "'");
    out.push_back(*a);
  }
  return out;
}

// Scores joined records. Returns the rows and whether problems exceeded the
// join error tolerance.
std::pair<std::vector<ScoreRow>, bool> compute_scores(const Options& o) {
  AttackParams params{selection(o.sel), o.min_k_pp_fraction, o.pac_k,
                      o.pac_n_aug};
  auto attacks = parse_attacks(o.attacks);
  auto inputs = load_inputs(o.in);
  auto batch = score_batch(inputs.joined.records, attacks, params,
                           inputs.texts ? &*inputs.texts : nullptr);
  for (const auto& f : batch.failures) {
    std::cerr << "score failure: sample '" << f.sample_id << "' attack "
              << attack_name(f.attack) << ": " << f.reason << "\n";
  }
  const auto& s = inputs.joined.summary;
  const std::size_t problems = s.unmatched_target.size() +
                               s.unmatched_reference.size() + s.errors.size();
  const std::size_t total = inputs.joined.records.size() + problems;
  const double rate =
      total == 0 ? 0.0
                 : static_cast<double>(problems) / static_cast<double>(total);
  const bool warn = rate > o.max_join_error_rate || !batch.failures.empty();
  std::map<std::string, Label> labels;
  for (const auto& r : inputs.joined.records) labels[r.sample_id] = r.label;
  return {to_rows(batch.scores, labels), warn};
}

}  // namespace

namespace {

int cmd_validate(const Options& o) {
  if (o.validate_files.empty() && o.in.labels.empty() && o.in.text.empty()) {
    throw UsageError("validate: nothing to check");
  }
  bool ok = true;
  auto report = [&](const std::string& path, auto&& check) {
    try {
      const std::string summary = check();
      std::cout << "ok " << path << ": " << summary << "\n";
    } catch (const ValidationError& e) {
      ok = false;
      std::cerr << "invalid " << e.what() << "\n";
    }
  };
  for (const auto& path : o.validate_files) {
    report(path, [&] {
      auto f = read_trace_file(path);
      return std::to_string(f.traces.size()) + " traces, model '" +
             f.header.model_id + "', tokenizer '" + f.header.tokenizer_id +
             "'";
    });
  }
  if (!o.in.labels.empty()) {
    report(o.in.labels, [&] {
      auto l = with_path(o.in.labels, [](auto& s) { return parse_labels(s); });
      return std::to_string(l.size()) + " labels";
    });
  }
  if (!o.in.text.empty()) {
    report(o.in.text, [&] {
      auto t = with_path(o.in.text,
                         [](auto& s) { return parse_text_sidecar(s); });
      return std::to_string(t.size()) + " texts";
    });
  }
  return ok ? 0 : static_cast<int>(ErrorKind::kValidation);
}

int cmd_score(const Options& o, const CLI::App& sub) {
  auto [rows, warn] = compute_scores(o);
  const auto prov = Provenance::from_config(config_snapshot(sub), o.seed);
  const auto path = resolve_output(o, "scores.csv");
  auto out = open_output(path);
  write_score_csv(out, rows, prov);
  std::cerr << "wrote " << rows.size() << " scores to " << path.string()
            << "\n";
  return warn ? static_cast<int>(ErrorKind::kValidation) : 0;
}

int cmd_eval(const Options& o, const CLI::App& sub) {
  std::vector<ScoreRow> rows;
  bool warn = false;
  if (!o.scores.empty()) {
    rows = with_path(o.scores, [](auto& s) { return read_score_csv(s); });
    if (!o.in.labels.empty()) {
      auto labels =
          with_path(o.in.labels, [](auto& s) { return parse_labels(s); });
      for (auto& r : rows) {
        auto it = labels.find(r.sample_id);
        r.label = it == labels.end() ? Label::kUnknown : it->second;
      }
    }
  } else {
    std::tie(rows, warn) = compute_scores(o);
  }
  const auto report = evaluate(rows, o.fpr);
  const auto snap = config_snapshot(sub);
  const auto prov = Provenance::from_config(snap, o.seed);
  const auto dir = output_dir(o);

  {
    auto out = open_output(dir / "eval_report.json");
    out << eval_report_json(report, prov, snapshot_json(snap)).dump(2) << "\n";
  }
  {
    auto out = open_output(dir / "eval_report.csv");
    write_eval_csv(out, report, prov);
  }
  for (const auto& a : report.attacks) {
    auto out = open_output(dir / ("roc_" + a.attack + ".csv"));
    write_roc_csv(out, a.curve, prov);
    if (a.excluded_unknown > 0) {
      std::cerr << "warning: attack " << a.attack << ": excluded "
                << a.excluded_unknown << " samples with unknown labels\n";
    }
  }
  std::cout << format_eval_table(
      eval_report_json(report, prov, snapshot_json(snap)));
  return warn ? static_cast<int>(ErrorKind::kValidation) : 0;
}

int cmd_sweep(const Options& o, const CLI::App& sub) {
  if (o.in.labels.empty()) throw UsageError("sweep requires --labels");
  auto inputs = load_inputs(o.in);

  auto or_default = [](auto axis, auto fallback) {
    if (axis.empty()) axis.push_back(fallback);
    return axis;
  };
  const auto alphas = or_default(o.alphas, o.sel.alpha);
  const auto min_ks = or_default(o.min_ks, o.sel.min_k);
  const auto max_ks = or_default(o.max_ks, o.sel.max_k);
  const auto margins = or_default(o.margins, o.sel.margin);
  std::vector<SelectionStrategy> strategies;
  for (const auto& s : or_default(o.strategies, o.sel.strategy)) {
    auto st = parse_strategy(s);
    if (!st) throw UsageError("unknown strategy '" + s + "'");
    strategies.push_back(*st);
  }
  const auto grid = make_grid(alphas, min_ks, max_ks, strategies, margins);
  const auto rows = sweep(inputs.joined.records, grid, o.threads);

  const auto prov = Provenance::from_config(config_snapshot(sub), o.seed);
  const auto path = resolve_output(o, "sweep.csv");
  auto out = open_output(path);
  write_sweep_csv(out, rows, prov);
  for (const auto& r : rows) {
    std::printf("alpha=%-6g min_k=%-4lld max_k=%-5lld %-12s margin=%-6g "
                "AUC=%.4f TPR@0.1=%.4f TPR@0.01=%.4f\n",
                r.config.alpha, static_cast<long long>(r.config.min_k),
                static_cast<long long>(r.config.max_k),
                std::string(strategy_name(r.config.strategy)).c_str(),
                r.config.margin, r.auc, r.at_fpr_0_1.tpr, r.at_fpr_0_01.tpr);
  }
  return inputs.joined.summary.clean() ? 0
                                       : static_cast<int>(ErrorKind::kValidation);
}

int cmd_simulate(const Options& o) {
  auto spec = o.synth;
  spec.seed = o.seed;
  const auto data = generate_synthetic(spec);
  const auto dir = output_dir(o);
  {
    auto out = open_output(dir / "target.jsonl");
    write_trace_file(out, data.target_header, data.target);
  }
  {
    auto out = open_output(dir / "reference.jsonl");
    write_trace_file(out, data.reference_header, data.reference);
  }
  {
    auto out = open_output(dir / "labels.jsonl");
    write_labels(out, data.labels);
  }
  {
    auto out = open_output(dir / "texts.jsonl");
    for (const auto& [id, text] : data.texts) {
      out << "{\"sample_id\":" << nlohmann::json(id).dump()
          << ",\"text\":" << nlohmann::json(text).dump() << "}\n";
    }
  }
  std::cerr << "wrote " << data.target.size() << " synthetic samples to "
            << dir.string() << "\n";
  return 0;
}

int cmd_theory(const Options& o, const CLI::App& sub) {
  TheoryConfig cfg;
  cfg.seed = o.seed;
  cfg.hoeffding.n_trials = o.trials;
  cfg.power_trials = o.trials;
  cfg.power_p_mem = o.power_p_mem;
  const auto report = run_theory(cfg);
  const auto prov = Provenance::from_config(config_snapshot(sub), o.seed);
  const auto path = resolve_output(o, "theory_report.json");
  auto out = open_output(path);
  out << theory_report_json(report, prov).dump(2) << "\n";

  std::size_t cells_ok = 0;
  for (const auto& c : report.hoeffding) cells_ok += c.pass;
  std::size_t power_ok = 0;
  for (const auto& p : report.power) power_ok += p.pass;
  std::size_t dom_violations = 0;
  for (const auto& d : report.dominance) dom_violations += d.second.violations;
  std::cout << "hoeffding bounds:      " << cells_ok << "/"
            << report.hoeffding.size() << " cells within bound\n"
            << "sample complexity:     " << power_ok << "/"
            << report.power.size() << " power checks passed\n"
            << "selection optimality:  " << report.selection.counterexamples
            << " counterexamples in " << report.selection.instances
            << " instances\n"
            << "threshold dominance:   " << dom_violations
            << " violations\n"
            << (report.pass() ? "PASS" : "FAIL") << "\n";
  return report.pass() ? 0 : static_cast<int>(ErrorKind::kValidation);
}

int cmd_report(const Options& o) {
  auto j = with_path(o.eval_path, [](auto& s) {
    try {
      return OrderedJson::parse(s);
    } catch (const OrderedJson::exception& e) {
      throw ValidationError(std::string("malformed eval report: ") + e.what());
    }
  });
  std::string table;
  try {
    table = format_eval_table(j);
  } catch (const OrderedJson::exception& e) {
    throw ValidationError(o.eval_path + ": not an eval report: " + e.what());
  }
  if (!o.out.empty()) {
    auto out = open_output(o.out);
    out << table;
  }
  std::cout << table;
  return 0;
}

void add_input_options(CLI::App* sub, Options& o) {
  sub->add_option("--target", o.in.target, "Target-model trace JSONL");
  sub->add_option("--reference", o.in.reference,
                  "Reference-model trace JSONL");
  sub->add_option("--variants", o.in.variants,
                  "Extra trace files with lowercase/augmented variants");
  sub->add_option("--labels", o.in.labels, "Labels JSONL");
  sub->add_option("--text", o.in.text, "Raw-text sidecar JSONL (zlib attack)");
}

void add_selection_options(CLI::App* sub, Options& o) {
  sub->add_option("--min-k", o.sel.min_k, "Minimum hard tokens")
      ->capture_default_str();
  sub->add_option("--max-k", o.sel.max_k, "Maximum hard tokens")
      ->capture_default_str();
  sub->add_option("--alpha", o.sel.alpha, "Fraction of tokens to inspect")
      ->capture_default_str();
  sub->add_option("--strategy", o.sel.strategy,
                  "Hard-token ranking model: by_target | by_reference")
      ->capture_default_str();
  sub->add_option("--margin", o.sel.margin,
                  "Count a token as improved iff delta > margin")
      ->capture_default_str();
}

void add_scoring_options(CLI::App* sub, Options& o) {
  add_input_options(sub, o);
  add_selection_options(sub, o);
  sub->add_option("--attacks", o.attacks,
                  "Attacks: ht_mia,loss,ratio,zlib,min_k_pp,lowercase,pac")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--min-k-pp-fraction", o.min_k_pp_fraction,
                  "Min-K%++ fraction of tokens")
      ->capture_default_str();
  sub->add_option("--pac-k", o.pac_k, "PAC top/bottom token count")
      ->capture_default_str();
  sub->add_option("--pac-n-aug", o.pac_n_aug, "PAC augmented variants")
      ->capture_default_str();
  sub->add_option("--max-join-error-rate", o.max_join_error_rate,
                  "Tolerated fraction of unjoinable samples before the exit "
                  "code reports a data error")
      ->capture_default_str();
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--output-dir", o.output_dir,
                  std::string("Output directory (default $") + kOutputDirEnv +
                      " or .)");
  sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
}

int run(int argc, char** argv) {
  // One Options per subcommand: config sections for subcommands that are not
  // invoked are still applied by the parser, so they must not share storage.
  Options ov, os, oe, ow, om, ot, orp;
  CLI::App app{"htmia: hard-token membership inference audit tool"};
  app.set_config("--config", "", "TOML configuration file");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  auto* validate = app.add_subcommand("validate", "Validate trace files");
  validate->add_option("files", ov.validate_files, "Trace JSONL files");
  validate->add_option("--labels", ov.in.labels, "Labels JSONL");
  validate->add_option("--text", ov.in.text, "Raw-text sidecar JSONL");

  auto* score = app.add_subcommand("score", "Score samples with attacks");
  add_scoring_options(score, os);
  add_common(score, os);
  score->add_option("--out", os.out, "Score CSV path");

  auto* eval = app.add_subcommand("eval", "ROC, AUC and TPR@FPR per attack");
  add_scoring_options(eval, oe);
  add_common(eval, oe);
  eval->add_option("--scores", oe.scores, "Score CSV from `score`");
  eval->add_option("--fpr", oe.fpr, "FPR targets")
      ->delimiter(',')
      ->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep hard-token settings");
  add_input_options(sweep_cmd, ow);
  add_selection_options(sweep_cmd, ow);
  add_common(sweep_cmd, ow);
  sweep_cmd->add_option("--alphas", ow.alphas, "alpha axis")->delimiter(',');
  sweep_cmd->add_option("--min-ks", ow.min_ks, "min_k axis")->delimiter(',');
  sweep_cmd->add_option("--max-ks", ow.max_ks, "max_k axis")->delimiter(',');
  sweep_cmd->add_option("--strategies", ow.strategies, "strategy axis")
      ->delimiter(',');
  sweep_cmd->add_option("--margins", ow.margins, "margin axis")->delimiter(',');
  sweep_cmd->add_option("--threads", ow.threads, "Worker threads (0 = auto)");
  sweep_cmd->add_option("--out", ow.out, "Sweep CSV path");

  auto* simulate = app.add_subcommand("simulate", "Generate synthetic traces");
  add_common(simulate, om);
  auto& s = om.synth;
  simulate->add_option("--n-per-class", s.n_per_class)->capture_default_str();
  simulate->add_option("--min-length", s.min_length)->capture_default_str();
  simulate->add_option("--max-length", s.max_length)->capture_default_str();
  simulate->add_option("--easy-lo", s.easy_lo)->capture_default_str();
  simulate->add_option("--easy-hi", s.easy_hi)->capture_default_str();
  simulate->add_option("--hard-lo", s.hard_lo)->capture_default_str();
  simulate->add_option("--hard-hi", s.hard_hi)->capture_default_str();
  simulate->add_option("--hard-fraction", s.hard_fraction)
      ->capture_default_str();
  simulate->add_option("--generalization-fraction", s.generalization_fraction)
      ->capture_default_str();
  simulate->add_option("--member-uplift", s.member_uplift)
      ->capture_default_str();
  simulate->add_option("--nonmember-uplift", s.nonmember_uplift)
      ->capture_default_str();
  simulate->add_option("--uplift-gain", s.uplift_gain)->capture_default_str();
  simulate->add_option("--uplift-correlation", s.uplift_correlation)
      ->capture_default_str();
  simulate->add_option("--vocab-size", s.vocab_size)->capture_default_str();

  auto* theory = app.add_subcommand("theory", "Validate score guarantees");
  add_common(theory, ot);
  theory->add_option("--trials", ot.trials, "Monte Carlo trials per check")
      ->capture_default_str();
  theory->add_option("--power-p-mem", ot.power_p_mem,
                     "Member improvement rate for the power check")
      ->capture_default_str();
  theory->add_option("--out", ot.out, "Report JSON path");

  auto* report = app.add_subcommand("report", "Print an eval report table");
  report->add_option("--eval", orp.eval_path, "eval_report.json")->required();
  report->add_option("--out", orp.out, "Also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ErrorKind::kUsage);
  }

  if (*validate) return cmd_validate(ov);
  if (*score) return cmd_score(os, *score);
  if (*eval) return cmd_eval(oe, *eval);
  if (*sweep_cmd) return cmd_sweep(ow, *sweep_cmd);
  if (*simulate) return cmd_simulate(om);
  if (*theory) return cmd_theory(ot, *theory);
  return cmd_report(orp);
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::kUsage:
      return "usage";
    case ErrorKind::kValidation:
      return "validation";
    case ErrorKind::kInternal:
      break;
  }
  return "internal";
}

int fail(ErrorKind kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind_name(kind)},
                              {"message", message}}
                   .dump()
            << "\n";
  return static_cast<int>(kind);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const htmia::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(ErrorKind::kInternal, e.what());
  }
}
