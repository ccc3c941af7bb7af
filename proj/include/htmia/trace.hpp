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

// Trace data model and the JSONL interchange format.
//
// A trace file is UTF-8 JSONL. Line 1 is a header:
//
//   {"schema_version":"1","tokenizer_id":"gpt2","model_id":"gpt2-ft",
//    "max_length":512}
//
// and every following non-blank line is one trace:
//
//   {"sample_id":"s1","variant":"original","token_ids":[464,3290,318],
//    "next_token_probs":[0.0123,0.8]}
//
// `variant` is "original", "lowercase" or {"augmented":<int>}. Position i of
// next_token_probs is the probability the model assigned to token_ids[i+1]
// given token_ids[0..i], so the two arrays differ in length by exactly one.
// Texts that encode to zero or one token carry an empty probability array.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "htmia/errors.hpp"
#include "json.hpp"

namespace htmia {

inline constexpr std::string_view kSchemaVersion = "1";

// Probabilities in (1, 1 + kProbSlack] are treated as rounding noise.
inline constexpr double kProbSlack = 1e-9;

// Floor applied before taking logarithms of probabilities.
inline constexpr double kLogFloor = 1e-12;

inline double floored_log(double p) { return std::log(std::max(p, kLogFloor)); }

enum class Label { kMember, kNonmember, kUnknown };

inline std::string_view label_name(Label label) {
  switch (label) {
    case Label::kMember:
      return "member";
    case Label::kNonmember:
      return "nonmember";
    case Label::kUnknown:
      break;
  }
  return "unknown";
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "member") return Label::kMember;
  if (s == "nonmember") return Label::kNonmember;
  if (s == "unknown") return Label::kUnknown;
  return std::nullopt;
}

struct Variant {
  enum class Kind { kOriginal, kLowercase, kAugmented };

  Kind kind = Kind::kOriginal;
  int index = 0;  // meaningful for kAugmented only

  static constexpr Variant original() { return {}; }
  static constexpr Variant lowercase() { return {Kind::kLowercase, 0}; }
  static constexpr Variant augmented(int i) { return {Kind::kAugmented, i}; }

  friend auto operator<=>(const Variant&, const Variant&) = default;

  std::string to_string() const {
    switch (kind) {
      case Kind::kOriginal:
        return "original";
      case Kind::kLowercase:
        return "lowercase";
      case Kind::kAugmented:
        break;
    }
    return "augmented(" + std::to_string(index) + ")";
  }
};

struct TokenTrace {
  std::string sample_id;
  std::string model_id;
  Variant variant;
  std::vector<std::int64_t> token_ids;
  std::vector<double> next_token_probs;

  std::size_t length() const { return next_token_probs.size(); }
  bool empty() const { return next_token_probs.empty(); }
};

struct TraceFileHeader {
  std::string schema_version{kSchemaVersion};
  std::string tokenizer_id;
  std::string model_id;
  std::int64_t max_length = 1;
};

// Checks the TokenTrace invariants and clamps probabilities that exceed one by
// at most kProbSlack. Throws ValidationError naming the sample on failure.
inline void validate_trace(TokenTrace& trace) {
  const auto& id = trace.sample_id;
  if (trace.token_ids.empty()) {
    if (!trace.next_token_probs.empty()) {
      throw ValidationError("sample '" + id +
                            "': length mismatch, token_ids is empty but "
                            "next_token_probs has " +
                            std::to_string(trace.next_token_probs.size()) +
                            " entries");
    }
  } else if (trace.next_token_probs.size() != trace.token_ids.size() - 1) {
    throw ValidationError(
        "sample '" + id + "': length mismatch, " +
        std::to_string(trace.token_ids.size()) + " token_ids require " +
        std::to_string(trace.token_ids.size() - 1) +
        " next_token_probs, got " +
        std::to_string(trace.next_token_probs.size()));
  }
  for (auto t : trace.token_ids) {
    if (t < 0) {
      throw ValidationError("sample '" + id + "': negative token id " +
                            std::to_string(t));
    }
  }
  for (std::size_t i = 0; i < trace.next_token_probs.size(); ++i) {
    double& p = trace.next_token_probs[i];
    if (!(p >= 0.0) || p > 1.0 + kProbSlack) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", p);
      throw ValidationError("sample '" + id + "': probability " + buf +
                            " at position " + std::to_string(i) +
                            " is outside [0, 1]");
    }
    if (p > 1.0) p = 1.0;
  }
}

namespace detail {

using Json = nlohmann::json;

inline Json parse_json_line(const std::string& line, std::size_t line_no) {
  try {
    return Json::parse(line);
  } catch (const Json::parse_error& e) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": malformed JSON: " + e.what());
  }
}

inline const Json& require_field(const Json& obj, const char* key,
                                 std::size_t line_no) {
  if (!obj.is_object()) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": expected a JSON object");
  }
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": missing field '" + key + "'");
  }
  return *it;
}

inline std::string require_string(const Json& obj, const char* key,
                                  std::size_t line_no) {
  const auto& v = require_field(obj, key, line_no);
  if (!v.is_string()) {
    throw ValidationError("line " + std::to_string(line_no) + ": field '" +
                          key + "' must be a string");
  }
  return v.get<std::string>();
}

inline Variant parse_variant(const Json& v, std::size_t line_no) {
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    if (s == "original") return Variant::original();
    if (s == "lowercase") return Variant::lowercase();
  } else if (v.is_object() && v.size() == 1 && v.contains("augmented") &&
             v["augmented"].is_number_integer() && v["augmented"] >= 0) {
    return Variant::augmented(v["augmented"].get<int>());
  }
  throw ValidationError("line " + std::to_string(line_no) +
                        ": unrecognized variant " + v.dump());
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace detail

// Streaming reader. Holds one line and one record at a time.
class TraceReader {
 public:
  explicit TraceReader(std::istream& in) : in_(in) { read_header(); }

  const TraceFileHeader& header() const { return header_; }

  // Returns the next validated trace, or nullopt at end of stream.
  std::optional<TokenTrace> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (detail::is_blank(line)) continue;
      return parse_record(line);
    }
    return std::nullopt;
  }

  std::size_t line_number() const { return line_no_; }

 private:
  void read_header() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!detail::is_blank(line)) break;
      line.clear();
    }
    if (detail::is_blank(line)) {
      throw ValidationError("trace file is empty; expected a header line");
    }
    auto obj = detail::parse_json_line(line, line_no_);
    header_.schema_version = detail::require_string(obj, "schema_version",
                                                    line_no_);
    if (header_.schema_version != kSchemaVersion) {
      throw ValidationError("line " + std::to_string(line_no_) +
                            ": unknown schema_version '" +
                            header_.schema_version + "'");
    }
    header_.tokenizer_id = detail::require_string(obj, "tokenizer_id",
                                                  line_no_);
    header_.model_id = detail::require_string(obj, "model_id", line_no_);
    const auto& ml = detail::require_field(obj, "max_length", line_no_);
    if (!ml.is_number_integer() || ml.get<std::int64_t>() < 1) {
      throw ValidationError("line " + std::to_string(line_no_) +
                            ": max_length must be a positive integer");
    }
    header_.max_length = ml.get<std::int64_t>();
  }

  TokenTrace parse_record(const std::string& line) {
    auto obj = detail::parse_json_line(line, line_no_);
    TokenTrace t;
    t.model_id = header_.model_id;
    t.sample_id = detail::require_string(obj, "sample_id", line_no_);
    t.variant = detail::parse_variant(
        detail::require_field(obj, "variant", line_no_), line_no_);

    const auto& ids = detail::require_field(obj, "token_ids", line_no_);
    const auto& probs =
        detail::require_field(obj, "next_token_probs", line_no_);
    if (!ids.is_array() || !probs.is_array()) {
      throw ValidationError("line " + std::to_string(line_no_) +
                            ": token_ids and next_token_probs must be arrays");
    }
    t.token_ids.reserve(ids.size());
    for (const auto& v : ids) {
      if (!v.is_number_integer()) {
        throw ValidationError("line " + std::to_string(line_no_) +
                              ": sample '" + t.sample_id +
                              "': token ids must be integers");
      }
      t.token_ids.push_back(v.get<std::int64_t>());
    }
    t.next_token_probs.reserve(probs.size());
    for (const auto& v : probs) {
      if (!v.is_number()) {
        throw ValidationError("line " + std::to_string(line_no_) +
                              ": sample '" + t.sample_id +
                              "': probabilities must be numbers");
      }
      t.next_token_probs.push_back(v.get<double>());
    }
    if (static_cast<std::int64_t>(t.token_ids.size()) > header_.max_length) {
      throw ValidationError(
          "line " + std::to_string(line_no_) + ": sample '" + t.sample_id +
          "' has " + std::to_string(t.token_ids.size()) +
          " tokens, more than max_length " +
          std::to_string(header_.max_length));
    }
    try {
      validate_trace(t);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no_) + ": " +
                            e.what());
    }
    return t;
  }

  std::istream& in_;
  TraceFileHeader header_;
  std::size_t line_no_ = 0;
};

struct TraceFile {
  TraceFileHeader header;
  std::vector<TokenTrace> traces;
};

inline TraceFile parse_trace_file(std::istream& in) {
  TraceReader reader(in);
  TraceFile file{reader.header(), {}};
  while (auto t = reader.next()) file.traces.push_back(std::move(*t));
  return file;
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open input file '" + path + "'");
  return in;
}

inline TraceFile read_trace_file(const std::string& path) {
  auto in = open_input(path);
  try {
    return parse_trace_file(in);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline void write_trace_header(std::ostream& out,
                               const TraceFileHeader& header) {
  out << "{\"schema_version\":" << detail::Json(header.schema_version).dump()
      << ",\"tokenizer_id\":" << detail::Json(header.tokenizer_id).dump()
      << ",\"model_id\":" << detail::Json(header.model_id).dump()
      << ",\"max_length\":" << header.max_length << "}\n";
}

inline void write_trace(std::ostream& out, const TokenTrace& trace) {
  out << "{\"sample_id\":" << detail::Json(trace.sample_id).dump()
      << ",\"variant\":";
  switch (trace.variant.kind) {
    case Variant::Kind::kOriginal:
      out << "\"original\"";
      break;
    case Variant::Kind::kLowercase:
      out << "\"lowercase\"";
      break;
    case Variant::Kind::kAugmented:
      out << "{\"augmented\":" << trace.variant.index << "}";
      break;
  }
  out << ",\"token_ids\":[";
  for (std::size_t i = 0; i < trace.token_ids.size(); ++i) {
    if (i) out << ',';
    out << trace.token_ids[i];
  }
  out << "],\"next_token_probs\":[";
  for (std::size_t i = 0; i < trace.next_token_probs.size(); ++i) {
    if (i) out << ',';
    out << detail::format_double(trace.next_token_probs[i]);
  }
  out << "]}\n";
}

inline void write_trace_file(std::ostream& out, const TraceFileHeader& header,
                             const std::vector<TokenTrace>& traces) {
  write_trace_header(out, header);
  for (const auto& t : traces) write_trace(out, t);
}

// Labels file: JSONL of {"sample_id":..., "label":"member"|"nonmember"}.
inline std::map<std::string, Label> parse_labels(std::istream& in) {
  std::map<std::string, Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    auto obj = detail::parse_json_line(line, line_no);
    auto id = detail::require_string(obj, "sample_id", line_no);
    auto name = detail::require_string(obj, "label", line_no);
    auto label = parse_label(name);
    if (!label || *label == Label::kUnknown) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": label must be \"member\" or \"nonmember\", got '" +
                            name + "'");
    }
    if (!labels.emplace(id, *label).second) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": duplicate sample_id '" + id + "'");
    }
  }
  return labels;
}

inline void write_labels(std::ostream& out,
                         const std::map<std::string, Label>& labels) {
  for (const auto& [id, label] : labels) {
    out << "{\"sample_id\":" << detail::Json(id).dump() << ",\"label\":\""
        << label_name(label) << "\"}\n";
  }
}

// Raw-text sidecar: JSONL of {"sample_id":..., "text":...}.
inline std::map<std::string, std::string> parse_text_sidecar(std::istream& in) {
  std::map<std::string, std::string> texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    auto obj = detail::parse_json_line(line, line_no);
    auto id = detail::require_string(obj, "sample_id", line_no);
    auto text = detail::require_string(obj, "text", line_no);
    if (!texts.emplace(id, std::move(text)).second) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": duplicate sample_id '" + id + "'");
    }
  }
  return texts;
}

struct VariantKey {
  std::string model_id;
  Variant variant;

  friend auto operator<=>(const VariantKey&, const VariantKey&) = default;
};

struct SampleRecord {
  std::string sample_id;
  Label label = Label::kUnknown;
  TokenTrace target;
  TokenTrace reference;
  std::map<VariantKey, TokenTrace> variant_traces;

  const TokenTrace* find_variant(const std::string& model_id,
                                 Variant variant) const {
    auto it = variant_traces.find(VariantKey{model_id, variant});
    return it == variant_traces.end() ? nullptr : &it->second;
  }
};

struct JoinSummary {
  std::vector<std::string> unmatched_target;     // no reference counterpart
  std::vector<std::string> unmatched_reference;  // no target counterpart
  std::vector<std::pair<std::string, std::string>> errors;  // id, reason

  bool clean() const {
    return unmatched_target.empty() && unmatched_reference.empty() &&
           errors.empty();
  }
};

struct JoinResult {
  std::vector<SampleRecord> records;  // ascending sample_id
  JoinSummary summary;
};

namespace detail {

inline std::map<std::string, TokenTrace> index_originals(
    const std::vector<TokenTrace>& traces, const char* which,
    std::vector<TokenTrace>& variants_out) {
  std::map<std::string, TokenTrace> by_id;
  for (const auto& t : traces) {
    if (t.variant != Variant::original()) {
      variants_out.push_back(t);
      continue;
    }
    if (!by_id.emplace(t.sample_id, t).second) {
      throw ValidationError(std::string("duplicate sample_id '") +
                            t.sample_id + "' in " + which + " traces");
    }
  }
  return by_id;
}

}  // namespace detail

// Joins target and reference traces on sample_id. Non-original variants found
// in either input, plus everything in `variants`, are attached to the record
// with the matching sample_id keyed by (model_id, variant).
inline JoinResult join_samples(const std::vector<TokenTrace>& target,
                               const std::vector<TokenTrace>& reference,
                               const std::map<std::string, Label>& labels,
                               const std::vector<TokenTrace>& variants = {}) {
  std::vector<TokenTrace> extra;
  auto tgt = detail::index_originals(target, "target", extra);
  auto ref = detail::index_originals(reference, "reference", extra);
  extra.insert(extra.end(), variants.begin(), variants.end());

  JoinResult result;
  std::map<std::string, std::size_t> slot;
  for (auto& [id, t] : tgt) {
    auto it = ref.find(id);
    if (it == ref.end()) {
      result.summary.unmatched_target.push_back(id);
      continue;
    }
    if (t.token_ids != it->second.token_ids) {
      result.summary.errors.emplace_back(
          id, "token_ids differ between target and reference traces");
      continue;
    }
    SampleRecord rec;
    rec.sample_id = id;
    auto lab = labels.find(id);
    rec.label = lab == labels.end() ? Label::kUnknown : lab->second;
    rec.target = std::move(t);
    rec.reference = std::move(it->second);
    slot.emplace(id, result.records.size());
    result.records.push_back(std::move(rec));
  }
  for (const auto& [id, t] : ref) {
    if (!tgt.count(id)) result.summary.unmatched_reference.push_back(id);
  }

  for (auto& v : extra) {
    auto it = slot.find(v.sample_id);
    if (it == slot.end()) continue;
    auto& rec = result.records[it->second];
    VariantKey key{v.model_id, v.variant};
    if (!rec.variant_traces.emplace(key, std::move(v)).second) {
      throw ValidationError("duplicate " + key.variant.to_string() +
                            " trace for sample '" + rec.sample_id +
                            "' from model '" + key.model_id + "'");
    }
  }
  return result;
}

}  // namespace htmia
