#pragma once

// Prediction metrics and the evaluation report: exact match and match to
// parametric at Top-k, bucketed by slot kind, frequency and user types.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tdgtype/frontend.hpp"
#include "tdgtype/solver.hpp"
#include "tdgtype/types.hpp"

namespace tdgtype {

// Both sides are normalized by parsing (Optional -> Union[.., None], sorted
// Union members, whitespace ignored).
[[nodiscard]] bool exact_match(const PyType& pred, const PyType& truth);
// Equality after erasing every parameter list at every depth.
[[nodiscard]] bool match_to_parametric(const PyType& pred, const PyType& truth);

// "function:kind:name"; returns use the name "return".
std::string record_key(const GroundTruthRecord& r);

// The slot an annotation describes: arguments by name, returns by the return
// slot, locals by variable and line (first occurrence of the variable when no
// line matches). Null when the function or slot does not exist.
[[nodiscard]] const SlotAssignment* find_truth_slot(const Assignments& assignments, const ProgramTdg& program,
                                                    const GroundTruthRecord& truth);

// Slot key -> ranked type strings.
using RankedPredictions = std::map<std::string, std::vector<std::string>>;

// JSON map in the predictions-file format. Throws std::invalid_argument.
RankedPredictions parse_ranked_predictions(std::string_view json_text);
// One JSON object per line: {"function", "kind", "name", "annotation"}.
std::vector<GroundTruthRecord> parse_truths_jsonl(std::string_view text);

struct EvalOptions {
  std::vector<int> ks{1, 3, 5};
  double rare_threshold = 0.001;
  std::set<std::string> user_types;  // names for the user-defined bucket
};

struct MetricCell {
  int total = 0;
  int exact = 0;
  int parametric = 0;

  [[nodiscard]] double exact_rate() const { return total == 0 ? 0.0 : static_cast<double>(exact) / total; }
  [[nodiscard]] double parametric_rate() const {
    return total == 0 ? 0.0 : static_cast<double>(parametric) / total;
  }
};

// Slots present on one side only. Reported, not fatal.
struct KeyMismatch {
  std::vector<std::string> missing_predictions;  // truth without prediction (counted as misses)
  std::vector<std::string> unmatched_predictions;  // prediction without truth (ignored)
  [[nodiscard]] bool empty() const { return missing_predictions.empty() && unmatched_predictions.empty(); }
};

struct Report {
  std::vector<int> ks;
  double rare_threshold = 0.0;
  // Category ("all", "argument", "return", "local", "common", "rare",
  // "user-defined") -> k -> cell.
  std::map<std::string, std::map<int, MetricCell>> cells;
  KeyMismatch mismatch;
  std::vector<std::string> unparsed_truths;  // keys whose annotation did not parse
  std::vector<std::string> duplicate_truths;  // keys annotated more than once; first kept

  [[nodiscard]] const MetricCell* cell(std::string_view category, int k) const;
  [[nodiscard]] std::string to_json() const;  // key-sorted, 2-space indent
  [[nodiscard]] std::string to_text() const;  // aligned table
};

inline const std::vector<std::string>& report_categories() {
  static const std::vector<std::string> c = {"all", "argument", "return", "local", "common", "rare",
                                             "user-defined"};
  return c;
}

Report evaluate(const RankedPredictions& preds, const std::vector<GroundTruthRecord>& truths,
                const EvalOptions& opts = {});

}  // namespace tdgtype
