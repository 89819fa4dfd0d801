#pragma once

// Typing rules for expression nodes: forward inference, input validation
// (rejection) and the stub table that stands in for library annotations.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdgtype/tdg.hpp"
#include "tdgtype/types.hpp"

namespace tdgtype {

class StubError : public std::runtime_error {
 public:
  StubError(std::string origin, int line, const std::string& message);
  [[nodiscard]] const std::string& origin() const { return origin_; }
  [[nodiscard]] int line() const { return line_; }

 private:
  std::string origin_;
  int line_;
};

// Qualified callee name -> signatures. Several lines with the same name in one
// source are overloads, tried in order; a later source replaces the entries
// of every name it defines. Entries that are not Callable describe module
// attributes (`math.pi : float`).
class StubTable {
 public:
  // The built-in table (builtins, str/bytes/list/dict/set methods, a few
  // stdlib functions).
  static const StubTable& defaults();

  // Format: `name : Type` per line, `#` comments, blank lines ignored.
  void load_text(std::string_view text, const std::string& origin = "<string>");
  void load_file(const std::string& path);

  [[nodiscard]] const std::vector<PyType>* find(std::string_view name) const;
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] std::vector<std::string> names() const;

 private:
  std::map<std::string, std::vector<PyType>, std::less<>> entries_;
};

// First signature registered under `name`.
std::optional<PyType> lookup_stub(std::string_view name, const StubTable& table);

enum class RuleShape {
  Constant,      // no inputs; the node's constant
  Identity,      // copies its single input
  Distributive,  // applied per combination of single input types
  Aggregate,     // whole input sets; each input validated on its own
  Opaque,        // no information
};

enum class Relation { None, AllEqual, Custom };

struct RuleEntry {
  std::string op;
  RuleShape shape = RuleShape::Opaque;
  std::vector<std::string> valid_specs;  // per input, ValidTypeSpec atoms; empty = any
  Relation relation = Relation::None;
};

const std::vector<RuleEntry>& rule_table();
const RuleEntry* find_rule(std::string_view op);

// Upper bound on enumerated input combinations per node. Past it the forward
// result is blank and no rejection is attempted.
inline constexpr std::size_t kMaxCombinations = 4096;

// Forward conclusion of an Expr node. Inputs are aligned with node.inputs.
// A blank result means "unknown"; an empty non-blank result means the inputs
// contradict the rule.
CandidateSet forward_apply(const TdgNode& node, const std::vector<CandidateSet>& inputs,
                           const StubTable& stubs);

struct RejectResult {
  std::vector<CandidateSet> validated;
  std::vector<std::pair<int, PyType>> removed;  // (input index, type)
};

// Removes every input candidate that takes part in no valid combination.
// Blank inputs and Aux inputs are never touched. With a non-blank `output`,
// a combination only supports its inputs when its image meets the output
// (or says nothing).
RejectResult reject_apply(const TdgNode& node, const std::vector<CandidateSet>& inputs,
                          const StubTable& stubs, const CandidateSet* output = nullptr);

// Whether `method` is a real attribute of the builtin type named `builtin`
// (str, bytes, int, float, bool, list, dict, set, tuple, generator).
bool builtin_has_member(std::string_view builtin, std::string_view method);

// Lower-case builtin name used for method stubs ("list" for List[...]), or
// empty for non-builtin types.
std::string builtin_name(const PyType& t);

}  // namespace tdgtype
