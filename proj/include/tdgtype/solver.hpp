#pragma once

// Fixpoint solver over a linked ProgramTdg: forward inference, backward
// rejection, hot-slot selection and recommendation rounds.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdgtype/recommend.hpp"
#include "tdgtype/rules.hpp"
#include "tdgtype/tdg.hpp"

namespace tdgtype {

struct InferenceConfig {
  int max_outer_iterations = 3;
  int top_k = 1;
  int depth_cap = kDefaultDepthCap;
  bool deterministic = true;
  double penalty = kDefaultPenalty;
};

class IterationOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SlotStatus { Static, Validated, Blank };
const char* to_string(SlotStatus s);

// A candidate removed from a recommended slot.
struct Rejection {
  std::string function;
  std::string slot;    // node id of the slot
  std::string key;     // argument name, "return" or "name$order"
  std::string type;    // rendered rejected type
  std::string origin;  // node id of the expression whose rule failed
  bool emptied = false;

  friend bool operator==(const Rejection&, const Rejection&) = default;
};

struct SlotAssignment {
  int node = -1;  // global index
  std::string key;
  SlotKind kind = SlotKind::None;
  std::optional<std::string> type;
  SlotStatus status = SlotStatus::Blank;
};

struct FunctionAssignments {
  std::string function;
  std::vector<SlotAssignment> slots;  // source order

  [[nodiscard]] const SlotAssignment* find(std::string_view key) const;
};

struct Assignments {
  std::vector<FunctionAssignments> functions;
  std::vector<Rejection> rejections;

  [[nodiscard]] const FunctionAssignments* find(std::string_view function) const;
};

// Blank-slot dependency graph; node ids are positions in source order.
struct SlotGraph {
  int size = 0;
  std::vector<std::vector<int>> succ;
};

// Immediate dominators from `root` (semi-NCA). Unreachable nodes get -1;
// the root is its own idom.
std::vector<int> semi_nca_idom(const std::vector<std::vector<int>>& succ, int root);

// Repeatedly drops every node dominated by another node (virtual super-root
// over the entry of each source component) until none is dominated. Returns
// the survivors in increasing order.
std::vector<int> undominated_nodes(const SlotGraph& g);

struct ReplayViolation {
  std::string function;
  std::string node;
  std::string message;
};

class Solver {
 public:
  Solver(ProgramTdg& program, const StubTable& stubs, InferenceConfig cfg = {});

  bool forward_pass();
  bool backward_pass();
  // Alternates both passes until neither changes anything. Returns the
  // number of passes that changed something.
  int run_fixpoint();

  // Global indices of the hot slots, in source order.
  [[nodiscard]] std::vector<int> find_hot_slots() const;
  [[nodiscard]] std::vector<int> blank_slots() const;

  // Installs a recommended set on a blank slot. Types rejected there before
  // are dropped; returns false when nothing is left to install.
  bool install(int node, const std::vector<PyType>& types);

  [[nodiscard]] Assignments assignments() const;
  [[nodiscard]] const std::vector<Rejection>& rejections() const { return rejections_; }
  [[nodiscard]] const ProgramTdg& program() const { return program_; }
  [[nodiscard]] const std::set<PyType>& banned(int node) const;
  [[nodiscard]] bool tainted(int node) const;

  // Rule premises checked on the final candidate sets.
  [[nodiscard]] std::vector<ReplayViolation> replay_check() const;

  [[nodiscard]] SlotQuery query_for(int slot) const;
  [[nodiscard]] std::string slot_key(int slot) const;

 private:
  struct Use {
    int node;
    int input;
  };

  [[nodiscard]] CandidateSet edge_value(const TdgInput& in) const;
  [[nodiscard]] CandidateSet compute(int n) const;
  void build_order();
  void refresh_taint();
  void remove(int n, const PyType& t, const std::string& origin, std::vector<int>& queue);
  void reset_emptied();

  ProgramTdg& program_;
  const StubTable& stubs_;
  InferenceConfig cfg_;
  std::vector<std::vector<int>> sccs_;  // topological order
  std::vector<int> scc_of_;
  std::vector<std::vector<Use>> uses_;
  std::vector<std::set<PyType>> banned_;
  std::vector<bool> recommended_;
  std::vector<bool> tainted_;
  std::vector<char> dead_;  // cycle members known to stay blank
  std::vector<Rejection> rejections_;
  std::size_t sweeps_ = 0;
};

struct InferenceResult {
  Assignments assignments;
  int outer_iterations = 0;
  std::vector<std::string> hot_slots;  // slot keys asked in any round
};

// Static solving plus recommendation rounds until no blank slot remains or
// the iteration limit is hit.
InferenceResult infer(ProgramTdg& program, Recommender& recommender, const UserTypeSet& user_types,
                      const StubTable& stubs, const InferenceConfig& cfg = {},
                      const EmbeddingProvider* emb = nullptr);

}  // namespace tdgtype
