#pragma once

// Type dependency graphs. One Tdg per function; ProgramTdg concatenates them
// into a single node array and adds the cross-function edges (call returns,
// argument passing, attribute and method lookups).

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tdgtype/frontend.hpp"
#include "tdgtype/types.hpp"

namespace tdgtype {

enum class NodeKind { Symbol, Expr, Branch, Merge };
enum class SymbolRole { Param, Read, Write, Return };
enum class SlotKind { None, Argument, Return, Local };

enum class EdgeKind {
  Flow,         // ordinary dependency
  BranchTrue,   // narrowed by an isinstance guard
  BranchFalse,
  Back,         // loop back edge into a loop-head merge
  CallArg,      // call argument into a callee parameter
  Aux,          // callee return / attribute source; `tag` names the class
};

const char* to_string(NodeKind k);
const char* to_string(EdgeKind k);
const char* to_string(SlotKind k);

struct TdgInput {
  int src = -1;
  EdgeKind kind = EdgeKind::Flow;
  std::string tag;  // class name for Aux edges that depend on the receiver

  friend bool operator==(const TdgInput&, const TdgInput&) = default;
};

// Role of an input of a literal or store node.
enum class InputRole : unsigned char { Plain, Key, Value, Spread, DictSpread };

struct TdgNode {
  std::string id;
  NodeKind kind = NodeKind::Expr;
  int line = 0;
  int col = 0;

  // Symbol nodes
  std::string var;
  int order = -1;
  SymbolRole role = SymbolRole::Read;
  SlotKind slot = SlotKind::None;
  bool output = true;  // false for self/cls parameters and comprehension variables

  // Expr nodes: `op` is the rule id (Add, Call, ListLit, ...).
  std::string op;
  std::string name;                // callee, stub, method or attribute name
  std::vector<std::string> ops;    // Compare operators
  std::vector<InputRole> roles;    // per-input roles for literals
  std::optional<PyType> constant;  // Constant / ClassInstantiation result
  int index = -1;                  // Unpack position
  std::optional<int> subscript;    // constant subscript index (may be negative)
  int count = -1;                  // Unpack target count
  int starred = -1;                // Unpack starred position
  bool has_receiver = false;       // MethodCall: first input is the receiver

  // Branch nodes
  std::vector<PyType> guard;  // isinstance types for the true edge
  std::string guard_var;

  std::vector<TdgInput> inputs;
  CandidateSet cands;
};

// A call to an in-file function or method found while building one Tdg.
struct CallSite {
  int node = -1;
  std::string callee;                // qualified name
  std::vector<int> args;             // positional argument nodes
  std::vector<std::pair<std::string, int>> keywords;
  bool skip_self = false;            // method / __init__: first parameter is self
  bool instantiation = false;        // class instantiation wiring into __init__
};

struct AttributeLoad {
  int node = -1;
  std::string attr;
};

struct MethodCallSite {
  int node = -1;
  std::string method;
  std::vector<int> args;  // positional arguments, receiver excluded
};

struct Tdg {
  std::string function;  // qualified name
  std::string enclosing_class;
  bool is_method = false;
  int line = 0;
  std::vector<TdgNode> nodes;
  std::vector<int> slots;  // Symbol nodes designated as type slots, in source order
  int return_slot = -1;
  std::vector<int> params;  // parameter Symbol nodes in declaration order
  std::vector<std::string> param_names;

  std::vector<CallSite> calls;
  std::vector<AttributeLoad> attribute_loads;
  std::vector<MethodCallSite> method_calls;
  // `self.attr = value` stores in this function: attr -> store nodes.
  std::map<std::string, std::vector<int>> self_attribute_stores;

  [[nodiscard]] std::vector<std::pair<int, int>> edges() const;
  [[nodiscard]] int find(std::string_view id) const;
};

Tdg build_tdg(const py::FunctionDef& func, const UserTypeSet& user_types,
              const ModuleAst* module = nullptr);

struct CallLink {
  int call_node = -1;    // global index
  int callee_return = -1;
  std::vector<std::pair<int, int>> arg_to_param;  // (arg node, param node)
};

struct DeferredCall {
  std::string caller;
  std::string callee;
  int call_node = -1;
};

struct ProgramTdg {
  std::string source_path;
  std::vector<Tdg> tdgs;        // local node indices
  std::vector<int> offsets;     // global index of each Tdg's first node
  std::vector<TdgNode> nodes;   // all nodes, global indices
  std::vector<CallLink> call_links;
  std::vector<DeferredCall> deferred;

  [[nodiscard]] int tdg_of(int global_node) const;
  [[nodiscard]] int global(int tdg, int local) const { return offsets[tdg] + local; }
  [[nodiscard]] const Tdg* find_tdg(std::string_view function) const;
  // Copy of a Tdg with the current candidate sets of the program.
  [[nodiscard]] Tdg snapshot(int tdg) const;
};

ProgramTdg link_functions(std::vector<Tdg> tdgs, const ModuleAst& module);

// Parses, collects user types, builds and links every function in a file.
ProgramTdg build_program(const ModuleAst& module, const UserTypeSet& user_types);

std::string export_dot(const Tdg& tdg);

}  // namespace tdgtype
