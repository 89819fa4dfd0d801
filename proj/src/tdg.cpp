#include "tdgtype/tdg.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace tdgtype {

using namespace py;

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Symbol: return "Symbol";
    case NodeKind::Expr: return "Expr";
    case NodeKind::Branch: return "Branch";
    case NodeKind::Merge: return "Merge";
  }
  return "?";
}

const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Flow: return "flow";
    case EdgeKind::BranchTrue: return "true";
    case EdgeKind::BranchFalse: return "false";
    case EdgeKind::Back: return "back";
    case EdgeKind::CallArg: return "arg";
    case EdgeKind::Aux: return "aux";
  }
  return "?";
}

const char* to_string(SlotKind k) {
  switch (k) {
    case SlotKind::None: return "none";
    case SlotKind::Argument: return "argument";
    case SlotKind::Return: return "return";
    case SlotKind::Local: return "local";
  }
  return "?";
}

std::vector<std::pair<int, int>> Tdg::edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (const auto& in : nodes[i].inputs) out.emplace_back(in.src, static_cast<int>(i));
  }
  return out;
}

int Tdg::find(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

namespace {

const std::set<std::string, std::less<>> kMutators = {"append", "extend", "insert", "add",
                                                      "update"};

std::optional<PyType> builtin_type_named(std::string_view name) {
  if (is_elementary_name(name)) return PyType::elementary(name);
  if (name == "list") return PyType::bare("List");
  if (name == "dict") return PyType::bare("Dict");
  if (name == "tuple") return PyType::bare("Tuple");
  if (name == "set" || name == "frozenset") return PyType::bare("Set");
  if (name == "type") return PyType::type_type();
  return std::nullopt;
}

struct Def {
  int node = -1;
  EdgeKind kind = EdgeKind::Flow;
  friend bool operator==(const Def&, const Def&) = default;
};

using Env = std::map<std::string, Def>;

struct Guard {
  std::string var;
  std::vector<PyType> types;
  bool negated = false;
};

class Builder {
 public:
  Builder(const FunctionDef& fn, const UserTypeSet& users, const ModuleAst* module)
      : fn_(fn), users_(users), module_(module) {
    tdg_.function = fn.qualified_name;
    tdg_.enclosing_class = fn.enclosing_class;
    tdg_.is_method = fn.is_method;
    tdg_.line = fn.span.line;
    if (module_) {
      for (const auto& imp : module_->imports) {
        if (imp.names.empty()) {
          const std::string key = imp.alias.value_or(imp.module.substr(0, imp.module.find('.')));
          module_names_[key] = imp.alias ? imp.module : key;
        } else {
          for (std::size_t i = 0; i < imp.names.size(); ++i) {
            const std::string key = imp.member_aliases[i].value_or(imp.names[i]);
            from_imports_[key] = imp.module.empty() ? imp.names[i] : imp.module + "." + imp.names[i];
          }
        }
      }
    }
    for (const auto& [alias, mod] : users_.module_aliases) module_names_[alias] = mod;
  }

  Tdg run() {
    collect_variables();
    params();
    block(fn_.body);
    finish_return();
    return std::move(tdg_);
  }

 private:
  // --- variable discovery ---------------------------------------------

  void note_store_names(const Expr& e, std::set<std::string>& out) {
    switch (e.kind) {
      case ExprKind::Name: out.insert(e.id); break;
      case ExprKind::Tuple:
      case ExprKind::List:
      case ExprKind::Starred:
        for (const auto& i : e.items) {
          if (i) note_store_names(*i, out);
        }
        break;
      default: break;
    }
  }

  // Walrus targets inside expressions (comprehension and lambda bodies excluded).
  void note_expr_writes(const Expr& e, std::set<std::string>& out) {
    if (e.kind == ExprKind::Lambda) return;
    if (e.kind == ExprKind::NamedExpr) note_store_names(*e.items[0], out);
    for (const auto& i : e.items) {
      if (i) note_expr_writes(*i, out);
    }
    for (const auto& k : e.keywords) {
      if (k.value) note_expr_writes(*k.value, out);
    }
  }

  bool is_mutator_stmt(const Stmt& s, std::string* receiver = nullptr) const {
    if (s.kind != StmtKind::ExprStmt || s.value->kind != ExprKind::Call) return false;
    const Expr& callee = *s.value->items[0];
    if (callee.kind != ExprKind::Attribute || !kMutators.count(callee.id)) return false;
    const Expr& recv = *callee.items[0];
    if (recv.kind != ExprKind::Name) return false;
    if (receiver) *receiver = recv.id;
    return true;
  }

  void scan_writes(const Block& body, std::set<std::string>& out) {
    for (const auto& sp : body) {
      const Stmt& s = *sp;
      switch (s.kind) {
        case StmtKind::FunctionDef: out.insert(s.function->name); continue;
        case StmtKind::ClassDef: out.insert(s.klass->name); continue;
        case StmtKind::Assign:
        case StmtKind::AugAssign:
          for (const auto& t : s.targets) {
            note_store_names(*t, out);
            if (t->kind == ExprKind::Subscript && t->items[0]->kind == ExprKind::Name) {
              out.insert(t->items[0]->id);
            }
          }
          break;
        case StmtKind::AnnAssign:
          if (s.value) note_store_names(*s.targets[0], out);
          break;
        case StmtKind::For: note_store_names(*s.targets[0], out); break;
        case StmtKind::With:
          for (const auto& item : s.items) {
            if (item.target) note_store_names(*item.target, out);
          }
          break;
        case StmtKind::Try:
          for (const auto& h : s.handlers) {
            if (h.name) out.insert(*h.name);
          }
          break;
        case StmtKind::ExprStmt: {
          std::string recv;
          if (is_mutator_stmt(s, &recv)) out.insert(recv);
          break;
        }
        default: break;
      }
      if (s.value) note_expr_writes(*s.value, out);
      scan_writes(s.body, out);
      scan_writes(s.orelse, out);
      scan_writes(s.finalbody, out);
      for (const auto& h : s.handlers) scan_writes(h.body, out);
    }
  }

  void scan_declarations(const Block& body) {
    for (const auto& s : body) {
      if (s->kind == StmtKind::Global || s->kind == StmtKind::Nonlocal) {
        for (const auto& n : s->names) declared_outer_.insert(n.name);
      }
      if (s->kind == StmtKind::Import || s->kind == StmtKind::ImportFrom) {
        for (const auto& n : s->names) {
          std::string key = n.alias.value_or(n.name.substr(0, n.name.find('.')));
          if (s->kind == StmtKind::Import) {
            module_names_[key] = n.alias ? n.name : key;
          } else {
            from_imports_[key] = s->module.empty() ? n.name : s->module + "." + n.name;
          }
          imported_locals_.insert(key);
        }
      }
      if (s->kind == StmtKind::FunctionDef || s->kind == StmtKind::ClassDef) continue;
      scan_declarations(s->body);
      scan_declarations(s->orelse);
      scan_declarations(s->finalbody);
      for (const auto& h : s->handlers) scan_declarations(h.body);
    }
  }

  void collect_variables() {
    scan_declarations(fn_.body);
    std::set<std::string> written;
    scan_writes(fn_.body, written);
    for (const auto& a : fn_.args.args) {
      vars_.insert(a.name);
      param_vars_.insert(a.name);
    }
    for (const auto& w : written) {
      if (declared_outer_.count(w) || imported_locals_.count(w)) continue;
      vars_.insert(w);
    }
    for (const auto& s : fn_.body) collect_nested(*s);
  }

  void collect_nested(const Stmt& s) {
    if (s.kind == StmtKind::FunctionDef) {
      nested_defs_[s.function->name] = s.function->qualified_name;
      return;
    }
    if (s.kind == StmtKind::ClassDef) return;
    for (const auto* b : {&s.body, &s.orelse, &s.finalbody}) {
      for (const auto& c : *b) collect_nested(*c);
    }
    for (const auto& h : s.handlers) {
      for (const auto& c : h.body) collect_nested(*c);
    }
  }

  bool is_var(const std::string& name) const {
    return comp_vars_.count(name) > 0 || vars_.count(name) > 0;
  }

  // --- node construction ------------------------------------------------

  std::string unique_id(std::string id) {
    auto& n = id_counts_[id];
    ++n;
    if (n == 1) return id;
    return id + "#" + std::to_string(n);
  }

  int add(TdgNode n) {
    n.id = unique_id(n.id);
    tdg_.nodes.push_back(std::move(n));
    return static_cast<int>(tdg_.nodes.size()) - 1;
  }

  int expr(std::string op, const Span& sp, std::vector<int> inputs = {}) {
    TdgNode n;
    n.kind = NodeKind::Expr;
    n.op = std::move(op);
    n.line = sp.line;
    n.col = sp.col;
    n.id = n.op + "@" + std::to_string(sp.line) + ":" + std::to_string(sp.col);
    for (int i : inputs) n.inputs.push_back({i, EdgeKind::Flow, ""});
    return add(std::move(n));
  }

  int constant(const PyType& t, const Span& sp, std::string op = "Constant") {
    int id = expr(std::move(op), sp);
    tdg_.nodes[id].constant = t;
    return id;
  }

  int opaque(const Span& sp, std::vector<int> inputs = {}) {
    return expr("Opaque", sp, std::move(inputs));
  }

  int symbol(const std::string& name, SymbolRole role, const Span& sp) {
    TdgNode n;
    n.kind = NodeKind::Symbol;
    n.var = name;
    n.order = next_order_[name]++;
    n.role = role;
    n.line = sp.line;
    n.col = sp.col;
    n.id = name + std::to_string(n.order) + "(" + std::to_string(sp.line) + ")";
    const bool comp = comp_vars_.count(name) > 0;
    if (comp) {
      n.output = false;
    } else if (!param_vars_.count(name)) {
      n.slot = SlotKind::Local;
    }
    int id = add(std::move(n));
    if (tdg_.nodes[id].slot != SlotKind::None) tdg_.slots.push_back(id);
    return id;
  }

  int read(const std::string& name, const Span& sp) {
    int s = symbol(name, SymbolRole::Read, sp);
    if (auto it = env_.find(name); it != env_.end()) {
      tdg_.nodes[s].inputs.push_back({it->second.node, it->second.kind, ""});
    }
    env_[name] = {s, EdgeKind::Flow};
    return s;
  }

  int write(const std::string& name, int src, const Span& sp) {
    int s = symbol(name, SymbolRole::Write, sp);
    if (src >= 0) tdg_.nodes[s].inputs.push_back({src, EdgeKind::Flow, ""});
    env_[name] = {s, EdgeKind::Flow};
    return s;
  }

  // --- parameters and return slot ---------------------------------------

  static bool is_constant_default(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Constant:
        return e.const_kind != ConstKind::None && e.const_kind != ConstKind::Ellipsis &&
               e.const_kind != ConstKind::Complex;
      case ExprKind::JoinedStr: return true;
      case ExprKind::UnaryOp: return is_constant_default(*e.items[0]);
      case ExprKind::List:
      case ExprKind::Tuple:
      case ExprKind::Set:
      case ExprKind::Dict:
        return std::all_of(e.items.begin(), e.items.end(),
                           [](const ExprPtr& i) { return i && is_constant_default(*i); });
      default: return false;
    }
  }

  bool has_decorator(std::string_view name) const {
    return std::any_of(fn_.decorators.begin(), fn_.decorators.end(), [&](const ExprPtr& d) {
      return d->kind == ExprKind::Name && d->id == name;
    });
  }

  void params() {
    const bool is_static = has_decorator("staticmethod");
    const bool is_class = has_decorator("classmethod");
    const auto& args = fn_.args.args;
    for (std::size_t i = 0; i < args.size(); ++i) {
      const Arg& a = args[i];
      Span sp = a.span;
      sp.line = fn_.span.line;
      int p = symbol(a.name, SymbolRole::Param, sp);
      TdgNode& node = tdg_.nodes[p];
      node.slot = SlotKind::Argument;
      if (fn_.is_method && !is_static && i == 0) {
        node.output = false;
        if (is_class) {
          node.constant = PyType::type_type();
        } else {
          node.constant = PyType::user(fn_.enclosing_class, users_.overloads(fn_.enclosing_class));
          self_name_ = a.name;
        }
      }
      tdg_.slots.push_back(p);
      tdg_.params.push_back(p);
      tdg_.param_names.push_back(a.name);
      if (a.default_value && is_constant_default(*a.default_value)) {
        int d = eval(*a.default_value);
        tdg_.nodes[p].inputs.push_back({d, EdgeKind::Flow, ""});
      }
      env_[a.name] = {p, EdgeKind::Flow};
    }
    TdgNode r;
    r.kind = NodeKind::Symbol;
    r.var = "return";
    r.role = SymbolRole::Return;
    r.slot = SlotKind::Return;
    r.line = fn_.span.line;
    r.id = "return";
    tdg_.return_slot = add(std::move(r));
  }

  void finish_return() {
    TdgNode& r = tdg_.nodes[tdg_.return_slot];
    if (is_generator_) {
      Span sp = fn_.span;
      TdgNode g;
      g.kind = NodeKind::Expr;
      g.op = "GeneratorReturn";
      g.line = sp.line;
      g.col = sp.col;
      g.id = "GeneratorReturn@" + std::to_string(sp.line);
      for (const auto& [node, spread] : yields_) {
        g.inputs.push_back({node, EdgeKind::Flow, ""});
        g.roles.push_back(spread ? InputRole::Spread : InputRole::Plain);
      }
      int gid = add(std::move(g));
      tdg_.nodes[tdg_.return_slot].inputs.push_back({gid, EdgeKind::Flow, ""});
    } else {
      for (int v : return_values_) r.inputs.push_back({v, EdgeKind::Flow, ""});
      if (live_ || return_values_.empty()) r.constant = PyType::none();
    }
    // Return slot sits after the parameters in source order.
    tdg_.slots.insert(tdg_.slots.begin() + static_cast<long>(tdg_.params.size()), tdg_.return_slot);
  }

  // --- expressions -------------------------------------------------------

  std::optional<std::string> module_of(const Expr& e) const {
    if (e.kind == ExprKind::Name && !is_var(e.id)) {
      if (auto it = module_names_.find(e.id); it != module_names_.end()) return it->second;
    }
    if (e.kind == ExprKind::Attribute) {
      if (auto base = module_of(*e.items[0])) return *base + "." + e.id;
    }
    return std::nullopt;
  }

  // Alias-qualified name (`alias.Class`) used as a user-type key.
  std::optional<std::string> alias_path(const Expr& e) const {
    if (e.kind == ExprKind::Name && !is_var(e.id) && module_names_.count(e.id)) return e.id;
    if (e.kind == ExprKind::Attribute) {
      if (auto base = alias_path(*e.items[0])) return *base + "." + e.id;
    }
    return std::nullopt;
  }

  std::optional<std::string> in_file_function(const std::string& name) const {
    if (!module_) return std::nullopt;
    if (auto it = nested_defs_.find(name); it != nested_defs_.end()) return it->second;
    std::string scope = fn_.qualified_name;
    while (true) {
      const auto dot = scope.rfind('.');
      if (dot == std::string::npos) break;
      scope = scope.substr(0, dot);
      if (module_->find_class(scope)) continue;
      if (module_->find_function(scope + "." + name)) return scope + "." + name;
    }
    if (module_->find_function(name)) return name;
    return std::nullopt;
  }

  PyType user_type(const std::string& name) const {
    return PyType::user(name, users_.overloads(name));
  }

  int eval_name(const Expr& e) {
    if (is_var(e.id)) return read(e.id, e.span);
    if (builtin_type_named(e.id) || users_.contains(e.id)) {
      return constant(PyType::type_type(), e.span, "TypeRef");
    }
    if (in_file_function(e.id)) return constant(PyType::bare("Callable"), e.span, "FunctionRef");
    int g = opaque(e.span);
    tdg_.nodes[g].name = e.id;
    return g;
  }

  int eval_constant(const Expr& e) {
    switch (e.const_kind) {
      case ConstKind::Int: return constant(PyType::int_(), e.span);
      case ConstKind::Float: return constant(PyType::float_(), e.span);
      case ConstKind::Str: return constant(PyType::str_(), e.span);
      case ConstKind::Bytes: return constant(PyType::bytes_(), e.span);
      case ConstKind::Bool: return constant(PyType::bool_(), e.span);
      case ConstKind::None: return constant(PyType::none(), e.span);
      default: return opaque(e.span);
    }
  }

  int eval_literal(const Expr& e, const char* op) {
    std::vector<int> ins;
    std::vector<InputRole> roles;
    if (e.kind == ExprKind::Dict) {
      for (std::size_t i = 0; i + 1 < e.items.size(); i += 2) {
        if (!e.items[i]) {
          ins.push_back(eval(*e.items[i + 1]));
          roles.push_back(InputRole::DictSpread);
          continue;
        }
        ins.push_back(eval(*e.items[i]));
        roles.push_back(InputRole::Key);
        ins.push_back(eval(*e.items[i + 1]));
        roles.push_back(InputRole::Value);
      }
    } else {
      for (const auto& item : e.items) {
        if (item->kind == ExprKind::Starred) {
          ins.push_back(eval(*item->items[0]));
          roles.push_back(InputRole::Spread);
        } else {
          ins.push_back(eval(*item));
          roles.push_back(InputRole::Plain);
        }
      }
    }
    int n = expr(op, e.span, ins);
    tdg_.nodes[n].roles = std::move(roles);
    return n;
  }

  int eval_comprehension(const Expr& e, const char* op) {
    std::vector<std::pair<std::string, std::optional<Def>>> saved;
    std::set<std::string> names;
    for (const auto& gen : e.generators) {
      int it = eval(*gen.iter);
      int iter = expr("Iter", gen.iter->span, {it});
      std::set<std::string> targets;
      note_store_names(*gen.target, targets);
      for (const auto& t : targets) {
        if (names.insert(t).second) {
          auto found = env_.find(t);
          saved.emplace_back(t, found == env_.end() ? std::nullopt : std::optional<Def>(found->second));
          ++comp_vars_[t];
        }
      }
      assign(*gen.target, iter);
      for (const auto& cond : gen.ifs) eval(*cond);
    }
    std::vector<int> ins;
    for (const auto& item : e.items) ins.push_back(eval(*item));
    int n = expr(op, e.span, ins);
    for (const auto& [name, def] : saved) {
      if (--comp_vars_[name] == 0) comp_vars_.erase(name);
      if (def) {
        env_[name] = *def;
      } else {
        env_.erase(name);
      }
    }
    return n;
  }

  std::vector<int> eval_args(const Expr& call, std::size_t first,
                             std::vector<std::pair<std::string, int>>* keywords = nullptr) {
    std::vector<int> out;
    for (std::size_t i = first; i < call.items.size(); ++i) {
      const Expr& a = *call.items[i];
      if (a.kind == ExprKind::Starred) {
        opaque(a.span, {eval(*a.items[0])});
        continue;
      }
      out.push_back(eval(a));
    }
    for (const auto& k : call.keywords) {
      int v = eval(*k.value);
      if (keywords && k.arg) keywords->emplace_back(*k.arg, v);
    }
    return out;
  }

  int eval_call(const Expr& e, bool as_statement) {
    const Expr& callee = *e.items[0];
    if (callee.kind == ExprKind::Name && !is_var(callee.id)) {
      const std::string& name = callee.id;
      if (users_.contains(name) && !in_file_function(name)) {
        CallSite cs;
        auto args = eval_args(e, 1, &cs.keywords);
        int n = constant(user_type(name), e.span, "ClassInstantiation");
        tdg_.nodes[n].name = name;
        if (module_ && module_->find_function(name + ".__init__")) {
          cs.node = n;
          cs.callee = name + ".__init__";
          cs.args = std::move(args);
          cs.skip_self = true;
          cs.instantiation = true;
          tdg_.calls.push_back(std::move(cs));
        }
        return n;
      }
      if (auto q = in_file_function(name)) return linked_call(e, *q, 1);
      auto args = eval_args(e, 1);
      int n = expr("StubCall", e.span, args);
      auto it = from_imports_.find(name);
      tdg_.nodes[n].name = it != from_imports_.end() ? it->second : name;
      return n;
    }
    if (callee.kind == ExprKind::Name && nested_defs_.count(callee.id) &&
        !assigned_elsewhere(callee.id)) {
      read(callee.id, callee.span);
      return linked_call(e, nested_defs_.at(callee.id), 1);
    }
    if (callee.kind == ExprKind::Attribute) {
      const Expr& recv = *callee.items[0];
      if (auto path = alias_path(callee); path && users_.contains(*path)) {
        eval_args(e, 1);
        int n = constant(user_type(*path), e.span, "ClassInstantiation");
        tdg_.nodes[n].name = *path;
        return n;
      }
      if (auto mod = module_of(recv)) {
        auto args = eval_args(e, 1);
        int n = expr("StubCall", e.span, args);
        tdg_.nodes[n].name = *mod + "." + callee.id;
        return n;
      }
      if (as_statement && kMutators.count(callee.id) && recv.kind == ExprKind::Name &&
          is_var(recv.id)) {
        int r = read(recv.id, recv.span);
        auto args = eval_args(e, 1);
        std::vector<int> ins{r};
        ins.insert(ins.end(), args.begin(), args.end());
        static const std::map<std::string, std::string, std::less<>> kOps = {
            {"append", "Append"}, {"extend", "Extend"}, {"insert", "Insert"},
            {"add", "SetAdd"},    {"update", "Update"}};
        int n = expr(kOps.at(callee.id), e.span, ins);
        env_[recv.id] = {n, EdgeKind::Flow};
        return n;
      }
      int r = eval(recv);
      MethodCallSite mc;
      mc.method = callee.id;
      std::vector<std::pair<std::string, int>> keywords;
      mc.args = eval_args(e, 1, &keywords);
      std::vector<int> ins{r};
      ins.insert(ins.end(), mc.args.begin(), mc.args.end());
      int n = expr("MethodCall", e.span, ins);
      tdg_.nodes[n].name = callee.id;
      tdg_.nodes[n].has_receiver = true;
      mc.node = n;
      if (recv.kind == ExprKind::Name && !self_name_.empty() && recv.id == self_name_ && module_ &&
          module_->find_function(fn_.enclosing_class + "." + callee.id)) {
        CallSite cs;
        cs.node = n;
        cs.callee = fn_.enclosing_class + "." + callee.id;
        cs.args = mc.args;
        cs.keywords = std::move(keywords);
        cs.skip_self = true;
        cs.instantiation = true;  // arguments only; the return comes through the method edge
        tdg_.calls.push_back(std::move(cs));
      }
      tdg_.method_calls.push_back(std::move(mc));
      return n;
    }
    int c = eval(callee);
    auto args = eval_args(e, 1);
    std::vector<int> ins{c};
    ins.insert(ins.end(), args.begin(), args.end());
    return expr("CallValue", e.span, ins);
  }

  bool assigned_elsewhere(const std::string& name) const {
    // A nested def name rebound by plain assignment is no longer a static callee.
    std::set<std::string> written;
    std::function<void(const Block&)> scan = [&](const Block& b) {
      for (const auto& s : b) {
        if (s->kind == StmtKind::Assign || s->kind == StmtKind::AugAssign) {
          for (const auto& t : s->targets) {
            if (t->kind == ExprKind::Name) written.insert(t->id);
          }
        }
        if (s->kind == StmtKind::FunctionDef || s->kind == StmtKind::ClassDef) continue;
        scan(s->body);
        scan(s->orelse);
        scan(s->finalbody);
      }
    };
    scan(fn_.body);
    return written.count(name) > 0;
  }

  int linked_call(const Expr& e, const std::string& qname, std::size_t first) {
    CallSite cs;
    cs.args = eval_args(e, first, &cs.keywords);
    int n = expr("Call", e.span);
    tdg_.nodes[n].name = qname;
    cs.node = n;
    cs.callee = qname;
    tdg_.calls.push_back(std::move(cs));
    return n;
  }

  std::optional<long> constant_index(const Expr& e) const {
    if (e.kind == ExprKind::Constant && e.const_kind == ConstKind::Int) {
      try {
        return std::stol(e.literal, nullptr, 0);
      } catch (...) {
        return std::nullopt;
      }
    }
    if (e.kind == ExprKind::UnaryOp && e.id == "USub") {
      if (auto v = constant_index(*e.items[0])) return -*v;
    }
    return std::nullopt;
  }

  int eval(const Expr& e, bool as_statement = false) {
    switch (e.kind) {
      case ExprKind::Name: return eval_name(e);
      case ExprKind::Constant: return eval_constant(e);
      case ExprKind::JoinedStr: return constant(PyType::str_(), e.span);
      case ExprKind::BoolOp: {
        std::vector<int> ins;
        for (const auto& i : e.items) ins.push_back(eval(*i));
        return expr("BoolOp", e.span, ins);
      }
      case ExprKind::UnaryOp: return expr(e.id, e.span, {eval(*e.items[0])});
      case ExprKind::BinOp: {
        int l = eval(*e.items[0]);
        int r = eval(*e.items[1]);
        return expr(e.id, e.span, {l, r});
      }
      case ExprKind::Compare: {
        std::vector<int> ins;
        for (const auto& i : e.items) ins.push_back(eval(*i));
        int n = expr("Compare", e.span, ins);
        tdg_.nodes[n].ops = e.ops;
        return n;
      }
      case ExprKind::Lambda: return constant(PyType::bare("Callable"), e.span, "Lambda");
      case ExprKind::IfExp: {
        eval(*e.items[1]);
        int b = eval(*e.items[0]);
        int o = eval(*e.items[2]);
        return expr("IfExp", e.span, {b, o});
      }
      case ExprKind::Dict: return eval_literal(e, "DictLit");
      case ExprKind::Set: return eval_literal(e, "SetLit");
      case ExprKind::List: return eval_literal(e, "ListLit");
      case ExprKind::Tuple: return eval_literal(e, "TupleLit");
      case ExprKind::ListComp: return eval_comprehension(e, "ListComp");
      case ExprKind::SetComp: return eval_comprehension(e, "SetComp");
      case ExprKind::DictComp: return eval_comprehension(e, "DictComp");
      case ExprKind::GeneratorExp: return eval_comprehension(e, "GeneratorExp");
      case ExprKind::Await: return expr("Await", e.span, {eval(*e.items[0])});
      case ExprKind::Yield: {
        int v = e.items[0] ? eval(*e.items[0]) : constant(PyType::none(), e.span);
        is_generator_ = true;
        yields_.emplace_back(v, false);
        return opaque(e.span, {v});
      }
      case ExprKind::YieldFrom: {
        int v = eval(*e.items[0]);
        is_generator_ = true;
        yields_.emplace_back(v, true);
        return opaque(e.span, {v});
      }
      case ExprKind::Call: return eval_call(e, as_statement);
      case ExprKind::Attribute: {
        if (auto path = alias_path(e); path && users_.contains(*path)) {
          return constant(PyType::type_type(), e.span, "TypeRef");
        }
        if (auto mod = module_of(*e.items[0])) {
          int n = expr("ModuleAttr", e.span);
          tdg_.nodes[n].name = *mod + "." + e.id;
          return n;
        }
        int r = eval(*e.items[0]);
        int n = expr("Attribute", e.span, {r});
        tdg_.nodes[n].name = e.id;
        tdg_.attribute_loads.push_back({n, e.id});
        return n;
      }
      case ExprKind::Subscript: {
        int v = eval(*e.items[0]);
        const Expr& index = *e.items[1];
        if (index.kind == ExprKind::Slice) {
          std::vector<int> ins{v};
          for (const auto& b : index.items) {
            if (b) ins.push_back(eval(*b));
          }
          return expr("Slice", e.span, ins);
        }
        int i = eval(index);
        int n = expr("Subscript", e.span, {v, i});
        if (auto c = constant_index(index)) tdg_.nodes[n].subscript = static_cast<int>(*c);
        return n;
      }
      case ExprKind::Starred: return opaque(e.span, {eval(*e.items[0])});
      case ExprKind::NamedExpr: {
        int v = eval(*e.items[1]);
        assign(*e.items[0], v);
        return env_.count(e.items[0]->id) ? env_[e.items[0]->id].node : v;
      }
      case ExprKind::Slice: {
        std::vector<int> ins;
        for (const auto& b : e.items) {
          if (b) ins.push_back(eval(*b));
        }
        return opaque(e.span, ins);
      }
    }
    return opaque(e.span);
  }

  // --- stores --------------------------------------------------------------

  void assign(const Expr& target, int src) {
    switch (target.kind) {
      case ExprKind::Name:
        if (is_var(target.id)) {
          write(target.id, src, target.span);
        }
        return;
      case ExprKind::Tuple:
      case ExprKind::List: {
        const int n = static_cast<int>(target.items.size());
        int star = -1;
        for (int k = 0; k < n; ++k) {
          if (target.items[static_cast<std::size_t>(k)]->kind == ExprKind::Starred) star = k;
        }
        for (int k = 0; k < n; ++k) {
          const Expr& t = *target.items[static_cast<std::size_t>(k)];
          int u = expr("Unpack", t.span, {src});
          tdg_.nodes[u].index = k;
          tdg_.nodes[u].count = n;
          tdg_.nodes[u].starred = star;
          assign(t.kind == ExprKind::Starred ? *t.items[0] : t, u);
        }
        return;
      }
      case ExprKind::Starred: assign(*target.items[0], src); return;
      case ExprKind::Attribute: {
        const Expr& recv = *target.items[0];
        eval(recv);
        int n = expr("AttrStore", target.span, {src});
        tdg_.nodes[n].name = target.id;
        if (recv.kind == ExprKind::Name && !self_name_.empty() && recv.id == self_name_) {
          tdg_.self_attribute_stores[target.id].push_back(n);
        }
        return;
      }
      case ExprKind::Subscript: {
        const Expr& recv = *target.items[0];
        const Expr& index = *target.items[1];
        int r = eval(recv);
        if (index.kind == ExprKind::Slice) {
          std::vector<int> ins{r, src};
          for (const auto& b : index.items) {
            if (b) ins.push_back(eval(*b));
          }
          opaque(target.span, ins);
          return;
        }
        int k = eval(index);
        int n = expr("SubscriptStore", target.span, {r, k, src});
        if (recv.kind == ExprKind::Name && is_var(recv.id)) env_[recv.id] = {n, EdgeKind::Flow};
        return;
      }
      default: opaque(target.span, {src}); return;
    }
  }

  // --- control flow --------------------------------------------------------

  struct Flow {
    Env env;
    bool live = true;
  };

  int merge_node(const std::string& var, int line) {
    TdgNode m;
    m.kind = NodeKind::Merge;
    m.var = var;
    m.line = line;
    m.id = "merge." + var + "@" + std::to_string(line);
    return add(std::move(m));
  }

  void join(const std::vector<Flow>& flows, int line) {
    std::vector<const Flow*> live;
    for (const auto& f : flows) {
      if (f.live) live.push_back(&f);
    }
    if (live.empty()) {
      env_ = flows.empty() ? env_ : flows.front().env;
      live_ = false;
      return;
    }
    live_ = true;
    std::set<std::string> names;
    for (const auto* f : live) {
      for (const auto& [k, v] : f->env) names.insert(k);
    }
    Env out;
    for (const auto& name : names) {
      std::vector<Def> defs;
      bool missing = false;
      for (const auto* f : live) {
        auto it = f->env.find(name);
        if (it == f->env.end()) {
          missing = true;
          continue;
        }
        if (std::find(defs.begin(), defs.end(), it->second) == defs.end()) defs.push_back(it->second);
      }
      if (defs.size() == 1 && !missing) {
        out[name] = defs.front();
        continue;
      }
      int m = merge_node(name, line);
      for (const auto& d : defs) tdg_.nodes[m].inputs.push_back({d.node, d.kind, ""});
      out[name] = {m, EdgeKind::Flow};
    }
    env_ = std::move(out);
  }

  std::optional<PyType> guard_type(const Expr& t) const {
    if (t.kind == ExprKind::Name) {
      if (is_var(t.id)) return std::nullopt;
      if (auto b = builtin_type_named(t.id)) return b;
      if (users_.contains(t.id)) return user_type(t.id);
      return std::nullopt;
    }
    if (auto path = alias_path(t); path && users_.contains(*path)) return user_type(*path);
    return std::nullopt;
  }

  std::optional<Guard> detect_guard(const Expr& test) const {
    if (test.kind == ExprKind::UnaryOp && test.id == "Not") {
      auto g = detect_guard(*test.items[0]);
      if (g) g->negated = !g->negated;
      return g;
    }
    if (test.kind != ExprKind::Call || test.items.size() != 3 || !test.keywords.empty()) {
      return std::nullopt;
    }
    const Expr& callee = *test.items[0];
    if (callee.kind != ExprKind::Name || callee.id != "isinstance" || is_var("isinstance")) {
      return std::nullopt;
    }
    const Expr& v = *test.items[1];
    if (v.kind != ExprKind::Name || !is_var(v.id)) return std::nullopt;
    Guard g;
    g.var = v.id;
    const Expr& types = *test.items[2];
    if (types.kind == ExprKind::Tuple) {
      for (const auto& t : types.items) {
        auto ty = guard_type(*t);
        if (!ty) return std::nullopt;
        g.types.push_back(*ty);
      }
    } else {
      auto ty = guard_type(types);
      if (!ty) return std::nullopt;
      g.types.push_back(*ty);
    }
    if (g.types.empty()) return std::nullopt;
    return g;
  }

  // Evaluates a test and returns the (true, false) environments.
  std::pair<Env, Env> eval_test(const Expr& test, int line) {
    auto guard = detect_guard(test);
    eval(test);
    Env t = env_;
    Env f = env_;
    if (guard) {
      auto it = env_.find(guard->var);
      if (it != env_.end()) {
        TdgNode b;
        b.kind = NodeKind::Branch;
        b.line = line;
        b.guard = guard->types;
        b.guard_var = guard->var;
        b.id = "branch." + guard->var + "@" + std::to_string(line);
        b.inputs.push_back({it->second.node, it->second.kind, ""});
        int bid = add(std::move(b));
        t[guard->var] = {bid, guard->negated ? EdgeKind::BranchFalse : EdgeKind::BranchTrue};
        f[guard->var] = {bid, guard->negated ? EdgeKind::BranchTrue : EdgeKind::BranchFalse};
      }
    }
    return {std::move(t), std::move(f)};
  }

  struct LoopCtx {
    std::vector<Flow> breaks;
    std::vector<Flow> continues;
  };

  std::map<std::string, int> open_loop_head(const Block& body, const Expr* target, int line) {
    std::set<std::string> written;
    scan_writes(body, written);
    if (target) note_store_names(*target, written);
    std::map<std::string, int> head;
    for (const auto& v : written) {
      if (!is_var(v)) continue;
      int m = merge_node(v, line);
      if (auto it = env_.find(v); it != env_.end()) {
        tdg_.nodes[m].inputs.push_back({it->second.node, it->second.kind, ""});
      }
      env_[v] = {m, EdgeKind::Flow};
      head[v] = m;
    }
    return head;
  }

  void close_loop_head(const std::map<std::string, int>& head, const LoopCtx& ctx) {
    std::vector<const Flow*> ends;
    Flow current{env_, live_};
    if (current.live) ends.push_back(&current);
    for (const auto& c : ctx.continues) ends.push_back(&c);
    for (const auto& [v, m] : head) {
      for (const auto* f : ends) {
        auto it = f->env.find(v);
        if (it == f->env.end() || (it->second.node == m && it->second.kind == EdgeKind::Flow)) {
          continue;
        }
        TdgInput in{it->second.node, it->second.kind == EdgeKind::Flow ? EdgeKind::Back : it->second.kind, ""};
        auto& inputs = tdg_.nodes[m].inputs;
        if (std::find(inputs.begin(), inputs.end(), in) == inputs.end()) inputs.push_back(in);
      }
    }
  }

  void loop(const Stmt& s) {
    const bool is_for = s.kind == StmtKind::For;
    int iter = -1;
    if (is_for) {
      int it = eval(*s.value);
      iter = expr("Iter", s.value->span, {it});
    }
    auto head = open_loop_head(s.body, is_for ? s.targets[0].get() : nullptr, s.span.line);
    loops_.emplace_back();
    Flow exit;
    if (is_for) {
      exit = {env_, live_};
      assign(*s.targets[0], iter);
    } else {
      auto [t, f] = eval_test(*s.value, s.span.line);
      exit = {std::move(f), live_};
      env_ = std::move(t);
    }
    block(s.body);
    LoopCtx ctx = std::move(loops_.back());
    loops_.pop_back();
    close_loop_head(head, ctx);
    env_ = exit.env;
    live_ = exit.live;
    block(s.orelse);
    std::vector<Flow> flows{{env_, live_}};
    for (auto& b : ctx.breaks) flows.push_back(std::move(b));
    join(flows, s.span.end_line);
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case StmtKind::FunctionDef: {
        for (const auto& d : s.function->decorators) eval(*d);
        int c = constant(PyType::bare("Callable"), s.span, "FunctionRef");
        if (is_var(s.function->name)) write(s.function->name, c, s.span);
        return;
      }
      case StmtKind::ClassDef: {
        int c = constant(PyType::type_type(), s.span, "TypeRef");
        if (is_var(s.klass->name)) write(s.klass->name, c, s.span);
        return;
      }
      case StmtKind::Return: {
        int v = s.value ? eval(*s.value) : constant(PyType::none(), s.span);
        if (!is_generator_ || s.value) return_values_.push_back(v);
        live_ = false;
        return;
      }
      case StmtKind::Delete:
        for (const auto& t : s.targets) {
          if (t->kind == ExprKind::Tuple) {
            for (const auto& i : t->items) eval(*i);
          } else {
            eval(*t);
          }
        }
        return;
      case StmtKind::Assign: {
        int v = eval(*s.value);
        for (const auto& t : s.targets) assign(*t, v);
        return;
      }
      case StmtKind::AugAssign: {
        const Expr& t = *s.targets[0];
        int left = -1;
        if (t.kind == ExprKind::Name) {
          left = is_var(t.id) ? read(t.id, t.span) : eval_name(t);
        } else {
          left = eval(t);
        }
        int right = eval(*s.value);
        int op = expr(s.op, s.span, {left, right});
        if (t.kind == ExprKind::Name) {
          if (is_var(t.id)) write(t.id, op, t.span);
        } else if (t.kind == ExprKind::Attribute) {
          int n = expr("AttrStore", t.span, {op});
          tdg_.nodes[n].name = t.id;
        }
        return;
      }
      case StmtKind::AnnAssign:
        if (s.value) assign(*s.targets[0], eval(*s.value));
        return;
      case StmtKind::For:
      case StmtKind::While: loop(s); return;
      case StmtKind::If: {
        if (s.op == "semicolon") {
          block(s.body);
          return;
        }
        auto [t, f] = eval_test(*s.value, s.span.line);
        const bool live = live_;
        env_ = std::move(t);
        block(s.body);
        Flow a{env_, live_};
        env_ = std::move(f);
        live_ = live;
        block(s.orelse);
        Flow b{env_, live_};
        join({a, b}, s.span.line);
        return;
      }
      case StmtKind::With:
        for (const auto& item : s.items) {
          int c = eval(*item.context);
          if (item.target) assign(*item.target, opaque(item.context->span, {c}));
        }
        block(s.body);
        return;
      case StmtKind::Raise:
        if (s.value) eval(*s.value);
        for (const auto& t : s.targets) eval(*t);
        live_ = false;
        return;
      case StmtKind::Try: {
        Flow pre{env_, live_};
        block(s.body);
        Flow body_end{env_, live_};
        block(s.orelse);
        std::vector<Flow> flows{{env_, live_}};
        for (const auto& h : s.handlers) {
          join({pre, body_end}, h.span.line);
          live_ = pre.live;
          if (h.type) eval(*h.type);
          if (h.name && is_var(*h.name)) {
            int src = -1;
            if (h.type) {
              if (auto ty = guard_type(*h.type); ty && ty->is(TypeKind::User)) {
                src = constant(*ty, h.span, "ExceptVar");
              }
            }
            if (src < 0) src = opaque(h.span);
            write(*h.name, src, h.span);
          }
          block(h.body);
          flows.push_back({env_, live_});
        }
        join(flows, s.span.end_line);
        block(s.finalbody);
        return;
      }
      case StmtKind::Assert: {
        auto [t, f] = eval_test(*s.value, s.span.line);
        for (const auto& m : s.targets) eval(*m);
        env_ = std::move(t);
        return;
      }
      case StmtKind::ExprStmt:
        if (s.value->kind == ExprKind::Constant) return;  // docstrings and `...`
        eval(*s.value, true);
        return;
      case StmtKind::Break:
        if (!loops_.empty()) loops_.back().breaks.push_back({env_, live_});
        live_ = false;
        return;
      case StmtKind::Continue:
        if (!loops_.empty()) loops_.back().continues.push_back({env_, live_});
        live_ = false;
        return;
      default: return;
    }
  }

  void block(const Block& b) {
    for (const auto& s : b) stmt(*s);
  }

  const FunctionDef& fn_;
  const UserTypeSet& users_;
  const ModuleAst* module_;
  Tdg tdg_;
  Env env_;
  bool live_ = true;
  std::set<std::string> vars_;
  std::set<std::string> param_vars_;
  std::set<std::string> declared_outer_;
  std::set<std::string> imported_locals_;
  std::map<std::string, int> comp_vars_;
  std::map<std::string, std::string> nested_defs_;
  std::map<std::string, std::string> module_names_;
  std::map<std::string, std::string> from_imports_;
  std::map<std::string, int> next_order_;
  std::map<std::string, int> id_counts_;
  std::vector<LoopCtx> loops_;
  std::vector<int> return_values_;
  std::vector<std::pair<int, bool>> yields_;
  bool is_generator_ = false;
  std::string self_name_;
};

}  // namespace

Tdg build_tdg(const FunctionDef& func, const UserTypeSet& user_types, const ModuleAst* module) {
  return Builder(func, user_types, module).run();
}

int ProgramTdg::tdg_of(int global_node) const {
  auto it = std::upper_bound(offsets.begin(), offsets.end(), global_node);
  return static_cast<int>(it - offsets.begin()) - 1;
}

const Tdg* ProgramTdg::find_tdg(std::string_view function) const {
  for (const auto& t : tdgs) {
    if (t.function == function) return &t;
  }
  return nullptr;
}

Tdg ProgramTdg::snapshot(int tdg) const {
  Tdg copy = tdgs[static_cast<std::size_t>(tdg)];
  for (std::size_t i = 0; i < copy.nodes.size(); ++i) {
    copy.nodes[i].cands = nodes[static_cast<std::size_t>(offsets[static_cast<std::size_t>(tdg)]) + i].cands;
  }
  return copy;
}

namespace {

// Strongly connected components of the call graph (Tarjan).
std::vector<int> call_graph_components(const std::vector<std::vector<int>>& succ) {
  const int n = static_cast<int>(succ.size());
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<bool> on_stack(static_cast<std::size_t>(n), false);
  std::vector<int> stack;
  int counter = 0;
  int comps = 0;
  std::function<void(int)> visit = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : succ[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        comp[w] = comps;
      } while (w != v);
      ++comps;
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[v] < 0) visit(v);
  }
  return comp;
}

}  // namespace

ProgramTdg link_functions(std::vector<Tdg> tdgs, const ModuleAst& module) {
  ProgramTdg p;
  p.source_path = module.source_path;
  p.tdgs = std::move(tdgs);
  std::map<std::string, int> by_name;
  int offset = 0;
  for (std::size_t i = 0; i < p.tdgs.size(); ++i) {
    const Tdg& t = p.tdgs[i];
    by_name[t.function] = static_cast<int>(i);
    p.offsets.push_back(offset);
    for (TdgNode n : t.nodes) {
      for (auto& in : n.inputs) in.src += offset;
      p.nodes.push_back(std::move(n));
    }
    offset += static_cast<int>(t.nodes.size());
  }

  std::vector<std::vector<int>> succ(p.tdgs.size());
  for (std::size_t i = 0; i < p.tdgs.size(); ++i) {
    for (const auto& cs : p.tdgs[i].calls) {
      if (auto it = by_name.find(cs.callee); it != by_name.end()) succ[i].push_back(it->second);
    }
  }
  const auto comp = call_graph_components(succ);

  for (std::size_t i = 0; i < p.tdgs.size(); ++i) {
    const Tdg& caller = p.tdgs[i];
    const int off = p.offsets[i];
    for (const auto& cs : caller.calls) {
      auto it = by_name.find(cs.callee);
      if (it == by_name.end()) continue;
      const int j = it->second;
      if (comp[i] == comp[static_cast<std::size_t>(j)]) {
        p.deferred.push_back({caller.function, cs.callee, off + cs.node});
        continue;
      }
      const Tdg& callee = p.tdgs[static_cast<std::size_t>(j)];
      CallLink link;
      link.call_node = off + cs.node;
      if (!cs.instantiation) {
        link.callee_return = p.global(j, callee.return_slot);
        p.nodes[static_cast<std::size_t>(link.call_node)].inputs.push_back(
            {link.callee_return, EdgeKind::Aux, ""});
      }
      const std::size_t skip = cs.skip_self ? 1 : 0;
      for (std::size_t a = 0; a < cs.args.size(); ++a) {
        const std::size_t pi = a + skip;
        if (pi >= callee.params.size()) break;
        link.arg_to_param.emplace_back(off + cs.args[a], p.global(j, callee.params[pi]));
      }
      for (const auto& [kw, node] : cs.keywords) {
        for (std::size_t pi = skip; pi < callee.param_names.size(); ++pi) {
          if (callee.param_names[pi] == kw) {
            link.arg_to_param.emplace_back(off + node, p.global(j, callee.params[pi]));
          }
        }
      }
      for (const auto& [arg, param] : link.arg_to_param) {
        p.nodes[static_cast<std::size_t>(param)].inputs.push_back({arg, EdgeKind::CallArg, ""});
      }
      p.call_links.push_back(std::move(link));
    }
  }

  // Attribute loads and method calls resolve through in-file classes.
  for (const auto& cls : module.classes) {
    if (cls->qualified_name.find('.') != std::string::npos) continue;
    const std::string& cname = cls->qualified_name;
    auto init = by_name.find(cname + ".__init__");
    for (std::size_t i = 0; i < p.tdgs.size(); ++i) {
      const int off = p.offsets[i];
      if (init != by_name.end()) {
        const int ti = init->second;
        const auto& stores = p.tdgs[static_cast<std::size_t>(ti)].self_attribute_stores;
        for (const auto& load : p.tdgs[i].attribute_loads) {
          auto s = stores.find(load.attr);
          if (s == stores.end()) continue;
          for (int store : s->second) {
            p.nodes[static_cast<std::size_t>(off + load.node)].inputs.push_back(
                {p.global(ti, store), EdgeKind::Aux, cname});
          }
        }
      }
      for (const auto& mc : p.tdgs[i].method_calls) {
        auto m = by_name.find(cname + "." + mc.method);
        if (m == by_name.end()) continue;
        const int mj = m->second;
        if (comp[i] == comp[static_cast<std::size_t>(mj)]) {
          p.deferred.push_back({p.tdgs[i].function, cname + "." + mc.method, off + mc.node});
          continue;
        }
        p.nodes[static_cast<std::size_t>(off + mc.node)].inputs.push_back(
            {p.global(mj, p.tdgs[static_cast<std::size_t>(mj)].return_slot), EdgeKind::Aux, cname});
      }
    }
  }
  // Keep the per-function copies in sync with the cross-function edges.
  for (std::size_t i = 0; i < p.tdgs.size(); ++i) {
    auto& t = p.tdgs[i];
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      t.nodes[k].inputs.clear();
      for (const auto& in : p.nodes[static_cast<std::size_t>(p.offsets[i]) + k].inputs) {
        const int owner = p.tdg_of(in.src);
        if (owner == static_cast<int>(i)) {
          TdgInput local = in;
          local.src -= p.offsets[i];
          t.nodes[k].inputs.push_back(local);
        }
      }
    }
  }
  return p;
}

ProgramTdg build_program(const ModuleAst& module, const UserTypeSet& user_types) {
  std::vector<Tdg> tdgs;
  for (const auto& f : module.functions) tdgs.push_back(build_tdg(*f, user_types, &module));
  return link_functions(std::move(tdgs), module);
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string export_dot(const Tdg& tdg) {
  std::ostringstream out;
  out << "digraph \"" << dot_escape(tdg.function) << "\" {\n";
  out << "  rankdir=TB;\n";
  for (std::size_t i = 0; i < tdg.nodes.size(); ++i) {
    const TdgNode& n = tdg.nodes[i];
    const char* shape = "box";
    switch (n.kind) {
      case NodeKind::Symbol: shape = "ellipse"; break;
      case NodeKind::Branch: shape = "diamond"; break;
      case NodeKind::Merge: shape = "circle"; break;
      case NodeKind::Expr: break;
    }
    std::string kind = to_string(n.kind);
    if (n.kind == NodeKind::Expr) kind += ":" + n.op;
    const std::string cands = n.cands.blank() ? "blank" : n.cands.render();
    out << "  n" << i << " [shape=" << shape << ", label=\"" << dot_escape(n.id) << "\\n"
        << dot_escape(kind) << "\\n" << dot_escape(cands) << "\"];\n";
  }
  for (std::size_t i = 0; i < tdg.nodes.size(); ++i) {
    for (const auto& in : tdg.nodes[i].inputs) {
      out << "  n" << in.src << " -> n" << i;
      if (in.kind != EdgeKind::Flow) out << " [label=\"" << to_string(in.kind) << "\"]";
      out << ";\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace tdgtype
