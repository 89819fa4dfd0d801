#include "tdgtype/rules.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "default_stubs.hpp"

namespace tdgtype {

StubError::StubError(std::string origin, int line, const std::string& message)
    : std::runtime_error(origin + ":" + std::to_string(line) + ": " + message),
      origin_(std::move(origin)),
      line_(line) {}

// --- stub table ------------------------------------------------------------

const StubTable& StubTable::defaults() {
  static const StubTable table = [] {
    StubTable t;
    t.load_text(default_stub_text(), "<builtin>");
    return t;
  }();
  return table;
}

void StubTable::load_text(std::string_view text, const std::string& origin) {
  std::set<std::string> defined_here;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto colon = line.find(" : ");
    if (colon == std::string::npos) throw StubError(origin, lineno, "expected 'name : Type'");
    std::string name = line.substr(first, colon - first);
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t')) name.pop_back();
    if (name.empty()) throw StubError(origin, lineno, "missing name");
    PyType type;
    try {
      type = parse_type_expr(std::string_view(line).substr(colon + 3), TypeSyntax::Stub);
    } catch (const TypeParseError& e) {
      throw StubError(origin, lineno, e.what());
    }
    if (defined_here.insert(name).second) entries_[name].clear();
    entries_[name].push_back(std::move(type));
  }
}

void StubTable::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StubError(path, 0, "cannot open stub file");
  std::ostringstream ss;
  ss << in.rdbuf();
  load_text(ss.str(), path);
}

const std::vector<PyType>* StubTable::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> StubTable::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

std::optional<PyType> lookup_stub(std::string_view name, const StubTable& table) {
  const auto* sigs = table.find(name);
  if (!sigs || sigs->empty()) return std::nullopt;
  return sigs->front();
}

// --- builtin members -------------------------------------------------------

bool builtin_has_member(std::string_view builtin, std::string_view method) {
  static const std::map<std::string, std::set<std::string, std::less<>>, std::less<>> kMembers = {
      {"str",
       {"capitalize", "casefold", "center", "count", "encode", "endswith", "expandtabs", "find",
        "format", "format_map", "index", "isalnum", "isalpha", "isascii", "isdecimal", "isdigit",
        "isidentifier", "islower", "isnumeric", "isprintable", "isspace", "istitle", "isupper",
        "join", "ljust", "lower", "lstrip", "maketrans", "partition", "removeprefix",
        "removesuffix", "replace", "rfind", "rindex", "rjust", "rpartition", "rsplit", "rstrip",
        "split", "splitlines", "startswith", "strip", "swapcase", "title", "translate", "upper",
        "zfill"}},
      {"bytes",
       {"capitalize", "center", "count", "decode", "endswith", "expandtabs", "find", "fromhex",
        "hex", "index", "isalnum", "isalpha", "isascii", "isdigit", "islower", "isspace",
        "istitle", "isupper", "join", "ljust", "lower", "lstrip", "maketrans", "partition",
        "removeprefix", "removesuffix", "replace", "rfind", "rindex", "rjust", "rpartition",
        "rsplit", "rstrip", "split", "splitlines", "startswith", "strip", "swapcase", "title",
        "translate", "upper", "zfill"}},
      {"int",
       {"as_integer_ratio", "bit_count", "bit_length", "conjugate", "denominator", "from_bytes",
        "imag", "numerator", "real", "to_bytes"}},
      {"float", {"as_integer_ratio", "conjugate", "fromhex", "hex", "imag", "is_integer", "real"}},
      {"list",
       {"append", "clear", "copy", "count", "extend", "index", "insert", "pop", "remove",
        "reverse", "sort"}},
      {"dict",
       {"clear", "copy", "fromkeys", "get", "items", "keys", "pop", "popitem", "setdefault",
        "update", "values"}},
      {"set",
       {"add", "clear", "copy", "difference", "difference_update", "discard", "intersection",
        "intersection_update", "isdisjoint", "issubset", "issuperset", "pop", "remove",
        "symmetric_difference", "symmetric_difference_update", "union", "update"}},
      {"tuple", {"count", "index"}},
      {"generator",
       {"close", "gi_code", "gi_frame", "gi_running", "gi_yieldfrom", "send", "throw"}},
  };
  if (builtin == "bool") builtin = "int";
  auto it = kMembers.find(builtin);
  return it != kMembers.end() && it->second.count(method) > 0;
}

std::string builtin_name(const PyType& t) {
  if (t.is(TypeKind::Elementary)) return t.name();
  if (t.is_ctor("List")) return "list";
  if (t.is_ctor("Dict")) return "dict";
  if (t.is_ctor("Set")) return "set";
  if (t.is_ctor("Tuple")) return "tuple";
  if (t.is_ctor("Generator")) return "generator";
  return "";
}

// --- rule table ------------------------------------------------------------

const std::vector<RuleEntry>& rule_table() {
  using S = RuleShape;
  using R = Relation;
  static const std::vector<RuleEntry> kTable = {
      {"Constant", S::Constant, {}, R::None},
      {"TypeRef", S::Constant, {}, R::None},
      {"FunctionRef", S::Constant, {}, R::None},
      {"Lambda", S::Constant, {}, R::None},
      {"ClassInstantiation", S::Constant, {}, R::None},
      {"ExceptVar", S::Constant, {}, R::None},
      {"ModuleAttr", S::Constant, {}, R::None},
      {"Opaque", S::Opaque, {}, R::None},
      {"Await", S::Identity, {}, R::None},
      {"AttrStore", S::Identity, {}, R::None},
      {"Call", S::Identity, {}, R::None},
      {"BoolOp", S::Aggregate, {}, R::None},
      {"IfExp", S::Aggregate, {}, R::None},
      {"ListLit", S::Aggregate, {}, R::None},
      {"SetLit", S::Aggregate, {}, R::None},
      {"TupleLit", S::Aggregate, {}, R::None},
      {"DictLit", S::Aggregate, {}, R::None},
      {"ListComp", S::Aggregate, {}, R::None},
      {"SetComp", S::Aggregate, {}, R::None},
      {"GeneratorExp", S::Aggregate, {}, R::None},
      {"DictComp", S::Aggregate, {}, R::None},
      {"GeneratorReturn", S::Aggregate, {}, R::None},
      {"Append", S::Aggregate, {"List U"}, R::None},
      {"Extend", S::Aggregate, {"List U", "A str bytes U"}, R::None},
      {"Insert", S::Aggregate, {"List U"}, R::None},
      {"SetAdd", S::Aggregate, {"Set U"}, R::None},
      {"Update", S::Aggregate, {"Set Dict U"}, R::None},
      {"SubscriptStore", S::Aggregate, {"Dict List U"}, R::None},
      {"Add", S::Distributive, {"G List Tuple O", "G List Tuple O"}, R::AllEqual},
      {"Sub", S::Distributive, {"bool int float Set O", "bool int float Set O"}, R::AllEqual},
      {"Mult", S::Distributive, {"G List Tuple O", "G List Tuple O"}, R::Custom},
      {"Div", S::Distributive, {"bool int float O", "bool int float O"}, R::None},
      {"FloorDiv", S::Distributive, {"bool int float O", "bool int float O"}, R::None},
      {"Pow", S::Distributive, {"bool int float O", "bool int float O"}, R::None},
      {"Mod", S::Distributive, {"bool int float str bytes O", ""}, R::Custom},
      {"MatMult", S::Distributive, {"O", "O"}, R::None},
      {"LShift", S::Distributive, {"bool int O", "bool int O"}, R::None},
      {"RShift", S::Distributive, {"bool int O", "bool int O"}, R::None},
      {"BitOr", S::Distributive, {"bool int Set Dict O", "bool int Set Dict O"}, R::AllEqual},
      {"BitAnd", S::Distributive, {"bool int Set O", "bool int Set O"}, R::AllEqual},
      {"BitXor", S::Distributive, {"bool int Set O", "bool int Set O"}, R::AllEqual},
      {"Not", S::Distributive, {""}, R::None},
      {"UAdd", S::Distributive, {"bool int float O"}, R::None},
      {"USub", S::Distributive, {"bool int float O"}, R::None},
      {"Invert", S::Distributive, {"bool int O"}, R::None},
      {"Compare", S::Distributive, {}, R::Custom},
      {"Subscript", S::Distributive, {"A str bytes U type"}, R::Custom},
      {"Slice", S::Distributive, {"List Tuple str bytes U type", "bool int None O"}, R::None},
      {"Iter", S::Distributive, {"A str bytes U type"}, R::None},
      {"Unpack", S::Distributive, {"A str bytes U type"}, R::None},
      {"CallValue", S::Distributive, {"Callable U type"}, R::None},
      {"StubCall", S::Distributive, {}, R::Custom},
      {"MethodCall", S::Distributive, {}, R::Custom},
      {"Attribute", S::Distributive, {}, R::Custom},
  };
  return kTable;
}

const RuleEntry* find_rule(std::string_view op) {
  for (const auto& e : rule_table()) {
    if (e.op == op) return &e;
  }
  return nullptr;
}

namespace {

// --- small helpers -----------------------------------------------------------

bool is_o(const PyType& t) { return t.is_overloading_user(); }
bool is_int_like(const PyType& t) { return t.is_elementary("int") || t.is_elementary("bool"); }
bool is_sequence(const PyType& t) {
  return t.is_elementary("str") || t.is_elementary("bytes") || t.is_ctor("List") ||
         t.is_ctor("Tuple");
}
// Types whose members are unknown to the engine: any operation is accepted.
bool is_open(const PyType& t) {
  return t.is(TypeKind::User) || t.is(TypeKind::TypeType);
}

PyType promote(const PyType& t) { return t.is_elementary("bool") ? PyType::int_() : t; }

PyType numeric_result(const PyType& a, const PyType& b) { return promote(more_precise(a, b)); }

bool tuple_fixed(const PyType& t) {
  return t.is_ctor("Tuple") && !t.params().empty() &&
         std::none_of(t.params().begin(), t.params().end(),
                      [](const PyType& p) { return p.is(TypeKind::Ellipsis); });
}

std::vector<PyType> spread(const std::vector<PyType>& ts) {
  std::vector<PyType> out;
  for (const auto& t : ts) {
    for (const auto& m : t.flatten_union()) out.push_back(m);
  }
  return out;
}

std::vector<PyType> elements(const PyType& t) { return spread(element_types_or_empty(t)); }

PyType tuple_of_any_length(const PyType& t) {
  if (t.params().empty()) return t;
  auto elems = elements(t);
  if (elems.empty()) return PyType::bare("Tuple");
  return PyType::generic("Tuple", {PyType::union_of(elems), PyType::ellipsis()});
}

PyType list_of(std::vector<PyType> elems) { return PyType::generic("List", std::move(elems)); }

// Result of one combination: `valid` false means the rule premises fail;
// an empty image means the combination is accepted but says nothing.
struct Outcome {
  bool valid = false;
  std::vector<PyType> image;
};

Outcome ok(std::vector<PyType> image = {}) { return {true, std::move(image)}; }
Outcome bad() { return {false, {}}; }

// --- stub unification --------------------------------------------------------

using Bindings = std::map<std::string, std::vector<PyType>>;

void bind_var(Bindings& b, const std::string& var, const std::vector<PyType>& ts) {
  auto& v = b[var];
  for (const auto& t : spread(ts)) v.push_back(t);
}

bool unify(const PyType& p, const PyType& a, Bindings& b);

bool unify_elements(const std::vector<PyType>& patterns, const std::vector<PyType>& actual,
                    Bindings& b) {
  for (const auto& m : spread(actual)) {
    bool any = false;
    for (const auto& p : patterns) {
      Bindings trial = b;
      if (unify(p, m, trial)) {
        b = std::move(trial);
        any = true;
        break;
      }
    }
    if (!any) return false;
  }
  return true;
}

bool unify(const PyType& p, const PyType& a, Bindings& b) {
  if (p.is(TypeKind::Var)) {
    if (!p.iterable_var()) {
      bind_var(b, p.name(), {a});
      return true;
    }
    if (is_o(a) || is_open(a)) return true;
    if (!is_iterable(a)) return false;
    auto elems = elements(a);
    if (!elems.empty()) bind_var(b, p.name(), elems);
    return true;
  }
  if (is_o(a)) return true;
  if (a.is_union()) {
    return std::all_of(a.params().begin(), a.params().end(),
                       [&](const PyType& m) { return unify(p, m, b); });
  }
  if (p.is_union()) {
    for (const auto& m : p.params()) {
      Bindings trial = b;
      if (unify(m, a, trial)) {
        b = std::move(trial);
        return true;
      }
    }
    return false;
  }
  switch (p.kind()) {
    case TypeKind::Elementary:
      if (a == p) return true;
      if (p.is_elementary("float")) return is_int_like(a);
      if (p.is_elementary("int")) return a.is_elementary("bool");
      return false;
    case TypeKind::None:
    case TypeKind::TypeType: return a.kind() == p.kind();
    case TypeKind::User: return a.is(TypeKind::User) && a.name() == p.name();
    case TypeKind::Generic: break;
    default: return false;
  }
  if (p.is_ctor("Callable")) {
    return a.is_ctor("Callable") || a.is(TypeKind::TypeType) || a.is(TypeKind::User);
  }
  if (!a.is(TypeKind::Generic) || a.name() != p.name()) return false;
  if (p.params().empty() || a.params().empty()) return true;
  if (p.is_ctor("Dict")) {
    return unify_elements(p.dict_keys(), a.dict_keys(), b) &&
           unify_elements(p.dict_values(), a.dict_values(), b);
  }
  if (p.is_ctor("Tuple")) {
    if (tuple_fixed(p) && tuple_fixed(a)) {
      if (p.params().size() != a.params().size()) return false;
      for (std::size_t i = 0; i < p.params().size(); ++i) {
        if (!unify(p.params()[i], a.params()[i], b)) return false;
      }
      return true;
    }
    std::vector<PyType> pats;
    for (const auto& q : p.params()) {
      if (!q.is(TypeKind::Ellipsis)) pats.push_back(q);
    }
    return unify_elements(pats, elements(a), b);
  }
  return unify_elements(p.params(), a.params(), b);
}

std::optional<PyType> substitute(const PyType& t, const Bindings& b) {
  if (t.is(TypeKind::Var)) {
    auto it = b.find(t.name());
    if (it == b.end() || it->second.empty()) return std::nullopt;
    return PyType::union_of(it->second);
  }
  if (!t.is(TypeKind::Generic) || t.params().empty()) return t;
  if (t.is_ctor("Callable")) {
    auto ret = substitute(t.callable_return(), b);
    if (!ret) return std::nullopt;
    if (t.callable_has_ellipsis_args()) return PyType::callable_any_args(*ret);
    std::vector<PyType> args;
    for (const auto& a : t.callable_args()) {
      auto s = substitute(a, b);
      if (!s) return std::nullopt;
      args.push_back(*s);
    }
    return PyType::callable(std::move(args), *ret);
  }
  std::vector<PyType> ps;
  for (const auto& p : t.params()) {
    if (p.is(TypeKind::Ellipsis)) {
      ps.push_back(p);
      continue;
    }
    auto s = substitute(p, b);
    if (!s) return std::nullopt;
    ps.push_back(*s);
  }
  return PyType::generic(t.name(), std::move(ps));
}

// Applies a stub signature; nullopt when the arguments do not fit.
std::optional<Outcome> apply_signature(const PyType& sig, const std::vector<PyType>& args) {
  if (!sig.is_ctor("Callable")) return ok();
  if (sig.params().empty()) return ok();
  Bindings b;
  if (!sig.callable_has_ellipsis_args()) {
    const auto& params = sig.callable_args();
    if (args.size() > params.size()) return std::nullopt;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (!unify(params[i], args[i], b)) return std::nullopt;
    }
  }
  auto ret = substitute(sig.callable_return(), b);
  if (!ret) return ok();
  return ok(ret->flatten_union());
}

Outcome call_stub(const std::vector<PyType>& sigs, const std::vector<PyType>& args) {
  for (const auto& sig : sigs) {
    if (auto r = apply_signature(sig, args)) return *r;
  }
  return bad();
}

const std::vector<PyType>* find_stub(const StubTable& stubs, const std::string& name) {
  if (const auto* s = stubs.find(name)) return s;
  if (auto dot = name.rfind('.'); dot != std::string::npos) {
    return stubs.find(std::string_view(name).substr(dot + 1));
  }
  return nullptr;
}

// --- per-combination rules -----------------------------------------------------

struct Ctx {
  const TdgNode& node;
  const StubTable& stubs;
  // Aux inputs by class tag ("" for untagged).
  std::map<std::string, std::vector<const CandidateSet*>> aux;
};

Outcome arithmetic(const std::string& op, const PyType& a, const PyType& b) {
  // The class may define the operator with any result type.
  if (is_o(a) || is_o(b)) return ok({});
  const bool num = a.is_numeric() && b.is_numeric();
  if (op == "Add") {
    if (num) return ok({numeric_result(a, b)});
    if ((a.is_elementary("str") && b.is_elementary("str")) ||
        (a.is_elementary("bytes") && b.is_elementary("bytes"))) {
      return ok({a});
    }
    if (a.is_ctor("List") && b.is_ctor("List")) {
      std::vector<PyType> ps = a.params();
      ps.insert(ps.end(), b.params().begin(), b.params().end());
      return ok({list_of(ps)});
    }
    if (a.is_ctor("Tuple") && b.is_ctor("Tuple")) {
      if (a.params().empty() || b.params().empty()) return ok({PyType::bare("Tuple")});
      if (tuple_fixed(a) && tuple_fixed(b)) {
        std::vector<PyType> ps = a.params();
        ps.insert(ps.end(), b.params().begin(), b.params().end());
        return ok({PyType::generic("Tuple", ps)});
      }
      auto ea = elements(a);
      auto eb = elements(b);
      ea.insert(ea.end(), eb.begin(), eb.end());
      return ok({PyType::generic("Tuple", {PyType::union_of(ea), PyType::ellipsis()})});
    }
    return bad();
  }
  if (op == "Sub") {
    if (num) return ok({numeric_result(a, b)});
    if (a.is_ctor("Set") && b.is_ctor("Set")) return ok({a});
    return bad();
  }
  if (op == "Mult") {
    if (num) return ok({numeric_result(a, b)});
    const PyType* seq = nullptr;
    if (is_int_like(a) && is_sequence(b)) seq = &b;
    if (is_int_like(b) && is_sequence(a)) seq = &a;
    if (!seq) return bad();
    return ok({seq->is_ctor("Tuple") ? tuple_of_any_length(*seq) : *seq});
  }
  if (op == "Div") {
    if (num) return ok({PyType::float_()});
    return bad();
  }
  if (op == "FloorDiv" || op == "Pow") {
    if (num) return ok({numeric_result(a, b)});
    return bad();
  }
  if (op == "Mod") {
    if (num) return ok({numeric_result(a, b)});
    if (a.is_elementary("str") || a.is_elementary("bytes")) return ok({a});
    return bad();
  }
  if (op == "MatMult") return bad();
  if (op == "LShift" || op == "RShift") {
    if (is_int_like(a) && is_int_like(b)) return ok({PyType::int_()});
    return bad();
  }
  // BitOr / BitAnd / BitXor
  if (a.is_elementary("bool") && b.is_elementary("bool")) return ok({PyType::bool_()});
  if (is_int_like(a) && is_int_like(b)) return ok({PyType::int_()});
  if (a.is_ctor("Set") && b.is_ctor("Set")) {
    std::vector<PyType> ps = a.params();
    if (op != "BitAnd") ps.insert(ps.end(), b.params().begin(), b.params().end());
    return ok({PyType::generic("Set", ps)});
  }
  if (op == "BitOr" && a.is_ctor("Dict") && b.is_ctor("Dict")) {
    std::vector<PyType> ps = a.params();
    ps.insert(ps.end(), b.params().begin(), b.params().end());
    return ok({PyType::generic("Dict", ps)});
  }
  return bad();
}

Outcome unary(const std::string& op, const PyType& a) {
  if (op == "Not") return ok({PyType::bool_()});
  if (is_o(a)) return ok({});
  if (op == "Invert") return is_int_like(a) ? ok({PyType::int_()}) : bad();
  return a.is_numeric() ? ok({promote(a)}) : bad();
}

bool comparable(const std::string& op, const PyType& a, const PyType& b) {
  if (op == "Eq" || op == "NotEq" || op == "Is" || op == "IsNot") return true;
  if (is_o(a) || is_o(b)) return true;
  if (op == "In" || op == "NotIn") {
    if (b.is_elementary("str")) return a.is_elementary("str");
    if (b.is_elementary("bytes")) return a.is_elementary("bytes") || is_int_like(a);
    return b.is_ctor("List") || b.is_ctor("Tuple") || b.is_ctor("Set") || b.is_ctor("Dict") ||
           b.is_ctor("Generator") || is_open(b);
  }
  // Lt LtE Gt GtE
  if (a.is_numeric() && b.is_numeric()) return true;
  for (const char* k : {"str", "bytes"}) {
    if (a.is_elementary(k) && b.is_elementary(k)) return true;
  }
  for (const char* c : {"List", "Tuple"}) {
    if (a.is_ctor(c) && b.is_ctor(c)) return true;
  }
  return false;
}

Outcome subscript(const TdgNode& node, const PyType& v, const PyType& i) {
  if (is_open(v)) return ok();
  if (v.is_ctor("Dict")) return ok(spread(v.dict_values()));
  const bool index_ok = is_int_like(i) || is_o(i);
  if (!index_ok) return bad();
  if (v.is_ctor("List")) return ok(spread(v.params()));
  if (v.is_elementary("str")) return ok({PyType::str_()});
  if (v.is_elementary("bytes")) return ok({PyType::int_()});
  if (v.is_ctor("Tuple")) {
    if (tuple_fixed(v) && node.subscript) {
      const long n = static_cast<long>(v.params().size());
      long k = *node.subscript;
      if (k < 0) k += n;
      if (k < 0 || k >= n) return bad();
      return ok(v.params()[static_cast<std::size_t>(k)].flatten_union());
    }
    return ok(elements(v));
  }
  return bad();
}

Outcome slice(const std::vector<PyType>& ops) {
  for (std::size_t k = 1; k < ops.size(); ++k) {
    const PyType& b = ops[k];
    if (!(is_int_like(b) || b.is(TypeKind::None) || is_o(b))) return bad();
  }
  const PyType& v = ops[0];
  if (is_open(v)) return ok();
  if (v.is_ctor("List") || v.is_elementary("str") || v.is_elementary("bytes")) return ok({v});
  if (v.is_ctor("Tuple")) return ok({tuple_of_any_length(v)});
  return bad();
}

bool iterable_value(const PyType& v) {
  return v.is_ctor("List") || v.is_ctor("Set") || v.is_ctor("Generator") || v.is_ctor("Tuple") ||
         v.is_ctor("Dict") || v.is_elementary("str") || v.is_elementary("bytes");
}

Outcome iterate(const PyType& v) {
  if (is_open(v)) return ok();
  if (!iterable_value(v)) return bad();
  return ok(elements(v));
}

Outcome unpack(const TdgNode& node, const PyType& v) {
  const bool starred_here = node.starred >= 0 && node.index == node.starred;
  if (is_open(v)) return ok();
  if (!iterable_value(v)) return bad();
  if (tuple_fixed(v)) {
    const int len = static_cast<int>(v.params().size());
    const int n = node.count;
    const int k = node.index;
    if (node.starred < 0) {
      if (len != n) return bad();
      return ok(v.params()[static_cast<std::size_t>(k)].flatten_union());
    }
    if (len < n - 1) return bad();
    const int s = node.starred;
    if (k < s) return ok(v.params()[static_cast<std::size_t>(k)].flatten_union());
    if (k > s) return ok(v.params()[static_cast<std::size_t>(len - (n - k))].flatten_union());
    std::vector<PyType> middle(v.params().begin() + s, v.params().begin() + (len - (n - s) + 1));
    return ok({list_of(spread(middle))});
  }
  auto elems = elements(v);
  if (starred_here) return ok({list_of(elems)});
  return ok(elems);
}

Outcome call_value(const PyType& c) {
  if (c.is_ctor("Callable")) {
    if (c.params().empty()) return ok();
    return ok(c.callable_return().flatten_union());
  }
  if (is_open(c)) return ok();
  return bad();
}

Outcome from_aux(const Ctx& ctx, const std::string& tag) {
  auto it = ctx.aux.find(tag);
  if (it == ctx.aux.end()) return ok();
  std::vector<PyType> out;
  for (const auto* set : it->second) {
    if (set->blank()) return ok();
    out.insert(out.end(), set->begin(), set->end());
  }
  return ok(spread(out));
}

Outcome method_call(const Ctx& ctx, const std::vector<PyType>& ops) {
  const PyType& recv = ops[0];
  const std::string& m = ctx.node.name;
  if (recv.is(TypeKind::None)) return bad();
  if (recv.is(TypeKind::User)) return from_aux(ctx, recv.name());
  if (recv.is(TypeKind::TypeType) || recv.is_ctor("Callable")) return ok();
  const std::string k = builtin_name(recv);
  if (k.empty()) return bad();
  std::vector<std::string> names{k + "." + m};
  if (k == "bool") names.push_back("int." + m);
  for (const auto& name : names) {
    if (const auto* sigs = ctx.stubs.find(name)) return call_stub(*sigs, ops);
  }
  return builtin_has_member(k, m) ? ok() : bad();
}

Outcome attribute(const Ctx& ctx, const PyType& recv) {
  const std::string& attr = ctx.node.name;
  if (recv.is(TypeKind::None)) return bad();
  if (recv.is(TypeKind::User)) return from_aux(ctx, recv.name());
  if (recv.is(TypeKind::TypeType) || recv.is_ctor("Callable")) return ok();
  const std::string k = builtin_name(recv);
  if (k.empty()) return bad();
  if (const auto* sigs = ctx.stubs.find(k + "." + attr)) {
    if (!sigs->empty() && !sigs->front().is_ctor("Callable")) return ok({sigs->front()});
    return ok();
  }
  return builtin_has_member(k, attr) ? ok() : bad();
}

Outcome combination(const Ctx& ctx, const std::vector<PyType>& ops) {
  const std::string& op = ctx.node.op;
  if (op == "Compare") {
    for (std::size_t k = 0; k + 1 < ops.size() && k < ctx.node.ops.size(); ++k) {
      if (!comparable(ctx.node.ops[k], ops[k], ops[k + 1])) return bad();
    }
    return ok({PyType::bool_()});
  }
  if (op == "Subscript") return subscript(ctx.node, ops[0], ops[1]);
  if (op == "Slice") return slice(ops);
  if (op == "Iter") return iterate(ops[0]);
  if (op == "Unpack") return unpack(ctx.node, ops[0]);
  if (op == "CallValue") return call_value(ops[0]);
  if (op == "StubCall") {
    const auto* sigs = find_stub(ctx.stubs, ctx.node.name);
    if (!sigs) return ok();
    return call_stub(*sigs, ops);
  }
  if (op == "MethodCall") return method_call(ctx, ops);
  if (op == "Attribute") return attribute(ctx, ops[0]);
  if (ops.size() == 1) return unary(op, ops[0]);
  return arithmetic(op, ops[0], ops[1]);
}

// --- combination enumeration -------------------------------------------------

struct Operands {
  std::vector<int> index;                            // node input index per operand
  std::vector<std::vector<std::pair<PyType, int>>> members;  // (member, candidate index)
  std::size_t combinations = 1;
  bool too_many = false;
};

Operands operands(const TdgNode& node, const std::vector<CandidateSet>& inputs) {
  Operands o;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i < node.inputs.size() && node.inputs[i].kind == EdgeKind::Aux) continue;
    o.index.push_back(static_cast<int>(i));
    std::vector<std::pair<PyType, int>> ms;
    int c = 0;
    for (const auto& t : inputs[i]) {
      for (const auto& m : t.flatten_union()) ms.emplace_back(m, c);
      ++c;
    }
    o.combinations *= std::max<std::size_t>(ms.size(), 1);
    if (o.combinations > kMaxCombinations) o.too_many = true;
    o.members.push_back(std::move(ms));
  }
  return o;
}

Ctx make_ctx(const TdgNode& node, const std::vector<CandidateSet>& inputs, const StubTable& stubs) {
  Ctx ctx{node, stubs, {}};
  for (std::size_t i = 0; i < inputs.size() && i < node.inputs.size(); ++i) {
    if (node.inputs[i].kind == EdgeKind::Aux) ctx.aux[node.inputs[i].tag].push_back(&inputs[i]);
  }
  return ctx;
}

template <typename F>
void for_each_combination(const Operands& o, F&& f) {
  const std::size_t n = o.members.size();
  std::vector<std::size_t> pos(n, 0);
  std::vector<PyType> ops(n);
  std::vector<int> cands(n);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) {
      ops[k] = o.members[k][pos[k]].first;
      cands[k] = o.members[k][pos[k]].second;
    }
    f(ops, cands);
    std::size_t k = 0;
    while (k < n && ++pos[k] == o.members[k].size()) pos[k++] = 0;
    if (k == n) return;
  }
}

// --- aggregate rules -----------------------------------------------------------

bool aggregate_accepts(const TdgNode& node, std::size_t i, const PyType& t) {
  const std::string& op = node.op;
  auto role = i < node.roles.size() ? node.roles[i] : InputRole::Plain;
  auto iterable_or_open = [](const PyType& x) { return is_open(x) || iterable_value(x); };
  if (role == InputRole::Spread) return iterable_or_open(t);
  if (role == InputRole::DictSpread) return t.is_ctor("Dict") || is_open(t);
  if (i == 0) {
    if (op == "Append" || op == "Extend" || op == "Insert") return t.is_ctor("List") || is_open(t);
    if (op == "SetAdd") return t.is_ctor("Set") || is_open(t);
    if (op == "Update") return t.is_ctor("Set") || t.is_ctor("Dict") || is_open(t);
    if (op == "SubscriptStore") return t.is_ctor("Dict") || t.is_ctor("List") || is_open(t);
  }
  if (i == 1 && op == "Extend") return iterable_or_open(t);
  return true;
}

std::vector<PyType> all_types(const CandidateSet& s) { return spread(s.types()); }

std::vector<PyType> aggregate_forward(const TdgNode& node, const std::vector<CandidateSet>& in) {
  const std::string& op = node.op;
  auto role = [&](std::size_t i) {
    return i < node.roles.size() ? node.roles[i] : InputRole::Plain;
  };
  if (op == "BoolOp") {
    std::vector<PyType> all;
    for (const auto& s : in) {
      auto ts = all_types(s);
      all.insert(all.end(), ts.begin(), ts.end());
    }
    return {PyType::union_of(all)};
  }
  if (op == "IfExp") {
    std::vector<PyType> all;
    for (const auto& s : in) all.insert(all.end(), s.begin(), s.end());
    return all;
  }
  if (op == "ListLit" || op == "SetLit" || op == "GeneratorReturn" || op == "ListComp" ||
      op == "SetComp" || op == "GeneratorExp") {
    std::vector<PyType> elems;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (role(i) == InputRole::Spread) {
        for (const auto& t : in[i]) {
          auto e = elements(t);
          elems.insert(elems.end(), e.begin(), e.end());
        }
      } else {
        auto ts = all_types(in[i]);
        elems.insert(elems.end(), ts.begin(), ts.end());
      }
    }
    const char* ctor = (op == "ListLit" || op == "ListComp") ? "List"
                       : (op == "SetLit" || op == "SetComp") ? "Set"
                                                             : "Generator";
    return {PyType::generic(ctor, elems)};
  }
  if (op == "TupleLit") {
    bool any_spread = false;
    std::vector<PyType> positions;
    std::vector<PyType> elems;
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (role(i) == InputRole::Spread) {
        any_spread = true;
        for (const auto& t : in[i]) {
          auto e = elements(t);
          elems.insert(elems.end(), e.begin(), e.end());
        }
      } else {
        positions.push_back(PyType::union_of(in[i].types()));
        auto ts = all_types(in[i]);
        elems.insert(elems.end(), ts.begin(), ts.end());
      }
    }
    if (!any_spread) return {PyType::generic("Tuple", positions)};
    if (elems.empty()) return {PyType::bare("Tuple")};
    return {PyType::generic("Tuple", {PyType::union_of(elems), PyType::ellipsis()})};
  }
  if (op == "DictLit" || op == "DictComp") {
    std::vector<PyType> keys;
    std::vector<PyType> vals;
    std::vector<PyType> extra;
    for (std::size_t i = 0; i < in.size(); ++i) {
      auto r = role(i);
      if (op == "DictComp") r = i == 0 ? InputRole::Key : InputRole::Value;
      if (r == InputRole::DictSpread) {
        for (const auto& t : in[i]) extra.insert(extra.end(), t.params().begin(), t.params().end());
        continue;
      }
      auto ts = all_types(in[i]);
      (r == InputRole::Key ? keys : vals).insert((r == InputRole::Key ? keys : vals).end(),
                                                 ts.begin(), ts.end());
    }
    std::vector<PyType> ps = extra;
    if (!keys.empty() && !vals.empty()) {
      ps.push_back(PyType::union_of(keys));
      ps.push_back(PyType::union_of(vals));
    }
    return {PyType::generic("Dict", ps)};
  }
  // Mutators: the receiver set with the new element types folded in.
  std::vector<PyType> added;
  std::vector<PyType> keys;
  if (op == "Append" || op == "SetAdd") added = all_types(in[1]);
  if (op == "Insert" && in.size() > 2) added = all_types(in[2]);
  if (op == "Extend" || op == "Update") {
    for (const auto& t : in[1]) {
      auto e = elements(t);
      added.insert(added.end(), e.begin(), e.end());
    }
  }
  if (op == "SubscriptStore") {
    keys = all_types(in[1]);
    added = all_types(in[2]);
  }
  std::vector<PyType> out;
  for (const auto& r : in[0]) {
    if (is_open(r)) {
      out.push_back(r);
      continue;
    }
    if (r.is_ctor("Dict")) {
      if (op == "Update") {
        std::vector<PyType> ps = r.params();
        for (const auto& t : in[1]) {
          if (t.is_ctor("Dict")) ps.insert(ps.end(), t.params().begin(), t.params().end());
        }
        out.push_back(PyType::generic("Dict", ps));
        continue;
      }
      auto ks = spread(r.dict_keys());
      auto vs = spread(r.dict_values());
      ks.insert(ks.end(), keys.begin(), keys.end());
      vs.insert(vs.end(), added.begin(), added.end());
      out.push_back(PyType::generic("Dict", {PyType::union_of(ks), PyType::union_of(vs)}));
      continue;
    }
    std::vector<PyType> ps = r.params();
    ps.insert(ps.end(), added.begin(), added.end());
    out.push_back(PyType::generic(r.name(), ps));
  }
  return out;
}

CandidateSet finish(std::vector<PyType> types) {
  for (auto& t : types) t = truncate_depth(t, kDefaultDepthCap);
  return CandidateSet::of(std::move(types), SlotState::Inferred);
}

CandidateSet contradiction() { return CandidateSet::of({}, SlotState::Inferred); }

// Whether some image member survives in `output`, at any truncation depth.
bool image_meets(const CandidateSet& output, const std::vector<PyType>& image) {
  for (const auto& t : image) {
    for (int cap = kDefaultDepthCap; cap >= 0; --cap) {
      if (output.contains(truncate_depth(t, cap))) return true;
    }
  }
  return false;
}

}  // namespace

CandidateSet forward_apply(const TdgNode& node, const std::vector<CandidateSet>& inputs,
                           const StubTable& stubs) {
  const RuleEntry* rule = find_rule(node.op);
  if (!rule) return {};
  switch (rule->shape) {
    case RuleShape::Opaque: return {};
    case RuleShape::Constant:
      if (node.op == "ModuleAttr") {
        auto t = lookup_stub(node.name, stubs);
        if (!t) return {};
        return finish({*t});
      }
      if (!node.constant) return {};
      return finish({*node.constant});
    case RuleShape::Identity:
      if (inputs.empty() || inputs[0].blank()) return {};
      return finish(inputs[0].types());
    case RuleShape::Aggregate: {
      std::vector<CandidateSet> filtered;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].blank()) return {};
        std::vector<PyType> kept;
        for (const auto& t : inputs[i]) {
          if (aggregate_accepts(node, i, t)) kept.push_back(t);
        }
        if (kept.empty()) return contradiction();
        filtered.push_back(CandidateSet::of(std::move(kept)));
      }
      return finish(aggregate_forward(node, filtered));
    }
    case RuleShape::Distributive: break;
  }
  Operands o = operands(node, inputs);
  for (std::size_t k = 0; k < o.index.size(); ++k) {
    if (inputs[static_cast<std::size_t>(o.index[k])].blank()) return {};
  }
  if (o.too_many) return {};
  for (const auto& m : o.members) {
    if (m.empty()) return contradiction();
  }
  if (o.members.empty()) {
    if (node.op == "StubCall" || node.op == "MethodCall" || node.op == "CallValue") {
      // A call without operands (`f()` on a stub).
      Ctx ctx = make_ctx(node, inputs, stubs);
      Outcome r = combination(ctx, {});
      if (!r.valid) return contradiction();
      if (r.image.empty()) return {};
      return finish(r.image);
    }
    return {};
  }
  Ctx ctx = make_ctx(node, inputs, stubs);
  bool any_valid = false;
  bool unknown = false;
  std::vector<PyType> image;
  for_each_combination(o, [&](const std::vector<PyType>& ops, const std::vector<int>&) {
    Outcome r = combination(ctx, ops);
    if (!r.valid) {
      // Overloading operands may define the operation themselves.
      if (std::any_of(ops.begin(), ops.end(), is_o)) any_valid = unknown = true;
      return;
    }
    any_valid = true;
    if (r.image.empty()) unknown = true;
    image.insert(image.end(), r.image.begin(), r.image.end());
  });
  if (!any_valid) return contradiction();
  // A partial image would hide what the unknown combinations produce.
  if (unknown || image.empty()) return {};
  return finish(std::move(image));
}

RejectResult reject_apply(const TdgNode& node, const std::vector<CandidateSet>& inputs,
                          const StubTable& stubs, const CandidateSet* output) {
  RejectResult res;
  res.validated = inputs;
  const RuleEntry* rule = find_rule(node.op);
  if (!rule) return res;
  auto remove = [&](std::size_t i, const PyType& t) {
    res.validated[i].erase(t);
    res.removed.emplace_back(static_cast<int>(i), t);
  };
  if (rule->shape == RuleShape::Aggregate) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (inputs[i].blank()) continue;
      if (i < node.inputs.size() && node.inputs[i].kind == EdgeKind::Aux) continue;
      for (const auto& t : inputs[i]) {
        if (!aggregate_accepts(node, i, t)) remove(i, t);
      }
    }
    return res;
  }
  const bool filter = output != nullptr && !output->blank();
  if (rule->shape == RuleShape::Identity) {
    if (filter && !inputs.empty() && !inputs[0].blank()) {
      for (const auto& t : inputs[0]) {
        if (!image_meets(*output, {t})) remove(0, t);
      }
    }
    return res;
  }
  if (rule->shape != RuleShape::Distributive) return res;
  Operands o = operands(node, inputs);
  if (o.too_many || o.members.empty()) return res;
  for (std::size_t k = 0; k < o.index.size(); ++k) {
    if (inputs[static_cast<std::size_t>(o.index[k])].blank() || o.members[k].empty()) return res;
  }
  Ctx ctx = make_ctx(node, inputs, stubs);
  std::vector<std::vector<bool>> supported(o.members.size());
  for (std::size_t k = 0; k < o.members.size(); ++k) {
    supported[k].assign(inputs[static_cast<std::size_t>(o.index[k])].size(), false);
  }
  for_each_combination(o, [&](const std::vector<PyType>& ops, const std::vector<int>& cands) {
    const bool has_o = std::any_of(ops.begin(), ops.end(), is_o);
    if (!has_o) {
      Outcome r = combination(ctx, ops);
      if (!r.valid) return;
      if (filter && !r.image.empty() && !image_meets(*output, r.image)) return;
    }
    for (std::size_t k = 0; k < cands.size(); ++k) supported[k][static_cast<std::size_t>(cands[k])] = true;
  });
  for (std::size_t k = 0; k < o.members.size(); ++k) {
    const auto i = static_cast<std::size_t>(o.index[k]);
    const auto& types = inputs[i].types();
    for (std::size_t c = 0; c < types.size(); ++c) {
      if (!supported[k][c]) remove(i, types[c]);
    }
  }
  return res;
}

}  // namespace tdgtype
