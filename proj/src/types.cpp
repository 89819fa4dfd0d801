#include "tdgtype/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <sstream>

namespace tdgtype {

namespace {

constexpr std::array<std::string_view, 5> kElementary = {"bool", "bytes", "float", "int", "str"};
constexpr std::array<std::string_view, 7> kGeneric = {"List",     "Tuple",     "Dict", "Set",
                                                      "Callable", "Generator", "Union"};

int kind_rank(TypeKind k) {
  switch (k) {
    case TypeKind::Elementary: return 0;
    case TypeKind::Generic: return 1;
    case TypeKind::User: return 2;
    case TypeKind::None: return 3;
    case TypeKind::TypeType: return 4;
    case TypeKind::Var: return 5;
    case TypeKind::ArgList: return 6;
    case TypeKind::Ellipsis: return 7;
  }
  return 8;
}

void sort_unique(std::vector<PyType>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Expands Union members in place (one level is enough: Unions are normalized).
std::vector<PyType> expand_unions(const std::vector<PyType>& in) {
  std::vector<PyType> out;
  for (const auto& p : in) {
    if (p.is_union()) {
      out.insert(out.end(), p.params().begin(), p.params().end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

// Canonical Dict parameter list: keys sharing the same value set are grouped
// into one (Union[keys], Union[values]) pair.
std::vector<PyType> normalize_dict_params(const std::vector<PyType>& params) {
  std::map<PyType, std::vector<PyType>> values_by_key;
  for (std::size_t i = 0; i + 1 < params.size(); i += 2) {
    for (const auto& k : params[i].flatten_union()) {
      auto& vals = values_by_key[k];
      for (const auto& v : params[i + 1].flatten_union()) vals.push_back(v);
    }
  }
  std::map<std::vector<PyType>, std::vector<PyType>> keys_by_values;
  for (auto& [k, vals] : values_by_key) {
    sort_unique(vals);
    keys_by_values[vals].push_back(k);
  }
  std::vector<std::pair<PyType, PyType>> pairs;
  for (auto& [vals, keys] : keys_by_values) {
    pairs.emplace_back(PyType::union_of(keys), PyType::union_of(vals));
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<PyType> out;
  for (auto& [k, v] : pairs) {
    out.push_back(std::move(k));
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

bool is_generic_ctor(std::string_view name) {
  return std::find(kGeneric.begin(), kGeneric.end(), name) != kGeneric.end();
}

bool is_elementary_name(std::string_view name) {
  return std::find(kElementary.begin(), kElementary.end(), name) != kElementary.end();
}

PyType::PyType() = default;

PyType PyType::elementary(std::string_view name) {
  if (!is_elementary_name(name)) {
    throw std::invalid_argument("not an elementary type: " + std::string(name));
  }
  PyType t;
  t.kind_ = TypeKind::Elementary;
  t.name_ = std::string(name);
  return t;
}

PyType PyType::none() { return PyType{}; }

PyType PyType::type_type() {
  PyType t;
  t.kind_ = TypeKind::TypeType;
  return t;
}

PyType PyType::user(std::string name, bool overloading) {
  PyType t;
  t.kind_ = TypeKind::User;
  t.name_ = std::move(name);
  t.overloading_ = overloading;
  return t;
}

PyType PyType::ellipsis() {
  PyType t;
  t.kind_ = TypeKind::Ellipsis;
  return t;
}

PyType PyType::var(std::string name, bool iterable) {
  PyType t;
  t.kind_ = TypeKind::Var;
  t.name_ = std::move(name);
  t.iterable_var_ = iterable;
  return t;
}

PyType PyType::generic(std::string_view ctor, std::vector<PyType> params) {
  if (!is_generic_ctor(ctor)) {
    throw std::invalid_argument("not a generic constructor: " + std::string(ctor));
  }
  if (ctor == "Union") return union_of(std::move(params));
  PyType t;
  t.kind_ = TypeKind::Generic;
  t.name_ = std::string(ctor);
  if (ctor == "List" || ctor == "Set" || ctor == "Generator") {
    params = expand_unions(params);
    sort_unique(params);
  } else if (ctor == "Dict") {
    if (params.size() % 2 != 0) {
      throw std::invalid_argument("Dict needs key/value pairs");
    }
    params = normalize_dict_params(params);
  } else if (ctor == "Callable") {
    if (!params.empty() && params.size() != 2) {
      throw std::invalid_argument("Callable needs an argument list and a return type");
    }
  }
  t.params_ = std::move(params);
  return t;
}

PyType PyType::callable(std::vector<PyType> args, PyType ret) {
  PyType arglist;
  arglist.kind_ = TypeKind::ArgList;
  arglist.params_ = std::move(args);
  return generic("Callable", {std::move(arglist), std::move(ret)});
}

PyType PyType::callable_any_args(PyType ret) {
  return generic("Callable", {ellipsis(), std::move(ret)});
}

PyType PyType::union_of(std::vector<PyType> members) {
  members = expand_unions(members);
  sort_unique(members);
  if (members.size() == 1) return members.front();
  PyType t;
  t.kind_ = TypeKind::Generic;
  t.name_ = "Union";
  t.params_ = std::move(members);
  return t;
}

bool PyType::is_numeric() const {
  return kind_ == TypeKind::Elementary && (name_ == "bool" || name_ == "int" || name_ == "float");
}

bool PyType::contains_var() const {
  if (kind_ == TypeKind::Var) return true;
  return std::any_of(params_.begin(), params_.end(),
                     [](const PyType& p) { return p.contains_var(); });
}

const std::vector<PyType>& PyType::callable_args() const {
  if (!is_ctor("Callable") || params_.empty()) throw NotCallable("no argument list");
  return params_[0].params_;
}

bool PyType::callable_has_ellipsis_args() const {
  return is_ctor("Callable") && !params_.empty() && params_[0].kind_ == TypeKind::Ellipsis;
}

const PyType& PyType::callable_return() const {
  if (!is_ctor("Callable") || params_.size() != 2) throw NotCallable("no return type");
  return params_[1];
}

std::vector<PyType> PyType::dict_keys() const {
  std::vector<PyType> out;
  for (std::size_t i = 0; i + 1 < params_.size(); i += 2) out.push_back(params_[i]);
  return out;
}

std::vector<PyType> PyType::dict_values() const {
  std::vector<PyType> out;
  for (std::size_t i = 0; i + 1 < params_.size(); i += 2) out.push_back(params_[i + 1]);
  return out;
}

std::vector<PyType> PyType::flatten_union() const {
  if (is_union()) return params_;
  return {*this};
}

int PyType::depth() const {
  int inner = 0;
  for (const auto& p : params_) inner = std::max(inner, p.depth());
  if (kind_ == TypeKind::Generic && !params_.empty() && name_ != "Union") return inner + 1;
  return inner;
}

bool operator==(const PyType& a, const PyType& b) {
  return a.kind_ == b.kind_ && a.name_ == b.name_ && a.iterable_var_ == b.iterable_var_ &&
         a.params_ == b.params_;
}

std::strong_ordering operator<=>(const PyType& a, const PyType& b) {
  if (auto c = kind_rank(a.kind_) <=> kind_rank(b.kind_); c != 0) return c;
  if (auto c = a.name_ <=> b.name_; c != 0) return c;
  if (auto c = a.iterable_var_ <=> b.iterable_var_; c != 0) return c;
  const auto n = std::min(a.params_.size(), b.params_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (auto c = a.params_[i] <=> b.params_[i]; c != 0) return c;
  }
  return a.params_.size() <=> b.params_.size();
}

namespace {

PyType rebuild(const PyType& t, std::vector<PyType> params) {
  if (t.kind() == TypeKind::Generic) {
    if (t.name() == "Callable" && params.size() == 2 && params[0].is(TypeKind::ArgList)) {
      return PyType::callable(params[0].params(), params[1]);
    }
    return PyType::generic(t.name(), std::move(params));
  }
  return t;
}

PyType truncate_impl(const PyType& t, int remaining) {
  if (t.params().empty()) return t;
  if (t.kind() == TypeKind::Generic && t.name() != "Union" && remaining <= 0) {
    return PyType::bare(t.name());
  }
  const bool transparent = t.is_union() || t.is(TypeKind::ArgList);
  std::vector<PyType> params;
  for (const auto& p : t.params()) {
    params.push_back(truncate_impl(p, transparent ? remaining : remaining - 1));
  }
  if (t.is(TypeKind::ArgList)) {
    // Callable args are rebuilt by the enclosing Callable.
    PyType copy = PyType::callable(std::move(params), PyType::none());
    return copy.params()[0];
  }
  return rebuild(t, std::move(params));
}

}  // namespace

PyType truncate_depth(const PyType& t, int cap) { return truncate_impl(t, cap); }

PyType erase_params(const PyType& t) {
  if (t.kind() == TypeKind::Generic) return PyType::bare(t.name());
  return t;
}

TypeParseError::TypeParseError(std::size_t position, const std::string& message)
    : std::runtime_error("type parse error at " + std::to_string(position) + ": " + message),
      position_(position) {}

// --- parsing -------------------------------------------------------------

namespace {

class TypeExprParser {
 public:
  TypeExprParser(std::string_view text, TypeSyntax syntax) : text_(text), syntax_(syntax) {}

  PyType parse_all() {
    PyType t = parse_union();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw TypeParseError(pos_, msg); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  std::string identifier() {
    skip_ws();
    const auto start = pos_;
    while (pos_ < text_.size()) {
      const auto c = static_cast<unsigned char>(text_[pos_]);
      if (std::isalnum(c) || c == '_' || c == '.' || c >= 0x80) {
        ++pos_;
      } else {
        break;
      }
    }
    if (start == pos_) fail("expected a type name");
    return std::string(text_.substr(start, pos_ - start));
  }

  PyType parse_union() {
    std::vector<PyType> members{parse_atom()};
    while (consume('|')) members.push_back(parse_atom());
    if (members.size() == 1) return members.front();
    return PyType::union_of(std::move(members));
  }

  std::vector<PyType> parse_params() {
    std::vector<PyType> params;
    if (consume(']')) return params;
    while (true) {
      params.push_back(parse_union());
      if (consume(']')) break;
      expect(',');
      if (consume(']')) break;  // trailing comma
    }
    return params;
  }

  PyType parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of type");
    const char c = text_[pos_];
    if (c == '\'' || c == '"') {
      const auto close = text_.find(c, pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated quoted type");
      TypeExprParser inner(text_.substr(pos_ + 1, close - pos_ - 1), syntax_);
      PyType t = inner.parse_all();
      pos_ = close + 1;
      return t;
    }
    if (c == '[') {
      ++pos_;
      PyType list = PyType::callable(parse_params(), PyType::none());
      return list.params()[0];
    }
    if (c == '(') {
      ++pos_;
      expect(')');
      return PyType::bare("Tuple");
    }
    if (text_.substr(pos_, 3) == "...") {
      pos_ += 3;
      return PyType::ellipsis();
    }
    const auto name_pos = pos_;
    std::string name = identifier();
    std::optional<std::vector<PyType>> params;
    if (consume('[')) params = parse_params();
    try {
      return build(name, std::move(params));
    } catch (const std::invalid_argument& e) {
      pos_ = name_pos;
      fail(e.what());
    }
  }

  static std::string canonical_name(std::string name) {
    for (std::string_view prefix : {"typing.", "builtins.", "typing_extensions."}) {
      if (name.rfind(prefix, 0) == 0) {
        std::string rest = name.substr(prefix.size());
        if (rest.find('.') == std::string::npos) return rest;
      }
    }
    return name;
  }

  PyType build(std::string raw, std::optional<std::vector<PyType>> params) {
    const std::string name = canonical_name(std::move(raw));
    static const std::map<std::string, std::string, std::less<>> kCtorAliases = {
        {"List", "List"},           {"list", "List"},           {"Tuple", "Tuple"},
        {"tuple", "Tuple"},         {"Dict", "Dict"},           {"dict", "Dict"},
        {"Set", "Set"},             {"set", "Set"},             {"FrozenSet", "Set"},
        {"frozenset", "Set"},       {"Callable", "Callable"},   {"Generator", "Generator"},
        {"Union", "Union"},         {"collections.abc.Callable", "Callable"},
    };
    if (syntax_ == TypeSyntax::Stub) {
      if (name == "Iterable" && params && params->size() == 1 &&
          (*params)[0].is(TypeKind::Var)) {
        return PyType::var((*params)[0].name(), true);
      }
      if (name.size() == 1 && std::isupper(static_cast<unsigned char>(name[0]))) {
        if (params) throw std::invalid_argument("placeholder takes no parameters");
        return PyType::var(name);
      }
    }
    if (name == "Any" || name == "object") {
      throw std::invalid_argument(name + " is excluded from the type grammar");
    }
    if (name == "Optional") {
      if (!params || params->size() != 1) throw std::invalid_argument("Optional takes one type");
      return PyType::union_of({(*params)[0], PyType::none()});
    }
    if (name == "None" || name == "NoneType") return PyType::none();
    if (name == "type" || name == "Type") return PyType::type_type();
    if (name == "Text") return PyType::str_();
    if (is_elementary_name(name)) {
      if (params) throw std::invalid_argument(name + " takes no parameters");
      return PyType::elementary(name);
    }
    if (auto it = kCtorAliases.find(name); it != kCtorAliases.end()) {
      const std::string& ctor = it->second;
      if (!params) return PyType::bare(ctor);
      auto ps = std::move(*params);
      if (ctor == "Callable") {
        if (ps.size() != 2) throw std::invalid_argument("Callable[[args], ret] expected");
        if (ps[0].is(TypeKind::Ellipsis)) return PyType::callable_any_args(ps[1]);
        if (!ps[0].is(TypeKind::ArgList)) throw std::invalid_argument("Callable args must be a list");
        return PyType::callable(ps[0].params(), ps[1]);
      }
      for (const auto& p : ps) {
        if (p.is(TypeKind::ArgList)) throw std::invalid_argument("unexpected argument list");
        if (p.is(TypeKind::Ellipsis) && ctor != "Tuple") {
          throw std::invalid_argument("unexpected '...'");
        }
      }
      if (ctor == "Generator" && ps.size() == 3) ps.resize(1);  // Generator[Yield, Send, Return]
      if (ctor == "Union" && ps.empty()) throw std::invalid_argument("empty Union");
      return PyType::generic(ctor, std::move(ps));
    }
    if (params) {
      // Unknown parametrized names (Sequence[int], Literal[...]) keep only
      // their name; the grammar has no slot for their parameters.
      return PyType::user(name);
    }
    return PyType::user(name);
  }

  std::string_view text_;
  TypeSyntax syntax_;
  std::size_t pos_ = 0;
};

void render_into(const PyType& t, std::ostringstream& out);

void render_list(const std::vector<PyType>& ps, std::ostringstream& out) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) out << ", ";
    render_into(ps[i], out);
  }
}

void render_into(const PyType& t, std::ostringstream& out) {
  switch (t.kind()) {
    case TypeKind::Elementary:
    case TypeKind::User: out << t.name(); return;
    case TypeKind::None: out << "None"; return;
    case TypeKind::TypeType: out << "type"; return;
    case TypeKind::Ellipsis: out << "..."; return;
    case TypeKind::Var:
      if (t.iterable_var()) {
        out << "Iterable[" << t.name() << "]";
      } else {
        out << t.name();
      }
      return;
    case TypeKind::ArgList:
      out << "[";
      render_list(t.params(), out);
      out << "]";
      return;
    case TypeKind::Generic: break;
  }
  if (t.params().empty()) {
    out << t.name();
    return;
  }
  if (t.is_union()) {
    const auto& ps = t.params();
    const bool has_none = ps.back().is(TypeKind::None);
    if (has_none && ps.size() == 2) {
      out << "Optional[";
      render_into(ps.front(), out);
      out << "]";
      return;
    }
  }
  if (t.is_ctor("Generator") && t.params().size() > 1) {
    // Generator[Y, S, R] is the three-argument typing form, so several
    // yield types are wrapped in a Union.
    out << "Generator[Union[";
    render_list(t.params(), out);
    out << "]]";
    return;
  }
  out << t.name() << "[";
  render_list(t.params(), out);
  out << "]";
}

}  // namespace

PyType parse_type_expr(std::string_view text, TypeSyntax syntax) {
  TypeExprParser p(text, syntax);
  return p.parse_all();
}

std::optional<PyType> try_parse_type_expr(std::string_view text, TypeSyntax syntax) {
  try {
    return parse_type_expr(text, syntax);
  } catch (const TypeParseError&) {
    return std::nullopt;
  }
}

std::string render(const PyType& t) {
  std::ostringstream out;
  render_into(t, out);
  return out.str();
}

// --- candidate sets ------------------------------------------------------

const char* to_string(SlotState s) {
  switch (s) {
    case SlotState::Blank: return "blank";
    case SlotState::Inferred: return "inferred";
    case SlotState::Recommended: return "recommended";
    case SlotState::Validated: return "validated";
  }
  return "?";
}

CandidateSet::CandidateSet(std::initializer_list<PyType> types, SlotState state)
    : types_(types), state_(state) {
  sort_unique(types_);
}

CandidateSet CandidateSet::of(std::vector<PyType> types, SlotState state) {
  CandidateSet c;
  c.types_ = std::move(types);
  sort_unique(c.types_);
  c.state_ = state;
  return c;
}

bool CandidateSet::contains(const PyType& t) const {
  return std::binary_search(types_.begin(), types_.end(), t);
}

bool CandidateSet::insert(const PyType& t) {
  auto it = std::lower_bound(types_.begin(), types_.end(), t);
  if (state_ == SlotState::Blank) state_ = SlotState::Inferred;
  if (it != types_.end() && *it == t) return false;
  types_.insert(it, t);
  return true;
}

bool CandidateSet::erase(const PyType& t) {
  auto it = std::lower_bound(types_.begin(), types_.end(), t);
  if (it == types_.end() || !(*it == t)) return false;
  types_.erase(it);
  return true;
}

void CandidateSet::clear_to_blank() {
  types_.clear();
  state_ = SlotState::Blank;
}

CandidateSet CandidateSet::joined() const {
  std::vector<PyType> out;
  std::map<std::string, std::vector<PyType>> merged;  // ctor -> params
  std::map<std::string, bool> seen;
  for (const auto& t : types_) {
    const bool joinable = t.kind() == TypeKind::Generic &&
                          (t.name() == "List" || t.name() == "Set" || t.name() == "Dict" ||
                           t.name() == "Generator");
    if (!joinable) {
      out.push_back(t);
      continue;
    }
    seen[t.name()] = true;
    auto& ps = merged[t.name()];
    ps.insert(ps.end(), t.params().begin(), t.params().end());
  }
  for (auto& [ctor, ps] : merged) out.push_back(PyType::generic(ctor, std::move(ps)));
  return CandidateSet::of(std::move(out), state_);
}

std::string CandidateSet::render() const {
  if (types_.empty()) return "";
  if (types_.size() == 1) return tdgtype::render(types_.front());
  return tdgtype::render(PyType::union_of(types_));
}

std::optional<PyType> as_single_type(const CandidateSet& cands) {
  if (cands.empty()) return std::nullopt;
  if (cands.size() == 1) return cands.types().front();
  return PyType::union_of(cands.types());
}

// --- valid-type specifications ------------------------------------------

ValidTypeSpec& ValidTypeSpec::add(PyType exact) {
  exact_.push_back(std::move(exact));
  return *this;
}

ValidTypeSpec& ValidTypeSpec::add(Wildcard w) {
  wildcards_ |= 1U << static_cast<unsigned>(w);
  return *this;
}

ValidTypeSpec& ValidTypeSpec::add_ctor(std::string ctor) {
  ctors_.push_back(std::move(ctor));
  return *this;
}

ValidTypeSpec ValidTypeSpec::parse(std::string_view atoms) {
  ValidTypeSpec spec;
  std::istringstream in{std::string(atoms)};
  std::string tok;
  while (in >> tok) {
    if (tok == "G") {
      spec.add(Wildcard::AnyElementary);
    } else if (tok == "A") {
      spec.add(Wildcard::AnyGeneric);
    } else if (tok == "U") {
      spec.add(Wildcard::AnyUser);
    } else if (tok == "O") {
      spec.add(Wildcard::AnyOverloading);
    } else if (is_generic_ctor(tok)) {
      spec.add_ctor(tok);
    } else {
      spec.add(parse_type_expr(tok));
    }
  }
  return spec;
}

bool ValidTypeSpec::matches_atom(const PyType& t) const {
  auto has = [this](Wildcard w) { return (wildcards_ & (1U << static_cast<unsigned>(w))) != 0; };
  if (has(Wildcard::AnyElementary) && t.is(TypeKind::Elementary)) return true;
  if (has(Wildcard::AnyGeneric) && t.is(TypeKind::Generic)) return true;
  if (has(Wildcard::AnyUser) && t.is(TypeKind::User)) return true;
  if (has(Wildcard::AnyOverloading) && t.is_overloading_user()) return true;
  if (t.is(TypeKind::Generic) &&
      std::find(ctors_.begin(), ctors_.end(), t.name()) != ctors_.end()) {
    return true;
  }
  return std::find(exact_.begin(), exact_.end(), t) != exact_.end();
}

bool ValidTypeSpec::matches(const PyType& t) const {
  if (matches_atom(t)) return true;
  if (t.is_union()) {
    return std::any_of(t.params().begin(), t.params().end(),
                       [this](const PyType& m) { return matches_atom(m); });
  }
  return false;
}

CandidateSet intersect(const CandidateSet& cands, const ValidTypeSpec& spec) {
  std::vector<PyType> kept;
  for (const auto& t : cands) {
    if (spec.matches(t)) kept.push_back(t);
  }
  return CandidateSet::of(std::move(kept), cands.state());
}

// --- helper projections --------------------------------------------------

PyType more_precise(const PyType& a, const PyType& b) {
  auto valid = [](const PyType& t) { return t.is_numeric() || t.is_overloading_user(); };
  if (!valid(a) || !valid(b)) {
    throw PrecisionUndefined("more_precise needs bool/int/float or an overloading type, got " +
                             render(a) + " and " + render(b));
  }
  if (a.is_overloading_user()) return a;
  if (b.is_overloading_user()) return b;
  auto rank = [](const PyType& t) {
    if (t.name() == "float") return 2;
    if (t.name() == "int") return 1;
    return 0;
  };
  return rank(a) >= rank(b) ? a : b;
}

bool is_iterable(const PyType& t) {
  if (t.is_union()) {
    return std::any_of(t.params().begin(), t.params().end(),
                       [](const PyType& m) { return is_iterable(m); });
  }
  if (t.is(TypeKind::Generic)) return t.name() != "Callable";
  return t.is_elementary("str") || t.is_elementary("bytes");
}

std::vector<PyType> element_types_or_empty(const PyType& t) {
  std::vector<PyType> out;
  if (t.is_union()) {
    for (const auto& m : t.params()) {
      auto sub = element_types_or_empty(m);
      out.insert(out.end(), sub.begin(), sub.end());
    }
    return out;
  }
  if (t.is_ctor("List") || t.is_ctor("Set") || t.is_ctor("Generator")) return t.params();
  if (t.is_ctor("Tuple")) {
    for (const auto& p : t.params()) {
      if (!p.is(TypeKind::Ellipsis)) out.push_back(p);
    }
    return out;
  }
  if (t.is_ctor("Dict")) return t.dict_keys();
  if (t.is_elementary("str")) return {PyType::str_()};
  if (t.is_elementary("bytes")) return {PyType::int_()};
  return out;
}

CandidateSet element_type(const PyType& t) {
  if (!is_iterable(t)) throw NotIterable(render(t) + " is not iterable");
  auto elems = element_types_or_empty(t);
  if (elems.empty()) return {};
  return CandidateSet::of(std::move(elems));
}

CandidateSet value_type(const PyType& t) {
  if (!t.is_ctor("Dict")) throw NotADict(render(t) + " is not a Dict");
  auto vals = t.dict_values();
  if (vals.empty()) return {};
  return CandidateSet::of(std::move(vals));
}

CandidateSet return_type(const PyType& t) {
  if (!t.is_ctor("Callable")) throw NotCallable(render(t) + " is not callable");
  if (t.params().empty()) return {};
  return CandidateSet{t.callable_return()};
}

}  // namespace tdgtype
