#pragma once

// Type algebra for Python values: elementary, generic, user-defined, None and
// `type`. Generic containers are heterogeneous: List[int, Placeholder] means a
// list whose elements are int or Placeholder.

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tdgtype {

inline constexpr int kDefaultDepthCap = 5;

enum class TypeKind : unsigned char {
  Elementary,  // int, float, str, bool, bytes
  Generic,     // List, Tuple, Dict, Set, Callable, Generator, Union
  User,        // classes and named tuples found in code
  None,
  TypeType,    // the `type` type
  ArgList,     // argument list of a Callable (internal)
  Ellipsis,    // `...` inside Tuple or Callable (internal)
  Var,         // stub placeholder such as X or Iterable[X] (stubs only)
};

class PyType {
 public:
  PyType();  // None

  static PyType elementary(std::string_view name);
  static PyType int_() { return elementary("int"); }
  static PyType float_() { return elementary("float"); }
  static PyType str_() { return elementary("str"); }
  static PyType bool_() { return elementary("bool"); }
  static PyType bytes_() { return elementary("bytes"); }
  static PyType none();
  static PyType type_type();
  static PyType user(std::string name, bool overloading = false);
  static PyType ellipsis();
  static PyType var(std::string name, bool iterable = false);

  // Builds a normalized generic. Union collapses to its single member when
  // only one remains, so the result is not always Generic.
  static PyType generic(std::string_view ctor, std::vector<PyType> params = {});
  static PyType bare(std::string_view ctor) { return generic(ctor); }
  static PyType callable(std::vector<PyType> args, PyType ret);
  static PyType callable_any_args(PyType ret);
  static PyType union_of(std::vector<PyType> members);

  [[nodiscard]] TypeKind kind() const { return kind_; }
  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] const std::vector<PyType>& params() const { return params_; }
  [[nodiscard]] bool overloading() const { return overloading_; }
  [[nodiscard]] bool iterable_var() const { return iterable_var_; }

  [[nodiscard]] bool is(TypeKind k) const { return kind_ == k; }
  [[nodiscard]] bool is_elementary(std::string_view n) const {
    return kind_ == TypeKind::Elementary && name_ == n;
  }
  [[nodiscard]] bool is_ctor(std::string_view ctor) const {
    return kind_ == TypeKind::Generic && name_ == ctor;
  }
  [[nodiscard]] bool is_union() const { return is_ctor("Union"); }
  [[nodiscard]] bool is_bare() const { return kind_ == TypeKind::Generic && params_.empty(); }
  // bool, int or float.
  [[nodiscard]] bool is_numeric() const;
  [[nodiscard]] bool is_overloading_user() const {
    return kind_ == TypeKind::User && overloading_;
  }
  [[nodiscard]] bool contains_var() const;

  // Callable accessors; valid only for non-bare Callable.
  [[nodiscard]] const std::vector<PyType>& callable_args() const;
  [[nodiscard]] bool callable_has_ellipsis_args() const;
  [[nodiscard]] const PyType& callable_return() const;

  // Dict key/value params in order of appearance.
  [[nodiscard]] std::vector<PyType> dict_keys() const;
  [[nodiscard]] std::vector<PyType> dict_values() const;

  // Members of a Union, or the type itself.
  [[nodiscard]] std::vector<PyType> flatten_union() const;

  // Parametric nesting depth: atoms are 0, G[...] is 1 + max(params).
  [[nodiscard]] int depth() const;

  void set_overloading(bool v) { overloading_ = v; }

  friend bool operator==(const PyType& a, const PyType& b);
  friend std::strong_ordering operator<=>(const PyType& a, const PyType& b);

 private:
  TypeKind kind_ = TypeKind::None;
  std::string name_;
  std::vector<PyType> params_;
  bool overloading_ = false;
  bool iterable_var_ = false;
};

// Drops parameters of generics nested deeper than `cap`.
PyType truncate_depth(const PyType& t, int cap = kDefaultDepthCap);

// Replaces every generic by its bare constructor (all depths).
PyType erase_params(const PyType& t);

bool is_generic_ctor(std::string_view name);
bool is_elementary_name(std::string_view name);

class TypeParseError : public std::runtime_error {
 public:
  TypeParseError(std::size_t position, const std::string& message);
  [[nodiscard]] std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

enum class TypeSyntax { Annotation, Stub };

// Parses the bracketed annotation grammar. `Optional[X]` and `X | Y` are
// accepted as sugar for Union. Stub syntax additionally admits the
// placeholders X, K, V, T and `Iterable[X]`.
PyType parse_type_expr(std::string_view text, TypeSyntax syntax = TypeSyntax::Annotation);
std::optional<PyType> try_parse_type_expr(std::string_view text,
                                          TypeSyntax syntax = TypeSyntax::Annotation);
std::string render(const PyType& t);

// --- candidate sets ------------------------------------------------------

enum class SlotState { Blank, Inferred, Recommended, Validated };

const char* to_string(SlotState s);

class CandidateSet {
 public:
  CandidateSet() = default;
  CandidateSet(std::initializer_list<PyType> types, SlotState state = SlotState::Inferred);
  static CandidateSet of(std::vector<PyType> types, SlotState state = SlotState::Inferred);

  [[nodiscard]] const std::vector<PyType>& types() const { return types_; }
  [[nodiscard]] SlotState state() const { return state_; }
  [[nodiscard]] bool blank() const { return state_ == SlotState::Blank; }
  [[nodiscard]] bool empty() const { return types_.empty(); }
  [[nodiscard]] std::size_t size() const { return types_.size(); }
  [[nodiscard]] bool contains(const PyType& t) const;

  void set_state(SlotState s) { state_ = s; }
  // Returns true when the type was not present.
  bool insert(const PyType& t);
  bool erase(const PyType& t);
  void clear_to_blank();

  auto begin() const { return types_.begin(); }
  auto end() const { return types_.end(); }

  // Union of same-constructor List/Set/Dict/Generator members into one
  // heterogeneous container; bare constructors are absorbed.
  [[nodiscard]] CandidateSet joined() const;

  // Top-level rendering: multiple members render as Union.
  [[nodiscard]] std::string render() const;

  friend bool operator==(const CandidateSet& a, const CandidateSet& b) {
    return a.state_ == b.state_ && a.types_ == b.types_;
  }

 private:
  std::vector<PyType> types_;  // sorted, unique
  SlotState state_ = SlotState::Blank;
};

// Collapses a set into a single type: its only member, or a Union.
std::optional<PyType> as_single_type(const CandidateSet& cands);

// --- valid-type specifications ------------------------------------------

class ValidTypeSpec {
 public:
  enum class Wildcard { AnyElementary, AnyGeneric, AnyUser, AnyOverloading };

  ValidTypeSpec() = default;

  ValidTypeSpec& add(PyType exact);
  ValidTypeSpec& add(Wildcard w);
  // Any instantiation of the constructor, bare or parametrized.
  ValidTypeSpec& add_ctor(std::string ctor);

  // Builds from a compact list such as "bool int float O" or "G List Tuple O"
  // where G/A/U/O are the category wildcards.
  static ValidTypeSpec parse(std::string_view atoms);

  [[nodiscard]] bool matches(const PyType& t) const;
  [[nodiscard]] bool empty() const { return exact_.empty() && ctors_.empty() && wildcards_ == 0; }

 private:
  [[nodiscard]] bool matches_atom(const PyType& t) const;

  std::vector<PyType> exact_;
  std::vector<std::string> ctors_;
  unsigned wildcards_ = 0;
};

CandidateSet intersect(const CandidateSet& cands, const ValidTypeSpec& spec);

// --- helper projections --------------------------------------------------

class PrecisionUndefined : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class NotIterable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class NotADict : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class NotCallable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// float > int > bool; an overloading user type wins over numerics.
PyType more_precise(const PyType& a, const PyType& b);
CandidateSet element_type(const PyType& t);
CandidateSet value_type(const PyType& t);
CandidateSet return_type(const PyType& t);

// Non-throwing variants used by the rule engine.
bool is_iterable(const PyType& t);
std::vector<PyType> element_types_or_empty(const PyType& t);

}  // namespace tdgtype
