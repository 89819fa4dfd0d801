#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdgtype/python_ast.hpp"

namespace tdgtype {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(int line, int col, const std::string& message);
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] int col() const { return col_; }
  [[nodiscard]] const std::string& message() const { return message_; }

 private:
  int line_;
  int col_;
  std::string message_;
};

struct ImportRecord {
  std::string module;                // dotted module path (without leading dots)
  int level = 0;                     // relative import level
  std::vector<std::string> names;    // imported members; empty for `import module`
  std::optional<std::string> alias;  // `import module as alias`
  std::vector<std::optional<std::string>> member_aliases;
  int line = 0;
};

struct ModuleAst {
  std::string source_path;
  py::Block body;
  // Every def in the file, including methods and nested functions, in source order.
  std::vector<std::shared_ptr<py::FunctionDef>> functions;
  std::vector<std::shared_ptr<py::ClassDef>> classes;
  std::vector<ImportRecord> imports;
  // `Name = namedtuple(...)` / NamedTuple calls at module level.
  std::vector<std::string> namedtuples;

  [[nodiscard]] const py::FunctionDef* find_function(std::string_view qualified_name) const;
  [[nodiscard]] const py::ClassDef* find_class(std::string_view name) const;
};

ModuleAst parse_module(std::string_view source, std::string path = "<string>");

struct ClassInfo {
  std::string qualified_name;
  std::string defining_file;  // empty when the origin is unknown
  bool overloads_operators = false;
  bool origin_known = false;
};

struct UserTypeSet {
  std::map<std::string, ClassInfo> entries;
  // `import package` statements whose source was not found.
  std::vector<std::string> unresolved_packages;
  // Module aliases in scope: alias -> dotted module path.
  std::map<std::string, std::string> module_aliases;

  [[nodiscard]] bool contains(std::string_view name) const {
    return entries.find(std::string(name)) != entries.end();
  }
  [[nodiscard]] bool overloads(std::string_view name) const;

  friend bool operator==(const UserTypeSet& a, const UserTypeSet& b) {
    return a.unresolved_packages == b.unresolved_packages && a.module_aliases == b.module_aliases &&
           a.entries.size() == b.entries.size() &&
           std::equal(a.entries.begin(), a.entries.end(), b.entries.begin(),
                      [](const auto& x, const auto& y) {
                        return x.first == y.first &&
                               x.second.qualified_name == y.second.qualified_name &&
                               x.second.defining_file == y.second.defining_file &&
                               x.second.overloads_operators == y.second.overloads_operators &&
                               x.second.origin_known == y.second.origin_known;
                      });
  }
};

// The fixed operator dunder list (arithmetic, reflected, in-place, bitwise,
// comparison, container protocol).
const std::vector<std::string_view>& operator_dunders();

bool detect_operator_overloading(const py::ClassDef& class_def);

UserTypeSet collect_user_types(const ModuleAst& module,
                               const std::vector<std::string>& search_paths = {});

enum class AnnotationKind { Argument, Return, Local };

const char* to_string(AnnotationKind k);
std::optional<AnnotationKind> annotation_kind_from_string(std::string_view s);

struct GroundTruthRecord {
  std::string function;  // qualified name; class name for class attributes; "" at module level
  AnnotationKind kind = AnnotationKind::Local;
  std::string name;        // argument or variable name; empty for returns
  std::string annotation;  // annotation source text
  int line = 0;
};

struct StrippedSource {
  std::string source;
  std::vector<GroundTruthRecord> truths;
};

// Removes parameter, return and variable annotations, recording each one.
StrippedSource strip_annotations(std::string_view source, std::string path = "<string>");

class FileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads a whole file; throws FileError when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace tdgtype
