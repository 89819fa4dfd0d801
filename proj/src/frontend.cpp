#include "tdgtype/frontend.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tdgtype/types.hpp"

namespace tdgtype {

using namespace py;
namespace fs = std::filesystem;

const std::vector<std::string_view>& operator_dunders() {
  static const std::vector<std::string_view> kDunders = {
      // arithmetic
      "__add__", "__sub__", "__mul__", "__matmul__", "__truediv__", "__floordiv__", "__mod__",
      "__divmod__", "__pow__", "__neg__", "__pos__", "__abs__",
      // reflected
      "__radd__", "__rsub__", "__rmul__", "__rmatmul__", "__rtruediv__", "__rfloordiv__",
      "__rmod__", "__rdivmod__", "__rpow__", "__rlshift__", "__rrshift__", "__rand__",
      "__rxor__", "__ror__",
      // in-place
      "__iadd__", "__isub__", "__imul__", "__imatmul__", "__itruediv__", "__ifloordiv__",
      "__imod__", "__ipow__", "__ilshift__", "__irshift__", "__iand__", "__ixor__", "__ior__",
      // bitwise
      "__lshift__", "__rshift__", "__and__", "__xor__", "__or__", "__invert__",
      // comparison
      "__lt__", "__le__", "__eq__", "__ne__", "__gt__", "__ge__",
      // container protocol
      "__getitem__", "__setitem__", "__delitem__", "__contains__", "__len__", "__iter__"};
  return kDunders;
}

bool detect_operator_overloading(const ClassDef& class_def) {
  const auto& dunders = operator_dunders();
  for (const auto& s : class_def.body) {
    if (s->kind != StmtKind::FunctionDef) continue;
    if (std::find(dunders.begin(), dunders.end(), s->function->name) != dunders.end()) {
      return true;
    }
  }
  return false;
}

bool UserTypeSet::overloads(std::string_view name) const {
  auto it = entries.find(std::string(name));
  return it != entries.end() && it->second.overloads_operators;
}

namespace {

// Names that belong to the type grammar or to `typing` and must never be
// treated as user classes.
bool is_reserved_type_name(std::string_view name) {
  static const std::set<std::string_view> kReserved = {
      "Any",      "Optional", "Iterable", "Iterator", "Sequence", "Mapping",  "MutableMapping",
      "Type",     "TypeVar",  "Generic",  "Protocol", "NamedTuple", "Text",   "FrozenSet",
      "NoReturn", "ClassVar", "Final",    "Literal",  "AnyStr",   "DefaultDict", "OrderedDict",
      "Awaitable", "Coroutine", "AsyncIterator", "AsyncGenerator", "Collection", "Hashable",
      "Sized",    "TypedDict", "Deque",   "Counter"};
  return is_generic_ctor(name) || is_elementary_name(name) || kReserved.count(name) > 0 ||
         name == "None" || name == "type" || name == "object";
}

bool is_typing_module(std::string_view module) {
  return module == "typing" || module == "typing_extensions" || module == "collections.abc" ||
         module == "collections" || module == "__future__";
}

bool is_cap_words(std::string_view name) {
  if (name.empty() || !std::isupper(static_cast<unsigned char>(name[0]))) return false;
  return std::any_of(name.begin(), name.end(),
                     [](char c) { return std::islower(static_cast<unsigned char>(c)); });
}

std::optional<fs::path> resolve_module(const ImportRecord& imp, const std::string& source_path,
                                       const std::vector<std::string>& search_paths) {
  std::string rel = imp.module;
  std::replace(rel.begin(), rel.end(), '.', '/');
  std::vector<fs::path> bases;
  if (imp.level > 0) {
    fs::path base = fs::path(source_path).parent_path();
    for (int i = 1; i < imp.level; ++i) base = base.parent_path();
    bases.push_back(base);
  } else {
    for (const auto& sp : search_paths) bases.emplace_back(sp);
  }
  for (const auto& base : bases) {
    std::vector<fs::path> candidates;
    if (!rel.empty()) candidates.push_back(base / (rel + ".py"));
    candidates.push_back(rel.empty() ? base / "__init__.py" : base / rel / "__init__.py");
    for (const auto& c : candidates) {
      std::error_code ec;
      if (fs::is_regular_file(c, ec)) return c;
    }
  }
  return std::nullopt;
}

struct ResolvedModule {
  std::string path;
  ModuleAst ast;
};

std::optional<ResolvedModule> load_module(const ImportRecord& imp, const std::string& source_path,
                                          const std::vector<std::string>& search_paths) {
  auto path = resolve_module(imp, source_path, search_paths);
  if (!path) return std::nullopt;
  try {
    ResolvedModule m;
    m.path = path->string();
    m.ast = parse_module(read_file(m.path), m.path);
    return m;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void add_entry(UserTypeSet& set, const std::string& key, ClassInfo info) {
  if (is_reserved_type_name(key)) return;
  set.entries.insert_or_assign(key, std::move(info));
}

void add_module_types(UserTypeSet& set, const ModuleAst& m, const std::string& path,
                      const std::string& prefix) {
  for (const auto& c : m.classes) {
    if (c->qualified_name.find('.') != std::string::npos) continue;  // nested
    add_entry(set, prefix + c->name, {c->qualified_name, path, detect_operator_overloading(*c), true});
  }
  for (const auto& nt : m.namedtuples) add_entry(set, prefix + nt, {nt, path, false, true});
}

}  // namespace

UserTypeSet collect_user_types(const ModuleAst& module, const std::vector<std::string>& search_paths) {
  UserTypeSet set;
  for (const auto& c : module.classes) {
    add_entry(set, c->qualified_name,
              {c->qualified_name, module.source_path, detect_operator_overloading(*c), true});
  }
  for (const auto& nt : module.namedtuples) {
    add_entry(set, nt, {nt, module.source_path, false, true});
  }
  for (const auto& imp : module.imports) {
    if (imp.level == 0 && is_typing_module(imp.module)) continue;
    if (imp.names.empty()) {
      // import package [as alias]
      const std::string key = imp.alias.value_or(imp.module);
      set.module_aliases[key] = imp.module;
      auto loaded = load_module(imp, module.source_path, search_paths);
      if (!loaded) {
        if (std::find(set.unresolved_packages.begin(), set.unresolved_packages.end(),
                      imp.module) == set.unresolved_packages.end()) {
          set.unresolved_packages.push_back(imp.module);
        }
        continue;
      }
      add_module_types(set, loaded->ast, loaded->path, key + ".");
      continue;
    }
    // from package import names
    auto loaded = load_module(imp, module.source_path, search_paths);
    for (std::size_t i = 0; i < imp.names.size(); ++i) {
      const std::string& name = imp.names[i];
      const std::string key = imp.member_aliases[i].value_or(name);
      if (name == "*") {
        if (loaded) add_module_types(set, loaded->ast, loaded->path, "");
        continue;
      }
      if (loaded) {
        if (const ClassDef* c = loaded->ast.find_class(name);
            c != nullptr && c->qualified_name == name) {
          add_entry(set, key, {name, loaded->path, detect_operator_overloading(*c), true});
        } else if (std::find(loaded->ast.namedtuples.begin(), loaded->ast.namedtuples.end(),
                             name) != loaded->ast.namedtuples.end()) {
          add_entry(set, key, {name, loaded->path, false, true});
        }
        continue;
      }
      // Unresolvable: only class-like names are kept, with unknown origin.
      if (is_cap_words(name)) {
        const std::string qn = imp.module.empty() ? name : imp.module + "." + name;
        add_entry(set, key, {qn, "", false, false});
      }
    }
  }
  return set;
}

const char* to_string(AnnotationKind k) {
  switch (k) {
    case AnnotationKind::Argument: return "argument";
    case AnnotationKind::Return: return "return";
    case AnnotationKind::Local: return "local";
  }
  return "local";
}

std::optional<AnnotationKind> annotation_kind_from_string(std::string_view s) {
  if (s == "argument" || s == "arg") return AnnotationKind::Argument;
  if (s == "return") return AnnotationKind::Return;
  if (s == "local") return AnnotationKind::Local;
  return std::nullopt;
}

namespace {

struct Edit {
  std::size_t begin;
  std::size_t end;
  std::string replacement;
};

class AnnotationStripper {
 public:
  explicit AnnotationStripper(std::string_view source) : src_(source) {}

  void block(const Block& body, const std::string& owner) {
    for (const auto& s : body) stmt(*s, owner);
  }

  std::vector<Edit> edits;
  std::vector<GroundTruthRecord> truths;

 private:
  std::string text(const Span& sp) const { return std::string(src_.substr(sp.begin, sp.end - sp.begin)); }

  void function(const FunctionDef& fn) {
    for (const auto& a : fn.args.args) {
      if (!a.annotation) continue;
      truths.push_back({fn.qualified_name, AnnotationKind::Argument, a.name,
                        text(a.annotation->span), a.span.line});
      edits.push_back({a.annotation_strip_begin, a.annotation_strip_end, ""});
    }
    if (fn.returns) {
      truths.push_back({fn.qualified_name, AnnotationKind::Return, "", text(fn.returns->span),
                        fn.span.line});
      edits.push_back({fn.returns_strip_begin, fn.returns_strip_end, ""});
    }
    block(fn.body, fn.qualified_name);
  }

  void stmt(const Stmt& s, const std::string& owner) {
    switch (s.kind) {
      case StmtKind::FunctionDef: function(*s.function); return;
      case StmtKind::ClassDef: block(s.klass->body, s.klass->qualified_name); return;
      case StmtKind::AnnAssign: {
        const Expr& target = *s.targets.front();
        truths.push_back(
            {owner, AnnotationKind::Local, text(target.span), text(s.annotation->span), s.span.line});
        if (s.value) {
          edits.push_back({s.annotation_strip_begin, s.annotation_strip_end, ""});
        } else {
          edits.push_back({s.span.begin, s.span.end, "pass"});
        }
        return;
      }
      default: break;
    }
    block(s.body, owner);
    block(s.orelse, owner);
    block(s.finalbody, owner);
    for (const auto& h : s.handlers) block(h.body, owner);
  }

  std::string_view src_;
};

}  // namespace

StrippedSource strip_annotations(std::string_view source, std::string path) {
  const ModuleAst m = parse_module(source, std::move(path));
  AnnotationStripper stripper(source);
  stripper.block(m.body, "");
  auto edits = std::move(stripper.edits);
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin > b.begin; });
  std::string out(source);
  for (const auto& e : edits) out.replace(e.begin, e.end - e.begin, e.replacement);
  StrippedSource result;
  result.source = std::move(out);
  result.truths = std::move(stripper.truths);
  return result;
}

std::string read_file(const std::string& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) throw FileError("is a directory: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace tdgtype
