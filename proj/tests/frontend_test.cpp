#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "tdgtype/frontend.hpp"

using namespace tdgtype;
namespace fs = std::filesystem;

namespace {

const char* kListing1 = R"(def parse(text):
    normalized_text = _normalize_text(text)
    tmp = ast.literal_eval(normalized_text)
    shape = []
    placeholders = {}
    for i, t in enumerate(tmp):
        if isinstance(t, str):
            pt = Placeholder(label=t)
            placeholders[t] = pt
        elif isinstance(t, int):
            pt = t
        shape.append(pt)
    return shape, placeholders
)";

// Counts annotation nodes by walking the tree directly.
int count_annotations(const py::Block& body) {
  int n = 0;
  for (const auto& s : body) {
    if (s->kind == py::StmtKind::FunctionDef) {
      for (const auto& a : s->function->args.args) n += a.annotation ? 1 : 0;
      n += s->function->returns ? 1 : 0;
      n += count_annotations(s->function->body);
    } else if (s->kind == py::StmtKind::ClassDef) {
      n += count_annotations(s->klass->body);
    } else {
      n += s->kind == py::StmtKind::AnnAssign ? 1 : 0;
      n += count_annotations(s->body) + count_annotations(s->orelse) +
           count_annotations(s->finalbody);
      for (const auto& h : s->handlers) n += count_annotations(h.body);
    }
  }
  return n;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tdgtype_frontend_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& rel, const std::string& content) const {
    fs::create_directories((path / rel).parent_path());
    std::ofstream(path / rel) << content;
  }
};

}  // namespace

TEST(ParseModule, MinimalFunction) {
  ModuleAst m = parse_module("def f():\n    return 1");
  EXPECT_EQ(m.functions.size(), 1u);
  EXPECT_EQ(m.classes.size(), 0u);
  EXPECT_EQ(m.functions[0]->span.line, 1);
}

TEST(ParseModule, ListingOne) {
  ModuleAst m = parse_module(kListing1);
  ASSERT_EQ(m.functions.size(), 1u);
  EXPECT_EQ(m.functions[0]->name, "parse");
  ASSERT_EQ(m.functions[0]->args.args.size(), 1u);
  EXPECT_EQ(m.functions[0]->args.args[0].name, "text");
  EXPECT_EQ(m.functions[0]->body.size(), 6u);
}

TEST(ParseModule, MalformedTopLevel) {
  try {
    (void)parse_module("def f(");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 1);
  }
}

TEST(ParseModule, OpaqueStatementInsideFunction) {
  ModuleAst m = parse_module("def f():\n    x = 1\n    print >>\n    return x\n");
  ASSERT_EQ(m.functions.size(), 1u);
  const auto& body = m.functions[0]->body;
  ASSERT_EQ(body.size(), 3u);
  EXPECT_EQ(body[1]->kind, py::StmtKind::Opaque);
  EXPECT_EQ(body[2]->kind, py::StmtKind::Return);
}

TEST(ParseModule, SpansAndQualifiedNames) {
  ModuleAst m = parse_module(
      "class A:\n    def m(self):\n        def inner():\n            pass\n        return 1\n"
      "def m():\n    pass\ndef m():\n    pass\n");
  std::vector<std::string> names;
  for (const auto& f : m.functions) names.push_back(f->qualified_name);
  EXPECT_EQ(names, (std::vector<std::string>{"A.m", "A.m.inner", "m", "m#2"}));
  EXPECT_TRUE(m.functions[0]->is_method);
  EXPECT_EQ(m.functions[0]->enclosing_class, "A");
  EXPECT_FALSE(m.functions[1]->is_method);
  EXPECT_EQ(m.functions[1]->span.line, 3);
  EXPECT_EQ(m.functions[1]->span.col, 8);
}

TEST(ParseModule, ExpressionForms) {
  const char* src = R"(def f(a, *args, b=2, **kw):
    x = [i * 2 for i in range(10) if i % 2]
    y = {k: v for k, v in kw.items()}
    z = lambda q, r=1: q + r
    w = a if a else b
    s = {1, 2, *args}
    t = x[1:2], x[::2]
    u = f"{a}" "b"
    v = not a and b or (yield)
    a += 1
    (p, q), *r = 1, 2, 3
    with open(a) as fh, open(b):
        pass
    try:
        pass
    except (ValueError, KeyError) as e:
        raise RuntimeError() from e
    finally:
        del x[0]
    while a < b <= 3 is not None:
        break
    return await_(a), x if a not in y else None
)";
  ModuleAst m = parse_module(src);
  ASSERT_EQ(m.functions.size(), 1u);
  for (const auto& s : m.functions[0]->body) EXPECT_NE(s->kind, py::StmtKind::Opaque);
}

TEST(Overloading, Detection) {
  ModuleAst m = parse_module(
      "class V:\n    def __add__(self, o):\n        return self\n"
      "class P:\n    def __init__(self):\n        pass\n    def run(self):\n        pass\n"
      "class S:\n    def __lshift__(self, o):\n        return self\n"
      "class R:\n    def __radd__(self, o):\n        return self\n");
  ASSERT_EQ(m.classes.size(), 4u);
  EXPECT_TRUE(detect_operator_overloading(*m.classes[0]));
  EXPECT_FALSE(detect_operator_overloading(*m.classes[1]));
  EXPECT_TRUE(detect_operator_overloading(*m.classes[2]));
  EXPECT_TRUE(detect_operator_overloading(*m.classes[3]));
}

TEST(UserTypes, LocalClassAndUnresolvedImport) {
  ModuleAst m = parse_module(
      "from pkg import Node, helper\nfrom typing import List\nclass Placeholder:\n    pass\n");
  UserTypeSet u = collect_user_types(m, {});
  EXPECT_TRUE(u.contains("Placeholder"));
  ASSERT_TRUE(u.contains("Node"));
  EXPECT_FALSE(u.entries.at("Node").origin_known);
  EXPECT_FALSE(u.entries.at("Node").overloads_operators);
  EXPECT_FALSE(u.contains("helper"));
  EXPECT_FALSE(u.contains("List"));
}

TEST(UserTypes, EmptyModule) {
  EXPECT_TRUE(collect_user_types(parse_module(""), {}).entries.empty());
}

TEST(UserTypes, ResolvedPackages) {
  TempDir dir;
  dir.write("geo/__init__.py",
            "from collections import namedtuple\n"
            "Point = namedtuple('Point', 'x y')\n"
            "class Vec:\n    def __mul__(self, o):\n        return self\n"
            "def helper():\n    pass\n");
  dir.write("shapes.py", "class Circle:\n    pass\n");
  ModuleAst m = parse_module(
      "import geo\nimport shapes as sh\nimport missing.pkg\nfrom shapes import Circle\n");
  UserTypeSet u = collect_user_types(m, {dir.path.string()});
  EXPECT_TRUE(u.contains("geo.Point"));
  ASSERT_TRUE(u.contains("geo.Vec"));
  EXPECT_TRUE(u.overloads("geo.Vec"));
  EXPECT_TRUE(u.contains("sh.Circle"));
  EXPECT_TRUE(u.contains("Circle"));
  EXPECT_TRUE(u.entries.at("Circle").origin_known);
  EXPECT_EQ(u.module_aliases.at("sh"), "shapes");
  EXPECT_EQ(u.unresolved_packages, std::vector<std::string>{"missing.pkg"});
  EXPECT_FALSE(u.contains("geo.helper"));
  EXPECT_EQ(collect_user_types(m, {dir.path.string()}), u);
}

TEST(UserTypes, OverloadingImpliesCategoryO) {
  ModuleAst m = parse_module("class V:\n    def __sub__(self, o):\n        return self\n");
  UserTypeSet u = collect_user_types(m, {});
  EXPECT_EQ(detect_operator_overloading(*m.classes[0]), u.overloads("V"));
}

TEST(StripAnnotations, ArgumentAndReturn) {
  StrippedSource s = strip_annotations("def f(x: int) -> str: ...");
  ASSERT_EQ(s.truths.size(), 2u);
  EXPECT_EQ(s.truths[0].function, "f");
  EXPECT_EQ(s.truths[0].kind, AnnotationKind::Argument);
  EXPECT_EQ(s.truths[0].name, "x");
  EXPECT_EQ(s.truths[0].annotation, "int");
  EXPECT_EQ(s.truths[1].kind, AnnotationKind::Return);
  EXPECT_EQ(s.truths[1].annotation, "str");
  EXPECT_EQ(s.source, "def f(x): ...");
}

TEST(StripAnnotations, NoAnnotations) {
  const std::string src = "def g(): ...";
  StrippedSource s = strip_annotations(src);
  EXPECT_TRUE(s.truths.empty());
  EXPECT_EQ(s.source, src);
}

TEST(StripAnnotations, LocalVariable) {
  StrippedSource s = strip_annotations("def f():\n    v: List[int] = []\n    w: int\n    return v\n");
  ASSERT_EQ(s.truths.size(), 2u);
  EXPECT_EQ(s.truths[0].function, "f");
  EXPECT_EQ(s.truths[0].kind, AnnotationKind::Local);
  EXPECT_EQ(s.truths[0].name, "v");
  EXPECT_EQ(s.truths[0].annotation, "List[int]");
  ModuleAst re = parse_module(s.source);
  EXPECT_EQ(count_annotations(re.body), 0);
  EXPECT_EQ(re.functions[0]->body[0]->kind, py::StmtKind::Assign);
}

TEST(StripAnnotations, ClassAttributesAreLocals) {
  StrippedSource s = strip_annotations("class C:\n    size: int = 3\n    name: str\n");
  ASSERT_EQ(s.truths.size(), 2u);
  EXPECT_EQ(s.truths[0].function, "C");
  EXPECT_EQ(s.truths[1].kind, AnnotationKind::Local);
}

TEST(StripAnnotations, CountMatchesAnnotationNodes) {
  for (const auto& entry : fs::directory_iterator(fs::path(TDGTYPE_FIXTURES) / "corpus")) {
    if (entry.path().extension() != ".py") continue;
    const std::string src = read_file(entry.path().string());
    const int expected = count_annotations(parse_module(src).body);
    StrippedSource s = strip_annotations(src);
    EXPECT_EQ(static_cast<int>(s.truths.size()), expected) << entry.path();
    ModuleAst re = parse_module(s.source);
    EXPECT_EQ(count_annotations(re.body), 0) << entry.path();
  }
}

TEST(ReadFile, MissingFile) {
  EXPECT_THROW((void)read_file("/nonexistent/file.py"), FileError);
}
