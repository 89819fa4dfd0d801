#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <set>

#include "tdgtype/tdg.hpp"

using namespace tdgtype;

namespace {

struct Built {
  ModuleAst module;
  UserTypeSet users;
  ProgramTdg program;
};

Built build(std::string_view src) {
  Built b;
  b.module = parse_module(src);
  b.users = collect_user_types(b.module, {});
  b.program = build_program(b.module, b.users);
  return b;
}

Built listing1() {
  return build(read_file(std::string(TDGTYPE_FIXTURES) + "/listing1.py"));
}

std::vector<std::string> input_ids(const Tdg& t, int node) {
  std::vector<std::string> out;
  for (const auto& in : t.nodes[static_cast<std::size_t>(node)].inputs) {
    out.push_back(t.nodes[static_cast<std::size_t>(in.src)].id);
  }
  return out;
}

bool reaches(const Tdg& t, int from, int to) {
  std::set<int> seen;
  std::function<bool(int)> walk = [&](int n) {
    if (n == from) return true;
    if (!seen.insert(n).second) return false;
    for (const auto& in : t.nodes[static_cast<std::size_t>(n)].inputs) {
      if (walk(in.src)) return true;
    }
    return false;
  };
  return walk(to);
}

// Independent count of local-variable name occurrences in a function body:
// every Name node whose identifier is bound in the function, with augmented
// assignments counted as one read and one write.
struct OccurrenceCounter {
  std::set<std::string> locals;
  int count = 0;

  void collect_stores(const py::Expr& e) {
    if (e.kind == py::ExprKind::Name) locals.insert(e.id);
    if (e.kind == py::ExprKind::Tuple || e.kind == py::ExprKind::List ||
        e.kind == py::ExprKind::Starred) {
      for (const auto& i : e.items) collect_stores(*i);
    }
  }

  void collect(const py::Block& body) {
    for (const auto& s : body) {
      if (s->kind == py::StmtKind::Assign || s->kind == py::StmtKind::AugAssign ||
          s->kind == py::StmtKind::For) {
        for (const auto& t : s->targets) collect_stores(*t);
      }
      collect(s->body);
      collect(s->orelse);
    }
  }

  void expr(const py::Expr& e) {
    if (e.kind == py::ExprKind::Name && locals.count(e.id)) ++count;
    for (const auto& i : e.items) {
      if (i) expr(*i);
    }
    for (const auto& k : e.keywords) expr(*k.value);
  }

  void block(const py::Block& body) {
    for (const auto& s : body) {
      if (s->kind == py::StmtKind::AugAssign) ++count;
      for (const auto& t : s->targets) expr(*t);
      if (s->value) expr(*s->value);
      block(s->body);
      block(s->orelse);
    }
  }
};

int symbol_occurrences(const Tdg& t) {
  return static_cast<int>(std::count_if(t.nodes.begin(), t.nodes.end(), [](const TdgNode& n) {
    return n.kind == NodeKind::Symbol &&
           (n.role == SymbolRole::Read || n.role == SymbolRole::Write);
  }));
}

}  // namespace

TEST(BuildTdg, HandOracleTwoAssignments) {
  Built b = build("def f():\n    a = 1\n    b = a\n    return b\n");
  const Tdg& t = b.program.tdgs[0];
  ASSERT_EQ(t.nodes.size(), 6u);
  const int a0 = t.find("a0(2)");
  const int a1 = t.find("a1(3)");
  const int b0 = t.find("b0(3)");
  const int b1 = t.find("b1(4)");
  ASSERT_GE(a0, 0);
  ASSERT_GE(a1, 0);
  ASSERT_GE(b0, 0);
  ASSERT_GE(b1, 0);
  EXPECT_EQ(input_ids(t, a0), std::vector<std::string>{"Constant@2:8"});
  EXPECT_EQ(input_ids(t, a1), std::vector<std::string>{"a0(2)"});
  EXPECT_EQ(input_ids(t, b0), std::vector<std::string>{"a1(3)"});
  EXPECT_EQ(input_ids(t, b1), std::vector<std::string>{"b0(3)"});
  EXPECT_EQ(input_ids(t, t.return_slot), std::vector<std::string>{"b1(4)"});
  EXPECT_FALSE(t.nodes[static_cast<std::size_t>(t.return_slot)].constant.has_value());
  EXPECT_EQ(t.edges().size(), 5u);
  // Slots: return first (no parameters), then local occurrences in source order.
  std::vector<std::string> slots;
  for (int s : t.slots) slots.push_back(t.nodes[static_cast<std::size_t>(s)].id);
  EXPECT_EQ(slots, (std::vector<std::string>{"return", "a0(2)", "a1(3)", "b0(3)", "b1(4)"}));
}

TEST(BuildTdg, ListingOneSymbolIds) {
  Built b = listing1();
  const Tdg* t = b.program.find_tdg("parse");
  ASSERT_NE(t, nullptr);
  for (const char* id : {"pt0(9)", "pt1(10)", "pt2(12)", "pt3(13)", "text0(2)", "text1(3)",
                         "t0(7)", "t1(8)", "t2(9)", "t3(10)", "t4(11)", "t5(12)"}) {
    EXPECT_GE(t->find(id), 0) << id;
  }
  EXPECT_EQ(input_ids(*t, t->find("pt1(10)")), std::vector<std::string>{"pt0(9)"});
  // The read of pt on line 13 joins both branch definitions through merges.
  const int pt3 = t->find("pt3(13)");
  const auto& in = t->nodes[static_cast<std::size_t>(pt3)].inputs;
  ASSERT_EQ(in.size(), 1u);
  EXPECT_EQ(t->nodes[static_cast<std::size_t>(in[0].src)].kind, NodeKind::Merge);
  EXPECT_TRUE(reaches(*t, t->find("pt1(10)"), pt3));
  EXPECT_TRUE(reaches(*t, t->find("pt2(12)"), pt3));
}

TEST(BuildTdg, ListingOneNarrowing) {
  Built b = listing1();
  const Tdg& t = *b.program.find_tdg("parse");
  const auto& t2 = t.nodes[static_cast<std::size_t>(t.find("t2(9)"))];
  ASSERT_EQ(t2.inputs.size(), 1u);
  EXPECT_EQ(t2.inputs[0].kind, EdgeKind::BranchTrue);
  const auto& branch = t.nodes[static_cast<std::size_t>(t2.inputs[0].src)];
  EXPECT_EQ(branch.kind, NodeKind::Branch);
  EXPECT_EQ(branch.guard, std::vector<PyType>{PyType::str_()});
  const auto& t5 = t.nodes[static_cast<std::size_t>(t.find("t5(12)"))];
  ASSERT_EQ(t5.inputs.size(), 1u);
  EXPECT_EQ(t5.inputs[0].kind, EdgeKind::BranchTrue);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(t5.inputs[0].src)].guard,
            std::vector<PyType>{PyType::int_()});
  // The elif test reads t on the false edge of the first guard.
  const auto& t4 = t.nodes[static_cast<std::size_t>(t.find("t4(11)"))];
  ASSERT_EQ(t4.inputs.size(), 1u);
  EXPECT_EQ(t4.inputs[0].kind, EdgeKind::BranchFalse);
}

TEST(BuildTdg, ListingOneLoopBackEdges) {
  Built b = listing1();
  const Tdg& t = *b.program.find_tdg("parse");
  bool back = false;
  for (const auto& n : t.nodes) {
    if (n.kind != NodeKind::Merge || n.var != "shape") continue;
    for (const auto& in : n.inputs) back = back || in.kind == EdgeKind::Back;
  }
  EXPECT_TRUE(back);
  const auto& mutator = std::find_if(t.nodes.begin(), t.nodes.end(),
                                     [](const TdgNode& n) { return n.op == "Append"; });
  ASSERT_NE(mutator, t.nodes.end());
  EXPECT_EQ(mutator->inputs.size(), 2u);
}

TEST(BuildTdg, OccurrenceCountMatchesOracle) {
  const char* src = R"(def f(a, b):
    x = a + b
    y = [x]
    x += 1
    for i in y:
        if i:
            z = i
        else:
            z = x
    del y
    return x, z
)";
  Built b = build(src);
  OccurrenceCounter c;
  const auto& fn = *b.module.functions[0];
  for (const auto& a : fn.args.args) c.locals.insert(a.name);
  c.collect(fn.body);
  c.block(fn.body);
  EXPECT_EQ(symbol_occurrences(b.program.tdgs[0]), c.count);
}

TEST(BuildTdg, OccurrenceCountOverCorpus) {
  namespace fs = std::filesystem;
  int files = 0;
  for (const auto& entry : fs::directory_iterator(fs::path(TDGTYPE_FIXTURES) / "corpus")) {
    if (entry.path().extension() != ".py") continue;
    ++files;
    ModuleAst m = parse_module(read_file(entry.path().string()));
    UserTypeSet u = collect_user_types(m, {});
    for (const auto& fn : m.functions) {
      OccurrenceCounter c;
      bool simple = true;
      std::function<void(const py::Block&)> check = [&](const py::Block& body) {
        for (const auto& s : body) {
          switch (s->kind) {
            case py::StmtKind::Assign:
            case py::StmtKind::AugAssign:
            case py::StmtKind::For:
            case py::StmtKind::If:
            case py::StmtKind::While:
            case py::StmtKind::Return:
            case py::StmtKind::ExprStmt:
            case py::StmtKind::Pass: break;
            default: simple = false;
          }
          if (s->kind == py::StmtKind::ExprStmt && s->value->kind == py::ExprKind::Constant) {
            simple = false;
          }
          check(s->body);
          check(s->orelse);
        }
      };
      check(fn->body);
      if (!simple) continue;
      // Comprehensions, lambdas and mutator statements change the count model.
      bool nested = false;
      std::function<void(const py::Expr&)> scan = [&](const py::Expr& e) {
        if (!e.generators.empty() || e.kind == py::ExprKind::Lambda ||
            e.kind == py::ExprKind::NamedExpr) {
          nested = true;
        }
        for (const auto& i : e.items) {
          if (i) scan(*i);
        }
      };
      std::function<void(const py::Block&)> scan_block = [&](const py::Block& body) {
        for (const auto& s : body) {
          if (s->value) scan(*s->value);
          for (const auto& t : s->targets) scan(*t);
          scan_block(s->body);
          scan_block(s->orelse);
        }
      };
      scan_block(fn->body);
      if (nested) continue;
      for (const auto& a : fn->args.args) c.locals.insert(a.name);
      c.collect(fn->body);
      c.block(fn->body);
      Tdg t = build_tdg(*fn, u, &m);
      EXPECT_EQ(symbol_occurrences(t), c.count) << entry.path() << " " << fn->qualified_name;
    }
  }
  SUCCEED() << files << " corpus files";
}

TEST(BuildTdg, SemicolonStatementsAreSequential) {
  Built b = build("def f():\n    a = 1; b = a\n    return b\n");
  const Tdg& t = b.program.tdgs[0];
  for (const auto& n : t.nodes) EXPECT_NE(n.kind, NodeKind::Merge) << n.id;
  EXPECT_EQ(input_ids(t, t.find("b0(2)")), std::vector<std::string>{"a1(2)"});
}

TEST(BuildTdg, ReturnSlotFallThroughAddsNone) {
  Built b = build("def f(x):\n    if x:\n        return 1\n");
  const Tdg& t = b.program.tdgs[0];
  const auto& r = t.nodes[static_cast<std::size_t>(t.return_slot)];
  EXPECT_EQ(r.constant, PyType::none());
  EXPECT_EQ(r.inputs.size(), 1u);
  Built c = build("def g(x):\n    if x:\n        return 1\n    else:\n        raise ValueError()\n");
  EXPECT_FALSE(c.program.tdgs[0].nodes[static_cast<std::size_t>(c.program.tdgs[0].return_slot)]
                   .constant.has_value());
}

TEST(BuildTdg, GeneratorReturn) {
  Built b = build("def g(n):\n    for i in n:\n        yield i\n");
  const Tdg& t = b.program.tdgs[0];
  const auto& r = t.nodes[static_cast<std::size_t>(t.return_slot)];
  ASSERT_EQ(r.inputs.size(), 1u);
  EXPECT_EQ(t.nodes[static_cast<std::size_t>(r.inputs[0].src)].op, "GeneratorReturn");
  EXPECT_FALSE(r.constant.has_value());
}

TEST(BuildTdg, SelfParameterIsNotAnOutput) {
  Built b = build("class C:\n    def m(self, x):\n        return x\n");
  const Tdg& t = b.program.tdgs[0];
  ASSERT_EQ(t.params.size(), 2u);
  const auto& self = t.nodes[static_cast<std::size_t>(t.params[0])];
  EXPECT_FALSE(self.output);
  EXPECT_EQ(self.constant, PyType::user("C"));
  EXPECT_TRUE(t.nodes[static_cast<std::size_t>(t.params[1])].output);
}

TEST(BuildTdg, ComprehensionVariablesAreNotSlots) {
  Built b = build("def f(xs):\n    ys = [x * 2 for x in xs]\n    return ys\n");
  const Tdg& t = b.program.tdgs[0];
  for (const auto& n : t.nodes) {
    if (n.var == "x") {
      EXPECT_EQ(n.slot, SlotKind::None);
      EXPECT_FALSE(n.output);
    }
  }
  EXPECT_GE(t.find("ys0(2)"), 0);
}

TEST(ExportDot, Deterministic) {
  Built a = listing1();
  Built b = listing1();
  ASSERT_EQ(a.program.tdgs.size(), b.program.tdgs.size());
  for (std::size_t i = 0; i < a.program.tdgs.size(); ++i) {
    EXPECT_EQ(export_dot(a.program.tdgs[i]), export_dot(b.program.tdgs[i]));
  }
  const std::string dot = export_dot(*a.program.find_tdg("parse"));
  EXPECT_NE(dot.find("digraph \"parse\""), std::string::npos);
  EXPECT_NE(dot.find("pt0(9)"), std::string::npos);
  EXPECT_NE(dot.find("label=\"true\""), std::string::npos);
}

TEST(ExportDot, EmptyFunctionHasOnlyReturnSlot) {
  Built b = build("def f():\n    pass\n");
  const Tdg& t = b.program.tdgs[0];
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.nodes[0].id, "return");
  const std::string dot = export_dot(t);
  EXPECT_EQ(std::count(dot.begin(), dot.end(), '\n'), 4);
}

TEST(Link, CallReturnAndArguments) {
  Built b = listing1();
  const ProgramTdg& p = b.program;
  const int parse = static_cast<int>(p.find_tdg("parse") - p.tdgs.data());
  const int norm = static_cast<int>(p.find_tdg("_normalize_text") - p.tdgs.data());
  const Tdg& callee = p.tdgs[static_cast<std::size_t>(norm)];
  const int ret = p.global(norm, callee.return_slot);
  const int param = p.global(norm, callee.params[0]);
  const int text1 = p.global(parse, p.tdgs[static_cast<std::size_t>(parse)].find("text1(3)"));
  bool aux = false;
  for (const auto& n : p.nodes) {
    for (const auto& in : n.inputs) aux = aux || (in.src == ret && in.kind == EdgeKind::Aux);
  }
  EXPECT_TRUE(aux);
  const auto& pin = p.nodes[static_cast<std::size_t>(param)].inputs;
  ASSERT_EQ(pin.size(), 1u);
  EXPECT_EQ(pin[0].src, text1);
  EXPECT_EQ(pin[0].kind, EdgeKind::CallArg);
  // Keyword argument into __init__, skipping self.
  const int init = static_cast<int>(p.find_tdg("Placeholder.__init__") - p.tdgs.data());
  const Tdg& it = p.tdgs[static_cast<std::size_t>(init)];
  const auto& label = p.nodes[static_cast<std::size_t>(p.global(init, it.params[1]))];
  ASSERT_EQ(label.inputs.size(), 1u);
  EXPECT_EQ(label.inputs[0].kind, EdgeKind::CallArg);
  EXPECT_TRUE(p.deferred.empty());
}

TEST(Link, RecursionIsDeferred) {
  Built b = build("def f(n):\n    return f(n - 1)\ndef g(n):\n    return h(n)\ndef h(n):\n    return g(n)\n");
  EXPECT_EQ(b.program.deferred.size(), 3u);
  EXPECT_TRUE(b.program.call_links.empty());
}

TEST(Link, AttributeLoadFromInitStore) {
  Built b = build(
      "class C:\n    def __init__(self):\n        self.x = 1\n"
      "    def get(self):\n        return self.x\n"
      "def use(c):\n    return c.size()\n");
  const ProgramTdg& p = b.program;
  const int get = static_cast<int>(p.find_tdg("C.get") - p.tdgs.data());
  const Tdg& t = p.tdgs[static_cast<std::size_t>(get)];
  const auto attr = std::find_if(t.nodes.begin(), t.nodes.end(),
                                 [](const TdgNode& n) { return n.op == "Attribute"; });
  ASSERT_NE(attr, t.nodes.end());
  const auto& g = p.nodes[static_cast<std::size_t>(p.global(get, static_cast<int>(attr - t.nodes.begin())))];
  ASSERT_EQ(g.inputs.size(), 2u);
  EXPECT_EQ(g.inputs[1].kind, EdgeKind::Aux);
  EXPECT_EQ(g.inputs[1].tag, "C");
  EXPECT_EQ(p.nodes[static_cast<std::size_t>(g.inputs[1].src)].op, "AttrStore");
}

TEST(Link, SnapshotCopiesCandidates) {
  Built b = listing1();
  b.program.nodes[0].cands = CandidateSet{PyType::int_()};
  const int owner = b.program.tdg_of(0);
  EXPECT_EQ(b.program.snapshot(owner).nodes[0].cands, CandidateSet{PyType::int_()});
}
