#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unistd.h>

#include "test_util.hpp"
#include "tdgtype/rules.hpp"

using namespace tdgtype;

namespace {

PyType P(std::string_view s) { return parse_type_expr(s); }

CandidateSet S(std::initializer_list<const char*> types) {
  std::vector<PyType> ts;
  for (const char* t : types) ts.push_back(P(t));
  return CandidateSet::of(ts);
}

TdgNode expr_node(std::string op, std::size_t inputs) {
  TdgNode n;
  n.kind = NodeKind::Expr;
  n.op = std::move(op);
  for (std::size_t i = 0; i < inputs; ++i) n.inputs.push_back({static_cast<int>(i), EdgeKind::Flow, ""});
  return n;
}

CandidateSet fwd(const TdgNode& n, std::vector<CandidateSet> in) {
  return forward_apply(n, in, StubTable::defaults());
}

RejectResult rej(const TdgNode& n, std::vector<CandidateSet> in) {
  return reject_apply(n, in, StubTable::defaults());
}

bool contradiction(const CandidateSet& c) { return !c.blank() && c.empty(); }

// Small universe of concrete types for exhaustive checks.
std::vector<PyType> universe() {
  std::vector<PyType> u;
  for (const char* s : {"int", "bool", "float", "str", "bytes", "None", "List[int]", "List[str]",
                        "List", "Tuple[int, str]", "Dict[str, int]", "Set[int]", "Callable[[int], str]",
                        "type", "Generator[int]", "Node"}) {
    u.push_back(P(s));
  }
  u.push_back(PyType::user("Vec", true));
  return u;
}

}  // namespace

TEST(Forward, SpecExamples) {
  EXPECT_EQ(fwd(expr_node("Add", 2), {S({"int"}), S({"int"})}), S({"int"}));
  TdgNode lt = expr_node("Compare", 2);
  lt.ops = {"Lt"};
  EXPECT_EQ(fwd(lt, {S({"int"}), S({"float"})}), S({"bool"}));
  TdgNode inst = expr_node("ClassInstantiation", 0);
  inst.constant = PyType::user("Placeholder");
  EXPECT_EQ(fwd(inst, {}), CandidateSet{PyType::user("Placeholder")});
  EXPECT_EQ(fwd(expr_node("BoolOp", 2), {S({"int"}), S({"str"})}), S({"Union[int, str]"}));
  TdgNode dict = expr_node("DictLit", 2);
  dict.roles = {InputRole::Key, InputRole::Value};
  EXPECT_EQ(fwd(dict, {S({"str"}), CandidateSet{PyType::user("Placeholder")}}),
            S({"Dict[str, Placeholder]"}));
}

TEST(Forward, BlankInputGivesBlank) {
  EXPECT_TRUE(fwd(expr_node("Add", 2), {S({"int"}), CandidateSet{}}).blank());
  EXPECT_TRUE(fwd(expr_node("ListLit", 1), {CandidateSet{}}).blank());
}

TEST(Forward, Arithmetic) {
  EXPECT_EQ(fwd(expr_node("Add", 2), {S({"bool"}), S({"bool"})}), S({"int"}));
  EXPECT_EQ(fwd(expr_node("Div", 2), {S({"int"}), S({"int"})}), S({"float"}));
  EXPECT_EQ(fwd(expr_node("Add", 2), {S({"List[int]"}), S({"List[str]"})}), S({"List[int, str]"}));
  EXPECT_EQ(fwd(expr_node("Add", 2), {S({"Tuple[int]"}), S({"Tuple[str]"})}), S({"Tuple[int, str]"}));
  EXPECT_EQ(fwd(expr_node("Mult", 2), {S({"str"}), S({"int"})}), S({"str"}));
  EXPECT_EQ(fwd(expr_node("Mod", 2), {S({"str"}), S({"Tuple[int]"})}), S({"str"}));
  EXPECT_EQ(fwd(expr_node("BitAnd", 2), {S({"bool"}), S({"bool"})}), S({"bool"}));
  EXPECT_EQ(fwd(expr_node("LShift", 2), {S({"bool"}), S({"int"})}), S({"int"}));
  EXPECT_EQ(fwd(expr_node("USub", 1), {S({"bool"})}), S({"int"}));
  EXPECT_TRUE(contradiction(fwd(expr_node("Add", 2), {S({"int"}), S({"str"})})));
  CandidateSet vec{PyType::user("Vec", true)};
  EXPECT_TRUE(fwd(expr_node("MatMult", 2), {vec, S({"int"})}).blank());  // the class defines the result
}

TEST(Forward, UnionsDistribute) {
  EXPECT_EQ(fwd(expr_node("Add", 2), {S({"Union[int, float]"}), S({"int"})}), S({"int", "float"}));
}

TEST(Forward, SubscriptAndUnpack) {
  TdgNode sub = expr_node("Subscript", 2);
  EXPECT_EQ(fwd(sub, {S({"Dict[str, Placeholder]"}), S({"str"})}),
            (CandidateSet{PyType::user("Placeholder")}));
  EXPECT_EQ(fwd(sub, {S({"List[int, str]"}), S({"int"})}), S({"int", "str"}));
  sub.subscript = -1;
  EXPECT_EQ(fwd(sub, {S({"Tuple[int, str]"}), S({"int"})}), S({"str"}));
  EXPECT_TRUE(contradiction(fwd(sub, {S({"List[int]"}), S({"str"})})));
  TdgNode un = expr_node("Unpack", 1);
  un.index = 1;
  un.count = 2;
  EXPECT_EQ(fwd(un, {S({"Tuple[int, Union[int, str]]"})}), S({"int", "str"}));
  EXPECT_TRUE(contradiction(fwd(un, {S({"Tuple[int, int, int]"})})));
  un.starred = 1;
  un.count = 2;
  EXPECT_EQ(fwd(un, {S({"Tuple[int, str, bytes]"})}), S({"List[str, bytes]"}));
  TdgNode it = expr_node("Iter", 1);
  EXPECT_EQ(fwd(it, {S({"Generator[Tuple[int, str]]"})}), S({"Tuple[int, str]"}));
  EXPECT_TRUE(contradiction(fwd(it, {S({"int"})})));
}

TEST(Forward, LiteralsAndMutators) {
  TdgNode tup = expr_node("TupleLit", 2);
  tup.roles = {InputRole::Plain, InputRole::Plain};
  EXPECT_EQ(fwd(tup, {S({"List[int, Placeholder]"}), S({"Dict[str, Placeholder]"})}),
            S({"Tuple[List[int, Placeholder], Dict[str, Placeholder]]"}));
  EXPECT_EQ(fwd(expr_node("ListLit", 0), {}), S({"List"}));
  TdgNode lst = expr_node("ListLit", 2);
  lst.roles = {InputRole::Plain, InputRole::Spread};
  EXPECT_EQ(fwd(lst, {S({"int"}), S({"Set[str]"})}), S({"List[int, str]"}));
  EXPECT_EQ(fwd(expr_node("Append", 2), {S({"List"}), S({"Placeholder"})}), S({"List[Placeholder]"}));
  EXPECT_EQ(fwd(expr_node("SubscriptStore", 3), {S({"Dict"}), S({"str"}), S({"Placeholder"})}),
            S({"Dict[str, Placeholder]"}));
  EXPECT_TRUE(contradiction(fwd(expr_node("Append", 2), {S({"Dict"}), S({"int"})})));
  EXPECT_EQ(fwd(expr_node("IfExp", 2), {S({"int"}), S({"None"})}), S({"int", "None"}));
}

TEST(Forward, StubCalls) {
  StubTable stubs = StubTable::defaults();
  stubs.load_text("ast.literal_eval : Callable[[str], List[Union[int, str]]]\n");
  TdgNode en = expr_node("StubCall", 1);
  en.name = "enumerate";
  EXPECT_EQ(forward_apply(en, {S({"List[Union[int, str]]"})}, stubs),
            S({"Generator[Tuple[int, Union[int, str]]]"}));
  TdgNode le = expr_node("StubCall", 1);
  le.name = "ast.literal_eval";
  EXPECT_EQ(forward_apply(le, {S({"str"})}, stubs), S({"List[int, str]"}));
  EXPECT_TRUE(contradiction(forward_apply(le, {S({"List[int]"})}, stubs)));
  TdgNode len = expr_node("StubCall", 1);
  len.name = "len";
  EXPECT_EQ(forward_apply(len, {S({"List[int]"})}, stubs), S({"int"}));
  TdgNode unknown = expr_node("StubCall", 1);
  unknown.name = "mystery";
  EXPECT_TRUE(forward_apply(unknown, {S({"int"})}, stubs).blank());
  TdgNode get = expr_node("MethodCall", 3);
  get.name = "get";
  EXPECT_EQ(forward_apply(get, {S({"Dict[str, int]"}), S({"str"}), S({"None"})}, stubs),
            S({"int", "None"}));
  TdgNode mx = expr_node("StubCall", 2);
  mx.name = "max";
  EXPECT_EQ(forward_apply(mx, {S({"int"}), S({"float"})}, stubs), S({"int", "float"}));
}

TEST(Forward, MethodCalls) {
  TdgNode rep = expr_node("MethodCall", 3);
  rep.name = "replace";
  rep.has_receiver = true;
  EXPECT_EQ(fwd(rep, {S({"str"}), S({"str"}), S({"str"})}), S({"str"}));
  EXPECT_TRUE(contradiction(fwd(rep, {S({"List[int]"}), S({"str"}), S({"str"})})));
  TdgNode cap = expr_node("MethodCall", 1);
  cap.name = "capitalize";
  EXPECT_TRUE(fwd(cap, {S({"str"})}).blank());
  TdgNode m = expr_node("MethodCall", 2);
  m.name = "area";
  m.inputs[1] = {1, EdgeKind::Aux, "Shape"};
  EXPECT_EQ(fwd(m, {CandidateSet{PyType::user("Shape")}, S({"float"})}), S({"float"}));
  EXPECT_TRUE(fwd(m, {CandidateSet{PyType::user("Other")}, S({"float"})}).blank());
}

TEST(Reject, SpecExamples) {
  auto r = rej(expr_node("Add", 2), {S({"int", "str"}), S({"int"})});
  EXPECT_EQ(r.validated[0], S({"int"}));
  EXPECT_EQ(r.validated[1], S({"int"}));
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].first, 0);
  EXPECT_EQ(r.removed[0].second, PyType::str_());

  TdgNode in = expr_node("Compare", 2);
  in.ops = {"In"};
  r = rej(in, {S({"int"}), S({"int", "List[int]"})});
  EXPECT_EQ(r.validated[1], S({"List[int]"}));

  TdgNode eq = expr_node("Compare", 2);
  eq.ops = {"Eq"};
  r = rej(eq, {S({"int"}), S({"str"})});
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.validated[0], S({"int"}));
}

TEST(Reject, OverloadingOperandShortCircuits) {
  CandidateSet mixed = CandidateSet::of({PyType::user("Vec", true), PyType::str_()});
  auto r = rej(expr_node("Sub", 2), {mixed, S({"Set[int]"})});
  EXPECT_TRUE(r.validated[0].contains(PyType::user("Vec", true)));
  EXPECT_FALSE(r.validated[0].contains(PyType::str_()));
}

TEST(Reject, AuxAndBlankInputsUntouched) {
  TdgNode m = expr_node("MethodCall", 2);
  m.name = "replace";
  m.inputs[1] = {1, EdgeKind::Aux, "C"};
  auto r = rej(m, {S({"List[int]", "str"}), S({"int"})});
  EXPECT_EQ(r.validated[0], S({"str"}));
  EXPECT_EQ(r.validated[1], S({"int"}));
  r = rej(expr_node("Add", 2), {CandidateSet{}, S({"int", "None"})});
  EXPECT_TRUE(r.removed.empty());
}

TEST(Reject, MutatorReceiver) {
  auto r = rej(expr_node("Append", 2), {S({"List[int]", "Dict", "None"}), S({"int"})});
  EXPECT_EQ(r.validated[0], S({"List[int]"}));
  EXPECT_EQ(r.removed.size(), 2u);
}

namespace {

struct Shape {
  std::string op;
  std::size_t arity;
  std::vector<std::string> cmp;
  std::string name;
};

std::vector<Shape> distributive_shapes() {
  std::vector<Shape> out;
  for (const auto& e : rule_table()) {
    if (e.shape != RuleShape::Distributive) continue;
    if (e.op == "Compare") {
      for (const char* c : {"Lt", "Eq", "In", "NotIn", "GtE"}) out.push_back({e.op, 2, {c}, ""});
      out.push_back({e.op, 3, {"Lt", "In"}, ""});
      continue;
    }
    if (e.op == "StubCall") {
      out.push_back({e.op, 1, {}, "len"});
      out.push_back({e.op, 1, {}, "enumerate"});
      out.push_back({e.op, 2, {}, "max"});
      continue;
    }
    if (e.op == "MethodCall") {
      out.push_back({e.op, 1, {}, "strip"});
      out.push_back({e.op, 2, {}, "append"});
      out.push_back({e.op, 1, {}, "items"});
      continue;
    }
    if (e.op == "Attribute") {
      out.push_back({e.op, 1, {}, "real"});
      continue;
    }
    std::size_t arity = 2;
    if (e.op == "Not" || e.op == "UAdd" || e.op == "USub" || e.op == "Invert" || e.op == "Iter" ||
        e.op == "Unpack" || e.op == "CallValue") {
      arity = 1;
    }
    if (e.op == "Slice") arity = 3;
    out.push_back({e.op, arity, {}, ""});
  }
  return out;
}

TdgNode node_for(const Shape& s) {
  TdgNode n = expr_node(s.op, s.arity);
  n.ops = s.cmp;
  n.name = s.name;
  if (s.op == "Unpack") {
    n.index = 0;
    n.count = 2;
  }
  return n;
}

std::vector<CandidateSet> random_inputs(std::mt19937_64& rng, std::size_t arity,
                                        const std::vector<PyType>& u) {
  std::vector<CandidateSet> in;
  std::uniform_int_distribution<std::size_t> size(1, 3);
  std::uniform_int_distribution<std::size_t> pick(0, u.size() - 1);
  for (std::size_t i = 0; i < arity; ++i) {
    std::vector<PyType> ts;
    for (std::size_t k = size(rng); k > 0; --k) ts.push_back(u[pick(rng)]);
    in.push_back(CandidateSet::of(ts));
  }
  return in;
}

}  // namespace

// Every removed candidate, forced as the only type of its input, leaves the
// rule without any valid combination.
TEST(Reject, RemovalsReplayAsContradictions) {
  const auto u = universe();
  std::mt19937_64 rng(7);
  for (const auto& shape : distributive_shapes()) {
    const TdgNode n = node_for(shape);
    for (int trial = 0; trial < 400; ++trial) {
      auto in = random_inputs(rng, shape.arity, u);
      auto r = rej(n, in);
      for (std::size_t i = 0; i < in.size(); ++i) {
        for (const auto& t : r.validated[i]) ASSERT_TRUE(in[i].contains(t));
      }
      for (const auto& [i, t] : r.removed) {
        auto forced = in;
        forced[static_cast<std::size_t>(i)] = CandidateSet{t};
        EXPECT_TRUE(contradiction(fwd(n, forced)))
            << shape.op << " " << shape.name << " input " << i << " " << render(t);
      }
    }
  }
}

// Every kept candidate takes part in at least one assignment of single types,
// drawn from the input sets, whose forward result is not a contradiction.
TEST(Reject, KeptCandidatesHaveSupport) {
  const auto u = universe();
  std::mt19937_64 rng(11);
  for (const auto& shape : distributive_shapes()) {
    const TdgNode n = node_for(shape);
    for (int trial = 0; trial < 300; ++trial) {
      auto in = random_inputs(rng, shape.arity, u);
      auto r = rej(n, in);
      for (std::size_t i = 0; i < in.size(); ++i) {
        for (const auto& t : r.validated[i]) {
          // Enumerate singleton assignments with input i fixed to t; the other
          // inputs range over their pre-rejection sets (single-pass support).
          std::vector<std::vector<PyType>> choices;
          for (std::size_t j = 0; j < in.size(); ++j) {
            choices.push_back(j == i ? std::vector<PyType>{t} : in[j].types());
          }
          bool found = false;
          std::vector<std::size_t> pos(choices.size(), 0);
          while (!found) {
            std::vector<CandidateSet> single;
            for (std::size_t j = 0; j < choices.size(); ++j) single.push_back(CandidateSet{choices[j][pos[j]]});
            found = !contradiction(fwd(n, single));
            std::size_t k = 0;
            while (k < pos.size() && ++pos[k] == choices[k].size()) pos[k++] = 0;
            if (k == pos.size()) break;
          }
          EXPECT_TRUE(found) << shape.op << " " << shape.name << " " << render(t);
        }
      }
    }
  }
}

TEST(Reject, ExhaustiveSingletonsUnary) {
  const auto u = universe();
  for (const auto& shape : distributive_shapes()) {
    if (shape.arity != 1) continue;
    const TdgNode n = node_for(shape);
    for (std::size_t a = 0; a < u.size(); ++a) {
      for (std::size_t b = a; b < u.size(); ++b) {
        for (std::size_t c = b; c < u.size(); ++c) {
          CandidateSet in = CandidateSet::of({u[a], u[b], u[c]});
          auto r = rej(n, {in});
          for (const auto& t : in) {
            const bool kept = r.validated[0].contains(t);
            EXPECT_EQ(kept, !contradiction(fwd(n, {CandidateSet{t}}))) << shape.op << " " << render(t);
          }
        }
      }
    }
  }
}

TEST(Compare, AlwaysExactlyBool) {
  const auto u = universe();
  for (const char* op : {"Lt", "Eq", "In", "Is", "GtE", "NotIn"}) {
    TdgNode n = expr_node("Compare", 2);
    n.ops = {op};
    for (const auto& a : u) {
      for (const auto& b : u) {
        auto out = fwd(n, {CandidateSet{a}, CandidateSet{b}});
        if (!contradiction(out)) EXPECT_EQ(out, S({"bool"})) << op;
      }
    }
  }
}

TEST(RuleTable, EveryBuilderOpHasOneEntry) {
  std::set<std::string> seen;
  for (const auto& e : rule_table()) EXPECT_TRUE(seen.insert(e.op).second) << e.op;
  ModuleAst m = parse_module(R"(import os
class C:
    def __init__(self):
        self.v = 1
def f(a, b=2, *args):
    x = [i for i in a if i] + list({1, 2}) + [*a]
    y = {k: v for k, v in b.items()}
    s = {q for q in a}
    g = (z for z in a)
    t = (1, *a)
    d = {1: 2, **b}
    u = -a if not a else ~b
    w = a @ b // 2 ** 3 % 4 << 1 >> 1 | 2 & 3 ^ 4
    x.append(1); x.extend(a); x.insert(0, 1)
    s.add(1); s.update(a); d[1] = 2
    h, *r = a
    p = a[1:2] + a[0] + os.sep + os.path.join(a)
    q = C().v + len(a) + (lambda: 1)() + f(a)
    e = a.strip() and a or b
    del x[0]
    try:
        pass
    except ValueError as err:
        pass
    yield 1
    return await_(a) if a < b < 3 else C
async def g():
    return await f(1)
)");
  ProgramTdg p = build_program(m, collect_user_types(m, {}));
  for (const auto& n : p.nodes) {
    if (n.kind != NodeKind::Expr) continue;
    EXPECT_NE(find_rule(n.op), nullptr) << n.op;
  }
}

TEST(Stubs, Lookup) {
  const auto& d = StubTable::defaults();
  EXPECT_GE(d.size(), 40u);
  EXPECT_EQ(lookup_stub("len", d), P("Callable[[Union[str, bytes, List, Tuple, Set, Dict]], int]"));
  auto en = lookup_stub("enumerate", d);
  ASSERT_TRUE(en);
  EXPECT_EQ(render(*en), "Callable[[Iterable[X]], Generator[Tuple[int, X]]]");
  EXPECT_FALSE(lookup_stub("no.such.fn", d));
}

TEST(Stubs, LoadOverridesAndOverloads) {
  StubTable t;
  t.load_text("# comment\nf : Callable[[int], int]\nf : Callable[[str], str]\n\ng : float\n");
  ASSERT_NE(t.find("f"), nullptr);
  EXPECT_EQ(t.find("f")->size(), 2u);
  t.load_text("f : Callable[[bytes], bytes]  # later source wins\n");
  EXPECT_EQ(t.find("f")->size(), 1u);
  EXPECT_EQ(lookup_stub("f", t), P("Callable[[bytes], bytes]"));
  EXPECT_EQ(lookup_stub("g", t), PyType::float_());
  EXPECT_THROW(t.load_text("broken line\n"), StubError);
  EXPECT_THROW(t.load_text("h : List[\n"), StubError);
  EXPECT_THROW(t.load_file("/nonexistent.stubs"), StubError);
}

TEST(Stubs, FixtureFileParses) {
  StubTable t;
  t.load_file(std::string(TDGTYPE_FIXTURES) + "/listing1.stubs");
  EXPECT_TRUE(t.find("ast.literal_eval"));
  EXPECT_TRUE(t.find("enumerate"));
}

TEST(Builtins, Members) {
  EXPECT_TRUE(builtin_has_member("str", "replace"));
  EXPECT_FALSE(builtin_has_member("list", "replace"));
  EXPECT_TRUE(builtin_has_member("bool", "bit_length"));
  EXPECT_EQ(builtin_name(P("List[int]")), "list");
  EXPECT_EQ(builtin_name(PyType::user("C")), "");
}

TEST(Forward, DepthIsCapped) {
  TdgNode lst = expr_node("ListLit", 1);
  auto out = fwd(lst, {S({"List[List[List[List[List[int]]]]]"})});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_LE(out.types()[0].depth(), kDefaultDepthCap);
}
