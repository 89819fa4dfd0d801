#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner: iterative-dataflow dominators and a brute-force
// enumeration of consistent slot assignments.

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tdgtype/solver.hpp"

namespace tdgtype::oracle {

// Random graph on n nodes. Acyclic graphs only have edges i -> j with i < j.
inline std::vector<std::vector<int>> random_graph(int n, std::mt19937_64& rng, bool acyclic) {
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(n));
  const double p = std::min(1.0, 2.5 / std::max(1, n));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (acyclic && j < i) continue;
      if (coin(rng) < (acyclic || j > i ? p : p / 3)) succ[static_cast<std::size_t>(i)].push_back(j);
    }
  }
  return succ;
}

// Dominator sets by round-robin dataflow: Dom(v) = {v} plus the
// intersection over the predecessors of v. Unreachable nodes keep an empty set.
inline std::vector<std::set<int>> naive_dominator_sets(const std::vector<std::vector<int>>& succ,
                                                       int root, const std::vector<bool>* alive = nullptr) {
  const int n = static_cast<int>(succ.size());
  auto live = [&](int v) { return !alive || (*alive)[static_cast<std::size_t>(v)]; };
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    if (!live(v)) continue;
    for (int w : succ[static_cast<std::size_t>(v)]) {
      if (live(w)) pred[static_cast<std::size_t>(w)].push_back(v);
    }
  }
  std::vector<bool> reach(static_cast<std::size_t>(n), false);
  std::vector<int> stack{root};
  reach[static_cast<std::size_t>(root)] = true;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w : succ[static_cast<std::size_t>(v)]) {
      if (live(w) && !reach[static_cast<std::size_t>(w)]) {
        reach[static_cast<std::size_t>(w)] = true;
        stack.push_back(w);
      }
    }
  }
  std::set<int> all;
  for (int v = 0; v < n; ++v) {
    if (reach[static_cast<std::size_t>(v)]) all.insert(v);
  }
  std::vector<std::set<int>> dom(static_cast<std::size_t>(n));
  for (int v : all) dom[static_cast<std::size_t>(v)] = v == root ? std::set<int>{root} : all;
  for (bool changed = true; changed;) {
    changed = false;
    for (int v : all) {
      if (v == root) continue;
      std::set<int> d;
      bool first = true;
      for (int p : pred[static_cast<std::size_t>(v)]) {
        if (!reach[static_cast<std::size_t>(p)]) continue;
        if (first) {
          d = dom[static_cast<std::size_t>(p)];
          first = false;
        } else {
          std::set<int> x;
          std::set_intersection(d.begin(), d.end(), dom[static_cast<std::size_t>(p)].begin(),
                                dom[static_cast<std::size_t>(p)].end(), std::inserter(x, x.begin()));
          d = std::move(x);
        }
      }
      d.insert(v);
      if (d != dom[static_cast<std::size_t>(v)]) {
        dom[static_cast<std::size_t>(v)] = std::move(d);
        changed = true;
      }
    }
  }
  return dom;
}

inline std::vector<int> naive_idom(const std::vector<std::vector<int>>& succ, int root) {
  auto dom = naive_dominator_sets(succ, root);
  std::vector<int> idom(succ.size(), -1);
  for (std::size_t v = 0; v < succ.size(); ++v) {
    if (dom[v].empty()) continue;
    if (static_cast<int>(v) == root) {
      idom[v] = root;
      continue;
    }
    // The strict dominator with the largest dominator set is the immediate one.
    for (int d : dom[v]) {
      if (d != static_cast<int>(v) && dom[static_cast<std::size_t>(d)].size() + 1 == dom[v].size()) idom[v] = d;
    }
  }
  return idom;
}

// Hot-slot reduction on a DAG: a super-root feeds every node without a live
// predecessor; nodes with a strict dominator other than the super-root are
// deleted; repeat until nothing is deleted.
inline std::vector<int> naive_undominated(const SlotGraph& g) {
  const int n = g.size;
  std::vector<bool> alive(static_cast<std::size_t>(n) + 1, true);
  while (true) {
    std::vector<std::vector<int>> succ(static_cast<std::size_t>(n) + 1);
    std::vector<bool> has_pred(static_cast<std::size_t>(n), false);
    for (int v = 0; v < n; ++v) {
      if (!alive[static_cast<std::size_t>(v)]) continue;
      for (int w : g.succ[static_cast<std::size_t>(v)]) {
        if (!alive[static_cast<std::size_t>(w)] || w == v) continue;
        succ[static_cast<std::size_t>(v)].push_back(w);
        has_pred[static_cast<std::size_t>(w)] = true;
      }
    }
    for (int v = 0; v < n; ++v) {
      if (alive[static_cast<std::size_t>(v)] && !has_pred[static_cast<std::size_t>(v)]) succ[static_cast<std::size_t>(n)].push_back(v);
    }
    auto dom = naive_dominator_sets(succ, n, &alive);
    bool dropped = false;
    for (int v = 0; v < n; ++v) {
      if (!alive[static_cast<std::size_t>(v)]) continue;
      const auto& d = dom[static_cast<std::size_t>(v)];
      const bool dominated = std::any_of(d.begin(), d.end(), [&](int u) { return u != v && u != n; });
      if (dominated) {
        alive[static_cast<std::size_t>(v)] = false;
        dropped = true;
      }
    }
    if (!dropped) break;
  }
  std::vector<int> out;
  for (int v = 0; v < n; ++v) {
    if (alive[static_cast<std::size_t>(v)]) out.push_back(v);
  }
  return out;
}

// A single function whose blank local slots are wired along the edges of g.
inline ProgramTdg blank_slot_program(const SlotGraph& g) {
  Tdg tdg;
  tdg.function = "f";
  for (int v = 0; v < g.size; ++v) {
    TdgNode node;
    node.kind = NodeKind::Symbol;
    node.id = "v" + std::to_string(v);
    node.var = node.id;
    node.order = 0;
    node.role = SymbolRole::Write;
    node.slot = SlotKind::Local;
    tdg.nodes.push_back(node);
    tdg.slots.push_back(v);
  }
  for (int v = 0; v < g.size; ++v) {
    for (int w : g.succ[static_cast<std::size_t>(v)]) {
      if (w != v) tdg.nodes[static_cast<std::size_t>(w)].inputs.push_back({v, EdgeKind::Flow, ""});
    }
  }
  ProgramTdg p;
  p.nodes = tdg.nodes;
  p.offsets = {0};
  p.tdgs.push_back(std::move(tdg));
  return p;
}

// --- rejection soundness ------------------------------------------------------

struct RandomTdg {
  ProgramTdg program;
  std::vector<int> slots;  // source slots, recommended
  std::vector<std::vector<PyType>> candidates;

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < program.nodes.size(); ++i) {
      const auto& n = program.nodes[i];
      os << i << " " << to_string(n.kind) << " " << n.op;
      for (const auto& o : n.ops) os << ":" << o;
      os << " <-";
      for (const auto& in : n.inputs) os << " " << in.src;
      if (n.cands.state() == SlotState::Recommended) os << " " << n.cands.render();
      os << "\n";
    }
    return os.str();
  }
};

// Types without two members of one joinable constructor, so merging never
// fuses distinct candidates into a new type.
inline const std::vector<PyType>& rejection_pool() {
  static const std::vector<PyType> pool = [] {
    std::vector<PyType> p;
    for (const char* s : {"int", "bool", "float", "str", "bytes", "None", "List[int]",
                          "Tuple[int, str]", "Dict[str, int]"}) {
      p.push_back(parse_type_expr(s));
    }
    p.push_back(PyType::user("Vec", true));
    p.push_back(PyType::user("Node"));
    return p;
  }();
  return pool;
}

inline RandomTdg random_rejection_tdg(std::mt19937_64& rng, int max_slots = 8, int max_cands = 4) {
  RandomTdg r;
  Tdg tdg;
  tdg.function = "f";
  const auto& pool = rejection_pool();
  const int nslots = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_slots));
  for (int s = 0; s < nslots; ++s) {
    std::vector<PyType> shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.resize(1 + rng() % static_cast<unsigned>(max_cands));
    TdgNode node;
    node.kind = NodeKind::Symbol;
    node.id = "s" + std::to_string(s);
    node.var = node.id;
    node.order = 0;
    node.role = SymbolRole::Write;
    node.slot = SlotKind::Local;
    node.cands = CandidateSet::of(shuffled, SlotState::Recommended);
    r.candidates.push_back(node.cands.types());
    r.slots.push_back(s);
    tdg.slots.push_back(s);
    tdg.nodes.push_back(std::move(node));
  }
  static const std::vector<std::pair<std::string, std::string>> binary = {
      {"Add", ""}, {"Sub", ""}, {"Mult", ""}, {"Div", ""}, {"Mod", ""},
      {"BitOr", ""}, {"Compare", "Lt"}, {"Compare", "Eq"}, {"FloorDiv", ""}};
  static const std::vector<std::string> unary = {"USub", "Not", "Iter", "Invert"};
  const int extra = 1 + static_cast<int>(rng() % 8);
  for (int k = 0; k < extra; ++k) {
    const int have = static_cast<int>(tdg.nodes.size());
    auto pick = [&] { return static_cast<int>(rng() % static_cast<unsigned>(have)); };
    TdgNode node;
    node.id = "n" + std::to_string(have);
    const unsigned choice = rng() % 10;
    if (choice < 5) {
      const auto& [op, cmp] = binary[rng() % binary.size()];
      node.kind = NodeKind::Expr;
      node.op = op;
      if (!cmp.empty()) node.ops = {cmp};
      node.inputs = {{pick(), EdgeKind::Flow, ""}, {pick(), EdgeKind::Flow, ""}};
    } else if (choice < 7) {
      node.kind = NodeKind::Expr;
      node.op = unary[rng() % unary.size()];
      node.inputs = {{pick(), EdgeKind::Flow, ""}};
    } else if (choice < 9) {
      node.kind = NodeKind::Merge;
      node.var = "m";
      node.inputs = {{pick(), EdgeKind::Flow, ""}, {pick(), EdgeKind::Flow, ""}};
      if (node.inputs[0].src == node.inputs[1].src) node.inputs.pop_back();
    } else {
      node.kind = NodeKind::Symbol;
      node.var = "x";
      node.role = SymbolRole::Read;
      node.inputs = {{pick(), EdgeKind::Flow, ""}};
    }
    tdg.nodes.push_back(std::move(node));
  }
  r.program.nodes = tdg.nodes;
  r.program.offsets = {0};
  r.program.tdgs.push_back(std::move(tdg));
  return r;
}

// Whether some combination with t at position j is accepted by the rule.
inline bool has_support(const TdgNode& node, const std::vector<CandidateSet>& in, std::size_t j,
                        const PyType& t, const StubTable& stubs) {
  std::vector<CandidateSet> combo(in.size());
  combo[j] = CandidateSet{t};
  std::function<bool(std::size_t)> search = [&](std::size_t k) -> bool {
    if (k == in.size()) {
      CandidateSet c = forward_apply(node, combo, stubs);
      return c.blank() || !c.empty();
    }
    if (k == j) return search(k + 1);
    for (const auto& u : in[k]) {
      combo[k] = CandidateSet{u};
      if (search(k + 1)) return true;
    }
    return false;
  };
  return search(0);
}

// Stand-in for "any type" at an input whose value is unknown.
inline const std::vector<PyType>& wildcard_universe() {
  static const std::vector<PyType> u = [] {
    std::vector<PyType> p = rejection_pool();
    for (const char* s : {"List[str]", "Set[int]", "Dict[int, str]", "Tuple[int]", "Generator[int]",
                          "Callable[[int], str]", "type", "List"}) {
      p.push_back(parse_type_expr(s));
    }
    return p;
  }();
  return u;
}

// Whether a single-type choice for every slot type-checks: values flow
// forward (merges are unions), every expression has a non-contradictory
// result and every member of every input takes part in some combination
// that the rule accepts on its own.
inline bool consistent_assignment(const RandomTdg& r, const std::vector<PyType>& choice,
                                  const StubTable& stubs) {
  const auto& nodes = r.program.nodes;
  std::vector<CandidateSet> val(nodes.size());
  for (std::size_t s = 0; s < r.slots.size(); ++s) {
    val[static_cast<std::size_t>(r.slots[s])] = CandidateSet{choice[s]};
  }
  for (std::size_t i = r.slots.size(); i < nodes.size(); ++i) {
    const auto& node = nodes[i];
    std::vector<CandidateSet> in;
    bool blank = false;
    for (const auto& e : node.inputs) {
      in.push_back(val[static_cast<std::size_t>(e.src)]);
      blank |= in.back().blank();
    }
    if (blank && node.kind != NodeKind::Expr) continue;
    if (blank) {
      // An unknown input may hold any type; known inputs still need support.
      std::vector<CandidateSet> wide = in;
      for (auto& c : wide) {
        if (c.blank()) c = CandidateSet::of(wildcard_universe());
      }
      for (std::size_t j = 0; j < in.size(); ++j) {
        if (in[j].blank()) continue;
        for (const auto& t : in[j]) {
          if (!has_support(node, wide, j, t, stubs)) return false;
        }
      }
      continue;
    }
    if (node.kind != NodeKind::Expr) {
      std::vector<PyType> u;
      for (const auto& c : in) u.insert(u.end(), c.begin(), c.end());
      CandidateSet m = CandidateSet::of(u);
      val[i] = in.size() > 1 ? m.joined() : m;
      continue;
    }
    CandidateSet out = forward_apply(node, in, stubs);
    if (!out.blank() && out.empty()) return false;
    for (std::size_t j = 0; j < in.size(); ++j) {
      for (const auto& t : in[j]) {
        if (!has_support(node, in, j, t, stubs)) return false;
      }
    }
    val[i] = out;
  }
  return true;
}

struct SoundnessVerdict {
  int removed = 0;
  std::vector<std::string> violations;
};

inline SoundnessVerdict check_rejection_soundness(const RandomTdg& r,
                                                  const StubTable& stubs = StubTable::defaults()) {
  SoundnessVerdict v;
  ProgramTdg p = r.program;
  Solver solver(p, stubs);
  solver.run_fixpoint();
  std::vector<std::pair<std::size_t, PyType>> removed;
  for (std::size_t s = 0; s < r.slots.size(); ++s) {
    const auto& final_set = p.nodes[static_cast<std::size_t>(r.slots[s])].cands;
    for (const auto& t : r.candidates[s]) {
      if (final_set.blank() || !final_set.contains(t)) removed.emplace_back(s, t);
    }
  }
  v.removed = static_cast<int>(removed.size());
  if (removed.empty()) return v;

  std::set<std::pair<std::size_t, PyType>> supported;
  std::vector<std::size_t> idx(r.slots.size(), 0);
  std::vector<PyType> choice(r.slots.size());
  while (true) {
    for (std::size_t s = 0; s < idx.size(); ++s) choice[s] = r.candidates[s][idx[s]];
    if (consistent_assignment(r, choice, stubs)) {
      for (std::size_t s = 0; s < idx.size(); ++s) supported.emplace(s, choice[s]);
    }
    std::size_t s = 0;
    while (s < idx.size() && ++idx[s] == r.candidates[s].size()) idx[s++] = 0;
    if (s == idx.size()) break;
  }
  for (const auto& [s, t] : removed) {
    if (supported.count({s, t})) {
      v.violations.push_back("slot s" + std::to_string(s) + " lost " + render(t) +
                             " which a consistent assignment uses");
    }
  }
  return v;
}

// --- random types ---------------------------------------------------------------

inline PyType random_type(std::mt19937_64& rng, int depth = 3) {
  static const std::vector<std::string> atoms = {"int", "float", "str", "bool", "bytes"};
  const unsigned pick = depth <= 0 ? rng() % 4 : rng() % 10;
  switch (pick) {
    case 0:
    case 1: return PyType::elementary(atoms[rng() % atoms.size()]);
    case 2: return rng() % 2 ? PyType::none() : PyType::user(rng() % 2 ? "Node" : "Zebra");
    case 3: return PyType::bare(rng() % 2 ? "List" : "Dict");
    case 4: return PyType::generic("List", {random_type(rng, depth - 1)});
    case 5: return PyType::generic("Set", {random_type(rng, depth - 1)});
    case 6: return PyType::generic("Dict", {random_type(rng, depth - 1), random_type(rng, depth - 1)});
    case 7: {
      std::vector<PyType> ps;
      for (int i = 0, n = 1 + static_cast<int>(rng() % 3); i < n; ++i) ps.push_back(random_type(rng, depth - 1));
      return PyType::generic("Tuple", ps);
    }
    case 8: return PyType::union_of({random_type(rng, depth - 1), random_type(rng, depth - 1)});
    default: return PyType::callable({random_type(rng, depth - 1)}, random_type(rng, depth - 1));
  }
}

// Parameter erasure on the rendered text: everything from the first bracket
// on. Optional[X] is spelled Union[X, None] after normalization.
inline std::string erased_text(const PyType& t) {
  const std::string r = render(t);
  const std::string head = r.substr(0, r.find('['));
  return head == "Optional" ? "Union" : head;
}

}  // namespace tdgtype::oracle
