#include "tdgtype/solver.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <utility>

namespace tdgtype {

const char* to_string(SlotStatus s) {
  switch (s) {
    case SlotStatus::Static: return "static";
    case SlotStatus::Validated: return "recommended+validated";
    case SlotStatus::Blank: return "blank";
  }
  return "?";
}

const SlotAssignment* FunctionAssignments::find(std::string_view key) const {
  for (const auto& s : slots) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

const FunctionAssignments* Assignments::find(std::string_view function) const {
  for (const auto& f : functions) {
    if (f.function == function) return &f;
  }
  return nullptr;
}

// --- dominators ----------------------------------------------------------------

std::vector<int> semi_nca_idom(const std::vector<std::vector<int>>& succ, int root) {
  const int n = static_cast<int>(succ.size());
  std::vector<int> pre(n, -1);  // vertex -> preorder number
  std::vector<int> vertex;      // preorder number -> vertex
  std::vector<int> parent;      // by number
  vertex.reserve(n);
  {
    std::vector<std::pair<int, std::size_t>> stack;
    pre[root] = 0;
    vertex.push_back(root);
    parent.push_back(-1);
    stack.emplace_back(root, 0);
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == succ[v].size()) {
        stack.pop_back();
        continue;
      }
      const int w = succ[v][next++];
      if (pre[w] != -1) continue;
      pre[w] = static_cast<int>(vertex.size());
      vertex.push_back(w);
      parent.push_back(pre[v]);
      stack.emplace_back(w, 0);
    }
  }
  const int m = static_cast<int>(vertex.size());
  std::vector<std::vector<int>> preds(m);
  for (int v = 0; v < n; ++v) {
    if (pre[v] < 0) continue;
    for (int w : succ[v]) preds[pre[w]].push_back(pre[v]);
  }

  std::vector<int> semi(m), label(m), ancestor(m, -1);
  for (int i = 0; i < m; ++i) semi[i] = label[i] = i;
  auto eval = [&](int v) {
    if (ancestor[v] == -1) return v;
    std::vector<int> path;
    for (int x = v; ancestor[ancestor[x]] != -1; x = ancestor[x]) path.push_back(x);
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      const int x = *it;
      const int a = ancestor[x];
      if (semi[label[a]] < semi[label[x]]) label[x] = label[a];
      ancestor[x] = ancestor[a];
    }
    return label[v];
  };
  for (int w = m - 1; w > 0; --w) {
    for (int v : preds[w]) {
      const int u = eval(v);
      if (semi[u] < semi[w]) semi[w] = semi[u];
    }
    ancestor[w] = parent[w];
  }
  std::vector<int> idom_num(m, 0);
  for (int w = 1; w < m; ++w) {
    int d = parent[w];
    while (d > semi[w]) d = idom_num[d];
    idom_num[w] = d;
  }

  std::vector<int> idom(n, -1);
  idom[root] = root;
  for (int w = 1; w < m; ++w) idom[vertex[w]] = vertex[idom_num[w]];
  return idom;
}

namespace {

// Strongly connected components, emitted in reverse topological order.
std::vector<std::vector<int>> tarjan(const std::vector<std::vector<int>>& succ,
                                     const std::vector<bool>* alive = nullptr) {
  const int n = static_cast<int>(succ.size());
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  std::vector<std::vector<int>> out;
  int counter = 0;
  auto live = [&](int v) { return alive == nullptr || (*alive)[v]; };
  for (int s = 0; s < n; ++s) {
    if (index[s] != -1 || !live(s)) continue;
    std::vector<std::pair<int, std::size_t>> work{{s, 0}};
    index[s] = low[s] = counter++;
    stack.push_back(s);
    on_stack[s] = true;
    while (!work.empty()) {
      auto& [v, next] = work.back();
      if (next < succ[v].size()) {
        const int w = succ[v][next++];
        if (!live(w)) continue;
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          work.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> comp;
        int w = -1;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
      const int done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  return out;
}

}  // namespace

std::vector<int> undominated_nodes(const SlotGraph& g) {
  std::vector<bool> alive(static_cast<std::size_t>(g.size), true);
  while (true) {
    auto comps = tarjan(g.succ, &alive);
    std::vector<int> comp_of(static_cast<std::size_t>(g.size), -1);
    for (std::size_t c = 0; c < comps.size(); ++c) {
      for (int v : comps[c]) comp_of[v] = static_cast<int>(c);
    }
    std::vector<bool> has_pred(comps.size(), false);
    for (int v = 0; v < g.size; ++v) {
      if (!alive[v]) continue;
      for (int w : g.succ[v]) {
        if (alive[w] && comp_of[w] != comp_of[v]) has_pred[comp_of[w]] = true;
      }
    }
    // Super-root at index g.size.
    std::vector<std::vector<int>> succ(static_cast<std::size_t>(g.size) + 1);
    for (int v = 0; v < g.size; ++v) {
      if (!alive[v]) continue;
      for (int w : g.succ[v]) {
        if (alive[w] && w != v) succ[v].push_back(w);
      }
    }
    std::vector<int> entries;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      if (!has_pred[c]) entries.push_back(comps[c].front());
    }
    std::sort(entries.begin(), entries.end());
    succ[g.size] = entries;
    auto idom = semi_nca_idom(succ, g.size);
    bool dropped = false;
    for (int v = 0; v < g.size; ++v) {
      if (alive[v] && idom[v] != g.size) {
        alive[v] = false;
        dropped = true;
      }
    }
    if (!dropped) break;
  }
  std::vector<int> out;
  for (int v = 0; v < g.size; ++v) {
    if (alive[v]) out.push_back(v);
  }
  return out;
}

// --- solver --------------------------------------------------------------------

namespace {

bool structural(const TdgNode& n) { return n.kind != NodeKind::Expr; }

bool joinable(const PyType& t) {
  return t.kind() == TypeKind::Generic &&
         (t.name() == "List" || t.name() == "Set" || t.name() == "Dict" || t.name() == "Generator");
}

bool guard_matches(const PyType& t, const PyType& g) {
  if (t == g) return true;
  if (g.kind() == TypeKind::Generic) return t.is_ctor(g.name());
  if (g.is_elementary("int")) return t.is_elementary("bool");
  if (g.is(TypeKind::User)) return t.is(TypeKind::User) && t.name() == g.name();
  return false;
}

bool matches_any(const PyType& t, const std::vector<PyType>& guard) {
  return std::any_of(guard.begin(), guard.end(), [&](const PyType& g) { return guard_matches(t, g); });
}

std::string slot_key_of(const TdgNode& n) {
  switch (n.slot) {
    case SlotKind::Argument: return n.var;
    case SlotKind::Return: return "return";
    default: return n.var + "$" + std::to_string(n.order);
  }
}

}  // namespace

Solver::Solver(ProgramTdg& program, const StubTable& stubs, InferenceConfig cfg)
    : program_(program), stubs_(stubs), cfg_(cfg) {
  if (cfg_.max_outer_iterations < 1) cfg_.max_outer_iterations = 1;
  const std::size_t n = program_.nodes.size();
  banned_.resize(n);
  recommended_.assign(n, false);
  tainted_.assign(n, false);
  dead_.assign(n, 0);
  uses_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = program_.nodes[i];
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      uses_[static_cast<std::size_t>(node.inputs[k].src)].push_back(
          {static_cast<int>(i), static_cast<int>(k)});
    }
    if (node.cands.state() == SlotState::Recommended) recommended_[i] = true;
  }
  build_order();
  refresh_taint();
}

void Solver::build_order() {
  const std::size_t n = program_.nodes.size();
  std::vector<std::vector<int>> succ(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& u : uses_[i]) succ[i].push_back(u.node);
  }
  sccs_ = tarjan(succ);
  std::reverse(sccs_.begin(), sccs_.end());
  scc_of_.assign(n, -1);
  for (std::size_t c = 0; c < sccs_.size(); ++c) {
    for (int v : sccs_[c]) scc_of_[static_cast<std::size_t>(v)] = static_cast<int>(c);
  }
}

void Solver::refresh_taint() {
  std::fill(tainted_.begin(), tainted_.end(), false);
  std::vector<int> stack;
  for (std::size_t i = 0; i < recommended_.size(); ++i) {
    if (recommended_[i]) {
      tainted_[i] = true;
      stack.push_back(static_cast<int>(i));
    }
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& u : uses_[static_cast<std::size_t>(v)]) {
      if (!tainted_[static_cast<std::size_t>(u.node)]) {
        tainted_[static_cast<std::size_t>(u.node)] = true;
        stack.push_back(u.node);
      }
    }
  }
}

bool Solver::tainted(int node) const { return tainted_[static_cast<std::size_t>(node)]; }

const std::set<PyType>& Solver::banned(int node) const {
  return banned_[static_cast<std::size_t>(node)];
}

CandidateSet Solver::edge_value(const TdgInput& in) const {
  const TdgNode& src = program_.nodes[static_cast<std::size_t>(in.src)];
  const CandidateSet& v = src.cands;
  if (v.blank() || src.kind != NodeKind::Branch) return v;
  if (in.kind != EdgeKind::BranchTrue && in.kind != EdgeKind::BranchFalse) return v;
  const bool want = in.kind == EdgeKind::BranchTrue;
  std::vector<PyType> kept;
  for (const auto& t : v) {
    if (matches_any(t, src.guard) == want) kept.push_back(t);
  }
  // A path no candidate can take says nothing.
  if (kept.empty() && !v.empty()) return {};
  return CandidateSet::of(std::move(kept), v.state());
}

CandidateSet Solver::compute(int n) const {
  const TdgNode& node = program_.nodes[static_cast<std::size_t>(n)];
  const auto& bans = banned_[static_cast<std::size_t>(n)];
  auto without_bans = [&](std::vector<PyType> types) {
    std::vector<PyType> out;
    for (auto& t : types) {
      t = truncate_depth(t, cfg_.depth_cap);
      if (!bans.count(t)) out.push_back(std::move(t));
    }
    return CandidateSet::of(std::move(out), SlotState::Inferred);
  };
  if (recommended_[static_cast<std::size_t>(n)]) return node.cands;

  if (!structural(node)) {
    std::vector<CandidateSet> inputs;
    inputs.reserve(node.inputs.size());
    for (const auto& in : node.inputs) inputs.push_back(edge_value(in));
    CandidateSet r = forward_apply(node, inputs, stubs_);
    if (r.blank()) return r;
    return without_bans(r.types());
  }

  std::vector<PyType> types;
  int contributions = 0;
  bool any_known = false;
  if (node.constant) {
    types.push_back(*node.constant);
    ++contributions;
    any_known = true;
  }
  for (const auto& in : node.inputs) {
    CandidateSet v = edge_value(in);
    if (v.blank()) {
      // Inside a cycle a blank input may only be not yet computed.
      if (scc_of_[static_cast<std::size_t>(in.src)] == scc_of_[static_cast<std::size_t>(n)] &&
          !dead_[static_cast<std::size_t>(in.src)]) {
        continue;
      }
      return {};
    }
    any_known = true;
    ++contributions;
    types.insert(types.end(), v.begin(), v.end());
  }
  if (!any_known) return {};
  CandidateSet u = CandidateSet::of(std::move(types), SlotState::Inferred);
  if (contributions > 1) u = u.joined();
  return without_bans(u.types());
}

bool Solver::forward_pass() {
  bool changed = false;
  auto& nodes = program_.nodes;
  for (const auto& comp : sccs_) {
    const int v0 = comp.front();
    bool cyclic = comp.size() > 1;
    if (!cyclic) {
      for (const auto& u : uses_[static_cast<std::size_t>(v0)]) cyclic |= u.node == v0;
    }
    if (!cyclic) {
      CandidateSet r = compute(v0);
      if (!(r == nodes[static_cast<std::size_t>(v0)].cands)) {
        nodes[static_cast<std::size_t>(v0)].cands = std::move(r);
        changed = true;
      }
      continue;
    }
    // Least solution of the cycle, recomputed from blank.
    std::vector<CandidateSet> before;
    before.reserve(comp.size());
    for (int v : comp) {
      before.push_back(nodes[static_cast<std::size_t>(v)].cands);
      if (!recommended_[static_cast<std::size_t>(v)]) nodes[static_cast<std::size_t>(v)].cands = {};
    }
    const std::size_t cap = 10 * comp.size() + 20;
    // Members still blank once the cycle settles never get a value; a
    // second round treats them as blank inputs rather than pending ones.
    for (bool settle = true; settle;) {
      std::size_t rounds = 0;
      bool moving = true;
      while (moving) {
        if (++rounds > cap) {
          throw IterationOverflow("cycle at " + nodes[static_cast<std::size_t>(v0)].id +
                                  " did not stabilize");
        }
        moving = false;
        for (int v : comp) {
          CandidateSet r = compute(v);
          if (!(r == nodes[static_cast<std::size_t>(v)].cands)) {
            nodes[static_cast<std::size_t>(v)].cands = std::move(r);
            moving = true;
          }
        }
      }
      settle = false;
      for (int v : comp) {
        const auto vi = static_cast<std::size_t>(v);
        if (nodes[vi].cands.blank() && !dead_[vi]) {
          dead_[vi] = 1;
          settle = true;
        }
      }
      if (settle) {
        for (int v : comp) {
          if (!recommended_[static_cast<std::size_t>(v)]) nodes[static_cast<std::size_t>(v)].cands = {};
        }
      }
    }
    for (int v : comp) dead_[static_cast<std::size_t>(v)] = 0;
    for (std::size_t i = 0; i < comp.size(); ++i) {
      if (!(before[i] == nodes[static_cast<std::size_t>(comp[i])].cands)) changed = true;
    }
  }
  return changed;
}

void Solver::remove(int n0, const PyType& t0, const std::string& origin, std::vector<int>& queue) {
  auto& nodes = program_.nodes;
  std::vector<std::pair<int, PyType>> work{{n0, t0}};
  while (!work.empty()) {
    auto [n, t] = std::move(work.back());
    work.pop_back();
    const auto ni = static_cast<std::size_t>(n);
    TdgNode& node = nodes[ni];
    if (!node.cands.contains(t)) continue;
    // A static fact is never emptied.
    if (node.cands.size() == 1 && !tainted_[ni]) continue;

    // Where each input type went when the node joined its inputs.
    std::vector<CandidateSet> in_values;
    int contributions = node.constant ? 1 : 0;
    std::vector<PyType> all;
    if (node.constant) all.push_back(*node.constant);
    if (structural(node) && !recommended_[ni]) {
      for (const auto& in : node.inputs) {
        in_values.push_back(edge_value(in));
        if (!in_values.back().blank()) {
          ++contributions;
          all.insert(all.end(), in_values.back().begin(), in_values.back().end());
        }
      }
    }
    node.cands.erase(t);
    banned_[ni].insert(t);
    if (recommended_[ni]) {
      const int ti = program_.tdg_of(n);
      rejections_.push_back({program_.tdgs[static_cast<std::size_t>(ti)].function, node.id,
                             slot_key_of(node), render(t), origin, node.cands.empty()});
    }
    for (const auto& u : uses_[ni]) {
      if (!structural(nodes[static_cast<std::size_t>(u.node)])) queue.push_back(u.node);
    }
    if (!structural(node)) {
      queue.push_back(n);
      continue;
    }
    if (recommended_[ni]) continue;
    CandidateSet joined = CandidateSet::of(all, SlotState::Inferred);
    if (contributions > 1) joined = joined.joined();
    auto target = [&](const PyType& u) -> PyType {
      if (contributions <= 1 || !joinable(u)) return u;
      for (const auto& m : joined) {
        if (m.kind() == TypeKind::Generic && m.name() == u.name()) return m;
      }
      return u;
    };
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      const int src = node.inputs[k].src;
      if (tainted_[ni] && !tainted_[static_cast<std::size_t>(src)]) continue;
      for (const auto& u : in_values[k]) {
        if (target(truncate_depth(u, cfg_.depth_cap)) == t) work.emplace_back(src, u);
      }
    }
  }
}

void Solver::reset_emptied() {
  auto& nodes = program_.nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!recommended_[i] || !nodes[i].cands.empty()) continue;
    recommended_[i] = false;
    nodes[i].cands.clear_to_blank();
    // Bans downstream were derived from the retracted recommendation.
    std::vector<bool> seen(nodes.size(), false);
    std::vector<int> stack;
    for (const auto& u : uses_[i]) stack.push_back(u.node);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      if (seen[static_cast<std::size_t>(v)] || static_cast<std::size_t>(v) == i) continue;
      seen[static_cast<std::size_t>(v)] = true;
      if (!recommended_[static_cast<std::size_t>(v)]) banned_[static_cast<std::size_t>(v)].clear();
      for (const auto& u : uses_[static_cast<std::size_t>(v)]) stack.push_back(u.node);
    }
  }
  refresh_taint();
}

bool Solver::backward_pass() {
  refresh_taint();
  auto& nodes = program_.nodes;
  const std::size_t before = rejections_.size();
  std::vector<std::size_t> sizes(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) sizes[i] = nodes[i].cands.size();

  std::vector<int> order;
  for (auto c = sccs_.rbegin(); c != sccs_.rend(); ++c) {
    for (auto v = c->rbegin(); v != c->rend(); ++v) {
      if (!structural(nodes[static_cast<std::size_t>(*v)])) order.push_back(*v);
    }
  }
  std::deque<int> queue(order.begin(), order.end());
  std::vector<bool> queued(nodes.size(), false);
  for (int v : order) queued[static_cast<std::size_t>(v)] = true;
  std::vector<int> pending;
  while (!queue.empty()) {
    const int e = queue.front();
    queue.pop_front();
    queued[static_cast<std::size_t>(e)] = false;
    const TdgNode& node = nodes[static_cast<std::size_t>(e)];
    std::vector<CandidateSet> inputs;
    inputs.reserve(node.inputs.size());
    for (const auto& in : node.inputs) inputs.push_back(edge_value(in));
    const CandidateSet output = node.cands;
    RejectResult r = reject_apply(node, inputs, stubs_, &output);
    for (const auto& [i, t] : r.removed) {
      const TdgInput& in = node.inputs[static_cast<std::size_t>(i)];
      if (in.kind == EdgeKind::Aux) continue;
      // Recommendation-derived evidence never removes static facts.
      if (tainted_[static_cast<std::size_t>(e)] && !tainted_[static_cast<std::size_t>(in.src)]) continue;
      remove(in.src, t, node.id, pending);
    }
    for (int v : pending) {
      if (!queued[static_cast<std::size_t>(v)]) {
        queued[static_cast<std::size_t>(v)] = true;
        queue.push_back(v);
      }
    }
    pending.clear();
  }
  bool changed = rejections_.size() != before;
  for (std::size_t i = 0; i < nodes.size() && !changed; ++i) changed = sizes[i] != nodes[i].cands.size();
  reset_emptied();
  return changed;
}

int Solver::run_fixpoint() {
  int changes = 0;
  const std::size_t limit = 10 * program_.nodes.size() + 10;
  std::size_t sweeps = 0;
  while (true) {
    if (++sweeps > limit) throw IterationOverflow("fixpoint exceeded " + std::to_string(limit) + " sweeps");
    ++sweeps_;
    const bool f = forward_pass();
    const bool b = backward_pass();
    changes += static_cast<int>(f) + static_cast<int>(b);
    if (!b) break;
  }
  return changes;
}

std::vector<int> Solver::blank_slots() const {
  std::vector<int> out;
  for (std::size_t ti = 0; ti < program_.tdgs.size(); ++ti) {
    const Tdg& tdg = program_.tdgs[ti];
    for (int s : tdg.slots) {
      const int g = program_.global(static_cast<int>(ti), s);
      const TdgNode& node = program_.nodes[static_cast<std::size_t>(g)];
      if (node.output && node.cands.blank()) out.push_back(g);
    }
  }
  return out;
}

std::vector<int> Solver::find_hot_slots() const {
  const auto blanks = blank_slots();
  if (blanks.empty()) return {};
  std::map<int, int> pos;
  for (std::size_t i = 0; i < blanks.size(); ++i) pos[blanks[i]] = static_cast<int>(i);
  const auto& nodes = program_.nodes;
  SlotGraph g;
  g.size = static_cast<int>(blanks.size());
  g.succ.resize(blanks.size());
  for (std::size_t i = 0; i < blanks.size(); ++i) {
    // Blank slots reachable through blank non-slot nodes.
    std::set<int> seen;
    std::vector<int> stack{blanks[i]};
    std::set<int> reached;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& u : uses_[static_cast<std::size_t>(v)]) {
        const int w = u.node;
        if (!seen.insert(w).second) continue;
        const TdgNode& wn = nodes[static_cast<std::size_t>(w)];
        if (!wn.cands.blank()) continue;
        if (auto it = pos.find(w); it != pos.end()) {
          if (it->second != static_cast<int>(i)) reached.insert(it->second);
          continue;
        }
        if (wn.kind == NodeKind::Symbol && wn.slot != SlotKind::None && wn.output) continue;
        stack.push_back(w);
      }
    }
    g.succ[i].assign(reached.begin(), reached.end());
  }
  std::vector<int> out;
  for (int v : undominated_nodes(g)) out.push_back(blanks[static_cast<std::size_t>(v)]);
  return out;
}

bool Solver::install(int node, const std::vector<PyType>& types) {
  const auto ni = static_cast<std::size_t>(node);
  std::vector<PyType> kept;
  for (const auto& t : types) {
    if (!banned_[ni].count(t)) kept.push_back(t);
  }
  if (kept.empty()) return false;
  program_.nodes[ni].cands = CandidateSet::of(std::move(kept), SlotState::Recommended);
  recommended_[ni] = true;
  refresh_taint();
  return true;
}

std::string Solver::slot_key(int slot) const {
  return slot_key_of(program_.nodes[static_cast<std::size_t>(slot)]);
}

SlotQuery Solver::query_for(int slot) const {
  const TdgNode& node = program_.nodes[static_cast<std::size_t>(slot)];
  const Tdg& tdg = program_.tdgs[static_cast<std::size_t>(program_.tdg_of(slot))];
  SlotQuery q;
  q.function = tdg.function;
  switch (node.slot) {
    case SlotKind::Argument: q.kind = AnnotationKind::Argument; break;
    case SlotKind::Return: q.kind = AnnotationKind::Return; break;
    default: q.kind = AnnotationKind::Local; break;
  }
  q.name = node.slot == SlotKind::Return ? "return" : node.var;
  std::set<std::string> seen;
  for (const auto& n : tdg.nodes) {
    const std::string& word = n.kind == NodeKind::Symbol ? n.var : n.name;
    if (word.empty() || word == "return") continue;
    if (seen.insert(word).second) q.context.push_back(word);
    if (q.context.size() >= 64) break;
  }
  return q;
}

Assignments Solver::assignments() const {
  Assignments out;
  for (std::size_t ti = 0; ti < program_.tdgs.size(); ++ti) {
    const Tdg& tdg = program_.tdgs[ti];
    FunctionAssignments fa;
    fa.function = tdg.function;
    for (int s : tdg.slots) {
      const int g = program_.global(static_cast<int>(ti), s);
      const TdgNode& node = program_.nodes[static_cast<std::size_t>(g)];
      if (!node.output) continue;
      SlotAssignment a;
      a.node = g;
      a.key = slot_key_of(node);
      a.kind = node.slot;
      if (!node.cands.blank() && !node.cands.empty()) a.type = node.cands.render();
      if (!a.type) {
        a.status = SlotStatus::Blank;
      } else {
        a.status = tainted_[static_cast<std::size_t>(g)] ? SlotStatus::Validated : SlotStatus::Static;
      }
      fa.slots.push_back(std::move(a));
    }
    out.functions.push_back(std::move(fa));
  }
  out.rejections = rejections_;
  return out;
}

std::vector<ReplayViolation> Solver::replay_check() const {
  std::vector<ReplayViolation> out;
  const auto& nodes = program_.nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TdgNode& node = nodes[i];
    if (structural(node) || tainted_[i]) continue;
    std::vector<CandidateSet> inputs;
    bool complete = true;
    for (const auto& in : node.inputs) {
      inputs.push_back(edge_value(in));
      if (in.kind != EdgeKind::Aux && (inputs.back().blank() || inputs.back().empty())) complete = false;
    }
    if (!complete || inputs.empty()) continue;
    const std::string fn =
        program_.tdgs[static_cast<std::size_t>(program_.tdg_of(static_cast<int>(i)))].function;
    CandidateSet fw = forward_apply(node, inputs, stubs_);
    if (!fw.blank() && fw.empty()) {
      out.push_back({fn, node.id, "no valid input combination"});
      continue;
    }
    RejectResult r = reject_apply(node, inputs, stubs_);
    for (const auto& [k, t] : r.removed) {
      out.push_back({fn, node.id, "input " + std::to_string(k) + " type " + render(t) + " unsupported"});
    }
  }
  return out;
}

// --- outer loop ------------------------------------------------------------------

InferenceResult infer(ProgramTdg& program, Recommender& recommender, const UserTypeSet& user_types,
                      const StubTable& stubs, const InferenceConfig& cfg,
                      const EmbeddingProvider* emb) {
  Solver solver(program, stubs, cfg);
  InferenceResult result;
  std::vector<std::string> valid;
  for (const auto& [name, info] : user_types.entries) valid.push_back(name);
  const int max_iters = std::max(1, cfg.max_outer_iterations);
  for (int it = 1; it <= max_iters; ++it) {
    solver.run_fixpoint();
    result.outer_iterations = it;
    if (it == max_iters || solver.blank_slots().empty()) break;
    const auto hot = solver.find_hot_slots();
    if (hot.empty()) break;
    std::vector<SlotQuery> queries;
    for (int s : hot) {
      queries.push_back(solver.query_for(s));
      result.hot_slots.push_back(slot_key(queries.back()));
    }
    const auto recs = recommender.recommend(queries, cfg.top_k);
    bool installed = false;
    for (std::size_t i = 0; i < hot.size() && i < recs.size(); ++i) {
      std::vector<PyType> types;
      for (const auto& c : recs[i].candidates) {
        if (static_cast<int>(types.size()) >= cfg.top_k) break;
        auto t = try_parse_type_expr(c.type);
        if (!t) continue;
        auto fixed = correct_parsed_type(queries[i].name, valid, *t, cfg.penalty, emb);
        if (!fixed) continue;
        if (std::find(types.begin(), types.end(), *fixed) == types.end()) types.push_back(*fixed);
      }
      if (!types.empty()) installed |= solver.install(hot[i], types);
    }
    if (!installed) break;
  }
  result.assignments = solver.assignments();
  return result;
}

}  // namespace tdgtype
