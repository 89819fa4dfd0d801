#include "tdgtype/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tdgtype/recommend.hpp"

namespace tdgtype {

using nlohmann::json;

bool exact_match(const PyType& pred, const PyType& truth) { return pred == truth; }

bool match_to_parametric(const PyType& pred, const PyType& truth) {
  return erase_params(pred) == erase_params(truth);
}

std::string record_key(const GroundTruthRecord& r) {
  const std::string name = r.kind == AnnotationKind::Return ? "return" : r.name;
  return r.function + ":" + to_string(r.kind) + ":" + name;
}

const SlotAssignment* find_truth_slot(const Assignments& assignments, const ProgramTdg& program,
                                      const GroundTruthRecord& truth) {
  const FunctionAssignments* fa = assignments.find(truth.function);
  if (fa == nullptr) return nullptr;
  if (truth.kind == AnnotationKind::Argument) return fa->find(truth.name);
  if (truth.kind == AnnotationKind::Return) return fa->find("return");
  const SlotAssignment* first = nullptr;
  for (const auto& s : fa->slots) {
    const TdgNode& n = program.nodes[static_cast<std::size_t>(s.node)];
    if (s.kind != SlotKind::Local || n.var != truth.name) continue;
    if (n.line == truth.line) return &s;
    if (first == nullptr) first = &s;
  }
  return first;
}

RankedPredictions parse_ranked_predictions(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("predictions: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("predictions: expected a JSON object");
  RankedPredictions out;
  for (const auto& [k, v] : doc.items()) {
    auto key = canonical_slot_key(k);
    if (!key) throw std::invalid_argument("predictions: bad key '" + k + "'");
    auto& list = out[*key];
    if (v.is_null()) continue;  // unresolved slot
    if (v.is_string()) {
      list.push_back(v.get<std::string>());
      continue;
    }
    if (!v.is_array()) throw std::invalid_argument("predictions: '" + k + "' is not a list");
    for (const auto& t : v) {
      if (!t.is_string()) throw std::invalid_argument("predictions: '" + k + "' holds a non-string");
      list.push_back(t.get<std::string>());
    }
  }
  return out;
}

std::vector<GroundTruthRecord> parse_truths_jsonl(std::string_view text) {
  std::vector<GroundTruthRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw std::invalid_argument("truths line " + std::to_string(lineno) + ": malformed JSON");
    }
    GroundTruthRecord r;
    try {
      r.function = j.at("function").get<std::string>();
      auto kind = annotation_kind_from_string(j.at("kind").get<std::string>());
      if (!kind) throw std::invalid_argument("bad kind");
      r.kind = *kind;
      r.name = j.value("name", std::string());
      r.annotation = j.at("annotation").get<std::string>();
      r.line = j.value("line", 0);
    } catch (const std::exception& e) {
      throw std::invalid_argument("truths line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

const MetricCell* Report::cell(std::string_view category, int k) const {
  auto c = cells.find(std::string(category));
  if (c == cells.end()) return nullptr;
  auto it = c->second.find(k);
  return it == c->second.end() ? nullptr : &it->second;
}

std::string Report::to_json() const {
  json j;
  j["ks"] = ks;
  j["rare_threshold"] = rare_threshold;
  json cats = json::object();
  for (const auto& [cat, byk] : cells) {
    json c = json::object();
    int count = 0;
    for (const auto& [k, cell] : byk) {
      count = cell.total;
      c["top" + std::to_string(k)] = {{"exact_match", cell.exact_rate()},
                                      {"match_to_parametric", cell.parametric_rate()},
                                      {"exact_hits", cell.exact},
                                      {"parametric_hits", cell.parametric}};
    }
    c["count"] = count;
    cats[cat] = std::move(c);
  }
  j["categories"] = std::move(cats);
  j["key_mismatch"] = {{"missing_predictions", mismatch.missing_predictions},
                       {"unmatched_predictions", mismatch.unmatched_predictions}};
  j["unparsed_truths"] = unparsed_truths;
  j["duplicate_truths"] = duplicate_truths;
  return j.dump(2);
}

std::string Report::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(14) << "category" << std::right << std::setw(7) << "count";
  for (int k : ks) {
    os << std::setw(10) << ("top" + std::to_string(k) + ".em") << std::setw(10)
       << ("top" + std::to_string(k) + ".mp");
  }
  os << "\n";
  os << std::fixed << std::setprecision(3);
  for (const auto& cat : report_categories()) {
    auto c = cells.find(cat);
    if (c == cells.end()) continue;
    const int count = c->second.empty() ? 0 : c->second.begin()->second.total;
    os << std::left << std::setw(14) << cat << std::right << std::setw(7) << count;
    for (int k : ks) {
      const MetricCell* m = cell(cat, k);
      os << std::setw(10) << (m ? m->exact_rate() : 0.0) << std::setw(10) << (m ? m->parametric_rate() : 0.0);
    }
    os << "\n";
  }
  if (!mismatch.empty()) {
    os << "key mismatch: " << mismatch.missing_predictions.size() << " without prediction, "
       << mismatch.unmatched_predictions.size() << " without annotation\n";
  }
  return os.str();
}

Report evaluate(const RankedPredictions& preds, const std::vector<GroundTruthRecord>& truths,
                const EvalOptions& opts) {
  Report rep;
  rep.ks = opts.ks;
  std::sort(rep.ks.begin(), rep.ks.end());
  rep.ks.erase(std::unique(rep.ks.begin(), rep.ks.end()), rep.ks.end());
  rep.rare_threshold = opts.rare_threshold;

  struct Item {
    std::string key;
    AnnotationKind kind;
    PyType truth;
  };
  std::map<std::string, Item> items;  // sorted by key: order of records is irrelevant
  std::set<std::string> dup;
  for (const auto& r : truths) {
    const std::string key = record_key(r);
    if (items.count(key)) {
      dup.insert(key);
      continue;
    }
    auto t = try_parse_type_expr(r.annotation);
    if (!t) {
      rep.unparsed_truths.push_back(key);
      continue;
    }
    items.emplace(key, Item{key, r.kind, *t});
  }
  rep.duplicate_truths.assign(dup.begin(), dup.end());
  std::sort(rep.unparsed_truths.begin(), rep.unparsed_truths.end());
  rep.unparsed_truths.erase(std::unique(rep.unparsed_truths.begin(), rep.unparsed_truths.end()),
                            rep.unparsed_truths.end());

  std::map<std::string, int> freq;
  for (const auto& [key, it] : items) ++freq[render(it.truth)];
  const double n = static_cast<double>(items.size());

  for (const auto& cat : report_categories()) {
    for (int k : rep.ks) rep.cells[cat][k];
  }
  for (const auto& [key, it] : items) {
    std::vector<std::string> cats = {"all", to_string(it.kind)};
    const double share = static_cast<double>(freq[render(it.truth)]) / n;
    cats.push_back(share < opts.rare_threshold ? "rare" : "common");
    if (it.truth.is(TypeKind::User) &&
        (opts.user_types.empty() || opts.user_types.count(it.truth.name()))) {
      cats.push_back("user-defined");
    }

    // First rank at which each metric hits; blank or unparsable entries miss.
    std::size_t exact_rank = SIZE_MAX;
    std::size_t param_rank = SIZE_MAX;
    auto p = preds.find(key);
    if (p == preds.end()) {
      rep.mismatch.missing_predictions.push_back(key);
    } else {
      for (std::size_t i = 0; i < p->second.size(); ++i) {
        auto t = try_parse_type_expr(p->second[i]);
        if (!t) continue;
        if (exact_rank == SIZE_MAX && exact_match(*t, it.truth)) exact_rank = i;
        if (param_rank == SIZE_MAX && match_to_parametric(*t, it.truth)) param_rank = i;
      }
    }
    for (const auto& cat : cats) {
      for (int k : rep.ks) {
        MetricCell& c = rep.cells[cat][k];
        ++c.total;
        if (exact_rank < static_cast<std::size_t>(k)) ++c.exact;
        if (param_rank < static_cast<std::size_t>(k)) ++c.parametric;
      }
    }
  }
  for (const auto& [key, list] : preds) {
    if (!items.count(key)) rep.mismatch.unmatched_predictions.push_back(key);
  }
  return rep;
}

}  // namespace tdgtype
