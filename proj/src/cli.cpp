#include "tdgtype/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tdgtype/recommend.hpp"

namespace tdgtype {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Serializes access to a shared backend from the worker pool.
class LockedRecommender final : public Recommender {
 public:
  explicit LockedRecommender(Recommender& inner) : inner_(inner) {}
  std::vector<Recommendation> recommend(const std::vector<SlotQuery>& slots, int k) override {
    std::lock_guard<std::mutex> lock(mu_);
    return inner_.recommend(slots, k);
  }
  [[nodiscard]] std::string name() const override { return inner_.name(); }

 private:
  Recommender& inner_;
  std::mutex mu_;
};

std::vector<std::string> split_paths(const char* env) {
  std::vector<std::string> out;
  if (env == nullptr) return out;
  std::stringstream ss(env);
  std::string part;
  while (std::getline(ss, part, ':')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

StubTable load_stubs(const std::vector<std::string>& paths) {
  StubTable table = StubTable::defaults();
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".stubs") files.push_back(e.path().string());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) table.load_file(f);
    } else if (fs::exists(p, ec)) {
      table.load_file(p);
    } else {
      throw ConfigError("stubs path not found: " + p);
    }
  }
  return table;
}

std::string write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return {};
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) return "cannot write " + path;
  f << text;
  return f ? std::string() : "cannot write " + path;
}

json type_or_null(const SlotAssignment& s) { return s.type ? json(*s.type) : json(nullptr); }

json function_json(const FunctionAssignments& fa) {
  json args = json::object();
  json locals = json::object();
  json status = json::object();
  json ret = nullptr;
  for (const auto& s : fa.slots) {
    status[s.key] = to_string(s.status);
    switch (s.kind) {
      case SlotKind::Argument: args[s.key] = type_or_null(s); break;
      case SlotKind::Return: ret = type_or_null(s); break;
      default: locals[s.key] = type_or_null(s); break;
    }
  }
  return {{"arguments", args}, {"return", ret}, {"locals", locals}, {"status", status}};
}

struct FileOutcome {
  std::string path;
  std::optional<std::string> error;
  json functions = json::object();
  std::vector<json> rejections;
  // eval
  std::vector<GroundTruthRecord> truths;
  RankedPredictions predictions;
  std::vector<std::string> user_types;
  int skipped_truths = 0;
};

struct Engine {
  const CliConfig& cfg;
  const StubTable& stubs;
  Recommender& recommender;
  const EmbeddingProvider* emb;

  // Builds and solves one source text.
  void solve(FileOutcome& fo, const std::string& source, bool for_eval) const {
    ModuleAst module = parse_module(source, fo.path);
    const std::string dir = fs::path(fo.path).parent_path().string();
    UserTypeSet users = collect_user_types(module, {dir.empty() ? "." : dir});
    for (const auto& [name, info] : users.entries) fo.user_types.push_back(name);
    ProgramTdg program = build_program(module, users);
    InferenceConfig icfg;
    icfg.max_outer_iterations = cfg.max_iters;
    icfg.top_k = cfg.k;
    icfg.deterministic = !cfg.sample;
    InferenceResult r = infer(program, recommender, users, stubs, icfg, emb);
    for (const auto& fa : r.assignments.functions) fo.functions[fa.function] = function_json(fa);
    for (const auto& rej : r.assignments.rejections) {
      fo.rejections.push_back({{"file", fo.path},
                               {"function", rej.function},
                               {"slot", rej.key},
                               {"type", rej.type},
                               {"origin", rej.origin},
                               {"emptied", rej.emptied}});
    }
    if (!for_eval) return;
    std::vector<GroundTruthRecord> kept;
    for (auto t : fo.truths) {
      const FunctionAssignments* fa = r.assignments.find(t.function);
      if (fa == nullptr) {
        ++fo.skipped_truths;  // module level or class attribute: no slots exist
        continue;
      }
      const SlotAssignment* slot = find_truth_slot(r.assignments, program, t);
      t.function = fo.path + "::" + t.function;
      auto& list = fo.predictions[record_key(t)];
      if (slot != nullptr && slot->type) list.push_back(*slot->type);
      kept.push_back(std::move(t));
    }
    fo.truths = std::move(kept);
  }
};

// Runs `work` over every file on a small pool; results keep input order.
std::vector<FileOutcome> for_each_file(const std::vector<std::string>& files, bool parallel,
                                       const std::function<void(FileOutcome&)>& work) {
  std::vector<FileOutcome> results(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) results[i].path = files[i];
  auto run = [&](FileOutcome& fo) {
    try {
      work(fo);
    } catch (const SyntaxError& e) {
      fo.error = "syntax error at line " + std::to_string(e.line()) + ": " + e.message();
    } catch (const FileError& e) {
      fo.error = e.what();
    } catch (const IterationOverflow& e) {
      fo.error = std::string("iteration overflow: ") + e.what();
    }
  };
  unsigned workers = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(files.size(), 1)));
  if (workers <= 1) {
    for (auto& fo : results) run(fo);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < results.size(); i = next++) run(results[i]);
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

std::unique_ptr<Recommender> make_recommender(const CliConfig& cfg, const std::vector<std::string>& files) {
  if (cfg.recommender == "none") return std::make_unique<NullRecommender>();
  if (cfg.recommender == "file") {
    if (cfg.predictions.empty()) throw ConfigError("--recommender file needs --predictions");
    try {
      return std::make_unique<FileRecommender>(FileRecommender::load(cfg.predictions));
    } catch (const FileError& e) {
      throw ConfigError(e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (cfg.recommender == "sidecar") {
    if (cfg.sidecar_cmd.empty()) throw ConfigError("--recommender sidecar needs --sidecar-cmd");
    return std::make_unique<SidecarRecommender>(cfg.sidecar_cmd);
  }
  FrequencyTable table;
  if (!cfg.frequency_table.empty()) {
    try {
      table = FrequencyTable::load(cfg.frequency_table);
    } catch (const FileError& e) {
      throw ConfigError(e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    std::vector<std::string> annotations;
    for (const auto& f : files) {
      try {
        for (const auto& t : strip_annotations(read_file(f), f).truths) annotations.push_back(t.annotation);
      } catch (const std::exception&) {
        // unreadable or unparsable files contribute nothing
      }
    }
    table = FrequencyTable::from_annotations(annotations);
  }
  return std::make_unique<NaiveRecommender>(std::move(table), !cfg.sample, cfg.seed);
}

std::unique_ptr<TrainedEmbedding> load_embeddings(const CliConfig& cfg) {
  if (cfg.embeddings.empty()) return nullptr;
  try {
    return std::make_unique<TrainedEmbedding>(TrainedEmbedding::load(cfg.embeddings));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("embeddings: ") + e.what());
  }
}

void report_errors(const std::vector<FileOutcome>& results, std::ostream& err) {
  for (const auto& fo : results) {
    if (fo.error) err << fo.path << ": " << *fo.error << " (skipped)\n";
  }
}

int cmd_infer(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto files = collect_python_files(cfg.inputs);
  const StubTable stubs = load_stubs(cfg.stubs);
  auto rec = make_recommender(cfg, files);
  auto emb = load_embeddings(cfg);
  LockedRecommender locked(*rec);
  Engine engine{cfg, stubs, locked, emb.get()};
  const bool parallel = !(cfg.recommender == "naive" && cfg.sample);
  auto results = for_each_file(files, parallel, [&](FileOutcome& fo) {
    engine.solve(fo, read_file(fo.path), false);
  });
  report_errors(results, err);
  json doc = json::object();
  std::vector<json> rejections;
  for (auto& fo : results) {
    if (fo.error) continue;
    doc[fo.path] = std::move(fo.functions);
    for (auto& r : fo.rejections) rejections.push_back(std::move(r));
  }
  if (!rejections.empty()) doc["rejections"] = rejections;
  if (auto* side = dynamic_cast<SidecarRecommender*>(rec.get())) {
    for (const auto& e : side->errors()) err << "sidecar: " << e << "\n";
  }
  if (auto e = write_or_print(cfg.out, doc.dump(2) + "\n", out); !e.empty()) {
    err << e << "\n";
    return kExitInput;
  }
  return kExitOk;
}

int cmd_eval(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  EvalOptions opts;
  opts.rare_threshold = cfg.rare_threshold;
  RankedPredictions preds;
  std::vector<GroundTruthRecord> truths;
  if (!cfg.truths.empty() || !cfg.ranked.empty()) {
    if (cfg.truths.empty() || cfg.ranked.empty()) throw ConfigError("--truths and --ranked go together");
    try {
      truths = parse_truths_jsonl(read_file(cfg.truths));
      preds = parse_ranked_predictions(read_file(cfg.ranked));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    const auto files = collect_python_files(cfg.inputs);
    const StubTable stubs = load_stubs(cfg.stubs);
    auto rec = make_recommender(cfg, files);
    auto emb = load_embeddings(cfg);
    LockedRecommender locked(*rec);
    Engine engine{cfg, stubs, locked, emb.get()};
    const bool parallel = !(cfg.recommender == "naive" && cfg.sample);
    auto results = for_each_file(files, parallel, [&](FileOutcome& fo) {
      StrippedSource stripped = strip_annotations(read_file(fo.path), fo.path);
      fo.truths = std::move(stripped.truths);
      engine.solve(fo, stripped.source, true);
    });
    report_errors(results, err);
    int skipped = 0;
    for (auto& fo : results) {
      if (fo.error) continue;
      skipped += fo.skipped_truths;
      truths.insert(truths.end(), fo.truths.begin(), fo.truths.end());
      preds.insert(fo.predictions.begin(), fo.predictions.end());
      opts.user_types.insert(fo.user_types.begin(), fo.user_types.end());
    }
    if (skipped > 0) err << skipped << " annotations outside functions not evaluated\n";
  }
  Report report = evaluate(preds, truths, opts);
  out << report.to_text();
  if (!cfg.out.empty()) {
    if (auto e = write_or_print(cfg.out, report.to_json() + "\n", out); !e.empty()) {
      err << e << "\n";
      return kExitInput;
    }
  }
  return kExitOk;
}

std::string dot_file_name(const std::string& path, const std::string& function) {
  std::string name = fs::path(path).stem().string() + "." + function + ".dot";
  for (auto& c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-') c = '_';
  }
  return name;
}

int cmd_dump_tdg(const CliConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto files = collect_python_files(cfg.inputs);
  const StubTable stubs = load_stubs(cfg.stubs);
  if (!cfg.out.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw ConfigError("cannot create " + cfg.out);
  }
  int status = kExitOk;
  for (const auto& f : files) {
    try {
      ModuleAst module = parse_module(read_file(f), f);
      UserTypeSet users = collect_user_types(module, {fs::path(f).parent_path().string()});
      ProgramTdg program = build_program(module, users);
      Solver solver(program, stubs);
      solver.run_fixpoint();
      for (std::size_t i = 0; i < program.tdgs.size(); ++i) {
        const std::string dot = export_dot(program.snapshot(static_cast<int>(i)));
        const std::string target =
            cfg.out.empty() ? "" : (fs::path(cfg.out) / dot_file_name(f, program.tdgs[i].function)).string();
        if (auto e = write_or_print(target, dot, out); !e.empty()) {
          err << e << "\n";
          status = kExitInput;
        }
      }
    } catch (const SyntaxError& e) {
      err << f << ": syntax error at line " << e.line() << ": " << e.message() << " (skipped)\n";
    }
  }
  return status;
}

int cmd_train_embeddings(const CliConfig& cfg, std::ostream&, std::ostream& err) {
  if (cfg.out.empty()) throw ConfigError("train-embeddings needs --out");
  const auto files = collect_python_files(cfg.inputs);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& f : files) {
    try {
      sentences.push_back(identifier_tokens(read_file(f)));
    } catch (const SyntaxError& e) {
      err << f << ": syntax error at line " << e.line() << " (skipped)\n";
    }
  }
  SkipGramConfig sg;
  sg.dimension = cfg.dimension;
  sg.window = cfg.window;
  sg.epochs = cfg.epochs;
  sg.seed = cfg.seed;
  TrainedEmbedding emb = train_skipgram(sentences, sg);
  emb.save(cfg.out);
  err << "trained " << emb.size() << " vectors of dimension " << emb.dimension() << "\n";
  return kExitOk;
}

void add_engine_options(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--stubs", cfg.stubs, "Stub files or directories (default: HITYPER_STUBS)");
  sub->add_option("--recommender", cfg.recommender, "Recommendation backend")
      ->check(CLI::IsMember({"none", "naive", "file", "sidecar"}));
  sub->add_option("--predictions", cfg.predictions, "Predictions file for the file backend");
  sub->add_option("--freq", cfg.frequency_table, "Frequency table for the naive backend");
  sub->add_option("--sidecar-cmd", cfg.sidecar_cmd, "Command that speaks the sidecar protocol");
  sub->add_option("--embeddings", cfg.embeddings, "Trained embeddings for type correction");
  sub->add_option("--k", cfg.k, "Candidates installed per hot slot")->check(CLI::IsMember({1, 3, 5}));
  sub->add_option("--max-iters", cfg.max_iters, "Outer iterations")->check(CLI::PositiveNumber);
  sub->add_option("--seed", cfg.seed, "Seed for sampling backends");
  sub->add_flag("--sample", cfg.sample, "Naive backend samples instead of taking the top k");
  sub->add_option("--out", cfg.out, "Output path");
}

}  // namespace

std::vector<std::string> collect_python_files(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      std::vector<std::string> found;
      for (auto it = fs::recursive_directory_iterator(p, ec); !ec && it != fs::recursive_directory_iterator();
           it.increment(ec)) {
        if (it->is_regular_file() && it->path().extension() == ".py") found.push_back(it->path().string());
      }
      if (ec) throw FileError("cannot read directory " + p);
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(p, ec)) {
      out.push_back(p);
    } else {
      throw FileError("no such file or directory: " + p);
    }
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  cfg.stubs = split_paths(std::getenv("HITYPER_STUBS"));
  CLI::App app{"Hybrid static and recommendation-driven type inference for Python"};
  app.name("tdgtype");
  app.require_subcommand(1);

  auto* infer_cmd = app.add_subcommand("infer", "Infer types and write the assignment JSON");
  infer_cmd->add_option("paths", cfg.inputs, "Python files or directories")->required();
  add_engine_options(infer_cmd, cfg);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate predictions against annotations");
  eval_cmd->add_option("paths", cfg.inputs, "Annotated Python files or directories");
  add_engine_options(eval_cmd, cfg);
  eval_cmd->add_option("--truths", cfg.truths, "Ground truth JSON lines");
  eval_cmd->add_option("--ranked", cfg.ranked, "Ranked predictions to score directly");
  eval_cmd->add_option("--rare-threshold", cfg.rare_threshold, "Share below which a type is rare")
      ->check(CLI::Range(0.0, 1.0));

  auto* dump_cmd = app.add_subcommand("dump-tdg", "Write one DOT graph per function");
  dump_cmd->add_option("paths", cfg.inputs, "Python files or directories")->required();
  dump_cmd->add_option("--stubs", cfg.stubs, "Stub files or directories");
  dump_cmd->add_option("--out", cfg.out, "Output directory (default: stdout)");

  auto* train_cmd = app.add_subcommand("train-embeddings", "Train skip-gram subtoken embeddings");
  train_cmd->add_option("paths", cfg.inputs, "Python files or directories")->required();
  train_cmd->add_option("--out", cfg.out, "Embedding file to write");
  train_cmd->add_option("--dim", cfg.dimension, "Vector dimension")->check(CLI::PositiveNumber);
  train_cmd->add_option("--window", cfg.window, "Context window")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", cfg.epochs, "Training epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", cfg.seed, "Random seed");

  std::vector<const char*> argv{"tdgtype"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "tdgtype: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (infer_cmd->parsed()) return cmd_infer(cfg, out, err);
    if (eval_cmd->parsed()) return cmd_eval(cfg, out, err);
    if (dump_cmd->parsed()) return cmd_dump_tdg(cfg, out, err);
    return cmd_train_embeddings(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "tdgtype: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StubError& e) {
    err << "tdgtype: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FileError& e) {
    err << "tdgtype: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "tdgtype: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace tdgtype
