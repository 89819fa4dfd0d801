#pragma once

// Command-line driver: infer, eval, dump-tdg and train-embeddings.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tdgtype/eval.hpp"
#include "tdgtype/solver.hpp"

namespace tdgtype {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;   // unreadable input
inline constexpr int kExitConfig = 3;  // bad flags or configuration files

struct CliConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> stubs;  // defaults to HITYPER_STUBS (colon-separated)
  std::string recommender = "none";
  std::string predictions;     // file backend
  std::string frequency_table;  // naive backend; built from the inputs' annotations when empty
  std::string sidecar_cmd;
  std::string embeddings;
  int k = 1;
  int max_iters = 3;
  std::uint64_t seed = 0;
  bool sample = false;  // naive backend draws instead of taking the top k
  std::string out;
  // eval
  std::string truths;
  std::string ranked;
  double rare_threshold = 0.001;
  // train-embeddings
  int dimension = 256;
  int window = 10;
  int epochs = 5;
};

// Entry point; never throws. Output documents go to `out` unless --out is
// given; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Python files under the given paths in sorted order. Throws FileError for a
// missing path.
std::vector<std::string> collect_python_files(const std::vector<std::string>& paths);

}  // namespace tdgtype
