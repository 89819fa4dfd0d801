#pragma once

// Recommender backends for hot slots and the similarity-based correction of
// recommended user-defined types.

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tdgtype/frontend.hpp"
#include "tdgtype/types.hpp"

namespace tdgtype {

struct SlotQuery {
  std::string function;  // qualified name
  AnnotationKind kind = AnnotationKind::Argument;
  std::string name;  // argument or variable name; "return" for returns
  std::vector<std::string> context;
};

// "function:kind:name", the key used by prediction files.
std::string slot_key(const SlotQuery& q);
// Normalizes kind aliases (arg, ret, var) and "f:return" to slot_key form.
std::optional<std::string> canonical_slot_key(std::string_view key);

struct ScoredType {
  std::string type;
  double score = 0.0;

  friend bool operator==(const ScoredType&, const ScoredType&) = default;
};

struct Recommendation {
  std::string slot;  // slot_key of the query
  std::vector<ScoredType> candidates;  // scores non-increasing, at most k

  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

class Recommender {
 public:
  virtual ~Recommender() = default;
  // One Recommendation per query, in query order.
  virtual std::vector<Recommendation> recommend(const std::vector<SlotQuery>& slots, int k) = 0;
  [[nodiscard]] virtual std::string name() const = 0;
};

class NullRecommender final : public Recommender {
 public:
  std::vector<Recommendation> recommend(const std::vector<SlotQuery>& slots, int k) override;
  [[nodiscard]] std::string name() const override { return "none"; }
};

// --- frequency baseline ----------------------------------------------------

struct FrequencyTable {
  std::vector<std::pair<std::string, long>> entries;  // count desc, ties lexicographic

  // Counts annotation strings (normalized rendering when they parse).
  static FrequencyTable from_annotations(const std::vector<std::string>& annotations);
  // JSON: [["str", 100], ["int", 90], ...] or {"str": 100, ...}.
  static FrequencyTable from_json_text(std::string_view text);
  static FrequencyTable load(const std::string& path);

  void sort();
  [[nodiscard]] bool empty() const { return entries.empty(); }
};

inline constexpr std::size_t kNaiveTopTypes = 10;

// Deterministic: the first k of the top ten, scored by count / top-ten total.
// Sampling: k draws without replacement, proportional to counts.
Recommendation naive_recommend(const std::string& slot, int k, const FrequencyTable& table,
                               bool deterministic, std::mt19937_64* rng = nullptr);

class NaiveRecommender final : public Recommender {
 public:
  NaiveRecommender(FrequencyTable table, bool deterministic, std::uint64_t seed = 0);
  std::vector<Recommendation> recommend(const std::vector<SlotQuery>& slots, int k) override;
  [[nodiscard]] std::string name() const override { return "naive"; }

 private:
  FrequencyTable table_;
  bool deterministic_;
  std::mt19937_64 rng_;
};

// --- predictions file --------------------------------------------------------

class FileRecommender final : public Recommender {
 public:
  // JSON map "function:kind:name" -> ordered list of type strings. Kinds
  // `arg`/`ret` are accepted for argument/return.
  static FileRecommender from_json_text(std::string_view text);
  static FileRecommender load(const std::string& path);

  std::vector<Recommendation> recommend(const std::vector<SlotQuery>& slots, int k) override;
  [[nodiscard]] std::string name() const override { return "file"; }
  [[nodiscard]] std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

// --- sidecar ---------------------------------------------------------------

class SidecarUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Request line for one query.
std::string encode_request(long id, const SlotQuery& q, int k);
// Parses one response line into (id, candidates). Throws ProtocolError.
std::pair<long, std::vector<ScoredType>> decode_response(std::string_view line);

// Line-delimited JSON over a pipe pair. Abstract so tests can drive the
// protocol without a child process.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  // nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
};

// Spawns `/bin/sh -c command` with stdin/stdout connected.
class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command);
  ~ProcessChannel() override;
  ProcessChannel(const ProcessChannel&) = delete;
  ProcessChannel& operator=(const ProcessChannel&) = delete;

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line() override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

class SidecarRecommender final : public Recommender {
 public:
  explicit SidecarRecommender(std::unique_ptr<LineChannel> channel);
  // Starts the command lazily on the first request.
  explicit SidecarRecommender(std::string command);

  // One request at a time; responses are matched by id, so answers to
  // earlier requests may arrive late. Failures leave slots empty.
  std::vector<Recommendation> recommend(const std::vector<SlotQuery>& slots, int k) override;
  [[nodiscard]] std::string name() const override { return "sidecar"; }
  // Errors met so far (unavailable process, malformed lines).
  [[nodiscard]] const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::string command_;
  long next_id_ = 1;
  bool failed_ = false;
  std::vector<std::string> errors_;
};

// --- subtokens, embeddings, similarity --------------------------------------

// Learned byte-pair merges, applied in order.
struct BpeTable {
  std::vector<std::pair<std::string, std::string>> merges;
  std::map<std::string, int> vocabulary;  // known words, left unsplit

  static BpeTable learn(const std::vector<std::string>& words, int merges);
  [[nodiscard]] std::vector<std::string> segment(const std::string& word) const;
};

// Splits on underscores, digits and camel-case boundaries, lowercased; with
// a BPE table, words outside its vocabulary are further segmented.
std::vector<std::string> subtokenize(std::string_view ident, const BpeTable* bpe = nullptr);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  [[nodiscard]] virtual std::optional<Eigen::VectorXd> vector(const std::string& token) const = 0;
  [[nodiscard]] virtual bool lexical() const = 0;
};

// Token-multiset cosine; no vectors.
class LexicalEmbedding final : public EmbeddingProvider {
 public:
  [[nodiscard]] std::optional<Eigen::VectorXd> vector(const std::string&) const override {
    return std::nullopt;
  }
  [[nodiscard]] bool lexical() const override { return true; }
};

class TrainedEmbedding final : public EmbeddingProvider {
 public:
  TrainedEmbedding() = default;
  explicit TrainedEmbedding(std::map<std::string, Eigen::VectorXd> vectors);

  [[nodiscard]] std::optional<Eigen::VectorXd> vector(const std::string& token) const override;
  [[nodiscard]] bool lexical() const override { return false; }
  [[nodiscard]] int dimension() const;
  [[nodiscard]] std::size_t size() const { return vectors_.size(); }

  // Text format: first line "count dim", then "token v1 ... vdim".
  void save(const std::string& path) const;
  static TrainedEmbedding load(const std::string& path);

 private:
  std::map<std::string, Eigen::VectorXd> vectors_;
};

struct SkipGramConfig {
  int dimension = 256;
  int window = 10;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  int min_count = 1;
  std::uint64_t seed = 1;
};

// Skip-gram with negative sampling over token sentences.
TrainedEmbedding train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                                const SkipGramConfig& cfg = {});

// Identifier subtokens of a source file in order, keywords excluded.
std::vector<std::string> identifier_tokens(std::string_view source, const BpeTable* bpe = nullptr);

// Cosine of mean-pooled token vectors clamped to [0, 1]. Lexical providers,
// or token lists without any known vector, use the token-multiset cosine.
double similarity(const std::vector<std::string>& a, const std::vector<std::string>& b,
                  const EmbeddingProvider& emb);

inline constexpr double kDefaultPenalty = -0.1;

// Whether a type string names only builtin types (no user-defined name).
bool is_builtin_type(std::string_view t);

// Maps a recommended type name onto the closest valid user-defined type.
// Builtins and members of `valid_types` are returned unchanged, as is `t`
// when `valid_types` is empty. nullopt when no valid type is similar at all.
std::optional<std::string> correct_type(const std::string& name,
                                        const std::vector<std::string>& valid_types,
                                        const std::string& t, double penalty = kDefaultPenalty,
                                        const EmbeddingProvider* emb = nullptr,
                                        const BpeTable* bpe = nullptr);

// Applies correct_type to every user-defined name inside a parsed type.
std::optional<PyType> correct_parsed_type(const std::string& name,
                                          const std::vector<std::string>& valid_types,
                                          const PyType& t, double penalty = kDefaultPenalty,
                                          const EmbeddingProvider* emb = nullptr,
                                          const BpeTable* bpe = nullptr);

}  // namespace tdgtype
