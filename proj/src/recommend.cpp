#include "tdgtype/recommend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "python_lexer.hpp"

namespace tdgtype {

using nlohmann::json;

std::string slot_key(const SlotQuery& q) {
  return q.function + ":" + to_string(q.kind) + ":" + q.name;
}

std::vector<Recommendation> NullRecommender::recommend(const std::vector<SlotQuery>& slots, int) {
  std::vector<Recommendation> out;
  for (const auto& q : slots) out.push_back({slot_key(q), {}});
  return out;
}

// --- frequency baseline ----------------------------------------------------------

void FrequencyTable::sort() {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
}

FrequencyTable FrequencyTable::from_annotations(const std::vector<std::string>& annotations) {
  std::map<std::string, long> counts;
  for (const auto& a : annotations) {
    auto t = try_parse_type_expr(a);
    ++counts[t ? render(*t) : a];
  }
  FrequencyTable table;
  table.entries.assign(counts.begin(), counts.end());
  table.sort();
  return table;
}

FrequencyTable FrequencyTable::from_json_text(std::string_view text) {
  FrequencyTable table;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("frequency table: ") + e.what());
  }
  if (doc.is_object()) {
    for (const auto& [k, v] : doc.items()) table.entries.emplace_back(k, v.get<long>());
  } else if (doc.is_array()) {
    for (const auto& row : doc) {
      if (!row.is_array() || row.size() != 2) throw std::invalid_argument("frequency table: bad row");
      table.entries.emplace_back(row[0].get<std::string>(), row[1].get<long>());
    }
  } else {
    throw std::invalid_argument("frequency table: expected an array or object");
  }
  for (const auto& [t, c] : table.entries) {
    if (c < 1) throw std::invalid_argument("frequency table: count below 1 for " + t);
  }
  table.sort();
  return table;
}

FrequencyTable FrequencyTable::load(const std::string& path) {
  return from_json_text(read_file(path));
}

Recommendation naive_recommend(const std::string& slot, int k, const FrequencyTable& table,
                               bool deterministic, std::mt19937_64* rng) {
  Recommendation rec{slot, {}};
  const std::size_t top = std::min(kNaiveTopTypes, table.entries.size());
  if (top == 0 || k <= 0) return rec;
  double total = 0;
  for (std::size_t i = 0; i < top; ++i) total += static_cast<double>(table.entries[i].second);
  const auto want = std::min(static_cast<std::size_t>(k), top);
  if (deterministic || rng == nullptr) {
    for (std::size_t i = 0; i < want; ++i) {
      rec.candidates.push_back(
          {table.entries[i].first, static_cast<double>(table.entries[i].second) / total});
    }
    return rec;
  }
  std::vector<double> weights;
  for (std::size_t i = 0; i < top; ++i) weights.push_back(static_cast<double>(table.entries[i].second));
  std::vector<std::size_t> drawn;
  for (std::size_t d = 0; d < want; ++d) {
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const std::size_t i = pick(*rng);
    drawn.push_back(i);
    weights[i] = 0;
  }
  std::stable_sort(drawn.begin(), drawn.end(), [&](std::size_t a, std::size_t b) {
    return table.entries[a].second > table.entries[b].second;
  });
  for (std::size_t i : drawn) {
    rec.candidates.push_back(
        {table.entries[i].first, static_cast<double>(table.entries[i].second) / total});
  }
  return rec;
}

NaiveRecommender::NaiveRecommender(FrequencyTable table, bool deterministic, std::uint64_t seed)
    : table_(std::move(table)), deterministic_(deterministic), rng_(seed) {
  table_.sort();
}

std::vector<Recommendation> NaiveRecommender::recommend(const std::vector<SlotQuery>& slots, int k) {
  std::vector<Recommendation> out;
  for (const auto& q : slots) out.push_back(naive_recommend(slot_key(q), k, table_, deterministic_, &rng_));
  return out;
}

// --- predictions file --------------------------------------------------------------

std::optional<std::string> canonical_slot_key(std::string_view key_text) {
  const std::string key(key_text);
  const auto first = key.find(':');
  if (first == std::string::npos) return std::nullopt;
  const auto second = key.find(':', first + 1);
  std::string fn = key.substr(0, first);
  std::string kind = key.substr(first + 1, second == std::string::npos ? std::string::npos
                                                                       : second - first - 1);
  std::string name = second == std::string::npos ? "" : key.substr(second + 1);
  if (kind == "arg") kind = "argument";
  if (kind == "ret") kind = "return";
  if (kind == "var") kind = "local";
  if (!annotation_kind_from_string(kind)) return std::nullopt;
  if (kind == "return" && name.empty()) name = "return";
  return fn + ":" + kind + ":" + name;
}

FileRecommender FileRecommender::from_json_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("predictions: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("predictions: expected a JSON object");
  FileRecommender rec;
  for (const auto& [k, v] : doc.items()) {
    auto key = canonical_slot_key(k);
    if (!key) throw std::invalid_argument("predictions: bad key '" + k + "'");
    if (!v.is_array()) throw std::invalid_argument("predictions: '" + k + "' is not a list");
    auto& list = rec.table_[*key];
    for (const auto& t : v) {
      if (!t.is_string()) throw std::invalid_argument("predictions: '" + k + "' holds a non-string");
      list.push_back(t.get<std::string>());
    }
  }
  return rec;
}

FileRecommender FileRecommender::load(const std::string& path) { return from_json_text(read_file(path)); }

std::vector<Recommendation> FileRecommender::recommend(const std::vector<SlotQuery>& slots, int k) {
  std::vector<Recommendation> out;
  for (const auto& q : slots) {
    Recommendation rec{slot_key(q), {}};
    auto it = table_.find(rec.slot);
    if (it != table_.end()) {
      const auto& list = it->second;
      for (std::size_t i = 0; i < list.size() && static_cast<int>(i) < k; ++i) {
        rec.candidates.push_back({list[i], 1.0 / static_cast<double>(i + 1)});
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// --- sidecar -------------------------------------------------------------------------

std::string encode_request(long id, const SlotQuery& q, int k) {
  json j = {{"id", id},  {"function", q.function}, {"kind", to_string(q.kind)},
            {"name", q.name}, {"k", k},            {"context", q.context}};
  return j.dump();
}

std::pair<long, std::vector<ScoredType>> decode_response(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception&) {
    throw ProtocolError("malformed response line");
  }
  if (!j.is_object()) throw ProtocolError("response is not an object");
  if (j.contains("error")) {
    throw ProtocolError("sidecar error: " + (j["error"].is_string() ? j["error"].get<std::string>()
                                                                     : j["error"].dump()));
  }
  if (!j.contains("id") || !j["id"].is_number_integer()) throw ProtocolError("response without id");
  if (!j.contains("candidates") || !j["candidates"].is_array()) {
    throw ProtocolError("response without candidates");
  }
  std::vector<ScoredType> cands;
  for (const auto& c : j["candidates"]) {
    if (!c.is_object() || !c.contains("type") || !c["type"].is_string()) {
      throw ProtocolError("candidate without type");
    }
    double score = 0.0;
    if (c.contains("score")) {
      if (!c["score"].is_number()) throw ProtocolError("non-numeric score");
      score = c["score"].get<double>();
    }
    cands.push_back({c["type"].get<std::string>(), std::clamp(score, 0.0, 1.0)});
  }
  return {j["id"].get<long>(), std::move(cands)};
}

namespace {

constexpr int kReadTimeoutMs = 10000;

}  // namespace

ProcessChannel::ProcessChannel(const std::string& command) {
  // A dead child must surface as a write error, not a signal.
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) throw SidecarUnavailable("pipe failed");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw SidecarUnavailable("pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw SidecarUnavailable("fork failed");
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

ProcessChannel::~ProcessChannel() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
}

void ProcessChannel::write_line(const std::string& line) {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SidecarUnavailable("write to sidecar failed");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> ProcessChannel::read_line() {
  while (true) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    pollfd p{from_child_, POLLIN, 0};
    const int r = ::poll(&p, 1, kReadTimeoutMs);
    if (r == 0) throw SidecarUnavailable("sidecar timed out");
    if (r < 0) {
      if (errno == EINTR) continue;
      throw SidecarUnavailable("poll failed");
    }
    char chunk[4096];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw SidecarUnavailable("read from sidecar failed");
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

SidecarRecommender::SidecarRecommender(std::unique_ptr<LineChannel> channel)
    : channel_(std::move(channel)) {}

SidecarRecommender::SidecarRecommender(std::string command) : command_(std::move(command)) {}

std::vector<Recommendation> SidecarRecommender::recommend(const std::vector<SlotQuery>& slots, int k) {
  std::vector<Recommendation> out;
  for (const auto& q : slots) out.push_back({slot_key(q), {}});
  if (failed_) return out;
  if (!channel_) {
    try {
      channel_ = std::make_unique<ProcessChannel>(command_);
    } catch (const SidecarUnavailable& e) {
      errors_.emplace_back(e.what());
      failed_ = true;
      return out;
    }
  }
  std::map<long, std::vector<ScoredType>> answers;
  for (std::size_t i = 0; i < slots.size() && !failed_; ++i) {
    const long id = next_id_++;
    try {
      channel_->write_line(encode_request(id, slots[i], k));
      while (!answers.count(id)) {
        auto line = channel_->read_line();
        if (!line) {
          errors_.emplace_back("sidecar closed its output");
          failed_ = true;
          break;
        }
        try {
          auto [rid, cands] = decode_response(*line);
          answers[rid] = std::move(cands);
        } catch (const ProtocolError& e) {
          errors_.emplace_back(e.what());
          // The offending line may have been the answer to this request.
          if (line->find("\"id\"") != std::string::npos) {
            try {
              auto j = json::parse(*line);
              if (j.is_object() && j.contains("id") && j["id"].is_number_integer() &&
                  j["id"].get<long>() == id) {
                answers[id] = {};
              }
            } catch (const json::exception&) {
            }
          }
        }
      }
    } catch (const SidecarUnavailable& e) {
      errors_.emplace_back(e.what());
      failed_ = true;
    }
    if (auto it = answers.find(id); it != answers.end()) {
      auto cands = it->second;
      std::stable_sort(cands.begin(), cands.end(),
                       [](const ScoredType& a, const ScoredType& b) { return a.score > b.score; });
      if (static_cast<int>(cands.size()) > k) cands.resize(static_cast<std::size_t>(std::max(k, 0)));
      out[i].candidates = std::move(cands);
    }
  }
  return out;
}

// --- subtokens ------------------------------------------------------------------------

std::vector<std::string> subtokenize(std::string_view ident, const BpeTable* bpe) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  const std::size_t n = ident.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<unsigned char>(ident[i]);
    if (!std::isalnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      const auto p = static_cast<unsigned char>(ident[i - 1]);
      const bool next_lower = i + 1 < n && std::islower(static_cast<unsigned char>(ident[i + 1]));
      if ((std::isdigit(c) != 0) != (std::isdigit(p) != 0)) flush();
      if (!cur.empty() && std::isupper(c) &&
          (std::islower(p) || (std::isupper(p) && next_lower))) {
        flush();
      }
    }
    cur.push_back(static_cast<char>(std::tolower(c)));
  }
  flush();
  if (words.empty() && !ident.empty()) {
    std::string lower(ident);
    for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    words.push_back(lower);
  }
  if (bpe == nullptr) return words;
  std::vector<std::string> out;
  for (const auto& w : words) {
    for (auto& piece : bpe->segment(w)) out.push_back(std::move(piece));
  }
  return out;
}

BpeTable BpeTable::learn(const std::vector<std::string>& words, int merges) {
  BpeTable table;
  std::map<std::string, int> freq;
  for (const auto& w : words) {
    if (!w.empty()) ++freq[w];
  }
  table.vocabulary = freq;
  std::map<std::string, std::vector<std::string>> split;
  for (const auto& [w, c] : freq) {
    std::vector<std::string> sym;
    for (char ch : w) sym.emplace_back(1, ch);
    split[w] = std::move(sym);
  }
  for (int m = 0; m < merges; ++m) {
    std::map<std::pair<std::string, std::string>, int> pairs;
    for (const auto& [w, sym] : split) {
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) pairs[{sym[i], sym[i + 1]}] += freq[w];
    }
    if (pairs.empty()) break;
    auto best = pairs.begin();
    for (auto it = pairs.begin(); it != pairs.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    if (best->second < 2) break;
    const auto [a, b] = best->first;
    table.merges.emplace_back(a, b);
    for (auto& [w, sym] : split) {
      std::vector<std::string> next;
      for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && sym[i] == a && sym[i + 1] == b) {
          next.push_back(a + b);
          ++i;
        } else {
          next.push_back(sym[i]);
        }
      }
      sym = std::move(next);
    }
  }
  return table;
}

std::vector<std::string> BpeTable::segment(const std::string& word) const {
  if (vocabulary.count(word) || word.size() <= 1) return {word};
  std::vector<std::string> sym;
  for (char ch : word) sym.emplace_back(1, ch);
  for (const auto& [a, b] : merges) {
    std::vector<std::string> next;
    for (std::size_t i = 0; i < sym.size(); ++i) {
      if (i + 1 < sym.size() && sym[i] == a && sym[i + 1] == b) {
        next.push_back(a + b);
        ++i;
      } else {
        next.push_back(sym[i]);
      }
    }
    sym = std::move(next);
  }
  return sym;
}

// --- embeddings ------------------------------------------------------------------------

TrainedEmbedding::TrainedEmbedding(std::map<std::string, Eigen::VectorXd> vectors)
    : vectors_(std::move(vectors)) {
  const int dim = dimension();
  for (const auto& [t, v] : vectors_) {
    if (v.size() != dim) throw std::invalid_argument("embedding dimension mismatch at " + t);
  }
}

std::optional<Eigen::VectorXd> TrainedEmbedding::vector(const std::string& token) const {
  auto it = vectors_.find(token);
  if (it == vectors_.end()) return std::nullopt;
  return it->second;
}

int TrainedEmbedding::dimension() const {
  return vectors_.empty() ? 0 : static_cast<int>(vectors_.begin()->second.size());
}

void TrainedEmbedding::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path);
  out << vectors_.size() << ' ' << dimension() << '\n';
  out.precision(9);
  for (const auto& [t, v] : vectors_) {
    out << t;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
    out << '\n';
  }
}

TrainedEmbedding TrainedEmbedding::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::size_t count = 0;
  int dim = 0;
  if (!(in >> count >> dim) || dim <= 0) throw std::invalid_argument(path + ": bad embedding header");
  std::map<std::string, Eigen::VectorXd> vectors;
  for (std::size_t i = 0; i < count; ++i) {
    std::string tok;
    if (!(in >> tok)) throw std::invalid_argument(path + ": truncated embedding file");
    Eigen::VectorXd v(dim);
    for (int d = 0; d < dim; ++d) {
      if (!(in >> v[d])) throw std::invalid_argument(path + ": truncated vector for " + tok);
    }
    vectors.emplace(tok, std::move(v));
  }
  return TrainedEmbedding(std::move(vectors));
}

TrainedEmbedding train_skipgram(const std::vector<std::vector<std::string>>& sentences,
                                const SkipGramConfig& cfg) {
  std::map<std::string, long> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++counts[t];
  }
  std::vector<std::string> vocab;
  std::map<std::string, int> index;
  for (const auto& [t, c] : counts) {
    if (c >= cfg.min_count) {
      index[t] = static_cast<int>(vocab.size());
      vocab.push_back(t);
    }
  }
  const int v = static_cast<int>(vocab.size());
  const int dim = cfg.dimension;
  if (v == 0) return {};
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> init(-0.5 / dim, 0.5 / dim);
  Eigen::MatrixXd in_vec(dim, v);
  for (int j = 0; j < v; ++j) {
    for (int d = 0; d < dim; ++d) in_vec(d, j) = init(rng);
  }
  Eigen::MatrixXd out_vec = Eigen::MatrixXd::Zero(dim, v);

  // Unigram^0.75 negative sampling.
  std::vector<double> weights(static_cast<std::size_t>(v));
  for (int j = 0; j < v; ++j) weights[static_cast<std::size_t>(j)] = std::pow(static_cast<double>(counts[vocab[static_cast<std::size_t>(j)]]), 0.75);
  std::discrete_distribution<int> negative(weights.begin(), weights.end());
  std::uniform_int_distribution<int> shrink(1, std::max(1, cfg.window));

  std::vector<std::vector<int>> ids;
  long total = 0;
  for (const auto& s : sentences) {
    std::vector<int> row;
    for (const auto& t : s) {
      if (auto it = index.find(t); it != index.end()) row.push_back(it->second);
    }
    total += static_cast<long>(row.size());
    ids.push_back(std::move(row));
  }
  const double steps = static_cast<double>(std::max<long>(1, total * cfg.epochs));
  long done = 0;
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  Eigen::VectorXd grad(dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& row : ids) {
      const int n = static_cast<int>(row.size());
      for (int pos = 0; pos < n; ++pos, ++done) {
        const double lr = std::max(cfg.learning_rate * 1e-4,
                                   cfg.learning_rate * (1.0 - static_cast<double>(done) / steps));
        const int b = shrink(rng);
        for (int off = -b; off <= b; ++off) {
          const int c = pos + off;
          if (off == 0 || c < 0 || c >= n) continue;
          const int center = row[static_cast<std::size_t>(pos)];
          grad.setZero();
          for (int s = 0; s <= cfg.negatives; ++s) {
            const int target = s == 0 ? row[static_cast<std::size_t>(c)] : negative(rng);
            if (s > 0 && target == row[static_cast<std::size_t>(c)]) continue;
            const double label = s == 0 ? 1.0 : 0.0;
            const double g = lr * (label - sigmoid(in_vec.col(center).dot(out_vec.col(target))));
            grad += g * out_vec.col(target);
            out_vec.col(target) += g * in_vec.col(center);
          }
          in_vec.col(center) += grad;
        }
      }
    }
  }
  std::map<std::string, Eigen::VectorXd> vectors;
  for (int j = 0; j < v; ++j) vectors.emplace(vocab[static_cast<std::size_t>(j)], in_vec.col(j));
  return TrainedEmbedding(std::move(vectors));
}

std::vector<std::string> identifier_tokens(std::string_view source, const BpeTable* bpe) {
  static const std::set<std::string, std::less<>> kKeywords = {
      "False", "None",   "True",    "and",      "as",     "assert", "async", "await",
      "break", "class",  "continue", "def",     "del",    "elif",   "else",  "except",
      "finally", "for",  "from",    "global",   "if",     "import", "in",    "is",
      "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
      "while", "with",   "yield",   "self",     "cls"};
  std::vector<std::string> out;
  for (const auto& tok : py::tokenize(source)) {
    if (tok.kind != py::TokKind::Name || kKeywords.count(tok.text)) continue;
    for (auto& w : subtokenize(tok.text, bpe)) out.push_back(std::move(w));
  }
  return out;
}

// --- similarity and correction ----------------------------------------------------------

namespace {

double lexical_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, double> ca, cb;
  for (const auto& t : a) ca[t] += 1;
  for (const auto& t : b) cb[t] += 1;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, c] : ca) {
    na += c * c;
    if (auto it = cb.find(t); it != cb.end()) dot += c * it->second;
  }
  for (const auto& [t, c] : cb) nb += c * c;
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::optional<Eigen::VectorXd> mean_vector(const std::vector<std::string>& tokens,
                                           const EmbeddingProvider& emb) {
  std::optional<Eigen::VectorXd> sum;
  int n = 0;
  for (const auto& t : tokens) {
    auto v = emb.vector(t);
    if (!v) continue;
    if (!sum) {
      sum = *v;
    } else {
      *sum += *v;
    }
    ++n;
  }
  if (sum) *sum /= n;
  return sum;
}

}  // namespace

double similarity(const std::vector<std::string>& a, const std::vector<std::string>& b,
                  const EmbeddingProvider& emb) {
  if (a.empty() || b.empty()) return 0.0;
  if (a == b) return 1.0;
  double s = 0.0;
  std::optional<Eigen::VectorXd> va, vb;
  if (!emb.lexical()) {
    va = mean_vector(a, emb);
    vb = mean_vector(b, emb);
  }
  if (va && vb) {
    const double na = va->norm();
    const double nb = vb->norm();
    s = na == 0 || nb == 0 ? 0.0 : va->dot(*vb) / (na * nb);
  } else {
    s = lexical_cosine(a, b);
  }
  return std::clamp(s, 0.0, 1.0);
}

bool is_builtin_type(std::string_view t) {
  auto parsed = try_parse_type_expr(t);
  if (!parsed) return false;
  std::vector<const PyType*> stack{&*parsed};
  while (!stack.empty()) {
    const PyType* p = stack.back();
    stack.pop_back();
    if (p->is(TypeKind::User)) return false;
    for (const auto& q : p->params()) stack.push_back(&q);
  }
  return true;
}

std::optional<std::string> correct_type(const std::string& name,
                                        const std::vector<std::string>& valid_types,
                                        const std::string& t, double penalty,
                                        const EmbeddingProvider* emb, const BpeTable* bpe) {
  if (is_builtin_type(t)) return t;
  if (std::find(valid_types.begin(), valid_types.end(), t) != valid_types.end()) return t;
  if (valid_types.empty()) return t;
  static const LexicalEmbedding kLexical;
  const EmbeddingProvider& e = emb != nullptr ? *emb : kLexical;
  double largest_sim = 0.0;
  std::optional<std::string> largest_type;
  const auto tw = subtokenize(t, bpe);
  const auto namew = subtokenize(name, bpe);
  for (const auto& pt : valid_types) {
    const auto ptw = subtokenize(pt, bpe);
    const double by_type = similarity(ptw, tw, e);
    if (by_type > largest_sim) {
      largest_sim = by_type;
      largest_type = pt;
    }
    const double by_name = similarity(ptw, namew, e);
    if (by_name + penalty > largest_sim) {
      // The unpenalized value is recorded, as written in the algorithm.
      largest_sim = by_name;
      largest_type = pt;
    }
  }
  return largest_type;
}

std::optional<PyType> correct_parsed_type(const std::string& name,
                                          const std::vector<std::string>& valid_types,
                                          const PyType& t, double penalty,
                                          const EmbeddingProvider* emb, const BpeTable* bpe) {
  if (t.is(TypeKind::User)) {
    auto fixed = correct_type(name, valid_types, t.name(), penalty, emb, bpe);
    if (!fixed) return std::nullopt;
    if (*fixed == t.name()) return t;
    return PyType::user(*fixed, t.overloading());
  }
  if (t.kind() != TypeKind::Generic || t.params().empty()) return t;
  if (t.is_ctor("Callable")) {
    std::vector<PyType> args;
    if (!t.callable_has_ellipsis_args()) {
      for (const auto& a : t.callable_args()) {
        auto f = correct_parsed_type(name, valid_types, a, penalty, emb, bpe);
        if (!f) return std::nullopt;
        args.push_back(*f);
      }
    }
    auto ret = correct_parsed_type(name, valid_types, t.callable_return(), penalty, emb, bpe);
    if (!ret) return std::nullopt;
    if (t.callable_has_ellipsis_args()) return PyType::callable_any_args(*ret);
    return PyType::callable(std::move(args), *ret);
  }
  std::vector<PyType> ps;
  for (const auto& p : t.params()) {
    if (p.is(TypeKind::Ellipsis)) {
      ps.push_back(p);
      continue;
    }
    auto f = correct_parsed_type(name, valid_types, p, penalty, emb, bpe);
    if (!f) return std::nullopt;
    ps.push_back(*f);
  }
  return PyType::generic(t.name(), std::move(ps));
}

}  // namespace tdgtype
