#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tdgtype/cli.hpp"

using namespace tdgtype;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = TDGTYPE_FIXTURES;
const std::string kListing = kFixtures + "/listing1.py";

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("tdgtype_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST(Cli, ListingWithFilePredictions) {
  CliRun r = cli({"infer", kListing, "--stubs", kFixtures + "/listing1.stubs", "--recommender", "file",
               "--predictions", kFixtures + "/listing1_predictions.json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json doc = json::parse(r.out);
  const json& parse = doc.at(kListing).at("parse");
  EXPECT_EQ(parse.at("arguments").at("text"), "str");
  EXPECT_EQ(parse.at("return"), "Tuple[List[int, Placeholder], Dict[str, Placeholder]]");
  EXPECT_EQ(parse.at("status").at("text"), "recommended+validated");
  EXPECT_FALSE(doc.contains("rejections"));
}

TEST(Cli, EmptyDirectoryGivesEmptyObject) {
  fs::path dir = scratch("empty");
  CliRun r = cli({"infer", dir.string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(json::parse(r.out), json::object());
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli({"infer", "/nonexistent/file.py"}).code, kExitInput);
  EXPECT_EQ(cli({"infer", kListing, "--k", "2"}).code, kExitConfig);
  EXPECT_EQ(cli({"infer", kListing, "--recommender", "oracle"}).code, kExitConfig);
  EXPECT_EQ(cli({"infer", kListing, "--recommender", "file"}).code, kExitConfig);
  EXPECT_EQ(cli({"infer", kListing, "--stubs", "/nonexistent.stubs"}).code, kExitConfig);
  EXPECT_EQ(cli({"bogus"}).code, kExitConfig);
  EXPECT_EQ(cli({"train-embeddings", kListing}).code, kExitConfig);  // --out is required
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, BadStubFileIsConfigError) {
  fs::path dir = scratch("stubs");
  write(dir / "bad.stubs", "len : Callable[[\n");
  CliRun r = cli({"infer", kListing, "--stubs", (dir / "bad.stubs").string()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("bad.stubs"), std::string::npos) << r.err;
}

TEST(Cli, SyntaxErrorsAreSkipped) {
  fs::path dir = scratch("syntax");
  write(dir / "a.py", "def f():\n    return 1\n");
  write(dir / "b.py", "def g(:\n");
  CliRun r = cli({"infer", dir.string()});
  EXPECT_EQ(r.code, kExitOk);
  json doc = json::parse(r.out);
  EXPECT_EQ(doc.at((dir / "a.py").string()).at("f").at("return"), "int");
  EXPECT_FALSE(doc.contains((dir / "b.py").string()));
  EXPECT_NE(r.err.find("b.py"), std::string::npos);
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
  const std::vector<std::string> args = {"infer", kFixtures + "/corpus", "--recommender", "naive", "--k", "3"};
  CliRun a = cli(args);
  CliRun b = cli(args);
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, PoisonedRecommendationIsRejected) {
  CliRun r = cli({"infer", kListing, "--stubs", kFixtures + "/listing1.stubs", "--recommender", "file",
               "--predictions", kFixtures + "/listing1_poisoned.json"});
  ASSERT_EQ(r.code, kExitOk);
  json doc = json::parse(r.out);
  EXPECT_TRUE(doc.at(kListing).at("parse").at("arguments").at("text").is_null());
  ASSERT_TRUE(doc.contains("rejections"));
  const json& rej = doc.at("rejections").at(0);
  EXPECT_EQ(rej.at("slot"), "text");
  EXPECT_EQ(rej.at("type"), "List[int]");
  EXPECT_EQ(rej.at("file"), kListing);
}

TEST(Cli, OutFlagWritesFile) {
  fs::path dir = scratch("out");
  CliRun r = cli({"infer", kListing, "--out", (dir / "result.json").string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NO_THROW(json::parse(read_file((dir / "result.json").string())));
}

TEST(Cli, EvalOnAnnotatedSources) {
  fs::path dir = scratch("eval");
  write(dir / "m.py",
        "def f(a: int) -> int:\n"
        "    b: str = 'x'\n"
        "    return 1\n"
        "\n"
        "def g() -> int:\n"
        "    return f(2)\n");
  CliRun r = cli({"eval", dir.string(), "--out", (dir / "report.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("top1.em"), std::string::npos);
  json rep = json::parse(read_file((dir / "report.json").string()));
  // Every slot here is statically forced: a from the call site, b and the
  // returns from literals.
  EXPECT_EQ(rep["categories"]["all"]["count"], 4);
  EXPECT_DOUBLE_EQ(rep["categories"]["all"]["top1"]["exact_match"].get<double>(), 1.0);
}

TEST(Cli, EvalDirectFiles) {
  fs::path dir = scratch("direct");
  write(dir / "truths.jsonl",
        "{\"function\": \"f\", \"kind\": \"argument\", \"name\": \"x\", \"annotation\": \"List[int]\"}\n");
  write(dir / "ranked.json", "{\"f:argument:x\": [\"List[str]\", \"List[int]\"]}");
  CliRun r = cli({"eval", "--truths", (dir / "truths.jsonl").string(), "--ranked", (dir / "ranked.json").string(),
               "--out", (dir / "r.json").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  json rep = json::parse(read_file((dir / "r.json").string()));
  EXPECT_DOUBLE_EQ(rep["categories"]["all"]["top1"]["exact_match"].get<double>(), 0.0);
  EXPECT_DOUBLE_EQ(rep["categories"]["all"]["top1"]["match_to_parametric"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(rep["categories"]["all"]["top3"]["exact_match"].get<double>(), 1.0);
  EXPECT_EQ(cli({"eval", "--truths", (dir / "truths.jsonl").string()}).code, kExitConfig);
}

TEST(Cli, DumpTdgWritesOneFilePerFunction) {
  fs::path dir = scratch("dot");
  CliRun r = cli({"dump-tdg", kListing, "--out", dir.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "listing1.parse.dot"));
  EXPECT_TRUE(fs::exists(dir / "listing1._normalize_text.dot"));
  EXPECT_NE(read_file((dir / "listing1.parse.dot").string()).find("digraph"), std::string::npos);
}

TEST(Cli, TrainEmbeddings) {
  fs::path dir = scratch("emb");
  CliRun r = cli({"train-embeddings", kListing, "--out", (dir / "v.txt").string(), "--dim", "8", "--epochs", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  // The trained file loads back as the correction provider.
  CliRun inf = cli({"infer", kListing, "--embeddings", (dir / "v.txt").string()});
  EXPECT_EQ(inf.code, kExitOk) << inf.err;
}

TEST(Cli, CollectPythonFilesIsSorted) {
  fs::path dir = scratch("collect");
  fs::create_directories(dir / "pkg");
  write(dir / "z.py", "");
  write(dir / "a.py", "");
  write(dir / "pkg" / "m.py", "");
  write(dir / "notes.txt", "");
  auto files = collect_python_files({dir.string()});
  ASSERT_EQ(files.size(), 3u);
  EXPECT_TRUE(std::is_sorted(files.begin(), files.end()));
  EXPECT_THROW(collect_python_files({(dir / "missing").string()}), FileError);
}
