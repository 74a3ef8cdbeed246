#include <gtest/gtest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ppl/cli.hpp"
#include "support/models.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ppl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = ppl::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class TempFile {
 public:
  explicit TempFile(const std::string& text) {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("ppl_cli_test_" + std::to_string(::getpid()) + "_" +
                                         std::to_string(counter++) + ".anglican");
    std::ofstream(path_) << text;
  }
  ~TempFile() { fs::remove(path_); }
  std::string path() const { return path_.string(); }

 private:
  fs::path path_;
};

std::vector<json> jsonl(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(json::parse(line));
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kDeli = models::program_path("deli.anglican");

}  // namespace

TEST(CliRun, JsonlSchema) {
  auto r = cli({"run", kDeli, "--algorithm", "importance", "--samples", "20", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto records = jsonl(r.out);
  ASSERT_EQ(records.size(), 21u);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto& rec = records[i];
    EXPECT_EQ(rec.size(), 4u);
    EXPECT_EQ(rec.at("type"), "sample");
    EXPECT_EQ(rec.at("index"), i);
    EXPECT_TRUE(rec.at("log-weight").is_number());
    const auto& result = rec.at("result");
    ASSERT_TRUE(result.is_object());
    EXPECT_TRUE(result.at(":same-customer").is_boolean());
    EXPECT_TRUE(result.at(":times-to-arrive").is_array());
  }
  const auto& summary = records.back();
  EXPECT_EQ(summary.at("type"), "summary");
  EXPECT_EQ(summary.at("n"), 20);
  EXPECT_GE(summary.at("ess").get<double>(), 1.0);
  EXPECT_LE(summary.at("ess").get<double>(), 20.0);
  EXPECT_TRUE(summary.at("means").at(":same-customer").is_number());
}

TEST(CliRun, CsvHeaderAndQuoting) {
  TempFile f("(defquery q [\"a,b\" \"say \\\"hi\\\"\" 'sym])");
  auto r = cli({"run", f.path(), "--samples", "2", "--output", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  // Results are written as source text, quoted per RFC 4180.
  const std::string row = "\"[\"\"a,b\"\" \"\"say \\\"\"hi\\\"\"\"\" sym]\"";
  EXPECT_EQ(r.out, "index,log-weight,result\r\n0,0," + row + "\r\n1,0," + row + "\r\n");
  EXPECT_NE(r.err.find("\"n\":2"), std::string::npos) << r.err;
}

TEST(CliRun, ValueSerialization) {
  TempFile f("(defquery q [x] {:k :v, (quote s) [1 2.5 nil] \"str\" #{true}, :inf (/ 1.0 0)})");
  auto r = cli({"run", f.path(), "--samples", "1", "--value", "[0]"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto rec = jsonl(r.out).front().at("result");
  EXPECT_EQ(rec.at(":k"), ":v");
  EXPECT_EQ(rec.at("'s"), json::parse("[1, 2.5, null]"));
  EXPECT_EQ(rec.at("str"), json::parse("[true]"));
  EXPECT_EQ(rec.at(":inf"), "inf");
}

TEST(CliRun, ScalarSummaryMean) {
  TempFile f("(defquery q (sample (flip 0.5)))");
  auto r = cli({"run", f.path(), "--samples", "4000", "--seed", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto summary = jsonl(r.out).back();
  EXPECT_NEAR(summary.at("means").at("result").get<double>(), 0.5, 0.05);
}

TEST(CliRun, BurnDropsLeadingStates) {
  auto all = jsonl(cli({"run", kDeli, "--algorithm", "lmh", "--samples", "30", "--seed", "7"}).out);
  auto tail = jsonl(cli({"run", kDeli, "--algorithm", "lmh", "--samples", "10", "--burn", "20", "--seed", "7"}).out);
  ASSERT_EQ(tail.size(), 11u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(tail[i].at("index"), i);
    EXPECT_EQ(tail[i].at("result"), all[20 + i].at("result"));
  }
}

TEST(CliRun, DeliSameCustomerFrequency) {
  auto r = cli({"run", kDeli, "--algorithm", "lmh", "--samples", "5000", "--burn", "5000", "--seed", "7"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(jsonl(r.out).back().at("means").at(":same-customer").get<double>(), 0.12, 0.03);
}

TEST(CliRun, SmcAndQuerySelection) {
  TempFile f("(defquery a 1) (defquery b (sample (normal 0 1)) (observe (normal 0 1) 0.5) 2)");
  EXPECT_EQ(cli({"run", f.path(), "--samples", "1"}).code, ppl::cli::kBadFlags);
  auto r = cli({"run", f.path(), "--query", "b", "--algorithm", "smc", "--particles", "3", "--samples", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto recs = jsonl(r.out);
  ASSERT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs[0].at("result"), 2);
  EXPECT_EQ(cli({"run", f.path(), "--query", "c"}).code, ppl::cli::kBadFlags);
}

TEST(CliRun, Determinism) {
  std::vector<std::string> args{"run", kDeli, "--algorithm", "smc", "--samples", "300", "--particles", "100",
                                "--seed", "11"};
  EXPECT_EQ(cli(args).out, cli(args).out);
  auto other = args;
  other.back() = "12";
  EXPECT_NE(cli(args).out, cli(other).out);
}

TEST(CliExitCodes, BadFlags) {
  EXPECT_EQ(cli({"run", kDeli, "--samples", "0"}).code, ppl::cli::kBadFlags);
  EXPECT_EQ(cli({"run", kDeli, "--algorithm", "gibbs"}).code, ppl::cli::kBadFlags);
  EXPECT_EQ(cli({"run", kDeli, "--output", "xml"}).code, ppl::cli::kBadFlags);
  EXPECT_EQ(cli({"run", kDeli, "--value", "(1"}).code, ppl::cli::kBadFlags);
  EXPECT_EQ(cli({"frobnicate"}).code, ppl::cli::kBadFlags);
  EXPECT_EQ(cli({}).code, ppl::cli::kBadFlags);
}

TEST(CliExitCodes, CompileErrorsReportPosition) {
  TempFile f("(defquery q\n  (let [x 1]\n    x)");
  auto r = cli({"check", f.path()});
  EXPECT_EQ(r.code, ppl::cli::kCompileError);
  EXPECT_NE(r.err.find(f.path() + ":1:1:"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"run", f.path()}).code, ppl::cli::kCompileError);

  TempFile g("(defquery q (undefined-thing 1))");
  r = cli({"run", g.path()});
  EXPECT_EQ(r.code, ppl::cli::kCompileError);
  EXPECT_NE(r.err.find("unable to resolve symbol"), std::string::npos) << r.err;
  EXPECT_EQ(cli({"check", "/nonexistent/file.anglican"}).code, ppl::cli::kCompileError);
}

TEST(CliExitCodes, RuntimeError) {
  TempFile f("(defquery q (/ 1 0))");
  auto r = cli({"run", f.path(), "--samples", "3"});
  EXPECT_EQ(r.code, ppl::cli::kRuntimeError);
  EXPECT_FALSE(r.err.empty());
}

TEST(CliCheck, ValidFile) {
  auto r = cli({"check", kDeli});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST(CliCheck, DumpIrShowsContinuationAndStateParameters) {
  TempFile f("(defquery q (fn [x y] (+ x y)))");
  auto r = cli({"check", f.path(), "--dump-ir"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("(fn [C3 $state x y] (fn [] (C3 (+ x y) $state)))"), std::string::npos) << r.out;
}

TEST(CliBinary, ByteIdenticalAcrossProcesses) {
  fs::path dir = fs::temp_directory_path();
  fs::path a = dir / ("ppl_cli_a_" + std::to_string(::getpid()) + ".jsonl");
  fs::path b = dir / ("ppl_cli_b_" + std::to_string(::getpid()) + ".jsonl");
  std::string cmd = std::string(PPL_CLI_PATH) + " run " + kDeli + " --algorithm lmh --samples 500 --seed 7 > ";
  ASSERT_EQ(std::system((cmd + a.string()).c_str()), 0);
  ASSERT_EQ(std::system((cmd + b.string()).c_str()), 0);
  std::string x = slurp(a), y = slurp(b);
  EXPECT_FALSE(x.empty());
  EXPECT_EQ(x, y);
  fs::remove(a);
  fs::remove(b);
}

TEST(CliBinary, ExitStatusPropagates) {
  std::string cmd = std::string(PPL_CLI_PATH) + " run " + kDeli + " --samples 0 2>/dev/null";
  int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 3);
}
