#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

#ifdef CFSIM_CLI_PATH

namespace {

struct CliResult {
  int status = -1;
  std::string out;
};

CliResult run(const std::string& args)
{
  const std::string cmd = std::string(CFSIM_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite()
  {
    dir_ = fs::temp_directory_path() / ("cfsim_cli_test_" + std::to_string(getpid()));
    fs::create_directories(dir_);
    const CliResult r = run("train mlp " + data() + " --hidden 8 --epochs 2 --out " + path("m.json"));
    ASSERT_EQ(r.status, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string data()
  {
    const std::string d = CFSIM_TEST_DATA_DIR;
    return "--images " + d + "/digits8x8-images.idx --labels " + d + "/digits8x8-labels.idx --limit 200";
  }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(Cli, CompileIsByteStable)
{
  ASSERT_EQ(run("compile --model " + path("m.json") + " --out " + path("a.xaig")).status, 0);
  ASSERT_EQ(run("compile --model " + path("m.json") + " --out " + path("b.xaig")).status, 0);
  EXPECT_EQ(slurp(path("a.xaig")), slurp(path("b.xaig")));
  EXPECT_EQ(slurp(path("a.xaig")).rfind("xaig ", 0), 0u);
}

TEST_F(Cli, CfsAtZeroMatchesEval)
{
  ASSERT_EQ(run("compile --model " + path("m.json") + " --out " + path("c.xaig")).status, 0);
  const CliResult eval = run("eval --circuit " + path("c.xaig") + " " + data());
  ASSERT_EQ(eval.status, 0);
  double acc = -1;
  ASSERT_EQ(std::sscanf(eval.out.c_str(), "accuracy %lf", &acc), 1);

  const CliResult cfs = run("cfs --circuit " + path("c.xaig") + " " + data() + " --l 0,8");
  ASSERT_EQ(cfs.status, 0);
  std::istringstream lines(cfs.out);
  std::string provenance, header, row0;
  std::getline(lines, provenance);
  std::getline(lines, header);
  std::getline(lines, row0);
  EXPECT_EQ(provenance.rfind("# ", 0), 0u);
  EXPECT_NE(provenance.find("images="), std::string::npos);
  EXPECT_EQ(header, "l,accuracy,unaffected,perturbed_nodes");
  double row_acc = -1;
  ASSERT_EQ(std::sscanf(row0.c_str(), "0,%lf", &row_acc), 1);
  EXPECT_NEAR(row_acc, acc, 1e-6);
}

TEST_F(Cli, CsvOutputIsDeterministicAcrossThreadCounts)
{
  ASSERT_EQ(run("compile --model " + path("m.json") + " --out " + path("d.xaig")).status, 0);
  const std::string base = "cfs --circuit " + path("d.xaig") + " " + data() + " --l 1,4,16 --mode composite";
  ASSERT_EQ(run("--threads 1 " + base + " --out " + path("one.csv")).status, 0);
  ASSERT_EQ(run("--threads 4 " + base + " --out " + path("four.csv")).status, 0);
  EXPECT_EQ(slurp(path("one.csv")), slurp(path("four.csv")));
  const std::string noise = "noise --circuit " + path("d.xaig") + " " + data() + " --p 2^-10,0.01 --trials 2";
  const CliResult a = run("--threads 1 " + noise);
  const CliResult b = run("--threads 3 " + noise);
  ASSERT_EQ(a.status, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("p,mean_accuracy,stddev,trials"), std::string::npos);
}

TEST_F(Cli, ForestAndStatsAndDataset)
{
  ASSERT_EQ(run("train forest " + data() + " --trees 2 --out " + path("f.json")).status, 0);
  ASSERT_EQ(run("compile --model " + path("f.json") + " --gates and-only --out " + path("f.xaig")).status, 0);
  const CliResult s = run("stats --circuit " + path("f.xaig") + " " + data() + " --l 1,10");
  ASSERT_EQ(s.status, 0);
  EXPECT_NE(s.out.find("xor 0\n"), std::string::npos);
  EXPECT_NE(s.out.find("l,rare_nodes,unaffected"), std::string::npos);
  const CliResult e = run("eval --circuit " + path("f.xaig") + " " + data() + " --decode unsigned");
  EXPECT_EQ(e.out, "accuracy 1.000000\n");

  ASSERT_EQ(run("dataset corrupt " + data() + " --mode shuffle --seed 3 --out-images " + path("ci.idx") +
                " --out-labels " + path("cl.idx")).status, 0);
  EXPECT_EQ(fs::file_size(path("ci.idx")), 16u + 200u * 64u);
  EXPECT_EQ(fs::file_size(path("cl.idx")), 8u + 200u);
}

TEST_F(Cli, ErrorsExitNonzero)
{
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("cfs --circuit " + path("missing.xaig") + " " + data() + " --l 1").status, 0);
  EXPECT_NE(run("compile --model " + path("m.json") + " --mult booth --out " + path("x.xaig")).status, 0);
  ASSERT_EQ(run("compile --model " + path("m.json") + " --out " + path("e.xaig")).status, 0);
  EXPECT_NE(run("cfs --circuit " + path("e.xaig") + " " + data() + " --l 4,2").status, 0);
  EXPECT_NE(run("noise --circuit " + path("e.xaig") + " " + data() + " --p 1.5").status, 0);
  std::ofstream(path("bad.xaig")) << "xaig 9 0\n";
  EXPECT_NE(run("eval --circuit " + path("bad.xaig") + " " + data()).status, 0);
}

#endif
