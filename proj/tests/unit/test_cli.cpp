#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bdc/config.hpp"
#include "bdc/error.hpp"
#include "bdc/experiments.hpp"

namespace bdc {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("bdc_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Ran {
  int code;
  std::string out, err;
};

Ran run(const std::string& cmd, Config cfg, const fs::path& dir) {
  cfg.set("out", dir.string());
  std::ostringstream out, err;
  const int code = run_command(cmd, cfg, out, err);
  return {code, out.str(), err.str()};
}

// ---- configuration ------------------------------------------------------------------

TEST(Config, ParseCommentsAndWhitespace) {
  const Config c = Config::parse("# header\n a = 1 \n\nb=x,y # trailing\nflag = true\n");
  EXPECT_EQ(c.get_int("a"), 1);
  EXPECT_EQ(c.get_string("b"), "x,y");
  EXPECT_TRUE(c.get_bool("flag"));
  EXPECT_FALSE(c.has("header"));
}

TEST(Config, MergeLaterWins) {
  Config a = Config::parse("x = 1\ny = 2\n");
  a.merge(Config::parse("y = 3\nz = 4\n"));
  EXPECT_EQ(a.get_int("x"), 1);
  EXPECT_EQ(a.get_int("y"), 3);
  EXPECT_EQ(a.get_int("z"), 4);
}

TEST(Config, TypedGettersRejectBadValues) {
  const Config c = Config::parse("d = 0.5\nbad = abc\nlist = 4,5,6\nb = yes\n");
  EXPECT_DOUBLE_EQ(c.get_double("d"), 0.5);
  EXPECT_THROW(c.get_int("bad"), UsageError);
  EXPECT_THROW(c.get_double("bad"), UsageError);
  EXPECT_THROW(c.get_string("missing"), UsageError);
  EXPECT_EQ(c.get_int_list("list"), (std::vector<long long>{4, 5, 6}));
  EXPECT_THROW(parse_int_list("4,,6"), UsageError);
  EXPECT_THROW(Config::parse("no equals sign\n"), UsageError);
}

TEST(Config, DefaultsCoverEveryOption) {
  for (const auto& cmd : command_names()) {
    const Config d = default_config(cmd);
    for (const auto& option : command_options(cmd)) EXPECT_TRUE(d.has(option.name)) << cmd << " " << option.name;
    EXPECT_TRUE(d.has("out")) << cmd;
  }
}

// ---- commands in process ------------------------------------------------------------

TEST(RunCommand, MonomialBoundsAndGrouping) {
  const fs::path dir = fresh_dir("monomial");
  Config bounds;
  bounds.set("b", "1,1,2,4");
  bounds.set("bounds", "true");
  const Ran r1 = run("monomial", bounds, dir);
  EXPECT_EQ(r1.code, 0);
  EXPECT_NE(r1.out.find("lower=30 upper=30"), std::string::npos) << r1.out;

  Config grouped;
  grouped.set("b", "1,1,2,4");
  grouped.set("group", "1,2|3,4");
  const Ran r2 = run("monomial", grouped, dir);
  EXPECT_EQ(r2.code, 0);
  EXPECT_NE(r2.out.find("atoms=9 (2+7)"), std::string::npos) << r2.out;
}

TEST(RunCommand, VerifyPassesAndStrictToleranceFailsGate) {
  const fs::path dir = fresh_dir("verify");
  Config c;
  c.set("b", "1,1");
  c.set("verify", "true");
  const Ran ok = run("monomial", c, dir);
  EXPECT_EQ(ok.code, 0);
  EXPECT_EQ(ok.out.rfind("pass", 0), 0u) << ok.out;

  // Rounding leaves a nonzero error, so a zero tolerance trips the gate.
  c.set("b", "1,2,3");
  c.set("tol", "0");
  const Ran bad = run("monomial", c, dir);
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(bad.err.rfind("FAIL reason=", 0), 0u) << bad.err;
  EXPECT_NE(slurp(dir / "monomial_manifest.json").find("\"status\": \"failed\""), std::string::npos);
}

TEST(RunCommand, UsageErrorsExitTwo) {
  const fs::path dir = fresh_dir("usage");
  Config dims;
  dims.set("dims", "4,40");
  const Ran r = run("tensor", dims, dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("FAIL reason=usage", 0), 0u) << r.err;

  Config unknown;
  unknown.set("bogus", "1");
  EXPECT_EQ(run("monomial", unknown, dir).code, 2);

  Config bad_group;
  bad_group.set("b", "1,1,2");
  bad_group.set("group", "1|3");
  EXPECT_EQ(run("monomial", bad_group, dir).code, 2);
}

TEST(RunCommand, ReluZeroEpochsWritesHeaderOnlyCsv) {
  const fs::path dir = fresh_dir("relu0");
  Config c;
  c.set("epochs", "0");
  const Ran r = run("relu", c, dir);
  EXPECT_EQ(r.code, 0) << r.err;
  const std::string loss = slurp(dir / "relu_loss_seed0.csv");
  EXPECT_EQ(loss, "k,block,f,g_block,h_block,residual_upper,step_norm,inner_iters,wall_ms,step_bound,h_drift,sample_id\n");
  EXPECT_EQ(slurp(dir / "relu_smoothness_seed0.csv"), "logG,logLhat,t,block\n");
  EXPECT_TRUE(fs::exists(dir / "relu_manifest.json"));
}

TEST(RunCommand, ManifestRecordsResolvedConfig) {
  const fs::path dir = fresh_dir("manifest");
  Config c;
  c.set("dims", "3,3");
  c.set("rank", "1");
  c.set("sweeps", "5");
  ASSERT_EQ(run("tensor", c, dir).code, 0);
  const std::string m = slurp(dir / "tensor_manifest.json");
  EXPECT_NE(m.find("\"status\": \"ok\""), std::string::npos) << m;
  EXPECT_NE(m.find("\"dims\": \"3,3\""), std::string::npos) << m;
  EXPECT_NE(m.find("\"rho\": \"0\""), std::string::npos) << m;
}

// ---- binary: value precedence ---------------------------------------------------------

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Binary, OutputDirectoryPrecedence) {
  const fs::path root = fresh_dir("precedence");
  fs::create_directories(root);
  const fs::path cfg = root / "run.cfg";
  std::ofstream(cfg) << "out = " << (root / "from_file").string() << "\nb = 1,1\n";
  const std::string bin = BDC_CLI_PATH;
  const std::string base = bin + " monomial --config " + cfg.string();

  ASSERT_EQ(shell(base + " > /dev/null"), 0);
  EXPECT_TRUE(fs::exists(root / "from_file" / "monomial_manifest.json"));

  ASSERT_EQ(shell("BDC_OUT_DIR=" + (root / "from_env").string() + " " + base + " > /dev/null"), 0);
  EXPECT_TRUE(fs::exists(root / "from_env" / "monomial_manifest.json"));

  ASSERT_EQ(shell("BDC_OUT_DIR=" + (root / "from_env2").string() + " " + base + " --out " +
                  (root / "from_flag").string() + " > /dev/null"),
            0);
  EXPECT_TRUE(fs::exists(root / "from_flag" / "monomial_manifest.json"));
  EXPECT_FALSE(fs::exists(root / "from_env2"));
}

TEST(Binary, ExitCodes) {
  const fs::path root = fresh_dir("exit");
  const std::string bin = std::string(BDC_CLI_PATH) + " ";
  const std::string out = " --out " + root.string() + " > /dev/null 2>&1";
  EXPECT_EQ(shell(bin + "monomial --b 1,1 --verify" + out), 0);
  EXPECT_EQ(shell(bin + "monomial --b 1,2,3 --verify --tol 0" + out), 1);
  EXPECT_EQ(shell(bin + "tensor --dims 4,40" + out), 2);
  EXPECT_EQ(shell(bin + "monomial --no-such-flag" + out), 2);
  EXPECT_EQ(shell(bin + "monomial --config /nonexistent/file.cfg" + out), 2);
}

}  // namespace
}  // namespace bdc
