#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string("cd ") + SPRAYOID_SOURCE_DIR + " && " + SPRAYOID_CLI + " " + args +
                          (merge_stderr ? " 2>&1" : " 2>/dev/null");
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

nlohmann::json json_of(const Outcome& r) { return nlohmann::json::parse(r.out); }

const nlohmann::json& check(const nlohmann::json& report, const std::string& name) {
  for (const auto& c : report.at("checks"))
    if (c.at("name") == name) return c;
  throw std::runtime_error("no check " + name);
}

TEST(Cli, ValidateSO3) {
  const Outcome r = run("validate configs/so3.toml --json");
  ASSERT_EQ(r.code, 0) << r.out;
  const nlohmann::json j = json_of(r);
  EXPECT_EQ(j.at("report_version"), 1);
  EXPECT_EQ(j.at("command"), "validate");
  EXPECT_EQ(j.at("verdict"), "pass");
  EXPECT_LE(check(j, "jacobi").at("value").get<double>(), 1e-12);
  EXPECT_FALSE(j.contains("wall_time_s"));
}

TEST(Cli, ValidateBuiltinAndExplicitModels) {
  EXPECT_EQ(run("validate builtin:z:2").code, 0);
  EXPECT_EQ(run("validate configs/so3_dual.toml").code, 0);
  EXPECT_EQ(run("validate configs/tangent2.toml").code, 0);
}

TEST(Cli, MultiplyWithMatrixOracle) {
  const Outcome r = run("multiply configs/so3.toml --v1 0.3,0,0 --v2 0,0.3,0 --oracle matrix --json");
  ASSERT_EQ(r.code, 0) << r.out;
  const nlohmann::json j = json_of(r);
  EXPECT_LE(check(j, "matrix_oracle_diff").at("value").get<double>(), 1e-5);
  EXPECT_EQ(j.at("results").at("product").at("xi").size(), 3u);
}

TEST(Cli, ReportsAreDeterministic) {
  const std::string args = "mc configs/so3_dual.toml --x 0.3,0.1,-0.2 --xi 0.2,0.4,0.1 --json";
  const Outcome a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const Outcome c = run("ac tables/z_window2.tbl --max-len 4 --json"), d = run("ac tables/z_window2.tbl --max-len 4 --json");
  EXPECT_EQ(c.out, d.out);
}

TEST(Cli, TimingIsOptIn) {
  const Outcome r = run("--timing validate configs/so3.toml --json");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(json_of(r).contains("wall_time_s"));
}

TEST(Cli, CyclicWindowClasses) {
  const Outcome r = run("ac tables/z12_window5.tbl --max-len 10 --json");
  ASSERT_EQ(r.code, 0) << r.out;
  const nlohmann::json j = json_of(r);
  EXPECT_EQ(j.at("results").at("class_count"), 12);
  EXPECT_TRUE(check(j, "stable").at("pass").get<bool>());
  EXPECT_EQ(j.at("results").at("products").size(), 12u);
}

TEST(Cli, FullCheckVerdicts) {
  const Outcome wide = run("full-check tables/z12.tbl --window-from tables/z12_window5.tbl --expect iso --json");
  ASSERT_EQ(wide.code, 0) << wide.out;
  EXPECT_EQ(json_of(wide).at("results").at("verdict"), "iso");
  const Outcome narrow = run("full-check tables/z12.tbl --window -2,-1,1,2 --expect proper_cover --json");
  ASSERT_EQ(narrow.code, 0) << narrow.out;
  EXPECT_TRUE(json_of(narrow).at("results").contains("collision"));
  EXPECT_EQ(run("full-check tables/z12.tbl --window -2,-1,1,2 --expect iso").code, 1);
}

TEST(Cli, TableCommands) {
  EXPECT_EQ(run("validate tables/pentagon_associator.tbl").code, 0);
  const Outcome a = run("associators tables/pentagon_associator.tbl --explore 6 --json");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_EQ(json_of(a).at("results").at("associators"), nlohmann::json::array({"P"}));
  EXPECT_EQ(run("associators tables/pentagon_associator.tbl --explore 6 --expect-empty").code, 1);
  EXPECT_EQ(run("associators tables/z_window2.tbl --expect-empty").code, 0);
  EXPECT_EQ(run("global-assoc tables/z_window2.tbl --order 6").code, 0);
  EXPECT_EQ(run("global-assoc tables/not_4_associative.tbl --order 4").code, 1);
  const Outcome none = run("search-counterexample --size 3 --budget 1000 --json");
  ASSERT_EQ(none.code, 0) << none.out;
  EXPECT_FALSE(json_of(none).at("results").at("found").get<bool>());
  const Outcome found = run("search-counterexample --size 12 --budget 100000 --json");
  ASSERT_EQ(found.code, 0) << found.out;
  EXPECT_TRUE(json_of(found).at("results").at("found").get<bool>());
}

TEST(Cli, NumericChecksPassOnSO3Dual) {
  EXPECT_EQ(run("spray configs/so3_dual.toml --x 0.5,0.2,-0.1 --xi 0.3,0.4,-0.2").code, 0);
  EXPECT_EQ(run("flow configs/so3_dual.toml --x 0.5,0.2,-0.1 --xi 0.3,0.4,-0.2 --t 0.7").code, 0);
  EXPECT_EQ(run("im-check configs/so3_dual.toml").code, 0);
  EXPECT_EQ(run("omega configs/zero_poisson.toml --x 0.1,0.2 --xi 0.3,-0.1 --matrix").code, 0);
}

TEST(Cli, FailedChecksExitOne) {
  const Outcome r = run("im-check configs/so3_dual.toml --inject-nu 1 --json");
  EXPECT_EQ(r.code, 1);
  const nlohmann::json j = json_of(r);
  EXPECT_EQ(j.at("verdict"), "fail");
  EXPECT_FALSE(check(j, "IM2").at("pass").get<bool>());
}

TEST(Cli, ComputeErrorsExitOneWithKind) {
  const Outcome r = run("flow configs/tangent2.toml --x 0,0 --xi 3.9,0 --t 3 --json");
  EXPECT_EQ(r.code, 1);
  const nlohmann::json j = json_of(r);
  EXPECT_EQ(j.at("verdict"), "error");
  EXPECT_EQ(j.at("error").at("kind"), "LeftDomain");
}

TEST(Cli, InputErrorsExitTwo) {
  EXPECT_EQ(run("validate configs/missing.toml").code, 2);
  EXPECT_EQ(run("validate tables/missing.tbl").code, 2);
  EXPECT_EQ(run("bogus-command").code, 2);
  EXPECT_EQ(run("multiply configs/so3.toml --v1 0.3,zz --v2 0,0.3,0").code, 2);
  EXPECT_EQ(run("multiply configs/so3.toml --v1 0.3,0 --v2 0,0.3,0").code, 2);
  EXPECT_EQ(run("--quad-nodes 4 mc configs/so3.toml --xi 0.1,0,0").code, 2);
  const Outcome r = run("validate configs/missing.toml", true);
  EXPECT_NE(r.out.find("error"), std::string::npos) << r.out;
}

}  // namespace
