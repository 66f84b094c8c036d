#include <gtest/gtest.h>

#include <regex>

#include "pressem/capture.hpp"
#include "pressem/config_io.hpp"
#include "pressem/fixtures.hpp"
#include "pressem/model_io.hpp"
#include "pressem/plant.hpp"
#include "pressem/rng.hpp"
#include "pressem/table_io.hpp"
#include "pressem/trace_io.hpp"
#include "pressem/trajectory.hpp"
#include "process.hpp"
#include "test_support.hpp"

namespace pressem {
namespace {

namespace fs = std::filesystem;
using testing::run_cli;
using testing::slurp;
using testing::spit;

const std::string kCli = PRESSEM_CLI_PATH;

class Cli : public ::testing::Test {
 protected:
  testing::TempDir dir{"cli"};
  testing::RunResult run(const std::string& args) { return run_cli(kCli, args, dir.path()); }
  fs::path at(const std::string& name) const { return dir.path() / name; }
};

// ```text blocks of docs/cli.md, in order.
std::vector<std::string> doc_blocks() {
  const auto doc = slurp(fs::path(PRESSEM_SOURCE_DIR) / "docs" / "cli.md");
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = doc.find("```text\n", pos)) != std::string::npos) {
    pos += 8;
    const auto end = doc.find("```", pos);
    out.push_back(doc.substr(pos, end - pos));
    pos = end + 3;
  }
  return out;
}

TEST_F(Cli, HelpTextMatchesDocs) {
  const std::vector<std::string> subcommands = {"",       "fit",      "synth", "compensate", "render",
                                                "report", "validate", "serve", "fixture"};
  const auto blocks = doc_blocks();
  ASSERT_EQ(blocks.size(), subcommands.size());
  for (std::size_t i = 0; i < subcommands.size(); ++i) {
    const auto r = run(subcommands[i] + " --help");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, blocks[i]) << "subcommand '" << subcommands[i] << "'";
  }
}

TEST_F(Cli, ValidateIsSilentOnValidModel) {
  ASSERT_EQ(run("fixture --model tactile --out m.json").code, 0);
  const auto r = run("validate m.json");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "");
  EXPECT_EQ(r.err, "");
}

TEST_F(Cli, ValidateListsViolations) {
  auto m = tactile_model();
  m.curves.begin()->second.force_cN.pop_back();
  spit(at("bad.json"), serialize_model(m));
  const auto r = run("validate bad.json");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("curves"), std::string::npos) << r.out;
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("compensate --bogus").code, 2);
  EXPECT_EQ(run("synth --model missing.json --trajectory 4:50").code, 2);
  EXPECT_EQ(run("fixture --model nope").code, 2);
}

TEST_F(Cli, RefusesToOverwriteWithoutForce) {
  ASSERT_EQ(run("fixture --model tactile --out m.json").code, 0);
  const auto before = slurp(at("m.json"));
  const auto r = run("fixture --model linear --out m.json");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--force"), std::string::npos);
  EXPECT_EQ(slurp(at("m.json")), before);
  EXPECT_EQ(run("--force fixture --model linear --out m.json").code, 0);
  EXPECT_NE(slurp(at("m.json")), before);
}

TEST_F(Cli, FitEmptyDirectoryReportsNoTraces) {
  fs::create_directories(at("empty"));
  const auto r = run("fit empty --out m.json");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("no traces"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(at("m.json")));
}

TEST_F(Cli, FitMalformedCsvNamesLine) {
  spit(at("bad.csv"), "# sample_rate_hz=1000\nt_ms,disp_mm,force_cN,vib\n0,0,1,0\n1,zero,1,0\n");
  const auto r = run("fit bad.csv");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
}

TEST_F(Cli, FitRoundTripsSynthesizedTraces) {
  Rng rng(4);
  const auto m = make_model("rt", DisplacementGrid{2.0, 0.05}, tactile_bins(), [&](Direction dir, std::size_t b, double d) {
    return 20.0 + 10.0 * d + 5.0 * static_cast<double>(b) + (dir == Direction::press ? 8.0 : 0.0) + 4.0 * rng.uniform();
  });
  fs::create_directories(at("traces"));
  for (const auto& b : m.bins) {
    const auto traj = generate_ramp_trajectory({2.0, b.center_mm_s, 50.0, 20.0}, 30000.0);
    spit(at("traces") / ("b" + std::to_string(static_cast<int>(b.center_mm_s)) + ".csv"),
         write_trace_csv(synth_trace_from_model(m, traj, 0.0, 1)));
  }
  CaptureConfig cfg;
  cfg.bins = m.bins;
  cfg.grid = m.grid;
  cfg.model_name = "rt";
  spit(at("capture.json"), serialize_capture_config(cfg));
  const auto r = run("fit traces --config capture.json --out fit.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto fit = parse_model(slurp(at("fit.json")));
  EXPECT_EQ(fit.name, "rt");
  for (const auto& [key, curve] : m.curves) {
    const auto& got = fit.curves.at(key).force_cN;
    for (std::size_t i = 0; i < curve.force_cN.size(); ++i) EXPECT_NEAR(got[i], curve.force_cN[i], 1e-6);
  }
}

TEST_F(Cli, CompensateIdealPlantTakesOneIteration) {
  ASSERT_EQ(run("fixture --model tactile --out m.json").code, 0);
  spit(at("c.json"), R"({"learning_rate": 1.0, "nominal_gain_cN": 300.0})");
  const auto r = run("compensate --model m.json --plant ideal --config c.json --out t.json --report r.json");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = parse_report(slurp(at("r.json")));
  ASSERT_FALSE(report.bins.empty());
  for (const auto& b : report.bins) {
    EXPECT_TRUE(b.converged);
    EXPECT_EQ(b.iterations_used, 1u);
  }
  EXPECT_NE(r.out.find("converged"), std::string::npos);
}

TEST_F(Cli, NonConvergenceExitsFourAndStillWrites) {
  ASSERT_EQ(run("fixture --model tactile --out m.json").code, 0);
  spit(at("c.json"), R"({"max_iterations": 2, "epsilon_cN": 0.001})");
  const auto r = run("compensate --model m.json --config c.json --seed 1 --out t.json --report r.json --report-csv r.csv");
  EXPECT_EQ(r.code, 4);
  EXPECT_TRUE(fs::exists(at("t.json")));
  EXPECT_FALSE(parse_report(slurp(at("r.json"))).converged());
  const auto csv = slurp(at("r.csv"));
  EXPECT_EQ(csv.rfind(std::string(kReportCsvHeader), 0), 0u);
  const auto summary = run("report r.csv --epsilon 0.001");
  EXPECT_EQ(summary.code, 0);
  EXPECT_NE(summary.out.find("not converged"), std::string::npos);
}

TEST_F(Cli, FdvvTableRendersFastPressBetterThanFd) {
  ASSERT_EQ(run("fixture --model tactile --out ref.json").code, 0);
  ASSERT_EQ(run("fixture --model fd-baseline --out fd.json").code, 0);
  ASSERT_EQ(run("compensate --model ref.json --seed 1 --out fdvv_table.json").code, 0);
  ASSERT_EQ(run("compensate --model fd.json --seed 1 --out fd_table.json").code, 0);
  auto error_of = [&](const std::string& table) {
    const auto r = run("render --table " + table + " --model ref.json --trajectory 4:100 --seed 1");
    EXPECT_EQ(r.code, 0) << r.err;
    std::smatch m;
    EXPECT_TRUE(std::regex_search(r.out, m, std::regex(R"("mean_abs_error_cN": ([0-9.eE+-]+))"))) << r.out;
    return std::stod(m[1]);
  };
  const double fdvv = error_of("fdvv_table.json");
  const double fd = error_of("fd_table.json");
  EXPECT_GT(fd, fdvv);
}

TEST_F(Cli, RenderScriptWritesSessionLog) {
  ASSERT_EQ(run("fixture --model tactile --out ref.json").code, 0);
  ASSERT_EQ(run("compensate --model ref.json --out t.json").code, 0);
  ASSERT_EQ(run("synth --model ref.json --trajectory 4:50 --out s.csv").code, 0);
  ASSERT_EQ(run("render --table t.json --model ref.json --script s.csv --log log.csv").code, 0);
  const auto log = slurp(at("log.csv"));
  EXPECT_EQ(log.rfind(std::string(kSessionLogHeader), 0), 0u);
  EXPECT_NE(log.find("vibration_started:0"), std::string::npos);
  const auto rows = std::count(log.begin(), log.end(), '\n') - 1;
  EXPECT_EQ(static_cast<std::size_t>(rows), read_trace_file(at("s.csv")).size());
}

// Each step runs in two fresh directories; every file must match byte for byte.
TEST_F(Cli, ArtifactsAreByteIdenticalAcrossRuns) {
  const std::vector<std::string> steps = {
      "fixture --model tactile --out ref.json",
      "fixture --model tactile-captured --seed 7 --out cap.json",
      "fixture --plant default --out plant.json",
      "synth --model ref.json --trajectory 4:20 --trajectory 4:60 --trajectory 4:100 --noise 1.5 --seed 9 --out s.csv",
      "fit s.csv --out fit.json",
      "compensate --model cap.json --plant plant.json --seed 5 --threads 3 --out t.json --report r.json --report-csv r.csv",
      "render --table t.json --model ref.json --trajectory 4:100 --trajectory 2:30:40 --seed 5 --out rt.csv --log rl.csv --metrics rm.json",
      "render --table t.json --model ref.json --script s.csv --log sl.csv",
      "report r.json",
      "validate fit.json",
  };
  testing::TempDir a("cli-a"), b("cli-b");
  for (const auto& step : steps) {
    const auto ra = run_cli(kCli, step, a.path());
    const auto rb = run_cli(kCli, step, b.path());
    ASSERT_EQ(ra.code, 0) << step << "\n" << ra.err;
    EXPECT_EQ(ra.code, rb.code) << step;
    EXPECT_EQ(ra.out, rb.out) << step;
  }
  std::size_t compared = 0;
  for (const auto& e : fs::directory_iterator(a.path())) {
    const auto other = b.path() / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << e.path();
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
    ++compared;
  }
  EXPECT_EQ(compared, 12u);
}

}  // namespace
}  // namespace pressem
