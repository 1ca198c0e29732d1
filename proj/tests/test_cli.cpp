#include "pgc/execute.hpp"

#include <cmath>
#include <fstream>

#include "test_util.hpp"

using namespace pgc;

namespace {

constexpr double kPi = 3.14159265358979323846;

RunConfig base_config(const std::filesystem::path& out) {
  RunConfig config;
  config.out_dir = out.string();
  config.domain = DomainSpec::cap(kPi / 3, 0.15);
  return config;
}

bool file_exists(const std::filesystem::path& p) {
  return std::filesystem::exists(p);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("command dispatch table") {
  for (const char* cmd : {"mesh", "solve", "sweep", "bubble-scan", "mt-check",
                          "classify", "report"}) {
    CHECK(is_known_command(cmd));
  }
  CHECK_FALSE(is_known_command("mes"));
  CHECK_FALSE(is_known_command(""));
}

TEST_CASE("mesh command writes the geometry artifacts") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("cli-mesh");
  RunConfig config = base_config(dir / "out");

  CHECK(execute("mesh", config) == 0);
  CHECK(file_exists(dir / "out" / "mesh.obj"));
  CHECK(file_exists(dir / "out" / "mesh_loops.csv"));
  std::string json = testutil::slurp(dir / "out" / "mesh.json");
  CHECK(json.find("\"euler_characteristic\": 1") != std::string::npos);
  CHECK(json.find("\"rho_geometric\"") != std::string::npos);
  CHECK_FALSE(file_exists(dir / "out" / "errors.json"));
  fs::remove_all(dir);
}

TEST_CASE("identical runs produce byte-identical artifacts") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("cli-det");
  RunConfig a = base_config(dir / "a");
  a.curvature = {"affine-z", 1.0, 1.0, 0.5};
  RunConfig b = a;
  b.out_dir = (dir / "b").string();

  REQUIRE(execute("solve", a) == 0);
  REQUIRE(execute("solve", b) == 0);
  CHECK(testutil::slurp(dir / "a" / "result.json") ==
        testutil::slurp(dir / "b" / "result.json"));
  CHECK(testutil::slurp(dir / "a" / "solution.csv") ==
        testutil::slurp(dir / "b" / "solution.csv"));
  std::string json = testutil::slurp(dir / "a" / "result.json");
  CHECK(json.find("\"status\": \"converged\"") != std::string::npos);
  CHECK(json.find("wall") == std::string::npos);  // timing stays out
  fs::remove_all(dir);
}

TEST_CASE("solve exit codes separate hypothesis errors from stalls") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("cli-codes");

  SUBCASE("nowhere-positive curvature is a hypothesis error") {
    RunConfig config = base_config(dir / "h1");
    config.curvature = {"const", -1.0, 0.0, 0.0};
    CHECK(execute("solve", config) == 2);
    std::string err = testutil::slurp(dir / "h1" / "errors.json");
    CHECK(err.find("h1-violation") != std::string::npos);
    CHECK_FALSE(file_exists(dir / "h1" / "result.json"));
  }
  SUBCASE("a starved iteration budget is a non-convergence") {
    RunConfig config = base_config(dir / "stall");
    config.curvature = {"affine-z", 1.0, 1.0, 0.5};
    config.solver.newton.tol = 1e-15;
    config.solver.newton.max_iterations = 1;
    CHECK(execute("solve", config) == 1);
    std::string err = testutil::slurp(dir / "stall" / "errors.json");
    CHECK(err.find("no-convergence") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("classify records the verdict before objecting") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("cli-classify");

  RunConfig good = base_config(dir / "good");
  good.domain = DomainSpec::band(kPi / 4, 3 * kPi / 4, 0.2);
  good.curvature = {"affine-z", 1.0, 0.0, 1.0};
  CHECK(execute("classify", good) == 0);
  std::string json = testutil::slurp(dir / "good" / "classification.json");
  CHECK(json.find("\"h2\": true") != std::string::npos);

  RunConfig bad = good;
  bad.out_dir = (dir / "bad").string();
  bad.curvature = {"affine-z", 1.0, -std::cos(kPi / 4), 1.0};  // zero on a loop
  CHECK(execute("classify", bad) == 2);
  // the lenient verdict is still on disk next to the error
  std::string lenient = testutil::slurp(dir / "bad" / "classification.json");
  CHECK(lenient.find("\"h2\": false") != std::string::npos);
  std::string err = testutil::slurp(dir / "bad" / "errors.json");
  CHECK(err.find("h2-violation") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("sweep without a grid is a configuration error") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("cli-sweep");
  RunConfig config = base_config(dir / "out");
  CHECK(execute("sweep", config) == 2);
  std::string err = testutil::slurp(dir / "out" / "errors.json");
  CHECK(err.find("config-parse") != std::string::npos);
  CHECK(err.find("rho_grid") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("bubble-scan and mt-check write their tables") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("cli-scan");
  RunConfig config = base_config(dir / "out");
  config.domain = DomainSpec::cap(1.0, 0.045);
  config.bubbles.lambdas = {2.0, 3.0, 4.0};
  config.bubbles.center = Vec3(std::sin(1.0), 0, std::cos(1.0));
  config.bubbles.placement = "boundary";

  CHECK(execute("bubble-scan", config) == 0);
  std::string scan = testutil::slurp(dir / "out" / "bubble_scan.json");
  CHECK(scan.find("\"energy_slope\"") != std::string::npos);
  std::string csv = testutil::slurp(dir / "out" / "bubble_scan.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 scales

  CHECK(execute("mt-check", config) == 0);
  CHECK(file_exists(dir / "out" / "mt.csv"));
  std::string mt = testutil::slurp(dir / "out" / "mt.json");
  CHECK(mt.find("\"max_gap\"") != std::string::npos);

  // unresolved scales surface as a resolution error, not a wrong answer
  config.bubbles.lambdas = {8.0, 16.0, 32.0};
  CHECK(execute("bubble-scan", config) == 2);
  std::string err = testutil::slurp(dir / "out" / "errors.json");
  CHECK(err.find("resolution") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("report summarizes the run inputs") {
  namespace fs = std::filesystem;
  fs::path dir = testutil::scratch_dir("cli-report");
  RunConfig config = base_config(dir / "out");
  config.curvature = {"affine-z", 1.0, 1.0, 0.5};
  config.initial.preset = "affine-z";
  config.initial.a = 0.0;
  config.initial.b = 0.2;

  CHECK(execute("report", config) == 0);
  std::string json = testutil::slurp(dir / "out" / "report.json");
  for (const char* key : {"\"rho\"", "\"mesh\"", "\"classification\"",
                          "\"energy\"", "\"concentration\""}) {
    CHECK_MESSAGE(json.find(key) != std::string::npos, "missing " << key);
  }
  fs::remove_all(dir);
}

}  // TEST_SUITE
