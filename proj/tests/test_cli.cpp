#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "eraser/protocol.hpp"

using Catch::Approx;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents, const char* ext = ".cfg") {
    path = std::string(std::tmpnam(nullptr)) + ext;
    std::ofstream(path) << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

struct CliResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  const std::string out_path = std::string(std::tmpnam(nullptr)) + ".out";
  const std::string cmd =
      std::string(ERASER_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::remove(out_path.c_str());
  return {WEXITSTATUS(status), ss.str()};
}

double parse_field(const std::string& output, const std::string& key) {
  const auto pos = output.find(key + "=");
  REQUIRE(pos != std::string::npos);
  return std::stod(output.substr(pos + key.size() + 1));
}

}  // namespace

TEST_CASE("phase-match command") {
  const std::string data = std::string("--data ") + ERASER_DATA_FILE + " ";

  SECTION("calcite at 405 nm") {
    const auto r = run_cli(data + "phase-match calcite 405");
    CHECK(r.exit_code == 0);
    CHECK(parse_field(r.output, "psi_pm_deg") == Approx(31.8).margin(0.5));
    CHECK(std::abs(parse_field(r.output, "residual")) < 1e-12);
    CHECK(parse_field(r.output, "walkoff_deg") > 0.0);
  }

  SECTION("isotropic medium exits 2") {
    const auto r = run_cli(data + "phase-match isotropic-silica 405");
    CHECK(r.exit_code == 2);
  }

  SECTION("unknown crystal exits 1") {
    const auto r = run_cli(data + "phase-match quartz 405");
    CHECK(r.exit_code == 1);
  }

  SECTION("wavelength outside the Sellmeier range exits 1") {
    const auto r = run_cli(data + "phase-match calcite 100");
    CHECK(r.exit_code == 1);
  }
}

TEST_CASE("sweep command") {
  SECTION("heralded plus port follows cos^2(beta)/2") {
    TempFile cfg(
        "[experiment]\n"
        "herald = linear\n"
        "gamma_deg = 45\n"
        "alpha_deg = 0\n"
        "beta_sweep = 0:90:15\n");
    const auto r = run_cli("--config " + cfg.path + " sweep");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.output);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "alpha_deg,beta_deg,herald,port,p_coincidence");
    int rows = 0;
    while (std::getline(lines, line)) {
      std::istringstream fields(line);
      std::string a, b, herald, port, p;
      std::getline(fields, a, ',');
      std::getline(fields, b, ',');
      std::getline(fields, herald, ',');
      std::getline(fields, port, ',');
      std::getline(fields, p, ',');
      const double beta = std::stod(b) * M_PI / 180.0;
      if (port == "plus") {
        const double c = std::cos(beta);
        CHECK(std::stod(p) == Approx(0.5 * c * c).margin(1e-12));
      }
      ++rows;
    }
    CHECK(rows == 14);  // 7 beta values x 2 ports
  }

  SECTION("direct herald reproduces the mixture curve") {
    TempFile cfg(
        "[experiment]\n"
        "herald = direct\n"
        "alpha_deg = 30\n"
        "beta_sweep = 0:45:45\n");
    const auto r = run_cli("--config " + cfg.path + " sweep");
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(r.output);
    std::string line;
    std::getline(lines, line);  // header
    std::getline(lines, line);
    const auto last = line.rfind(',');
    CHECK(std::stod(line.substr(last + 1)) ==
          Approx(eraser::eq4_closed_form(M_PI / 6.0, 0.0)).margin(1e-12));
  }

  SECTION("byte-identical reruns") {
    TempFile cfg(
        "[experiment]\nherald = linear\ngamma_deg = 30\nalpha_sweep = "
        "0:90:10\nbeta_sweep = 0:90:10\n");
    const auto a = run_cli("--config " + cfg.path + " sweep");
    const auto b = run_cli("--config " + cfg.path + " sweep");
    CHECK(a.output == b.output);
  }

  SECTION("empty sweep range exits 1") {
    TempFile cfg("[experiment]\nbeta_sweep = 90:0:10\n");
    CHECK(run_cli("--config " + cfg.path + " sweep").exit_code == 1);
  }

  SECTION("malformed config exits 1 naming the key") {
    TempFile cfg("[experiment]\nbogus_key = 1\n");
    const auto r = run_cli("--config " + cfg.path + " sweep");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("bogus_key") != std::string::npos);
  }
}

TEST_CASE("chsh command") {
  SECTION("gamma = 45 gives the Tsirelson value") {
    TempFile cfg("[experiment]\nherald = linear\ngamma_deg = 45\n");
    const auto r = run_cli("--config " + cfg.path + " chsh");
    REQUIRE(r.exit_code == 0);
    CHECK(parse_field(r.output, "S_analytic") == Approx(2.82843).margin(1e-5));
  }

  SECTION("direct herald stays classical") {
    TempFile cfg("[experiment]\nherald = direct\n");
    const auto r = run_cli("--config " + cfg.path + " chsh");
    REQUIRE(r.exit_code == 0);
    CHECK(parse_field(r.output, "S_analytic") <= 2.0);
  }

  SECTION("sampled value is reprintable") {
    TempFile cfg(
        "[experiment]\nherald = linear\ngamma_deg = 45\n"
        "[montecarlo]\nn = 100000\nseed = 7\n");
    const auto a = run_cli("--config " + cfg.path + " chsh");
    const auto b = run_cli("--config " + cfg.path + " chsh");
    REQUIRE(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output.find("S_sampled=") != std::string::npos);
  }
}

TEST_CASE("tomography command") {
  SECTION("exact xi+ reconstruction") {
    TempFile cfg("[experiment]\nstate = xi_plus\n");
    const auto r = run_cli("--config " + cfg.path + " tomography");
    REQUIRE(r.exit_code == 0);
    CHECK(parse_field(r.output, "concurrence") == Approx(1.0).margin(1e-8));
    CHECK(parse_field(r.output, "fidelity") == Approx(1.0).margin(1e-9));
  }

  SECTION("mixture reconstructs as separable") {
    TempFile cfg("[experiment]\nstate = mixture\n");
    const auto r = run_cli("--config " + cfg.path + " tomography");
    REQUIRE(r.exit_code == 0);
    CHECK(parse_field(r.output, "concurrence") <= 1e-8);
  }

  SECTION("unknown state key exits 1") {
    TempFile cfg("[experiment]\nstate = bogus\n");
    CHECK(run_cli("--config " + cfg.path + " tomography").exit_code == 1);
  }
}

TEST_CASE("geometry command") {
  const auto r = run_cli("geometry --phi 0.05 --d 2 --lc 15 --lw 5 --ring 0.01");
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("pump_diameter_ok=true") != std::string::npos);
  CHECK(parse_field(r.output, "margin_mm") == Approx(1.0).margin(1e-9));

  const auto bad = run_cli("geometry --phi 0.05 --d 0.5 --lc 15 --lw 5");
  REQUIRE(bad.exit_code == 0);
  CHECK(bad.output.find("pump_diameter_ok=false") != std::string::npos);
}

TEST_CASE("montecarlo command") {
  TempFile cfg(
      "[experiment]\nherald = linear\ngamma_deg = 45\n"
      "[montecarlo]\nn = 50000\nseed = 3\n");
  const auto a = run_cli("--config " + cfg.path + " montecarlo");
  REQUIRE(a.exit_code == 0);
  CHECK(a.output.find("emitted=50000") != std::string::npos);

  // --seed overrides the config seed.
  const auto b = run_cli("--config " + cfg.path + " --seed 4 montecarlo");
  CHECK(b.output != a.output);
  const auto c = run_cli("--config " + cfg.path + " --seed 3 montecarlo");
  CHECK(c.output == a.output);
}
