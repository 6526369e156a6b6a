#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "percolab/cli.hpp"
#include "percolab/error.hpp"
#include "percolab/io.hpp"
#include "percolab/render.hpp"

using namespace percolab;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("percolab_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& child) const { return (path / child).string(); }
};

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  const auto none = run({});
  CHECK(none.code == 2);
  CHECK(none.err.find("Usage") != std::string::npos);
  CHECK(none.err.rfind("percolab: error kind=usage:", 0) == 0);
  CHECK(run({"teleport"}).code == 2);
  CHECK(run({"bethe", "--z", "3", "--p", "0.2", "--colour", "red"}).code == 2);
  CHECK(run({"bethe", "--z", "three", "--p", "0.2"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("sweep") != std::string::npos);
}

TEST_CASE("bethe report") {
  TempDir dir("bethe");
  const auto r = run({"bethe", "--z", "3", "--p", "0.25", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto j = Json::parse(r.out);
  CHECK(j["S"].get<double>() == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(j["xi_l_squared"].get<double>() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(j["p_c"].get<double>() == 0.5);
  CHECK(j["exponents"]["D"].get<double>() == 4.0);
  CHECK(fs::exists(dir / "bethe.json"));
  CHECK(fs::exists(dir / "manifest.json"));

  const auto above = run({"bethe", "--z", "3", "--p", "0.7", "--out", dir.path.string()});
  REQUIRE(above.code == 0);
  CHECK(Json::parse(above.out)["S"].is_null());

  const auto bad = run({"bethe", "--z", "1", "--p", "0.2", "--out", dir.path.string()});
  CHECK(bad.code == 2);
  CHECK(bad.err == "percolab: error kind=validation: coordination number z must be >= 2, got 1\n");

  const auto mc = run({"bethe", "--z", "3", "--p", "0.3", "--realizations", "2000", "--out", dir.path.string()});
  REQUIRE(mc.code == 0);
  const std::string table = io::read_file(dir / "mc.csv");
  CHECK(table.rfind("quantity,l,exact,mc_mean,mc_stderr\n", 0) == 0);
  CHECK(count_of(table, "\ng,") == 8);
}

TEST_CASE("oracle matches the enumeration reference") {
  TempDir dir("oracle");
  const auto r = run({"oracle", "--sides", "3,3", "--p", "0.5", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto j = Json::parse(r.out);
  CHECK(j["S"].get<double>() == doctest::Approx(3.9479166666666665).epsilon(1e-13));
  CHECK(j["spanning_probability"].get<double>() == doctest::Approx(0.529296875).epsilon(1e-13));
  CHECK(run({"oracle", "--sides", "5,5", "--p", "0.5", "--out", dir.path.string()}).code == 2);
}

TEST_CASE("sweep artifacts are reproducible across reruns and worker counts") {
  TempDir dir("sweep");
  const std::vector<std::string> base{"sweep", "--sides", "8,8", "--realizations", "20", "--seed", "5",
                                      "--p-grid", "0.5,0.6", "--threshold", "--bootstrap", "20"};
  auto with = [&](const std::string& out, const std::string& workers) {
    auto args = base;
    args.insert(args.end(), {"--out", dir / out, "--workers", workers});
    return run(args);
  };
  REQUIRE(with("a", "1").code == 0);
  REQUIRE(with("b", "1").code == 0);
  REQUIRE(with("c", "8").code == 0);
  for (const auto* name : {"curves.csv", "canonical.csv", "threshold.json"}) {
    const auto a = io::read_file(dir / ("a/" + std::string(name)));
    CHECK(a == io::read_file(dir / ("b/" + std::string(name))));
    CHECK(a == io::read_file(dir / ("c/" + std::string(name))));
  }
  const auto curves = io::read_file(dir / "a/curves.csv");
  CHECK(curves.rfind("n,observable,mean,stderr\n0,largest_cluster,0,0\n", 0) == 0);
  CHECK(count_of(curves, "\n") == 1 + 4 * 65);

  const auto manifest = Json::parse(io::read_file(dir / "a/manifest.json"));
  CHECK(manifest["subcommand"] == "sweep");
  CHECK(manifest["seeds"]["master"] == 5);
  CHECK(manifest["config"]["sides"] == "8,8");
  CHECK(manifest["version"] == PERCOLAB_VERSION);
  CHECK(manifest["wall_time_seconds"].is_number());
  CHECK(manifest["artifacts"].size() == 3);
}

TEST_CASE("replaying a manifest reproduces the artifacts") {
  TempDir dir("replay");
  REQUIRE(run({"sample", "--sides", "12,12", "--p", "0.55", "--realizations", "80", "--s-min", "2", "--out",
               dir / "orig", "--geometry-min-size", "2", "--fractal-lo", "2", "--fractal-hi", "100"})
              .code == 0);
  const auto replay = run({"replay", "--manifest", dir / "orig/manifest.json", "--out", dir / "copy"});
  REQUIRE(replay.code == 0);
  for (const auto* name : {"census.csv", "radii.csv", "fits.json"}) {
    CHECK(io::read_file(dir / ("orig/" + std::string(name))) == io::read_file(dir / ("copy/" + std::string(name))));
  }
  const auto fits = Json::parse(io::read_file(dir / "orig/fits.json"));
  CHECK(fits["power_law"].contains("tau_hat"));
  CHECK(fits["p_source"] == "given");

  const auto fit = run({"fit", "--kind", "tau", "--census", dir / "orig/census.csv", "--s-min", "2", "--out",
                        dir / "fit"});
  REQUIRE(fit.code == 0);
  CHECK(Json::parse(fit.out)["fit"]["tau_hat"].get<double>() ==
        doctest::Approx(fits["power_law"]["tau_hat"].get<double>()).epsilon(1e-12));
  CHECK(run({"fit", "--kind", "tau", "--census", dir / "nowhere.csv", "--out", dir / "fit"}).code == 1);
  CHECK(run({"replay", "--manifest", dir / "nowhere.json"}).code == 1);
}

TEST_CASE("config files, flag precedence and the output directory variable") {
  TempDir dir("config");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# bethe run\nz = 4\np = 0.1\nout = " << (dir / "from_config") << "\n";
  }
  auto r = run({"bethe", "--config", dir / "run.cfg"});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["p_c"].get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(fs::exists(dir / "from_config/bethe.json"));

  r = run({"bethe", "--config", dir / "run.cfg", "--z", "3"});
  REQUIRE(r.code == 0);
  CHECK(Json::parse(r.out)["p_c"].get<double>() == 0.5);

  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "z = 3\np = 0.1\nvelocity = 3\n";
  }
  CHECK(run({"bethe", "--config", dir / "bad.cfg"}).code == 2);
  CHECK(run({"bethe", "--config", dir / "absent.cfg"}).code == 2);

  ::setenv("PERCOLAB_OUT", (dir / "env").c_str(), 1);
  CHECK(cli::resolve_output_dir("") == dir / "env");
  CHECK(cli::resolve_output_dir("x") == "x");
  REQUIRE(run({"oracle", "--sides", "2,2", "--p", "0.5"}).code == 0);
  CHECK(fs::exists(dir / "env/oracle.json"));
  ::unsetenv("PERCOLAB_OUT");
}

TEST_CASE("runtime failures exit with 1 and write nothing") {
  TempDir dir("fail");
  const auto r = run({"sweep", "--sides", "1,1", "--boundary", "free", "--threshold", "--out", dir / "x"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("percolab: error kind=no_crossing:", 0) == 0);
  CHECK(count_of(r.err, "\n") == 1);
  CHECK_FALSE(fs::exists(dir / "x/curves.csv"));

  { std::ofstream blocker(dir / "file"); }
  CHECK(run({"oracle", "--sides", "2,2", "--p", "0.5", "--out", dir / "file"}).code == 1);
}

TEST_CASE("datagen subcommand") {
  TempDir dir("datagen");
  const auto r = run({"datagen", "--sides", "32,32", "--p", "0.3", "--labels", "5", "--pc-hat", "0.5927", "--seed",
                      "3", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  const auto regime = Json::parse(io::read_file(dir / "regime.json"));
  CHECK(regime["regime"] == "subcritical");
  CHECK(regime["p_c_source"] == "given");
  const auto manifest = Json::parse(io::read_file(dir / "manifest.json"));
  CHECK(manifest["summary"]["p_c_hat"] == 0.5927);
  CHECK(manifest["summary"]["regime"] == "subcritical");
  CHECK(io::read_file(dir / "dataset.csv").rfind("site_index,coord_0,coord_1,y,cluster_id,in_distribution\n", 0) == 0);

  REQUIRE(run({"datagen", "--sides", "16,16", "--p", "0.9", "--format", "jsonl", "--out", dir / "est"}).code == 0);
  const auto est = Json::parse(io::read_file(dir / "est/regime.json"));
  CHECK(est["p_c_source"] == "estimated");
  CHECK(est["regime"] == "near_critical");
  CHECK(fs::exists(dir / "est/dataset.jsonl"));
  CHECK(run({"datagen", "--sides", "16,16", "--p", "0.9", "--format", "xml", "--out", dir / "bad"}).code == 2);
}

TEST_CASE("SVG rendering") {
  const LatticeGeometry g({60, 120}, Boundary::free);
  const auto config = sample_configuration(g, 0.5927, 1);
  const ClusterLabeling lab(config);
  const std::string svg = render_lattice_svg(config, lab);
  CHECK(svg == render_lattice_svg(config, lab));
  CHECK(count_of(svg, "<rect x=") == static_cast<std::size_t>(config.occupied_count));
  CHECK(count_of(svg, "fill=\"#000000\"") == static_cast<std::size_t>(lab.largest()));
  CHECK(svg.find("viewBox=\"0 0 120 60\"") != std::string::npos);

  const auto empty = sample_configuration(g, 0.0, 1);
  const std::string blank = render_lattice_svg(empty, ClusterLabeling(empty));
  CHECK(count_of(blank, "<rect") == 1);

  const auto full = sample_configuration(g, 1.0, 1);
  const std::string block = render_lattice_svg(full, ClusterLabeling(full));
  CHECK(count_of(block, "fill=\"#000000\"") == 7200);
  CHECK(count_of(block, "#b0b0b0") == 0);

  const std::string colored = render_lattice_svg(config, lab, Highlight::all);
  CHECK(count_of(colored, "<rect x=") == static_cast<std::size_t>(config.occupied_count));

  const LatticeGeometry cube({4, 4, 4}, Boundary::free);
  const auto c3 = sample_configuration(cube, 0.5, 1);
  CHECK_THROWS_AS(render_lattice_svg(c3, ClusterLabeling(c3)), Error);

  TempDir dir("render");
  REQUIRE(run({"render", "--sides", "60,120", "--p", "0.5927", "--out", dir.path.string()}).code == 0);
  CHECK(io::read_file(dir / "lattice.svg") == svg);
  CHECK(run({"render", "--sides", "4,4,4", "--p", "0.5", "--out", dir.path.string()}).code == 2);
}
