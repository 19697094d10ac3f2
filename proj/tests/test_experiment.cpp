#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rzc/errors.hpp"
#include "rzc/experiment.hpp"

using namespace rzc;
namespace fs = std::filesystem;

namespace {

std::string write_temp_config(const std::string& name, const std::string& body) {
  const fs::path path = fs::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path.string();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const std::string path = write_temp_config("rzc_ok.cfg",
                                             "experiment=limit0\n"
                                             "geometry=flat_torus 8\n"
                                             "bundle=bump 1 0.2\n"
                                             "t_list=4h2,0.1\n"
                                             "n_samples=50\n"
                                             "master_seed=7\n"
                                             "output_dir=out_test\n");
  const ExperimentConfig config = parse_config(path);
  CHECK(config.experiment == ExperimentKind::limit0);
  CHECK(config.geometry.kind == GeometrySpec::Kind::FlatTorus);
  CHECK(config.geometry.param == 8);
  CHECK(config.bundle.kind == BundleSpec::Kind::Bump);
  CHECK(config.bundle.sigma_b == 0.2);
  CHECK(config.t_list.size() == 2);
  CHECK(config.t_list[0].kind == TimePoint::Kind::FiniteH2);
  CHECK(config.n_samples == 50);
  validate_config(config);
  fs::remove(path);
}

TEST_CASE("config errors carry line anchors") {
  const std::string path = write_temp_config("rzc_bad.cfg",
                                             "experiment=limit0\n"
                                             "geometry=flat_torus 8\n"
                                             "wibble=1\n");
  try {
    parse_config(path);
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("wibble") != std::string::npos);
  }
  fs::remove(path);

  // inconsistent experiment/geometry combination
  const std::string bad = write_temp_config("rzc_incoherent.cfg",
                                            "experiment=theorem2\n"
                                            "geometry=flat_torus 8\n"
                                            "bundle=pullback 1\n"
                                            "n_samples=10\n");
  CHECK(run_experiment_cli(bad, std::nullopt, std::nullopt) == 2);
  fs::remove(bad);

  CHECK(run_experiment_cli("no_such_file.cfg", std::nullopt, std::nullopt) == 2);
}

TEST_CASE("small experiment run writes its outputs") {
  const fs::path dir = fs::temp_directory_path() / "rzc_smoke_out";
  fs::remove_all(dir);
  const std::string path = write_temp_config("rzc_smoke.cfg",
                                             "experiment=finite_t\n"
                                             "geometry=flat_torus 8\n"
                                             "bundle=flat 1\n"
                                             "t_list=0.2\n"
                                             "n_samples=60\n"
                                             "master_seed=5\n"
                                             "output_dir=" +
                                                 (dir.string() + "\n"));
  CHECK(run_experiment_cli(path, std::nullopt, 2) == 0);
  for (const char* name :
       {"report.json", "samples.csv", "eigenvalues.csv", "curvature.csv", "density.ply",
        "timings.csv"})
    CHECK(fs::exists(dir / name));
  const std::string report = slurp(dir / "report.json");
  CHECK(report.find("\"schema\": 1") != std::string::npos);
  CHECK(report.find("wall_time") == std::string::npos);
  fs::remove_all(dir);
  fs::remove(path);
}

TEST_CASE("reports are byte-identical across worker counts") {
  const fs::path dir1 = fs::temp_directory_path() / "rzc_det_1";
  const fs::path dir8 = fs::temp_directory_path() / "rzc_det_8";
  fs::remove_all(dir1);
  fs::remove_all(dir8);
  const auto body = [](const fs::path& dir) {
    return "experiment=limit0\n"
           "geometry=flat_torus 8\n"
           "bundle=bump 1 0.2\n"
           "t_list=0.15\n"
           "n_samples=80\n"
           "master_seed=99\n"
           "output_dir=" +
           dir.string() + "\n";
  };
  const std::string cfg1 = write_temp_config("rzc_det1.cfg", body(dir1));
  const std::string cfg8 = write_temp_config("rzc_det8.cfg", body(dir8));
  const int rc1 = run_experiment_cli(cfg1, std::nullopt, 1);
  const int rc8 = run_experiment_cli(cfg8, std::nullopt, 8);
  CHECK(rc1 == rc8);
  CHECK(slurp(dir1 / "report.json") == slurp(dir8 / "report.json"));
  CHECK(slurp(dir1 / "samples.csv") == slurp(dir8 / "samples.csv"));
  fs::remove_all(dir1);
  fs::remove_all(dir8);
  fs::remove(cfg1);
  fs::remove(cfg8);
}

TEST_CASE("seed override changes the draw") {
  const fs::path dir_a = fs::temp_directory_path() / "rzc_seed_a";
  const fs::path dir_b = fs::temp_directory_path() / "rzc_seed_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  const auto body = [](const fs::path& dir) {
    return "experiment=finite_t\n"
           "geometry=flat_torus 8\n"
           "bundle=flat 1\n"
           "t_list=0.2\n"
           "n_samples=40\n"
           "master_seed=1\n"
           "output_dir=" +
           dir.string() + "\n";
  };
  const std::string cfg_a = write_temp_config("rzc_seed_a.cfg", body(dir_a));
  const std::string cfg_b = write_temp_config("rzc_seed_b.cfg", body(dir_b));
  run_experiment_cli(cfg_a, std::nullopt, 1);
  run_experiment_cli(cfg_b, 424242, 1);
  CHECK(slurp(dir_a / "samples.csv") != slurp(dir_b / "samples.csv"));
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  fs::remove(cfg_a);
  fs::remove(cfg_b);
}
