#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lsdc/dataio.hpp"
#include "test_util.hpp"

using namespace lsdc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string cli_path() {
  const char* env = std::getenv("LSDC_CLI");
  REQUIRE_MESSAGE(env != nullptr, "LSDC_CLI must point at the lsdc binary");
  return env;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("lsdc_cli_test_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const Workspace& ws, const std::string& args) {
  const fs::path out_file = ws / "stdout.txt";
  const fs::path err_file = ws / "stderr.txt";
  const std::string cmd =
      cli_path() + " " + args + " >" + out_file.string() + " 2>" + err_file.string();
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  result.out = slurp(out_file);
  result.err = slurp(err_file);
  return result;
}

/// 32x32 sample with image, depth, and a sampled sparse set on disk.
struct SampleFiles {
  fs::path image, depth, sparse;
  SampleFiles(const Workspace& ws, Index h = 32, Index w = 32, Index count = 120) {
    image = ws / "image.ppm";
    depth = ws / "depth.pgm";
    sparse = ws / "points.sparse";
    const auto img = testutil::synthetic_image(h, w);
    const auto gt = testutil::synthetic_depth(h, w);
    save_image(img, image);
    save_depth(gt, depth);
    save_sparse(sample_sparse(gt, valid_mask_of(gt), count, RngSpec{5}), sparse);
  }
};

const std::string kFastFlags = " --basis-dim 8 --hidden-dim 8 --encode-levels 3 --scales 2,4";

json load_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  json j;
  in >> j;
  return j;
}

std::string slurp_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_bytes(const fs::path& a, const fs::path& b) { return slurp_file(a) == slurp_file(b); }

}  // namespace

TEST_CASE("complete: happy path writes depth and manifest, inputs untouched") {
  Workspace ws;
  SampleFiles files(ws);
  const std::string image_before = slurp_file(files.image);
  const std::string sparse_before = slurp_file(files.sparse);

  const fs::path out = ws / "dense.dmap";
  const auto r = run(ws, "complete --image " + files.image.string() + " --sparse " +
                             files.sparse.string() + " -o " + out.string() + kFastFlags);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(out));
  CHECK(slurp_file(files.image) == image_before);
  CHECK(slurp_file(files.sparse) == sparse_before);

  const auto dense = load_depth(out);
  CHECK(dense.height() == 32);
  CHECK(dense.width() == 32);

  const json manifest = load_json(ws / "dense.dmap.manifest.json");
  CHECK(manifest["command"] == "complete");
  CHECK(manifest["config"]["basis_dim"] == 8);
  CHECK(manifest["results"]["iterations"] == 1);
}

TEST_CASE("complete: sparse resolution mismatch is a config error") {
  Workspace ws;
  SampleFiles files(ws);
  const auto other_gt = testutil::synthetic_depth(16, 16);
  const fs::path other_sparse = ws / "other.sparse";
  save_sparse(sample_sparse(other_gt, valid_mask_of(other_gt), 30, RngSpec{1}), other_sparse);

  const auto r = run(ws, "complete --image " + files.image.string() + " --sparse " +
                             other_sparse.string() + " -o " + (ws / "x.dmap").string() +
                             kFastFlags);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("does not match") != std::string::npos);
}

TEST_CASE("complete: --irls is recorded in the manifest") {
  Workspace ws;
  SampleFiles files(ws);
  const fs::path out = ws / "dense.dmap";
  const auto r = run(ws, "complete --image " + files.image.string() + " --sparse " +
                             files.sparse.string() + " -o " + out.string() + kFastFlags +
                             " --irls");
  CHECK(r.exit_code == 0);
  const json manifest = load_json(ws / "dense.dmap.manifest.json");
  CHECK(manifest["config"]["use_irls"] == true);
  CHECK(manifest["results"]["iterations"].get<int>() >= 1);
}

TEST_CASE("complete: missing input is an i/o error") {
  Workspace ws;
  SampleFiles files(ws);
  const auto r = run(ws, "complete --image " + (ws / "nope.ppm").string() + " --sparse " +
                             files.sparse.string() + " -o " + (ws / "x.dmap").string());
  CHECK(r.exit_code == 3);
}

TEST_CASE("complete: external features must match the image resolution") {
  Workspace ws;
  SampleFiles files(ws);
  FeatureMap<double> small(8, 8, 4);
  small.values().setConstant(0.5);
  const fs::path feat = ws / "small.fmap";
  save_features(small, feat);
  const auto r = run(ws, "complete --image " + files.image.string() + " --sparse " +
                             files.sparse.string() + " -o " + (ws / "x.dmap").string() +
                             " --features " + feat.string() + kFastFlags);
  CHECK(r.exit_code == 2);

  FeatureMap<double> right(32, 32, 4);
  right.values().setRandom();
  save_features(right, feat);
  const auto ok = run(ws, "complete --image " + files.image.string() + " --sparse " +
                              files.sparse.string() + " -o " + (ws / "x.dmap").string() +
                              " --features " + feat.string() + kFastFlags);
  CHECK(ok.exit_code == 0);
}

TEST_CASE("evaluate: identical maps score zero") {
  Workspace ws;
  SampleFiles files(ws);
  const auto r = run(ws, "evaluate --pred " + files.depth.string() + " --gt " +
                             files.depth.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("rmse 0\n") != std::string::npos);
  CHECK(r.out.find("see") == std::string::npos);

  const auto with_see = run(ws, "evaluate --pred " + files.depth.string() + " --gt " +
                                    files.depth.string() + " --see");
  CHECK(with_see.out.find("see 0\n") != std::string::npos);

  const auto as_json = run(ws, "evaluate --pred " + files.depth.string() + " --gt " +
                                   files.depth.string() + " --see --format json");
  CHECK(as_json.exit_code == 0);
  const json report = json::parse(as_json.out);
  CHECK(report["rmse"] == 0.0);
  CHECK(report["delta1"] == 100.0);
  CHECK(report.contains("see"));
}

TEST_CASE("evaluate: missing ground truth is an i/o error") {
  Workspace ws;
  SampleFiles files(ws);
  const auto r = run(ws, "evaluate --pred " + files.depth.string() + " --gt " +
                             (ws / "missing.pgm").string());
  CHECK(r.exit_code == 3);
}

TEST_CASE("upsample: grows the grid and degenerates to complete") {
  Workspace ws;
  SampleFiles files(ws, 20, 24, 80);
  const fs::path up = ws / "up.dmap";
  const auto r = run(ws, "upsample --image " + files.image.string() + " --sparse " +
                             files.sparse.string() + " -o " + up.string() +
                             " --target-height 60 --target-width 72" + kFastFlags);
  CHECK(r.exit_code == 0);
  const auto dense = load_depth(up);
  CHECK(dense.height() == 60);
  CHECK(dense.width() == 72);

  const fs::path same = ws / "same.dmap";
  const fs::path direct = ws / "direct.dmap";
  const auto r1 = run(ws, "upsample --image " + files.image.string() + " --sparse " +
                              files.sparse.string() + " -o " + same.string() +
                              " --target-height 20 --target-width 24" + kFastFlags);
  const auto r2 = run(ws, "complete --image " + files.image.string() + " --sparse " +
                              files.sparse.string() + " -o " + direct.string() + kFastFlags);
  CHECK(r1.exit_code == 0);
  CHECK(r2.exit_code == 0);
  CHECK(same_bytes(same, direct));

  const auto shrink = run(ws, "upsample --image " + files.image.string() + " --sparse " +
                                  files.sparse.string() + " -o " + (ws / "s.dmap").string() +
                                  " --target-height 10 --target-width 24" + kFastFlags);
  CHECK(shrink.exit_code == 2);
}

TEST_CASE("kernel: one map per anchor, center correlation is 1") {
  Workspace ws;
  SampleFiles files(ws);
  const fs::path prefix = ws / "kern";
  const auto r = run(ws, "kernel --image " + files.image.string() + " --anchor 16,16 --anchor 3,5 -o " +
                             prefix.string() + kFastFlags);
  CHECK(r.exit_code == 0);
  const fs::path center = ws / "kern_r16_c16.dmap";
  const fs::path other = ws / "kern_r3_c5.dmap";
  REQUIRE(fs::exists(center));
  REQUIRE(fs::exists(other));
  const auto kmap = load_depth(center);
  CHECK(kmap(16, 16) == 1.0);
  CHECK(kmap.values().maxCoeff() <= 1.0);
  CHECK(kmap.values().minCoeff() >= -1.0);

  const auto oob = run(ws, "kernel --image " + files.image.string() + " --anchor 99,0 -o " +
                               prefix.string() + kFastFlags);
  CHECK(oob.exit_code == 2);
}

TEST_CASE("experiment: count sweep emits one row per (count, seed)") {
  Workspace ws;
  SampleFiles files(ws, 48, 48);
  const fs::path table = ws / "table.txt";
  const auto r = run(ws, "experiment " + ws.dir.string() +
                             " --protocol count-sweep --counts 100,500,1000 --seeds 0,1 -o " +
                             table.string() + kFastFlags);
  CHECK(r.exit_code == 0);

  std::ifstream in(table);
  std::string line;
  std::getline(in, line);
  CHECK(line.front() == '#');
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("experiment: a failing setting is recorded and the sweep continues") {
  Workspace ws;
  SampleFiles files(ws, 24, 24);  // 576 valid pixels: a count of 5000 cannot be drawn
  const fs::path table = ws / "table.txt";
  const auto r = run(ws, "experiment " + ws.dir.string() +
                             " --protocol count-sweep --counts 100,5000,200 --seeds 0 -o " +
                             table.string() + kFastFlags);
  CHECK(r.exit_code == 1);

  std::ifstream in(table);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::string> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].find(" ok") != std::string::npos);
  CHECK(rows[1].find("error:") != std::string::npos);
  CHECK(rows[2].find(" ok") != std::string::npos);
}

TEST_CASE("experiment: scale sweep REL is constant across factors") {
  Workspace ws;
  SampleFiles files(ws, 48, 48);
  const fs::path table = ws / "table.txt";
  const auto r = run(ws, "experiment " + ws.dir.string() +
                             " --protocol scale-sweep --factors 0.5,1.2,3.0 --count 400 "
                             "--seeds 0 -o " +
                             table.string() + kFastFlags);
  CHECK(r.exit_code == 0);

  std::ifstream in(table);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> rels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string protocol, setting, seed, n, rmse, rel;
    row >> protocol >> setting >> seed >> n >> rmse >> rel;
    rels.push_back(std::stod(rel));
  }
  REQUIRE(rels.size() == 3);
  for (double rel : rels) CHECK(std::abs(rel - rels[0]) <= 1e-10 * std::abs(rels[0]));
}

TEST_CASE("experiment: noise protocol reports plain and IRLS rows") {
  Workspace ws;
  SampleFiles files(ws, 48, 48);
  const fs::path table = ws / "table.txt";
  const auto r = run(ws, "experiment " + ws.dir.string() +
                             " --protocol noise --count 600 --corrupt-count 180 "
                             "--noise-low 0 --noise-high 1 --seeds 3 -o " +
                             table.string() + kFastFlags);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("noise+irls") != std::string::npos);

  const json manifest = load_json(ws / "table.txt.manifest.json");
  REQUIRE(manifest["results"].size() == 3);
  int irls_iterations = -1;
  for (const auto& row : manifest["results"])
    if (row["setting"] == "noise+irls") irls_iterations = row["iterations"].get<int>();
  CHECK(irls_iterations >= 1);
}

TEST_CASE("replay: reproduces a completion byte for byte") {
  Workspace ws;
  SampleFiles files(ws);
  const fs::path first = ws / "first.dmap";
  const auto r1 = run(ws, "complete --image " + files.image.string() + " --sparse " +
                              files.sparse.string() + " -o " + first.string() + kFastFlags);
  REQUIRE(r1.exit_code == 0);

  const fs::path second = ws / "second.dmap";
  const auto r2 = run(ws, "replay " + (ws / "first.dmap.manifest.json").string() + " -o " +
                              second.string());
  CHECK(r2.exit_code == 0);
  CHECK(same_bytes(first, second));
}
