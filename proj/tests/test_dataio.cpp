#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lsdc/dataio.hpp"
#include "test_util.hpp"

using namespace lsdc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("lsdc_dataio_test_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace

TEST_CASE("splitmix64 matches its reference stream") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng.next() == 0x06c45d188009454fULL);

  SplitMix64 again(0);
  CHECK(again.next_double() == doctest::Approx(0.88331080821364261).epsilon(1e-16));
  for (int i = 0; i < 1000; ++i) {
    const double d = again.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }

  SplitMix64 bounded(1);
  for (int i = 0; i < 1000; ++i) CHECK(bounded.next_below(17) < 17);
  CHECK_THROWS_AS(bounded.next_below(0), InvalidValueError);

  CHECK_THROWS_AS(make_rng(RngSpec{0, "mt19937"}), InvalidValueError);
}

TEST_CASE("sample_without_replacement: exhaustive draws are permutations") {
  SplitMix64 rng(5);
  const auto all = sample_without_replacement(10, 10, rng);
  std::vector<bool> seen(10, false);
  for (std::size_t k : all) {
    CHECK_FALSE(seen[k]);
    seen[k] = true;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  CHECK_THROWS_AS(sample_without_replacement(3, 4, rng), InvalidValueError);
}

TEST_CASE("sample_sparse: deterministic, unique, and mask-respecting") {
  auto gt = testutil::synthetic_depth(228, 304);
  const Mask valid = valid_mask_of(gt);

  const auto a = sample_sparse(gt, valid, 500, RngSpec{3});
  const auto b = sample_sparse(gt, valid, 500, RngSpec{3});
  CHECK(a.size() == 500);
  REQUIRE(a.size() == b.size());
  for (Index i = 0; i < a.size(); ++i) {
    CHECK(a.entries()[i].row == b.entries()[i].row);
    CHECK(a.entries()[i].col == b.entries()[i].col);
    CHECK(a.entries()[i].depth == b.entries()[i].depth);
  }
  // Coordinate uniqueness is enforced by the SparseDepth constructor;
  // depths must match the map at their pixels.
  for (const auto& e : a.entries()) CHECK(e.depth == gt(e.row, e.col));
}

TEST_CASE("sample_sparse: drawing every valid pixel hits each exactly once") {
  auto gt = testutil::synthetic_depth(6, 7);
  gt(2, 3) = 0.0;  // invalid hole
  const Mask valid = valid_mask_of(gt);
  const Index valid_count = 6 * 7 - 1;

  const auto all = sample_sparse(gt, valid, valid_count, RngSpec{8});
  CHECK(all.size() == valid_count);
  for (const auto& e : all.entries()) CHECK_FALSE((e.row == 2 && e.col == 3));

  CHECK_THROWS_AS(sample_sparse(gt, valid, valid_count + 1, RngSpec{8}), InvalidValueError);
}

TEST_CASE("perturb_scale: multiplies depths and round-trips") {
  using E = SparseDepth<double>::Entry;
  const SparseDepth<double> sparse(4, 4, {E{0, 0, 1.0}, E{1, 1, 2.5}});

  const auto same = perturb_scale(sparse, 1.0);
  CHECK(same.entries()[0].depth == 1.0);
  CHECK(same.entries()[1].depth == 2.5);

  const auto doubled = perturb_scale(sparse, 2.0);
  CHECK(doubled.entries()[0].depth == 2.0);
  CHECK(doubled.entries()[1].depth == 5.0);
  CHECK(doubled.entries()[0].row == 0);

  const auto back = perturb_scale(doubled, 0.5);
  for (Index i = 0; i < sparse.size(); ++i)
    CHECK(std::abs(back.entries()[i].depth - sparse.entries()[i].depth) < 1e-15);

  CHECK_THROWS_AS(perturb_scale(sparse, 0.0), InvalidValueError);
  CHECK_THROWS_AS(perturb_scale(sparse, -1.0), InvalidValueError);
}

TEST_CASE("inject_noise: corrupts exactly the requested subset") {
  auto gt = testutil::synthetic_depth(40, 25);
  const auto sparse = sample_sparse(gt, valid_mask_of(gt), 1000, RngSpec{21});

  const auto untouched = inject_noise(sparse, 0, 0.0, 1.0, RngSpec{22});
  for (Index i = 0; i < sparse.size(); ++i)
    CHECK(untouched.entries()[i].depth == sparse.entries()[i].depth);

  const auto noisy = inject_noise(sparse, 300, 0.0, 1.0, RngSpec{22});
  Index changed = 0;
  for (Index i = 0; i < sparse.size(); ++i) {
    const double diff = noisy.entries()[i].depth - sparse.entries()[i].depth;
    CHECK(diff >= 0.0);
    CHECK(diff <= 1.0);
    if (diff != 0.0) ++changed;
    CHECK(noisy.entries()[i].row == sparse.entries()[i].row);
    CHECK(noisy.entries()[i].col == sparse.entries()[i].col);
  }
  CHECK(changed == 300);

  const auto shifted = inject_noise(sparse, sparse.size(), 0.5, 0.5, RngSpec{23});
  for (Index i = 0; i < sparse.size(); ++i)
    CHECK(shifted.entries()[i].depth == sparse.entries()[i].depth + 0.5);

  CHECK_THROWS_AS(inject_noise(sparse, sparse.size() + 1, 0.0, 1.0, RngSpec{1}),
                  InvalidValueError);
  CHECK_THROWS_AS(inject_noise(sparse, 1, 1.0, 0.0, RngSpec{1}), InvalidValueError);
}

TEST_CASE("depth raw format: float32 values round-trip bit-exactly") {
  TempDir dir;
  DepthMap<double> map(5, 9, 1);
  SplitMix64 rng(31);
  for (Index k = 0; k < map.pixels(); ++k)
    map.values()(k, 0) = static_cast<double>(static_cast<float>(rng.next_in(0.1, 10.0)));

  const fs::path file = dir / "depth.dmap";
  save_depth(map, file);
  const auto loaded = load_depth(file);
  REQUIRE(loaded.height() == 5);
  REQUIRE(loaded.width() == 9);
  CHECK((loaded.values().array() == map.values().array()).all());
}

TEST_CASE("depth pgm format: millimeter quantization stays within half a unit") {
  TempDir dir;
  const auto map = testutil::synthetic_depth(12, 10);
  const fs::path file = dir / "depth.pgm";
  save_depth(map, file);
  const auto loaded = load_depth(file);
  CHECK((loaded.values() - map.values()).cwiseAbs().maxCoeff() <= 0.0005 + 1e-12);
}

TEST_CASE("sparse text format: exact round trip") {
  TempDir dir;
  auto gt = testutil::synthetic_depth(19, 23);
  const auto sparse = sample_sparse(gt, valid_mask_of(gt), 50, RngSpec{37});

  const fs::path file = dir / "points.sparse";
  save_sparse(sparse, file);
  const auto loaded = load_sparse(file);
  REQUIRE(loaded.size() == sparse.size());
  CHECK(loaded.height() == 19);
  CHECK(loaded.width() == 23);
  for (Index i = 0; i < sparse.size(); ++i) {
    CHECK(loaded.entries()[i].row == sparse.entries()[i].row);
    CHECK(loaded.entries()[i].col == sparse.entries()[i].col);
    CHECK(loaded.entries()[i].depth == sparse.entries()[i].depth);
  }
}

TEST_CASE("feature map format: round trip with channels") {
  TempDir dir;
  FeatureMap<double> features(4, 6, 5);
  SplitMix64 rng(41);
  for (Index k = 0; k < features.pixels(); ++k)
    for (Index c = 0; c < 5; ++c)
      features.values()(k, c) = static_cast<double>(static_cast<float>(rng.next_in(-2.0, 2.0)));

  const fs::path file = dir / "feat.fmap";
  save_features(features, file);
  const auto loaded = load_features(file);
  REQUIRE(loaded.channels() == 5);
  REQUIRE(loaded.height() == 4);
  CHECK((loaded.values().array() == features.values().array()).all());
}

TEST_CASE("image ppm format: 8-bit round trip within quantization") {
  TempDir dir;
  const auto image = testutil::synthetic_image(14, 11);
  const fs::path file = dir / "guide.ppm";
  save_image(image, file);
  const auto loaded = load_image(file);
  REQUIRE(loaded.channels() == 3);
  CHECK((loaded.values() - image.values()).cwiseAbs().maxCoeff() <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("load_sample: grayscale guides replicate; resolutions must agree") {
  TempDir dir;
  DenseGrid<double> gray(6, 6, 1);
  gray.values().setConstant(0.25);
  save_image(gray, dir / "gray.pgm");
  save_depth(testutil::synthetic_depth(6, 6), dir / "depth.dmap");
  const auto sample = load_sample(dir / "gray.pgm", dir / "depth.dmap");
  CHECK(sample.image.channels() == 3);
  CHECK(sample.valid_mask.rows() == 6);
  CHECK(sample.valid_mask.all());

  save_depth(testutil::synthetic_depth(5, 6), dir / "short.dmap");
  CHECK_THROWS_AS(load_sample(dir / "gray.pgm", dir / "short.dmap"), DimensionError);
}

TEST_CASE("valid_mask_of: holes and non-finite depths are masked out") {
  auto gt = testutil::synthetic_depth(4, 4);
  gt(0, 0) = 0.0;
  gt(1, 1) = -2.0;
  gt(2, 2) = std::nan("");
  const Mask mask = valid_mask_of(gt);
  CHECK_FALSE(mask(0, 0));
  CHECK_FALSE(mask(1, 1));
  CHECK_FALSE(mask(2, 2));
  CHECK(mask(3, 3));
}

TEST_CASE("file errors carry distinct kinds") {
  TempDir dir;
  CHECK_THROWS_AS(load_depth(dir / "missing.dmap"), IoError);

  {
    std::ofstream bad(dir / "bad.dmap", std::ios::binary);
    bad << "XXXXgarbage";
  }
  CHECK_THROWS_AS(load_depth(dir / "bad.dmap"), FormatError);

  {
    std::ofstream trunc(dir / "trunc.dmap", std::ios::binary);
    trunc.write("DMAP", 4);
    const unsigned char dims[8] = {4, 0, 0, 0, 4, 0, 0, 0};  // 4x4 declared
    trunc.write(reinterpret_cast<const char*>(dims), 8);
    const float one = 1.0f;
    trunc.write(reinterpret_cast<const char*>(&one), 4);  // only one value
  }
  CHECK_THROWS_AS(load_depth(dir / "trunc.dmap"), TruncatedError);

  {
    std::ofstream bad(dir / "bad.ppm", std::ios::binary);
    bad << "P6\n0 4\n255\n";
  }
  CHECK_THROWS_AS(load_image(dir / "bad.ppm"), FormatError);

  {
    std::ofstream eightbit(dir / "lowdepth.pgm", std::ios::binary);
    eightbit << "P5\n2 2\n255\n";
    eightbit.write("\0\0\0\0", 4);
  }
  CHECK_THROWS_AS(load_depth(dir / "lowdepth.pgm"), FormatError);

  {
    std::ofstream sparse(dir / "bad.sparse");
    sparse << "sparse v2 4 4 1\n0 0 1.0\n";
  }
  CHECK_THROWS_AS(load_sparse(dir / "bad.sparse"), FormatError);

  {
    std::ofstream sparse(dir / "short.sparse");
    sparse << "sparse v1 4 4 3\n0 0 1.0\n";
  }
  CHECK_THROWS_AS(load_sparse(dir / "short.sparse"), TruncatedError);
}
