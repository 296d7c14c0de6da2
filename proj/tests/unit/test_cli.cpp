#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/cli.hpp"
#include "focalkit/dataset_io.hpp"
#include "support.hpp"

using namespace focalkit;
using focalkit::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), {"--log-level", "off"});
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

void synth(const fs::path& dir, int count, const std::string& seed = "3") {
  ASSERT_EQ(run({"--seed", seed, "synth", "--out", dir.string(), "--count", std::to_string(count), "--height", "24",
                 "--width", "32", "--focal", "26"})
                .code,
            0);
}

}  // namespace

TEST(Cli, SynthWritesManifest) {
  TempDir dir("cli");
  synth(dir / "s", 4);
  const Manifest m = read_manifest(dir / "s" / "manifest.jsonl");
  ASSERT_EQ(m.records.size(), 4u);
  EXPECT_EQ(m.records[0].fx, 26.0);
  EXPECT_NO_THROW(load_sample(m.records[3], m.base_dir));
}

TEST(Cli, AugmentIsSeededAndStratified) {
  TempDir dir("cli");
  synth(dir / "s", 10);
  const std::string manifest = (dir / "s" / "manifest.jsonl").string();
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run({"--seed", "7", "--jobs", "2", "augment", "--manifest", manifest, "--out", (dir / name).string()}).code, 0);
  }
  EXPECT_EQ(tree(dir / "a"), tree(dir / "b"));
  const Manifest m = read_manifest(dir / "a" / "manifest.jsonl");
  int fc = 0;
  for (const auto& r : m.records) fc += r.augmentation.mode == AugmentationMode::kFocalChange;
  EXPECT_EQ(fc, 6);
  EXPECT_EQ(m.records.size(), 10u);
}

TEST(Cli, AugmentAllOneToZeroRatio) {
  TempDir dir("cli");
  synth(dir / "s", 5);
  ASSERT_EQ(run({"augment", "--manifest", (dir / "s" / "manifest.jsonl").string(), "--out", (dir / "a").string(),
                 "--ratio", "1:0"})
                .code,
            0);
  for (const auto& r : read_manifest(dir / "a" / "manifest.jsonl").records) {
    EXPECT_EQ(r.augmentation.mode, AugmentationMode::kFocalChange);
  }
}

TEST(Cli, AugmentWithUnitKCopiesBytes) {
  TempDir dir("cli");
  synth(dir / "s", 3);
  ASSERT_EQ(run({"augment", "--manifest", (dir / "s" / "manifest.jsonl").string(), "--out", (dir / "a").string(),
                 "--k-min", "1", "--k-max", "1"})
                .code,
            0);
  const Manifest src = read_manifest(dir / "s" / "manifest.jsonl");
  const Manifest out = read_manifest(dir / "a" / "manifest.jsonl");
  ASSERT_EQ(src.records.size(), out.records.size());
  for (std::size_t i = 0; i < src.records.size(); ++i) {
    EXPECT_EQ(slurp(src.resolve(src.records[i].rgb_path)), slurp(out.resolve(out.records[i].rgb_path)));
    EXPECT_EQ(slurp(src.resolve(src.records[i].depth_path)), slurp(out.resolve(out.records[i].depth_path)));
    EXPECT_EQ(out.records[i].augmentation.k, 1.0);
    EXPECT_NE(out.records[i].augmentation.mode, AugmentationMode::kOriginal);
  }
}

TEST(Cli, EvalOfGroundTruthIsPerfect) {
  TempDir dir("cli");
  synth(dir / "s", 3);
  const std::string manifest = (dir / "s" / "manifest.jsonl").string();
  const std::string prefix = (dir / "report").string();
  const Result r = run({"eval", "--pred-manifest", manifest, "--gt-manifest", manifest, "--out", prefix});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(slurp(prefix + ".json"));
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["aggregation"], "pooled");
  EXPECT_EQ(j["count"], 3);
  EXPECT_EQ(j["metrics"]["delta1"], 1.0);
  EXPECT_EQ(j["metrics"]["abs_rel"], 0.0);
  EXPECT_EQ(j["metrics"]["silog"], 0.0);
  EXPECT_EQ(j["per_image"].size(), 3u);

  std::istringstream csv(slurp(prefix + ".csv"));
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(csv, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows.back().substr(0, 4), "all,");
  std::vector<std::string> cells;
  std::istringstream last(rows.back());
  for (std::string c; std::getline(last, c, ',');) cells.push_back(c);
  EXPECT_EQ(std::stod(cells[1]), 1.0);
  EXPECT_EQ(std::stod(cells[5]), 0.0);

  EXPECT_EQ(run({"eval", "--pred-manifest", manifest, "--gt-manifest", manifest, "--out", prefix, "--per-image",
                 "--pooled"})
                .code,
            1);
}

TEST(Cli, ReconstructReportsStretchOfFocalChange) {
  TempDir dir("cli");
  synth(dir / "s", 4);
  ASSERT_EQ(run({"augment", "--manifest", (dir / "s" / "manifest.jsonl").string(), "--out", (dir / "a").string(),
                 "--ratio", "1:0", "--k-min", "0.75", "--k-max", "0.75"})
                .code,
            0);
  const Result r = run({"reconstruct", "--manifest", (dir / "a" / "manifest.jsonl").string(), "--out-dir",
                        (dir / "ply").string(), "--override-fx", "26"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::regex pat(R"((\S+) points=(\d+) deformation_ratio=([0-9.]+) -> (\S+))");
  std::istringstream lines(r.out);
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    std::smatch m;
    ASSERT_TRUE(std::regex_match(line, m, pat)) << line;
    EXPECT_EQ(std::stoi(m[2]), 24 * 32);
    EXPECT_NEAR(std::stod(m[3]), 1.0 / 0.75, 1e-6);
    std::ifstream ply(m[4].str());
    std::string row;
    bool found = false;
    while (std::getline(ply, row)) found |= row == "element vertex " + std::to_string(24 * 32);
    EXPECT_TRUE(found);
  }
  EXPECT_EQ(n, 4);
}

TEST(Cli, ReconstructEmptyMaskWritesEmptyCloud) {
  TempDir dir("cli");
  RgbdSample s;
  s.rgb = RgbImage(4, 4);
  s.depth = Plane2D(4, 4);
  s.valid_mask = Plane2D(4, 4);
  s.intrinsics = {10, 10, 1.5, 1.5};
  s.source_id = "empty";
  Manifest m;
  m.records.push_back(write_sample(s, dir.path()).record);
  write_manifest(m, dir / "m.jsonl");
  const Result r = run({"reconstruct", "--manifest", (dir / "m.jsonl").string(), "--out-dir", (dir / "ply").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("points=0 deformation_ratio=n/a"), std::string::npos);
  EXPECT_NE(slurp(dir / "ply" / "empty.ply").find("element vertex 0"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"bogus"}).code, 1);
  EXPECT_EQ(run({"augment", "--manifest", (dir / "none.jsonl").string(), "--out", (dir / "o").string()}).code, 2);
  EXPECT_EQ(run({"augment", "--manifest", "x", "--out", "y", "--ratio", "3"}).code, 1);
  EXPECT_EQ(run({"reconstruct", "--manifest", "x", "--out-dir", "y", "--override-fx", "-1"}).code, 1);
  EXPECT_EQ(run({"--log-level", "loud", "gradcheck"}).code, 1);
}

TEST(Cli, ToyTrainIsDeterministic) {
  TempDir dir("cli");
  synth(dir / "s", 4);
  const std::string manifest = (dir / "s" / "manifest.jsonl").string();
  for (const char* name : {"a", "b"}) {
    const Result r = run({"--seed", "2", "toy-train", "--manifest", manifest, "--out", (dir / name).string(),
                          "--epochs", "2", "--bins", "8", "--base-lr", "0.01"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  for (const char* f : {"checkpoint.json", "loss_curve.csv", "eval.json", "eval.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
}

TEST(Cli, GradcheckPasses) {
  const Result r = run({"gradcheck"});
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}
