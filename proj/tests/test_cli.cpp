#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "test_support.hpp"
#include "wevbg/cli.hpp"
#include "wevbg/io.hpp"

using namespace wevbg;
using testing_support::kind_of;
using testing_support::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "wevbg");
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t count_lines(const fs::path& path) {
  const auto text = slurp(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::size_t count_files(const fs::path& dir, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().filename().string().starts_with(prefix);
  return n;
}

// Every regular file below `dir`, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

std::vector<std::string> small_scene(const fs::path& out) {
  return {"synth", "--kind", "scene", "--height", "40", "--width", "60", "--frames", "20", "--object-frames", "6",
          "--out", out.string()};
}

}  // namespace

TEST(BlockShapeOption, Grammar) {
  EXPECT_EQ(parse_block_shape("40"), (BlockShape{40, 40}));
  EXPECT_EQ(parse_block_shape("30x20"), (BlockShape{30, 20}));
  for (const char* bad : {"", "0", "x", "4x", "x4", "4x0", "-3", "4y4", "4x4x4", "1.5"}) {
    EXPECT_EQ(kind_of([&] { parse_block_shape(bad); }), ErrorKind::ConfigError) << bad;
  }
  RunConfig cfg;
  cfg.selection = "weakest:0";
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::SelectionError);
  cfg.selection = "all";
  cfg.tau = -1;
  EXPECT_EQ(kind_of([&] { cfg.validate(); }), ErrorKind::ConfigError);
}

TEST(Cli, SynthThenPerturbGivesOneRowPerArrival) {
  const auto dir = scratch_dir("cli");
  auto r = run({"synth", "--dim", "2", "--n-bg", "92", "--n-fg", "29", "--seed", "7", "--out", (dir / "syn").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(dir / "syn" / "sequence.csv"), 122u);
  r = run({"perturb", "--input", (dir / "syn").string(), "--out", (dir / "drift.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(dir / "drift.csv"), 1u + 118u);
  EXPECT_TRUE(slurp(dir / "drift.csv").starts_with("step,label,delta_norm,angle,e_norm\n3,"));
}

TEST(Cli, ModelThenSegmentWritesOneMaskPerFrame) {
  const auto dir = scratch_dir("cli");
  auto r = run({"synth", "--kind", "scene", "--out", (dir / "scene").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto frames = (dir / "scene" / "frames").string();
  r = run({"model", "--input", frames, "--selection", "weakest:10", "--block", "40", "--out", (dir / "m").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_files(dir / "m", "block_"), 12u);
  r = run({"segment", "--models", (dir / "m").string(), "--input", frames, "--tau", "0.1", "--out",
           (dir / "seg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_files(dir / "seg", "mask_"), 121u);
  EXPECT_EQ(count_files(dir / "seg", "background_"), 121u);
  EXPECT_EQ(count_lines(dir / "seg" / "segment.csv"), 122u);
  const auto mask = read_image(dir / "seg" / "mask_0000.pgm");
  EXPECT_EQ(mask.height, 120);
  EXPECT_EQ(mask.width, 160);
  for (double p : mask.pixels) EXPECT_TRUE(p == 0.0 || p == 1.0);
}

TEST(Cli, EvalWritesFramesTimesSelections) {
  const auto dir = scratch_dir("cli");
  ASSERT_EQ(run(small_scene(dir / "s")).code, 0);
  const auto r = run({"eval", "--input", (dir / "s" / "frames").string(), "--block", "20", "--selections",
                      "strongest:1,strongest:7,all,weakest:7,weakest:1", "--out", (dir / "eval.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(dir / "eval.csv"), 1u + 20u * 5u);
  EXPECT_NE(r.out.find("weakest:7,"), std::string::npos);
  // Ground truth from an image instead of labels.
  const auto g = run({"eval", "--input", (dir / "s" / "frames").string(), "--block", "20", "--selections", "all",
                      "--gt", (dir / "s" / "background.pgm").string(), "--out", (dir / "eval_gt.csv").string()});
  ASSERT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(count_lines(dir / "eval_gt.csv"), 21u);
}

TEST(Cli, HoldoutEvalUsesUnseenFrames) {
  const auto dir = scratch_dir("cli");
  ASSERT_EQ(run(small_scene(dir / "train")).code, 0);
  auto held = small_scene(dir / "held");
  held.insert(held.end(), {"--seed", "8"});
  ASSERT_EQ(run(held).code, 0);
  const auto r = run({"eval", "--input", (dir / "train" / "frames").string(), "--block", "20", "--selections",
                      "weakest:3,strongest:3", "--holdout", (dir / "held" / "frames").string(), "--out",
                      (dir / "h.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(dir / "h.csv"), 1u + 20u * 2u);
}

TEST(Cli, TheoryAndSubspace) {
  const auto dir = scratch_dir("cli");
  auto r = run({"theory", "--mode", "bound", "--trials", "200", "--out", (dir / "bound.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(slurp(dir / "bound.csv").starts_with("metric,estimate,std_error,bound,pass\nbeta_hat,"));
  r = run({"theory", "--mode", "chain", "--trials", "200", "--out", (dir / "chain.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);  // 92 / 29 is unbalanced
  EXPECT_EQ(count_lines(dir / "chain.csv"), 12u);

  ASSERT_EQ(run(small_scene(dir / "s")).code, 0);
  r = run({"subspace", "--input", (dir / "s" / "frames").string(), "--block", "20", "--block-origin", "20,20",
           "--pair", "weakest", "--grid", "5", "--out", (dir / "sub.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count_lines(dir / "sub.csv"), 21u);
  r = run({"subspace", "--input", (dir / "s" / "frames").string(), "--block", "20", "--pair", "1,2", "--out",
           (dir / "sub12.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  const auto help = run({"model", "--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("--selection"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  const auto unknown = run({"synth", "--out", "x", "--bogus"});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_FALSE(unknown.err.empty());
  EXPECT_EQ(run({"model", "--input", "x"}).code, 1);  // --out missing
}

TEST(Cli, ValidationFailuresLeaveNoOutputs) {
  const auto dir = scratch_dir("cli");
  ASSERT_EQ(run(small_scene(dir / "s")).code, 0);
  const auto frames = (dir / "s" / "frames").string();
  const std::vector<std::vector<std::string>> bad{
      {"model", "--input", frames, "--block", "0", "--out", (dir / "o1").string()},
      {"model", "--input", frames, "--block", "41x20", "--out", (dir / "o2").string()},
      {"model", "--input", frames, "--selection", "weakest:21", "--block", "20", "--out", (dir / "o3").string()},
      {"model", "--input", frames, "--selection", "sideways:2", "--out", (dir / "o4").string()},
      {"model", "--input", (dir / "missing").string(), "--out", (dir / "o5").string()},
      {"segment", "--models", (dir / "missing").string(), "--input", frames, "--out", (dir / "o6").string()},
      {"eval", "--input", frames, "--labels", (dir / "missing.csv").string(), "--out", (dir / "o7.csv").string()},
      {"theory", "--mode", "guess", "--out", (dir / "o8.csv").string()},
      {"synth", "--kind", "scene", "--object-area", "1.5", "--out", (dir / "o9").string()},
      {"synth", "--sigma-bg", "0", "--out", (dir / "o10").string()},
      {"subspace", "--input", frames, "--block", "20", "--pair", "3,3", "--out", (dir / "o11.csv").string()},
      {"segment", "--models", (dir / "missing").string(), "--input", frames, "--tau", "-1", "--out",
       (dir / "o12").string()},
  };
  const auto before = snapshot(dir);
  for (const auto& args : bad) {
    const auto r = run(args);
    EXPECT_EQ(r.code, 1) << args[0] << " " << args[2] << ": " << r.err;
    EXPECT_FALSE(r.err.empty());
  }
  EXPECT_EQ(snapshot(dir), before);
  for (int i = 1; i <= 12; ++i) {
    EXPECT_FALSE(fs::exists(dir / ("o" + std::to_string(i))));
    EXPECT_FALSE(fs::exists(dir / ("o" + std::to_string(i) + ".csv")));
  }
}

TEST(Cli, WriteFailureIsARuntimeError) {
  const auto dir = scratch_dir("cli");
  { std::ofstream(dir / "plain_file") << "x"; }
  const auto r = run({"synth", "--out", (dir / "plain_file" / "sub").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, IdenticalRunsAreByteIdentical) {
  const auto dir = scratch_dir("cli");
  for (const char* tag : {"a", "b"}) {
    const auto root = dir / tag;
    ASSERT_EQ(run(small_scene(root / "s")).code, 0);
    const auto frames = (root / "s" / "frames").string();
    ASSERT_EQ(run({"synth", "--out", (root / "two").string()}).code, 0);
    ASSERT_EQ(run({"perturb", "--input", (root / "two").string(), "--out", (root / "drift.csv").string()}).code, 0);
    ASSERT_EQ(run({"model", "--input", frames, "--block", "20", "--selection", "weakest:5", "--out",
                   (root / "m").string()})
                  .code,
              0);
    ASSERT_EQ(run({"segment", "--models", (root / "m").string(), "--input", frames, "--out", (root / "seg").string()})
                  .code,
              0);
    ASSERT_EQ(run({"eval", "--input", frames, "--block", "20", "--out", (root / "eval.csv").string()}).code, 0);
    ASSERT_EQ(run({"theory", "--trials", "300", "--out", (root / "bound.csv").string()}).code, 0);
    ASSERT_EQ(run({"theory", "--mode", "chain", "--n-bg", "40", "--n-fg", "40", "--trials", "300", "--out",
                   (root / "chain.csv").string()})
                  .code,
              0);
    ASSERT_EQ(run({"subspace", "--input", frames, "--block", "20", "--out", (root / "sub.csv").string()}).code, 0);
  }
  const auto a = snapshot(dir / "a"), b = snapshot(dir / "b");
  EXPECT_GT(a.size(), 90u);
  EXPECT_EQ(a, b);
}
