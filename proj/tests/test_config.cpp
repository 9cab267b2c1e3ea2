#include "driftcheck/config.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace driftcheck;
namespace fs = std::filesystem;

namespace {

class ConfigTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("driftcheck_cfg_" +
            std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()
                      ->current_test_info()
                      ->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

constexpr const char* kMinimal =
    "source: builtin\n"
    "model: classifier\n"
    "inputs:\n"
    "  - {shape: [1, 3, 32, 32], seed: 1}\n";

}  // namespace

TEST_F(ConfigTest, MinimalConfigGetsEveryDefault) {
  auto c = load_config(write("min.yaml", kMinimal));
  EXPECT_EQ(c.source, ModelSource::Builtin);
  EXPECT_EQ(c.model, "classifier");
  ASSERT_EQ(c.inputs.size(), 1u);
  const auto& syn = std::get<SyntheticInputSpec>(c.inputs[0]);
  EXPECT_EQ(syn.shape, (Shape{1, 3, 32, 32}));
  ASSERT_TRUE(syn.seed.has_value());
  EXPECT_EQ(*syn.seed, 1u);

  EXPECT_EQ(c.means, (std::vector<double>{0.485, 0.456, 0.406}));
  EXPECT_EQ(c.stds, (std::vector<double>{0.229, 0.224, 0.225}));
  EXPECT_TRUE(c.options.optimized);
  ASSERT_TRUE(c.options.resize_multiple.has_value());
  EXPECT_EQ(*c.options.resize_multiple, 32);
  EXPECT_EQ(c.options.precision, Precision::Full);
  EXPECT_EQ(c.options.repeats, 11);
  EXPECT_FALSE(c.options.warmup);
  EXPECT_EQ(c.verification.tol.atol, 1e-5);
  EXPECT_EQ(c.verification.tol.rtol, 1e-5);
  EXPECT_EQ(c.verification.mode, CloseMode::Eq1);
  EXPECT_FALSE(c.verification.capture_activations);
  EXPECT_EQ(c.verification.thresholds.top_k, 5u);
  EXPECT_EQ(c.verification.thresholds.topk_agreement, 0.8);
  EXPECT_EQ(c.verification.thresholds.miou, 0.99);
  EXPECT_EQ(c.verification.thresholds.detection_f1, 1.0);
  EXPECT_EQ(c.verification.thresholds.match_iou, 0.5);
  EXPECT_FALSE(c.mitigations.pre_nms_sort);
  EXPECT_FALSE(c.mitigations.force_full_precision);
  EXPECT_TRUE(c.mitigations.eager_fallback_ops.empty());
  EXPECT_EQ(c.seed, 5u);
  EXPECT_FALSE(c.seed_explicit);
}

TEST_F(ConfigTest, LoadingTwiceIsIdentical) {
  auto p = write("same.yaml", kMinimal);
  auto a = load_config(p);
  auto b = load_config(p);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.means, b.means);
  EXPECT_EQ(a.seed, b.seed);
}

TEST_F(ConfigTest, FullConfigRoundTrip) {
  auto c = load_config(write("full.yaml",
                             "source: file\n"
                             "model: models/net.json\n"
                             "inputs:\n"
                             "  - data/a.drft\n"
                             "  - {shape: [1, 3, 64, 64]}\n"
                             "means: [0.5, 0.5, 0.5]\n"
                             "stds: [1.0, 1.0, 1.0]\n"
                             "options:\n"
                             "  optimized: false\n"
                             "  resize_multiple: null\n"
                             "  precision: reduced\n"
                             "  repeats: 3\n"
                             "  warmup: true\n"
                             "verification:\n"
                             "  tol: {atol: 1e-4, rtol: 1e-6}\n"
                             "  mode: elementwise\n"
                             "  capture_activations: true\n"
                             "  task_thresholds: {topk_agreement: 0.6}\n"
                             "mitigations:\n"
                             "  pre_nms_sort: true\n"
                             "  force_full_precision: true\n"
                             "  eager_fallback_ops: [Conv2d, Softmax]\n"
                             "seed: 9\n"));
  EXPECT_EQ(c.source, ModelSource::File);
  EXPECT_EQ(c.model, "models/net.json");
  ASSERT_EQ(c.inputs.size(), 2u);
  EXPECT_EQ(std::get<std::string>(c.inputs[0]), "data/a.drft");
  EXPECT_FALSE(std::get<SyntheticInputSpec>(c.inputs[1]).seed.has_value());
  EXPECT_FALSE(c.options.optimized);
  EXPECT_FALSE(c.options.resize_multiple.has_value());
  EXPECT_EQ(c.options.precision, Precision::Reduced);
  EXPECT_EQ(c.options.repeats, 3);
  EXPECT_TRUE(c.options.warmup);
  EXPECT_EQ(c.verification.tol.atol, 1e-4);
  EXPECT_EQ(c.verification.tol.rtol, 1e-6);
  EXPECT_EQ(c.verification.mode, CloseMode::Elementwise);
  EXPECT_TRUE(c.verification.capture_activations);
  EXPECT_EQ(c.verification.thresholds.topk_agreement, 0.6);
  EXPECT_TRUE(c.mitigations.pre_nms_sort);
  EXPECT_TRUE(c.mitigations.force_full_precision);
  EXPECT_EQ(c.mitigations.eager_fallback_ops,
            (std::set<OpKind>{OpKind::Conv2d, OpKind::Softmax}));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_TRUE(c.seed_explicit);
}

TEST_F(ConfigTest, CompileAliasSetsOptimized) {
  auto c = load_config(write("alias.yaml",
                             std::string(kMinimal) +
                                 "options: {compile: false}\n"));
  EXPECT_FALSE(c.options.optimized);
  EXPECT_THROW(
      load_config(write("both.yaml",
                        std::string(kMinimal) +
                            "options: {compile: true, optimized: true}\n")),
      InvalidConfigError);
}

TEST_F(ConfigTest, UnknownKeysRejectedAtEveryLevel) {
  try {
    load_config(write("typo.yaml",
                      "source: builtin\n"
                      "modle: classifier\n"
                      "inputs: [{shape: [1], seed: 1}]\n"));
    FAIL() << "expected InvalidConfigError";
  } catch (const InvalidConfigError& e) {
    EXPECT_STREQ(e.what(), "unknown key: modle");
  }
  EXPECT_THROW(load_config(write("o.yaml", std::string(kMinimal) +
                                               "options: {speed: 9}\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("v.yaml", std::string(kMinimal) +
                                               "verification: {tols: {}}\n")),
               InvalidConfigError);
  EXPECT_THROW(
      load_config(write("t.yaml",
                        std::string(kMinimal) +
                            "verification: {tol: {atoll: 1e-3}}\n")),
      InvalidConfigError);
  EXPECT_THROW(load_config(write("m.yaml", std::string(kMinimal) +
                                               "mitigations: {sort: true}\n")),
               InvalidConfigError);
  EXPECT_THROW(
      load_config(write("i.yaml",
                        "source: builtin\nmodel: classifier\n"
                        "inputs: [{shape: [1], sede: 1}]\n")),
      InvalidConfigError);
  EXPECT_THROW(
      load_config(write("th.yaml",
                        std::string(kMinimal) +
                            "verification: {task_thresholds: {miuo: 1}}\n")),
      InvalidConfigError);
}

TEST_F(ConfigTest, SchemaViolations) {
  EXPECT_THROW(load_config(write("s.yaml",
                                 "source: cloud\nmodel: classifier\n"
                                 "inputs: [{shape: [1], seed: 1}]\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("b.yaml",
                                 "source: builtin\nmodel: resnet\n"
                                 "inputs: [{shape: [1], seed: 1}]\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("e.yaml",
                                 "source: builtin\nmodel: classifier\n"
                                 "inputs: []\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("n.yaml",
                                 "source: builtin\nmodel: classifier\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("z.yaml",
                                 std::string(kMinimal) +
                                     "stds: [0.2, 0.0, 0.2]\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("r.yaml",
                                 std::string(kMinimal) +
                                     "options: {repeats: 0}\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("rm.yaml",
                                 std::string(kMinimal) +
                                     "options: {resize_multiple: -4}\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("p.yaml",
                                 std::string(kMinimal) +
                                     "options: {precision: half}\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("md.yaml",
                                 std::string(kMinimal) +
                                     "verification: {mode: fuzzy}\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("neg.yaml",
                                 std::string(kMinimal) +
                                     "verification: {tol: {atol: -1}}\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("sd.yaml",
                                 std::string(kMinimal) + "seed: -3\n")),
               InvalidConfigError);
  EXPECT_THROW(load_config(write("op.yaml",
                                 std::string(kMinimal) +
                                     "mitigations: {eager_fallback_ops: "
                                     "[Conv3d]}\n")),
               InvalidConfigError);
}

TEST_F(ConfigTest, MalformedYamlAndMissingFile) {
  EXPECT_THROW(load_config(write("bad.yaml", "source: [unclosed\n")),
               ConfigParseError);
  EXPECT_THROW(load_config(dir_ / "absent.yaml"), ConfigParseError);
}

TEST_F(ConfigTest, ResolvePath) {
  const fs::path cfg = "/a/b/c.yaml";
  EXPECT_EQ(resolve_path(cfg, "/abs/x.drft"), fs::path("/abs/x.drft"));
  EXPECT_EQ(resolve_path(cfg, "../x.drft"), fs::path("/a/x.drft"));
  EXPECT_EQ(resolve_path(cfg, "data/t.drft"), fs::path("/a/b/data/t.drft"));
}

TEST_F(ConfigTest, ExpandGlobSortsMatches) {
  write("b.yaml", kMinimal);
  write("a.yaml", kMinimal);
  auto got = expand_glob((dir_ / "*.yaml").string());
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(fs::path(got[0]).filename(), "a.yaml");
  EXPECT_EQ(fs::path(got[1]).filename(), "b.yaml");

  EXPECT_TRUE(expand_glob((dir_ / "*.nope").string()).empty());

  auto lit = expand_glob((dir_ / "a.yaml").string());
  ASSERT_EQ(lit.size(), 1u);
  EXPECT_EQ(fs::path(lit[0]).filename(), "a.yaml");
}
