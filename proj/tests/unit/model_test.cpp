#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "spur/data.hpp"
#include "spur/error.hpp"
#include "spur/model.hpp"
#include "test_support.hpp"

namespace spur {
namespace {

ModelConfig tiny_transformer() {
  ModelConfig c;
  c.layers = 1;
  c.hidden_dim = 8;
  c.heads = 2;
  c.vocab = 10;
  c.max_seq = 6;
  c.seed = 3;
  return c;
}

testing::ModelObjective transformer_objective(const ParamTable& params, double lambda) {
  testing::ModelObjective o;
  o.config = tiny_transformer();
  o.masks = testing::random_masks(params, 0.6, 11);
  const Dataset d = gen_duplicate_task(5, 4, 6, 10);
  o.tokens = d.tokens;
  o.labels = d.labels;
  o.lambda = lambda;
  return o;
}

TEST(ModelTest, TransformerParameterOrderAndShapes) {
  const ParamTable p = init_model(tiny_transformer());
  std::vector<std::string> names;
  for (const Param& x : p) names.push_back(x.name);
  const std::vector<std::string> expected{
      "embedding",       "positional",      "layer0.q",        "layer0.q_bias",
      "layer0.k",        "layer0.k_bias",   "layer0.v",        "layer0.v_bias",
      "layer0.o",        "layer0.o_bias",   "layer0.ln1_gain", "layer0.ln1_bias",
      "layer0.ff1",      "layer0.ff1_bias", "layer0.ff2",      "layer0.ff2_bias",
      "layer0.ln2_gain", "layer0.ln2_bias", "head",            "head_bias"};
  EXPECT_EQ(names, expected);
  EXPECT_EQ(p.at("embedding").value.rows(), 10u);
  EXPECT_EQ(p.at("layer0.ff1").value.cols(), 32u);
  EXPECT_EQ(p.at("layer0.ff2").value.rows(), 32u);
  EXPECT_EQ(p.at("head").value.cols(), 2u);
  EXPECT_EQ(p.at("layer0.ln1_gain").value, Matrix(1, 8, 1.0));
  EXPECT_EQ(p.at("layer0.q_bias").value, Matrix(1, 8, 0.0));
}

TEST(ModelTest, InitIsDeterministicAndSeedSensitive) {
  ModelConfig c = tiny_transformer();
  EXPECT_EQ(init_model(c), init_model(c));
  ModelConfig other = c;
  other.seed = 4;
  EXPECT_NE(init_model(c).at("layer0.q").value, init_model(other).at("layer0.q").value);
}

TEST(ModelTest, GlorotBound) {
  const ParamTable p = init_model(tiny_transformer());
  const double bound = std::sqrt(6.0 / (8.0 + 32.0));
  for (double v : p.at("layer0.ff1").value.values()) EXPECT_LE(std::abs(v), bound);
}

TEST(ModelTest, TransformerGradientsMatchFiniteDifferences) {
  const ParamTable p = init_model(tiny_transformer());
  const auto o = transformer_objective(p, 10.0);
  for (const auto& [name, ratio] : testing::gradient_check(o, p, 1e-6, 1e-4, 1e-8))
    EXPECT_LE(ratio, 1.0) << name;
}

TEST(ModelTest, MlpGradientsMatchFiniteDifferences) {
  ModelConfig c;
  c.kind = ModelKind::kMlp;
  c.layers = 2;
  c.hidden_dim = 6;
  c.input_dim = 3;
  c.classes = 3;
  c.seed = 2;
  ParamTable p = init_model(c);
  // Zero biases put fully masked hidden units exactly on the relu kink.
  std::uint64_t seed = 20;
  for (Param& x : p)
    if (x.role == Role::kBias) x.value = testing::random_matrix(1, x.value.cols(), seed++);
  testing::ModelObjective o;
  o.config = c;
  o.masks = testing::random_masks(p, 0.7, 4);
  const Dataset d = gen_blobs(1, 5, 3, 3, 1.0);
  o.features = d.features;
  o.labels = d.labels;
  o.lambda = 3.0;
  o.variant = DevianceVariant::kL1S;
  for (const auto& [name, ratio] : testing::gradient_check(o, p, 1e-6, 1e-4, 1e-8))
    EXPECT_LE(ratio, 1.0) << name;
}

TEST(ModelTest, MaskedEntriesHaveNoEffect) {
  const ParamTable p = init_model(tiny_transformer());
  const auto o = transformer_objective(p, 0.0);
  ParamTable perturbed = p;
  const Mask& m = o.masks.masks.at("layer0.q");
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m.test(i)) perturbed.at("layer0.q").value[i] += 5.0;
  EXPECT_EQ(o.value(p), o.value(perturbed));
}

TEST(ModelTest, RejectsOutOfRangeTokens) {
  const ModelConfig c = tiny_transformer();
  const ParamTable p = init_model(c);
  ExprGraph g;
  BoundParams bound(g, p);
  TokenGrid t{1, 3, {0, 1, 10}};
  EXPECT_THROW(forward_transformer(g, c, bound, PruningState{}, t), InputError);
  TokenGrid long_seq{1, 7, {0, 1, 2, 3, 4, 5, 6}};
  EXPECT_THROW(forward_transformer(g, c, bound, PruningState{}, long_seq), InputError);
}

TEST(ModelTest, ConfigValidation) {
  ModelConfig c = tiny_transformer();
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny_transformer();
  c.layers = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelTest, EffectiveWeightsCoverPrunableMatrices) {
  const ModelConfig c = tiny_transformer();
  const ParamTable p = init_model(c);
  ExprGraph g;
  BoundParams bound(g, p);
  const Dataset d = gen_duplicate_task(0, 2, 6, 10);
  const ForwardResult f = forward_transformer(g, c, bound, PruningState{}, d.tokens);
  std::set<std::string> names;
  for (const auto& [n, id] : f.effective) names.insert(n);
  EXPECT_EQ(names, (std::set<std::string>{"layer0.ff1", "layer0.ff2", "layer0.k", "layer0.o",
                                          "layer0.q", "layer0.v"}));
  EXPECT_EQ(g.value(f.logits).rows(), 2u);
  EXPECT_EQ(g.value(f.logits).cols(), 2u);
}

}  // namespace
}  // namespace spur
