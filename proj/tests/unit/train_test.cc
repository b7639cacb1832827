#include "wic/train.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "support/helpers.h"
#include "wic/error.h"
#include "wic/synthetic.h"

namespace wic {
namespace {

using testing::random_ids;

TrainConfig small_config(std::uint64_t seed = 1) {
  TrainConfig c;
  c.seed = seed;
  c.embedding_size = 6;
  c.hidden_size = 5;
  c.batch_size = 8;
  c.max_epochs = 3;
  return c;
}

double max_gram_deviation(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t a = 0; a < m.cols(); ++a) {
    for (std::size_t b = 0; b < m.cols(); ++b) {
      double s = 0.0;
      for (std::size_t r = 0; r < m.rows(); ++r) s += m(r, a) * m(r, b);
      worst = std::max(worst, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  }
  return worst;
}

TEST(InitNetwork, FollowsInitializationScheme) {
  TrainConfig config = small_config();
  config.embedding_size = 12;
  config.hidden_size = 9;
  const Network net = init_network(config, EncoderKind::kBiLstm, 40, 7);
  for (double v : net.lstm.embeddings.values()) EXPECT_LE(std::abs(v), 0.08);
  const double input_bound = std::sqrt(6.0 / (9 + 12));
  for (const auto* dir : {&net.lstm.forward, &*net.lstm.backward}) {
    for (const GateParams* g : {&dir->input, &dir->forget, &dir->candidate, &dir->output}) {
      EXPECT_LT(max_gram_deviation(g->from_hidden), 1e-5);
      if (!g->from_cell.empty()) EXPECT_LT(max_gram_deviation(g->from_cell), 1e-5);
      for (double v : g->from_input.values()) EXPECT_LE(std::abs(v), input_bound);
      for (double v : g->bias) EXPECT_EQ(v, 0.0);
    }
  }
  const double head_bound = std::sqrt(6.0 / (7 + 18));
  for (double v : net.head.projection.values()) EXPECT_LE(std::abs(v), head_bound);
  for (double v : net.head.bias) EXPECT_EQ(v, 0.0);
}

TEST(InitNetwork, SameSeedIsBitwiseIdentical) {
  for (auto kind : {EncoderKind::kBiLstm, EncoderKind::kForwardLstm, EncoderKind::kMlp}) {
    EXPECT_EQ(init_network(small_config(3), kind, 20, 5), init_network(small_config(3), kind, 20, 5));
    EXPECT_NE(init_network(small_config(3), kind, 20, 5), init_network(small_config(4), kind, 20, 5));
  }
}

TEST(InitNetwork, DiagonalPeepholesStartDiagonal) {
  TrainConfig config = small_config();
  config.peephole = PeepholeMode::kDiagonal;
  const Network net = init_network(config, EncoderKind::kBiLstm, 10, 3);
  const Matrix& w = net.lstm.forward.output.from_cell;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    EXPECT_EQ(std::abs(w(r, r)) > 0.0, true);
    for (std::size_t c = 0; c < w.cols(); ++c) {
      if (r != c) EXPECT_EQ(w(r, c), 0.0);
    }
  }
}

TEST(InitNetwork, EveryEncoderFeedsAHeadOfTwiceHidden) {
  const TrainConfig config = small_config();
  const Network bi = init_network(config, EncoderKind::kBiLstm, 10, 3);
  const Network fwd = init_network(config, EncoderKind::kForwardLstm, 10, 3);
  const Network mlp = init_network(config, EncoderKind::kMlp, 10, 3);
  EXPECT_EQ(bi.output_size(), 10u);
  EXPECT_EQ(fwd.output_size(), 10u);
  EXPECT_EQ(fwd.lstm.forward.hidden_size(), 10u);
  EXPECT_FALSE(fwd.lstm.backward.has_value());
  EXPECT_EQ(mlp.output_size(), 10u);
  EXPECT_EQ(bi.head.projection.cols(), fwd.head.projection.cols());
}

TEST(InitNetwork, RandomInitBaselineMatchesPretrainedShapes) {
  const Network a = init_network(small_config(1), EncoderKind::kBiLstm, 10, 3);
  const Network b = init_network(small_config(2), EncoderKind::kBiLstm, 10, 3);
  std::vector<std::pair<std::size_t, std::size_t>> sa, sb;
  for_each_network_tensor(a, [&](const std::string&, std::span<const double>, std::size_t r, std::size_t c) { sa.emplace_back(r, c); });
  for_each_network_tensor(b, [&](const std::string&, std::span<const double>, std::size_t r, std::size_t c) { sb.emplace_back(r, c); });
  EXPECT_EQ(sa, sb);
}

TEST(Validate, RejectsBadConfigs) {
  TrainConfig c = small_config();
  c.batch_size = 0;
  EXPECT_THROW(validate(c), ContractViolation);
  c = small_config();
  c.patience = 0;
  EXPECT_THROW(validate(c), ContractViolation);
  c = small_config();
  c.adam.beta2 = 1.0;
  EXPECT_THROW(validate(c), ContractViolation);
}

// Written from the published algorithm, independently of adam_update.
struct ReferenceAdam {
  double alpha = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  int t = 0;

  void step(std::vector<double>& theta, const std::vector<double>& g) {
    if (m.empty()) {
      m.assign(theta.size(), 0.0);
      v.assign(theta.size(), 0.0);
    }
    ++t;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (1 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
      const double mhat = m[i] / (1 - std::pow(beta1, t));
      const double vhat = v[i] / (1 - std::pow(beta2, t));
      theta[i] = theta[i] - alpha * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

Network grads_from(const Network& shape, const Vector& flat) {
  Network g = zeros_like(shape);
  unflatten(flat, g);
  return g;
}

TEST(Adam, ZeroGradientsLeaveParametersUnchanged) {
  Network net = init_network(small_config(), EncoderKind::kBiLstm, 8, 4);
  const Network before = net;
  AdamState state = make_adam_state(net, {});
  const Network zero = zeros_like(net);
  for (int k = 0; k < 25; ++k) adam_step(net, zero, state);
  EXPECT_EQ(net, before);
  EXPECT_EQ(state.step, 25u);
}

TEST(Adam, FirstStepMovesEachCoordinateByAlpha) {
  Network net = init_network(small_config(), EncoderKind::kMlp, 8, 4);
  const Vector start = flatten(net);
  Vector g(start.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = (k % 3 == 0 ? -1.0 : 1.0) * (0.01 + static_cast<double>(k % 7));
  AdamState state = make_adam_state(net, {});
  adam_step(net, grads_from(net, g), state);
  const Vector after = flatten(net);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double delta = after[k] - start[k];
    EXPECT_NEAR(std::abs(delta), 1e-3, 1e-9);
    EXPECT_EQ(delta < 0, g[k] > 0);
  }
}

TEST(Adam, TenStepQuadraticTrajectoryMatchesReference) {
  SeededRng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = init_network(small_config(trial + 1), EncoderKind::kBiLstm, 6, 3);
    AdamHyperparams hyper;
    hyper.learning_rate = rng.uniform(1e-4, 1e-1);
    AdamState state = make_adam_state(net, hyper);
    Vector target = testing::random_vector(parameter_count(net), rng);
    Vector theta = flatten(net);
    ReferenceAdam ref;
    ref.alpha = hyper.learning_rate;
    for (int step = 0; step < 10; ++step) {
      // f = sum_k w_k (theta_k - target_k)^2
      const Vector cur = flatten(net);
      Vector g(cur.size());
      for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = 2.0 * (1.0 + static_cast<double>(k % 5)) * (cur[k] - target[k]);
      }
      adam_step(net, grads_from(net, g), state);
      Vector rg(theta.size());
      for (std::size_t k = 0; k < rg.size(); ++k) {
        rg[k] = 2.0 * (1.0 + static_cast<double>(k % 5)) * (theta[k] - target[k]);
      }
      ref.step(theta, rg);
    }
    const Vector got = flatten(net);
    for (std::size_t k = 0; k < got.size(); ++k) ASSERT_NEAR(got[k], theta[k], 1e-10);
  }
}

TEST(Adam, NonFiniteGradientNamesTensor) {
  Network net = init_network(small_config(), EncoderKind::kBiLstm, 8, 4);
  AdamState state = make_adam_state(net, {});
  Network g = zeros_like(net);
  g.head.bias[1] = std::nan("");
  try {
    adam_step(net, g, state);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("head.bias"), std::string::npos) << e.what();
  }
  EXPECT_EQ(state.step, 0u);
}

TEST(EarlyStoppingTest, StopsAfterPatienceAndRemembersBest) {
  EarlyStopping stop(2);
  EXPECT_TRUE(stop.observe(5.0).improved);
  const auto d1 = stop.observe(4.0);
  EXPECT_TRUE(d1.improved);
  EXPECT_FALSE(d1.stop);
  EXPECT_FALSE(stop.observe(4.1).stop);
  EXPECT_TRUE(stop.observe(4.2).stop);
  EXPECT_EQ(stop.best(), 4.0);
  EXPECT_EQ(stop.best_index(), 1u);
}

TEST(Perplexity, UniformModelOverFourLabelsIsFour) {
  Network net = init_network(small_config(), EncoderKind::kBiLstm, 8, 4);
  net.head.projection.fill(0.0);
  const std::vector<TranslationInstance> data = {{{1, 2}, 0, 1}, {{3}, 0, 3}, {{4, 5, 6}, 2, 2}};
  EXPECT_DOUBLE_EQ(perplexity(net, data), 4.0);
}

TEST(Perplexity, CertainModelIsOne) {
  Network net = init_network(small_config(), EncoderKind::kBiLstm, 8, 4);
  net.head.projection.fill(0.0);
  net.head.bias[2] = 1000.0;
  EXPECT_EQ(perplexity(net, std::vector<TranslationInstance>{{{1, 2}, 0, 2}, {{5}, 0, 2}}), 1.0);
}

TEST(Perplexity, MatchesIndependentPass) {
  SeededRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = init_network(small_config(trial + 1), EncoderKind::kBiLstm, 9, 6);
    std::vector<TranslationInstance> data;
    for (int k = 0; k < 15; ++k) {
      TranslationInstance inst;
      inst.source_ids = random_ids(1 + rng.index(7), 9, rng);
      inst.position = rng.index(inst.source_ids.size());
      inst.target_id = static_cast<WordId>(rng.index(6));
      data.push_back(inst);
    }
    double nll = 0.0;
    for (const auto& inst : data) {
      const Vector h = encode(net, inst.source_ids)[inst.position];
      const Vector p = head_distribution(net.head, h);
      nll -= std::log(p[inst.target_id]);
    }
    const double want = std::exp(nll / static_cast<double>(data.size()));
    EXPECT_NEAR(perplexity(net, data), want, 1e-9 * want);
    EXPECT_EQ(perplexity(net, data, 1), perplexity(net, data, 4));
    EXPECT_EQ(accuracy(net, data, 1), accuracy(net, data, 3));
  }
}

std::vector<TranslationInstance> mapping_instances(std::size_t sentences, Vocabulary& sv,
                                                   Vocabulary& tv, std::uint64_t seed) {
  const auto corpus = make_mapping_corpus(sentences, 12, seed);
  TokenCounts sc, tc;
  for (const auto& p : corpus.pairs) {
    count_tokens(p.source, sc);
    count_tokens(p.target, tc);
  }
  sv = build_vocabulary(sc, 30000, 0);
  tv = build_vocabulary(tc, 30000, 0);
  return extract_corpus_instances(corpus.pairs, corpus.forward, corpus.backward, sv, tv, 10);
}

TEST(Train, DeterministicForFixedSeed) {
  Vocabulary sv, tv;
  const auto data = mapping_instances(12, sv, tv, 5);
  const std::vector<TranslationInstance> dev(data.begin(), data.begin() + 20);
  TrainConfig config = small_config(9);
  const Network init = init_network(config, EncoderKind::kBiLstm, sv.size(), tv.size());
  std::ostringstream log_a, log_b;
  const auto a = train(init, data, dev, config, &log_a);
  const auto b = train(init, data, dev, config, &log_b);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(log_a.str(), log_b.str());
  EXPECT_FALSE(log_a.str().empty());
}

TEST(Train, ThreadedTrainingIsDeterministicPerThreadCount) {
  Vocabulary sv, tv;
  const auto data = mapping_instances(12, sv, tv, 6);
  TrainConfig config = small_config(2);
  config.threads = 3;
  const Network init = init_network(config, EncoderKind::kBiLstm, sv.size(), tv.size());
  EXPECT_EQ(train(init, data, {}, config).best, train(init, data, {}, config).best);
}

TEST(Train, BestCheckpointHasLowestDevPerplexity) {
  Vocabulary sv, tv;
  const auto data = mapping_instances(16, sv, tv, 8);
  const std::vector<TranslationInstance> train_set(data.begin() + 30, data.end());
  const std::vector<TranslationInstance> dev(data.begin(), data.begin() + 30);
  TrainConfig config = small_config(4);
  config.eval_every = 5;
  config.max_epochs = 6;
  const auto result =
      train(init_network(config, EncoderKind::kBiLstm, sv.size(), tv.size()), train_set, dev, config);
  ASSERT_FALSE(result.history.empty());
  const double best = perplexity(result.best, dev);
  for (const auto& rec : result.history) EXPECT_LE(best, rec.dev_perplexity * (1 + 1e-12));
  EXPECT_NEAR(best, result.history[result.best_evaluation].dev_perplexity, 1e-12 * best);
}

TEST(Train, EarlyStopsWhenDevStopsImproving) {
  Vocabulary sv, tv;
  const auto data = mapping_instances(10, sv, tv, 3);
  // Dev labels are shuffled noise, so dev perplexity soon gets worse.
  std::vector<TranslationInstance> dev(data.begin(), data.begin() + 40);
  for (std::size_t k = 0; k < dev.size(); ++k) dev[k].target_id = dev[(k * 7 + 3) % dev.size()].target_id;
  TrainConfig config = small_config(1);
  config.eval_every = 2;
  config.patience = 2;
  config.max_epochs = 200;
  config.adam.learning_rate = 0.05;
  const auto result =
      train(init_network(config, EncoderKind::kBiLstm, sv.size(), tv.size()), data, dev, config);
  EXPECT_TRUE(result.early_stopped);
  EXPECT_EQ(result.history.size(), result.best_evaluation + 1 + config.patience);
}

TEST(Train, EmptyTrainingSetIsContractViolation) {
  TrainConfig config = small_config();
  const Network net = init_network(config, EncoderKind::kBiLstm, 5, 3);
  EXPECT_THROW(train(net, {}, {}, config), ContractViolation);
}

TEST(Train, NonFiniteParametersAbort) {
  TrainConfig config = small_config();
  Network net = init_network(config, EncoderKind::kBiLstm, 5, 3);
  net.lstm.embeddings(1, 0) = std::nan("");
  const std::vector<TranslationInstance> data = {{{1, 2}, 0, 1}};
  EXPECT_THROW(train(net, data, {}, config), TrainingError);
}

TEST(Train, OverfitsTinyMappingCorpus) {
  Vocabulary sv, tv;
  const auto data = mapping_instances(10, sv, tv, 12);
  TrainConfig config = small_config(1);
  config.embedding_size = 8;
  config.hidden_size = 8;
  config.max_epochs = 60;
  config.adam.learning_rate = 0.01;
  const auto result =
      train(init_network(config, EncoderKind::kBiLstm, sv.size(), tv.size()), data, {}, config);
  EXPECT_LT(perplexity(result.best, data), 1.1);
}

}  // namespace
}  // namespace wic
