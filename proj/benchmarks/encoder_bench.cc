#include <benchmark/benchmark.h>

#include "wic/numkit.h"
#include "wic/train.h"

namespace {

using namespace wic;

Network bench_network(std::size_t hidden, std::size_t labels) {
  TrainConfig config;
  config.embedding_size = hidden;
  config.hidden_size = hidden;
  return init_network(config, EncoderKind::kBiLstm, 1000, labels);
}

std::vector<WordId> bench_sentence(std::size_t n) {
  SeededRng rng(3);
  std::vector<WordId> ids(n);
  for (auto& id : ids) id = static_cast<WordId>(1 + rng.index(999));
  return ids;
}

void BM_EncodeSentence(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const Network net = bench_network(hidden, 100);
  const auto ids = bench_sentence(25);
  for (auto _ : state) benchmark::DoNotOptimize(encode(net, ids));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ids.size()));
}
BENCHMARK(BM_EncodeSentence)->Arg(32)->Arg(128)->Arg(300);

void BM_ForwardBackward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const Network net = bench_network(hidden, 1000);
  std::vector<TranslationInstance> batch;
  for (std::size_t k = 0; k < 8; ++k) {
    batch.push_back({bench_sentence(20), k, static_cast<WordId>(k + 1)});
  }
  Network grads = zeros_like(net);
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_loss_and_gradients(net, batch, grads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(128);

void BM_Softmax(benchmark::State& state) {
  SeededRng rng(1);
  Vector logits(static_cast<std::size_t>(state.range(0)));
  for (double& v : logits) v = rng.uniform(-5.0, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(softmax_stable(logits));
}
BENCHMARK(BM_Softmax)->Arg(1000)->Arg(30001);

}  // namespace

BENCHMARK_MAIN();
