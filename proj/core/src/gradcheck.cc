#include "wic/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wic/train.h"

namespace wic {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckReport gradient_check(std::uint64_t seed, const GradCheckOptions& options) {
  TrainConfig config;
  config.seed = seed;
  config.embedding_size = options.embedding_size;
  config.hidden_size = options.hidden_size;
  config.peephole = options.peephole;
  // Larger embeddings than the training default keep the gates away from
  // their linear regime, so the check exercises the nonlinearities.
  config.embedding_init = 0.5;
  const Network net =
      init_network(config, options.kind, options.source_vocab, options.target_vocab);

  SeededRng rng(seed ^ 0x5bd1e995u);
  std::vector<TranslationInstance> batch(options.batch);
  for (auto& inst : batch) {
    inst.source_ids.resize(options.sentence_length);
    for (auto& id : inst.source_ids) id = static_cast<WordId>(rng.index(options.source_vocab));
    inst.position = rng.index(options.sentence_length);
    inst.target_id = static_cast<WordId>(rng.index(options.target_vocab));
  }

  Network grads = zeros_like(net);
  accumulate_loss_and_gradients(net, batch, grads);
  const Vector analytic = flatten(grads);

  Network probe = net;
  auto loss = [&](std::span<const double> values) {
    unflatten(values, probe);
    const auto nll = instance_nll(probe, batch);
    return std::accumulate(nll.begin(), nll.end(), 0.0);
  };
  const Vector x = flatten(net);
  const Vector numeric = finite_difference_grad(loss, x, options.epsilon);

  GradCheckReport report;
  report.parameters = x.size();
  std::size_t worst = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double err = relative_error(analytic[k], numeric[k], options.floor);
    if (err > report.max_relative_error) {
      report.max_relative_error = err;
      worst = k;
    }
  }
  report.analytic = analytic[worst];
  report.numeric = numeric[worst];
  std::size_t offset = 0;
  for_each_network_tensor(net, [&](const std::string& name, std::span<const double> v,
                                   std::size_t, std::size_t) {
    if (worst >= offset && worst < offset + v.size()) {
      report.worst_tensor = name;
      report.worst_coordinate = worst - offset;
    }
    offset += v.size();
  });
  return report;
}

}  // namespace wic
