#include "wic/train.h"

#include <cmath>
#include <limits>
#include <numeric>

#include "wic/error.h"

namespace wic {

namespace {

constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

void init_gate(GateParams& g, bool diagonal_peephole, SeededRng& rng) {
  const std::size_t hidden = g.bias.size();
  g.from_input = init_matrix(hidden, g.from_input.cols(), InitSpec::glorot(), rng);
  g.from_hidden = init_matrix(hidden, hidden, InitSpec::orthogonal(), rng);
  if (!g.from_cell.empty()) {
    g.from_cell = init_matrix(hidden, hidden, InitSpec::orthogonal(), rng);
    if (diagonal_peephole) {
      for (std::size_t r = 0; r < hidden; ++r) {
        for (std::size_t c = 0; c < hidden; ++c) {
          if (r != c) g.from_cell(r, c) = 0.0;
        }
      }
    }
  }
  std::fill(g.bias.begin(), g.bias.end(), 0.0);
}

void init_direction(LstmDirectionParams& d, SeededRng& rng) {
  const bool diag = d.peephole == PeepholeMode::kDiagonal;
  init_gate(d.input, diag, rng);
  init_gate(d.forget, diag, rng);
  init_gate(d.candidate, diag, rng);
  init_gate(d.output, diag, rng);
}

void zero_all(Network& net) {
  for_each_network_tensor(net, [](const std::string&, std::span<double> v, std::size_t,
                                  std::size_t) { std::fill(v.begin(), v.end(), 0.0); });
}

void add_into(Network& dst, const Network& src) {
  std::vector<std::span<const double>> parts;
  for_each_network_tensor(src, [&](const std::string&, std::span<const double> v, std::size_t,
                                   std::size_t) { parts.push_back(v); });
  std::size_t k = 0;
  for_each_network_tensor(dst, [&](const std::string&, std::span<double> v, std::size_t,
                                   std::size_t) {
    const auto s = parts[k++];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += s[i];
  });
}

}  // namespace

void validate(const TrainConfig& config) {
  WIC_CHECK(config.batch_size >= 1, "batch_size must be >= 1");
  WIC_CHECK(config.patience >= 1, "patience must be >= 1");
  WIC_CHECK(config.embedding_size >= 1 && config.hidden_size >= 1, "model sizes must be >= 1");
  WIC_CHECK(config.adam.beta1 >= 0.0 && config.adam.beta1 < 1.0, "beta1 must be in [0,1)");
  WIC_CHECK(config.adam.beta2 >= 0.0 && config.adam.beta2 < 1.0, "beta2 must be in [0,1)");
  WIC_CHECK(config.adam.learning_rate > 0.0, "learning rate must be positive");
  WIC_CHECK(config.adam.epsilon > 0.0, "epsilon must be positive");
}

Network make_network_shape(EncoderKind kind, std::size_t vocab_size, std::size_t num_labels,
                           std::size_t embedding_size, std::size_t hidden_size,
                           PeepholeMode peephole) {
  WIC_CHECK(vocab_size >= 1 && num_labels >= 1, "vocabulary and label set must be non-empty");
  Network net;
  net.kind = kind;
  const std::size_t width = 2 * hidden_size;
  switch (kind) {
    case EncoderKind::kBiLstm:
      net.lstm.embeddings = Matrix(vocab_size, embedding_size);
      net.lstm.forward = LstmDirectionParams::zeros(embedding_size, hidden_size, peephole);
      net.lstm.backward = LstmDirectionParams::zeros(embedding_size, hidden_size, peephole);
      break;
    case EncoderKind::kForwardLstm:
      net.lstm.embeddings = Matrix(vocab_size, embedding_size);
      net.lstm.forward = LstmDirectionParams::zeros(embedding_size, width, peephole);
      break;
    case EncoderKind::kMlp:
      net.mlp.embeddings = Matrix(vocab_size, embedding_size);
      net.mlp.mlp.hidden = Matrix(width, 2 * embedding_size);
      net.mlp.mlp.bias.assign(width, 0.0);
      break;
  }
  WIC_CHECK(net.output_size() == width, "encoder output width must be 2*d_h");
  net.head.projection = Matrix(num_labels, width);
  net.head.bias.assign(num_labels, 0.0);
  return net;
}

SoftmaxHead init_head(std::size_t num_labels, std::size_t input_size, SeededRng& rng) {
  return {init_matrix(num_labels, input_size, InitSpec::glorot(), rng),
          Vector(num_labels, 0.0)};
}

Network init_network(const TrainConfig& config, EncoderKind kind, std::size_t vocab_size,
                     std::size_t num_labels) {
  validate(config);
  Network net = make_network_shape(kind, vocab_size, num_labels, config.embedding_size,
                                   config.hidden_size, config.peephole);
  SeededRng rng(config.seed);
  const InitSpec embed = InitSpec::uniform(config.embedding_init);
  if (kind == EncoderKind::kMlp) {
    net.mlp.embeddings = init_matrix(vocab_size, config.embedding_size, embed, rng);
    net.mlp.mlp.hidden = init_matrix(net.mlp.mlp.hidden.rows(), net.mlp.mlp.hidden.cols(),
                                     InitSpec::glorot(), rng);
  } else {
    net.lstm.embeddings = init_matrix(vocab_size, config.embedding_size, embed, rng);
    init_direction(net.lstm.forward, rng);
    if (net.lstm.backward) init_direction(*net.lstm.backward, rng);
  }
  net.head = init_head(num_labels, net.output_size(), rng);
  return net;
}

AdamState make_adam_state(const Network& net, const AdamHyperparams& hyper) {
  AdamState state;
  state.hyper = hyper;
  for_each_network_tensor(net, [&](const std::string&, std::span<const double> v, std::size_t,
                                   std::size_t) {
    state.m.emplace_back(v.size(), 0.0);
    state.v.emplace_back(v.size(), 0.0);
  });
  return state;
}

void adam_update(std::span<double> params, std::span<const double> grads, Vector& m, Vector& v,
                 std::uint64_t step, const AdamHyperparams& hyper) {
  WIC_CHECK(step >= 1, "Adam step counter must be incremented before the update");
  WIC_CHECK(params.size() == grads.size() && m.size() == params.size() &&
                v.size() == params.size(),
            "Adam shapes disagree");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

void adam_step(Network& params, const Network& grads, AdamState& state) {
  std::vector<std::pair<std::string, std::span<const double>>> g;
  for_each_network_tensor(grads, [&](const std::string& name, std::span<const double> v,
                                     std::size_t, std::size_t) { g.emplace_back(name, v); });
  WIC_CHECK(g.size() == state.m.size(), "Adam state does not match the network");
  for (const auto& [name, values] : g) {
    for (double x : values) {
      if (!std::isfinite(x)) throw TrainingError("non-finite gradient in tensor " + name);
    }
  }
  ++state.step;
  std::size_t k = 0;
  for_each_network_tensor(params, [&](const std::string&, std::span<double> v, std::size_t,
                                      std::size_t) {
    WIC_CHECK(g[k].second.size() == v.size(), "gradient shape mismatch in " << g[k].first);
    adam_update(v, g[k].second, state.m[k], state.v[k], state.step, state.hyper);
    ++k;
  });
}

EarlyStopping::EarlyStopping(std::size_t patience)
    : patience_(patience), best_(std::numeric_limits<double>::infinity()) {
  WIC_CHECK(patience >= 1, "patience must be >= 1");
}

EarlyStopping::Decision EarlyStopping::observe(double dev_perplexity) {
  Decision d;
  if (dev_perplexity < best_) {
    best_ = dev_perplexity;
    best_index_ = seen_;
    stale_ = 0;
    d.improved = true;
  } else {
    ++stale_;
  }
  ++seen_;
  d.stop = stale_ >= patience_;
  return d;
}

double perplexity(const Network& net, std::span<const TranslationInstance> instances,
                  std::size_t threads) {
  WIC_CHECK(!instances.empty(), "perplexity of an empty instance list");
  const std::vector<double> nll = instance_nll(net, instances, threads);
  double total = 0.0;
  for (double x : nll) total += x;
  return std::exp(total / static_cast<double>(nll.size()));
}

double accuracy(const Network& net, std::span<const TranslationInstance> instances,
                std::size_t threads) {
  WIC_CHECK(!instances.empty(), "accuracy of an empty instance list");
  const std::vector<WordId> predicted = predict_labels(net, instances, threads);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (predicted[i] == instances[i].target_id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(instances.size());
}

TrainResult train(Network initial, std::span<const TranslationInstance> train_set,
                  std::span<const TranslationInstance> dev_set, const TrainConfig& config,
                  std::ostream* log) {
  validate(config);
  WIC_CHECK(!train_set.empty(), "training set is empty");

  TrainResult result;
  Network net = std::move(initial);
  result.best = net;
  AdamState adam = make_adam_state(net, config.adam);
  SeededRng shuffle_rng(config.seed ^ kShuffleStream);
  EarlyStopping stopper(config.patience);

  const std::size_t threads = std::max<std::size_t>(config.threads, 1);
  Network grads = zeros_like(net);
  std::vector<Network> workspaces;
  if (threads > 1) workspaces.assign(threads, zeros_like(net));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double loss_since = 0.0;
  std::size_t count_since = 0;
  bool stop = false;

  auto evaluate = [&](std::size_t epoch) {
    EvalRecord rec;
    rec.update = result.updates;
    rec.epoch = epoch;
    rec.train_loss = count_since ? loss_since / static_cast<double>(count_since) : 0.0;
    loss_since = 0.0;
    count_since = 0;
    if (dev_set.empty()) {
      rec.dev_perplexity = std::numeric_limits<double>::quiet_NaN();
      rec.dev_accuracy = std::numeric_limits<double>::quiet_NaN();
      result.best = net;
      result.best_evaluation = result.history.size();
    } else {
      rec.dev_perplexity = perplexity(net, dev_set, threads);
      rec.dev_accuracy = accuracy(net, dev_set, threads);
      if (!std::isfinite(rec.dev_perplexity)) {
        throw TrainingError("non-finite dev perplexity at update " +
                            std::to_string(result.updates));
      }
      const auto decision = stopper.observe(rec.dev_perplexity);
      if (decision.improved) {
        result.best = net;
        result.best_evaluation = result.history.size();
      }
      if (decision.stop) {
        stop = true;
        result.early_stopped = true;
      }
      if (config.target_perplexity > 0.0 && rec.dev_perplexity <= config.target_perplexity) {
        stop = true;
      }
    }
    if (log) {
      *log << rec.update << '\t' << rec.train_loss << '\t' << rec.dev_perplexity << '\n';
    }
    result.history.push_back(rec);
  };

  std::vector<TranslationInstance> batch;
  for (std::size_t epoch = 1; epoch <= config.max_epochs && !stop; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size() && !stop; start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);

      zero_all(grads);
      double loss = 0.0;
      const std::size_t chunks = std::min(threads, batch.size());
      if (chunks <= 1) {
        loss = accumulate_loss_and_gradients(net, batch, grads);
      } else {
        std::vector<double> losses(chunks, 0.0);
        const std::size_t per = (batch.size() + chunks - 1) / chunks;
        parallel_for(chunks, chunks, [&](std::size_t k) {
          zero_all(workspaces[k]);
          const std::size_t lo = k * per;
          const std::size_t hi = std::min(batch.size(), lo + per);
          if (lo >= hi) return;
          losses[k] = accumulate_loss_and_gradients(
              net, std::span<const TranslationInstance>(batch).subspan(lo, hi - lo),
              workspaces[k]);
        });
        for (std::size_t k = 0; k < chunks; ++k) {
          loss += losses[k];
          add_into(grads, workspaces[k]);
        }
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite training loss at update " +
                            std::to_string(result.updates + 1));
      }
      adam_step(net, grads, adam);
      ++result.updates;
      loss_since += loss;
      count_since += batch.size();
      if (config.eval_every > 0 && result.updates % config.eval_every == 0) evaluate(epoch);
    }
    if (config.eval_every == 0 && !stop) evaluate(epoch);
  }
  if (dev_set.empty()) result.best = net;
  return result;
}

}  // namespace wic
