#ifndef WIC_TRAIN_H_
#define WIC_TRAIN_H_

// Initialization, Adam, the minibatch training loop with dev-perplexity
// early stopping, and perplexity evaluation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "wic/corpus.h"
#include "wic/network.h"

namespace wic {

struct AdamHyperparams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamHyperparams&, const AdamHyperparams&) = default;
};

struct TrainConfig {
  std::size_t batch_size = 128;
  // Updates between dev evaluations; 0 means once per epoch.
  std::size_t eval_every = 0;
  std::size_t patience = 3;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 1;
  std::size_t embedding_size = 300;  // d
  std::size_t hidden_size = 300;     // d_h, per direction
  double embedding_init = 0.08;
  PeepholeMode peephole = PeepholeMode::kFull;
  AdamHyperparams adam;
  std::size_t threads = 1;
  // Stop as soon as dev perplexity reaches this value (0 disables).
  double target_perplexity = 0.0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& config);

// Zero-valued network with the shapes implied by the config. The forward
// LSTM baseline gets 2*d_h hidden units and the MLP a 2*d_h wide hidden
// layer, so every kind feeds a head of width 2*d_h.
Network make_network_shape(EncoderKind kind, std::size_t vocab_size, std::size_t num_labels,
                           std::size_t embedding_size, std::size_t hidden_size,
                           PeepholeMode peephole);

// Embeddings uniform(+-embedding_init); recurrent and peephole matrices
// orthogonal; input-facing, MLP and head matrices Glorot uniform; biases 0.
Network init_network(const TrainConfig& config, EncoderKind kind, std::size_t vocab_size,
                     std::size_t num_labels);

// Fresh Glorot-initialized head for transfer to a new label set.
SoftmaxHead init_head(std::size_t num_labels, std::size_t input_size, SeededRng& rng);

struct AdamState {
  std::vector<Vector> m;
  std::vector<Vector> v;
  std::uint64_t step = 0;
  AdamHyperparams hyper;
};

AdamState make_adam_state(const Network& net, const AdamHyperparams& hyper);

// One bias-corrected Adam update of a single tensor; `step` must already be
// incremented for this update.
void adam_update(std::span<double> params, std::span<const double> grads, Vector& m, Vector& v,
                 std::uint64_t step, const AdamHyperparams& hyper);

// Throws TrainingError naming the first tensor with a non-finite gradient;
// in that case nothing is modified.
void adam_step(Network& params, const Network& grads, AdamState& state);

// Tracks dev perplexity; signals a stop after `patience` consecutive
// evaluations without improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  struct Decision {
    bool improved = false;
    bool stop = false;
  };
  Decision observe(double dev_perplexity);

  double best() const { return best_; }
  std::size_t best_index() const { return best_index_; }

 private:
  std::size_t patience_;
  std::size_t seen_ = 0;
  std::size_t stale_ = 0;
  std::size_t best_index_ = 0;
  double best_;
};

double perplexity(const Network& net, std::span<const TranslationInstance> instances,
                  std::size_t threads = 1);
// Fraction of instances whose argmax label equals the target.
double accuracy(const Network& net, std::span<const TranslationInstance> instances,
                std::size_t threads = 1);

struct EvalRecord {
  std::size_t update = 0;
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean NLL per instance since the previous evaluation
  double dev_perplexity = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainResult {
  Network best;
  std::vector<EvalRecord> history;
  std::size_t best_evaluation = 0;
  std::size_t updates = 0;
  bool early_stopped = false;
};

// Summed-NLL minibatch Adam. Instances are reshuffled every epoch with a
// generator seeded from config.seed. With a non-empty dev set the network
// with the lowest dev perplexity is returned; otherwise the final one. When
// `log` is set, writes one TSV line per evaluation: update, train loss, dev
// perplexity.
TrainResult train(Network initial, std::span<const TranslationInstance> train_set,
                  std::span<const TranslationInstance> dev_set, const TrainConfig& config,
                  std::ostream* log = nullptr);

}  // namespace wic

#endif  // WIC_TRAIN_H_
