#ifndef WIC_NETWORK_H_
#define WIC_NETWORK_H_

// An encoder of one of the supported kinds with a softmax head on top. This
// is the unit the trainer optimizes and the checkpoint stores.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wic/baselines.h"
#include "wic/corpus.h"
#include "wic/model.h"

namespace wic {

enum class EncoderKind {
  kBiLstm,       // bidirectional LSTM (pretrained or random init)
  kForwardLstm,  // left-to-right only, hidden size doubled
  kMlp,          // tanh MLP over [word ; mean context]
};

std::string_view encoder_kind_name(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct Network {
  EncoderKind kind = EncoderKind::kBiLstm;
  BiLstmEncoder lstm;  // used by kBiLstm and kForwardLstm
  MlpEncoder mlp;      // used by kMlp
  SoftmaxHead head;

  std::size_t output_size() const;
  std::size_t vocab_size() const;

  friend bool operator==(const Network&, const Network&) = default;
};

Network zeros_like(const Network& net);

// Context vectors for every position of the sentence.
std::vector<Vector> encode(const Network& net, std::span<const WordId> ids);

// Adds the exact gradient of the summed NLL over `batch` into `grads`;
// returns the summed NLL.
double accumulate_loss_and_gradients(const Network& net,
                                     std::span<const TranslationInstance> batch,
                                     Network& grads);

// Per-instance -log p(target | source, position), in batch order.
std::vector<double> instance_nll(const Network& net, std::span<const TranslationInstance> batch,
                                 std::size_t threads = 1);

// Per-instance argmax label, in batch order.
std::vector<WordId> predict_labels(const Network& net,
                                   std::span<const TranslationInstance> batch,
                                   std::size_t threads = 1);

template <typename Net, typename Fn>
void for_each_network_tensor(Net& net, Fn&& fn) {
  if (net.kind == EncoderKind::kMlp) {
    for_each_tensor(net.mlp, "encoder.", fn);
  } else {
    for_each_tensor(net.lstm, "encoder.", fn);
  }
  for_each_tensor(net.head, "", fn);
}

std::size_t parameter_count(const Network& net);

// Flattened copy of all parameters in tensor order, and the inverse.
Vector flatten(const Network& net);
void unflatten(std::span<const double> values, Network& net);

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
// handled exactly once; results must be written to per-index slots.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace wic

#endif  // WIC_NETWORK_H_
