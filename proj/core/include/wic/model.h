#ifndef WIC_MODEL_H_
#define WIC_MODEL_H_

// Bidirectional peephole-LSTM word-in-context encoder, softmax heads, and
// exact backpropagation-through-time gradients of the summed negative log
// likelihood.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wic/corpus.h"
#include "wic/numkit.h"

namespace wic {

enum class PeepholeMode {
  kFull,      // W_c* are full d_h x d_h matrices
  kDiagonal,  // only the diagonal of W_c* is used (and trained)
};

// Pre-activation weights of one gate:
//   from_input * x_t + from_hidden * h_{t-1} + from_cell * c + bias
// The candidate gate has no cell term (from_cell is empty).
struct GateParams {
  Matrix from_input;
  Matrix from_hidden;
  Matrix from_cell;
  Vector bias;

  friend bool operator==(const GateParams&, const GateParams&) = default;
};

struct LstmDirectionParams {
  GateParams input;
  GateParams forget;
  GateParams candidate;
  GateParams output;
  PeepholeMode peephole = PeepholeMode::kFull;

  std::size_t input_size() const { return input.from_input.cols(); }
  std::size_t hidden_size() const { return input.bias.size(); }

  static LstmDirectionParams zeros(std::size_t input_size, std::size_t hidden_size,
                                   PeepholeMode mode = PeepholeMode::kFull);

  friend bool operator==(const LstmDirectionParams&, const LstmDirectionParams&) = default;
};

struct LstmState {
  Vector h;
  Vector c;
};

// Everything one step computes; kept for backpropagation.
struct LstmStepTrace {
  Vector x, h_prev, c_prev;
  Vector input_gate, forget_gate, candidate, output_gate;
  Vector c, tanh_c, h;
};

LstmStepTrace lstm_step_trace(const LstmDirectionParams& p, std::span<const double> x,
                              std::span<const double> h_prev, std::span<const double> c_prev);

// i = s(Wxi x + Whi h' + Wci c' + bi)
// f = s(Wxf x + Whf h' + Wcf c' + bf)
// c = f*c' + i*tanh(Wxc x + Whc h' + bc)
// o = s(Wxo x + Who h' + Wco c + bo)     (peeks at the new cell)
// h = o*tanh(c)
LstmState lstm_step(const LstmDirectionParams& p, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev);

// One embedding table shared by a left-to-right and an optional right-to-left
// LSTM. Without the backward direction this is the forward-only encoder.
struct BiLstmEncoder {
  Matrix embeddings;  // |V_src| x d
  LstmDirectionParams forward;
  std::optional<LstmDirectionParams> backward;

  std::size_t vocab_size() const { return embeddings.rows(); }
  std::size_t embedding_size() const { return embeddings.cols(); }
  std::size_t output_size() const {
    return forward.hidden_size() + (backward ? backward->hidden_size() : 0);
  }

  friend bool operator==(const BiLstmEncoder&, const BiLstmEncoder&) = default;
};

// h_t = [forward h_t ; backward h_t] for every position, both scans starting
// from zero (h, c).
std::vector<Vector> encode_bidirectional(const BiLstmEncoder& encoder,
                                         std::span<const WordId> source_ids);

struct SoftmaxHead {
  Matrix projection;  // |labels| x input width
  Vector bias;

  std::size_t num_labels() const { return bias.size(); }
  std::size_t input_size() const { return projection.cols(); }

  friend bool operator==(const SoftmaxHead&, const SoftmaxHead&) = default;
};

Vector head_logits(const SoftmaxHead& head, std::span<const double> h);
Vector head_distribution(const SoftmaxHead& head, std::span<const double> h);

// Forward caches of one encoded sentence.
struct EncoderTrace {
  std::vector<WordId> ids;
  std::vector<LstmStepTrace> forward;   // step k reads position k
  std::vector<LstmStepTrace> backward;  // step k reads position n-1-k
  std::vector<Vector> outputs;
};

EncoderTrace encode_with_trace(const BiLstmEncoder& encoder, std::span<const WordId> ids);

// Adds d loss / d params to `grads` given d loss / d outputs[t].
void backprop_encoder(const BiLstmEncoder& encoder, const EncoderTrace& trace,
                      const std::vector<Vector>& output_grads, BiLstmEncoder& grads);

// Zero-valued tensors with the same shapes.
BiLstmEncoder zeros_like(const BiLstmEncoder& encoder);
SoftmaxHead zeros_like(const SoftmaxHead& head);

// Adds the head's gradient contribution for one labeled context vector and
// returns -log p(label | h). d loss / d h is added to `h_grad`.
double head_loss_and_gradients(const SoftmaxHead& head, std::span<const double> h,
                               std::size_t label, SoftmaxHead& head_grads,
                               std::span<double> h_grad);

// Summed -log p(target | source, position) over the batch, and its exact
// gradient accumulated into the *_grads arguments. Instances with identical
// source sentences share one encoder pass.
double accumulate_loss_and_gradients(const BiLstmEncoder& encoder, const SoftmaxHead& head,
                                     std::span<const TranslationInstance> batch,
                                     BiLstmEncoder& encoder_grads, SoftmaxHead& head_grads);

struct ModelGradients {
  double loss = 0.0;
  BiLstmEncoder encoder;
  SoftmaxHead head;
};

ModelGradients loss_and_gradients(const BiLstmEncoder& encoder, const SoftmaxHead& head,
                                  std::span<const TranslationInstance> batch);

// Summed NLL without gradients.
double batch_loss(const BiLstmEncoder& encoder, const SoftmaxHead& head,
                  std::span<const TranslationInstance> batch);

namespace detail {

template <typename Gate, typename Fn>
void visit_gate(Gate& g, const std::string& prefix, Fn& fn) {
  fn(prefix + ".from_input", g.from_input.values(), g.from_input.rows(), g.from_input.cols());
  fn(prefix + ".from_hidden", g.from_hidden.values(), g.from_hidden.rows(),
     g.from_hidden.cols());
  if (!g.from_cell.empty()) {
    fn(prefix + ".from_cell", g.from_cell.values(), g.from_cell.rows(), g.from_cell.cols());
  }
  fn(prefix + ".bias", std::span(g.bias), g.bias.size(), std::size_t{1});
}

template <typename Dir, typename Fn>
void visit_direction(Dir& d, const std::string& prefix, Fn& fn) {
  visit_gate(d.input, prefix + ".input", fn);
  visit_gate(d.forget, prefix + ".forget", fn);
  visit_gate(d.candidate, prefix + ".candidate", fn);
  visit_gate(d.output, prefix + ".output", fn);
}

}  // namespace detail

// Visits every parameter tensor as (name, values, rows, cols) in a fixed
// declared order. Const overloads hand out read-only spans.
template <typename Fn>
void for_each_tensor(BiLstmEncoder& e, const std::string& prefix, Fn&& fn) {
  fn(prefix + "embeddings", e.embeddings.values(), e.embeddings.rows(), e.embeddings.cols());
  detail::visit_direction(e.forward, prefix + "forward", fn);
  if (e.backward) detail::visit_direction(*e.backward, prefix + "backward", fn);
}

template <typename Fn>
void for_each_tensor(const BiLstmEncoder& e, const std::string& prefix, Fn&& fn) {
  fn(prefix + "embeddings", e.embeddings.values(), e.embeddings.rows(), e.embeddings.cols());
  detail::visit_direction(e.forward, prefix + "forward", fn);
  if (e.backward) detail::visit_direction(*e.backward, prefix + "backward", fn);
}

template <typename Fn>
void for_each_tensor(SoftmaxHead& h, const std::string& prefix, Fn&& fn) {
  fn(prefix + "head.projection", h.projection.values(), h.projection.rows(),
     h.projection.cols());
  fn(prefix + "head.bias", std::span(h.bias), h.bias.size(), std::size_t{1});
}

template <typename Fn>
void for_each_tensor(const SoftmaxHead& h, const std::string& prefix, Fn&& fn) {
  fn(prefix + "head.projection", h.projection.values(), h.projection.rows(),
     h.projection.cols());
  fn(prefix + "head.bias", std::span(h.bias), h.bias.size(), std::size_t{1});
}

}  // namespace wic

#endif  // WIC_MODEL_H_
