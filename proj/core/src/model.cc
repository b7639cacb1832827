#include "wic/model.h"

#include <cmath>
#include <map>

#include "wic/error.h"

namespace wic {

namespace {

GateParams zero_gate(std::size_t in, std::size_t hidden, bool peephole) {
  GateParams g;
  g.from_input = Matrix(hidden, in);
  g.from_hidden = Matrix(hidden, hidden);
  if (peephole) g.from_cell = Matrix(hidden, hidden);
  g.bias.assign(hidden, 0.0);
  return g;
}

GateParams zeros_like(const GateParams& g) {
  GateParams z;
  z.from_input = Matrix(g.from_input.rows(), g.from_input.cols());
  z.from_hidden = Matrix(g.from_hidden.rows(), g.from_hidden.cols());
  z.from_cell = Matrix(g.from_cell.rows(), g.from_cell.cols());
  z.bias.assign(g.bias.size(), 0.0);
  return z;
}

LstmDirectionParams zeros_like(const LstmDirectionParams& d) {
  LstmDirectionParams z;
  z.input = zeros_like(d.input);
  z.forget = zeros_like(d.forget);
  z.candidate = zeros_like(d.candidate);
  z.output = zeros_like(d.output);
  z.peephole = d.peephole;
  return z;
}

void peephole_accumulate(const Matrix& w, PeepholeMode mode, std::span<const double> c,
                         std::span<double> out) {
  if (mode == PeepholeMode::kFull) {
    matvec_accumulate(w, c, out);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w(i, i) * c[i];
  }
}

void peephole_backprop(const Matrix& w, PeepholeMode mode, std::span<const double> c,
                       std::span<const double> d_pre, Matrix& w_grad,
                       std::span<double> c_grad) {
  if (mode == PeepholeMode::kFull) {
    matvec_transpose_accumulate(w, d_pre, c_grad);
    outer_accumulate(w_grad, d_pre, c);
  } else {
    for (std::size_t i = 0; i < d_pre.size(); ++i) {
      c_grad[i] += w(i, i) * d_pre[i];
      w_grad(i, i) += d_pre[i] * c[i];
    }
  }
}

// from_input * x + from_hidden * h + bias (cell term added separately).
Vector gate_pre_activation(const GateParams& g, std::span<const double> x,
                           std::span<const double> h) {
  Vector pre = affine(g.from_input, x, g.bias);
  matvec_accumulate(g.from_hidden, h, pre);
  return pre;
}

void check_direction(const LstmDirectionParams& p, std::size_t x, std::size_t h,
                     std::size_t c) {
  const std::size_t hidden = p.hidden_size();
  WIC_CHECK(x == p.input_size(), "lstm input has " << x << " entries, expected "
                                                   << p.input_size());
  WIC_CHECK(h == hidden && c == hidden, "lstm state sizes " << h << "/" << c
                                                            << " do not match hidden size "
                                                            << hidden);
}

// Adds the gradients of one gate's affine pre-activation.
void backprop_gate_affine(const GateParams& g, const LstmStepTrace& s,
                          std::span<const double> d_pre, GateParams& grads,
                          std::span<double> dx, std::span<double> dh_prev) {
  outer_accumulate(grads.from_input, d_pre, s.x);
  outer_accumulate(grads.from_hidden, d_pre, s.h_prev);
  for (std::size_t i = 0; i < d_pre.size(); ++i) grads.bias[i] += d_pre[i];
  matvec_transpose_accumulate(g.from_input, d_pre, dx);
  matvec_transpose_accumulate(g.from_hidden, d_pre, dh_prev);
}

// One step of BPTT. dh is the total gradient reaching h_t, dc_next the
// gradient reaching c_t through c_{t+1}. Writes the gradients with respect to
// x_t, h_{t-1} and c_{t-1}.
void backprop_step(const LstmDirectionParams& p, const LstmStepTrace& s,
                   std::span<const double> dh, std::span<const double> dc_next,
                   LstmDirectionParams& grads, std::span<double> dx, std::span<double> dh_prev,
                   std::span<double> dc_prev) {
  const std::size_t n = p.hidden_size();
  Vector d_output_pre(n), dc(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double o = s.output_gate[k];
    const double d_o = dh[k] * s.tanh_c[k];
    d_output_pre[k] = d_o * o * (1.0 - o);
    dc[k] = dc_next[k] + dh[k] * o * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
  }
  // Output gate peeks at c_t.
  peephole_backprop(p.output.from_cell, p.peephole, s.c, d_output_pre, grads.output.from_cell,
                    dc);

  Vector d_input_pre(n), d_forget_pre(n), d_candidate_pre(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double i = s.input_gate[k];
    const double f = s.forget_gate[k];
    const double g = s.candidate[k];
    d_input_pre[k] = dc[k] * g * i * (1.0 - i);
    d_forget_pre[k] = dc[k] * s.c_prev[k] * f * (1.0 - f);
    d_candidate_pre[k] = dc[k] * i * (1.0 - g * g);
    dc_prev[k] = dc[k] * f;
  }
  peephole_backprop(p.input.from_cell, p.peephole, s.c_prev, d_input_pre,
                    grads.input.from_cell, dc_prev);
  peephole_backprop(p.forget.from_cell, p.peephole, s.c_prev, d_forget_pre,
                    grads.forget.from_cell, dc_prev);

  backprop_gate_affine(p.input, s, d_input_pre, grads.input, dx, dh_prev);
  backprop_gate_affine(p.forget, s, d_forget_pre, grads.forget, dx, dh_prev);
  backprop_gate_affine(p.candidate, s, d_candidate_pre, grads.candidate, dx, dh_prev);
  backprop_gate_affine(p.output, s, d_output_pre, grads.output, dx, dh_prev);
}

std::vector<LstmStepTrace> scan(const LstmDirectionParams& p, const Matrix& embeddings,
                                std::span<const WordId> ids, bool reverse) {
  const std::size_t n = ids.size();
  const std::size_t hidden = p.hidden_size();
  std::vector<LstmStepTrace> steps;
  steps.reserve(n);
  Vector h(hidden, 0.0), c(hidden, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pos = reverse ? n - 1 - k : k;
    steps.push_back(lstm_step_trace(p, embeddings.row(ids[pos]), h, c));
    h = steps.back().h;
    c = steps.back().c;
  }
  return steps;
}

void backprop_scan(const LstmDirectionParams& p, const std::vector<LstmStepTrace>& steps,
                   std::span<const WordId> ids, bool reverse,
                   const std::vector<Vector>& output_grads, std::size_t offset,
                   LstmDirectionParams& grads, Matrix& embedding_grads) {
  const std::size_t n = steps.size();
  const std::size_t hidden = p.hidden_size();
  Vector dh_next(hidden, 0.0), dc_next(hidden, 0.0);
  Vector dh(hidden), dx(p.input_size()), dh_prev(hidden), dc_prev(hidden);
  for (std::size_t k = n; k-- > 0;) {
    const std::size_t pos = reverse ? n - 1 - k : k;
    for (std::size_t j = 0; j < hidden; ++j) dh[j] = dh_next[j] + output_grads[pos][offset + j];
    std::fill(dx.begin(), dx.end(), 0.0);
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    backprop_step(p, steps[k], dh, dc_next, grads, dx, dh_prev, dc_prev);
    auto row = embedding_grads.row(ids[pos]);
    for (std::size_t j = 0; j < dx.size(); ++j) row[j] += dx[j];
    dh_next.swap(dh_prev);
    dc_next.swap(dc_prev);
  }
}

void check_ids(const BiLstmEncoder& encoder, std::span<const WordId> ids) {
  WIC_CHECK(!ids.empty(), "cannot encode an empty sentence");
  for (WordId id : ids) {
    WIC_CHECK(id >= 0 && static_cast<std::size_t>(id) < encoder.vocab_size(),
              "word id " << id << " outside embedding table of " << encoder.vocab_size());
  }
}

}  // namespace

LstmDirectionParams LstmDirectionParams::zeros(std::size_t input_size, std::size_t hidden_size,
                                               PeepholeMode mode) {
  LstmDirectionParams p;
  p.input = zero_gate(input_size, hidden_size, true);
  p.forget = zero_gate(input_size, hidden_size, true);
  p.candidate = zero_gate(input_size, hidden_size, false);
  p.output = zero_gate(input_size, hidden_size, true);
  p.peephole = mode;
  return p;
}

LstmStepTrace lstm_step_trace(const LstmDirectionParams& p, std::span<const double> x,
                              std::span<const double> h_prev, std::span<const double> c_prev) {
  check_direction(p, x.size(), h_prev.size(), c_prev.size());
  const std::size_t n = p.hidden_size();
  LstmStepTrace s;
  s.x.assign(x.begin(), x.end());
  s.h_prev.assign(h_prev.begin(), h_prev.end());
  s.c_prev.assign(c_prev.begin(), c_prev.end());

  s.input_gate = gate_pre_activation(p.input, x, h_prev);
  peephole_accumulate(p.input.from_cell, p.peephole, c_prev, s.input_gate);
  s.forget_gate = gate_pre_activation(p.forget, x, h_prev);
  peephole_accumulate(p.forget.from_cell, p.peephole, c_prev, s.forget_gate);
  s.candidate = gate_pre_activation(p.candidate, x, h_prev);

  s.c.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.input_gate[k] = sigmoid(s.input_gate[k]);
    s.forget_gate[k] = sigmoid(s.forget_gate[k]);
    s.candidate[k] = std::tanh(s.candidate[k]);
    s.c[k] = s.forget_gate[k] * c_prev[k] + s.input_gate[k] * s.candidate[k];
  }

  s.output_gate = gate_pre_activation(p.output, x, h_prev);
  peephole_accumulate(p.output.from_cell, p.peephole, s.c, s.output_gate);
  s.tanh_c.resize(n);
  s.h.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.output_gate[k] = sigmoid(s.output_gate[k]);
    s.tanh_c[k] = std::tanh(s.c[k]);
    s.h[k] = s.output_gate[k] * s.tanh_c[k];
  }
  return s;
}

LstmState lstm_step(const LstmDirectionParams& p, std::span<const double> x,
                    std::span<const double> h_prev, std::span<const double> c_prev) {
  LstmStepTrace s = lstm_step_trace(p, x, h_prev, c_prev);
  return {std::move(s.h), std::move(s.c)};
}

EncoderTrace encode_with_trace(const BiLstmEncoder& encoder, std::span<const WordId> ids) {
  check_ids(encoder, ids);
  WIC_CHECK(encoder.forward.input_size() == encoder.embedding_size(),
            "forward LSTM input size does not match embedding size");
  EncoderTrace trace;
  trace.ids.assign(ids.begin(), ids.end());
  trace.forward = scan(encoder.forward, encoder.embeddings, ids, false);
  if (encoder.backward) {
    WIC_CHECK(encoder.backward->input_size() == encoder.embedding_size(),
              "backward LSTM input size does not match embedding size");
    trace.backward = scan(*encoder.backward, encoder.embeddings, ids, true);
  }
  const std::size_t n = ids.size();
  trace.outputs.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    Vector& out = trace.outputs[t];
    out.reserve(encoder.output_size());
    out = trace.forward[t].h;
    if (encoder.backward) {
      const Vector& back = trace.backward[n - 1 - t].h;
      out.insert(out.end(), back.begin(), back.end());
    }
  }
  return trace;
}

std::vector<Vector> encode_bidirectional(const BiLstmEncoder& encoder,
                                         std::span<const WordId> source_ids) {
  return encode_with_trace(encoder, source_ids).outputs;
}

void backprop_encoder(const BiLstmEncoder& encoder, const EncoderTrace& trace,
                      const std::vector<Vector>& output_grads, BiLstmEncoder& grads) {
  WIC_CHECK(output_grads.size() == trace.ids.size(), "one output gradient per position");
  backprop_scan(encoder.forward, trace.forward, trace.ids, false, output_grads, 0,
                grads.forward, grads.embeddings);
  if (encoder.backward) {
    WIC_CHECK(grads.backward.has_value(), "gradient holder lacks the backward direction");
    backprop_scan(*encoder.backward, trace.backward, trace.ids, true, output_grads,
                  encoder.forward.hidden_size(), *grads.backward, grads.embeddings);
  }
}

BiLstmEncoder zeros_like(const BiLstmEncoder& encoder) {
  BiLstmEncoder z;
  z.embeddings = Matrix(encoder.embeddings.rows(), encoder.embeddings.cols());
  z.forward = zeros_like(encoder.forward);
  if (encoder.backward) z.backward = zeros_like(*encoder.backward);
  return z;
}

SoftmaxHead zeros_like(const SoftmaxHead& head) {
  return {Matrix(head.projection.rows(), head.projection.cols()),
          Vector(head.bias.size(), 0.0)};
}

Vector head_logits(const SoftmaxHead& head, std::span<const double> h) {
  return affine(head.projection, h, head.bias);
}

Vector head_distribution(const SoftmaxHead& head, std::span<const double> h) {
  return softmax_stable(head_logits(head, h));
}

double head_loss_and_gradients(const SoftmaxHead& head, std::span<const double> h,
                               std::size_t label, SoftmaxHead& head_grads,
                               std::span<double> h_grad) {
  WIC_CHECK(label < head.num_labels(), "label " << label << " outside head of "
                                                << head.num_labels());
  const Vector logits = head_logits(head, h);
  const double loss = -log_softmax_at(logits, label);
  Vector d_logits = softmax_stable(logits);
  d_logits[label] -= 1.0;
  outer_accumulate(head_grads.projection, d_logits, h);
  for (std::size_t k = 0; k < d_logits.size(); ++k) head_grads.bias[k] += d_logits[k];
  matvec_transpose_accumulate(head.projection, d_logits, h_grad);
  return loss;
}

namespace {

struct SentenceGroup {
  const std::vector<WordId>* ids;
  std::vector<const TranslationInstance*> members;
};

struct IdsLess {
  bool operator()(const std::vector<WordId>* a, const std::vector<WordId>* b) const {
    return *a < *b;
  }
};

// Instances grouped by sentence, groups in order of first appearance.
std::vector<SentenceGroup> group_by_sentence(std::span<const TranslationInstance> batch) {
  std::vector<SentenceGroup> groups;
  std::map<const std::vector<WordId>*, std::size_t, IdsLess> index;
  for (const auto& inst : batch) {
    auto [it, fresh] = index.emplace(&inst.source_ids, groups.size());
    if (fresh) groups.push_back({&inst.source_ids, {}});
    groups[it->second].members.push_back(&inst);
  }
  return groups;
}

void check_instance(const BiLstmEncoder& encoder, const SoftmaxHead& head,
                    const TranslationInstance& inst) {
  WIC_CHECK(inst.position < inst.source_ids.size(),
            "instance position " << inst.position << " outside sentence of "
                                 << inst.source_ids.size());
  WIC_CHECK(inst.target_id >= 0 && static_cast<std::size_t>(inst.target_id) < head.num_labels(),
            "target id " << inst.target_id << " outside head of " << head.num_labels());
  WIC_CHECK(head.input_size() == encoder.output_size(),
            "head expects " << head.input_size() << " inputs, encoder yields "
                            << encoder.output_size());
}

}  // namespace

double accumulate_loss_and_gradients(const BiLstmEncoder& encoder, const SoftmaxHead& head,
                                     std::span<const TranslationInstance> batch,
                                     BiLstmEncoder& encoder_grads, SoftmaxHead& head_grads) {
  WIC_CHECK(!batch.empty(), "empty batch");
  for (const auto& inst : batch) check_instance(encoder, head, inst);
  double loss = 0.0;
  for (const auto& group : group_by_sentence(batch)) {
    const EncoderTrace trace = encode_with_trace(encoder, *group.ids);
    std::vector<Vector> output_grads(trace.outputs.size(), Vector(encoder.output_size(), 0.0));
    for (const TranslationInstance* inst : group.members) {
      loss += head_loss_and_gradients(head, trace.outputs[inst->position],
                                      static_cast<std::size_t>(inst->target_id), head_grads,
                                      output_grads[inst->position]);
    }
    backprop_encoder(encoder, trace, output_grads, encoder_grads);
  }
  return loss;
}

ModelGradients loss_and_gradients(const BiLstmEncoder& encoder, const SoftmaxHead& head,
                                  std::span<const TranslationInstance> batch) {
  ModelGradients g{0.0, zeros_like(encoder), zeros_like(head)};
  g.loss = accumulate_loss_and_gradients(encoder, head, batch, g.encoder, g.head);
  return g;
}

double batch_loss(const BiLstmEncoder& encoder, const SoftmaxHead& head,
                  std::span<const TranslationInstance> batch) {
  WIC_CHECK(!batch.empty(), "empty batch");
  for (const auto& inst : batch) check_instance(encoder, head, inst);
  double loss = 0.0;
  for (const auto& group : group_by_sentence(batch)) {
    const std::vector<Vector> outputs = encode_bidirectional(encoder, *group.ids);
    for (const TranslationInstance* inst : group.members) {
      loss -= log_softmax_at(head_logits(head, outputs[inst->position]),
                             static_cast<std::size_t>(inst->target_id));
    }
  }
  return loss;
}

}  // namespace wic
