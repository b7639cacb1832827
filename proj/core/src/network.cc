#include "wic/network.h"

#include <algorithm>
#include <map>
#include <thread>

#include "wic/error.h"

namespace wic {

std::string_view encoder_kind_name(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::kBiLstm:
      return "bilstm";
    case EncoderKind::kForwardLstm:
      return "lstm";
    case EncoderKind::kMlp:
      return "mlp";
  }
  return "?";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "bilstm") return EncoderKind::kBiLstm;
  if (name == "lstm") return EncoderKind::kForwardLstm;
  if (name == "mlp") return EncoderKind::kMlp;
  throw std::invalid_argument("unknown encoder kind '" + std::string(name) +
                              "' (expected bilstm, lstm or mlp)");
}

std::size_t Network::output_size() const {
  return kind == EncoderKind::kMlp ? mlp.output_size() : lstm.output_size();
}

std::size_t Network::vocab_size() const {
  return kind == EncoderKind::kMlp ? mlp.vocab_size() : lstm.vocab_size();
}

Network zeros_like(const Network& net) {
  Network z;
  z.kind = net.kind;
  if (net.kind == EncoderKind::kMlp) {
    z.mlp = zeros_like(net.mlp);
  } else {
    z.lstm = zeros_like(net.lstm);
  }
  z.head = zeros_like(net.head);
  return z;
}

std::vector<Vector> encode(const Network& net, std::span<const WordId> ids) {
  if (net.kind == EncoderKind::kMlp) return mlp_encode_sentence(net.mlp, ids);
  return encode_bidirectional(net.lstm, ids);
}

namespace {

struct IdsLess {
  bool operator()(const std::vector<WordId>* a, const std::vector<WordId>* b) const {
    return *a < *b;
  }
};

struct Group {
  const std::vector<WordId>* ids;
  std::vector<std::size_t> members;  // indices into the batch
};

std::vector<Group> group_by_sentence(std::span<const TranslationInstance> batch) {
  std::vector<Group> groups;
  std::map<const std::vector<WordId>*, std::size_t, IdsLess> index;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto [it, fresh] = index.emplace(&batch[i].source_ids, groups.size());
    if (fresh) groups.push_back({&batch[i].source_ids, {}});
    groups[it->second].members.push_back(i);
  }
  return groups;
}

void check_instance(const Network& net, const TranslationInstance& inst) {
  WIC_CHECK(inst.position < inst.source_ids.size(),
            "instance position " << inst.position << " outside sentence of "
                                 << inst.source_ids.size());
  WIC_CHECK(inst.target_id >= 0 &&
                static_cast<std::size_t>(inst.target_id) < net.head.num_labels(),
            "target id " << inst.target_id << " outside head of " << net.head.num_labels());
}

}  // namespace

double accumulate_loss_and_gradients(const Network& net,
                                     std::span<const TranslationInstance> batch,
                                     Network& grads) {
  WIC_CHECK(!batch.empty(), "empty batch");
  WIC_CHECK(grads.kind == net.kind, "gradient holder has a different encoder kind");
  if (net.kind != EncoderKind::kMlp) {
    return accumulate_loss_and_gradients(net.lstm, net.head, batch, grads.lstm, grads.head);
  }
  WIC_CHECK(net.head.input_size() == net.mlp.output_size(), "head/encoder width mismatch");
  for (const auto& inst : batch) check_instance(net, inst);
  double loss = 0.0;
  for (const auto& group : group_by_sentence(batch)) {
    const auto outputs = mlp_encode_sentence(net.mlp, *group.ids);
    std::vector<Vector> output_grads(outputs.size(), Vector(net.output_size(), 0.0));
    for (std::size_t i : group.members) {
      const auto& inst = batch[i];
      loss += head_loss_and_gradients(net.head, outputs[inst.position],
                                      static_cast<std::size_t>(inst.target_id), grads.head,
                                      output_grads[inst.position]);
    }
    mlp_backprop(net.mlp, *group.ids, outputs, output_grads, grads.mlp);
  }
  return loss;
}

std::vector<double> instance_nll(const Network& net, std::span<const TranslationInstance> batch,
                                 std::size_t threads) {
  for (const auto& inst : batch) check_instance(net, inst);
  const auto groups = group_by_sentence(batch);
  std::vector<double> nll(batch.size(), 0.0);
  parallel_for(groups.size(), threads, [&](std::size_t g) {
    const auto outputs = encode(net, *groups[g].ids);
    for (std::size_t i : groups[g].members) {
      const auto& inst = batch[i];
      nll[i] = -log_softmax_at(head_logits(net.head, outputs[inst.position]),
                               static_cast<std::size_t>(inst.target_id));
    }
  });
  return nll;
}

std::vector<WordId> predict_labels(const Network& net,
                                   std::span<const TranslationInstance> batch,
                                   std::size_t threads) {
  const auto groups = group_by_sentence(batch);
  std::vector<WordId> labels(batch.size(), kUnkId);
  parallel_for(groups.size(), threads, [&](std::size_t g) {
    const auto outputs = encode(net, *groups[g].ids);
    for (std::size_t i : groups[g].members) {
      const auto logits = head_logits(net.head, outputs[batch[i].position]);
      labels[i] = static_cast<WordId>(std::max_element(logits.begin(), logits.end()) -
                                      logits.begin());
    }
  });
  return labels;
}

std::size_t parameter_count(const Network& net) {
  std::size_t n = 0;
  for_each_network_tensor(net, [&](const std::string&, std::span<const double> v, std::size_t,
                                   std::size_t) { n += v.size(); });
  return n;
}

Vector flatten(const Network& net) {
  Vector out;
  out.reserve(parameter_count(net));
  for_each_network_tensor(net, [&](const std::string&, std::span<const double> v, std::size_t,
                                   std::size_t) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

void unflatten(std::span<const double> values, Network& net) {
  WIC_CHECK(values.size() == parameter_count(net), "flat parameter vector has wrong length");
  std::size_t offset = 0;
  for_each_network_tensor(net, [&](const std::string&, std::span<double> v, std::size_t,
                                   std::size_t) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(offset), v.size(), v.begin());
    offset += v.size();
  });
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace wic
