#include "wic/checkpoint.h"

#include <zlib.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "wic/error.h"

namespace wic {

namespace {

using nlohmann::json;

constexpr std::array<char, 8> kMagic = {'W', 'I', 'C', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint32_t checksum(const std::string& bytes, std::size_t length) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(length));
  return static_cast<std::uint32_t>(crc);
}

json config_to_json(const TrainConfig& c) {
  return json{
      {"batch_size", c.batch_size},
      {"eval_every", c.eval_every},
      {"patience", c.patience},
      {"max_epochs", c.max_epochs},
      {"seed", c.seed},
      {"embedding_size", c.embedding_size},
      {"hidden_size", c.hidden_size},
      {"embedding_init", c.embedding_init},
      {"peephole", c.peephole == PeepholeMode::kFull ? "full" : "diagonal"},
      {"learning_rate", c.adam.learning_rate},
      {"beta1", c.adam.beta1},
      {"beta2", c.adam.beta2},
      {"epsilon", c.adam.epsilon},
      {"threads", c.threads},
      {"target_perplexity", c.target_perplexity},
  };
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.eval_every = j.at("eval_every").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.embedding_size = j.at("embedding_size").get<std::size_t>();
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.embedding_init = j.at("embedding_init").get<double>();
  const std::string peephole = j.at("peephole").get<std::string>();
  if (peephole != "full" && peephole != "diagonal") {
    throw FormatError("checkpoint: unknown peephole mode '" + peephole + "'");
  }
  c.peephole = peephole == "full" ? PeepholeMode::kFull : PeepholeMode::kDiagonal;
  c.adam.learning_rate = j.at("learning_rate").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.epsilon = j.at("epsilon").get<double>();
  c.threads = j.at("threads").get<std::size_t>();
  c.target_perplexity = j.at("target_perplexity").get<double>();
  return c;
}

json vocab_to_json(const Vocabulary& v) {
  json entries = json::array();
  for (const auto& e : v.entries()) entries.push_back(json::array({e.word, e.count}));
  return entries;
}

Vocabulary vocab_from_json(const json& j) {
  std::vector<VocabEntry> entries;
  for (const auto& e : j) {
    entries.push_back({e.at(0).get<std::string>(), e.at(1).get<std::int64_t>()});
  }
  try {
    return Vocabulary(std::move(entries));
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("checkpoint: invalid vocabulary: ") + e.what());
  }
}

std::size_t hidden_size_of(const Network& net) {
  return net.output_size() / 2;
}

}  // namespace

void round_to_storage_precision(Network& net) {
  for_each_network_tensor(net, [](const std::string&, std::span<double> v, std::size_t,
                                  std::size_t) {
    for (double& x : v) x = static_cast<double>(static_cast<float>(x));
  });
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const Network& net = ckpt.network;
  WIC_CHECK(net.vocab_size() == ckpt.source_vocab.size(),
            "embedding rows " << net.vocab_size() << " != source vocabulary "
                              << ckpt.source_vocab.size());
  WIC_CHECK(net.head.num_labels() == ckpt.target_vocab.size(),
            "head rows " << net.head.num_labels() << " != target vocabulary "
                         << ckpt.target_vocab.size());

  json meta;
  meta["config"] = config_to_json(ckpt.config);
  meta["encoder"] = std::string(encoder_kind_name(net.kind));
  meta["embedding_size"] = net.kind == EncoderKind::kMlp ? net.mlp.embeddings.cols()
                                                         : net.lstm.embeddings.cols();
  meta["hidden_size"] = hidden_size_of(net);
  meta["peephole"] = (net.kind != EncoderKind::kMlp &&
                      net.lstm.forward.peephole == PeepholeMode::kDiagonal)
                         ? "diagonal"
                         : "full";
  meta["source_vocab"] = vocab_to_json(ckpt.source_vocab);
  meta["target_vocab"] = vocab_to_json(ckpt.target_vocab);
  json tensors = json::array();
  for_each_network_tensor(net, [&](const std::string& name, std::span<const double>,
                                   std::size_t rows, std::size_t cols) {
    tensors.push_back(json{{"name", name}, {"rows", rows}, {"cols", cols}});
  });
  meta["tensors"] = tensors;
  const std::string meta_text = meta.dump();

  std::string buf(kMagic.begin(), kMagic.end());
  put_u32(buf, kCheckpointVersion);
  put_u64(buf, meta_text.size());
  buf += meta_text;
  for_each_network_tensor(net, [&](const std::string&, std::span<const double> v, std::size_t,
                                   std::size_t) {
    for (double x : v) put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  });
  put_u32(buf, checksum(buf, buf.size()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(buf.data());

  if (buf.size() < kMagic.size() || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("checkpoint: bad magic bytes (not a wic checkpoint)");
  }
  std::size_t pos = kMagic.size();
  if (buf.size() < pos + 4 + 8) throw CorruptionError("checkpoint: truncated header");
  const std::uint32_t version = get_u32(bytes + pos);
  pos += 4;
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version) +
                      " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  // With a checksum mismatch, unreadable metadata is corruption, not a format error.
  const bool crc_ok = buf.size() >= pos + 8 + 4 &&
                      get_u32(bytes + buf.size() - 4) == checksum(buf, buf.size() - 4);
  auto metadata_error = [&](const std::string& what) {
    if (!crc_ok) throw CorruptionError("checkpoint: damaged metadata (" + what + ")");
    throw FormatError("checkpoint: " + what);
  };
  const std::uint64_t meta_len = get_u64(bytes + pos);
  pos += 8;
  if (meta_len > buf.size() - pos) throw CorruptionError("checkpoint: truncated metadata");
  const std::string meta_text = buf.substr(pos, meta_len);
  pos += meta_len;

  json meta;
  try {
    meta = json::parse(meta_text);
  } catch (const json::exception& e) {
    metadata_error(std::string("unreadable metadata: ") + e.what());
  }

  Checkpoint ckpt;
  std::vector<std::tuple<std::string, std::size_t, std::size_t>> declared;
  try {
    ckpt.config = config_from_json(meta.at("config"));
    ckpt.source_vocab = vocab_from_json(meta.at("source_vocab"));
    ckpt.target_vocab = vocab_from_json(meta.at("target_vocab"));
    const EncoderKind kind = parse_encoder_kind(meta.at("encoder").get<std::string>());
    const std::string peephole = meta.at("peephole").get<std::string>();
    ckpt.network = make_network_shape(
        kind, ckpt.source_vocab.size(), ckpt.target_vocab.size(),
        meta.at("embedding_size").get<std::size_t>(), meta.at("hidden_size").get<std::size_t>(),
        peephole == "diagonal" ? PeepholeMode::kDiagonal : PeepholeMode::kFull);
    for (const auto& t : meta.at("tensors")) {
      declared.emplace_back(t.at("name").get<std::string>(), t.at("rows").get<std::size_t>(),
                            t.at("cols").get<std::size_t>());
    }
  } catch (const json::exception& e) {
    metadata_error(std::string("incomplete metadata: ") + e.what());
  } catch (const FormatError& e) {
    metadata_error(e.what());
  } catch (const std::invalid_argument& e) {
    metadata_error(e.what());
  } catch (const ContractViolation& e) {
    metadata_error(std::string("inconsistent metadata: ") + e.what());
  }

  std::size_t k = 0;
  for_each_network_tensor(ckpt.network, [&](const std::string& name, std::span<double> v,
                                            std::size_t rows, std::size_t cols) {
    if (k >= declared.size() || std::get<0>(declared[k]) != name ||
        std::get<1>(declared[k]) != rows || std::get<2>(declared[k]) != cols) {
      throw FormatError("checkpoint: tensor declaration mismatch at '" + name + "'");
    }
    ++k;
    if (buf.size() - pos < 4 * v.size()) {
      throw CorruptionError("checkpoint: truncated tensor section in '" + name + "'");
    }
    for (double& x : v) {
      x = static_cast<double>(std::bit_cast<float>(get_u32(bytes + pos)));
      pos += 4;
    }
  });
  if (k != declared.size()) throw FormatError("checkpoint: extra tensors declared");
  if (buf.size() - pos < 4) throw CorruptionError("checkpoint: missing checksum");
  if (buf.size() - pos > 4) throw CorruptionError("checkpoint: trailing bytes after checksum");
  if (get_u32(bytes + pos) != checksum(buf, pos)) {
    throw CorruptionError("checkpoint: checksum mismatch");
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return read_checkpoint(in);
}

}  // namespace wic
