#include "wic/baselines.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "wic/error.h"

namespace wic {

Vector context_mean(const Matrix& embeddings, std::span<const WordId> ids,
                    std::size_t position) {
  WIC_CHECK(!ids.empty(), "empty sentence");
  WIC_CHECK(position < ids.size(), "position " << position << " outside sentence");
  Vector mean(embeddings.cols(), 0.0);
  if (ids.size() == 1) return mean;
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (j == position) continue;
    const auto row = embeddings.row(ids[j]);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += row[k];
  }
  const double n = static_cast<double>(ids.size() - 1);
  for (double& v : mean) v /= n;
  return mean;
}

Vector mlp_encode(const MlpParams& p, const Matrix& embeddings, std::span<const WordId> ids,
                  std::size_t position) {
  WIC_CHECK(p.hidden.cols() == 2 * embeddings.cols(),
            "MLP expects input width " << p.hidden.cols() << ", got 2x" << embeddings.cols());
  for (WordId id : ids) {
    WIC_CHECK(id >= 0 && static_cast<std::size_t>(id) < embeddings.rows(),
              "word id " << id << " outside embedding table");
  }
  Vector input(embeddings.row(ids[position]).begin(), embeddings.row(ids[position]).end());
  const Vector mean = context_mean(embeddings, ids, position);
  input.insert(input.end(), mean.begin(), mean.end());
  Vector h = affine(p.hidden, input, p.bias);
  for (double& v : h) v = std::tanh(v);
  return h;
}

std::vector<Vector> mlp_encode_sentence(const MlpEncoder& encoder, std::span<const WordId> ids) {
  std::vector<Vector> out;
  out.reserve(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    out.push_back(mlp_encode(encoder.mlp, encoder.embeddings, ids, t));
  }
  return out;
}

void mlp_backprop(const MlpEncoder& encoder, std::span<const WordId> ids,
                  const std::vector<Vector>& outputs, const std::vector<Vector>& output_grads,
                  MlpEncoder& grads) {
  const std::size_t d = encoder.embeddings.cols();
  const std::size_t n = ids.size();
  WIC_CHECK(outputs.size() == n && output_grads.size() == n, "one output per position");
  Vector d_input(2 * d);
  for (std::size_t t = 0; t < n; ++t) {
    const Vector& h = outputs[t];
    const Vector& dh = output_grads[t];
    Vector d_pre(h.size());
    bool any = false;
    for (std::size_t k = 0; k < h.size(); ++k) {
      d_pre[k] = dh[k] * (1.0 - h[k] * h[k]);
      any = any || d_pre[k] != 0.0;
    }
    if (!any) continue;

    Vector input(encoder.embeddings.row(ids[t]).begin(), encoder.embeddings.row(ids[t]).end());
    const Vector mean = context_mean(encoder.embeddings, ids, t);
    input.insert(input.end(), mean.begin(), mean.end());
    outer_accumulate(grads.mlp.hidden, d_pre, input);
    for (std::size_t k = 0; k < d_pre.size(); ++k) grads.mlp.bias[k] += d_pre[k];

    std::fill(d_input.begin(), d_input.end(), 0.0);
    matvec_transpose_accumulate(encoder.mlp.hidden, d_pre, d_input);
    auto own = grads.embeddings.row(ids[t]);
    for (std::size_t k = 0; k < d; ++k) own[k] += d_input[k];
    if (n > 1) {
      const double scale = 1.0 / static_cast<double>(n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == t) continue;
        auto row = grads.embeddings.row(ids[j]);
        for (std::size_t k = 0; k < d; ++k) row[k] += d_input[d + k] * scale;
      }
    }
  }
}

MlpEncoder zeros_like(const MlpEncoder& encoder) {
  MlpEncoder z;
  z.embeddings = Matrix(encoder.embeddings.rows(), encoder.embeddings.cols());
  z.mlp.hidden = Matrix(encoder.mlp.hidden.rows(), encoder.mlp.hidden.cols());
  z.mlp.bias.assign(encoder.mlp.bias.size(), 0.0);
  return z;
}

void TypeVectorTable::add(const std::string& word, Vector v) {
  if (dim_ == 0 && vectors_.empty()) dim_ = v.size();
  WIC_CHECK(v.size() == dim_, "type vector for '" << word << "' has " << v.size()
                                                  << " entries, table dim is " << dim_);
  vectors_[word] = std::move(v);
}

const Vector* TypeVectorTable::find(const std::string& word) const {
  auto it = vectors_.find(word);
  return it == vectors_.end() ? nullptr : &it->second;
}

TypeVectorTable read_type_vectors(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("type vectors: missing 'count dim' header");
  std::istringstream header(line);
  std::size_t count = 0;
  std::size_t dim = 0;
  if (!(header >> count >> dim) || dim == 0) {
    throw ParseError("type vectors line 1: expected 'count dim'");
  }
  TypeVectorTable table(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!(fields >> v[k])) {
        throw ParseError("type vectors line " + std::to_string(line_no) + ": expected " +
                         std::to_string(dim) + " values");
      }
    }
    std::string extra;
    if (fields >> extra) {
      throw ParseError("type vectors line " + std::to_string(line_no) + ": more than " +
                       std::to_string(dim) + " values");
    }
    table.add(word, std::move(v));
  }
  if (table.size() != count) {
    throw ParseError("type vectors: header announces " + std::to_string(count) +
                     " words, file has " + std::to_string(table.size()));
  }
  return table;
}

TypeVectorTable load_type_vectors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  return read_type_vectors(in);
}

std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     if (a.count != b.count) return a.count > b.count;
                     return a.word < b.word;
                   });
  return candidates;
}

std::string type_vector_predict(const TypeVectorTable& table, const std::string& target,
                                const std::vector<Candidate>& candidates) {
  const Vector* target_vec = table.find(target);
  if (target_vec == nullptr) throw LookupError("no type vector for target '" + target + "'");
  const std::string* best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  const std::vector<Candidate> ranked = rank_candidates(candidates);
  for (const auto& cand : ranked) {
    const Vector* v = table.find(cand.word);
    if (v == nullptr) continue;
    const double score = cosine(*target_vec, *v);
    if (best == nullptr || score > best_score) {
      best = &cand.word;
      best_score = score;
    }
  }
  if (best == nullptr) {
    throw LookupError("none of the candidates for '" + target + "' has a type vector");
  }
  return *best;
}

}  // namespace wic
