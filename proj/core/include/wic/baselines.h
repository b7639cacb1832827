#ifndef WIC_BASELINES_H_
#define WIC_BASELINES_H_

// Comparison encoders: an MLP over [word ; mean of context words], and a
// context-insensitive nearest-type-vector substitute predictor.
//
// The forward-only LSTM and the randomly initialized bi-LSTM are not
// separate classes: init_network() with EncoderKind::kForwardLstm builds a
// BiLstmEncoder without a backward direction.

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "wic/corpus.h"
#include "wic/numkit.h"

namespace wic {

struct MlpParams {
  Matrix hidden;  // width x 2d
  Vector bias;    // width

  std::size_t output_size() const { return bias.size(); }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

struct MlpEncoder {
  Matrix embeddings;  // |V_src| x d
  MlpParams mlp;

  std::size_t vocab_size() const { return embeddings.rows(); }
  std::size_t output_size() const { return mlp.output_size(); }

  friend bool operator==(const MlpEncoder&, const MlpEncoder&) = default;
};

// Mean of the embeddings at every position except `position`; the zero
// vector for a one-word sentence.
Vector context_mean(const Matrix& embeddings, std::span<const WordId> ids,
                    std::size_t position);

// tanh(hidden * [x_t ; context_mean] + bias)
Vector mlp_encode(const MlpParams& p, const Matrix& embeddings, std::span<const WordId> ids,
                  std::size_t position);

std::vector<Vector> mlp_encode_sentence(const MlpEncoder& encoder, std::span<const WordId> ids);

// Adds d loss / d params given d loss / d output[t] for every position.
void mlp_backprop(const MlpEncoder& encoder, std::span<const WordId> ids,
                  const std::vector<Vector>& outputs, const std::vector<Vector>& output_grads,
                  MlpEncoder& grads);

MlpEncoder zeros_like(const MlpEncoder& encoder);

template <typename Fn>
void for_each_tensor(MlpEncoder& e, const std::string& prefix, Fn&& fn) {
  fn(prefix + "embeddings", e.embeddings.values(), e.embeddings.rows(), e.embeddings.cols());
  fn(prefix + "mlp.hidden", e.mlp.hidden.values(), e.mlp.hidden.rows(), e.mlp.hidden.cols());
  fn(prefix + "mlp.bias", std::span(e.mlp.bias), e.mlp.bias.size(), std::size_t{1});
}

template <typename Fn>
void for_each_tensor(const MlpEncoder& e, const std::string& prefix, Fn&& fn) {
  fn(prefix + "embeddings", e.embeddings.values(), e.embeddings.rows(), e.embeddings.cols());
  fn(prefix + "mlp.hidden", e.mlp.hidden.values(), e.mlp.hidden.rows(), e.mlp.hidden.cols());
  fn(prefix + "mlp.bias", std::span(e.mlp.bias), e.mlp.bias.size(), std::size_t{1});
}

// Externally trained type-level word vectors.
class TypeVectorTable {
 public:
  TypeVectorTable() = default;
  explicit TypeVectorTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  void add(const std::string& word, Vector v);
  const Vector* find(const std::string& word) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, Vector> vectors_;
};

// Text format: header "count dim", then "word v1 ... vdim" per line.
TypeVectorTable read_type_vectors(std::istream& in);
TypeVectorTable load_type_vectors(const std::string& path);

// A substitute candidate with the alignment mass used for ranking.
struct Candidate {
  std::string word;
  std::int64_t count = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

// Candidate order used for tie-breaking: count descending, then word.
std::vector<Candidate> rank_candidates(std::vector<Candidate> candidates);

// argmax_c cosine(table[target], table[c]). Candidates missing from the
// table are skipped; throws LookupError if the target or every candidate is
// missing.
std::string type_vector_predict(const TypeVectorTable& table, const std::string& target,
                                const std::vector<Candidate>& candidates);

}  // namespace wic

#endif  // WIC_BASELINES_H_
