// Encoder invariants over many random models and sentences.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support/helpers.h"
#include "wic/model.h"

namespace wic {
namespace {

using testing::random_ids;
using testing::random_matrix;
using testing::random_vector;

constexpr int kCases = 1000;

LstmDirectionParams random_direction(std::size_t in, std::size_t hidden, SeededRng& rng,
                                     double scale) {
  const auto mode = rng.index(2) ? PeepholeMode::kFull : PeepholeMode::kDiagonal;
  LstmDirectionParams p = LstmDirectionParams::zeros(in, hidden, mode);
  for (GateParams* g : {&p.input, &p.forget, &p.candidate, &p.output}) {
    g->from_input = random_matrix(hidden, in, rng, scale);
    g->from_hidden = random_matrix(hidden, hidden, rng, scale);
    if (!g->from_cell.empty()) g->from_cell = random_matrix(hidden, hidden, rng, scale);
    g->bias = random_vector(hidden, rng, scale);
  }
  return p;
}

struct Case {
  BiLstmEncoder encoder;
  std::vector<WordId> ids;
};

Case random_case(SeededRng& rng) {
  const std::size_t vocab = 2 + rng.index(10);
  const std::size_t d = 1 + rng.index(5);
  const std::size_t hidden = 1 + rng.index(5);
  // Occasionally extreme weights, to push gates into saturation.
  const double scale = rng.index(5) == 0 ? 20.0 : 1.0;
  Case c;
  c.encoder.embeddings = random_matrix(vocab, d, rng, scale);
  c.encoder.forward = random_direction(d, hidden, rng, scale);
  c.encoder.backward = random_direction(d, hidden, rng, scale);
  c.ids = random_ids(1 + rng.index(12), vocab, rng);
  return c;
}

TEST(EncoderInvariants, ContextVectorEntriesInsideOpenUnitInterval) {
  SeededRng rng(2024);
  for (int k = 0; k < kCases; ++k) {
    const Case c = random_case(rng);
    for (const auto& h : encode_bidirectional(c.encoder, c.ids)) {
      ASSERT_EQ(h.size(), c.encoder.output_size());
      for (double v : h) {
        ASSERT_GT(v, -1.0) << "case " << k;
        ASSERT_LT(v, 1.0) << "case " << k;
      }
    }
  }
}

TEST(EncoderInvariants, GatesInsideOpenUnitInterval) {
  SeededRng rng(7);
  for (int k = 0; k < kCases; ++k) {
    const std::size_t in = 1 + rng.index(4), hidden = 1 + rng.index(4);
    const auto p = random_direction(in, hidden, rng, 1.0);
    const auto t = lstm_step_trace(p, random_vector(in, rng, 3.0), random_vector(hidden, rng),
                                   random_vector(hidden, rng, 3.0));
    for (const Vector* gate : {&t.input_gate, &t.forget_gate, &t.output_gate}) {
      for (double v : *gate) {
        ASSERT_GT(v, 0.0);
        ASSERT_LT(v, 1.0);
      }
    }
  }
}

TEST(EncoderInvariants, DirectionSwapAndReversalSymmetryIsExact) {
  SeededRng rng(99);
  for (int k = 0; k < kCases; ++k) {
    const Case c = random_case(rng);
    BiLstmEncoder swapped = c.encoder;
    std::swap(swapped.forward, *swapped.backward);
    std::vector<WordId> reversed(c.ids.rbegin(), c.ids.rend());
    const auto a = encode_bidirectional(c.encoder, c.ids);
    const auto b = encode_bidirectional(swapped, reversed);
    const std::size_t n = c.ids.size();
    const std::size_t half = c.encoder.forward.hidden_size();
    for (std::size_t t = 0; t < n; ++t) {
      const auto& x = a[t];
      const auto& y = b[n - 1 - t];
      for (std::size_t j = 0; j < half; ++j) {
        ASSERT_EQ(x[j], y[half + j]);
        ASSERT_EQ(x[half + j], y[j]);
      }
    }
  }
}

TEST(EncoderInvariants, HeadDistributionNormalized) {
  SeededRng rng(5);
  for (int k = 0; k < kCases; ++k) {
    const std::size_t labels = 1 + rng.index(200);
    const std::size_t width = 1 + rng.index(12);
    const double scale = rng.index(4) == 0 ? 100.0 : 1.0;
    const SoftmaxHead head{random_matrix(labels, width, rng, scale),
                           random_vector(labels, rng, scale)};
    const Vector p = head_distribution(head, random_vector(width, rng, 0.999));
    double sum = 0.0;
    for (double v : p) {
      ASSERT_GE(v, 0.0);
      sum += v;
    }
    ASSERT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(EncoderInvariants, EncodingIsDeterministic) {
  SeededRng rng(31);
  for (int k = 0; k < kCases; ++k) {
    const Case c = random_case(rng);
    ASSERT_EQ(encode_bidirectional(c.encoder, c.ids), encode_bidirectional(c.encoder, c.ids));
  }
}

}  // namespace
}  // namespace wic
