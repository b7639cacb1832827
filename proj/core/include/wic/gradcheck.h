#ifndef WIC_GRADCHECK_H_
#define WIC_GRADCHECK_H_

// Analytic gradients against central finite differences on a small random
// model and batch.

#include <cstddef>
#include <cstdint>
#include <string>

#include "wic/model.h"
#include "wic/network.h"

namespace wic {

struct GradCheckOptions {
  EncoderKind kind = EncoderKind::kBiLstm;
  PeepholeMode peephole = PeepholeMode::kFull;
  std::size_t embedding_size = 8;
  std::size_t hidden_size = 8;
  std::size_t source_vocab = 12;
  std::size_t target_vocab = 20;
  std::size_t sentence_length = 6;
  std::size_t batch = 4;
  double epsilon = 1e-4;
  // Denominator floor for the relative error, so that coordinates whose
  // gradient is ~0 are judged on absolute error.
  double floor = 1e-6;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t worst_coordinate = 0;  // within worst_tensor
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t parameters = 0;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

GradCheckReport gradient_check(std::uint64_t seed, const GradCheckOptions& options = {});

}  // namespace wic

#endif  // WIC_GRADCHECK_H_
