#ifndef WIC_NUMKIT_H_
#define WIC_NUMKIT_H_

// Dense kernels, activations, initializers and seeded randomness shared by
// every other part of the toolkit. All training math is double precision.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace wic {

using Vector = std::vector<double>;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  static Matrix identity(std::size_t n);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Wx + b.
Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b);

// out += W x
void matvec_accumulate(const Matrix& w, std::span<const double> x, std::span<double> out);
// out += W^T y
void matvec_transpose_accumulate(const Matrix& w, std::span<const double> y,
                                 std::span<double> out);
// G += y x^T
void outer_accumulate(Matrix& g, std::span<const double> y, std::span<const double> x);

// exp(u - max u) / sum; never overflows for finite input.
Vector softmax_stable(std::span<const double> logits);
// log of softmax_stable(logits)[k], computed without forming exp of large values.
double log_softmax_at(std::span<const double> logits, std::size_t k);

double sigmoid(double x);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// Zero when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);
double max_abs(std::span<const double> a);

// mt19937_64 with the standard distributions on top. Not thread-safe; use
// one generator per worker.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    std::shuffle(items.begin(), items.end(), engine_);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct InitSpec {
  enum class Kind { kUniform, kGlorot, kOrthogonal };
  Kind kind = Kind::kGlorot;
  double bound = 0.0;  // only for kUniform

  static InitSpec uniform(double a) { return {Kind::kUniform, a}; }
  static InitSpec glorot() { return {Kind::kGlorot, 0.0}; }
  static InitSpec orthogonal() { return {Kind::kOrthogonal, 0.0}; }
};

// uniform(a): iid in [-a, a]. glorot: iid in +-sqrt(6 / (rows + cols)).
// orthogonal: Q factor of a QR decomposition of a standard-normal square
// matrix, signs fixed so that R has a positive diagonal.
Matrix init_matrix(std::size_t rows, std::size_t cols, InitSpec spec, SeededRng& rng);

class OracleFailure : public std::runtime_error {
 public:
  OracleFailure(const std::string& what, std::size_t coordinate)
      : std::runtime_error(what), coordinate_(coordinate) {}
  std::size_t coordinate() const { return coordinate_; }

 private:
  std::size_t coordinate_;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + eps e_k) - f(x - eps e_k)) / 2 eps.
Vector finite_difference_grad(const ScalarFunction& f, std::span<const double> x,
                              double epsilon);

}  // namespace wic

#endif  // WIC_NUMKIT_H_
