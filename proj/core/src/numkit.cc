#include "wic/numkit.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "wic/error.h"

namespace wic {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b) {
  WIC_CHECK(w.cols() == x.size(), "affine: W is " << w.rows() << "x" << w.cols()
                                                  << ", x has " << x.size());
  WIC_CHECK(w.rows() == b.size(), "affine: W has " << w.rows() << " rows, b has "
                                                   << b.size());
  Vector y(b.begin(), b.end());
  matvec_accumulate(w, x, y);
  return y;
}

void matvec_accumulate(const Matrix& w, std::span<const double> x, std::span<double> out) {
  WIC_CHECK(w.cols() == x.size() && w.rows() == out.size(), "matvec dimension mismatch");
  const std::size_t cols = w.cols();
  const double* data = w.values().data();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* row = data + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
}

void matvec_transpose_accumulate(const Matrix& w, std::span<const double> y,
                                 std::span<double> out) {
  WIC_CHECK(w.rows() == y.size() && w.cols() == out.size(),
            "transposed matvec dimension mismatch");
  const std::size_t cols = w.cols();
  const double* data = w.values().data();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const double* row = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += row[c] * yr;
  }
}

void outer_accumulate(Matrix& g, std::span<const double> y, std::span<const double> x) {
  WIC_CHECK(g.rows() == y.size() && g.cols() == x.size(), "outer product dimension mismatch");
  const std::size_t cols = g.cols();
  double* data = g.values().data();
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* row = data + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += yr * x[c];
  }
}

Vector softmax_stable(std::span<const double> logits) {
  WIC_CHECK(!logits.empty(), "softmax of an empty vector");
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - peak);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

double log_softmax_at(std::span<const double> logits, std::size_t k) {
  WIC_CHECK(k < logits.size(), "log_softmax_at index " << k << " >= " << logits.size());
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double u : logits) total += std::exp(u - peak);
  return logits[k] - peak - std::log(total);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  WIC_CHECK(a.size() == b.size(), "dot of " << a.size() << " and " << b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

namespace {

Matrix orthogonal(std::size_t n, SeededRng& rng) {
  Matrix a(n, n);
  for (double& v : a.values()) v = rng.normal();

  // Householder QR; reflectors kept for forming Q afterwards.
  std::vector<Vector> reflectors(n);
  Vector r_diag(n);
  for (std::size_t k = 0; k < n; ++k) {
    Vector v(n - k);
    double sq = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i - k] = a(i, k);
      sq += v[i - k] * v[i - k];
    }
    const double len = std::sqrt(sq);
    const double alpha = v[0] > 0.0 ? -len : len;
    r_diag[k] = alpha;
    v[0] -= alpha;
    const double vlen = norm(v);
    if (vlen == 0.0) continue;
    for (double& x : v) x /= vlen;
    for (std::size_t j = k; j < n; ++j) {
      double proj = 0.0;
      for (std::size_t i = k; i < n; ++i) proj += v[i - k] * a(i, j);
      for (std::size_t i = k; i < n; ++i) a(i, j) -= 2.0 * v[i - k] * proj;
    }
    reflectors[k] = std::move(v);
  }

  Matrix q = Matrix::identity(n);
  for (std::size_t kk = n; kk-- > 0;) {
    const Vector& v = reflectors[kk];
    if (v.empty()) continue;
    for (std::size_t j = 0; j < n; ++j) {
      double proj = 0.0;
      for (std::size_t i = kk; i < n; ++i) proj += v[i - kk] * q(i, j);
      for (std::size_t i = kk; i < n; ++i) q(i, j) -= 2.0 * v[i - kk] * proj;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (r_diag[j] < 0.0) {
      for (std::size_t i = 0; i < n; ++i) q(i, j) = -q(i, j);
    }
  }
  return q;
}

}  // namespace

Matrix init_matrix(std::size_t rows, std::size_t cols, InitSpec spec, SeededRng& rng) {
  WIC_CHECK(rows >= 1 && cols >= 1, "init_matrix needs positive dims, got " << rows << "x" << cols);
  switch (spec.kind) {
    case InitSpec::Kind::kUniform: {
      WIC_CHECK(spec.bound >= 0.0, "uniform bound must be non-negative");
      Matrix m(rows, cols);
      for (double& v : m.values()) v = rng.uniform(-spec.bound, spec.bound);
      return m;
    }
    case InitSpec::Kind::kGlorot: {
      const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
      Matrix m(rows, cols);
      for (double& v : m.values()) v = rng.uniform(-bound, bound);
      return m;
    }
    case InitSpec::Kind::kOrthogonal:
      WIC_CHECK(rows == cols, "orthogonal init needs a square matrix, got " << rows << "x" << cols);
      return orthogonal(rows, rng);
  }
  throw ContractViolation("init_matrix: unknown init kind");
}

Vector finite_difference_grad(const ScalarFunction& f, std::span<const double> x,
                              double epsilon) {
  WIC_CHECK(epsilon > 0.0, "finite difference step must be positive");
  Vector probe(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + epsilon;
    const double up = f(probe);
    probe[k] = saved - epsilon;
    const double down = f(probe);
    probe[k] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      std::ostringstream os;
      os << "finite difference: non-finite function value at coordinate " << k;
      throw OracleFailure(os.str(), k);
    }
    grad[k] = (up - down) / (2.0 * epsilon);
  }
  return grad;
}

}  // namespace wic
