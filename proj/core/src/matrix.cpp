#include "spur/matrix.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "spur/error.hpp"

#if defined(__AVX512F__) && defined(FP_FAST_FMA)
#include <immintrin.h>
#endif

namespace spur {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(rows, cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Matrix::fill(double value) noexcept {
  for (double& v : data_) v = value;
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

std::string shape_string(const Matrix& m) { return shape_string(m.rows(), m.cols()); }

namespace {

#if defined(__AVX512F__) && defined(FP_FAST_FMA)
#define SPUR_GEMM_AVX512 1
constexpr std::size_t kTileRows = 8;
constexpr std::size_t kTileCols = 16;
#else
constexpr std::size_t kTileRows = 4;
constexpr std::size_t kTileCols = 4;
#endif

#if defined(FP_FAST_FMA)
constexpr bool kFused = true;
#else
constexpr bool kFused = false;
#endif

inline double madd(double a, double b, double c) {
  if constexpr (kFused) {
    return std::fma(a, b, c);
  } else {
    return a * b + c;
  }
}

// out rows [0, R) = A·B for A(r, p) = pa[r·si + p·sp], B row-major k×m.
// Each entry is a chain of madd over increasing p from 0.0, so the vector and
// scalar paths agree bit for bit.
template <std::size_t R>
void gemm_rows(const double* pa, std::size_t si, std::size_t sp, const double* pb,
               std::size_t k, std::size_t m, double* po) {
  std::size_t j = 0;
  for (; j + kTileCols <= m; j += kTileCols) {
#if defined(SPUR_GEMM_AVX512)
    __m512d acc[R][2];
    for (std::size_t r = 0; r < R; ++r) acc[r][0] = acc[r][1] = _mm512_setzero_pd();
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = pb + p * m + j;
      const __m512d b0 = _mm512_loadu_pd(brow);
      const __m512d b1 = _mm512_loadu_pd(brow + 8);
#pragma GCC unroll 16
      for (std::size_t r = 0; r < R; ++r) {
        const __m512d s = _mm512_set1_pd(pa[r * si + p * sp]);
        acc[r][0] = _mm512_fmadd_pd(s, b0, acc[r][0]);
        acc[r][1] = _mm512_fmadd_pd(s, b1, acc[r][1]);
      }
    }
    for (std::size_t r = 0; r < R; ++r) {
      _mm512_storeu_pd(po + r * m + j, acc[r][0]);
      _mm512_storeu_pd(po + r * m + j + 8, acc[r][1]);
    }
#else
    double acc[R][kTileCols] = {};
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = pb + p * m + j;
      for (std::size_t r = 0; r < R; ++r) {
        const double s = pa[r * si + p * sp];
        for (std::size_t c = 0; c < kTileCols; ++c) acc[r][c] = madd(s, brow[c], acc[r][c]);
      }
    }
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < kTileCols; ++c) po[r * m + j + c] = acc[r][c];
#endif
  }
  for (std::size_t r = 0; r < R; ++r) {
    double* orow = po + r * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = pa[r * si + p * sp];
      const double* brow = pb + p * m;
      for (std::size_t c = j; c < m; ++c) orow[c] = madd(s, brow[c], orow[c]);
    }
  }
}

// out(n×m) = A·B where A(i, p) = pa[i·si + p·sp]; out must start zeroed.
void gemm(const double* pa, std::size_t si, std::size_t sp, const double* pb, std::size_t n,
          std::size_t k, std::size_t m, double* po) {
  std::size_t i = 0;
  for (; i + kTileRows <= n; i += kTileRows) {
    gemm_rows<kTileRows>(pa + i * si, si, sp, pb, k, m, po + i * m);
  }
  for (; i + 4 <= n; i += 4) gemm_rows<4>(pa + i * si, si, sp, pb, k, m, po + i * m);
  for (; i < n; ++i) gemm_rows<1>(pa + i * si, si, sp, pb, k, m, po + i * m);
}

}  // namespace

bool products_fused() noexcept { return kFused; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ for " + shape_string(a) + " and " +
                     shape_string(b));
  }
  Matrix out(a.rows(), b.cols());
  gemm(a.values().data(), a.cols(), 1, b.values().data(), a.rows(), a.cols(), b.cols(),
       out.values().data());
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: inner dimensions differ for " + shape_string(a) + " and " +
                     shape_string(b) + "^T");
  }
  // Materializing bᵀ keeps the inner loop a contiguous axpy.
  return matmul(a, transpose(b));
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: inner dimensions differ for " + shape_string(a) + "^T and " +
                     shape_string(b));
  }
  Matrix out(a.cols(), b.cols());
  gemm(a.values().data(), 1, a.cols(), b.values().data(), a.cols(), a.rows(), b.cols(),
       out.values().data());
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_into(Matrix& dst, const Matrix& src) {
  if (!dst.same_shape(src)) {
    throw ShapeError("add_into: " + shape_string(dst) + " vs " + shape_string(src));
  }
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double sum(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.values()) acc += v;
  return acc;
}

double sum_abs(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.values()) acc += std::fabs(v);
  return acc;
}

Matrix abs(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = std::fabs(m[i]);
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("hadamard: " + shape_string(a) + " vs " + shape_string(b));
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Matrix scaled(const Matrix& a, double s) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

}  // namespace spur
