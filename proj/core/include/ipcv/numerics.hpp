#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipcv {

/// Raised when a caller breaks an operation's precondition (shapes, ranges).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a configuration object violates one of its invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cosine similarity against a zero vector.
class UndefinedSimilarity : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Dense row-major matrix of doubles. Rows are tokens, columns are features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Vector = std::vector<double>;

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);

/// Row-wise softmax with max subtraction. Empty input returns empty.
Matrix softmax_rows(const Matrix& m);

/// Per-row normalization to zero mean / unit variance followed by
/// `gain * x + bias`. Mean and variance use two passes.
Matrix layer_norm(const Matrix& m, std::span<const double> gain,
                  std::span<const double> bias, double eps);

/// Exact GELU, 0.5 x (1 + erf(x / sqrt 2)), applied elementwise.
Matrix gelu(const Matrix& m);

Vector l2_norm_rows(const Matrix& m);
double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> a, std::span<const double> b);
double l1_distance(std::span<const double> a, std::span<const double> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Relative Frobenius error ||a - b||_F / max(||b||_F, tiny).
double relative_frobenius_error(const Matrix& a, const Matrix& b);

/// Rows of `m` at `indices`, in the order given.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

/// Writes row i of `src` into row indices[i] of `dst`.
void scatter_rows(Matrix& dst, std::span<const std::size_t> indices, const Matrix& src);

/// Lower median (element at index (n-1)/2 of the sorted list). Empty -> 0.
double lower_median(std::span<const double> values);

/// xoshiro256** seeded through SplitMix64.
///
/// The 256-bit state is filled by running SplitMix64 from
/// `seed ^ splitmix64_mix(stream_id + 1)`, so every (seed, stream) pair maps
/// to an independent, platform-stable sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller (cached second value).
  double normal();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// One SplitMix64 finalization step; used to derive child seeds.
std::uint64_t splitmix64_mix(std::uint64_t x);

/// `count` distinct values from [0, n) by partial Fisher-Yates, in draw order.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n,
                                                    std::size_t count);

}  // namespace ipcv
