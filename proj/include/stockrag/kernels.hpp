#pragma once

// Data-parallel inner loops of the retrieval path. Each kernel has a serial
// reference and an OpenMP version; both produce bit-identical output because
// the per-row arithmetic is the same and only the row loop is distributed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stockrag::kernels {

/// Dense row-major matrix of embedding rows.
class RowMatrix {
 public:
  RowMatrix() = default;
  RowMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols_, cols_}; }
  std::vector<double> row_copy(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

std::uint64_t fnv1a64(std::string_view s) noexcept;

/// Lowercased alphanumeric tokens followed by adjacent-token bigrams
/// ("a b"), in text order.
std::vector<std::string> hash_features(std::string_view text);

/// Signed feature hashing of one text into `out` (zeroed first), then L2
/// normalization. Returns false when the accumulator is all zero (no tokens,
/// or every feature cancelled); `out` is left zero in that case.
bool hash_embed_into(std::string_view text, std::span<double> out);

/// Dot product divided by both norms; 0/0 is reported as NaN so callers can
/// flag degenerate rows.
double cosine(std::span<const double> a, std::span<const double> b) noexcept;

struct EmbedResult {
  RowMatrix vectors;
  /// Indices of inputs whose accumulator was all zero.
  std::vector<std::size_t> degenerate;
};

namespace serial {
EmbedResult hash_embed(std::span<const std::string> texts, std::size_t dimension);
std::vector<double> cosine_scores(std::span<const double> query, const RowMatrix& rows);
}  // namespace serial

namespace parallel {
EmbedResult hash_embed(std::span<const std::string> texts, std::size_t dimension);
std::vector<double> cosine_scores(std::span<const double> query, const RowMatrix& rows);
/// Threads OpenMP will use for a parallel region (1 when built without it).
int max_threads() noexcept;
}  // namespace parallel

}  // namespace stockrag::kernels
