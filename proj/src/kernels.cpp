#include "stockrag/kernels.hpp"

#include <cctype>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stockrag::kernels {

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> hash_features(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      current += static_cast<char>(std::tolower(u));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));

  std::vector<std::string> features = tokens;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) features.push_back(tokens[i] + ' ' + tokens[i + 1]);
  return features;
}

bool hash_embed_into(std::string_view text, std::span<double> out) {
  for (auto& v : out) v = 0.0;
  if (out.empty()) return false;
  for (const auto& f : hash_features(text)) {
    std::uint64_t h = fnv1a64(f);
    std::size_t slot = static_cast<std::size_t>(h % out.size());
    out[slot] += ((h >> 32) & 1U) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double v : out) norm += v * v;
  if (norm == 0.0) return false;
  norm = std::sqrt(norm);
  for (auto& v : out) v /= norm;
  return true;
}

double cosine(std::span<const double> a, std::span<const double> b) noexcept {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return std::nan("");
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

namespace serial {

EmbedResult hash_embed(std::span<const std::string> texts, std::size_t dimension) {
  EmbedResult r{RowMatrix(texts.size(), dimension), {}};
  for (std::size_t i = 0; i < texts.size(); ++i)
    if (!hash_embed_into(texts[i], r.vectors.row(i))) r.degenerate.push_back(i);
  return r;
}

std::vector<double> cosine_scores(std::span<const double> query, const RowMatrix& rows) {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = cosine(query, rows.row(i));
  return out;
}

}  // namespace serial

namespace parallel {

EmbedResult hash_embed(std::span<const std::string> texts, std::size_t dimension) {
  EmbedResult r{RowMatrix(texts.size(), dimension), {}};
  std::vector<char> ok(texts.size(), 1);
  const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    ok[idx] = hash_embed_into(texts[idx], r.vectors.row(idx)) ? 1 : 0;
  }
  for (std::size_t i = 0; i < ok.size(); ++i)
    if (!ok[i]) r.degenerate.push_back(i);
  return r;
}

std::vector<double> cosine_scores(std::span<const double> query, const RowMatrix& rows) {
  std::vector<double> out(rows.rows());
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = cosine(query, rows.row(idx));
  }
  return out;
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace parallel

}  // namespace stockrag::kernels
