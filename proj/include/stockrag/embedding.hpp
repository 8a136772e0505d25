#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "stockrag/clock.hpp"
#include "stockrag/kernels.hpp"
#include "stockrag/resilience.hpp"

namespace stockrag::retrieval {

/// Maps texts to L2-normalized vectors of a fixed dimension, one row per
/// input in input order.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string model() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual kernels::RowMatrix embed_batch(std::span<const std::string> texts) = 0;
};

/// Deterministic offline provider: signed hashing of unigrams and bigrams
/// into 256 slots.
class LocalHashEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDimension = 256;

  explicit LocalHashEmbedder(bool use_parallel = true) : parallel_(use_parallel) {}
  std::string name() const override { return "local"; }
  std::string model() const override { return "feature-hash-256"; }
  std::size_t dimension() const override { return kDimension; }
  /// Throws DegenerateEmbeddingError naming the first text whose feature set
  /// is empty or fully cancels.
  kernels::RowMatrix embed_batch(std::span<const std::string> texts) override;

 private:
  bool parallel_;
};

/// Convenience wrapper around LocalHashEmbedder for a list of texts.
std::vector<std::vector<double>> local_embed(std::span<const std::string> texts);

struct RemoteEmbeddingConfig {
  std::string endpoint;
  std::string model;
  std::size_t dimension = 0;
  std::string api_key;
  std::size_t batch_size = 64;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;
};

/// OpenAI-compatible embeddings endpoint:
/// POST {"model", "input": [...]} -> {"data": [{"embedding": [...]}, ...]}.
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(RemoteEmbeddingConfig config, Clock& clock);
  std::string name() const override { return "remote"; }
  std::string model() const override { return config_.model; }
  std::size_t dimension() const override { return config_.dimension; }
  kernels::RowMatrix embed_batch(std::span<const std::string> texts) override;

 private:
  RemoteEmbeddingConfig config_;
  Clock& clock_;
};

/// Append-only cache keyed by (provider, model, sha256(text)). Each line of
/// the cache file is {"provider", "model", "hash", "vector"}.
class CachedEmbedder final : public EmbeddingProvider {
 public:
  CachedEmbedder(EmbeddingProvider& inner, std::filesystem::path cache_file);
  std::string name() const override { return inner_.name(); }
  std::string model() const override { return inner_.model(); }
  std::size_t dimension() const override { return inner_.dimension(); }
  kernels::RowMatrix embed_batch(std::span<const std::string> texts) override;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  EmbeddingProvider& inner_;
  std::filesystem::path path_;
  std::mutex mu_;
  std::map<std::string, std::vector<double>> entries_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

}  // namespace stockrag::retrieval
