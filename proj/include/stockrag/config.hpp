#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "stockrag/common.hpp"
#include "stockrag/corpus.hpp"
#include "stockrag/inference.hpp"
#include "stockrag/retrieval.hpp"

namespace stockrag::cli {

struct EmbeddingConfig {
  std::string provider = "local";  // "local" | "remote"
  std::string endpoint;
  std::string model;
  std::size_t dimension = 0;
  std::size_t batch_size = 64;
  /// Append-only cache file; empty disables caching.
  std::filesystem::path cache;
};

struct SummarizationConfig {
  std::string strategy = "extractive";  // "extractive" | "abstractive"
  /// model_name of the entry in `models` that writes abstractive summaries.
  std::string model;
};

/// Everything one experiment needs. Relative paths are resolved against
/// the directory holding the config file.
struct ExperimentConfig {
  corpus::CorpusPaths corpus;
  std::vector<std::string> companies;
  std::vector<Date> as_of_dates;
  std::vector<int> horizons;
  std::vector<int> shots;
  std::vector<inference::ModelConfig> models;
  int runs = 10;
  std::size_t k_chunks = 6;
  int window_months = 2;
  std::size_t quarters = 4;
  std::size_t chunk_size = 3;
  std::uint64_t seed = 0;
  retrieval::QueryTemplate query_template = retrieval::QueryTemplate::invest_in;
  bool include_momentum = false;
  EmbeddingConfig embedding;
  SummarizationConfig summarization;
  std::filesystem::path output_dir;
};

/// `as_of_dates` is either an array of ISO dates or
/// {"monthly": {"from": "2022-07-01", "to": "2022-12-01"}} (inclusive,
/// stepping one calendar month).
ExperimentConfig load_config(const std::filesystem::path& path);

std::vector<Date> monthly_dates(Date from, Date to);

}  // namespace stockrag::cli
