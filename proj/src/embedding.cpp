#include "stockrag/embedding.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include "json.hpp"

#include "stockrag/common.hpp"
#include "stockrag/http.hpp"

namespace stockrag::retrieval {

using nlohmann::json;

kernels::RowMatrix LocalHashEmbedder::embed_batch(std::span<const std::string> texts) {
  auto result = parallel_ ? kernels::parallel::hash_embed(texts, kDimension)
                          : kernels::serial::hash_embed(texts, kDimension);
  if (!result.degenerate.empty()) {
    auto i = result.degenerate.front();
    throw DegenerateEmbeddingError(
        fmt::format("text {} has no hashable tokens: '{}'", i, texts[i].substr(0, 80)));
  }
  return std::move(result.vectors);
}

std::vector<std::vector<double>> local_embed(std::span<const std::string> texts) {
  LocalHashEmbedder embedder;
  auto m = embedder.embed_batch(texts);
  std::vector<std::vector<double>> out;
  out.reserve(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out.push_back(m.row_copy(i));
  return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbeddingConfig config, Clock& clock)
    : config_(std::move(config)), clock_(clock) {
  if (config_.dimension == 0) throw Error("remote embedding provider needs a positive dimension");
  if (config_.batch_size == 0) config_.batch_size = 64;
}

kernels::RowMatrix RemoteEmbedder::embed_batch(std::span<const std::string> texts) {
  kernels::RowMatrix out(texts.size(), config_.dimension);
  for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
    std::size_t count = std::min(config_.batch_size, texts.size() - start);
    json body = {{"model", config_.model},
                 {"input", std::vector<std::string>(texts.begin() + start, texts.begin() + start + count)}};
    const std::string payload = body.dump();
    auto response = with_retries(config_.retry, clock_, start, [&] {
      auto r = http::post_json(config_.endpoint, payload, config_.api_key, config_.timeout);
      if (r.status != 200)
        throw TransportError(fmt::format("embedding endpoint returned HTTP {}", r.status),
                             http::is_retryable_status(r.status));
      return r;
    });
    json parsed;
    try {
      parsed = json::parse(response.body);
    } catch (const json::parse_error& e) {
      throw TransportError(fmt::format("embedding response is not JSON: {}", e.what()), false);
    }
    const auto data = parsed.find("data");
    if (data == parsed.end() || !data->is_array() || data->size() != count)
      throw TransportError("embedding response has wrong 'data' length", false);
    for (std::size_t j = 0; j < count; ++j) {
      auto v = (*data)[j].at("embedding").get<std::vector<double>>();
      if (v.size() != config_.dimension)
        throw DimensionMismatchError(fmt::format("embedding has dimension {}, expected {}", v.size(),
                                                 config_.dimension));
      double norm = 0.0;
      for (double x : v) norm += x * x;
      if (norm == 0.0) throw DegenerateEmbeddingError("remote provider returned a zero vector");
      norm = std::sqrt(norm);
      auto row = out.row(start + j);
      for (std::size_t d = 0; d < v.size(); ++d) row[d] = v[d] / norm;
    }
  }
  return out;
}

CachedEmbedder::CachedEmbedder(EmbeddingProvider& inner, std::filesystem::path cache_file)
    : inner_(inner), path_(std::move(cache_file)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      continue;  // torn final line from an interrupted run
    }
    if (rec.value("provider", "") != inner_.name() || rec.value("model", "") != inner_.model()) continue;
    auto v = rec.at("vector").get<std::vector<double>>();
    if (v.size() != inner_.dimension()) continue;
    entries_[rec.at("hash").get<std::string>()] = std::move(v);
  }
}

kernels::RowMatrix CachedEmbedder::embed_batch(std::span<const std::string> texts) {
  std::lock_guard lock(mu_);
  kernels::RowMatrix out(texts.size(), inner_.dimension());
  std::vector<std::string> hashes;
  std::vector<std::size_t> missing;
  std::vector<std::string> missing_texts;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    hashes.push_back(sha256_hex(texts[i]));
    if (auto it = entries_.find(hashes.back()); it != entries_.end()) {
      std::copy(it->second.begin(), it->second.end(), out.row(i).begin());
      ++hits_;
    } else {
      missing.push_back(i);
      missing_texts.push_back(texts[i]);
    }
  }
  if (missing.empty()) return out;

  auto fresh = inner_.embed_batch(missing_texts);
  std::ofstream append(path_, std::ios::app);
  if (!append) throw IoError(fmt::format("cannot append to embedding cache {}", path_.string()));
  for (std::size_t j = 0; j < missing.size(); ++j) {
    auto row = fresh.row(j);
    std::copy(row.begin(), row.end(), out.row(missing[j]).begin());
    auto& slot = entries_[hashes[missing[j]]];
    if (slot.empty()) {
      slot.assign(row.begin(), row.end());
      json rec = {{"provider", inner_.name()}, {"model", inner_.model()}, {"hash", hashes[missing[j]]},
                  {"vector", slot}};
      append << rec.dump() << '\n';
    }
    ++misses_;
  }
  return out;
}

}  // namespace stockrag::retrieval
