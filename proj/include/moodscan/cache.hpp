#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <variant>

#include "moodscan/parser.hpp"

namespace moodscan {

struct CacheKey {
  std::string post_id;
  std::string model_name;
  std::string prompt_version;

  auto operator<=>(const CacheKey&) const = default;
};

using CacheValue = std::variant<Classification, FailureRecord>;

// Append-only line-delimited classification cache. Every line carries its
// full key; replay on open is last-writer-wins, and a torn final line left by
// a crash is ignored.
class ClassificationCache {
 public:
  explicit ClassificationCache(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }
  std::optional<CacheValue> find(const CacheKey& key) const;
  // Appends and flushes one line. Thread-safe.
  void put(const CacheKey& key, const CacheValue& value);

  std::size_t size() const;
  std::size_t ignored_lines() const { return ignored_lines_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<CacheKey, CacheValue> entries_;
  std::ofstream out_;
  std::size_t ignored_lines_ = 0;
};

}  // namespace moodscan
