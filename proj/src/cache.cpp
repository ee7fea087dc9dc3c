#include "moodscan/cache.hpp"

#include <stdexcept>

#include "moodscan/json_io.hpp"

namespace moodscan {

namespace fs = std::filesystem;

ClassificationCache::ClassificationCache(fs::path path) : path_(std::move(path)) {
  bool needs_newline = false;
  if (fs::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
      try {
        if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("not an object");
        CacheKey key{j.at("post_id").get<std::string>(), j.at("model_name").get<std::string>(),
                     j.at("prompt_version").get<std::string>()};
        const std::string status = j.at("status").get<std::string>();
        if (status == "ok") {
          entries_.insert_or_assign(std::move(key), classification_from_json(j.at("classification")));
        } else if (status == "failed") {
          entries_.insert_or_assign(std::move(key), failure_from_json(j.at("failure")));
        } else {
          throw std::invalid_argument("unknown status");
        }
      } catch (const std::exception&) {
        ++ignored_lines_;
      }
    }
    in.clear();
    in.seekg(0, std::ios::end);
    if (in.tellg() > 0) {
      in.seekg(-1, std::ios::end);
      needs_newline = in.get() != '\n';
    }
  } else if (path_.has_parent_path()) {
    fs::create_directories(path_.parent_path());
  }

  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw std::runtime_error("cannot open cache for append: " + path_.string());
  if (needs_newline) out_ << '\n' << std::flush;
}

std::optional<CacheValue> ClassificationCache::find(const CacheKey& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ClassificationCache::put(const CacheKey& key, const CacheValue& value) {
  Json line{{"post_id", key.post_id}, {"model_name", key.model_name}, {"prompt_version", key.prompt_version}};
  if (const auto* c = std::get_if<Classification>(&value)) {
    line["status"] = "ok";
    line["classification"] = classification_to_json(*c);
  } else {
    line["status"] = "failed";
    line["failure"] = failure_to_json(std::get<FailureRecord>(value));
  }
  const std::string text = dump_line(line);

  std::lock_guard lock(mu_);
  out_ << text << '\n' << std::flush;
  if (!out_) throw std::runtime_error("cache write failed: " + path_.string());
  entries_.insert_or_assign(key, value);
}

std::size_t ClassificationCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace moodscan
