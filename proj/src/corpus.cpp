#include "moodscan/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "moodscan/prompt.hpp"

namespace moodscan {

using json = nlohmann::json;

namespace {

std::string string_field(const json& rec, const std::string& field) {
  if (field.empty()) return {};
  auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) return {};
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number_unsigned()) return std::to_string(it->get<unsigned long long>());
  return {};
}

// Dumps store created_utc as an integer, a float, or a numeric string.
std::int64_t epoch_field(const json& rec, const std::string& field) {
  if (field.empty()) return 0;
  auto it = rec.find(field);
  if (it == rec.end() || it->is_null()) return 0;
  if (it->is_number_integer()) return it->get<std::int64_t>();
  if (it->is_number_unsigned()) return static_cast<std::int64_t>(it->get<std::uint64_t>());
  if (it->is_number_float()) return static_cast<std::int64_t>(std::floor(it->get<double>()));
  if (it->is_string()) {
    try {
      return static_cast<std::int64_t>(std::floor(std::stod(it->get<std::string>())));
    } catch (const std::exception&) {
      return 0;
    }
  }
  return 0;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Corpus load_corpus(const std::string& path, const InputFieldMap& fields) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input corpus: " + path);

  Corpus corpus;
  std::set<std::string> seen_ids;
  std::set<std::pair<std::string, std::string>> seen_text;

  std::string line;
  while (std::getline(in, line)) {
    if (trimmed(line).empty()) continue;
    ++corpus.stats.records;

    const json rec = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (rec.is_discarded() || !rec.is_object()) {
      ++corpus.stats.schema_errors;
      continue;
    }
    Post post;
    post.post_id = string_field(rec, fields.id_field);
    if (post.post_id.empty()) {
      ++corpus.stats.schema_errors;
      continue;
    }
    if (!seen_ids.insert(post.post_id).second) {
      ++corpus.stats.duplicate_id;
      continue;
    }
    post.subreddit = string_field(rec, fields.subreddit_field);
    post.created_utc = epoch_field(rec, fields.created_field);

    const std::string body = trimmed(string_field(rec, fields.text_field));
    if (body == "[removed]" || body == "[deleted]") {
      ++corpus.stats.removed_or_deleted;
      continue;
    }
    post.text = compose_post_text(trimmed(string_field(rec, fields.title_field)), body);
    if (trimmed(post.text).empty()) {
      ++corpus.stats.empty_text;
      corpus.empty_post_ids.push_back(post.post_id);
      continue;
    }
    if (!seen_text.emplace(post.subreddit, post.text).second) {
      ++corpus.stats.duplicate_text;
      continue;
    }
    corpus.posts.push_back(std::move(post));
  }
  corpus.stats.kept = corpus.posts.size();
  return corpus;
}

std::vector<Post> sample_posts(const std::vector<Post>& posts, std::size_t k, std::uint64_t seed) {
  if (k == 0 || k >= posts.size()) return posts;
  std::vector<std::size_t> idx(posts.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates with an explicit engine; std::shuffle's draw
  // sequence is library-specific.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (posts.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  std::vector<Post> out;
  out.reserve(k);
  for (std::size_t i : idx) out.push_back(posts[i]);
  return out;
}

}  // namespace moodscan
