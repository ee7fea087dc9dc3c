#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace moodscan {

// One post of an unlabeled corpus, title already joined into text.
struct Post {
  std::string post_id;
  std::string subreddit;
  std::int64_t created_utc = 0;
  std::string text;
};

// Field names of the in-the-wild input records. The defaults match the
// layout of public Reddit submission dumps.
struct InputFieldMap {
  std::string id_field = "id";
  std::string subreddit_field = "subreddit";
  std::string created_field = "created_utc";
  std::string title_field = "title";
  std::string text_field = "selftext";
};

struct IngestStats {
  std::size_t records = 0;
  std::size_t kept = 0;
  std::size_t removed_or_deleted = 0;  // body "[removed]" / "[deleted]"
  std::size_t duplicate_text = 0;      // same text already seen in the subreddit
  std::size_t duplicate_id = 0;
  std::size_t empty_text = 0;
  std::size_t schema_errors = 0;
};

struct Corpus {
  std::vector<Post> posts;
  IngestStats stats;
  std::vector<std::string> empty_post_ids;  // skipped as EmptyPost
};

// Reads line-delimited JSON records. Malformed lines and records without an
// id are counted as schema errors and skipped; the batch is not aborted.
Corpus load_corpus(const std::string& path, const InputFieldMap& fields);

// Deterministic subset of `k` posts (input order preserved); k == 0 or
// k >= size keeps everything.
std::vector<Post> sample_posts(const std::vector<Post>& posts, std::size_t k, std::uint64_t seed);

}  // namespace moodscan
