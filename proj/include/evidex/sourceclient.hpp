#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evidex/errors.hpp"
#include "evidex/extract.hpp"
#include "evidex/textproc.hpp"

namespace evidex::sources {

using extract::Date;

enum class SourceKind { Fixture, Live };

struct SourceSpec {
  std::string id;
  std::string display_name;
  SourceKind kind = SourceKind::Fixture;
  std::string endpoint;  // search URL for live sources; unused for fixtures
  bool enabled = true;

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

// Readers take an immutable snapshot, so add/remove never disturbs a fetch
// that is already running.
class SourceRegistry {
 public:
  using Snapshot = std::shared_ptr<const std::vector<SourceSpec>>;

  SourceRegistry();
  explicit SourceRegistry(std::vector<SourceSpec> specs);

  void add(SourceSpec spec);  // ConfigError on a duplicate id
  bool remove(std::string_view id);
  Snapshot snapshot() const;

  std::optional<SourceSpec> find(std::string_view id) const;
  std::vector<std::string> ids() const;
  std::size_t size() const { return snapshot()->size(); }

 private:
  mutable std::mutex mu_;
  Snapshot specs_;
};

struct QueryConfig {
  std::size_t query_keyword_count = 6;
  int date_window_days = 7;
  int undated_window_days = 30;
  std::size_t max_per_source = 10;
  std::string language = "en";
  std::optional<std::string> location;
};

struct SearchQuery {
  std::vector<std::string> keywords;
  Date date_from;
  Date date_to;
  std::vector<std::string> sources;
  std::string language;
  std::optional<std::string> location;
  std::size_t max_per_source = 10;
};

struct CandidateLink {
  std::string url;
  std::string source_id;
  int rank = 1;  // 1-based position in the source's result list

  friend bool operator==(const CandidateLink&, const CandidateLink&) = default;
};

// Throws QueryError when there are no keywords or sources.
SearchQuery build_query(const extract::Article& article, const textproc::KeywordSet& keywords,
                        std::vector<std::string> sources, const QueryConfig& config, Date today);

Date today_utc();

class SourceClient {
 public:
  virtual ~SourceClient() = default;
  // At most query.max_per_source links, ranks 1..n. Failures throw.
  virtual std::vector<CandidateLink> search(const SearchQuery& query, const SourceSpec& source) const = 0;
};

// Turns a candidate URL into HTML.
class PageFetcher {
 public:
  virtual ~PageFetcher() = default;
  virtual std::string fetch(const std::string& url) const = 0;  // NetworkError on failure
};

// One JSON object per line: {"url","source_id","title","body","published_at"}.
class FixtureCorpus {
 public:
  struct Entry {
    std::string url;
    std::string source_id;
    std::string title;
    std::string body;
    std::optional<Date> published_at;
    std::vector<std::string> tokens;  // of title and body, sorted unique
  };

  static FixtureCorpus parse(std::istream& in);
  static FixtureCorpus load_file(const std::string& path);

  const std::vector<Entry>& entries() const { return entries_; }
  const Entry* find(std::string_view url) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> by_url_;
};

// Minimal article page for a corpus entry, readable by extract_article.
std::string render_html(const FixtureCorpus::Entry& entry);

// Matches entries of the queried source that contain at least one keyword
// token and fall inside the date window. Ranked by distinct keyword hits,
// then url.
class FixtureClient : public SourceClient, public PageFetcher {
 public:
  explicit FixtureClient(std::shared_ptr<const FixtureCorpus> corpus) : corpus_(std::move(corpus)) {}

  std::vector<CandidateLink> search(const SearchQuery& query, const SourceSpec& source) const override;
  std::string fetch(const std::string& url) const override;

 private:
  std::shared_ptr<const FixtureCorpus> corpus_;
};

struct HttpOptions {
  std::chrono::milliseconds timeout{10000};
  int retries = 2;
  std::chrono::milliseconds backoff{500};  // doubles after every failed attempt
  std::string api_key;                     // sent as X-Api-Key when non-empty
};

// HttpOptions with api_key taken from NEWS_API_KEY.
HttpOptions http_options_from_env();

// GET <endpoint>?q=..&from=..&to=..&pageSize=..&sources=<id>&language=..
// expecting {"articles": [{"url": ...}, ...]}.
class LiveClient : public SourceClient {
 public:
  explicit LiveClient(HttpOptions options = {}) : options_(std::move(options)) {}
  std::vector<CandidateLink> search(const SearchQuery& query, const SourceSpec& source) const override;

 private:
  HttpOptions options_;
};

class HttpFetcher : public PageFetcher {
 public:
  explicit HttpFetcher(HttpOptions options = {}) : options_(std::move(options)) {}
  std::string fetch(const std::string& url) const override;

 private:
  HttpOptions options_;
};

// Retrying GET; returns the body of a 2xx response. Retries connection
// errors and 5xx, never 4xx.
std::string http_get(const std::string& url, const std::vector<std::pair<std::string, std::string>>& params,
                     const HttpOptions& options);

struct Clients {
  std::shared_ptr<const SourceClient> fixture;
  std::shared_ptr<const SourceClient> live;

  const SourceClient* for_kind(SourceKind kind) const;
};

struct FetchResult {
  std::vector<CandidateLink> links;  // by (source id, rank)
  std::vector<SourceFailure> failures;
};

// Searches every query source concurrently. Unknown or disabled sources are a
// QueryError; if every source fails a FetchError is thrown.
FetchResult fetch_candidates(const SearchQuery& query, const SourceRegistry& registry, const Clients& clients);

}  // namespace evidex::sources
