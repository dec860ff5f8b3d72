#include "evidex/sourceclient.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <istream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace evidex::sources {

namespace {

using json = nlohmann::json;

std::string escape_html(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> paragraphs(std::string_view body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto end = body.find("\n\n", pos);
    if (end == std::string_view::npos) end = body.size();
    std::string_view para = body.substr(pos, end - pos);
    if (para.find_first_not_of(" \t\r\n") != std::string_view::npos) out.emplace_back(para);
    pos = end + 2;
  }
  return out;
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ConfigError("fixture corpus line " + std::to_string(line) + ": missing string field '" + key + "'");
  return it->get<std::string>();
}

// "https://host:port/path?q" -> {"https://host:port", "/path?q"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw NetworkError("not an absolute url: '" + url + "'");
  auto path_start = url.find_first_of("/?#", scheme + 3);
  std::string base = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (auto hash = path.find('#'); hash != std::string::npos) path.resize(hash);
  if (path.empty() || path.front() != '/') path.insert(path.begin(), '/');
  return {base, path};
}

}  // namespace

SourceRegistry::SourceRegistry() : specs_(std::make_shared<const std::vector<SourceSpec>>()) {}

SourceRegistry::SourceRegistry(std::vector<SourceSpec> specs) : SourceRegistry() {
  for (auto& s : specs) add(std::move(s));
}

void SourceRegistry::add(SourceSpec spec) {
  if (spec.id.empty()) throw ConfigError("source id must not be empty");
  std::lock_guard lock(mu_);
  for (const auto& s : *specs_) {
    if (s.id == spec.id) throw ConfigError("duplicate source id '" + spec.id + "'");
  }
  auto next = std::make_shared<std::vector<SourceSpec>>(*specs_);
  next->push_back(std::move(spec));
  specs_ = std::move(next);
}

bool SourceRegistry::remove(std::string_view id) {
  std::lock_guard lock(mu_);
  auto next = std::make_shared<std::vector<SourceSpec>>(*specs_);
  auto it = std::find_if(next->begin(), next->end(), [&](const SourceSpec& s) { return s.id == id; });
  if (it == next->end()) return false;
  next->erase(it);
  specs_ = std::move(next);
  return true;
}

SourceRegistry::Snapshot SourceRegistry::snapshot() const {
  std::lock_guard lock(mu_);
  return specs_;
}

std::optional<SourceSpec> SourceRegistry::find(std::string_view id) const {
  auto snap = snapshot();
  for (const auto& s : *snap) {
    if (s.id == id) return s;
  }
  return std::nullopt;
}

std::vector<std::string> SourceRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& s : *snapshot()) out.push_back(s.id);
  return out;
}

SearchQuery build_query(const extract::Article& article, const textproc::KeywordSet& keywords,
                        std::vector<std::string> sources, const QueryConfig& config, Date today) {
  if (keywords.empty()) throw QueryError("no keywords to search for");
  if (sources.empty()) throw QueryError("no sources selected");
  if (config.query_keyword_count == 0) throw QueryError("query_keyword_count must be at least 1");
  if (config.max_per_source == 0) throw QueryError("max_per_source must be at least 1");
  if (config.date_window_days < 0 || config.undated_window_days < 0) throw QueryError("date window must not be negative");

  SearchQuery q;
  const std::size_t n = std::min(config.query_keyword_count, keywords.size());
  for (std::size_t i = 0; i < n; ++i) q.keywords.push_back(keywords.keywords[i].term);
  using std::chrono::days;
  using std::chrono::sys_days;
  if (article.published_at) {
    q.date_from = Date(sys_days(*article.published_at) - days(config.date_window_days));
    q.date_to = Date(sys_days(*article.published_at) + days(config.date_window_days));
  } else {
    q.date_from = Date(sys_days(today) - days(config.undated_window_days));
    q.date_to = today;
  }
  q.sources = std::move(sources);
  q.language = config.language;
  q.location = config.location;
  q.max_per_source = config.max_per_source;
  return q;
}

Date today_utc() { return Date(std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now())); }

FixtureCorpus FixtureCorpus::parse(std::istream& in) {
  FixtureCorpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ConfigError("fixture corpus line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) throw ConfigError("fixture corpus line " + std::to_string(line_no) + ": expected an object");
    Entry e;
    e.url = string_field(obj, "url", line_no);
    e.source_id = string_field(obj, "source_id", line_no);
    e.title = string_field(obj, "title", line_no);
    e.body = string_field(obj, "body", line_no);
    if (auto it = obj.find("published_at"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) throw ConfigError("fixture corpus line " + std::to_string(line_no) + ": bad published_at");
      e.published_at = extract::parse_date(it->get<std::string>());
      if (!e.published_at)
        throw ConfigError("fixture corpus line " + std::to_string(line_no) + ": unparseable published_at");
    }
    e.tokens = textproc::tokenize(e.title + "\n" + e.body);
    std::sort(e.tokens.begin(), e.tokens.end());
    e.tokens.erase(std::unique(e.tokens.begin(), e.tokens.end()), e.tokens.end());
    if (!corpus.by_url_.emplace(e.url, corpus.entries_.size()).second)
      throw ConfigError("fixture corpus line " + std::to_string(line_no) + ": duplicate url " + e.url);
    corpus.entries_.push_back(std::move(e));
  }
  return corpus;
}

FixtureCorpus FixtureCorpus::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fixture corpus '" + path + "'");
  return parse(in);
}

const FixtureCorpus::Entry* FixtureCorpus::find(std::string_view url) const {
  auto it = by_url_.find(url);
  return it == by_url_.end() ? nullptr : &entries_[it->second];
}

std::string render_html(const FixtureCorpus::Entry& entry) {
  std::string out = "<!DOCTYPE html>\n<html><head><title>" + escape_html(entry.title) + "</title>\n";
  if (entry.published_at)
    out += "<meta property=\"article:published_time\" content=\"" + extract::format_date(*entry.published_at) + "\">\n";
  out += "</head><body><article>\n<h1>" + escape_html(entry.title) + "</h1>\n";
  for (const auto& p : paragraphs(entry.body)) out += "<p>" + escape_html(p) + "</p>\n";
  out += "</article></body></html>\n";
  return out;
}

std::vector<CandidateLink> FixtureClient::search(const SearchQuery& query, const SourceSpec& source) const {
  struct Hit {
    std::size_t hits;
    const std::string* url;
  };
  std::vector<Hit> hits;
  for (const auto& e : corpus_->entries()) {
    if (e.source_id != source.id || !e.published_at) continue;
    if (*e.published_at < query.date_from || query.date_to < *e.published_at) continue;
    std::size_t n = 0;
    for (const auto& kw : query.keywords) n += std::binary_search(e.tokens.begin(), e.tokens.end(), kw);
    if (n > 0) hits.push_back({n, &e.url});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.hits != b.hits ? a.hits > b.hits : *a.url < *b.url;
  });
  std::vector<CandidateLink> out;
  for (std::size_t i = 0; i < hits.size() && i < query.max_per_source; ++i)
    out.push_back({*hits[i].url, source.id, static_cast<int>(i + 1)});
  return out;
}

std::string FixtureClient::fetch(const std::string& url) const {
  const auto* e = corpus_->find(url);
  if (!e) throw NetworkError("no fixture page for " + url);
  return render_html(*e);
}

HttpOptions http_options_from_env() {
  HttpOptions o;
  if (const char* key = std::getenv("NEWS_API_KEY")) o.api_key = key;
  return o;
}

std::string http_get(const std::string& url, const std::vector<std::pair<std::string, std::string>>& params,
                     const HttpOptions& options) {
  auto [base, path] = split_url(url);
  httplib::Client client(base);
  if (!client.is_valid()) throw NetworkError("unsupported url: " + url);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_write_timeout(options.timeout);
  client.set_follow_location(true);
  httplib::Headers headers;
  if (!options.api_key.empty()) headers.emplace("X-Api-Key", options.api_key);
  const httplib::Params query(params.begin(), params.end());

  std::string last_error;
  auto delay = options.backoff;
  const int attempts = std::max(0, options.retries) + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = client.Get(path, query, headers);
    if (!res) {
      last_error = "request failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status >= 200 && res->status < 300) return res->body;
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status < 500) break;
  }
  throw NetworkError(last_error + " for " + url);
}

std::vector<CandidateLink> LiveClient::search(const SearchQuery& query, const SourceSpec& source) const {
  std::string q;
  for (const auto& kw : query.keywords) q += (q.empty() ? "" : " ") + kw;
  std::vector<std::pair<std::string, std::string>> params{
      {"q", q},
      {"from", extract::format_date(query.date_from)},
      {"to", extract::format_date(query.date_to)},
      {"pageSize", std::to_string(query.max_per_source)},
      {"sources", source.id},
      {"language", query.language},
  };
  if (query.location) params.emplace_back("country", *query.location);
  const std::string body = http_get(source.endpoint, params, options_);

  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw NetworkError("malformed JSON from " + source.id);
  }
  if (!doc.is_object() || !doc.contains("articles") || !doc["articles"].is_array())
    throw NetworkError("response from " + source.id + " has no articles array");
  std::vector<CandidateLink> out;
  for (const auto& a : doc["articles"]) {
    if (out.size() >= query.max_per_source) break;
    if (!a.is_object() || !a.contains("url") || !a["url"].is_string()) continue;
    out.push_back({a["url"].get<std::string>(), source.id, static_cast<int>(out.size() + 1)});
  }
  return out;
}

std::string HttpFetcher::fetch(const std::string& url) const { return http_get(url, {}, options_); }

const SourceClient* Clients::for_kind(SourceKind kind) const {
  return kind == SourceKind::Fixture ? fixture.get() : live.get();
}

FetchResult fetch_candidates(const SearchQuery& query, const SourceRegistry& registry, const Clients& clients) {
  if (query.sources.empty()) throw QueryError("no sources selected");
  if (query.max_per_source == 0) throw QueryError("max_per_source must be at least 1");
  const auto snapshot = registry.snapshot();
  std::vector<SourceSpec> selected;
  for (const auto& id : query.sources) {
    auto it = std::find_if(snapshot->begin(), snapshot->end(), [&](const SourceSpec& s) { return s.id == id; });
    if (it == snapshot->end()) {
      std::string valid;
      for (const auto& s : *snapshot) valid += (valid.empty() ? "" : ", ") + s.id;
      throw QueryError("unknown source '" + id + "'; valid sources: " + valid);
    }
    if (!it->enabled) throw QueryError("source '" + id + "' is disabled");
    if (std::none_of(selected.begin(), selected.end(), [&](const SourceSpec& s) { return s.id == id; }))
      selected.push_back(*it);
  }

  struct Outcome {
    std::vector<CandidateLink> links;
    std::optional<std::string> error;
  };
  std::vector<std::future<Outcome>> pending;
  for (const auto& spec : selected) {
    pending.push_back(std::async(std::launch::async, [&query, &clients, spec]() -> Outcome {
      const SourceClient* client = clients.for_kind(spec.kind);
      if (!client) return {{}, std::string("no client configured for this source kind")};
      try {
        auto links = client->search(query, spec);
        if (links.size() > query.max_per_source) links.resize(query.max_per_source);
        for (auto& l : links) l.source_id = spec.id;
        return {std::move(links), std::nullopt};
      } catch (const std::exception& e) {
        return {{}, std::string(e.what())};
      }
    }));
  }

  FetchResult result;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    Outcome o = pending[i].get();
    if (o.error) {
      result.failures.push_back({selected[i].id, *o.error});
      continue;
    }
    result.links.insert(result.links.end(), std::make_move_iterator(o.links.begin()),
                        std::make_move_iterator(o.links.end()));
  }
  if (result.failures.size() == selected.size()) throw FetchError(result.failures);
  std::sort(result.links.begin(), result.links.end(), [](const CandidateLink& a, const CandidateLink& b) {
    return a.source_id != b.source_id ? a.source_id < b.source_id : a.rank < b.rank;
  });
  std::sort(result.failures.begin(), result.failures.end(),
            [](const SourceFailure& a, const SourceFailure& b) { return a.source_id < b.source_id; });
  return result;
}

}  // namespace evidex::sources
