#include "evidex/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include "evidex/transport.hpp"

namespace evidex::pipeline {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Runs fn(0..n-1) on a few threads. Exceptions must be handled inside fn.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(n, std::max(1u, std::min(8u, std::thread::hardware_concurrency())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : threads) t.join();
}

const json& require(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ConfigError(std::string("config: missing '") + key + "'");
  return *it;
}

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: '" + key + "' has the wrong type");
  }
}

std::size_t positive_count(const json& value, const std::string& key) {
  if (!value.is_number_integer() || value.get<long long>() < 1) throw ConfigError("config: '" + key + "' must be an integer >= 1");
  return value.get<std::size_t>();
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

sources::SourceSpec parse_source(const json& s) {
  if (!s.is_object()) throw ConfigError("config: every source must be an object");
  static const std::set<std::string> known{"id", "display_name", "kind", "endpoint", "enabled"};
  for (const auto& [k, v] : s.items())
    if (!known.contains(k)) throw ConfigError("config: unknown source field '" + k + "'");
  sources::SourceSpec spec;
  spec.id = get_as<std::string>(require(s, "id"), "id");
  spec.display_name = s.contains("display_name") ? get_as<std::string>(s["display_name"], "display_name") : spec.id;
  const std::string kind = s.contains("kind") ? get_as<std::string>(s["kind"], "kind") : "fixture";
  if (kind == "fixture") spec.kind = sources::SourceKind::Fixture;
  else if (kind == "live") spec.kind = sources::SourceKind::Live;
  else throw ConfigError("config: source '" + spec.id + "' has unknown kind '" + kind + "'");
  if (s.contains("endpoint")) spec.endpoint = get_as<std::string>(s["endpoint"], "endpoint");
  if (spec.kind == sources::SourceKind::Live && spec.endpoint.empty())
    throw ConfigError("config: live source '" + spec.id + "' needs an endpoint");
  if (s.contains("enabled")) spec.enabled = get_as<bool>(s["enabled"], "enabled");
  return spec;
}

json date_json(const std::optional<extract::Date>& d) {
  return d ? json(extract::format_date(*d)) : json(nullptr);
}

}  // namespace

Config parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  static const std::set<std::string> known{"embeddings_path", "stopwords_path",  "sources",
                                           "threshold",       "epsilon_rel",     "prefilter_keep",
                                           "max_per_source",  "date_window_days", "query_keyword_count",
                                           "fixture_corpus_path", "overrides_path", "mode",
                                           "today",           "cors_origin",     "language"};
  for (const auto& [k, v] : doc.items())
    if (!known.contains(k)) throw ConfigError("config: unknown key '" + k + "'");

  Config c;
  c.embeddings_path = resolve(base_dir, get_as<std::string>(require(doc, "embeddings_path"), "embeddings_path"));
  c.stopwords_path = resolve(base_dir, get_as<std::string>(require(doc, "stopwords_path"), "stopwords_path"));

  const json& threshold = require(doc, "threshold");
  if (!threshold.is_number() || !(threshold.get<double>() > 0.0) || !std::isfinite(threshold.get<double>()))
    throw ConfigError("config: 'threshold' must be a positive number");
  c.threshold = threshold.get<double>();

  if (doc.contains("epsilon_rel")) {
    const json& e = doc["epsilon_rel"];
    if (!e.is_number() || !(e.get<double>() > 0.0) || !std::isfinite(e.get<double>()))
      throw ConfigError("config: 'epsilon_rel' must be a positive number");
    c.epsilon_rel = e.get<double>();
  }
  if (doc.contains("prefilter_keep")) c.prefilter_keep = positive_count(doc["prefilter_keep"], "prefilter_keep");
  if (doc.contains("max_per_source")) c.query.max_per_source = positive_count(doc["max_per_source"], "max_per_source");
  if (doc.contains("query_keyword_count"))
    c.query.query_keyword_count = positive_count(doc["query_keyword_count"], "query_keyword_count");
  if (doc.contains("date_window_days")) {
    const json& w = doc["date_window_days"];
    if (!w.is_number_integer() || w.get<long long>() < 0 || w.get<long long>() > 3650)
      throw ConfigError("config: 'date_window_days' must be an integer in [0, 3650]");
    c.query.date_window_days = w.get<int>();
  }
  if (doc.contains("language")) c.query.language = get_as<std::string>(doc["language"], "language");

  const std::string mode = doc.contains("mode") ? get_as<std::string>(doc["mode"], "mode") : "live";
  if (mode == "fixture") c.mode = Mode::Fixture;
  else if (mode == "live") c.mode = Mode::Live;
  else throw ConfigError("config: 'mode' must be live or fixture");

  if (doc.contains("fixture_corpus_path"))
    c.fixture_corpus_path = resolve(base_dir, get_as<std::string>(doc["fixture_corpus_path"], "fixture_corpus_path"));
  if (c.mode == Mode::Fixture && c.fixture_corpus_path.empty())
    throw ConfigError("config: fixture mode needs 'fixture_corpus_path'");
  if (doc.contains("overrides_path"))
    c.overrides_path = resolve(base_dir, get_as<std::string>(doc["overrides_path"], "overrides_path"));

  if (doc.contains("today")) {
    c.today = extract::parse_date(get_as<std::string>(doc["today"], "today"));
    if (!c.today) throw ConfigError("config: 'today' is not a date");
  }
  if (doc.contains("cors_origin")) c.cors_origin = get_as<std::string>(doc["cors_origin"], "cors_origin");

  if (doc.contains("sources")) {
    const json& list = doc["sources"];
    if (!list.is_array()) throw ConfigError("config: 'sources' must be an array");
    std::set<std::string> seen;
    for (const auto& s : list) {
      auto spec = parse_source(s);
      if (!seen.insert(spec.id).second) throw ConfigError("config: duplicate source id '" + spec.id + "'");
      c.sources.push_back(std::move(spec));
    }
  }
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(doc, std::filesystem::absolute(path).parent_path());
}

std::string to_string(Verdict v) { return v == Verdict::SupportFound ? "SupportFound" : "PotentiallyFake"; }

json to_json(const extract::Article& a) {
  return json{{"url", a.url},
              {"title", a.title},
              {"authors", a.authors},
              {"published_at", date_json(a.published_at)},
              {"body", a.body},
              {"word_count", a.word_count}};
}

json to_json(const VerificationReport& r, const sources::SourceRegistry* registry, bool include_timing) {
  auto display_name = [&](const std::string& id) {
    if (registry) {
      if (auto spec = registry->find(id)) return spec->display_name;
    }
    return id;
  };
  json matches = json::array();
  for (const auto& m : r.matches) {
    matches.push_back({{"article", to_json(m.article)},
                       {"source_id", m.source_id},
                       {"source_name", display_name(m.source_id)},
                       {"exact_distance", m.exact_distance},
                       {"prefilter_distance", m.prefilter_distance},
                       {"below_threshold", m.below_threshold}});
  }
  json errors = json::array();
  for (const auto& e : r.source_errors) errors.push_back({{"source_id", e.source_id}, {"message", e.message}});
  json prefilter = json::array();
  for (const auto& p : r.prefilter) {
    prefilter.push_back({{"url", p.url},
                         {"source_id", p.source_id},
                         {"prefilter_distance", p.prefilter_distance},
                         {"kept", p.kept}});
  }
  json query{{"keywords", r.query.keywords},
             {"date_from", extract::format_date(r.query.date_from)},
             {"date_to", extract::format_date(r.query.date_to)},
             {"sources", r.query.sources},
             {"language", r.query.language},
             {"max_per_source", r.query.max_per_source}};
  json out{{"query_article", to_json(r.query_article)},
           {"matches", std::move(matches)},
           {"threshold", r.threshold},
           {"verdict", to_string(r.verdict)},
           {"source_errors", std::move(errors)},
           {"query", std::move(query)},
           {"prefilter", std::move(prefilter)},
           {"notices", r.notices}};
  if (include_timing) {
    json timing = json::object();
    for (const auto& t : r.timing) timing[t.stage] = t.ms;
    out["timing_ms"] = std::move(timing);
  }
  return out;
}

std::string document_text(const extract::Article& article) { return article.title + "\n" + article.body; }

Refinement refine(const textproc::Document& query, std::span<const CandidateDoc> candidates,
                  const embeddings::EmbeddingTable& table, const RefineParams& params) {
  if (params.keep == 0) throw InputError("prefilter_keep must be at least 1");
  if (!(params.epsilon_rel > 0.0)) throw InputError("epsilon_rel must be positive");

  std::vector<double> approx(candidates.size());
  std::vector<std::exception_ptr> failures(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    try {
      const auto c = transport::cost_matrix(query, candidates[i].doc, table);
      transport::SinkhornOptions opts;
      opts.epsilon = transport::relative_epsilon(c, params.epsilon_rel);
      approx[i] = transport::sinkhorn(query.weights, candidates[i].doc.weights, c, opts).distance;
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (approx[a] != approx[b]) return approx[a] < approx[b];
    return candidates[a].article.url < candidates[b].article.url;
  });

  Refinement out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& c = candidates[order[k]];
    out.prefilter.push_back({c.article.url, c.source_id, approx[order[k]], k < params.keep});
  }
  const std::size_t kept = std::min(params.keep, order.size());
  out.matches.resize(kept);
  parallel_for(kept, [&](std::size_t k) {
    const auto& c = candidates[order[k]];
    const double exact = transport::wmd(query, c.doc, table);
    out.matches[k] = {c.article, c.source_id, exact, approx[order[k]], exact < params.threshold};
  });
  std::sort(out.matches.begin(), out.matches.end(), [](const EvidenceMatch& a, const EvidenceMatch& b) {
    if (a.exact_distance != b.exact_distance) return a.exact_distance < b.exact_distance;
    return a.article.url < b.article.url;
  });
  return out;
}

Engine::Engine(Config config, std::shared_ptr<const embeddings::EmbeddingTable> table, textproc::Stoplist stoplist,
               std::shared_ptr<sources::SourceRegistry> registry, sources::Clients clients,
               std::shared_ptr<const sources::PageFetcher> fetcher, extract::OverrideRules overrides)
    : config_(std::move(config)),
      table_(std::move(table)),
      stoplist_(std::move(stoplist)),
      registry_(std::move(registry)),
      clients_(std::move(clients)),
      fetcher_(std::move(fetcher)),
      overrides_(std::move(overrides)) {
  if (!table_ || !registry_ || !fetcher_) throw ConfigError("engine needs a table, a registry and a page fetcher");
}

std::shared_ptr<const Engine> Engine::from_config(const Config& config,
                                                  std::shared_ptr<sources::SourceRegistry> registry) {
  auto table = std::make_shared<const embeddings::EmbeddingTable>(embeddings::load_file(config.embeddings_path));
  auto stoplist = textproc::load_stoplist_file(config.stopwords_path);
  if (!registry) registry = std::make_shared<sources::SourceRegistry>(config.sources);
  extract::OverrideRules overrides;
  if (!config.overrides_path.empty()) overrides = extract::OverrideRules::load_file(config.overrides_path);

  sources::Clients clients;
  clients.live = std::make_shared<sources::LiveClient>(sources::http_options_from_env());
  std::shared_ptr<const sources::PageFetcher> fetcher;
  if (!config.fixture_corpus_path.empty()) {
    auto corpus = std::make_shared<const sources::FixtureCorpus>(
        sources::FixtureCorpus::load_file(config.fixture_corpus_path));
    auto fixture = std::make_shared<sources::FixtureClient>(corpus);
    clients.fixture = fixture;
    if (config.mode == Mode::Fixture) fetcher = fixture;
  }
  if (!fetcher) fetcher = std::make_shared<sources::HttpFetcher>(sources::http_options_from_env());
  return std::make_shared<const Engine>(config, std::move(table), std::move(stoplist), std::move(registry),
                                        std::move(clients), std::move(fetcher), std::move(overrides));
}

VerificationReport Engine::verify(const VerifyInput& input) const {
  const auto started = Clock::now();
  if (!input.url && !input.html) throw InputError("either url or html is required");
  if (input.sources.empty()) throw InputError("no sources selected");
  for (const auto& id : input.sources) {
    auto spec = registry_->find(id);
    if (!spec) {
      std::string valid;
      for (const auto& v : registry_->ids()) valid += (valid.empty() ? "" : ", ") + v;
      throw InputError("unknown source '" + id + "'; valid sources: " + valid);
    }
    if (!spec->enabled) throw InputError("source '" + id + "' is disabled");
  }

  VerificationReport report;
  report.threshold = config_.threshold;

  auto stage = Clock::now();
  const std::string url = input.url.value_or("");
  const std::string html = input.html ? *input.html : fetcher_->fetch(url);
  report.query_article = extract::extract_article(html, url, overrides_);
  const auto& article = report.query_article;
  const auto keywords =
      textproc::extract_keywords(article.title, article.body, config_.query.query_keyword_count, stoplist_);
  if (keywords.empty()) throw ExtractionError("no searchable keywords in the article");
  const auto query_doc = textproc::build_document(textproc::clean(document_text(article), stoplist_), *table_);
  report.timing.push_back({"extract", ms_since(stage)});

  stage = Clock::now();
  report.query = sources::build_query(article, keywords, input.sources, config_.query,
                                      config_.today.value_or(sources::today_utc()));
  auto fetched = sources::fetch_candidates(report.query, *registry_, clients_);
  report.source_errors = std::move(fetched.failures);
  report.timing.push_back({"search", ms_since(stage)});

  // Drop the article itself and repeated urls; the first (source, rank) wins.
  std::vector<sources::CandidateLink> links;
  std::set<std::string> seen{url};
  for (auto& l : fetched.links) {
    if (!l.url.empty() && seen.insert(l.url).second) links.push_back(std::move(l));
  }

  stage = Clock::now();
  std::vector<std::optional<CandidateDoc>> slots(links.size());
  std::vector<std::string> errors(links.size());
  parallel_for(links.size(), [&](std::size_t i) {
    try {
      auto a = extract::extract_article(fetcher_->fetch(links[i].url), links[i].url, overrides_);
      auto doc = textproc::build_document(textproc::clean(document_text(a), stoplist_), *table_);
      slots[i] = CandidateDoc{std::move(a), links[i].source_id, std::move(doc)};
    } catch (const std::exception& e) {
      errors[i] = links[i].url + ": " + e.what();
    }
  });
  std::vector<CandidateDoc> candidates;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (slots[i]) candidates.push_back(std::move(*slots[i]));
    else report.source_errors.push_back({links[i].source_id, errors[i]});
  }
  report.timing.push_back({"candidates", ms_since(stage)});

  stage = Clock::now();
  if (candidates.empty()) {
    report.notices.push_back("no candidates");
  } else {
    auto refined = refine(query_doc, candidates, *table_, {config_.threshold, config_.epsilon_rel, config_.prefilter_keep});
    report.matches = std::move(refined.matches);
    report.prefilter = std::move(refined.prefilter);
  }
  report.timing.push_back({"refine", ms_since(stage)});

  const bool support =
      std::any_of(report.matches.begin(), report.matches.end(), [](const EvidenceMatch& m) { return m.below_threshold; });
  report.verdict = support ? Verdict::SupportFound : Verdict::PotentiallyFake;
  report.timing.push_back({"total", ms_since(started)});
  return report;
}

double threshold_from_distances(std::span<const double> related, std::span<const double> unrelated) {
  if (related.empty() || unrelated.empty()) throw CalibrationError("calibration needs related and unrelated pairs");
  std::vector<double> all(related.begin(), related.end());
  all.insert(all.end(), unrelated.begin(), unrelated.end());
  for (double d : all)
    if (!std::isfinite(d)) throw CalibrationError("non-finite distance in calibration set");
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (all.size() < 2) throw CalibrationError("all calibration distances are equal");

  double best = 0.0;
  std::size_t best_errors = std::numeric_limits<std::size_t>::max();
  for (std::size_t k = 0; k + 1 < all.size(); ++k) {
    const double t = (all[k] + all[k + 1]) / 2;
    std::size_t errors = 0;
    for (double d : related) errors += !(d < t);
    for (double d : unrelated) errors += d < t;
    if (errors < best_errors) {
      best_errors = errors;
      best = t;
    }
  }
  return best;
}

double calibrate_threshold(std::span<const LabelledPair> pairs, const embeddings::EmbeddingTable& table) {
  std::vector<double> related, unrelated;
  for (const auto& p : pairs) (p.related ? related : unrelated).push_back(transport::wmd(p.a, p.b, table));
  return threshold_from_distances(related, unrelated);
}

}  // namespace evidex::pipeline
