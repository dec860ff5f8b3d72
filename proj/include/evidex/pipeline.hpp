#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evidex/embeddings.hpp"
#include "evidex/errors.hpp"
#include "evidex/extract.hpp"
#include "evidex/sourceclient.hpp"
#include "evidex/textproc.hpp"
#include "json.hpp"

namespace evidex::pipeline {

enum class Mode { Live, Fixture };

struct Config {
  std::string embeddings_path;
  std::string stopwords_path;
  std::vector<sources::SourceSpec> sources;
  double threshold = 0.0;  // required in config files
  double epsilon_rel = 0.05;
  std::size_t prefilter_keep = 5;
  sources::QueryConfig query;  // query_keyword_count, date_window_days, max_per_source
  std::string fixture_corpus_path;
  std::string overrides_path;
  Mode mode = Mode::Live;
  std::optional<extract::Date> today;  // pins "today" for undated articles
  std::string cors_origin = "*";
};

// Relative paths are resolved against base_dir. Unknown keys and bad values
// are ConfigErrors.
Config parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
Config load_config(const std::string& path);

enum class Verdict { SupportFound, PotentiallyFake };
std::string to_string(Verdict v);

struct EvidenceMatch {
  extract::Article article;
  std::string source_id;
  double exact_distance = 0.0;
  double prefilter_distance = 0.0;
  bool below_threshold = false;
};

struct PrefilterEntry {
  std::string url;
  std::string source_id;
  double prefilter_distance = 0.0;
  bool kept = false;
};

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct VerificationReport {
  extract::Article query_article;
  std::vector<EvidenceMatch> matches;  // by exact distance, then url
  double threshold = 0.0;
  Verdict verdict = Verdict::PotentiallyFake;
  std::vector<SourceFailure> source_errors;
  sources::SearchQuery query;
  std::vector<PrefilterEntry> prefilter;  // by prefilter distance, then url
  std::vector<std::string> notices;
  std::vector<StageTiming> timing;
};

// Source display names are looked up in `registry` when given.
nlohmann::json to_json(const VerificationReport& report, const sources::SourceRegistry* registry = nullptr,
                       bool include_timing = true);
nlohmann::json to_json(const extract::Article& article);

// Document text: the title followed by the body.
std::string document_text(const extract::Article& article);

struct CandidateDoc {
  extract::Article article;
  std::string source_id;
  textproc::Document doc;
};

struct RefineParams {
  double threshold = 0.0;
  double epsilon_rel = 0.05;
  std::size_t keep = 5;
};

struct Refinement {
  std::vector<EvidenceMatch> matches;
  std::vector<PrefilterEntry> prefilter;
};

// Regularized distance to every candidate, exact distance for the `keep`
// closest, threshold applied.
Refinement refine(const textproc::Document& query, std::span<const CandidateDoc> candidates,
                  const embeddings::EmbeddingTable& table, const RefineParams& params);

struct VerifyInput {
  std::optional<std::string> url;
  std::optional<std::string> html;  // when set, url is only used as the article's identity
  std::vector<std::string> sources;
};

// Loaded, immutable resources for verification. verify() is safe to call
// from several threads at once.
class Engine {
 public:
  Engine(Config config, std::shared_ptr<const embeddings::EmbeddingTable> table, textproc::Stoplist stoplist,
         std::shared_ptr<sources::SourceRegistry> registry, sources::Clients clients,
         std::shared_ptr<const sources::PageFetcher> fetcher, extract::OverrideRules overrides = {});

  // Loads embeddings, stopwords, fixture corpus and override rules. The
  // registry is built from config.sources unless one is passed in.
  static std::shared_ptr<const Engine> from_config(const Config& config,
                                                   std::shared_ptr<sources::SourceRegistry> registry = nullptr);

  // Throws InputError for a malformed request or unknown source,
  // NetworkError when the article page cannot be fetched, ExtractionError or
  // EmptyDocumentError when the article itself is unusable, FetchError when
  // every source fails.
  VerificationReport verify(const VerifyInput& input) const;

  const Config& config() const { return config_; }
  const embeddings::EmbeddingTable& table() const { return *table_; }
  const textproc::Stoplist& stoplist() const { return stoplist_; }
  const sources::SourceRegistry& registry() const { return *registry_; }
  const std::shared_ptr<sources::SourceRegistry>& shared_registry() const { return registry_; }

 private:
  Config config_;
  std::shared_ptr<const embeddings::EmbeddingTable> table_;
  textproc::Stoplist stoplist_;
  std::shared_ptr<sources::SourceRegistry> registry_;
  sources::Clients clients_;
  std::shared_ptr<const sources::PageFetcher> fetcher_;
  extract::OverrideRules overrides_;
};

struct LabelledPair {
  textproc::Document a;
  textproc::Document b;
  bool related = false;
};

// Threshold separating related (d < t) from unrelated distances: the
// midpoint between the classes when they separate, otherwise the midpoint
// between consecutive distinct distances with the fewest misclassifications,
// smallest on ties. CalibrationError when a class is empty or every distance
// is equal.
double threshold_from_distances(std::span<const double> related, std::span<const double> unrelated);
double calibrate_threshold(std::span<const LabelledPair> pairs, const embeddings::EmbeddingTable& table);

}  // namespace evidex::pipeline
