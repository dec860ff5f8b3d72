#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evidex/embeddings.hpp"

namespace evidex::textproc {

using Stoplist = std::set<std::string, std::less<>>;

// Lowercases and splits on every code point that is neither a letter nor a
// digit. Invalid UTF-8 bytes act as separators.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const Stoplist& stoplist);

// tokenize + remove_stopwords.
std::vector<std::string> clean(std::string_view text, const Stoplist& stoplist);

// One token per line, '#' starts a comment. Entries are lowercased.
Stoplist load_stoplist(std::istream& in);
Stoplist load_stoplist_file(const std::string& path);

// Normalized bag of words over the in-vocabulary support of a token list.
struct Document {
  std::vector<std::string> tokens;  // unique, first-occurrence order
  std::vector<double> weights;      // count / in-vocabulary occurrences
  std::size_t source_token_count = 0;
  std::vector<std::string> dropped_oov;

  std::size_t size() const { return tokens.size(); }
  std::optional<double> weight_of(std::string_view token) const;
};

// Throws EmptyDocumentError when no token survives the vocabulary filter.
Document build_document(std::span<const std::string> tokens, const embeddings::EmbeddingTable& table);

struct Keyword {
  std::string term;
  double score = 0.0;

  friend bool operator==(const Keyword&, const Keyword&) = default;
};

struct KeywordSet {
  std::vector<Keyword> keywords;  // descending score, ties lexicographic

  bool empty() const { return keywords.empty(); }
  std::size_t size() const { return keywords.size(); }
};

inline constexpr double kTitleBoost = 3.0;

// score = occurrences in title and body, times kTitleBoost for title terms.
KeywordSet extract_keywords(std::string_view title, std::string_view body, std::size_t k,
                            const Stoplist& stoplist);

}  // namespace evidex::textproc
