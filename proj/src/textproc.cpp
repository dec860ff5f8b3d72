#include "evidex/textproc.hpp"

#include <locale.h>
#include <wctype.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <unordered_map>

#include "evidex/errors.hpp"

namespace evidex::textproc {

namespace {

// Unicode character classes come from the C library's UTF-8 locale tables;
// the process-global locale is left untouched.
locale_t utf8_locale() {
  static const locale_t loc = [] {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      if (locale_t l = newlocale(LC_CTYPE_MASK, name, locale_t(0))) return l;
    }
    return locale_t(0);
  }();
  return loc;
}

// Decodes one code point starting at text[i]; returns the number of bytes
// consumed, or 0 for an invalid sequence.
std::size_t decode_utf8(std::string_view text, std::size_t i, char32_t& cp) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) {
    cp = b0;
    return 1;
  }
  std::size_t len;
  char32_t min;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    return 0;
  }
  if (i + len > text.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  return len;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  locale_t loc = utf8_locale();
  return loc != locale_t(0) && iswalnum_l(static_cast<wint_t>(cp), loc);
}

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  locale_t loc = utf8_locale();
  return loc == locale_t(0) ? cp : static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = 0;
    std::size_t len = decode_utf8(text, i, cp);
    if (len == 0) {
      len = 1;
      cp = U' ';
    }
    i += len;
    if (is_word_char(cp)) {
      encode_utf8(to_lower(cp), current);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> remove_stopwords(std::span<const std::string> tokens, const Stoplist& stoplist) {
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!stoplist.contains(t)) kept.push_back(t);
  }
  return kept;
}

std::vector<std::string> clean(std::string_view text, const Stoplist& stoplist) {
  auto tokens = tokenize(text);
  return remove_stopwords(tokens, stoplist);
}

Stoplist load_stoplist(std::istream& in) {
  Stoplist stoplist;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (auto& token : tokenize(line)) stoplist.insert(std::move(token));
  }
  return stoplist;
}

Stoplist load_stoplist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stopword file '" + path + "'");
  return load_stoplist(in);
}

std::optional<double> Document::weight_of(std::string_view token) const {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == token) return weights[i];
  }
  return std::nullopt;
}

Document build_document(std::span<const std::string> tokens, const embeddings::EmbeddingTable& table) {
  Document doc;
  doc.source_token_count = tokens.size();
  std::unordered_map<std::string_view, std::size_t> slot;
  std::unordered_map<std::string_view, bool> dropped;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  for (const auto& t : tokens) {
    if (!table.contains(t)) {
      if (dropped.emplace(t, true).second) doc.dropped_oov.push_back(t);
      continue;
    }
    auto [it, inserted] = slot.emplace(t, doc.tokens.size());
    if (inserted) {
      doc.tokens.push_back(t);
      counts.push_back(0);
    }
    ++counts[it->second];
    ++total;
  }
  if (total == 0) throw EmptyDocumentError();
  doc.weights.reserve(counts.size());
  for (std::size_t c : counts) doc.weights.push_back(static_cast<double>(c) / static_cast<double>(total));
  return doc;
}

KeywordSet extract_keywords(std::string_view title, std::string_view body, std::size_t k,
                            const Stoplist& stoplist) {
  if (k == 0) throw InputError("keyword count must be at least 1");
  const auto title_tokens = clean(title, stoplist);
  const auto body_tokens = clean(body, stoplist);

  std::map<std::string, std::pair<std::size_t, bool>> stats;  // term -> (count, in title)
  for (const auto& t : title_tokens) {
    auto& s = stats[t];
    ++s.first;
    s.second = true;
  }
  for (const auto& t : body_tokens) ++stats[t].first;

  KeywordSet set;
  set.keywords.reserve(stats.size());
  for (const auto& [term, s] : stats) {
    set.keywords.push_back({term, static_cast<double>(s.first) * (s.second ? kTitleBoost : 1.0)});
  }
  std::stable_sort(set.keywords.begin(), set.keywords.end(),
                   [](const Keyword& a, const Keyword& b) { return a.score > b.score; });
  if (set.keywords.size() > k) set.keywords.resize(k);
  return set;
}

}  // namespace evidex::textproc
