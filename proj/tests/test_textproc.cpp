#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "evidex/errors.hpp"
#include "evidex/textproc.hpp"

using namespace evidex::textproc;
using evidex::embeddings::EmbeddingTable;

namespace {

EmbeddingTable table_of(std::initializer_list<const char*> words) {
  EmbeddingTable::Builder b(2);
  double x = 0;
  for (const char* w : words) {
    const double v[2] = {x, 1.0};
    b.add(w, v);
    x += 1.0;
  }
  return std::move(b).build();
}

std::vector<std::string> toks(std::initializer_list<const char*> words) { return {words.begin(), words.end()}; }

}  // namespace

TEST_CASE("tokenize splits on non-alphanumerics and lowercases") {
  CHECK(tokenize("Gatorade banned, FINED $300k!") == toks({"gatorade", "banned", "fined", "300k"}));
  CHECK(tokenize("").empty());
  CHECK(tokenize("U.S. elections 2016") == toks({"u", "s", "elections", "2016"}));
  CHECK(tokenize("--- !!! ...").empty());
}

TEST_CASE("tokenize handles non-ASCII letters") {
  CHECK(tokenize("Müller über ÄRGER") == toks({"müller", "über", "ärger"}));
  CHECK(tokenize("naïve—café") == toks({"naïve", "café"}));
  // Invalid UTF-8 bytes separate tokens instead of failing.
  CHECK(tokenize("ab\xff\xfe" "cd") == toks({"ab", "cd"}));
}

TEST_CASE("remove_stopwords is an order-preserving filter") {
  const Stoplist stop{"the"};
  CHECK(remove_stopwords(toks({"the", "cat", "sat"}), stop) == toks({"cat", "sat"}));
  CHECK(remove_stopwords({}, stop).empty());
  CHECK(remove_stopwords(toks({"the", "the"}), stop).empty());
}

TEST_CASE("stoplist file format") {
  std::istringstream in("# english\nThe\nand  # inline comment\n\n  of\n");
  auto s = load_stoplist(in);
  CHECK(s == Stoplist{"the", "and", "of"});
}

TEST_CASE("bundled stopword lists load") {
  auto en = load_stoplist_file(std::string(EVIDEX_DATA_DIR) + "/stopwords/en.txt");
  CHECK(en.contains("the"));
  CHECK(en.contains("and"));
  CHECK_FALSE(en.contains("gatorade"));
  auto de = load_stoplist_file(std::string(EVIDEX_DATA_DIR) + "/stopwords/de.txt");
  CHECK(de.contains("und"));
}

TEST_CASE("build_document applies count over total") {
  auto table = table_of({"news", "media", "a", "b"});
  auto d = build_document(toks({"news", "news", "media"}), table);
  CHECK(d.tokens == toks({"news", "media"}));
  CHECK(d.weights[0] == 2.0 / 3.0);
  CHECK(d.weights[1] == 1.0 / 3.0);
  CHECK(d.source_token_count == 3);
  CHECK(d.dropped_oov.empty());

  auto e = build_document(toks({"a", "b", "b", "zzz"}), table);
  CHECK(*e.weight_of("a") == 1.0 / 3.0);
  CHECK(*e.weight_of("b") == 2.0 / 3.0);
  CHECK(e.dropped_oov == toks({"zzz"}));
  CHECK(e.source_token_count == 4);
}

TEST_CASE("build_document with no in-vocabulary support fails") {
  auto table = table_of({"a"});
  CHECK_THROWS_AS(build_document(toks({"zzz"}), table), evidex::EmptyDocumentError);
  CHECK_THROWS_WITH(build_document({}, table), "empty document support");
}

TEST_CASE("property: nBOW weights are exact rationals, sum to one, and ignore order") {
  auto table = table_of({"w0", "w1", "w2", "w3", "w4", "w5"});
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> tokens;
    const std::size_t n = 1 + rng() % 25;
    for (std::size_t k = 0; k < n; ++k) tokens.push_back("w" + std::to_string(rng() % 8));  // w6, w7 are OOV
    std::map<std::string, int> counts;
    int total = 0;
    for (const auto& t : tokens)
      if (table.contains(t)) ++counts[t], ++total;
    if (total == 0) {
      CHECK_THROWS_AS(build_document(tokens, table), evidex::EmptyDocumentError);
      continue;
    }
    auto d = build_document(tokens, table);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(d.weights[i] > 0.0);
      CHECK(d.weights[i] == static_cast<double>(counts[d.tokens[i]]) / total);
      sum += d.weights[i];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);

    auto shuffled = tokens;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto s = build_document(shuffled, table);
    REQUIRE(s.size() == d.size());
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(s.weight_of(d.tokens[i]) == d.weights[i]);
  }
}

TEST_CASE("extract_keywords boosts title terms") {
  const Stoplist stop{"the"};
  auto k = extract_keywords("Gatorade banned", "Gatorade fined. Gatorade responded.", 2, stop);
  REQUIRE(k.size() == 2);
  // Hand count: gatorade 1 in title + 2 in body = 3, times 3; banned 1 * 3.
  CHECK(k.keywords[0] == Keyword{"gatorade", 9.0});
  CHECK(k.keywords[1] == Keyword{"banned", 3.0});
}

TEST_CASE("extract_keywords edge cases") {
  const Stoplist stop{"the", "a", "of"};
  auto all = extract_keywords("alpha beta", "gamma", 10, stop);
  CHECK(all.size() == 3);
  // Ties broken lexicographically.
  CHECK(all.keywords[0].term == "alpha");
  CHECK(all.keywords[1].term == "beta");
  CHECK(all.keywords[2].term == "gamma");

  auto title_only = extract_keywords("Water ban", "the a of the", 5, stop);
  CHECK(title_only.size() == 2);
  for (const auto& kw : title_only.keywords) CHECK_FALSE(stop.contains(kw.term));

  CHECK(extract_keywords("", "", 3, stop).empty());
  CHECK_THROWS_AS(extract_keywords("a", "b", 0, stop), evidex::InputError);
}

TEST_CASE("property: keyword sets are sorted, unique, stopword free and deterministic") {
  const Stoplist stop{"s0", "s1"};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::string title, body;
    for (int k = 0; k < 4; ++k) title += "s" + std::to_string(rng() % 6) + " ";
    for (int k = 0; k < 30; ++k) body += "s" + std::to_string(rng() % 10) + " ";
    auto ks = extract_keywords(title, body, 5, stop);
    auto again = extract_keywords(title, body, 5, stop);
    CHECK(ks.keywords == again.keywords);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      CHECK(seen.insert(ks.keywords[i].term).second);
      CHECK_FALSE(stop.contains(ks.keywords[i].term));
      if (i > 0) CHECK(ks.keywords[i - 1].score >= ks.keywords[i].score);
    }
  }
}
