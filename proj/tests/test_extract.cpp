#include <random>

#include "doctest.h"
#include "evidex/errors.hpp"
#include "evidex/extract.hpp"
#include "evidex/html.hpp"
#include "evidex/textproc.hpp"

using namespace evidex::extract;
using namespace std::chrono;

namespace {

std::string repeat_text(const std::string& unit, std::size_t len) {
  std::string out;
  while (out.size() < len) out += unit;
  out.resize(len);
  return out;
}

}  // namespace

TEST_CASE("html parser builds a tree from tag soup") {
  auto doc = evidex::html::parse("<div id=a class='x y'><p>one<p>two</div><br>tail &amp; more");
  const auto& root = doc.root();
  REQUIRE(root.children.size() == 3);
  const auto& div = *root.children[0];
  CHECK(div.tag == "div");
  CHECK(*div.attr("id") == "a");
  CHECK(div.has_class("y"));
  CHECK_FALSE(div.has_class("z"));
  // second <p> closes the first
  REQUIRE(div.children.size() == 2);
  CHECK(evidex::html::text_content(*div.children[1]) == "two");
  CHECK(root.children[2]->text == "tail & more");
}

TEST_CASE("html parser keeps script bodies raw and skips comments") {
  auto doc = evidex::html::parse("<script>if (a < b) { x = '</p>'; }</script><!-- <p>gone</p> --><p>kept</p>");
  const auto& root = doc.root();
  REQUIRE(root.children.size() == 2);
  CHECK(evidex::html::text_content(*root.children[0]) == "if (a < b) { x = '</p>'; }");
  CHECK(evidex::html::text_content(*root.children[1]) == "kept");
}

TEST_CASE("entity decoding") {
  using evidex::html::decode_entities;
  CHECK(decode_entities("a &lt;b&gt; &quot;c&quot;") == "a <b> \"c\"");
  CHECK(decode_entities("&#233;&#xE9;") == "\xC3\xA9\xC3\xA9");
  CHECK(decode_entities("AT&T &unknown; &") == "AT&T &unknown; &");
  CHECK(evidex::html::normalize_space("  a\n\t b  c ") == "a b c");
  CHECK(evidex::html::normalize_space(decode_entities(" a&nbsp;b ")) == "a b");
}

TEST_CASE("selectors") {
  auto doc = evidex::html::parse(
      "<div class='story main'><p>a</p><span><p>b</p></span></div><p>c</p>"
      "<meta property='og:title' content='T'>");
  using evidex::html::Selector;
  CHECK(Selector::parse("div.story p").select_all(doc.root()).size() == 2);
  CHECK(Selector::parse("p").select_all(doc.root()).size() == 3);
  CHECK(Selector::parse(".main span p").select_all(doc.root()).size() == 1);
  CHECK(Selector::parse("meta[property=og:title]").select_first(doc.root()) != nullptr);
  CHECK(Selector::parse("meta[property='og:title']").select_first(doc.root()) != nullptr);
  CHECK(Selector::parse("meta[name]").select_first(doc.root()) == nullptr);
  CHECK_THROWS_AS(Selector::parse("a > b"), evidex::InputError);
  CHECK_THROWS_AS(Selector::parse("  "), evidex::InputError);
}

TEST_CASE("deep nesting is capped") {
  std::string deep;
  for (int k = 0; k < 100000; ++k) deep += "<div>";
  deep += "<p>x</p>";
  auto doc = evidex::html::parse(deep);
  CHECK(evidex::html::text_content(doc.root()) == "x");
}

TEST_CASE("minimal page") {
  auto a = extract_article("<title>T</title><article><p>Hello world.</p></article>", "https://x.test/a");
  CHECK(a.title == "T");
  CHECK(a.body == "Hello world.");
  CHECK(a.authors.empty());
  CHECK_FALSE(a.published_at.has_value());
  CHECK(a.word_count == 2);
  CHECK(a.url == "https://x.test/a");
}

TEST_CASE("title priority: og:title, then <title>, then first h1") {
  const std::string body = "<article><p>Body text.</p></article>";
  CHECK(extract_article("<meta property='og:title' content='A'><title>B</title><h1>C</h1>" + body, "").title == "A");
  CHECK(extract_article("<title> B </title><h1>C</h1>" + body, "").title == "B");
  CHECK(extract_article("<title></title><h1>C <em>x</em></h1>" + body, "").title == "C x");
  CHECK_THROWS_WITH_AS(extract_article(body, ""), "no title", evidex::ExtractionError);
}

TEST_CASE("body comes from the densest paragraph container") {
  // Container A: 3 paragraphs, 500 chars total. Container B: 1 paragraph of 50.
  const std::string p1 = repeat_text("alpha ", 200), p2 = repeat_text("beta ", 150), p3 = repeat_text("gamma ", 150);
  const std::string small = repeat_text("delta ", 50);
  REQUIRE(p1.size() + p2.size() + p3.size() == 500);
  const std::string page = "<html><head><title>T</title></head><body>"
                           "<div id='b'><p>" + small + "</p></div>"
                           "<div id='a'><p>" + p1 + "</p><p>" + p2 + "</p><p>" + p3 + "</p></div>"
                           "</body></html>";
  auto a = extract_article(page, "");
  // Each paragraph's trailing space is trimmed by whitespace normalization.
  auto trimmed = [](std::string s) { return evidex::html::normalize_space(s); };
  CHECK(a.body == trimmed(p1) + "\n\n" + trimmed(p2) + "\n\n" + trimmed(p3));
  CHECK(a.body.find("delta") == std::string::npos);
}

TEST_CASE("boilerplate subtrees never reach the body") {
  const std::string page =
      "<title>T</title><nav><p>Home News Sport Weather and a long menu of things to click on here</p></nav>"
      "<article><p>Real content one.</p><script>var tracking = 1;</script><p>Real content two.</p>"
      "<footer><p>Copyright notice that goes on and on for quite a while in the footer</p></footer>"
      "<style>p { color: red }</style></article>";
  auto a = extract_article(page, "");
  CHECK(a.body == "Real content one.\n\nReal content two.");
}

TEST_CASE("page whose only paragraphs are boilerplate has no content") {
  CHECK_THROWS_WITH_AS(extract_article("<title>T</title><footer><p>Copyright</p></footer>", ""), "no content",
                       evidex::ExtractionError);
  CHECK_THROWS_WITH_AS(extract_article("<title>T</title><div>text but no paragraphs</div>", ""), "no content",
                       evidex::ExtractionError);
}

TEST_CASE("metadata: dates and authors") {
  const std::string page =
      "<head><title>T</title><meta property='article:published_time' content='2021-03-28T23:30:00-02:00'>"
      "<meta name='author' content='Jane Roe'><meta property='article:author' content='John Doe'>"
      "<meta name='author' content='Jane Roe'></head><body><time datetime='2020-01-01'>Jan 1</time>"
      "<article><p>Text.</p></article></body>";
  auto a = extract_article(page, "");
  REQUIRE(a.published_at.has_value());
  CHECK(*a.published_at == 2021y / March / 29d);
  CHECK(a.authors == std::vector<std::string>{"Jane Roe", "John Doe"});

  auto b = extract_article("<title>T</title><time datetime='2020-01-01T00:00'>x</time><p>Text.</p>", "");
  REQUIRE(b.published_at.has_value());
  CHECK(*b.published_at == 2020y / January / 1d);
}

TEST_CASE("parse_date") {
  CHECK(parse_date("2021-03-28T10:00:00Z") == 2021y / March / 28d);
  CHECK_FALSE(parse_date("garbage").has_value());
  CHECK(parse_date("2021-03-28") == 2021y / March / 28d);
  CHECK(parse_date(" 2021-03-28 ") == 2021y / March / 28d);
  CHECK(parse_date("2021-03-28T10:00:00.123+05:30") == 2021y / March / 28d);
  CHECK(parse_date("2021-03-28T02:00:00+05:30") == 2021y / March / 27d);
  CHECK(parse_date("2021-12-31T22:00-0300") == 2022y / January / 1d);
  CHECK(parse_date("2021-03-28 10:00:00+01") == 2021y / March / 28d);
  CHECK_FALSE(parse_date("2021-02-30").has_value());
  CHECK_FALSE(parse_date("2021-03-28T25:00").has_value());
  CHECK_FALSE(parse_date("2021-03-28Tfoo").has_value());
  CHECK_FALSE(parse_date("2021-3-28").has_value());
  CHECK_FALSE(parse_date("").has_value());
  CHECK(format_date(2021y / March / 8d) == "2021-03-08");
}

TEST_CASE("per-host override rules") {
  auto rules = OverrideRules::from_json(
      R"({"example.org": {"title": "h2.headline", "body": "div.text", "date": "span.when"}})");
  const std::string page =
      "<title>Site name</title><h2 class='headline'>Real headline</h2>"
      "<span class='when'>2019-07-04</span>"
      "<div class='text'>First block</div><div class='text'>Second block</div>"
      "<aside><p>A much longer unrelated paragraph that the density heuristic would choose.</p></aside>";
  auto a = extract_article(page, "https://www.Example.org/story?id=1", rules);
  CHECK(a.title == "Real headline");
  CHECK(a.body == "First block\n\nSecond block");
  CHECK(a.published_at == 2019y / July / 4d);

  auto generic = extract_article(page, "https://other.org/story", rules);
  CHECK(generic.title == "Site name");
  CHECK(generic.body.starts_with("A much longer"));

  CHECK_THROWS_AS(OverrideRules::from_json("[1]"), evidex::ConfigError);
  CHECK_THROWS_AS(OverrideRules::from_json(R"({"h": {"tilte": "x"}})"), evidex::ConfigError);
  CHECK_THROWS_AS(OverrideRules::from_json(R"({"h": {"body": "a > b"}})"), evidex::ConfigError);
}

TEST_CASE("host_of") {
  CHECK(host_of("https://www.CNN.com/2021/03/28/x.html") == "www.cnn.com");
  CHECK(host_of("http://user@host.test:8080/p?q") == "host.test");
  CHECK(host_of("not a url") == "");
}

TEST_CASE("property: extraction is deterministic and survives byte mutations") {
  const std::string page =
      "<html><head><title>Water &amp; sport</title><meta property='article:published_time' content='2021-03-28'>"
      "</head><body><nav><a href='/'>Home</a></nav><article><h1>Heading</h1><p>Paragraph one has words.</p>"
      "<p>Paragraph <b>two</b> has more words &mdash; and an entity.</p></article><footer>f</footer></body></html>";
  auto first = extract_article(page, "u");
  CHECK(first == extract_article(page, "u"));
  CHECK(first.word_count == evidex::textproc::tokenize(first.body).size());

  std::mt19937_64 rng(11);
  int extracted = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::string m = page;
    const int edits = 1 + static_cast<int>(rng() % 8);
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = rng() % (m.size() + 1);
      switch (rng() % 3) {
        case 0: if (at < m.size()) m[at] = static_cast<char>(rng() % 256); break;
        case 1: m.insert(m.begin() + static_cast<std::ptrdiff_t>(at), static_cast<char>(rng() % 256)); break;
        default: if (at < m.size()) m.erase(at, 1 + rng() % 6); break;
      }
    }
    try {
      auto a = extract_article(m, "u");
      CHECK_FALSE(a.title.empty());
      CHECK(a == extract_article(m, "u"));
      ++extracted;
    } catch (const evidex::ExtractionError&) {
    }
  }
  CHECK(extracted > 0);
}
