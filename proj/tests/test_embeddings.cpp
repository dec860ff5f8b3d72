#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "evidex/embeddings.hpp"
#include "evidex/errors.hpp"

using evidex::LoadError;
using namespace evidex::embeddings;

namespace {

EmbeddingTable make_table(std::size_t dim, std::initializer_list<std::pair<const char*, std::vector<double>>> rows) {
  EmbeddingTable::Builder b(dim);
  for (const auto& [t, v] : rows) b.add(t, v);
  return std::move(b).build();
}

std::string to_binary(const EmbeddingTable& t) {
  std::ostringstream out(std::ios::binary);
  save_binary(t, out);
  return out.str();
}

EmbeddingTable from_binary(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return load_binary(in);
}

std::string what_of(auto&& fn) {
  try {
    fn();
  } catch (const LoadError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("load_text parses header and rows") {
  std::istringstream in("2 3\ncat 0.1 0.2 0.3\ndog 1 0 0\n");
  auto t = load_text(in);
  CHECK(t.dimension() == 3);
  CHECK(t.vocab_size() == 2);
  auto cat = t.lookup("cat");
  REQUIRE(cat);
  CHECK((*cat)[0] == 0.1);
  CHECK((*cat)[1] == 0.2);
  CHECK((*cat)[2] == 0.3);
  auto dog = t.lookup("dog");
  REQUIRE(dog);
  CHECK(std::vector<double>(dog->begin(), dog->end()) == std::vector<double>{1, 0, 0});
}

TEST_CASE("load_text empty table keeps dimension") {
  std::istringstream in("0 5\n");
  auto t = load_text(in);
  CHECK(t.empty());
  CHECK(t.dimension() == 5);
}

TEST_CASE("load_text reports wrong field count with line number") {
  std::istringstream in("1 3\ncat 0.1 0.2\n");
  CHECK(what_of([&] { load_text(in); }) == "line 2: expected 3 floats, got 2");
}

TEST_CASE("load_text rejects malformed input") {
  CHECK(what_of([] {
          std::istringstream in("two 3\n");
          load_text(in);
        }).find("line 1") != std::string::npos);
  CHECK(what_of([] {
          std::istringstream in("1 2\na nan 1\n");
          load_text(in);
        }) == "line 2: non-finite value");
  CHECK(what_of([] {
          std::istringstream in("1 2\na inf 1\n");
          load_text(in);
        }) == "line 2: non-finite value");
  CHECK(what_of([] {
          std::istringstream in("1 2\na x 1\n");
          load_text(in);
        }).rfind("line 2:", 0) == 0);
  CHECK(what_of([] {
          std::istringstream in("2 2\na 1 1\n");
          load_text(in);
        }).find("expected 2 entries, got 1") != std::string::npos);
}

TEST_CASE("load_text tolerates trailing spaces and CRLF") {
  std::istringstream in("1 2\r\nword 0.5 -0.5 \r\n");
  auto t = load_text(in);
  CHECK(t.lookup("word"));
}

TEST_CASE("duplicate tokens: first wins with a warning") {
  std::istringstream in("2 1\na 1\na 2\n");
  auto t = load_text(in);
  CHECK(t.vocab_size() == 1);
  CHECK((*t.lookup("a"))[0] == 1.0);
  REQUIRE(t.warnings().size() == 1);
  CHECK(t.warnings()[0].find("duplicate") != std::string::npos);
}

TEST_CASE("lookup is exact and case-sensitive") {
  auto t = make_table(2, {{"cat", {1, 2}}});
  auto v = lookup(t, "cat");
  REQUIRE(v);
  CHECK((*v)[0] == 1.0);
  CHECK((*v)[1] == 2.0);
  CHECK_FALSE(lookup(t, "Cat"));
  CHECK_FALSE(lookup(EmbeddingTable(3), "x"));
  // Repeated lookups are identical.
  CHECK(lookup(t, "cat")->data() == lookup(t, "cat")->data());
}

TEST_CASE("binary round trip and determinism") {
  auto t = make_table(2, {{"cat", {0.5, -1.0}}});
  const auto bytes = to_binary(t);
  CHECK(from_binary(bytes) == t);
  CHECK(to_binary(t) == bytes);
  CHECK(to_binary(from_binary(bytes)) == bytes);

  auto single = make_table(1, {{"a", {0}}});
  CHECK(from_binary(to_binary(single)) == single);
}

TEST_CASE("save_binary of an empty table writes only the header") {
  CHECK(to_binary(EmbeddingTable(4)) == "0 4\n");
}

TEST_CASE("save_binary orders entries lexicographically") {
  auto t = make_table(1, {{"b", {1}}, {"a", {2}}});
  const auto bytes = to_binary(t);
  CHECK(bytes.find("a ") < bytes.find("b "));
}

TEST_CASE("load_binary minimal well-formed input") {
  std::string bytes = "1 2\na ";
  const float vals[2] = {1.5f, -2.0f};
  bytes.append(reinterpret_cast<const char*>(vals), 8);  // host is little-endian x86
  auto t = from_binary(bytes);
  CHECK(t.vocab_size() == 1);
  CHECK((*t.lookup("a"))[1] == -2.0);
}

TEST_CASE("load_binary reports truncation") {
  auto t = make_table(2, {{"cat", {0.5, -1.0}}});
  auto bytes = to_binary(t);
  bytes.resize(bytes.size() - 3);
  const auto msg = what_of([&] { from_binary(bytes); });
  CHECK(msg.rfind("unexpected end of stream at entry 1", 0) == 0);
  CHECK(msg.find("byte offset") != std::string::npos);

  CHECK(what_of([] { from_binary("2 1\na \x00\x00\x80\x3f"); }).rfind("unexpected end of stream at entry", 0) == 0);
  CHECK(what_of([] { from_binary("x\n"); }).find("malformed header") != std::string::npos);
}

TEST_CASE("load_binary rejects data beyond the declared entries") {
  auto bytes = to_binary(make_table(1, {{"a", {1}}})) + "b ";
  CHECK(what_of([&] { from_binary(bytes); }).find("data continues") != std::string::npos);
}

TEST_CASE("binary stores 32-bit floats") {
  auto t = make_table(1, {{"x", {0.1}}});
  auto back = from_binary(to_binary(t));
  CHECK((*back.lookup("x"))[0] == static_cast<double>(0.1f));
}

TEST_CASE("property: binary round trip on random tables is bit exact after quantization") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 1 + rng() % 8;
    EmbeddingTable::Builder b(dim);
    const std::size_t n = rng() % 30;
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < n; ++k) {
      for (auto& x : v) x = static_cast<float>(g(rng));
      b.add("tok" + std::to_string(rng() % 1000), v);
    }
    auto t = std::move(b).build();
    const auto bytes = to_binary(t);
    CHECK(from_binary(bytes) == t);
    CHECK(to_binary(from_binary(bytes)) == bytes);
  }
}

TEST_CASE("euclidean") {
  const std::vector<double> a{0, 3}, b{4, 0}, one{1}, minus_one{-1};
  CHECK(euclidean(a, b) == 5.0);
  CHECK(euclidean(a, a) == 0.0);
  CHECK(euclidean(one, minus_one) == 2.0);
  CHECK_THROWS_AS(euclidean(a, one), evidex::InputError);
}

TEST_CASE("property: euclidean is symmetric and satisfies the triangle inequality") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 1 + rng() % 10;
    std::vector<double> u(dim), v(dim), w(dim);
    for (std::size_t k = 0; k < dim; ++k) u[k] = g(rng), v[k] = g(rng), w[k] = g(rng);
    CHECK(euclidean(u, v) == euclidean(v, u));
    const double lhs = euclidean(u, w);
    const double rhs = euclidean(u, v) + euclidean(v, w);
    CHECK(lhs <= rhs * (1 + 1e-12));
  }
}
