#include "evidex/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "evidex/errors.hpp"

namespace evidex::embeddings {

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

std::optional<Vector> EmbeddingTable::lookup(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return Vector(values_.data() + it->second * dimension_, dimension_);
}

bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
  if (a.dimension_ != b.dimension_ || a.tokens_.size() != b.tokens_.size()) return false;
  for (const auto& token : a.tokens_) {
    auto u = a.lookup(token);
    auto v = b.lookup(token);
    if (!v || !std::equal(u->begin(), u->end(), v->begin())) return false;
  }
  return true;
}

EmbeddingTable::Builder::Builder(std::size_t dimension) : table_(dimension) {}

void EmbeddingTable::Builder::reserve(std::size_t n) {
  table_.tokens_.reserve(n);
  table_.values_.reserve(n * table_.dimension_);
  table_.index_.reserve(n);
}

bool EmbeddingTable::Builder::add(std::string token, std::span<const double> values) {
  if (values.size() != table_.dimension_) {
    throw InputError("vector for '" + token + "' has length " + std::to_string(values.size()) +
                     ", table dimension is " + std::to_string(table_.dimension_));
  }
  if (table_.index_.contains(token)) {
    table_.warnings_.push_back("duplicate token '" + token + "' ignored");
    return false;
  }
  table_.index_.emplace(token, table_.tokens_.size());
  table_.tokens_.push_back(std::move(token));
  table_.values_.insert(table_.values_.end(), values.begin(), values.end());
  return true;
}

EmbeddingTable EmbeddingTable::Builder::build() && { return std::move(table_); }

namespace {

struct Header {
  std::size_t vocab_size;
  std::size_t dimension;
};

template <typename T>
bool parse_number(std::string_view field, T& out) {
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t next = line.find(' ', pos);
    if (next == std::string_view::npos) next = line.size();
    if (next > pos) fields.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return fields;
}

std::string_view trim_eol(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
    line.remove_suffix(1);
  }
  return line;
}

Header parse_header(std::string_view line, const std::string& where) {
  auto fields = split_spaces(trim_eol(line));
  Header h{};
  if (fields.size() != 2 || !parse_number(fields[0], h.vocab_size) ||
      !parse_number(fields[1], h.dimension)) {
    throw LoadError(where + ": malformed header, expected \"<vocab_size> <dimension>\"");
  }
  if (h.dimension == 0) throw LoadError(where + ": dimension must be positive");
  return h;
}

}  // namespace

EmbeddingTable load_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw LoadError("line 1: missing header");
  const Header header = parse_header(line, "line 1");

  EmbeddingTable::Builder builder(header.dimension);
  builder.reserve(header.vocab_size);
  std::vector<double> values(header.dimension);
  std::size_t line_no = 1;
  std::size_t entries = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim_eol(line);
    if (view.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (entries == header.vocab_size) {
      throw LoadError(where + ": more entries than the header declares (" +
                      std::to_string(header.vocab_size) + ")");
    }
    auto fields = split_spaces(view);
    if (fields.empty()) continue;
    const std::size_t got = fields.size() - 1;
    if (got != header.dimension) {
      throw LoadError(where + ": expected " + std::to_string(header.dimension) + " floats, got " +
                      std::to_string(got));
    }
    for (std::size_t k = 0; k < header.dimension; ++k) {
      if (!parse_number(fields[k + 1], values[k])) {
        throw LoadError(where + ": cannot parse float '" + std::string(fields[k + 1]) + "'");
      }
      if (!std::isfinite(values[k])) throw LoadError(where + ": non-finite value");
    }
    builder.add(std::string(fields[0]), values);
    ++entries;
  }
  if (entries != header.vocab_size) {
    throw LoadError("line " + std::to_string(line_no) + ": expected " +
                    std::to_string(header.vocab_size) + " entries, got " + std::to_string(entries));
  }
  return std::move(builder).build();
}

namespace {

float decode_le_float(const unsigned char* p) {
  std::uint32_t bits = std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
                       (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void encode_le_float(float f, unsigned char* p) {
  auto bits = std::bit_cast<std::uint32_t>(f);
  p[0] = static_cast<unsigned char>(bits);
  p[1] = static_cast<unsigned char>(bits >> 8);
  p[2] = static_cast<unsigned char>(bits >> 16);
  p[3] = static_cast<unsigned char>(bits >> 24);
}

}  // namespace

EmbeddingTable load_binary(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw LoadError("byte offset 0: missing header");
  const Header header = parse_header(line, "byte offset 0");
  std::size_t offset = line.size() + 1;

  std::streambuf* buf = in.rdbuf();
  EmbeddingTable::Builder builder(header.dimension);
  builder.reserve(header.vocab_size);
  std::vector<unsigned char> raw(header.dimension * 4);
  std::vector<double> values(header.dimension);
  std::string token;

  auto truncated = [&](std::size_t entry) {
    return LoadError("unexpected end of stream at entry " + std::to_string(entry) +
                     " (byte offset " + std::to_string(offset) + ")");
  };

  for (std::size_t entry = 1; entry <= header.vocab_size; ++entry) {
    token.clear();
    // word2vec writes a newline after each vector; tolerate it before a token.
    int c = buf->sgetc();
    while (c == '\n') {
      buf->sbumpc();
      ++offset;
      c = buf->sgetc();
    }
    for (;;) {
      c = buf->sbumpc();
      if (c == std::char_traits<char>::eof()) throw truncated(entry);
      ++offset;
      if (c == ' ') break;
      token.push_back(static_cast<char>(c));
    }
    if (token.empty()) {
      throw LoadError("empty token at entry " + std::to_string(entry) + " (byte offset " +
                      std::to_string(offset) + ")");
    }
    auto got = buf->sgetn(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (got != static_cast<std::streamsize>(raw.size())) {
      offset += static_cast<std::size_t>(std::max<std::streamsize>(got, 0));
      throw truncated(entry);
    }
    for (std::size_t k = 0; k < header.dimension; ++k) {
      float f = decode_le_float(raw.data() + 4 * k);
      if (!std::isfinite(f)) {
        throw LoadError("non-finite value at entry " + std::to_string(entry) + " (byte offset " +
                        std::to_string(offset + 4 * k) + ")");
      }
      values[k] = f;
    }
    offset += raw.size();
    builder.add(std::move(token), values);
  }

  for (int c = buf->sbumpc(); c != std::char_traits<char>::eof(); c = buf->sbumpc()) {
    if (c != '\n') {
      throw LoadError("header declares " + std::to_string(header.vocab_size) +
                      " entries but data continues at byte offset " + std::to_string(offset));
    }
    ++offset;
  }
  return std::move(builder).build();
}

void save_binary(const EmbeddingTable& table, std::ostream& out) {
  if (table.dimension() == 0) throw InputError("cannot save a table of dimension 0");
  std::vector<const std::string*> order;
  order.reserve(table.vocab_size());
  for (const auto& t : table.tokens()) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return *a < *b; });

  out << table.vocab_size() << ' ' << table.dimension() << '\n';
  std::vector<unsigned char> raw(table.dimension() * 4);
  for (const auto* token : order) {
    auto v = *table.lookup(*token);
    for (std::size_t k = 0; k < v.size(); ++k) encode_le_float(static_cast<float>(v[k]), raw.data() + 4 * k);
    out.write(token->data(), static_cast<std::streamsize>(token->size()));
    out.put(' ');
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  }
  out.flush();
  if (!out) throw Error("failed writing embedding table");
}

EmbeddingTable load_file(const std::string& path) {
  const bool binary = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw LoadError("cannot open embeddings file '" + path + "'");
  try {
    return binary ? load_binary(in) : load_text(in);
  } catch (const LoadError& e) {
    throw LoadError(path + ": " + e.what());
  }
}

std::optional<Vector> lookup(const EmbeddingTable& table, std::string_view token) {
  return table.lookup(token);
}

double euclidean(Vector u, Vector v) {
  if (u.size() != v.size()) {
    throw InputError("dimension mismatch: " + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u[k] - v[k];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace evidex::embeddings
