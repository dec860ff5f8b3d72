#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace evidex::embeddings {

using Vector = std::span<const double>;

// Immutable token -> vector map. Vectors are stored contiguously as doubles;
// on-disk binary tables carry 32-bit floats that widen exactly on load.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  std::size_t vocab_size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  // Tokens in insertion order.
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<Vector> lookup(std::string_view token) const;
  bool contains(std::string_view token) const { return lookup(token).has_value(); }

  // Messages about skipped duplicate tokens collected while loading.
  const std::vector<std::string>& warnings() const { return warnings_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b);

  // Builder interface used by the loaders and by tests. Returns false (and
  // records a warning) when the token is already present.
  class Builder;

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::size_t dimension_;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t, Hash, std::equal_to<>> index_;
  std::vector<std::string> warnings_;
};

class EmbeddingTable::Builder {
 public:
  explicit Builder(std::size_t dimension);

  void reserve(std::size_t n);
  // First occurrence wins; a duplicate only adds a warning.
  bool add(std::string token, std::span<const double> values);
  void warn(std::string message) { table_.warnings_.push_back(std::move(message)); }
  EmbeddingTable build() &&;

 private:
  EmbeddingTable table_;
};

// Text format: header "<vocab_size> <dimension>", then "<token> <f_1> ... <f_n>".
EmbeddingTable load_text(std::istream& in);
// Binary format: ASCII header line, then per entry the token, one space and
// n little-endian float32 values.
EmbeddingTable load_binary(std::istream& in);
// Entries written in lexicographic token order.
void save_binary(const EmbeddingTable& table, std::ostream& out);

// Loads by file extension: ".bin" is binary, anything else text.
EmbeddingTable load_file(const std::string& path);

std::optional<Vector> lookup(const EmbeddingTable& table, std::string_view token);

double euclidean(Vector u, Vector v);

}  // namespace evidex::embeddings
