#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Minimal tag-soup HTML parser: enough structure for article extraction,
// tolerant of unclosed and misnested tags, never throws on malformed input.
namespace evidex::html {

struct Node {
  enum class Kind { Element, Text };

  Kind kind = Kind::Element;
  std::string tag;  // lowercase; empty for text nodes
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;  // entity-decoded content of text nodes
  Node* parent = nullptr;
  std::vector<std::unique_ptr<Node>> children;

  bool is_element(std::string_view name) const { return kind == Kind::Element && tag == name; }
  const std::string* attr(std::string_view name) const;
  bool has_class(std::string_view name) const;
};

class Document {
 public:
  Document();
  const Node& root() const { return *root_; }
  Node& root() { return *root_; }

 private:
  std::unique_ptr<Node> root_;
};

// Open elements beyond this depth are attached flat to the deepest allowed
// ancestor, which bounds recursion for pathological inputs.
inline constexpr std::size_t kMaxDepth = 256;

Document parse(std::string_view html);

std::string decode_entities(std::string_view text);

// Collapses whitespace runs (including no-break spaces) to single spaces and
// trims both ends.
std::string normalize_space(std::string_view text);

// Concatenated descendant text. Subtrees for which `skip` returns true are
// left out.
std::string text_content(const Node& node, const std::function<bool(const Node&)>& skip = {});

// Pre-order walk over element nodes.
void for_each_element(const Node& node, const std::function<void(const Node&)>& fn);

// Descendant-combinator chains of compound selectors: tag, #id, .class,
// [attr] and [attr=value], e.g. "div.story p" or "meta[property=og:title]".
class Selector {
 public:
  static Selector parse(std::string_view text);

  bool matches(const Node& element) const;
  std::vector<const Node*> select_all(const Node& root) const;
  const Node* select_first(const Node& root) const;

 private:
  struct Compound {
    std::string tag;
    std::string id;
    std::vector<std::string> classes;
    std::vector<std::pair<std::string, std::string>> attrs;  // empty value: presence only
    std::vector<bool> attr_has_value;

    bool matches(const Node& element) const;
  };

  std::vector<Compound> chain_;
};

}  // namespace evidex::html
