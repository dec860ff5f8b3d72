#include "evidex/html.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>

#include "evidex/errors.hpp"

namespace evidex::html {

namespace {

constexpr std::array kVoidElements{"area", "base", "br",   "col",   "embed", "hr",    "img",
                                   "input", "link", "meta", "param", "source", "track", "wbr"};
constexpr std::array kRawTextElements{"script", "style", "textarea", "title"};
// Start tags that implicitly close an open <p>.
constexpr std::array kClosesParagraph{"address", "article", "aside", "blockquote", "div", "dl",     "fieldset",
                                      "figure",  "footer",  "form",  "h1",         "h2",  "h3",     "h4",
                                      "h5",      "h6",      "header", "hr",        "main", "nav",   "ol",
                                      "p",       "pre",     "section", "table",    "ul"};
// Elements that bound the search for an open <p> or <li> to close.
constexpr std::array kScopeBoundary{"html", "body", "article", "section", "div", "td", "th", "blockquote",
                                    "table", "main", "aside", "header", "footer", "nav", "figure", "button"};

template <std::size_t N>
bool in(const std::array<const char*, N>& set, std::string_view tag) {
  return std::any_of(set.begin(), set.end(), [&](const char* s) { return tag == s; });
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }
bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

bool istarts_with(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (text.size() - pos < prefix.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k) {
    if (lower(text[pos + k]) != prefix[k]) return false;
  }
  return true;
}

void append_utf8(char32_t cp, std::string& out) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
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

struct NamedEntity {
  std::string_view name;
  char32_t cp;
};

constexpr std::array kEntities{
    NamedEntity{"amp", U'&'},      NamedEntity{"lt", U'<'},       NamedEntity{"gt", U'>'},
    NamedEntity{"quot", U'"'},     NamedEntity{"apos", U'\''},    NamedEntity{"nbsp", 0xA0},
    NamedEntity{"ndash", 0x2013},  NamedEntity{"mdash", 0x2014},  NamedEntity{"hellip", 0x2026},
    NamedEntity{"lsquo", 0x2018},  NamedEntity{"rsquo", 0x2019},  NamedEntity{"ldquo", 0x201C},
    NamedEntity{"rdquo", 0x201D},  NamedEntity{"copy", 0xA9},     NamedEntity{"reg", 0xAE},
    NamedEntity{"euro", 0x20AC},   NamedEntity{"pound", 0xA3},    NamedEntity{"uuml", 0xFC},
    NamedEntity{"ouml", 0xF6},     NamedEntity{"auml", 0xE4},     NamedEntity{"eacute", 0xE9},
    NamedEntity{"szlig", 0xDF},
};

class Parser {
 public:
  explicit Parser(std::string_view html, Node& root) : s_(html), stack_{&root} {}

  void run() {
    std::string text;
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '<' && pos_ + 1 < s_.size()) {
        const char next = s_[pos_ + 1];
        if (next == '!' || next == '?' || next == '/' || is_alpha(next)) {
          flush_text(text);
          markup();
          continue;
        }
      }
      text.push_back(c);
      ++pos_;
    }
    flush_text(text);
  }

 private:
  Node& current() { return *stack_.back(); }

  Node& append(std::unique_ptr<Node> node) {
    node->parent = &current();
    current().children.push_back(std::move(node));
    return *current().children.back();
  }

  void flush_text(std::string& text) {
    if (text.empty()) return;
    auto node = std::make_unique<Node>();
    node->kind = Node::Kind::Text;
    node->text = decode_entities(text);
    append(std::move(node));
    text.clear();
  }

  void markup() {
    if (s_.compare(pos_, 4, "<!--") == 0) {
      const auto end = s_.find("-->", pos_ + 4);
      pos_ = end == std::string_view::npos ? s_.size() : end + 3;
      return;
    }
    const char next = s_[pos_ + 1];
    if (next == '!' || next == '?') {
      const auto end = s_.find('>', pos_);
      pos_ = end == std::string_view::npos ? s_.size() : end + 1;
      return;
    }
    if (next == '/') {
      end_tag();
      return;
    }
    start_tag();
  }

  std::string read_name() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '>' && s_[pos_] != '/' && s_[pos_] != '=') ++pos_;
    return lowercase(s_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  void end_tag() {
    pos_ += 2;
    const std::string name = read_name();
    const auto close = s_.find('>', pos_);
    pos_ = close == std::string_view::npos ? s_.size() : close + 1;
    if (name.empty()) return;
    for (std::size_t k = stack_.size(); k-- > 1;) {
      if (stack_[k]->tag == name) {
        stack_.resize(k);
        return;
      }
    }
  }

  void close_open(std::string_view tag, bool also_list_scope) {
    for (std::size_t k = stack_.size(); k-- > 1;) {
      const std::string& t = stack_[k]->tag;
      if (t == tag) {
        stack_.resize(k);
        return;
      }
      if (in(kScopeBoundary, t) || (also_list_scope && (t == "ul" || t == "ol"))) return;
    }
  }

  void start_tag() {
    ++pos_;
    auto node = std::make_unique<Node>();
    node->tag = read_name();
    bool self_closing = false;
    while (pos_ < s_.size()) {
      skip_space();
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (s_[pos_] == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      std::string name = read_name();
      if (name.empty()) {
        ++pos_;  // stray '='
        continue;
      }
      skip_space();
      std::string value;
      if (pos_ < s_.size() && s_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
          const char quote = s_[pos_++];
          const auto close = s_.find(quote, pos_);
          const auto end = close == std::string_view::npos ? s_.size() : close;
          value = decode_entities(s_.substr(pos_, end - pos_));
          pos_ = close == std::string_view::npos ? s_.size() : close + 1;
        } else {
          const std::size_t start = pos_;
          while (pos_ < s_.size() && !is_space(s_[pos_]) && s_[pos_] != '>') ++pos_;
          value = decode_entities(s_.substr(start, pos_ - start));
        }
      }
      const bool seen = std::any_of(node->attrs.begin(), node->attrs.end(),
                                    [&](const auto& kv) { return kv.first == name; });
      if (!seen) node->attrs.emplace_back(std::move(name), std::move(value));
    }

    const std::string tag = node->tag;
    if (in(kClosesParagraph, tag)) close_open("p", false);
    if (tag == "li") close_open("li", true);

    if (in(kRawTextElements, tag)) {
      Node& element = append(std::move(node));
      raw_text(element);
      return;
    }
    Node& element = append(std::move(node));
    if (!self_closing && !in(kVoidElements, tag) && stack_.size() < kMaxDepth) stack_.push_back(&element);
  }

  // Content of script/style/textarea/title runs to the matching end tag.
  void raw_text(Node& element) {
    const std::string closing = "</" + element.tag;
    std::size_t end = pos_;
    while (end < s_.size() && !istarts_with(s_, end, closing)) ++end;
    auto text = std::make_unique<Node>();
    text->kind = Node::Kind::Text;
    const std::string_view raw = s_.substr(pos_, end - pos_);
    text->text = element.tag == "title" || element.tag == "textarea" ? decode_entities(raw) : std::string(raw);
    text->parent = &element;
    element.children.push_back(std::move(text));
    if (end >= s_.size()) {
      pos_ = s_.size();
      return;
    }
    const auto close = s_.find('>', end);
    pos_ = close == std::string_view::npos ? s_.size() : close + 1;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<Node*> stack_;
};

}  // namespace

const std::string* Node::attr(std::string_view name) const {
  for (const auto& [k, v] : attrs) {
    if (k == name) return &v;
  }
  return nullptr;
}

bool Node::has_class(std::string_view name) const {
  const std::string* cls = attr("class");
  if (!cls) return false;
  std::size_t pos = 0;
  while (pos < cls->size()) {
    while (pos < cls->size() && is_space((*cls)[pos])) ++pos;
    std::size_t end = pos;
    while (end < cls->size() && !is_space((*cls)[end])) ++end;
    if (end > pos && std::string_view(*cls).substr(pos, end - pos) == name) return true;
    pos = end;
  }
  return false;
}

Document::Document() : root_(std::make_unique<Node>()) { root_->tag = "#document"; }

Document parse(std::string_view html) {
  Document doc;
  Parser(html, doc.root()).run();
  return doc;
}

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c != '&') {
      out.push_back(c);
      ++pos;
      continue;
    }
    const auto semi = text.find(';', pos);
    if (semi == std::string_view::npos || semi - pos > 12) {
      out.push_back(c);
      ++pos;
      continue;
    }
    const std::string_view body = text.substr(pos + 1, semi - pos - 1);
    bool decoded = false;
    if (!body.empty() && body[0] == '#') {
      std::uint32_t cp = 0;
      const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
      const std::string_view digits = body.substr(hex ? 2 : 1);
      const char* end = digits.data() + digits.size();
      auto [ptr, ec] = std::from_chars(digits.data(), end, cp, hex ? 16 : 10);
      if (!digits.empty() && ec == std::errc() && ptr == end) {
        append_utf8(cp, out);
        decoded = true;
      }
    } else {
      for (const auto& e : kEntities) {
        if (e.name == body) {
          append_utf8(e.cp, out);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      pos = semi + 1;
    } else {
      out.push_back(c);
      ++pos;
    }
  }
  return out;
}

std::string normalize_space(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    // U+00A0 no-break space arrives as C2 A0.
    const bool nbsp = static_cast<unsigned char>(text[pos]) == 0xC2 && pos + 1 < text.size() &&
                      static_cast<unsigned char>(text[pos + 1]) == 0xA0;
    if (is_space(text[pos]) || nbsp) {
      pending = true;
      pos += nbsp ? 2 : 1;
      continue;
    }
    if (pending && !out.empty()) out.push_back(' ');
    pending = false;
    out.push_back(text[pos++]);
  }
  return out;
}

std::string text_content(const Node& node, const std::function<bool(const Node&)>& skip) {
  std::string out;
  auto walk = [&](const Node& n, auto&& self) -> void {
    if (n.kind == Node::Kind::Text) {
      out += n.text;
      return;
    }
    if (skip && skip(n)) return;
    if (n.tag == "br") out.push_back(' ');
    for (const auto& child : n.children) self(*child, self);
  };
  walk(node, walk);
  return out;
}

void for_each_element(const Node& node, const std::function<void(const Node&)>& fn) {
  if (node.kind != Node::Kind::Element) return;
  fn(node);
  for (const auto& child : node.children) for_each_element(*child, fn);
}

bool Selector::Compound::matches(const Node& e) const {
  if (e.kind != Node::Kind::Element) return false;
  if (!tag.empty() && tag != "*" && e.tag != tag) return false;
  if (!id.empty()) {
    const std::string* v = e.attr("id");
    if (!v || *v != id) return false;
  }
  for (const auto& cls : classes) {
    if (!e.has_class(cls)) return false;
  }
  for (std::size_t k = 0; k < attrs.size(); ++k) {
    const std::string* v = e.attr(attrs[k].first);
    if (!v || (attr_has_value[k] && *v != attrs[k].second)) return false;
  }
  return true;
}

Selector Selector::parse(std::string_view text) {
  Selector sel;
  std::size_t pos = 0;
  auto ident = [&] {
    const std::size_t start = pos;
    while (pos < text.size() && !is_space(text[pos]) && std::string_view(".#[]=>+~,:").find(text[pos]) == std::string_view::npos)
      ++pos;
    return std::string(text.substr(start, pos - start));
  };
  while (pos < text.size()) {
    while (pos < text.size() && is_space(text[pos])) ++pos;
    if (pos >= text.size()) break;
    if (std::string_view(">+~,:").find(text[pos]) != std::string_view::npos)
      throw InputError("unsupported selector syntax in '" + std::string(text) + "'");
    Compound c;
    if (text[pos] != '.' && text[pos] != '#' && text[pos] != '[') c.tag = lowercase(ident());
    while (pos < text.size() && !is_space(text[pos])) {
      const char kind = text[pos++];
      if (kind == '.') {
        c.classes.push_back(ident());
      } else if (kind == '#') {
        c.id = ident();
      } else if (kind == '[') {
        std::string name = lowercase(ident());
        std::string value;
        bool has_value = false;
        if (pos < text.size() && text[pos] == '=') {
          ++pos;
          has_value = true;
          std::size_t end = text.find(']', pos);
          if (end == std::string_view::npos) throw InputError("unterminated attribute selector in '" + std::string(text) + "'");
          value = std::string(text.substr(pos, end - pos));
          if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
            value = value.substr(1, value.size() - 2);
          pos = end;
        }
        if (pos >= text.size() || text[pos] != ']') throw InputError("unterminated attribute selector in '" + std::string(text) + "'");
        ++pos;
        c.attrs.emplace_back(std::move(name), std::move(value));
        c.attr_has_value.push_back(has_value);
      } else {
        throw InputError("unsupported selector syntax in '" + std::string(text) + "'");
      }
    }
    sel.chain_.push_back(std::move(c));
  }
  if (sel.chain_.empty()) throw InputError("empty selector");
  return sel;
}

bool Selector::matches(const Node& element) const {
  if (!chain_.back().matches(element)) return false;
  // Remaining compounds must match successive ancestors, right to left.
  const Node* anc = element.parent;
  for (std::size_t k = chain_.size() - 1; k-- > 0;) {
    while (anc && !chain_[k].matches(*anc)) anc = anc->parent;
    if (!anc) return false;
    anc = anc->parent;
  }
  return true;
}

std::vector<const Node*> Selector::select_all(const Node& root) const {
  std::vector<const Node*> out;
  for_each_element(root, [&](const Node& n) {
    if (matches(n)) out.push_back(&n);
  });
  return out;
}

const Node* Selector::select_first(const Node& root) const {
  auto all = select_all(root);
  return all.empty() ? nullptr : all.front();
}

}  // namespace evidex::html
