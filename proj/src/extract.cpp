#include "evidex/extract.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "evidex/errors.hpp"
#include "evidex/html.hpp"
#include "evidex/textproc.hpp"
#include "json.hpp"

namespace evidex::extract {

namespace {

using html::Node;

bool is_boilerplate(const Node& n) {
  return n.kind == Node::Kind::Element &&
         (n.tag == "nav" || n.tag == "footer" || n.tag == "script" || n.tag == "style");
}

bool inside_boilerplate(const Node& n) {
  for (const Node* p = &n; p; p = p->parent) {
    if (is_boilerplate(*p)) return true;
  }
  return false;
}

std::string clean_text(const Node& n) { return html::normalize_space(html::text_content(n, is_boilerplate)); }

const std::string* meta_content(const Node& root, std::string_view key, std::string_view value) {
  const std::string* found = nullptr;
  html::for_each_element(root, [&](const Node& n) {
    if (found || n.tag != "meta") return;
    const std::string* k = n.attr(key);
    const std::string* c = n.attr("content");
    if (k && *k == value && c && !html::normalize_space(*c).empty()) found = c;
  });
  return found;
}

const Node* first_element(const Node& root, std::string_view tag) {
  const Node* found = nullptr;
  html::for_each_element(root, [&](const Node& n) {
    if (!found && n.tag == tag) found = &n;
  });
  return found;
}

std::string find_title(const Node& root) {
  if (const std::string* og = meta_content(root, "property", "og:title")) return html::normalize_space(*og);
  if (const Node* t = first_element(root, "title")) {
    std::string text = html::normalize_space(html::text_content(*t));
    if (!text.empty()) return text;
  }
  if (const Node* h1 = first_element(root, "h1")) return clean_text(*h1);
  return {};
}

std::optional<Date> find_date(const Node& root) {
  if (const std::string* meta = meta_content(root, "property", "article:published_time")) {
    if (auto d = parse_date(*meta)) return d;
  }
  std::optional<Date> found;
  html::for_each_element(root, [&](const Node& n) {
    if (found || n.tag != "time") return;
    if (const std::string* dt = n.attr("datetime")) found = parse_date(*dt);
  });
  return found;
}

std::vector<std::string> find_authors(const Node& root) {
  std::vector<std::string> out;
  html::for_each_element(root, [&](const Node& n) {
    if (n.tag != "meta") return;
    const std::string* name = n.attr("name");
    const std::string* prop = n.attr("property");
    const bool author = (name && *name == "author") || (prop && *prop == "article:author");
    const std::string* content = n.attr("content");
    if (!author || !content) return;
    std::string value = html::normalize_space(*content);
    if (!value.empty() && std::find(out.begin(), out.end(), value) == out.end()) out.push_back(std::move(value));
  });
  return out;
}

// Paragraph density: each <p> credits its text length to its parent and
// half of it to the grandparent.
std::string find_body(const Node& root) {
  std::unordered_map<const Node*, double> score;
  std::vector<const Node*> order;
  html::for_each_element(root, [&](const Node& n) {
    order.push_back(&n);
    if (n.tag != "p" || inside_boilerplate(n)) return;
    const double len = static_cast<double>(clean_text(n).size());
    if (len == 0.0 || !n.parent) return;
    score[n.parent] += len;
    if (n.parent->parent) score[n.parent->parent] += len / 2;
  });
  const Node* best = nullptr;
  double best_score = 0.0;
  for (const Node* n : order) {
    auto it = score.find(n);
    if (it != score.end() && it->second > best_score) {
      best = n;
      best_score = it->second;
    }
  }
  if (!best || inside_boilerplate(*best)) return {};
  std::string body;
  html::for_each_element(*best, [&](const Node& n) {
    if (n.tag != "p" || inside_boilerplate(n)) return;
    std::string text = clean_text(n);
    if (text.empty()) return;
    if (!body.empty()) body += "\n\n";
    body += text;
  });
  return body;
}

std::string override_text(const Node& root, const std::string& selector) {
  const Node* n = html::Selector::parse(selector).select_first(root);
  return n ? clean_text(*n) : std::string{};
}

std::string override_body(const Node& root, const std::string& selector) {
  std::string body;
  for (const Node* n : html::Selector::parse(selector).select_all(root)) {
    if (inside_boilerplate(*n)) continue;
    std::string text = clean_text(*n);
    if (text.empty()) continue;
    if (!body.empty()) body += "\n\n";
    body += text;
  }
  return body;
}

std::optional<Date> override_date(const Node& root, const std::string& selector) {
  const Node* n = html::Selector::parse(selector).select_first(root);
  if (!n) return std::nullopt;
  if (const std::string* dt = n->attr("datetime")) return parse_date(*dt);
  if (const std::string* c = n->attr("content")) return parse_date(*c);
  return parse_date(html::normalize_space(html::text_content(*n)));
}

// Reads exactly `width` digits.
bool read_int(std::string_view s, std::size_t& pos, std::size_t width, int& out) {
  if (s.size() - pos < width) return false;
  for (std::size_t k = 0; k < width; ++k) {
    if (s[pos + k] < '0' || s[pos + k] > '9') return false;
  }
  std::from_chars(s.data() + pos, s.data() + pos + width, out);
  pos += width;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

OverrideRules OverrideRules::from_json(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("override rules: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("override rules: expected an object keyed by host");
  OverrideRules rules;
  for (const auto& [host, spec] : doc.items()) {
    if (!spec.is_object()) throw ConfigError("override rules: entry for '" + host + "' is not an object");
    OverrideRule rule;
    for (const auto& [field, value] : spec.items()) {
      if (!value.is_string()) throw ConfigError("override rules: " + host + "." + field + " must be a string");
      std::string sel = value.get<std::string>();
      try {
        html::Selector::parse(sel);
      } catch (const InputError& e) {
        throw ConfigError("override rules: " + host + "." + field + ": " + e.what());
      }
      if (field == "title") rule.title = std::move(sel);
      else if (field == "body") rule.body = std::move(sel);
      else if (field == "date") rule.date = std::move(sel);
      else throw ConfigError("override rules: unknown field '" + field + "' for " + host);
    }
    rules.set(host, std::move(rule));
  }
  return rules;
}

OverrideRules OverrideRules::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open override rules '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void OverrideRules::set(std::string host, OverrideRule rule) {
  for (char& c : host) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  rules_.insert_or_assign(std::move(host), std::move(rule));
}

const OverrideRule* OverrideRules::find(std::string_view host) const {
  if (auto it = rules_.find(host); it != rules_.end()) return &it->second;
  if (host.starts_with("www.")) {
    if (auto it = rules_.find(host.substr(4)); it != rules_.end()) return &it->second;
  }
  return nullptr;
}

std::string host_of(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) return {};
  std::string_view rest = url.substr(scheme + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) rest = rest.substr(at + 1);
  if (auto colon = rest.find(':'); colon != std::string_view::npos) rest = rest.substr(0, colon);
  std::string host(rest);
  for (char& c : host) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return host;
}

Article extract_article(std::string_view html_text, std::string_view url, const OverrideRules& rules) {
  const html::Document doc = html::parse(html_text);
  const Node& root = doc.root();
  const OverrideRule* rule = rules.find(host_of(url));

  Article a;
  a.url = std::string(url);
  if (rule && !rule->title.empty()) a.title = override_text(root, rule->title);
  if (a.title.empty()) a.title = find_title(root);
  if (a.title.empty()) throw ExtractionError("no title");

  if (rule && !rule->date.empty()) a.published_at = override_date(root, rule->date);
  if (!a.published_at) a.published_at = find_date(root);

  a.authors = find_authors(root);

  if (rule && !rule->body.empty()) a.body = override_body(root, rule->body);
  if (a.body.empty()) a.body = find_body(root);
  if (a.body.empty()) throw ExtractionError("no content");
  a.word_count = textproc::tokenize(a.body).size();
  return a;
}

std::optional<Date> parse_date(std::string_view raw) {
  const std::string_view s = trim(raw);
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0;
  if (!read_int(s, pos, 4, y) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_int(s, pos, 2, mo) || pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!read_int(s, pos, 2, d)) return std::nullopt;
  const Date date{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(mo)),
                  std::chrono::day(static_cast<unsigned>(d))};
  if (!date.ok()) return std::nullopt;
  if (pos == s.size()) return date;

  if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
  ++pos;
  int h = 0, mi = 0, sec = 0;
  if (!read_int(s, pos, 2, h) || pos >= s.size() || s[pos++] != ':' || !read_int(s, pos, 2, mi)) return std::nullopt;
  if (pos < s.size() && s[pos] == ':') {
    ++pos;
    if (!read_int(s, pos, 2, sec)) return std::nullopt;
    if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;

  int offset_min = 0;
  if (pos < s.size()) {
    const char sign = s[pos];
    if (sign == 'Z' || sign == 'z') {
      ++pos;
    } else if (sign == '+' || sign == '-') {
      ++pos;
      int oh = 0, om = 0;
      if (!read_int(s, pos, 2, oh)) return std::nullopt;
      if (pos < s.size() && s[pos] == ':') ++pos;
      if (pos < s.size() && !read_int(s, pos, 2, om)) return std::nullopt;
      if (oh > 23 || om > 59) return std::nullopt;
      offset_min = (sign == '+' ? 1 : -1) * (oh * 60 + om);
    } else {
      return std::nullopt;
    }
  }
  if (pos != s.size()) return std::nullopt;

  using namespace std::chrono;
  const auto t = sys_days(date) + hours(h) + minutes(mi) + seconds(sec) - minutes(offset_min);
  return Date(floor<days>(t));
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

}  // namespace evidex::extract
