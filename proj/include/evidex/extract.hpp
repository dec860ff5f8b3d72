#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evidex::extract {

using Date = std::chrono::year_month_day;

struct Article {
  std::string url;
  std::string title;
  std::vector<std::string> authors;
  std::optional<Date> published_at;
  std::string body;  // paragraphs separated by blank lines
  std::size_t word_count = 0;

  friend bool operator==(const Article&, const Article&) = default;
};

// Selectors that replace the generic heuristics for one host. Empty fields
// fall back to the heuristic.
struct OverrideRule {
  std::string title;
  std::string body;  // every match contributes its text as one paragraph
  std::string date;  // element whose datetime/content attribute or text holds the date
};

class OverrideRules {
 public:
  OverrideRules() = default;

  // {"host": {"title": "...", "body": "...", "date": "..."}, ...}
  static OverrideRules from_json(std::string_view json);
  static OverrideRules load_file(const std::string& path);

  void set(std::string host, OverrideRule rule);
  // Exact host first, then the host without a leading "www.".
  const OverrideRule* find(std::string_view host) const;
  bool empty() const { return rules_.empty(); }

 private:
  std::map<std::string, OverrideRule, std::less<>> rules_;
};

// Lowercased host of an http(s) url, empty when there is none.
std::string host_of(std::string_view url);

// Throws ExtractionError "no title" or "no content".
Article extract_article(std::string_view html, std::string_view url, const OverrideRules& rules = {});

// ISO-8601 date or timestamp to a UTC calendar date. Offsets are applied;
// timestamps without one are taken as UTC.
std::optional<Date> parse_date(std::string_view raw);

// YYYY-MM-DD
std::string format_date(const Date& d);

}  // namespace evidex::extract
