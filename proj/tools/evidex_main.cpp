#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "evidex/pipeline.hpp"
#include "evidex/service.hpp"
#include "evidex/transport.hpp"

namespace {

using namespace evidex;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_path(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("EVIDEX_CONFIG"); env && *env) return env;
  throw ConfigError("no config given; pass --config or set EVIDEX_CONFIG");
}

std::vector<std::string> split_ids(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void print_report(const pipeline::VerificationReport& r, const sources::SourceRegistry& registry) {
  std::cout << "Article:   " << r.query_article.title << "\n";
  if (r.query_article.published_at)
    std::cout << "Published: " << extract::format_date(*r.query_article.published_at) << "\n";
  std::cout << "Keywords: ";
  for (const auto& k : r.query.keywords) std::cout << " " << k;
  std::cout << "\nWindow:    " << extract::format_date(r.query.date_from) << " .. "
            << extract::format_date(r.query.date_to) << "\n\n";
  if (r.matches.empty()) {
    std::cout << "No matching articles.\n";
  } else {
    std::cout << " #  distance  below  source            title\n";
    int rank = 1;
    for (const auto& m : r.matches) {
      const auto spec = registry.find(m.source_id);
      std::string name = spec ? spec->display_name : m.source_id;
      name.resize(16, ' ');
      std::printf("%2d  %.6f  %-5s  %s  %s\n", rank++, m.exact_distance, m.below_threshold ? "yes" : "no",
                  name.c_str(), m.article.title.c_str());
      std::printf("                         %s\n", m.article.url.c_str());
    }
  }
  for (const auto& e : r.source_errors) std::cout << "source error [" << e.source_id << "]: " << e.message << "\n";
  for (const auto& n : r.notices) std::cout << "notice: " << n << "\n";
  std::cout << "\nThreshold: " << fixed6(r.threshold) << "\nVerdict:   " << pipeline::to_string(r.verdict);
  if (r.verdict == pipeline::Verdict::PotentiallyFake) std::cout << " (the article might be potentially fake)";
  std::cout << "\n";
}

struct DocContext {
  std::shared_ptr<const embeddings::EmbeddingTable> table;
  textproc::Stoplist stoplist;
  double epsilon_rel;
};

DocContext doc_context(const std::string& cfg_flag) {
  auto cfg = pipeline::load_config(config_path(cfg_flag));
  return {std::make_shared<const embeddings::EmbeddingTable>(embeddings::load_file(cfg.embeddings_path)),
          textproc::load_stoplist_file(cfg.stopwords_path), cfg.epsilon_rel};
}

textproc::Document text_document(const std::string& path, const DocContext& ctx) {
  return textproc::build_document(textproc::clean(read_file(path), ctx.stoplist), *ctx.table);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidence retrieval for news verification with Word Mover's Distance"};
  app.require_subcommand(1);

  std::string cfg_flag;
  auto* verify = app.add_subcommand("verify", "Search the configured sources for articles supporting a news article");
  std::string url, file, source_list;
  bool as_json = false;
  auto* url_opt = verify->add_option("--url", url, "Article URL");
  auto* file_opt = verify->add_option("--file", file, "Local HTML file")->check(CLI::ExistingFile);
  url_opt->excludes(file_opt);
  verify->add_option("--sources", source_list, "Comma separated source ids (default: all enabled)");
  verify->add_option("--config", cfg_flag, "Config file (default: $EVIDEX_CONFIG)");
  verify->add_flag("--json", as_json, "Print the report as JSON");

  auto* distance = app.add_subcommand("distance", "Distance between two plain text documents");
  std::string file_a, file_b, method = "wmd";
  distance->add_option("fileA", file_a)->required();
  distance->add_option("fileB", file_b)->required();
  distance->add_option("--method", method, "wmd, sinkhorn or wrd")
      ->check(CLI::IsMember({"wmd", "sinkhorn", "wrd"}));
  distance->add_option("--config", cfg_flag, "Config file (default: $EVIDEX_CONFIG)");

  auto* calibrate = app.add_subcommand("calibrate", "Pick a distance threshold from labelled document pairs");
  std::string pairs_path;
  bool write_back = false;
  calibrate->add_option("--pairs", pairs_path, "JSON lines of {a_path, b_path, related}")->required();
  calibrate->add_option("--config", cfg_flag, "Config file (default: $EVIDEX_CONFIG)");
  calibrate->add_flag("--write", write_back, "Store the threshold in the config file");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "0.0.0.0";
  int port = service::kDefaultPort;
  if (const char* env = std::getenv("EVIDEX_PORT"); env && *env) port = std::atoi(env);
  serve->add_option("--config", cfg_flag, "Config file (default: $EVIDEX_CONFIG)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (default: $EVIDEX_PORT or 8080)")->check(CLI::Range(1, 65535));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (*verify && url.empty() && file.empty()) {
    std::cerr << "verify: one of --url or --file is required\n";
    return 2;
  }

  try {
    if (*verify) {
      auto engine = pipeline::Engine::from_config(pipeline::load_config(config_path(cfg_flag)));
      pipeline::VerifyInput input;
      if (!file.empty()) {
        input.html = read_file(file);
        input.url = "file://" + fs::absolute(file).lexically_normal().string();
      } else {
        input.url = url;
      }
      input.sources = source_list.empty() ? std::vector<std::string>{} : split_ids(source_list);
      if (source_list.empty()) {
        for (const auto& s : *engine->registry().snapshot())
          if (s.enabled) input.sources.push_back(s.id);
      }
      auto report = engine->verify(input);
      if (as_json) std::cout << pipeline::to_json(report, &engine->registry()).dump(2) << "\n";
      else print_report(report, engine->registry());
      return 0;
    }

    if (*distance) {
      auto ctx = doc_context(cfg_flag);
      auto a = text_document(file_a, ctx);
      auto b = text_document(file_b, ctx);
      double d = 0.0;
      if (method == "wmd") {
        d = transport::wmd(a, b, *ctx.table);
      } else if (method == "wrd") {
        d = transport::wrd(a, b, *ctx.table);
      } else {
        const auto c = transport::cost_matrix(a, b, *ctx.table);
        transport::SinkhornOptions opts;
        opts.epsilon = transport::relative_epsilon(c, ctx.epsilon_rel);
        d = transport::sinkhorn(a.weights, b.weights, c, opts).distance;
      }
      std::cout << fixed6(d) << "\n";
      return 0;
    }

    if (*calibrate) {
      const std::string cfg_file = config_path(cfg_flag);
      auto ctx = doc_context(cfg_flag);
      std::ifstream in(pairs_path);
      if (!in) throw InputError("cannot read '" + pairs_path + "'");
      const fs::path base = fs::absolute(pairs_path).parent_path();
      std::vector<pipeline::LabelledPair> pairs;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (!j.is_object() || !j.contains("a_path") || !j.contains("b_path") || !j.contains("related") ||
            !j["a_path"].is_string() || !j["b_path"].is_string() || !j["related"].is_boolean())
          throw InputError(pairs_path + " line " + std::to_string(line_no) + ": expected {a_path, b_path, related}");
        auto path_of = [&](const nlohmann::json& p) {
          fs::path f(p.get<std::string>());
          return (f.is_absolute() ? f : base / f).string();
        };
        pairs.push_back({text_document(path_of(j["a_path"]), ctx), text_document(path_of(j["b_path"]), ctx),
                         j["related"].get<bool>()});
      }
      const double t = pipeline::calibrate_threshold(pairs, *ctx.table);
      std::cout << fixed6(t) << "\n";
      if (write_back) {
        auto doc = nlohmann::ordered_json::parse(read_file(cfg_file));
        doc["threshold"] = t;
        std::ofstream out(cfg_file);
        out << doc.dump(2) << "\n";
        if (!out) throw ConfigError("cannot write '" + cfg_file + "'");
      }
      return 0;
    }

    if (*serve) {
      auto cfg = pipeline::load_config(config_path(cfg_flag));
      if (!fs::exists(cfg.embeddings_path)) throw ConfigError("embeddings file not found: " + cfg.embeddings_path);
      std::cerr << "listening on " << host << ":" << port << "\n";
      service::serve(cfg, host, port);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
