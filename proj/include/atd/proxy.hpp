#pragma once

// Desk-scale rewriting reverse proxy over plain HTTP. Requests are forwarded
// to a single upstream; HTML and plain-text responses inside the ruleset's
// scope are rewritten, everything else streams back byte for byte.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "atd/html.hpp"
#include "atd/pipeline.hpp"

namespace atd {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct ProxyConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string upstream_base_url;
  std::filesystem::path ruleset_path;
  std::filesystem::path lexicon_path;
  std::optional<Budget> budget;  // absent: apply every rule
  std::vector<std::string> rewrite_content_types{"text/html", "text/plain"};
  std::optional<std::filesystem::path> latency_log_path;
  std::size_t max_body_bytes = 4 * 1024 * 1024;
};

struct RewriteOutcome {
  std::size_t bytes_in = 0;
  std::size_t bytes_out = 0;
  std::size_t edits_applied = 0;
  std::chrono::duration<double, std::milli> added_latency{0};
};

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string ascii_lowered(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = ascii_lower(c);
  return out;
}

inline std::string trim_ascii(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline bool is_hop_by_hop(std::string_view name) {
  static constexpr std::string_view hop[] = {"connection", "keep-alive", "proxy-authenticate", "proxy-authorization",
                                             "te", "trailer", "transfer-encoding", "upgrade", "proxy-connection"};
  const auto lowered = ascii_lowered(name);
  return std::find(std::begin(hop), std::end(hop), lowered) != std::end(hop);
}

}  // namespace detail

/// Parses `http://host[:port][/base]`.
struct UpstreamUrl {
  std::string scheme_host_port;  // e.g. http://127.0.0.1:9000
  std::string base_path;         // no trailing slash

  static UpstreamUrl parse(std::string_view url) {
    if (url.substr(0, 7) != "http://") throw ConfigError("upstream must be an absolute http:// URL: " + std::string(url));
    const std::size_t slash = url.find('/', 7);
    UpstreamUrl out;
    out.scheme_host_port = std::string(url.substr(0, slash));
    if (out.scheme_host_port.size() <= 7) throw ConfigError("upstream URL has no host: " + std::string(url));
    if (slash != std::string_view::npos) out.base_path = std::string(url.substr(slash));
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
    return out;
  }
};

/// Reads the TOML config. Relative file paths resolve against the config's
/// directory.
inline ProxyConfig load_proxy_config(const std::filesystem::path& path) {
  toml::table table;
  try {
    table = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << path.string() << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  static constexpr std::string_view known[] = {"listen",        "upstream", "ruleset", "lexicon",        "budget_chars",
                                               "direction",     "content_types", "latency_log", "max_body_bytes"};
  for (const auto& [key, value] : table) {
    if (std::find(std::begin(known), std::end(known), key.str()) == std::end(known)) {
      throw ConfigError(path.string() + ": unknown key '" + std::string(key.str()) + "'");
    }
  }
  const auto base = path.parent_path();
  const auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  const auto required_string = [&](const char* key) {
    const auto v = table[key].value<std::string>();
    if (!v) throw ConfigError(path.string() + ": missing or non-string key '" + key + "'");
    return *v;
  };

  ProxyConfig cfg;
  const std::string listen = required_string("listen");
  const std::size_t colon = listen.rfind(':');
  if (colon == std::string::npos) throw ConfigError(path.string() + ": listen must be host:port");
  cfg.listen_host = listen.substr(0, colon);
  try {
    cfg.listen_port = std::stoi(listen.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError(path.string() + ": invalid listen port in '" + listen + "'");
  }
  if (cfg.listen_port < 0 || cfg.listen_port > 65535) throw ConfigError(path.string() + ": listen port out of range");
  cfg.upstream_base_url = required_string("upstream");
  UpstreamUrl::parse(cfg.upstream_base_url);
  cfg.ruleset_path = resolve(required_string("ruleset"));
  cfg.lexicon_path = resolve(required_string("lexicon"));

  if (table.contains("budget_chars")) {
    const auto chars = table["budget_chars"].value<std::int64_t>();
    if (!chars || *chars < 0) throw ConfigError(path.string() + ": budget_chars must be a non-negative integer");
    Budget budget;
    budget.max_chars = static_cast<std::size_t>(*chars);
    const std::string direction = table["direction"].value_or(std::string("neg"));
    if (direction == "neg") {
      budget.direction = Direction::negative;
    } else if (direction == "pos") {
      budget.direction = Direction::positive;
    } else {
      throw ConfigError(path.string() + ": direction must be \"neg\" or \"pos\"");
    }
    cfg.budget = budget;
  } else if (table.contains("direction")) {
    throw ConfigError(path.string() + ": direction given without budget_chars");
  }
  if (const auto* types = table["content_types"].as_array()) {
    cfg.rewrite_content_types.clear();
    for (const auto& t : *types) {
      const auto s = t.value<std::string>();
      if (!s) throw ConfigError(path.string() + ": content_types must be strings");
      cfg.rewrite_content_types.push_back(detail::ascii_lowered(*s));
    }
  } else if (table.contains("content_types")) {
    throw ConfigError(path.string() + ": content_types must be an array");
  }
  if (table.contains("latency_log")) cfg.latency_log_path = resolve(required_string("latency_log"));
  if (table.contains("max_body_bytes")) {
    const auto max = table["max_body_bytes"].value<std::int64_t>();
    if (!max || *max < 0) throw ConfigError(path.string() + ": max_body_bytes must be a non-negative integer");
    cfg.max_body_bytes = static_cast<std::size_t>(*max);
  }
  return cfg;
}

/// The rewrite decision and transformation for one upstream response,
/// independent of any socket.
class ResponseRewriter {
public:
  ResponseRewriter(CompiledRuleset ruleset, Lexicon lexicon, std::optional<Budget> budget,
                   std::vector<std::string> content_types, std::size_t max_body_bytes)
      : ruleset_(std::move(ruleset)),
        lexicon_(std::move(lexicon)),
        budget_(budget),
        content_types_(std::move(content_types)),
        max_body_bytes_(max_body_bytes) {}

  struct Result {
    std::string body;
    RewriteOutcome outcome;
    std::vector<std::string> warnings;
  };

  /// Media type (lower-cased) when the response is eligible for rewriting.
  std::optional<std::string> eligible_type(std::string_view content_type, std::string_view content_encoding,
                                           std::size_t size) const {
    if (size > max_body_bytes_) return std::nullopt;
    if (!content_encoding.empty() && detail::ascii_lowered(detail::trim_ascii(content_encoding)) != "identity") {
      return std::nullopt;
    }
    const std::size_t semi = content_type.find(';');
    const std::string media = detail::ascii_lowered(detail::trim_ascii(content_type.substr(0, semi)));
    if (std::find(content_types_.begin(), content_types_.end(), media) == content_types_.end()) return std::nullopt;
    if (semi != std::string_view::npos) {
      std::string_view params = content_type.substr(semi + 1);
      const std::string lowered = detail::ascii_lowered(params);
      const std::size_t at = lowered.find("charset=");
      if (at != std::string::npos) {
        std::string charset = lowered.substr(at + 8);
        charset = charset.substr(0, charset.find(';'));
        charset = detail::trim_ascii(charset);
        if (charset.size() >= 2 && charset.front() == '"' && charset.back() == '"') {
          charset = charset.substr(1, charset.size() - 2);
        }
        if (charset != "utf-8" && charset != "utf8" && charset != "us-ascii" && charset != "ascii") {
          return std::nullopt;
        }
      }
    }
    return media;
  }

  Result rewrite(std::string_view url, std::string_view content_type, std::string_view content_encoding,
                 const std::string& body) const {
    const auto started = std::chrono::steady_clock::now();
    Result r{body, {}, {}};
    r.outcome.bytes_in = body.size();
    if (const auto media = eligible_type(content_type, content_encoding, body.size())) {
      DocumentMetadata meta;
      meta.source_url = std::string(url);
      if (*media == "text/html" || *media == "application/xhtml+xml") {
        auto out = rewrite_html(body, ruleset_, lexicon_, budget_, meta);
        r.body = std::move(out.html);
        r.outcome.edits_applied = out.edits_applied;
        r.warnings = std::move(out.warnings);
      } else if (!unicode::is_valid_utf8(body)) {
        r.warnings.push_back("body is not valid UTF-8; passed through");
      } else {
        try {
          auto out = transform_text(ruleset_, lexicon_, body, budget_, meta);
          r.body = std::move(out.text);
          r.outcome.edits_applied = out.edits_applied;
        } catch (const std::exception& e) {
          r.warnings.push_back(std::string("rewrite failed; passed through: ") + e.what());
        }
      }
    }
    r.outcome.bytes_out = r.body.size();
    r.outcome.added_latency = std::chrono::steady_clock::now() - started;
    return r;
  }

private:
  CompiledRuleset ruleset_;
  Lexicon lexicon_;
  std::optional<Budget> budget_;
  std::vector<std::string> content_types_;
  std::size_t max_body_bytes_;
};

inline std::string outcome_log_line(std::string_view url, const RewriteOutcome& o) {
  nlohmann::ordered_json line;
  line["url"] = url;
  line["bytes_in"] = o.bytes_in;
  line["bytes_out"] = o.bytes_out;
  line["edits_applied"] = o.edits_applied;
  line["added_latency_ms"] = o.added_latency.count();
  return line.dump();
}

class ProxyServer {
public:
  /// Loads ruleset and lexicon; throws ConfigError (or the loaders' errors)
  /// so a misconfigured proxy refuses to start.
  explicit ProxyServer(ProxyConfig config) : config_(std::move(config)), upstream_(UpstreamUrl::parse(config_.upstream_base_url)) {
    CompiledRuleset ruleset;
    Lexicon lexicon;
    try {
      ruleset = parse_ruleset(detail::read_file(config_.ruleset_path));
    } catch (const RulesetError& e) {
      throw ConfigError(config_.ruleset_path.string() + ": " + e.what());
    }
    try {
      lexicon = load_lexicon(detail::read_file(config_.lexicon_path));
    } catch (const LexiconError& e) {
      throw ConfigError(config_.lexicon_path.string() + ": " + e.what());
    }
    rewriter_ = std::make_unique<ResponseRewriter>(std::move(ruleset), std::move(lexicon), config_.budget,
                                                   config_.rewrite_content_types, config_.max_body_bytes);
    if (config_.latency_log_path) {
      log_.open(*config_.latency_log_path, std::ios::app);
      if (!log_) throw ConfigError("cannot open latency log " + config_.latency_log_path->string());
    }
    // Routed handlers (not pre-routing) so request bodies are read first.
    const auto h = [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); };
    server_.Get(".*", h);
    server_.Post(".*", h);
    server_.Put(".*", h);
    server_.Patch(".*", h);
    server_.Delete(".*", h);
    server_.Options(".*", h);
  }

  ProxyServer(const ProxyServer&) = delete;
  ProxyServer& operator=(const ProxyServer&) = delete;

  /// Binds the listening socket; returns the bound port (useful with port 0).
  int bind() {
    if (config_.listen_port == 0) {
      port_ = server_.bind_to_any_port(config_.listen_host);
      if (port_ < 0) throw ConfigError("cannot bind " + config_.listen_host);
    } else {
      if (!server_.bind_to_port(config_.listen_host, config_.listen_port)) {
        throw ConfigError("cannot bind " + config_.listen_host + ":" + std::to_string(config_.listen_port));
      }
      port_ = config_.listen_port;
    }
    return port_;
  }

  /// Blocks until stop().
  void serve() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const noexcept { return port_; }

  void set_log_stream(std::ostream* out) { fallback_log_ = out; }

private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    const std::string target = req.target.empty() ? req.path : req.target;
    const std::string url = config_.upstream_base_url + (target.empty() || target.front() != '/' ? "/" : "") + target;

    httplib::Request forward;
    forward.method = req.method;
    forward.path = upstream_.base_path + target;
    forward.body = req.body;
    for (const auto& [name, value] : req.headers) {
      const auto lowered = detail::ascii_lowered(name);
      if (detail::is_hop_by_hop(name) || lowered == "host" || lowered == "content-length" ||
          lowered == "remote_addr" || lowered == "remote_port" || lowered == "local_addr" || lowered == "local_port") {
        continue;
      }
      forward.headers.emplace(name, value);
    }

    httplib::Client client(upstream_.scheme_host_port);
    client.set_connection_timeout(5);
    client.set_decompress(false);  // encoded bodies pass through verbatim
    httplib::Response upstream;
    httplib::Error error = httplib::Error::Success;
    if (!client.send(forward, upstream, error)) {
      res.status = 502;
      res.set_content("upstream unavailable: " + httplib::to_string(error) + "\n", "text/plain");
      write_log(url, RewriteOutcome{});
      return;
    }

    const auto rewritten = rewriter_->rewrite(url, upstream.get_header_value("Content-Type"),
                                              upstream.get_header_value("Content-Encoding"), upstream.body);
    for (const auto& w : rewritten.warnings) warn(url, w);

    res.status = upstream.status;
    for (const auto& [name, value] : upstream.headers) {
      const auto lowered = detail::ascii_lowered(name);
      if (detail::is_hop_by_hop(name) || lowered == "content-length") continue;
      res.headers.emplace(name, value);
    }
    res.body = rewritten.body;
    write_log(url, rewritten.outcome);
  }

  void write_log(std::string_view url, const RewriteOutcome& outcome) {
    const std::string line = outcome_log_line(url, outcome);
    std::lock_guard lock(log_mutex_);
    if (log_.is_open()) {
      log_ << line << '\n';
      log_.flush();
    } else if (fallback_log_) {
      *fallback_log_ << line << '\n';
    }
  }

  void warn(std::string_view url, std::string_view message) {
    std::lock_guard lock(log_mutex_);
    std::cerr << "warning: " << url << ": " << message << '\n';
  }

  ProxyConfig config_;
  UpstreamUrl upstream_;
  std::unique_ptr<ResponseRewriter> rewriter_;
  httplib::Server server_;
  int port_ = -1;
  std::mutex log_mutex_;
  std::ofstream log_;
  std::ostream* fallback_log_ = &std::cerr;
};

}  // namespace atd
