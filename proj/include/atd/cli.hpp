#pragma once

// Operator command surface. run() never exits the process; it returns the
// exit code (0 success, 1 file or parse error, 2 usage error).

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "atd/detector.hpp"
#include "atd/pipeline.hpp"
#include "atd/proxy.hpp"

namespace atd::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

/// File or parse problem; the message already names the path (and line).
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

namespace detail {

// Styling only for an interactive stderr, and never under ATD_NO_COLOR.
inline bool color_enabled(const std::ostream& err) {
  return std::getenv("ATD_NO_COLOR") == nullptr && &err == &std::cerr && ::isatty(STDERR_FILENO) == 1;
}

inline void print_error(std::ostream& err, const std::string& message, bool color) {
  if (color) {
    err << "\x1b[1;31merror:\x1b[0m " << message << '\n';
  } else {
    err << "error: " << message << '\n';
  }
}

inline std::string read_input(const std::string& path, std::istream& in) {
  std::ostringstream ss;
  if (path == "-") {
    ss << in.rdbuf();
    return ss.str();
  }
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError(path + ": cannot open file");
  ss << file.rdbuf();
  if (file.bad()) throw InputError(path + ": read failed");
  return ss.str();
}

inline std::string read_text(const std::string& path, std::istream& in) {
  std::string bytes = read_input(path, in);
  try {
    unicode::decode(bytes);
  } catch (const Utf8Error& e) {
    throw InputError(path + ": " + e.what());
  }
  return bytes;
}

inline CompiledRuleset load_ruleset_file(const std::string& path, std::istream& in) {
  try {
    return parse_ruleset(read_input(path, in));
  } catch (const RulesetError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline Lexicon load_lexicon_file(const std::string& path, std::istream& in) {
  try {
    return load_lexicon(read_input(path, in));
  } catch (const LexiconError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline Direction parse_direction(const std::string& s) { return s == "pos" ? Direction::positive : Direction::negative; }

inline DocumentMetadata metadata_from(const std::optional<std::string>& url, const std::optional<std::string>& sender) {
  DocumentMetadata m;
  m.source_url = url;
  m.sender = sender;
  return m;
}

}  // namespace detail

/// Runs one command line. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in = std::cin) {
  const bool color = detail::color_enabled(err);
  CLI::App app{"Rule-driven text rewriting, budgeted planning, rewriting proxy and tamper detection", "atd"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "human-readable summaries on stderr");

  std::string ruleset_path;
  std::string lexicon_path;
  std::string in_path;
  std::optional<std::size_t> budget_chars;
  std::string direction = "neg";
  std::optional<std::string> url;
  std::optional<std::string> sender;
  std::string config_path;
  std::string source_path;
  std::string rendered_path;
  std::string detect_ruleset_path;

  const auto direction_check = CLI::IsMember({"neg", "pos"});

  auto* transform = app.add_subcommand("transform", "rewrite a text file; with --budget, plan first");
  transform->add_option("--ruleset", ruleset_path, "ruleset JSON")->required();
  transform->add_option("--lexicon", lexicon_path, "valence lexicon TSV")->required();
  transform->add_option("--in", in_path, "input text file, '-' for stdin")->required();
  auto* transform_budget = transform->add_option("--budget", budget_chars, "character budget")->check(CLI::NonNegativeNumber);
  transform->add_option("--direction", direction, "valence direction")->check(direction_check)->needs(transform_budget);
  transform->add_option("--url", url, "source URL for scope matching");
  transform->add_option("--sender", sender, "sender for scope matching");

  auto* score = app.add_subcommand("score", "print lexicon valence of a text file");
  score->add_option("--lexicon", lexicon_path, "valence lexicon TSV")->required();
  score->add_option("--in", in_path, "input text file, '-' for stdin")->required();

  std::size_t plan_budget = 0;
  auto* plan = app.add_subcommand("plan", "print the budgeted edit plan without applying it");
  plan->add_option("--ruleset", ruleset_path, "ruleset JSON")->required();
  plan->add_option("--lexicon", lexicon_path, "valence lexicon TSV")->required();
  plan->add_option("--in", in_path, "input text file, '-' for stdin")->required();
  plan->add_option("--budget", plan_budget, "character budget")->required()->check(CLI::NonNegativeNumber);
  plan->add_option("--direction", direction, "valence direction")->required()->check(direction_check);
  plan->add_option("--url", url, "source URL for scope matching");
  plan->add_option("--sender", sender, "sender for scope matching");

  auto* serve = app.add_subcommand("serve", "run the rewriting reverse proxy");
  serve->add_option("--config", config_path, "proxy TOML config")->required();

  auto* detect_cmd = app.add_subcommand("detect", "report edits between a trusted source and rendered text");
  detect_cmd->add_option("--source", source_path, "trusted source text")->required();
  detect_cmd->add_option("--rendered", rendered_path, "rendered text")->required();
  detect_cmd->add_option("--ruleset", detect_ruleset_path, "ruleset JSON for classification");

  auto* export_cmd = app.add_subcommand("export", "print the canonical serialized ruleset");
  export_cmd->add_option("--ruleset", ruleset_path, "ruleset JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    detail::print_error(err, e.what(), color);
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return exit_usage;
  }

  try {
    if (transform->parsed()) {
      const auto ruleset = detail::load_ruleset_file(ruleset_path, in);
      const auto lexicon = detail::load_lexicon_file(lexicon_path, in);
      const std::string text = detail::read_text(in_path, in);
      std::optional<Budget> budget;
      if (budget_chars) budget = Budget{*budget_chars, detail::parse_direction(direction)};
      const auto result = transform_text(ruleset, lexicon, text, budget, detail::metadata_from(url, sender));
      out << result.text;
      if (verbose) {
        err << "applied " << result.edits_applied << " edit(s)";
        if (result.plan) err << ", total delta " << result.plan->total_delta << ", cost " << result.plan->total_cost;
        err << '\n';
      }
    } else if (score->parsed()) {
      const auto lexicon = detail::load_lexicon_file(lexicon_path, in);
      const auto s = score_text(lexicon, detail::read_text(in_path, in));
      nlohmann::ordered_json doc;
      doc["raw"] = s.raw;
      doc["normalized"] = s.normalized;
      doc["matched_terms"] = s.matched_terms;
      doc["token_count"] = s.token_count;
      out << doc.dump() << '\n';
      if (verbose) err << s.matched_terms << " of " << s.token_count << " token(s) matched\n";
    } else if (plan->parsed()) {
      const auto ruleset = detail::load_ruleset_file(ruleset_path, in);
      const auto lexicon = detail::load_lexicon_file(lexicon_path, in);
      const std::string text = detail::read_text(in_path, in);
      const auto result = transform_text(ruleset, lexicon, text, Budget{plan_budget, detail::parse_direction(direction)},
                                         detail::metadata_from(url, sender));
      out << serialize_plan(*result.plan);
      if (verbose) err << result.plan->selected.size() << " edit(s) selected\n";
    } else if (serve->parsed()) {
      ProxyConfig config;
      try {
        config = load_proxy_config(config_path);
      } catch (const ConfigError& e) {
        throw InputError(e.what());
      }
      std::unique_ptr<ProxyServer> server;
      try {
        server = std::make_unique<ProxyServer>(config);
        server->bind();
      } catch (const ConfigError& e) {
        throw InputError(e.what());
      }
      static ProxyServer* active = nullptr;
      active = server.get();
      std::signal(SIGINT, [](int) {
        if (active) active->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (active) active->stop();
      });
      err << "listening on " << config.listen_host << ":" << server->port() << " -> " << config.upstream_base_url
          << '\n';
      server->serve();
      active = nullptr;
    } else if (detect_cmd->parsed()) {
      const std::string source = detail::read_text(source_path, in);
      const std::string rendered = detail::read_text(rendered_path, in);
      std::optional<CompiledRuleset> ruleset;
      if (!detect_ruleset_path.empty()) ruleset = detail::load_ruleset_file(detect_ruleset_path, in);
      const auto report = detect(source, rendered, ruleset ? &*ruleset : nullptr);
      out << report_to_json(report).dump() << '\n';
      if (verbose) {
        err << (report.edits.empty() ? "texts match" : std::to_string(report.edits.size()) + " edit(s) found") << '\n';
      }
    } else if (export_cmd->parsed()) {
      out << serialize_ruleset(detail::load_ruleset_file(ruleset_path, in));
    }
  } catch (const InputError& e) {
    detail::print_error(err, e.what(), color);
    return exit_failure;
  } catch (const std::exception& e) {
    detail::print_error(err, e.what(), color);
    return exit_failure;
  }
  return exit_ok;
}

}  // namespace atd::cli
