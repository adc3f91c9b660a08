// Acceptance gate: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "atd/atd.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "proxy_fixture.hpp"
#include "support.hpp"

using namespace atd;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr std::size_t kPlannerInstances = 200;
constexpr std::size_t kPlannerMaxCandidates = 15;
constexpr std::size_t kPlannerMaxBudget = 100;
constexpr double kPlannerTimeLimitSeconds = 10.0;
constexpr std::size_t kSorryIdempotenceStrings = 1000;
constexpr std::size_t kStructuralPages = 20;
constexpr std::size_t kLatencyPageBytes = 100 * 1024;
constexpr std::size_t kLatencyRequests = 60;
constexpr double kLatencyP95LimitMs = 50.0;
constexpr std::size_t kDetectorCases = 50;
constexpr double kClassificationMinRate = 0.95;

struct Line {
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Line> lines;

void report(const std::string& name, bool pass, const std::string& detail) {
  lines.push_back({name, pass, detail});
  std::cout << (pass ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

// ----------------------------------------------------------------------------

void sorry_fidelity() {
  const std::vector<std::pair<std::string, std::string>> golden = {
      {"I am looking for...", "Sorry, I am looking for..."},
      {"I'm done with this", "Sorry, I'm done with this"},
      {"I don't agree", "Sorry, I don't agree"},
      {"I\xE2\x80\x99m done with this", "Sorry, I\xE2\x80\x99m done with this"},
      {"I don\xE2\x80\x99t agree", "Sorry, I don\xE2\x80\x99t agree"},
  };
  std::size_t ok = 0;
  std::string failure;
  for (const auto& [in, want] : golden) {
    const auto got = insert_sorry(in);
    if (got == want) {
      ++ok;
    } else if (failure.empty()) {
      failure = "; " + quote(in) + " -> " + quote(got);
    }
  }
  const std::string mid = "If I am sad, I'm feeling furious.";
  const auto spans = detect_i_statements(std::string_view(mid));
  const bool one_mid = spans.size() == 1 && spans[0].start == 13 && spans[0].length == 3;
  const bool mid_output = insert_sorry(mid) == "If I am sad, sorry, I'm feeling furious.";
  report("sorry-fidelity", ok == golden.size() && one_mid && mid_output,
         std::to_string(ok) + "/" + std::to_string(golden.size()) + " golden outputs exact; mid-sentence matches " +
             std::to_string(spans.size()) + (one_mid ? " (at \"I'm\")" : "") + (mid_output ? ", output exact" : "") +
             failure);
}

void politeness_fidelity() {
  const std::string want[] = {
      "I understand that you are extremely busy these days, but can you complete the budget report?",
      "Would it be ok for you to possibly complete the budget report?",
      "Unless you want to lose points, can you complete the budget report?",
  };
  const char* modes[] = {"supportive", "downgrader", "aggravating"};
  std::size_t ok = 0;
  std::string failure;
  for (int m = 0; m < 3; ++m) {
    const auto rs = parse_ruleset(std::string(R"({"version":1,"rules":[{"id":"p","kind":"politeness","mode":")") +
                                  modes[m] + "\"}]}");
    // Both the bare directive and its sentence form go through the engine.
    for (const std::string input : {"complete the budget report", "Complete the budget report."}) {
      const auto got = transform_text(rs, Lexicon{}, input, std::nullopt).text;
      if (got == want[m]) {
        ++ok;
      } else if (failure.empty()) {
        failure = "; " + std::string(modes[m]) + ": " + quote(got);
      }
    }
  }
  report("politeness-fidelity", ok == 6, std::to_string(ok) + "/6 rewrites byte-exact" + failure);
}

void swap_fidelity() {
  const auto musk = parse_ruleset(test_support::read_file(test_support::data_dir() / "musk.json"));
  const auto gender = parse_ruleset(test_support::read_file(test_support::data_dir() / "gender.json"));
  const auto curly = parse_ruleset(
      R"({"version":1,"rules":[{"id":"m","kind":"swap","pairs":[["Elon Musk","Grimes’s Boyfriend"]]}]})");
  struct Case {
    const CompiledRuleset* rs;
    std::string in, want;
  };
  const std::vector<Case> cases = {
      {&musk, "Elon Musk plans to create bricks for affordable housing",
       "Grimes's Boyfriend plans to create bricks for affordable housing"},
      {&curly, "Elon Musk plans to create bricks for affordable housing",
       "Grimes’s Boyfriend plans to create bricks for affordable housing"},
      {&curly, "Is Elon Musk just an AI set on ‘eccentric billionaire’ mode?",
       "Is Grimes’s Boyfriend just an AI set on ‘eccentric billionaire’ mode?"},
      {&gender, "who has her own action figure", "who has his own action figure"},
      {&gender,
       "Public sightings of Ginsburg, who has her own action figure and nickname, the Notorious RBG, ripple across "
       "Twitter.",
       "Public sightings of Ginsburg, who has his own action figure and nickname, the Notorious RBG, ripple across "
       "Twitter."},
  };
  std::size_t ok = 0;
  std::string failure;
  for (const auto& c : cases) {
    const auto got = transform_text(*c.rs, Lexicon{}, c.in, std::nullopt).text;
    if (got == c.want) {
      ++ok;
    } else if (failure.empty()) {
      failure = "; got " + quote(got);
    }
  }
  report("swap-fidelity", ok == cases.size(),
         std::to_string(ok) + "/" + std::to_string(cases.size()) + " outputs exact" + failure);
}

void planner_optimality() {
  test_support::Rng rng(20240601);
  std::size_t exact = 0;
  std::string failure;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < kPlannerInstances; ++i) {
    const auto candidates = oracle::random_candidates(rng, rng.between(0, kPlannerMaxCandidates));
    const std::size_t budget = rng.between(0, kPlannerMaxBudget);
    const Direction direction = rng.chance(0.5) ? Direction::negative : Direction::positive;
    const int sign = direction == Direction::negative ? -1 : 1;
    const auto plan = plan_edits(candidates, Budget{budget, direction});
    const auto expected = oracle::brute_force_plan(candidates, budget, sign);
    if (sign * plan.total_delta == expected.objective) {
      ++exact;
    } else if (failure.empty()) {
      failure = "; instance " + std::to_string(i) + ": dp " + std::to_string(sign * plan.total_delta) + " vs " +
                std::to_string(expected.objective);
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/%zu objectives equal brute force; %.2f s total (limit %.0f s)", exact,
                kPlannerInstances, seconds, kPlannerTimeLimitSeconds);
  report("planner-optimality", exact == kPlannerInstances && seconds < kPlannerTimeLimitSeconds, buf + failure);
}

void property_suites() {
  const std::vector<std::pair<std::string, properties::Result>> results = {
      {"sorry-idempotence", properties::sorry_idempotence(kSorryIdempotenceStrings, 101)},
      {"swap-involution", properties::swap_involution(1000, 102)},
      {"apply-edits-locality", properties::apply_edits_locality(1000, 103)},
      {"ruleset-round-trip", properties::ruleset_round_trip(300, 104)},
      {"plan-round-trip", properties::plan_round_trip(300, 105)},
      {"lexicon-additivity", properties::lexicon_additivity(1000, 106)},
  };
  bool all = true;
  std::string detail;
  for (const auto& [name, r] : results) {
    all = all && r.held();
    if (!detail.empty()) detail += ", ";
    detail += name + " " + std::to_string(r.cases - r.failures) + "/" + std::to_string(r.cases);
    if (!r.held()) detail += " (counterexample " + quote(r.first_counterexample) + ")";
  }
  report("property-suites", all, detail);
}

// ----------------------------------------------------------------------------

std::vector<std::string> markup_tokens(std::string_view html) {
  std::vector<std::string> out;
  for (const auto& t : tokenize_html(html)) {
    if (t.kind != HtmlTokenKind::text) out.emplace_back(t.bytes(html));
  }
  return out;
}

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const std::size_t idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size()))) - 1;
  return v[std::min(idx, v.size() - 1)];
}

std::string latency_page() {
  const auto base = test_support::read_file(test_support::data_dir() / "pages" / "page01.html");
  const std::size_t body = base.find("<body");
  const std::size_t close = base.rfind("</body>");
  const std::string head = base.substr(0, base.find('>', body) + 1);
  const std::string inner = base.substr(base.find('>', body) + 1, close - base.find('>', body) - 1);
  std::string page = head;
  while (page.size() < kLatencyPageBytes) page += inner;
  return page + "</body></html>\n";
}

void proxy_criteria() {
  test_support::Upstream upstream;
  const std::string ruleset_json = test_support::read_file(test_support::data_dir() / "mixed.json");
  const std::string lexicon = test_support::read_file(test_support::data_dir() / "lexicon.tsv");

  // Passthrough fixtures: non-rewrite types, plus rewrite types that must not
  // be touched (foreign charset, compressed body).
  std::string png = "\x89PNG\r\n\x1a\n";
  png.push_back('\0');
  for (int i = 0; i < 4096; ++i) png.push_back(static_cast<char>((i * 131) ^ (i >> 3)));
  png += "I'm hidden";
  const std::map<std::string, test_support::UpstreamPage> passthrough = {
      {"/img.png", {"image/png", png, ""}},
      {"/data.json", {"application/json", R"({"text":"I'm done with this","likes":12})", ""}},
      {"/app.js", {"application/javascript", "var s = \"I'm here\";", ""}},
      {"/site.css", {"text/css", "p::after { content: \"I'm\"; }", ""}},
      {"/doc.xml", {"application/xml", "<a>I'm xml</a>", ""}},
      {"/latin1.html", {"text/html; charset=iso-8859-1", "<p>I'm \xE9t\xE9</p>", ""}},
      {"/gz.html", {"text/html", std::string("\x1f\x8b\x08\0I'm", 8), "gzip"}},
      {"/blob", {"application/octet-stream", std::string("\0\1\2I'm\3", 7), ""}},
  };
  for (const auto& [path, page] : passthrough) upstream.add(path, page);

  std::vector<std::string> pages;
  for (std::size_t i = 1; i <= kStructuralPages; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "page%02zu.html", i);
    pages.push_back(test_support::read_file(test_support::data_dir() / "pages" / name));
    upstream.add("/pages/" + std::string(name), {"text/html; charset=utf-8", pages.back(), ""});
  }
  const std::string big = latency_page();
  upstream.add("/big.html", {"text/html; charset=utf-8", big, ""});

  auto cfg = test_support::temp_config(upstream.url(), ruleset_json, lexicon, "acceptance");
  cfg.budget = Budget{200, Direction::negative};
  const auto log_path = cfg.ruleset_path.parent_path() / "latency.log";
  fs::remove(log_path);
  cfg.latency_log_path = log_path;

  std::size_t passthrough_ok = 0;
  std::string passthrough_failure;
  std::size_t structure_ok = 0;
  std::size_t pages_changed = 0;
  std::string structure_failure;
  std::vector<double> proxied_ms, direct_ms, added_e2e_ms;
  {
    test_support::RunningProxy proxy(cfg);
    auto client = proxy.client();
    for (const auto& [path, page] : passthrough) {
      const auto res = client.Get(path);
      if (res && res->status == 200 && res->body == page.body) {
        ++passthrough_ok;
      } else if (passthrough_failure.empty()) {
        passthrough_failure = "; " + path + " differed";
      }
    }
    for (std::size_t i = 0; i < pages.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "page%02zu.html", i + 1);
      const auto res = client.Get("/pages/" + std::string(name));
      if (!res) continue;
      const bool same_markup = markup_tokens(res->body) == markup_tokens(pages[i]);
      // Reference: the upstream page tokenized and re-serialized with no rules.
      std::string reserialized;
      for (const auto& t : tokenize_html(pages[i])) reserialized += t.bytes(pages[i]);
      const bool faithful = reserialized == pages[i];
      if (same_markup && faithful) {
        ++structure_ok;
      } else if (structure_failure.empty()) {
        structure_failure = "; " + std::string(name) + " markup changed";
      }
      if (res->body != pages[i]) ++pages_changed;
    }

    httplib::Client direct("127.0.0.1", upstream.port());
    direct.set_decompress(false);
    for (std::size_t i = 0; i < kLatencyRequests; ++i) {
      auto t0 = std::chrono::steady_clock::now();
      const auto d = direct.Get("/big.html");
      auto t1 = std::chrono::steady_clock::now();
      const auto p = client.Get("/big.html");
      auto t2 = std::chrono::steady_clock::now();
      if (!d || !p) continue;
      direct_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      proxied_ms.push_back(std::chrono::duration<double, std::milli>(t2 - t1).count());
      added_e2e_ms.push_back(proxied_ms.back() - direct_ms.back());
    }
  }

  report("proxy-passthrough", passthrough_ok == passthrough.size(),
         std::to_string(passthrough_ok) + "/" + std::to_string(passthrough.size()) +
             " non-rewritten fixtures byte-identical" + passthrough_failure);
  report("proxy-structure", structure_ok == pages.size() && pages.size() == kStructuralPages && pages_changed > 0,
         std::to_string(structure_ok) + "/" + std::to_string(pages.size()) +
             " pages keep tag/attribute sequence (" + std::to_string(pages_changed) + " had text rewritten)" +
             structure_failure);

  std::vector<double> logged;
  std::istringstream log_lines(test_support::read_file(log_path));
  for (std::string line; std::getline(log_lines, line);) {
    const auto j = nlohmann::json::parse(line);
    if (j["url"].get<std::string>().ends_with("/big.html")) logged.push_back(j["added_latency_ms"].get<double>());
  }
  const bool measured = logged.size() == kLatencyRequests && added_e2e_ms.size() == kLatencyRequests;
  const double log_p95 = measured ? percentile(logged, 0.95) : 0.0;
  const double e2e_p95 = measured ? percentile(added_e2e_ms, 0.95) : 0.0;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu-byte page, %zu requests: p95 rewrite latency %.2f ms (log), p95 added round trip %.2f ms "
                "(proxied minus direct), limit %.0f ms",
                big.size(), logged.size(), log_p95, e2e_p95, kLatencyP95LimitMs);
  report("proxy-latency", measured && log_p95 < kLatencyP95LimitMs && e2e_p95 < kLatencyP95LimitMs, buf);
}

// ----------------------------------------------------------------------------

void detector_closed_loop() {
  // Attack library the detector classifies against.
  const auto library = parse_ruleset(R"({"version":1,"rules":[
      {"id":"sorry","kind":"insert_sorry","intent":-0.5},
      {"id":"gender","kind":"swap","pairs":[["king","queen"],["actress","actor"],["duchess","duke"],["her","his"],["Elon Musk","Grimes's Boyfriend"]],"symmetric":true},
      {"id":"soften","kind":"politeness","mode":"downgrader"},
      {"id":"downplay","kind":"delete_term","terms":["great","proud"]},
      {"id":"metrics","kind":"strip_metric","nouns":["likes","comments","shares","friends","deals"]},
      {"id":"no-weather","kind":"filter_block","terms":["weather"]}]})");
  const std::vector<std::string> attack_ids = {"sorry", "gender", "soften", "downplay", "metrics"};

  std::vector<std::string> docs;
  for (int i = 1; i <= 10; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "doc%02d.txt", i);
    docs.push_back(test_support::read_file(test_support::data_dir() / "corpus" / name));
  }

  std::size_t cases = 0, reconstructed = 0, changed_cases = 0, nonempty_when_changed = 0;
  std::size_t edits_total = 0, edits_correct = 0, identical_empty = 0;
  std::string failure;
  for (const auto& doc : docs) {
    for (const auto& id : attack_ids) {
      ++cases;
      const CompiledRule& rule = *library.find(id);
      const CompiledRuleset single(library.scope(), {rule.rule});
      const std::string rendered = transform_text(single, Lexicon{}, doc, std::nullopt).text;
      const auto report = detect(doc, rendered, &library);

      const auto source_words = split_words(canonicalize(doc).text);
      const auto rendered_words = split_words(canonicalize(rendered).text);
      if (apply_word_edits(source_words, report.edits) == rendered_words) {
        ++reconstructed;
      } else if (failure.empty()) {
        failure = "; reconstruction failed for rule " + id;
      }
      if (canonicalize(doc).text != canonicalize(rendered).text) {
        ++changed_cases;
        if (!report.edits.empty()) ++nonempty_when_changed;
      }
      for (std::size_t i = 0; i < report.edits.size(); ++i) {
        ++edits_total;
        const auto& c = (*report.classifications)[i];
        if (c && c->kind == rule.rule.kind()) {
          ++edits_correct;
        } else if (failure.empty()) {
          failure = "; misclassified " + quote(report.edits[i].source_text) + " -> " +
                    quote(report.edits[i].rendered_text) + " (rule " + id + ")";
        }
      }
    }
    const auto same = detect(doc, doc, &library);
    if (same.edits.empty() && same.source_digest == same.rendered_digest) ++identical_empty;
  }
  const double rate = edits_total ? static_cast<double>(edits_correct) / static_cast<double>(edits_total) : 0.0;
  char buf[320];
  std::snprintf(buf, sizeof buf,
                "%zu cases: %zu/%zu reconstruct exactly, %zu/%zu changed cases reported; %zu/%zu edits (%.1f%%) "
                "classified to the applied kind (min %.0f%%); %zu/%zu identical pairs empty",
                cases, reconstructed, cases, nonempty_when_changed, changed_cases, edits_correct, edits_total,
                100.0 * rate, 100.0 * kClassificationMinRate, identical_empty, docs.size());
  const bool pass = cases == kDetectorCases && reconstructed == cases && nonempty_when_changed == changed_cases &&
                    edits_total > 0 && rate >= kClassificationMinRate && identical_empty == docs.size();
  report("detector-closed-loop", pass, buf + (pass ? std::string() : failure));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
      {"sorry-fidelity", sorry_fidelity},         {"politeness-fidelity", politeness_fidelity},
      {"swap-fidelity", swap_fidelity},           {"planner-optimality", planner_optimality},
      {"property-suites", property_suites},       {"proxy", proxy_criteria},
      {"detector-closed-loop", detector_closed_loop},
  };
  for (const auto& [name, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(name, false, std::string("exception: ") + e.what());
    }
  }
  const auto failed = std::count_if(lines.begin(), lines.end(), [](const Line& l) { return !l.pass; });
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << lines.size() - static_cast<std::size_t>(failed) << "/"
            << lines.size() << " criteria" << std::endl;
  return failed ? 1 : 0;
}
