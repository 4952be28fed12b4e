#pragma once

// Evaluation prompts, <FINAL> plan extraction and scoring of model responses.

#include <boost/multiprecision/cpp_int.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planforge/llm.hpp"
#include "planforge/parallel.hpp"
#include "planforge/prompts.hpp"
#include "planforge/taskgen.hpp"
#include "planforge/validate.hpp"

namespace planforge {

using Rational = boost::multiprecision::cpp_rational;

class ExtractionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalPrompt {
  std::string system;
  std::string user;
};

inline std::string predicate_list(const Domain& d) {
  std::string out;
  for (const auto& p : d.predicates) out += (out.empty() ? "" : " ") + render_predicate(p, d.typed());
  return out;
}

inline std::string action_list(const Domain& d) {
  std::string out = "\n";
  for (const auto& a : d.actions) out += render_action(a, d.typed());
  out.pop_back();
  return out;
}

inline EvalPrompt build_eval_prompt(const Problem& q) {
  const Domain& d = *q.domain;
  EvalPrompt p;
  p.system = std::string(prompts::kEvalSystem);
  p.user = prompts::fill(prompts::kEvalUser, {{"Your Predicates", predicate_list(d)},
                                              {"Your Actions", action_list(d)},
                                              {"Initial State", "Initial state: " + to_string(q.init)},
                                              {"Goal State", "Goal state: " + to_string(q.goal)}});
  return p;
}

// ---------------------------------------------------------------------------
// <FINAL> extraction
// ---------------------------------------------------------------------------

namespace eval_detail {

inline std::string lower_ascii(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// "1.", "2)", "-", "*", "Step 3:" and similar list markers.
inline std::string strip_marker(std::string line) {
  line = trim(line);
  std::string low = lower_ascii(line);
  if (low.rfind("step", 0) == 0) {
    std::size_t i = 4;
    while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) || std::isdigit(static_cast<unsigned char>(line[i]))))
      ++i;
    if (i < line.size() && (line[i] == ':' || line[i] == '.')) line = trim(line.substr(i + 1));
  }
  std::size_t i = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
  if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) line = trim(line.substr(i + 1));
  if (!line.empty() && (line[0] == '-' || line[0] == '*') && (line.size() == 1 || line[1] == ' '))
    line = trim(line.substr(1));
  return line;
}

inline RawAction item(const std::string& name, const std::string& args) {
  std::string norm = "(" + trim(name);
  std::string cur;
  for (char c : args + " ") {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) norm += " " + cur;
      cur.clear();
    } else {
      cur += c;
    }
  }
  norm += ")";
  std::string text = trim(name).empty() ? "(" + trim(args) + ")" : trim(name) + "(" + trim(args) + ")";
  return RawAction{text, parse_action_call(norm)};
}

inline void parse_line(const std::string& raw, std::vector<RawAction>& out) {
  std::string line = strip_marker(raw);
  if (line.empty()) return;
  if (line.find('(') == std::string::npos) {
    auto sp = line.find_first_of(" \t,");
    std::string name = sp == std::string::npos ? line : line.substr(0, sp);
    std::string rest = sp == std::string::npos ? "" : line.substr(sp);
    auto r = item(name, rest);
    r.text = line;
    out.push_back(std::move(r));
    return;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    auto open = line.find('(', i);
    if (open == std::string::npos) break;
    auto close = line.find(')', open);
    if (close == std::string::npos) {
      out.push_back(RawAction{trim(line.substr(open)), std::nullopt});
      break;
    }
    std::size_t ns = open;
    while (ns > i && (std::isalnum(static_cast<unsigned char>(line[ns - 1])) || line[ns - 1] == '-' || line[ns - 1] == '_'))
      --ns;
    std::string inner = line.substr(open + 1, close - open - 1);
    if (ns < open) {
      out.push_back(item(line.substr(ns, open - ns), inner));
    } else {
      auto t = trim(inner);
      auto sp = t.find_first_of(" \t,");
      out.push_back(item(sp == std::string::npos ? t : t.substr(0, sp), sp == std::string::npos ? "" : t.substr(sp)));
    }
    i = close + 1;
  }
}

}  // namespace eval_detail

// Content of the last <FINAL>...</FINAL> span (tags case-insensitive).
inline std::optional<std::string> final_span(std::string_view response) {
  std::string low = eval_detail::lower_ascii(std::string(response));
  auto close = low.rfind("</final>");
  if (close == std::string::npos) return std::nullopt;
  auto open = low.rfind("<final>", close);
  if (open == std::string::npos) return std::nullopt;
  return std::string(response.substr(open + 7, close - open - 7));
}

// Accepts `(pick-up a)`, `pick-up(a)`, `pick-up a` and `1. pick-up(a, b)`,
// one or more per line. An empty span is a failure unless allow_empty, which
// the corpus uses for its own zero-length targets.
inline std::vector<RawAction> extract_final_plan(std::string_view response, bool allow_empty = false) {
  auto span = final_span(response);
  if (!span) throw ExtractionFailure("no <FINAL> span");
  std::vector<RawAction> out;
  std::istringstream is(*span);
  for (std::string line; std::getline(is, line);) eval_detail::parse_line(line, out);
  if (out.empty() && !allow_empty) throw ExtractionFailure("empty <FINAL> span");
  return out;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct BenchInstance {
  std::string id;
  std::string family;
  Problem problem;
};

inline std::vector<BenchInstance> bench_from(const std::vector<GeneratedTask>& tasks) {
  std::vector<BenchInstance> out;
  for (const auto& t : tasks) out.push_back({t.id, t.family, t.problem});
  return out;
}

struct ModelResponse {
  std::string id;
  std::string text;
  std::optional<std::size_t> completion_tokens;

  nlohmann::json to_json() const {
    nlohmann::json j{{"id", id}, {"response", text}};
    j["completion_tokens"] = completion_tokens ? nlohmann::json(*completion_tokens) : nlohmann::json(nullptr);
    return j;
  }
  static ModelResponse from_json(const nlohmann::json& j) {
    ModelResponse r{j.at("id").get<std::string>(), j.at("response").get<std::string>(), std::nullopt};
    if (j.contains("completion_tokens") && !j["completion_tokens"].is_null())
      r.completion_tokens = j["completion_tokens"].get<std::size_t>();
    return r;
  }
};

// One JSON object per line: {"id", "response", "completion_tokens"?}.
inline std::map<std::string, ModelResponse> read_responses(std::istream& in) {
  std::map<std::string, ModelResponse> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (eval_detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("responses line " + std::to_string(lineno) + ": " + e.what());
    }
    auto r = ModelResponse::from_json(j);
    std::string id = r.id;
    out.insert_or_assign(id, std::move(r));
  }
  return out;
}

inline std::map<std::string, ModelResponse> read_responses(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return read_responses(in);
}

struct InstanceScore {
  std::string id;
  std::string family;
  ValidationReport report;
  bool responded = false;
  std::optional<std::string> extraction_error;
  std::size_t tokens = 0;
  bool tokens_approximate = false;
};

struct Aggregate {
  std::string family;
  std::size_t n = 0;
  Rational success = 0;
  Rational progress = 0;
  Rational mean_tokens = 0;
  bool tokens_approximate = false;

  // Success rate per token; 0 when no tokens were spent.
  double efficiency() const {
    return mean_tokens == 0 ? 0.0 : static_cast<double>(success) / static_cast<double>(mean_tokens);
  }
};

inline std::string rational_str(const Rational& r) {
  auto n = boost::multiprecision::numerator(r), d = boost::multiprecision::denominator(r);
  return d == 1 ? n.str() : n.str() + "/" + d.str();
}

inline std::string fixed3(const Rational& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << static_cast<double>(r);
  return os.str();
}

struct EvalRun {
  std::string model;
  std::vector<InstanceScore> instances;
  std::vector<Aggregate> families;  // sorted by family name
  Aggregate overall;

  nlohmann::json to_json() const {
    auto agg = [](const Aggregate& a) {
      return nlohmann::json{{"family", a.family},
                            {"n", a.n},
                            {"success_rate", rational_str(a.success)},
                            {"success_rate_value", static_cast<double>(a.success)},
                            {"progress", rational_str(a.progress)},
                            {"progress_value", static_cast<double>(a.progress)},
                            {"mean_tokens", rational_str(a.mean_tokens)},
                            {"tokens_approximate", a.tokens_approximate},
                            {"efficiency", a.efficiency()}};
    };
    nlohmann::json j;
    j["model"] = model;
    j["families"] = nlohmann::json::array();
    for (const auto& f : families) j["families"].push_back(agg(f));
    j["overall"] = agg(overall);
    j["instances"] = nlohmann::json::array();
    for (const auto& s : instances) {
      auto r = s.report.to_json();
      r["family"] = s.family;
      r["responded"] = s.responded;
      r["extraction_error"] = s.extraction_error ? nlohmann::json(*s.extraction_error) : nlohmann::json(nullptr);
      r["tokens"] = s.tokens;
      r["tokens_approximate"] = s.tokens_approximate;
      j["instances"].push_back(r);
    }
    return j;
  }

  // Rows are metrics, columns are families then Overall.
  std::string table() const {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"metric"};
    for (const auto& f : families) head.push_back(f.family);
    head.push_back("overall");
    rows.push_back(head);
    auto row = [&](const std::string& name, auto get) {
      std::vector<std::string> r{name};
      for (const auto& f : families) r.push_back(get(f));
      r.push_back(get(overall));
      rows.push_back(r);
    };
    row("success rate", [](const Aggregate& a) { return fixed3(a.success); });
    row("progress", [](const Aggregate& a) { return fixed3(a.progress); });
    row("mean tokens", [](const Aggregate& a) { return fixed3(a.mean_tokens) + (a.tokens_approximate ? "~" : ""); });
    std::vector<std::size_t> w(head.size(), 0);
    for (const auto& r : rows)
      for (std::size_t c = 0; c < r.size(); ++c) w[c] = std::max(w[c], r[c].size());
    std::string out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t c = 0; c < rows[i].size(); ++c) {
        if (c) out += " | ";
        out += rows[i][c] + std::string(w[c] - rows[i][c].size(), ' ');
      }
      out += "\n";
      if (i == 0) {
        for (std::size_t c = 0; c < w.size(); ++c) out += (c ? "-+-" : "") + std::string(w[c], '-');
        out += "\n";
      }
    }
    return out;
  }
};

inline Aggregate aggregate(std::string name, const std::vector<const InstanceScore*>& xs) {
  Aggregate a;
  a.family = std::move(name);
  a.n = xs.size();
  if (xs.empty()) return a;
  Rational s = 0, p = 0, t = 0;
  for (const auto* x : xs) {
    s += x->report.success ? 1 : 0;
    p += Rational(x->report.progress.num, x->report.progress.den);
    t += x->tokens;
    a.tokens_approximate = a.tokens_approximate || x->tokens_approximate;
  }
  a.success = s / xs.size();
  a.progress = p / xs.size();
  a.mean_tokens = t / xs.size();
  return a;
}

inline InstanceScore score_instance(const BenchInstance& b, const ModelResponse* r, const ValidationConfig& cfg) {
  GroundUniverse u(b.problem);
  InstanceScore s;
  s.id = b.id;
  s.family = b.family;
  if (!r) {
    s.report = absent_plan_report(u, cfg, b.id);
    return s;
  }
  s.responded = true;
  if (r->completion_tokens) {
    s.tokens = *r->completion_tokens;
  } else {
    s.tokens = whitespace_tokens(r->text);
    s.tokens_approximate = true;
  }
  try {
    auto raw = extract_final_plan(r->text);
    s.report = validate_plan(u, raw, cfg, b.id);
  } catch (const ExtractionFailure& e) {
    s.extraction_error = e.what();
    s.report = absent_plan_report(u, cfg, b.id);
  }
  return s;
}

inline EvalRun score_run(const std::vector<BenchInstance>& bench, const std::map<std::string, ModelResponse>& responses,
                         const ValidationConfig& cfg = {}, std::string model = "", unsigned jobs = 1) {
  EvalRun run;
  run.model = std::move(model);
  run.instances.resize(bench.size());
  parallel_for(bench.size(), jobs, [&](std::size_t i) {
    auto it = responses.find(bench[i].id);
    run.instances[i] = score_instance(bench[i], it == responses.end() ? nullptr : &it->second, cfg);
  });
  std::map<std::string, std::vector<const InstanceScore*>> by;
  std::vector<const InstanceScore*> all;
  for (const auto& s : run.instances) {
    by[s.family].push_back(&s);
    all.push_back(&s);
  }
  for (const auto& [f, xs] : by) run.families.push_back(aggregate(f, xs));
  run.overall = aggregate("overall", all);
  return run;
}

// Responses that replay each instance's plan inside a <FINAL> span.
inline std::map<std::string, ModelResponse> plan_responses(const std::vector<GeneratedTask>& tasks,
                                                          std::size_t drop_last = 0, bool witness = true) {
  std::map<std::string, ModelResponse> out;
  for (const auto& t : tasks) {
    const Plan& p = witness ? t.witness : t.reference;
    std::string body;
    std::size_t n = p.length() >= drop_last ? p.length() - drop_last : 0;
    for (std::size_t i = 0; i < n; ++i) body += p.actions[i].str() + "\n";
    out[t.id] = ModelResponse{t.id, "Here is my plan.\n<FINAL>\n" + body + "</FINAL>\n", std::nullopt};
  }
  return out;
}

}  // namespace planforge
