#pragma once

// End-to-end run: domain intake and repair, generation, solving, corpus
// assembly and optional scoring. Each stage writes a directory with a
// stage.json recording input and output digests; a stage whose inputs and
// outputs still match is skipped on the next run.

#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planforge/corpus.hpp"
#include "planforge/evalharness.hpp"
#include "planforge/llm.hpp"
#include "planforge/repair.hpp"
#include "planforge/taskgen.hpp"

namespace planforge {

namespace fs = std::filesystem;

class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& msg, std::exception_ptr cause = nullptr)
      : std::runtime_error("stage " + stage + ": " + msg), stage_(std::move(stage)), cause_(cause) {}
  const std::string& stage() const { return stage_; }
  std::exception_ptr cause() const { return cause_; }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

struct FamilyConfig {
  CorpusSpec spec;
  std::optional<fs::path> domain;  // PDDL file replacing the built-in domain
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  AlignMode align = AlignMode::template_;
  double eval_ratio = 0.1;
  double diversified_ratio = 0.25;
  double detour_rate = 0.2;
  unsigned jobs = 1;
  std::vector<FamilyConfig> families;
  std::size_t suite_size = 10;
  std::size_t repair_rounds = 5;
  bool prune = false;
  SearchMode solver = SearchMode::heuristic_ff;
  std::size_t solver_budget = 3000;
  std::optional<LLMConfig> llm;
  std::optional<fs::path> llm_replay;
  std::optional<fs::path> responses;
  std::string model = "model";
  nlohmann::json source;  // the parsed config, as read

  static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base = {}) {
    static const std::set<std::string> keys{"seed",   "alignment",     "eval_ratio", "diversified_ratio",
                                            "detour_rate", "jobs",     "families",   "suite_size",
                                            "repair_rounds", "prune",  "solver",     "solver_budget",
                                            "llm",    "llm_replay",    "responses",  "model"};
    for (const auto& [k, v] : j.items())
      if (!keys.count(k)) throw std::invalid_argument("unknown config key '" + k + "'");
    auto path = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    PipelineConfig c;
    c.source = j;
    c.seed = j.value("seed", std::uint64_t{0});
    c.align = align_mode_from(j.value("alignment", std::string("template")));
    c.eval_ratio = j.value("eval_ratio", c.eval_ratio);
    c.diversified_ratio = j.value("diversified_ratio", c.diversified_ratio);
    c.detour_rate = j.value("detour_rate", c.detour_rate);
    c.jobs = j.value("jobs", 1u);
    c.suite_size = j.value("suite_size", c.suite_size);
    c.repair_rounds = j.value("repair_rounds", c.repair_rounds);
    c.prune = j.value("prune", false);
    c.solver = search_mode_from(j.value("solver", std::string("heuristic_ff")));
    c.solver_budget = j.value("solver_budget", c.solver_budget);
    c.model = j.value("model", c.model);
    if (j.contains("llm")) {
      const auto& l = j["llm"];
      c.llm = LLMConfig::from_json(l.is_string() ? nlohmann::json::parse(read_file(path(l.get<std::string>()))) : l);
    }
    if (j.contains("llm_replay")) c.llm_replay = path(j["llm_replay"].get<std::string>());
    if (j.contains("responses")) c.responses = path(j["responses"].get<std::string>());
    for (const auto& f : j.value("families", nlohmann::json::array())) {
      static const std::set<std::string> fkeys{"family", "count",       "eval_count", "subfamily", "min_objects",
                                               "max_objects", "buckets", "attempts",   "domain"};
      for (const auto& [k, v] : f.items())
        if (!fkeys.count(k)) throw std::invalid_argument("unknown family key '" + k + "'");
      FamilyConfig fc;
      GenSpec& g = fc.spec.gen;
      g.family = f.at("family").get<std::string>();
      g.count = f.value("count", std::size_t{1});
      g.subfamily = f.value("subfamily", g.subfamily);
      g.min_objects = f.value("min_objects", g.min_objects);
      g.max_objects = f.value("max_objects", g.max_objects);
      g.attempts = f.value("attempts", g.attempts);
      if (f.contains("buckets")) {
        std::vector<LengthBucket> bs;
        for (const auto& b : f["buckets"]) bs.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>(), b.at(2).get<double>()});
        g.buckets = bs;
      }
      if (f.contains("eval_count")) fc.spec.eval_count = f["eval_count"].get<std::size_t>();
      if (f.contains("domain")) fc.domain = path(f["domain"].get<std::string>());
      task_family(g.family);
      g.check();
      c.families.push_back(std::move(fc));
    }
    return c;
  }

  CorpusConfig corpus_config(LLMClient* client) const {
    CorpusConfig cc;
    for (const auto& f : families) cc.specs.push_back(f.spec);
    cc.align = align;
    cc.eval_ratio = eval_ratio;
    cc.diversified_ratio = diversified_ratio;
    cc.detour_rate = detour_rate;
    cc.seed = seed;
    cc.jobs = jobs;
    cc.profile = "pipeline";
    cc.llm = client;
    if (llm) cc.llm_config = *llm;
    return cc;
  }
};

inline PipelineConfig load_pipeline_config(const fs::path& p) {
  return PipelineConfig::from_json(nlohmann::json::parse(read_file(p)), p.parent_path());
}

// Replay when a session log is configured, else live HTTP; nullptr without an
// llm section.
inline std::shared_ptr<LLMClient> make_llm_client(const PipelineConfig& c) {
  if (c.llm_replay) {
    if (!fs::exists(*c.llm_replay)) throw std::runtime_error("replay log " + c.llm_replay->string() + " not found");
    return std::make_shared<ReplayClient>(std::make_shared<const SessionLog>(c.llm_replay->string()));
  }
  if (c.llm) return std::make_shared<HttpChatClient>(*c.llm);
  return nullptr;
}

struct StageRecord {
  std::string name;
  std::string status;  // "ran", "skipped" or "not-run"
  std::string outputs_digest;
};

struct RunReport {
  fs::path run_dir;
  std::vector<StageRecord> stages;
  nlohmann::json corpus_totals;
  std::optional<fs::path> corpus_manifest;
  std::optional<fs::path> eval_report;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["run_dir"] = run_dir.string();
    j["stages"] = nlohmann::json::array();
    for (const auto& s : stages) j["stages"].push_back({{"stage", s.name}, {"status", s.status}, {"outputs", s.outputs_digest}});
    j["corpus_totals"] = corpus_totals;
    j["corpus_manifest"] = corpus_manifest ? nlohmann::json(corpus_manifest->string()) : nlohmann::json(nullptr);
    j["eval_report"] = eval_report ? nlohmann::json(eval_report->string()) : nlohmann::json(nullptr);
    return j;
  }
};

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> n{"domain", "gen", "solve", "corpus", "eval"};
  return n;
}

namespace pipeline_detail {

inline fs::path stage_dir(const fs::path& run, std::size_t i) {
  return run / (std::string("0") + std::to_string(i + 1) + "-" + stage_names()[i]);
}

// sha256 of every regular file under dir except stage.json, keyed by relative path.
inline nlohmann::json hash_tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  if (fs::exists(dir))
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "stage.json")
        files[fs::relative(e.path(), dir).generic_string()] = sha256_hex(read_file(e.path()));
  return files;
}

inline bool stage_current(const fs::path& dir, const std::string& inputs) {
  auto sj = dir / "stage.json";
  if (!fs::exists(sj)) return false;
  try {
    auto j = nlohmann::json::parse(read_file(sj));
    return j.at("inputs") == inputs && j.at("outputs") == hash_tree(dir);
  } catch (const std::exception&) {
    return false;
  }
}

inline std::string finish_stage(const fs::path& dir, const std::string& name, const std::string& inputs) {
  auto outputs = hash_tree(dir);
  std::string digest = sha256_hex(outputs.dump());
  write_file(dir / "stage.json",
             nlohmann::json{{"stage", name}, {"inputs", inputs}, {"outputs", outputs}, {"outputs_digest", digest}}.dump(2) +
                 "\n");
  return digest;
}

inline std::string outputs_digest(const fs::path& dir) {
  return nlohmann::json::parse(read_file(dir / "stage.json")).at("outputs_digest").get<std::string>();
}

inline std::vector<Problem> family_suite(const std::string& family, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  GenSpec g;
  g.family = family;
  g.count = n;
  g.seed = derive_seed(seed, "pipeline/suite/" + family);
  g.max_objects = 8;
  g.buckets = std::vector<LengthBucket>{{1, 12, 1.0}};
  std::vector<Problem> out;
  for (auto& t : generate(g)) out.push_back(std::move(t.problem));
  return out;
}

}  // namespace pipeline_detail

struct PipelineOptions {
  std::optional<std::string> stop_after;  // last stage to run
  LLMClient* llm = nullptr;               // overrides the configured client
};

inline RunReport full_pipeline(const PipelineConfig& cfg, const fs::path& run_dir, const PipelineOptions& opt = {}) {
  using namespace pipeline_detail;
  if (opt.stop_after &&
      std::find(stage_names().begin(), stage_names().end(), *opt.stop_after) == stage_names().end())
    throw std::invalid_argument("unknown stage '" + *opt.stop_after + "'");
  fs::create_directories(run_dir);
  write_file(run_dir / "config.json", cfg.source.dump(2) + "\n");

  std::shared_ptr<LLMClient> owned;
  LLMClient* llm = opt.llm;
  auto client = [&]() -> LLMClient* {
    if (!llm) {
      owned = make_llm_client(cfg);
      llm = owned.get();
    }
    return llm;
  };

  RunReport report;
  report.run_dir = run_dir;
  nlohmann::json keyed = cfg.source;
  keyed.erase("jobs");
  const std::string config_digest = sha256_hex(keyed.dump());
  std::string upstream;
  bool stopped = false;

  auto file_digest = [](const std::optional<fs::path>& p) {
    return p && fs::exists(*p) ? sha256_hex(read_file(*p)) : std::string("-");
  };

  auto run_stage = [&](std::size_t i, const std::string& extra, auto body) {
    const std::string& name = stage_names()[i];
    if (stopped) {
      report.stages.push_back({name, "not-run", ""});
      return;
    }
    fs::path dir = stage_dir(run_dir, i);
    std::string inputs = sha256_hex(name + "\n" + config_digest + "\n" + upstream + "\n" + extra);
    std::string status = "skipped";
    if (!stage_current(dir, inputs)) {
      fs::remove_all(dir);
      fs::create_directories(dir);
      try {
        body(dir);
      } catch (const StageError&) {
        throw;
      } catch (const std::exception& e) {
        throw StageError(name, e.what(), std::current_exception());
      }
      finish_stage(dir, name, inputs);
      status = "ran";
    }
    upstream = outputs_digest(dir);
    report.stages.push_back({name, status, upstream});
    if (opt.stop_after && *opt.stop_after == name) stopped = true;
  };

  // Families in config order, first occurrence.
  std::vector<std::string> fams;
  for (const auto& f : cfg.families)
    if (std::find(fams.begin(), fams.end(), f.spec.gen.family) == fams.end()) fams.push_back(f.spec.gen.family);

  std::string domain_inputs = file_digest(cfg.llm_replay);
  for (const auto& f : cfg.families) domain_inputs += "," + file_digest(f.domain);
  run_stage(0, domain_inputs, [&](const fs::path& dir) {
    for (const auto& fam : fams) {
      std::optional<fs::path> src;
      for (const auto& f : cfg.families)
        if (f.spec.gen.family == fam && f.domain) src = f.domain;
      std::string text = src ? read_file(*src) : render_domain(*task_family(fam).domain);
      auto suite = family_suite(fam, cfg.suite_size, cfg.seed);
      SuiteBudget budget;
      budget.jobs = cfg.jobs;
      nlohmann::json log{{"family", fam}, {"source", src ? src->string() : "builtin"}, {"repair_rounds", 0}};
      SuiteReport rep = validate_domain_text(text, suite, budget);
      std::shared_ptr<const Domain> dom;
      if (!rep.passes()) {
        LLMClient* c = client();
        if (!c) throw StageError("domain", fam + " domain fails its suite: " + rep.first_failure()->error);
        RepairOptions ro;
        ro.max_rounds = cfg.repair_rounds;
        ro.budget = budget;
        if (cfg.llm) ro.llm = *cfg.llm;
        auto res = repair_loop(text, suite, *c, ro);
        text = res.domain_text;
        dom = res.domain;
        log["repair_rounds"] = res.rounds;
      } else {
        dom = std::make_shared<const Domain>(parse_domain(text));
      }
      if (cfg.prune) {
        auto pr = hill_climb_prune(*dom, suite, budget);
        log["pruned"] = nlohmann::json::array();
        for (const auto& c : pr.removed) log["pruned"].push_back(c.str());
        dom = pr.domain;
      }
      write_file(dir / (fam + ".pddl"), render_domain(*dom));
      write_file(dir / (fam + ".json"), log.dump(2) + "\n");
    }
  });

  auto stage_domain = [&](const std::string& fam) {
    return std::make_shared<const Domain>(parse_domain(read_file(stage_dir(run_dir, 0) / (fam + ".pddl"))));
  };

  CorpusConfig cc = cfg.corpus_config(nullptr);
  run_stage(1, "", [&](const fs::path& dir) {
    std::vector<GeneratedTask> all;
    std::map<std::string, std::shared_ptr<const Domain>> doms;
    for (const auto& g : corpus_gen_specs(cc)) {
      auto& d = doms[g.family];
      if (!d) d = stage_domain(g.family);
      for (auto& t : generate(g)) {
        t.problem = rebind(t.problem, d);
        GroundUniverse u(t.problem);
        if (!plan_is_valid(u, t.witness))
          throw StageError("gen", "witness of " + t.id + " is invalid under the stage domain");
        all.push_back(std::move(t));
      }
    }
    write_dataset(dir, all);
  });

  run_stage(2, "", [&](const fs::path& dir) {
    auto tasks = load_dataset(stage_dir(run_dir, 1));
    std::vector<std::string> plans(tasks.size());
    parallel_for(tasks.size(), cfg.jobs, [&](std::size_t i) {
      auto& t = tasks[i];
      SearchConfig sc;
      sc.mode = cfg.solver;
      sc.max_expansions = cfg.solver_budget;
      GroundUniverse u(t.problem);
      SolveResult r = solve(u, sc);
      Plan best = t.reference;
      if (r.plan && r.plan->length() < best.length()) best = *r.plan;
      if (!plan_is_valid(u, best)) throw StageError("solve", "no valid plan for " + t.id);
      plans[i] = render_plan(best);
    });
    for (std::size_t i = 0; i < tasks.size(); ++i)
      write_file(dir / tasks[i].family / (tasks[i].id + ".plan"), plans[i]);
  });

  run_stage(3, file_digest(cfg.llm_replay), [&](const fs::path& dir) {
    auto tasks = load_dataset(stage_dir(run_dir, 1));
    for (auto& t : tasks) {
      t.reference = parse_plan(read_file(stage_dir(run_dir, 2) / t.family / (t.id + ".plan")));
      t.length = t.reference.length();
    }
    CorpusConfig c2 = cfg.corpus_config(cfg.align == AlignMode::llm ? client() : nullptr);
    write_corpus(dir, assemble_corpus(c2, std::move(tasks)));
  });
  if (report.stages[3].status != "not-run") {
    report.corpus_manifest = stage_dir(run_dir, 3) / "manifest.json";
    report.corpus_totals = nlohmann::json::parse(read_file(*report.corpus_manifest)).at("totals");
  }

  run_stage(4, file_digest(cfg.responses), [&](const fs::path& dir) {
    if (!cfg.responses) {
      write_file(dir / "eval.json", "null\n");
      return;
    }
    auto corpus = load_corpus(stage_dir(run_dir, 3));
    std::map<std::string, std::shared_ptr<const Domain>> doms;
    std::vector<BenchInstance> bench;
    for (const auto& r : corpus.records) {
      if (r.split != "eval") continue;
      auto& d = doms[r.family];
      if (!d) d = stage_domain(r.family);
      bench.push_back({r.id, r.family, parse_problem(r.problem, d)});
    }
    auto run = score_run(bench, read_responses(*cfg.responses), {}, cfg.model, cfg.jobs);
    write_file(dir / "eval.json", run.to_json().dump(2) + "\n");
    write_file(dir / "table.txt", run.table());
  });
  if (cfg.responses && report.stages[4].status != "not-run") report.eval_report = stage_dir(run_dir, 4) / "eval.json";

  write_file(run_dir / "report.json", report.to_json().dump(2) + "\n");
  return report;
}

}  // namespace planforge
