// planforge command-line interface. Every stage is a subcommand; see --help.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "planforge/planforge.hpp"

using namespace planforge;
using nlohmann::json;

namespace {

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_file(out, text);
}

// --domain FILE or --family NAME for the built-in domain.
struct DomainSource {
  std::string file;
  std::string family;

  void add(CLI::App* c, bool required = true) {
    auto* f = c->add_option("--domain", file, "PDDL domain file");
    auto* g = c->add_option("--family", family, "use the built-in domain of a task family");
    f->excludes(g);
    g->excludes(f);
    if (!required) return;
    c->callback([this] {
      if (file.empty() && family.empty()) throw CLI::ValidationError("--domain or --family", "one is required");
    });
  }

  std::string text() const { return file.empty() ? render_domain(*task_family(family).domain) : read_file(file); }
  std::shared_ptr<const Domain> load() const {
    if (file.empty()) return task_family(family).domain;
    return std::make_shared<const Domain>(parse_domain(read_file(file)));
  }
};

struct LlmSource {
  std::string config;
  std::string replay;
  std::string record;

  void add(CLI::App* c) {
    c->add_option("--llm-config", config, "JSON file with endpoint, model, token_env, limits")->check(CLI::ExistingFile);
    c->add_option("--llm-replay", replay, "serve LLM calls from a recorded session log")->check(CLI::ExistingFile);
    c->add_option("--llm-record", record, "append every live LLM call to this session log");
  }

  LLMConfig cfg() const { return config.empty() ? LLMConfig{} : LLMConfig::from_json(json::parse(read_file(config))); }

  // nullptr when no LLM was configured.
  std::shared_ptr<LLMClient> client() const {
    if (!replay.empty()) return std::make_shared<ReplayClient>(std::make_shared<const SessionLog>(replay));
    if (config.empty()) return nullptr;
    std::shared_ptr<LLMClient> live = std::make_shared<HttpChatClient>(cfg());
    if (!record.empty()) live = std::make_shared<RecordingClient>(live, std::make_shared<SessionLog>(record));
    return live;
  }
};

ValidationConfig validation_config(const std::string& goal, const std::string& progress) {
  ValidationConfig v;
  v.goal_semantics = goal_semantics_from(goal);
  v.progress_mode = progress_mode_from(progress);
  return v;
}

std::vector<LengthBucket> parse_buckets(const std::string& text) {
  std::vector<LengthBucket> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto dash = item.find('-');
    auto colon = item.find(':');
    if (dash == std::string::npos || colon == std::string::npos || colon < dash)
      throw std::invalid_argument("bucket '" + item + "' is not LO-HI:WEIGHT");
    out.push_back({std::stoul(item.substr(0, dash)), std::stoul(item.substr(dash + 1, colon - dash - 1)),
                   std::stod(item.substr(colon + 1))});
  }
  return out;
}

// Suite problems: a dataset directory, else problems generated for a family.
std::vector<Problem> load_suite(const std::string& dir, const std::string& family, std::size_t n, std::uint64_t seed,
                                const std::shared_ptr<const Domain>& d) {
  std::vector<Problem> out;
  if (!dir.empty()) {
    for (auto& t : load_dataset(dir)) out.push_back(rebind(t.problem, d));
  } else {
    for (auto& q : pipeline_detail::family_suite(family, n, seed)) out.push_back(rebind(q, d));
  }
  if (out.empty()) throw std::invalid_argument("empty suite");
  return out;
}

std::string suite_summary(const SuiteReport& r) {
  std::string s;
  for (const auto& e : r.entries) s += e.problem_id + " " + to_string(e.status) + "\n";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"planforge: STRIPS planning, task generation and reasoning-corpus tools"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "planforge 1.0");

  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out;
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "master seed (default 0)"); };
  auto add_jobs = [&](CLI::App* c) { c->add_option("--jobs", jobs, "worker threads (default 1)")->check(CLI::PositiveNumber); };

  // parse
  auto* parse = app.add_subcommand("parse", "parse a domain and optional problem; print them canonically");
  DomainSource p_dom;
  std::string p_problem;
  p_dom.add(parse);
  parse->add_option("--problem", p_problem, "PDDL problem file")->check(CLI::ExistingFile);
  parse->add_option("--out", out, "output file (default stdout)");

  // plan
  auto* plan = app.add_subcommand("plan", "solve a problem");
  DomainSource pl_dom;
  std::string pl_problem, pl_mode = "ff", pl_report;
  std::size_t pl_budget = 1'000'000;
  double pl_detour = 0.0;
  pl_dom.add(plan);
  plan->add_option("--problem", pl_problem, "PDDL problem file")->required()->check(CLI::ExistingFile);
  plan->add_option("--mode", pl_mode, "bfs | ff | diversified (default ff)");
  plan->add_option("--budget", pl_budget, "maximum expansions");
  plan->add_option("--detour-rate", pl_detour, "diversified mode: chance of a detour per step");
  plan->add_option("--out", out, "plan file (default stdout)");
  plan->add_option("--report", pl_report, "write a JSON search report here");
  add_seed(plan);

  // validate
  auto* validate = app.add_subcommand("validate", "execute a plan and score it");
  DomainSource v_dom;
  std::string v_problem, v_plan, v_goal = "containment", v_progress = "last_valid_state";
  bool v_json = false;
  v_dom.add(validate);
  validate->add_option("--problem", v_problem, "PDDL problem file")->required()->check(CLI::ExistingFile);
  validate->add_option("--plan", v_plan, "plan file, one action per line")->required()->check(CLI::ExistingFile);
  validate->add_option("--goal-semantics", v_goal, "containment | equality");
  validate->add_option("--progress-mode", v_progress, "last_valid_state | strict_absorbing");
  validate->add_flag("--json", v_json, "print the report as JSON");
  validate->add_option("--out", out, "output file (default stdout)");

  // gen
  auto* gen = app.add_subcommand("gen", "generate solvable problems with witness plans");
  GenSpec g;
  std::string g_buckets, g_out;
  gen->add_option("--family", g.family, "task family")->required();
  gen->add_option("--count", g.count, "number of problems");
  gen->add_option("--subfamily", g.subfamily, "Blocks World: stack | unstack | reorder | mixed");
  gen->add_option("--min-objects", g.min_objects, "fewest objects");
  gen->add_option("--max-objects", g.max_objects, "most objects");
  gen->add_option("--buckets", g_buckets, "length buckets, LO-HI:WEIGHT,...");
  gen->add_option("--attempts", g.attempts, "rejection budget per problem");
  gen->add_option("--out", g_out, "dataset directory")->required();
  add_seed(gen);
  add_jobs(gen);

  // repair
  auto* repair = app.add_subcommand("repair", "validate a domain on a suite and repair it with an LLM");
  DomainSource r_dom;
  LlmSource r_llm;
  std::string r_suite, r_suite_family = "bw_classic", r_log;
  std::size_t r_size = 10, r_rounds = 5;
  r_dom.add(repair);
  r_llm.add(repair);
  repair->add_option("--suite", r_suite, "dataset directory holding the suite problems")->check(CLI::ExistingDirectory);
  repair->add_option("--suite-family", r_suite_family, "generate the suite from this family (default bw_classic)");
  repair->add_option("--suite-size", r_size, "generated suite size (default 10)");
  repair->add_option("--rounds", r_rounds, "maximum repair rounds (default 5)");
  repair->add_option("--out", out, "repaired domain file (default stdout)");
  repair->add_option("--log", r_log, "write the round history as JSON here");
  add_seed(repair);
  add_jobs(repair);

  // prune
  auto* prune = app.add_subcommand("prune", "remove domain components the suite does not need");
  DomainSource pr_dom;
  std::string pr_suite, pr_suite_family = "bw_classic";
  std::size_t pr_size = 10;
  pr_dom.add(prune);
  prune->add_option("--suite", pr_suite, "dataset directory holding the suite problems")->check(CLI::ExistingDirectory);
  prune->add_option("--suite-family", pr_suite_family, "generate the suite from this family (default bw_classic)");
  prune->add_option("--suite-size", pr_size, "generated suite size (default 10)");
  prune->add_option("--out", out, "pruned domain file (default stdout)");
  add_seed(prune);
  add_jobs(prune);

  // trace
  auto* trace = app.add_subcommand("trace", "print the state trace of a plan and its reasoning text");
  DomainSource t_dom;
  LlmSource t_llm;
  std::string t_problem, t_plan, t_cot = "template";
  t_dom.add(trace);
  t_llm.add(trace);
  trace->add_option("--problem", t_problem, "PDDL problem file")->required()->check(CLI::ExistingFile);
  trace->add_option("--plan", t_plan, "plan file")->required()->check(CLI::ExistingFile);
  trace->add_option("--cot", t_cot, "none | template | llm (default template)");
  trace->add_option("--out", out, "output file (default stdout)");
  add_seed(trace);

  // corpus
  auto* corpus = app.add_subcommand("corpus", "build an instruction-tuning corpus");
  LlmSource c_llm;
  std::string c_profile = "custom", c_align = "template", c_out;
  std::vector<std::string> c_families;
  double c_eval = 0.1, c_div = 0.25, c_detour = 0.2;
  std::size_t c_max_objects = 30;
  c_llm.add(corpus);
  corpus->add_option("--profile", c_profile, "paper-tdd | custom (default custom)");
  corpus->add_option("--family", c_families, "custom profile: NAME:COUNT, repeatable");
  corpus->add_option("--max-objects", c_max_objects, "custom profile: most objects per problem");
  corpus->add_option("--alignment", c_align, "template | llm (default template)");
  corpus->add_option("--eval-ratio", c_eval, "held-out share per family (default 0.1)");
  corpus->add_option("--diversified-ratio", c_div, "share of plans with detours (default 0.25)");
  corpus->add_option("--detour-rate", c_detour, "detour chance per step in diversified plans (default 0.2)");
  corpus->add_option("--out", c_out, "corpus directory")->required();
  add_seed(corpus);
  add_jobs(corpus);

  // eval
  auto* eval = app.add_subcommand("eval", "score model responses on a benchmark");
  std::string e_dataset, e_corpus, e_responses, e_model = "model", e_table, e_goal = "containment",
                                                 e_progress = "last_valid_state";
  auto* e_ds = eval->add_option("--dataset", e_dataset, "benchmark dataset directory")->check(CLI::ExistingDirectory);
  auto* e_cp = eval->add_option("--corpus", e_corpus, "corpus directory; its eval split is the benchmark")
                   ->check(CLI::ExistingDirectory);
  e_ds->excludes(e_cp);
  e_cp->excludes(e_ds);
  eval->add_option("--responses", e_responses, "JSONL with id, response, completion_tokens")->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--model", e_model, "model name for the report");
  eval->add_option("--goal-semantics", e_goal, "containment | equality");
  eval->add_option("--progress-mode", e_progress, "last_valid_state | strict_absorbing");
  eval->add_option("--out", out, "JSON report file (default stdout)");
  eval->add_option("--table", e_table, "write the text table here");
  add_jobs(eval);

  // run
  auto* run = app.add_subcommand("run", "run the whole pipeline from a config file");
  std::string ru_config, ru_dir, ru_stop;
  run->add_option("--config", ru_config, "pipeline config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--run-dir", ru_dir, "run directory")->required();
  run->add_option("--stop-after", ru_stop, "last stage to run: domain | gen | solve | corpus | eval");
  auto* ru_seed = run->add_option("--seed", seed, "override the config seed");
  auto* ru_jobs = run->add_option("--jobs", jobs, "override the config jobs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return static_cast<int>(ExitCode::usage);
  }

  try {
    if (*parse) {
      auto d = p_dom.load();
      std::string text = render_domain(*d);
      if (!p_problem.empty()) text += "\n" + render_problem(parse_problem(read_file(p_problem), d));
      emit(out, text);
    } else if (*plan) {
      SearchConfig sc;
      sc.mode = search_mode_from(pl_mode);
      sc.max_expansions = pl_budget;
      sc.seed = seed;
      sc.detour_rate = pl_detour;
      sc.check();
      Problem q = parse_problem(read_file(pl_problem), pl_dom.load());
      SolveResult r = solve(q, sc);
      json rep{{"status", to_string(r.status)},
               {"expanded", r.stats.expanded},
               {"generated", r.stats.generated},
               {"evaluated", r.stats.evaluated},
               {"length", r.plan ? json(r.plan->length()) : json(nullptr)}};
      if (!pl_report.empty()) write_file(pl_report, rep.dump(2) + "\n");
      if (r.status == SolveStatus::unsolvable)
        throw CommandFailure(ExitCode::unsolvable, q.name + " has no plan (expanded " +
                                                       std::to_string(r.stats.expanded) + ")");
      if (r.status == SolveStatus::exhausted)
        throw CommandFailure(ExitCode::exhausted, "budget of " + std::to_string(pl_budget) + " expansions exhausted");
      emit(out, render_plan(*r.plan));
    } else if (*validate) {
      GroundUniverse u(parse_problem(read_file(v_problem), v_dom.load()));
      auto rep = validate_plan(u, parse_plan(read_file(v_plan)), validation_config(v_goal, v_progress),
                               u.problem().name);
      std::string text;
      if (v_json) {
        text = rep.to_json().dump(2) + "\n";
      } else {
        text = "success=" + std::to_string(rep.success ? 1 : 0) + "\nprogress=" + rep.progress.str() +
               "\nm=" + std::to_string(rep.m) + "\nlength=" + std::to_string(rep.length) + "\n";
        if (rep.first_failure)
          text += "first_failure=" + std::to_string(rep.first_failure->step) + " " + rep.first_failure->reason + "\n";
      }
      emit(out, text);
      if (!rep.success) return static_cast<int>(ExitCode::plan_invalid);
    } else if (*gen) {
      g.seed = seed;
      g.jobs = jobs;
      if (!g_buckets.empty()) g.buckets = parse_buckets(g_buckets);
      g.check();
      auto tasks = generate(g);
      auto m = write_dataset(g_out, tasks, {{"family", g.family}, {"seed", seed}});
      std::cout << "generated " << tasks.size() << " problems in " << g_out << "\n";
    } else if (*repair) {
      auto d = r_dom.load();
      std::string text = r_dom.text();
      SuiteBudget b;
      b.jobs = jobs;
      auto suite = load_suite(r_suite, r_suite_family, r_size, seed, d);
      auto first = validate_domain_text(text, suite, b);
      if (first.passes()) {
        emit(out, text);
        std::cerr << "domain passes all " << suite.size() << " suite problems; no repair needed\n";
        return 0;
      }
      auto llm = r_llm.client();
      if (!llm) throw LLMUnavailable("domain fails its suite and no --llm-config or --llm-replay was given");
      RepairOptions ro;
      ro.max_rounds = r_rounds;
      ro.budget = b;
      ro.llm = r_llm.cfg();
      RepairResult res;
      auto write_log = [&](const std::vector<RepairRound>& h) {
        if (r_log.empty()) return;
        json j = json::array();
        for (const auto& r : h) j.push_back({{"round", r.round}, {"domain_sha256", r.domain_digest},
                                             {"passes", r.passes}, {"note", r.note}});
        write_file(r_log, j.dump(2) + "\n");
      };
      try {
        res = repair_loop(text, suite, *llm, ro);
      } catch (const RepairFailed& e) {
        write_log(e.history());
        throw;
      }
      write_log(res.history);
      emit(out, res.domain_text);
      std::cerr << "repaired in " << res.rounds << " rounds\n";
    } else if (*prune) {
      auto d = pr_dom.load();
      SuiteBudget b;
      b.jobs = jobs;
      auto suite = load_suite(pr_suite, pr_suite_family, pr_size, seed, d);
      auto first = validate_domain(d, suite, b);
      if (!first.passes())
        throw CommandFailure(ExitCode::unsolvable, "domain fails its suite before pruning:\n" + suite_summary(first));
      auto res = hill_climb_prune(*d, suite, b);
      emit(out, render_domain(*res.domain));
      for (const auto& c : res.removed) std::cerr << "removed " << c.str() << "\n";
    } else if (*trace) {
      GroundUniverse u(parse_problem(read_file(t_problem), t_dom.load()));
      auto tr = extract_trace(u, parse_plan(read_file(t_plan)));
      std::string text = "init: " + to_string(tr.init) + "\n";
      for (std::size_t i = 0; i < tr.steps.size(); ++i) {
        const auto& s = tr.steps[i];
        text += "step " + std::to_string(i + 1) + ": " + s.call.str() + " [" + to_string(s.role) + "]\n";
        text += "  adds: " + to_string(cot::minus(s.post, s.pre)) + "\n";
        text += "  deletes: " + to_string(cot::minus(s.pre, s.post)) + "\n";
      }
      text += "goal: " + to_string(tr.goal) + "\n";
      if (t_cot == "template") {
        text += expand_cot_template(u, tr, seed).rendered + "\n";
      } else if (t_cot == "llm") {
        auto llm = t_llm.client();
        if (!llm) throw LLMUnavailable("--cot llm needs --llm-config or --llm-replay");
        auto oc = expand_cot_llm(u, tr, *llm, t_llm.cfg(), seed);
        text += oc.trajectory.rendered + "\n";
        if (oc.source == "template") std::cerr << "LLM reasoning failed the faithfulness check; used the template\n";
      } else if (t_cot != "none") {
        throw std::invalid_argument("--cot must be none, template or llm");
      }
      emit(out, text);
    } else if (*corpus) {
      CorpusConfig cc;
      if (c_profile == "paper-tdd") {
        cc = paper_tdd_profile(seed);
        if (!c_families.empty()) throw std::invalid_argument("--family applies to the custom profile only");
      } else if (c_profile == "custom") {
        cc.seed = seed;
        for (const auto& f : c_families) {
          auto colon = f.find(':');
          if (colon == std::string::npos) throw std::invalid_argument("--family expects NAME:COUNT");
          CorpusSpec s;
          s.gen.family = f.substr(0, colon);
          s.gen.count = std::stoul(f.substr(colon + 1));
          s.gen.max_objects = c_max_objects;
          task_family(s.gen.family);
          cc.specs.push_back(s);
        }
        cc.eval_ratio = c_eval;
      } else {
        throw std::invalid_argument("--profile must be paper-tdd or custom");
      }
      cc.diversified_ratio = c_div;
      cc.detour_rate = c_detour;
      cc.jobs = jobs;
      cc.align = align_mode_from(c_align);
      auto llm = c_llm.client();
      cc.llm = llm.get();
      cc.llm_config = c_llm.cfg();
      auto c = build_corpus(cc);
      write_corpus(c_out, c);
      std::cout << c.manifest.at("totals").dump() << "\n";
    } else if (*eval) {
      std::vector<BenchInstance> bench;
      if (!e_dataset.empty()) {
        bench = bench_from(load_dataset(e_dataset));
      } else if (!e_corpus.empty()) {
        auto c = load_corpus(e_corpus);
        std::map<std::string, std::shared_ptr<const Domain>> doms;
        for (const auto& r : c.records) {
          if (r.split != "eval") continue;
          auto& d = doms[r.family];
          if (!d) d = std::make_shared<const Domain>(parse_domain(c.manifest.at("domains").at(r.family).get<std::string>()));
          bench.push_back({r.id, r.family, parse_problem(r.problem, d)});
        }
      } else {
        throw std::invalid_argument("--dataset or --corpus is required");
      }
      auto er = score_run(bench, read_responses(std::filesystem::path(e_responses)),
                          validation_config(e_goal, e_progress), e_model, jobs);
      emit(out, er.to_json().dump(2) + "\n");
      if (!e_table.empty()) write_file(e_table, er.table());
      else if (!out.empty() && out != "-") std::cout << er.table();
    } else if (*run) {
      auto cfg = load_pipeline_config(ru_config);
      if (*ru_seed) {
        cfg.seed = seed;
        cfg.source["seed"] = seed;
      }
      if (*ru_jobs) cfg.jobs = jobs;
      PipelineOptions opt;
      if (!ru_stop.empty()) opt.stop_after = ru_stop;
      auto rep = full_pipeline(cfg, ru_dir, opt);
      std::cout << rep.to_json().dump(2) << "\n";
    }
  } catch (...) {
    auto code = classify(std::current_exception());
    std::string msg;
    try {
      throw;
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
      msg = "unknown failure";
    }
    std::cerr << "error: " << to_string(code) << ": " << msg << "\n";
    return static_cast<int>(code);
  }
  return 0;
}
