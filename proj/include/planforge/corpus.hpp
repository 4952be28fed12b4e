#pragma once

// Aligned training records <problem, plan, CoT>: generation, splits, JSONL
// serialization and the manifest.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planforge/evalharness.hpp"
#include "planforge/llm.hpp"
#include "planforge/parallel.hpp"
#include "planforge/taskgen.hpp"
#include "planforge/trace.hpp"

namespace planforge {

inline constexpr int kCorpusSchemaVersion = 1;

class CompositionInfeasible : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SinkError : public IoError {
 public:
  using IoError::IoError;
};

enum class AlignMode { template_, llm };

inline const char* to_string(AlignMode m) { return m == AlignMode::llm ? "llm" : "template"; }
inline AlignMode align_mode_from(std::string_view s) {
  if (s == "template") return AlignMode::template_;
  if (s == "llm") return AlignMode::llm;
  throw std::invalid_argument("unknown alignment mode '" + std::string(s) + "'");
}

struct CorpusSpec {
  GenSpec gen;
  std::optional<std::size_t> eval_count;  // default: round(eval_ratio * count)
};

struct CorpusConfig {
  std::vector<CorpusSpec> specs;
  AlignMode align = AlignMode::template_;
  double eval_ratio = 0.1;
  double diversified_ratio = 0.25;
  double detour_rate = 0.2;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string profile = "custom";
  LLMClient* llm = nullptr;
  LLMConfig llm_config;
  CoTOptions cot;
};

inline CorpusConfig paper_tdd_profile(std::uint64_t seed = 0) {
  CorpusConfig c;
  c.profile = "paper-tdd";
  c.seed = seed;
  auto spec = [](std::string fam, std::size_t train, std::size_t eval) {
    CorpusSpec s;
    s.gen.family = std::move(fam);
    s.gen.count = train + eval;
    s.eval_count = eval;
    return s;
  };
  c.specs.push_back(spec("bw_align", 719, 80));
  auto hard = spec("bw_hard", 3048, 340);
  hard.gen.buckets = decade_buckets({6, 2, 1, 1});
  c.specs.push_back(hard);
  auto classic = spec("bw_classic", 2038, 227);
  classic.gen.subfamily = "reorder";
  c.specs.push_back(classic);
  return c;
}

struct RecordSeeds {
  std::uint64_t generation = 0;
  std::uint64_t plan = 0;
  std::uint64_t cot = 0;
  std::uint64_t paraphrase = 0;
  bool operator==(const RecordSeeds&) const = default;
};

// One line of the corpus file.
struct CorpusRecord {
  int schema_version = kCorpusSchemaVersion;
  std::string id;
  std::string family;
  std::string subfamily;
  std::size_t bucket = 0;
  std::string bucket_range;
  std::string split;  // "train" or "eval"
  std::string provenance;
  std::string cot_source;
  std::string problem_digest;
  RecordSeeds seeds;
  std::string problem;  // PDDL text
  std::string statement;
  std::vector<std::string> plan;
  std::vector<std::string> roles;
  std::string system_prompt;
  std::string user_prompt;
  std::string target;

  bool operator==(const CorpusRecord&) const = default;

  nlohmann::json to_json() const {
    return {{"schema_version", schema_version},
            {"id", id},
            {"family", family},
            {"subfamily", subfamily},
            {"bucket", bucket},
            {"bucket_range", bucket_range},
            {"split", split},
            {"provenance", provenance},
            {"cot_source", cot_source},
            {"problem_digest", problem_digest},
            {"seeds",
             {{"generation", seeds.generation}, {"plan", seeds.plan}, {"cot", seeds.cot}, {"paraphrase", seeds.paraphrase}}},
            {"problem", problem},
            {"statement", statement},
            {"plan", plan},
            {"roles", roles},
            {"system_prompt", system_prompt},
            {"user_prompt", user_prompt},
            {"target", target}};
  }

  static CorpusRecord from_json(const nlohmann::json& j) {
    CorpusRecord r;
    r.schema_version = j.at("schema_version");
    if (r.schema_version != kCorpusSchemaVersion)
      throw std::runtime_error("unsupported corpus schema_version " + std::to_string(r.schema_version));
    r.id = j.at("id");
    r.family = j.at("family");
    r.subfamily = j.at("subfamily");
    r.bucket = j.at("bucket");
    r.bucket_range = j.at("bucket_range");
    r.split = j.at("split");
    r.provenance = j.at("provenance");
    r.cot_source = j.at("cot_source");
    r.problem_digest = j.at("problem_digest");
    const auto& s = j.at("seeds");
    r.seeds = {s.at("generation"), s.at("plan"), s.at("cot"), s.at("paraphrase")};
    r.problem = j.at("problem");
    r.statement = j.at("statement");
    r.plan = j.at("plan").get<std::vector<std::string>>();
    r.roles = j.at("roles").get<std::vector<std::string>>();
    r.system_prompt = j.at("system_prompt");
    r.user_prompt = j.at("user_prompt");
    r.target = j.at("target");
    return r;
  }

  std::string line() const { return to_json().dump() + "\n"; }
};

inline std::string final_block(const Plan& p) {
  std::string out = "<FINAL>\n";
  for (const auto& a : p.actions) out += a.str() + "\n";
  return out + "</FINAL>";
}

struct Corpus {
  nlohmann::json manifest;
  std::vector<CorpusRecord> records;
};

namespace corpus_detail {

struct Item {
  GeneratedTask task;
  std::string split = "train";
  bool diversify = false;
};

inline void check_config(const CorpusConfig& c) {
  if (!(c.eval_ratio >= 0.0 && c.eval_ratio < 1.0)) throw CompositionInfeasible("eval_ratio must be in [0, 1)");
  if (!(c.diversified_ratio >= 0.0 && c.diversified_ratio <= 1.0))
    throw CompositionInfeasible("diversified_ratio must be in [0, 1]");
  if (c.align == AlignMode::llm && !c.llm) throw std::invalid_argument("llm alignment needs an LLM client");
  for (const auto& s : c.specs) {
    task_family(s.gen.family);
    if (s.eval_count && *s.eval_count > s.gen.count)
      throw CompositionInfeasible("eval_count " + std::to_string(*s.eval_count) + " exceeds count " +
                                  std::to_string(s.gen.count) + " for " + s.gen.family);
  }
}

// Picks exactly `quota` items of `idx` for eval, never splitting a group of
// identical problems, stratified by bucket.
inline void assign_eval(std::vector<Item>& items, const std::vector<std::size_t>& idx, std::size_t quota,
                        std::uint64_t seed, const std::string& family) {
  std::map<std::size_t, std::vector<std::size_t>> by_bucket;
  for (auto i : idx) by_bucket[items[i].task.bucket].push_back(i);
  std::vector<double> w;
  for (const auto& [b, v] : by_bucket) w.push_back(static_cast<double>(v.size()));
  auto quotas = w.empty() ? std::vector<std::size_t>{} : apportion(quota, w);
  std::size_t k = 0, placed = 0;
  std::vector<std::vector<std::size_t>> leftovers;
  for (const auto& [b, members] : by_bucket) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (auto i : members) groups[problem_digest(items[i].task.problem)].push_back(i);
    std::vector<std::vector<std::size_t>> gs;
    for (auto& [d, g] : groups) gs.push_back(g);
    Rng rng(derive_seed(seed, "corpus/split/" + family, b));
    rng.shuffle(gs);
    std::size_t need = quotas[k++];
    for (auto& g : gs) {
      if (g.size() <= need) {
        for (auto i : g) items[i].split = "eval";
        need -= g.size();
        placed += g.size();
      } else {
        leftovers.push_back(g);
      }
    }
  }
  // Duplicate groups that did not fit their bucket quota fill any remainder.
  for (auto& g : leftovers)
    if (placed + g.size() <= quota) {
      for (auto i : g) items[i].split = "eval";
      placed += g.size();
    }
  if (placed != quota)
    throw CompositionInfeasible("cannot hold out exactly " + std::to_string(quota) + " " + family +
                                " records without splitting duplicate problems");
}

}  // namespace corpus_detail

// Produces the record for one generated task. Throws std::logic_error if the
// result would not validate, which would be a bug upstream.
inline CorpusRecord make_record(const GeneratedTask& t, const std::string& split, bool diversified,
                                const CorpusConfig& cfg) {
  const TaskFamily& fam = task_family(t.family);
  CorpusRecord r;
  r.id = t.id;
  r.family = t.family;
  r.subfamily = t.subfamily;
  r.bucket = t.bucket;
  r.bucket_range = t.bucket_range.label();
  r.split = split;
  r.problem_digest = problem_digest(t.problem);
  r.seeds.generation = t.seed;
  r.seeds.plan = derive_seed(cfg.seed, "corpus/plan/" + t.id);
  r.seeds.cot = derive_seed(cfg.seed, "corpus/cot/" + t.id);
  r.seeds.paraphrase = derive_seed(cfg.seed, "corpus/paraphrase/" + t.id);
  r.problem = render_problem(t.problem);

  GroundUniverse u(t.problem);
  Plan plan = t.reference;
  if (diversified) {
    for (std::uint64_t k = 0; k < 8 && plan.provenance != Provenance::diversified; ++k) {
      SearchConfig sc;
      sc.mode = SearchMode::diversified;
      sc.seed = derive_seed(r.seeds.plan, "retry", k);
      sc.detour_rate = cfg.detour_rate;
      plan = diversify(u, t.reference, sc);
    }
  }
  r.provenance = to_string(plan.provenance);
  for (std::size_t i = 0; i < plan.length(); ++i) {
    r.plan.push_back(plan.actions[i].str());
    r.roles.push_back(to_string(plan.role(i)));
  }

  TransitionTrace tr = extract_trace(u, plan);
  CoTTrajectory cot;
  if (cfg.align == AlignMode::llm) {
    auto out = expand_cot_llm(u, tr, *cfg.llm, cfg.llm_config, r.seeds.cot, cfg.cot);
    cot = std::move(out.trajectory);
    r.cot_source = out.source;
  } else {
    cot = expand_cot_template(u, tr, r.seeds.cot, cfg.cot);
    r.cot_source = "template";
  }
  auto faith = check_cot_faithfulness(cot, tr, u);
  if (!faith.ok()) throw std::logic_error("unfaithful trajectory for " + t.id + ": " + faith.summary());

  r.statement = paraphrase_problem(t.problem, fam, r.seeds.paraphrase,
                                   cfg.align == AlignMode::llm ? cfg.llm : nullptr, cfg.llm_config);
  auto prompt = build_eval_prompt(t.problem);
  r.system_prompt = prompt.system;
  r.user_prompt = prompt.user;
  r.target = cot.rendered + "\n" + final_block(plan);

  auto check = validate_plan(u, extract_final_plan(r.target, true));
  if (!check.success) throw std::logic_error("target plan of " + t.id + " does not validate");
  return r;
}

inline nlohmann::json corpus_manifest(const CorpusConfig& cfg, const std::vector<CorpusRecord>& records,
                                      const std::map<std::string, std::string>& domains) {
  nlohmann::json m;
  m["schema_version"] = kCorpusSchemaVersion;
  m["profile"] = cfg.profile;
  m["seed"] = cfg.seed;
  m["alignment"] = to_string(cfg.align);
  m["eval_ratio"] = cfg.eval_ratio;
  m["diversified_ratio"] = cfg.diversified_ratio;
  m["detour_rate"] = cfg.detour_rate;
  m["prompt_version"] = std::string(prompts::kVersion);
  m["training"] = {{"learning_rate", 1e-5}, {"epochs", 5}};
  m["domains"] = nlohmann::json::object();
  for (const auto& [f, text] : domains) m["domains"][f] = text;
  nlohmann::json fams = nlohmann::json::object();
  std::size_t train = 0, eval = 0;
  std::string all;
  nlohmann::json digests = nlohmann::json::array();
  for (const auto& r : records) {
    auto& f = fams[r.family];
    if (f.is_null()) f = {{"train", 0}, {"eval", 0}, {"diversified", 0}, {"buckets", nlohmann::json::object()}};
    f[r.split] = f[r.split].get<std::size_t>() + 1;
    if (r.provenance == "diversified") f["diversified"] = f["diversified"].get<std::size_t>() + 1;
    auto& b = f["buckets"][r.bucket_range];
    if (b.is_null()) b = {{"train", 0}, {"eval", 0}};
    b[r.split] = b[r.split].get<std::size_t>() + 1;
    (r.split == "eval" ? eval : train) += 1;
    std::string line = r.line();
    all += line;
    digests.push_back({{"id", r.id}, {"sha256", sha256_hex(line)}});
  }
  m["families"] = fams;
  m["totals"] = {{"train", train}, {"eval", eval}, {"records", records.size()}};
  m["records"] = digests;
  m["corpus_sha256"] = sha256_hex(all);
  return m;
}

// The generation requests behind a corpus: per-spec derived seeds, and ids
// that continue across specs of the same family.
inline std::vector<GenSpec> corpus_gen_specs(const CorpusConfig& cfg) {
  std::vector<GenSpec> out;
  std::map<std::string, std::size_t> next_index;
  for (std::size_t s = 0; s < cfg.specs.size(); ++s) {
    GenSpec g = cfg.specs[s].gen;
    g.seed = derive_seed(cfg.seed, "corpus/gen/" + g.family, s);
    g.first_index = next_index[g.family];
    g.jobs = cfg.jobs;
    next_index[g.family] += g.count;
    out.push_back(std::move(g));
  }
  return out;
}

inline std::map<std::string, std::size_t> eval_quotas(const CorpusConfig& cfg) {
  std::map<std::string, std::size_t> q;
  for (const auto& s : cfg.specs)
    q[s.gen.family] += s.eval_count
                           ? *s.eval_count
                           : static_cast<std::size_t>(std::llround(cfg.eval_ratio * static_cast<double>(s.gen.count)));
  return q;
}

// Splits, diversifies and aligns already generated tasks.
inline Corpus assemble_corpus(const CorpusConfig& cfg, std::vector<GeneratedTask> tasks) {
  using corpus_detail::Item;
  corpus_detail::check_config(cfg);
  auto quota = eval_quotas(cfg);
  std::vector<Item> items;
  std::map<std::string, std::string> domains;
  std::map<std::string, std::vector<std::size_t>> by_family;
  for (auto& t : tasks) {
    if (!domains.count(t.family)) domains[t.family] = render_domain(*t.problem.domain);
    by_family[t.family].push_back(items.size());
    items.push_back(Item{std::move(t), "train", false});
  }

  for (const auto& [fam, idx] : by_family) {
    if (quota[fam] > idx.size())
      throw CompositionInfeasible("eval quota for " + fam + " exceeds its " + std::to_string(idx.size()) + " tasks");
    corpus_detail::assign_eval(items, idx, quota[fam], cfg.seed, fam);
    auto pick = idx;
    Rng rng(derive_seed(cfg.seed, "corpus/diversify/" + fam));
    rng.shuffle(pick);
    auto nd = static_cast<std::size_t>(std::llround(cfg.diversified_ratio * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < nd; ++i) items[pick[i]].diversify = true;
  }

  std::vector<CorpusRecord> records(items.size());
  parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    records[i] = make_record(items[i].task, items[i].split, items[i].diversify, cfg);
  });
  Corpus c;
  c.manifest = corpus_manifest(cfg, records, domains);
  c.records = std::move(records);
  return c;
}

inline Corpus build_corpus(const CorpusConfig& cfg) {
  corpus_detail::check_config(cfg);
  std::vector<GeneratedTask> tasks;
  for (const auto& g : corpus_gen_specs(cfg)) {
    auto ts = generate(g);
    std::move(ts.begin(), ts.end(), std::back_inserter(tasks));
  }
  return assemble_corpus(cfg, std::move(tasks));
}

inline std::size_t emit_records(const Corpus& c, std::ostream& sink) {
  std::size_t n = 0;
  for (const auto& r : c.records) {
    sink << r.line();
    if (!sink) throw SinkError("write failed after " + std::to_string(n) + " records");
    ++n;
  }
  sink.flush();
  if (!sink) throw SinkError("flush failed");
  return n;
}

inline std::vector<CorpusRecord> read_records(std::istream& in) {
  std::vector<CorpusRecord> out;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(CorpusRecord::from_json(nlohmann::json::parse(line)));
  return out;
}

// <dir>/corpus.jsonl and <dir>/manifest.json.
inline void write_corpus(const std::filesystem::path& dir, const Corpus& c) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "corpus.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw SinkError("cannot open " + (dir / "corpus.jsonl").string());
  emit_records(c, out);
  out.close();
  write_file(dir / "manifest.json", c.manifest.dump(2) + "\n");
}

inline Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus c;
  c.manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  std::string body = read_file(dir / "corpus.jsonl");
  if (sha256_hex(body) != c.manifest.at("corpus_sha256")) throw std::runtime_error("corpus digest mismatch");
  std::istringstream in(body);
  c.records = read_records(in);
  return c;
}

// Re-validates every record's <FINAL> plan against its own problem text.
inline std::vector<std::string> invalid_records(const Corpus& c) {
  std::map<std::string, std::shared_ptr<const Domain>> doms;
  std::vector<std::string> bad;
  for (const auto& r : c.records) {
    auto& d = doms[r.family];
    if (!d) d = std::make_shared<const Domain>(parse_domain(c.manifest.at("domains").at(r.family).get<std::string>()));
    GroundUniverse u(parse_problem(r.problem, d));
    try {
      if (!validate_plan(u, extract_final_plan(r.target, true)).success) bad.push_back(r.id);
    } catch (const ExtractionFailure&) {
      bad.push_back(r.id);
    }
  }
  return bad;
}

}  // namespace planforge
