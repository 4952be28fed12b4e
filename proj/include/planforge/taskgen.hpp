#pragma once

// Problem generation for the six task families. Goals are full states reached
// by a random action walk, so every instance carries its walk as a witness
// plan. Solution lengths are recomputed by the planner and instances are
// rejected until each length bucket meets its quota.

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "planforge/digest.hpp"
#include "planforge/domains.hpp"
#include "planforge/llm.hpp"
#include "planforge/parallel.hpp"
#include "planforge/planner.hpp"
#include "planforge/rng.hpp"
#include "planforge/validate.hpp"

namespace planforge {

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inclusive range of solution lengths with a sampling weight.
struct LengthBucket {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double weight = 0;

  bool contains(std::size_t len) const { return len >= lo && len <= hi; }
  std::string label() const { return std::to_string(lo) + "-" + std::to_string(hi); }
  bool operator==(const LengthBucket&) const = default;
};

inline void check_buckets(const std::vector<LengthBucket>& bs) {
  if (bs.empty()) throw std::invalid_argument("no length buckets");
  double sum = 0;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    if (bs[i].lo > bs[i].hi) throw std::invalid_argument("bucket " + bs[i].label() + " is empty");
    if (bs[i].weight < 0) throw std::invalid_argument("negative bucket weight");
    if (i > 0 && bs[i].lo <= bs[i - 1].hi) throw std::invalid_argument("buckets overlap or are unsorted");
    sum += bs[i].weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("bucket weights must sum to 1");
}

// 0-9, 10-19, 20-29, 30-60 with the given relative weights.
inline std::vector<LengthBucket> decade_buckets(std::array<double, 4> w = {1, 1, 1, 1}) {
  double s = w[0] + w[1] + w[2] + w[3];
  return {{0, 9, w[0] / s}, {10, 19, w[1] / s}, {20, 29, w[2] / s}, {30, 60, w[3] / s}};
}

// Discretized binomial(4, 1/2) over 0-20: a bell shape centred on 8-11.
inline std::vector<LengthBucket> classic_buckets() {
  return {{0, 3, 1.0 / 16}, {4, 7, 4.0 / 16}, {8, 11, 6.0 / 16}, {12, 15, 4.0 / 16}, {16, 20, 1.0 / 16}};
}

inline std::optional<std::size_t> bucket_of(const std::vector<LengthBucket>& bs, std::size_t len) {
  for (std::size_t i = 0; i < bs.size(); ++i)
    if (bs[i].contains(len)) return i;
  return std::nullopt;
}

// Largest-remainder apportionment of `total` by `weights`; ties go to the
// lower index.
inline std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  double sum = 0;
  for (double w : weights) sum += w;
  std::vector<std::size_t> out(weights.size(), 0);
  if (total == 0 || sum <= 0) return out;
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t given = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    double exact = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    given += out[i];
    rema.emplace_back(-(exact - static_cast<double>(out[i])), i);
  }
  std::sort(rema.begin(), rema.end());
  for (std::size_t k = 0; given < total; ++k, ++given) ++out[rema[k % rema.size()].second];
  return out;
}

struct TaskFamily {
  std::string name;
  std::shared_ptr<const Domain> domain;
  std::vector<std::string> objects;    // vocabulary for the movable things
  std::vector<std::string> furniture;  // vocabulary for the places
  std::vector<LengthBucket> buckets;
  std::vector<std::string> subfamilies;
  bool blocks = false;
  std::string noun = "object";  // how paraphrases refer to the movable things
  std::string place = "place";
};

inline const std::vector<std::string>& family_names() {
  static const std::vector<std::string> names{"bw_classic",         "bw_hard",         "bw_align",
                                              "prepare_experiment", "reorganize_room", "machine_parts_assembly"};
  return names;
}

inline const TaskFamily& task_family(std::string_view name) {
  static const std::map<std::string, TaskFamily, std::less<>> fams = [] {
    auto bw = std::make_shared<const Domain>(parse_domain(domains::kBlocksWorld));
    auto align = std::make_shared<const Domain>(parse_domain(domains::kBlocksWorldAlign));
    std::map<std::string, TaskFamily, std::less<>> m;
    std::vector<std::string> bw_sub{"stack", "unstack", "reorder"};
    m["bw_classic"] = {"bw_classic", bw, {}, {}, classic_buckets(), bw_sub, true, "block", "table"};
    m["bw_hard"] = {"bw_hard", bw, {}, {}, decade_buckets(), bw_sub, true, "block", "table"};
    m["bw_align"] = {"bw_align", align, {}, {}, decade_buckets(), {"align"}, true, "block", "table"};
    m["reorganize_room"] = {"reorganize_room",
                            std::make_shared<const Domain>(parse_domain(domains::kReorganizeRoom)),
                            domains::housekeeping_objects(),
                            domains::housekeeping_furniture(),
                            decade_buckets(),
                            {"default"},
                            false,
                            "household item",
                            "furniture"};
    m["machine_parts_assembly"] = {"machine_parts_assembly",
                                   std::make_shared<const Domain>(parse_domain(domains::kMachinePartsAssembly)),
                                   domains::factory_objects(),
                                   domains::factory_furniture(),
                                   decade_buckets(),
                                   {"default"},
                                   false,
                                   "part",
                                   "station"};
    m["prepare_experiment"] = {"prepare_experiment",
                               std::make_shared<const Domain>(parse_domain(domains::kPrepareExperiment)),
                               domains::lab_objects(),
                               domains::lab_furniture(),
                               decade_buckets(),
                               {"default"},
                               false,
                               "piece of equipment",
                               "bench"};
    for (auto& [k, f] : m) check_buckets(f.buckets);
    return m;
  }();
  auto it = fams.find(name);
  if (it == fams.end()) throw std::invalid_argument("unknown task family '" + std::string(name) + "'");
  return it->second;
}

struct GenSpec {
  std::string family;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::size_t min_objects = 3;
  std::size_t max_objects = 30;
  std::optional<std::vector<LengthBucket>> buckets;  // overrides the family default
  std::string subfamily = "mixed";                   // BW: stack | unstack | reorder | mixed
  std::size_t first_index = 0;                       // ids continue from here
  std::size_t bfs_budget = 20000;                    // expansions spent proving optimal lengths
  std::size_t bfs_max_length = 14;                   // only attempt BFS at or below this length
  std::size_t ff_budget = 3000;                      // expansions for the heuristic reference plan
  std::size_t attempts = 400;                        // rejection budget per instance
  unsigned jobs = 1;

  void check() const {
    if (count == 0) throw std::invalid_argument("GenSpec.count must be > 0");
    if (min_objects == 0 || min_objects > max_objects) throw std::invalid_argument("bad object range");
    if (buckets) check_buckets(*buckets);
  }
};

struct GeneratedTask {
  std::string id;
  std::string family;
  std::string subfamily;
  Problem problem;
  Plan witness;    // the generating walk
  Plan reference;  // shortest plan found by the planner (or the witness if shorter)
  std::size_t bucket = 0;
  LengthBucket bucket_range;
  std::size_t length = 0;  // reference.length()
  bool length_optimal = false;
  std::uint64_t seed = 0;
  std::size_t attempts = 0;

  nlohmann::json meta() const {
    return {{"id", id},
            {"family", family},
            {"subfamily", subfamily},
            {"bucket", bucket},
            {"bucket_range", bucket_range.label()},
            {"length", length},
            {"length_optimal", length_optimal},
            {"witness_length", witness.length()},
            {"objects", problem.objects.size()},
            {"seed", seed},
            {"attempts", attempts}};
  }
};

// ---------------------------------------------------------------------------
// Scenario construction
// ---------------------------------------------------------------------------

namespace gen {

inline GroundAtom A(std::string p, std::vector<std::string> args = {}) { return {std::move(p), std::move(args)}; }

inline std::vector<std::string> block_names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back("b" + std::to_string(i));
  return out;
}

// shape: "table" (all on the table), "tower" (one tower), "random" (random
// towers). `can_hold(x, y)` says whether x may rest on y.
template <class CanHold>
State blocks_state(std::vector<std::string> blocks, const std::string& shape, Rng& rng, CanHold can_hold) {
  rng.shuffle(blocks);
  State s{A("handempty")};
  std::vector<std::string> tops;
  for (const auto& b : blocks) {
    std::vector<std::size_t> ok;
    for (std::size_t k = 0; k < tops.size(); ++k)
      if (can_hold(b, tops[k])) ok.push_back(k);
    bool on_table = ok.empty() || shape == "table" || (shape == "random" && rng.chance(0.35));
    if (shape == "tower" && !ok.empty()) on_table = false;
    if (on_table) {
      s.insert(A("ontable", {b}));
      tops.push_back(b);
    } else {
      std::size_t k = shape == "tower" ? ok.back() : ok[rng.below(ok.size())];
      s.insert(A("on", {b, tops[k]}));
      tops[k] = b;
    }
  }
  for (const auto& t : tops) s.insert(A("clear", {t}));
  return s;
}

inline std::vector<std::string> pick_names(const std::vector<std::string>& vocab, std::size_t n, Rng& rng) {
  std::vector<std::string> v = vocab;
  rng.shuffle(v);
  v.resize(std::min(n, v.size()));
  return v;
}

struct Scenario {
  std::vector<TypedName> objects;
  State start;
  bool backward = false;  // start is the goal; the walk produces the initial state
};

inline Scenario scenario(const TaskFamily& f, const std::string& sub, std::size_t n, Rng& rng) {
  Scenario sc;
  if (f.name == "bw_align") {
    auto names = block_names(n);
    std::set<std::string> keyed;
    for (const auto& b : names)
      if (rng.chance(0.35)) keyed.insert(b);
    sc.start = blocks_state(names, "random", rng, [&](const std::string&, const std::string& y) {
      return keyed.count(y) == 0;  // nothing starts oriented
    });
    for (const auto& b : names) {
      sc.objects.push_back({b, std::string(kRootType)});
      sc.start.insert(A("unoriented", {b}));
      sc.start.insert(A(keyed.count(b) ? "keyed" : "plain", {b}));
    }
    std::sort(sc.objects.begin(), sc.objects.end());
    return sc;
  }
  if (f.blocks) {
    auto names = block_names(n);
    for (const auto& b : names) sc.objects.push_back({b, std::string(kRootType)});
    std::string shape = sub == "stack" ? "tower" : sub == "unstack" ? "table" : "random";
    sc.start = blocks_state(names, shape, rng, [](const std::string&, const std::string&) { return true; });
    sc.backward = true;
    std::sort(sc.objects.begin(), sc.objects.end());
    return sc;
  }
  const std::size_t nf = std::clamp<std::size_t>(2 + n / 4, 2, f.furniture.size());
  auto places = pick_names(f.furniture, nf, rng);
  auto things = pick_names(f.objects, n, rng);
  auto where = [&] { return places[rng.below(places.size())]; };
  sc.start.insert(A("robot-at", {where()}));
  sc.start.insert(A("handempty"));
  if (f.name == "reorganize_room") {
    for (const auto& p : places) sc.objects.push_back({p, "furniture"});
    std::vector<std::string> boxes;
    for (const auto& t : things)
      if (domains::is_container_name(t)) boxes.push_back(t);
    for (const auto& t : things) {
      bool box = domains::is_container_name(t);
      sc.objects.push_back({t, box ? "box" : "item"});
      if (!box && !boxes.empty() && rng.chance(0.2))
        sc.start.insert(A("in", {t, boxes[rng.below(boxes.size())]}));
      else
        sc.start.insert(A("on", {t, where()}));
    }
  } else if (f.name == "machine_parts_assembly") {
    for (const auto& p : places) sc.objects.push_back({p, "station"});
    std::map<std::string, std::vector<std::string>> tops;  // station -> clear parts
    for (const auto& t : things) {
      sc.objects.push_back({t, "part"});
      std::string s = where();
      sc.start.insert(A("located", {t, s}));
      auto& ts = tops[s];
      if (!ts.empty() && rng.chance(0.4)) {
        std::size_t k = rng.below(ts.size());
        sc.start.insert(A("mounted", {t, ts[k]}));
        ts[k] = t;
      } else {
        sc.start.insert(A("loose", {t}));
        ts.push_back(t);
      }
    }
    for (const auto& [s, ts] : tops)
      for (const auto& t : ts) sc.start.insert(A("clear", {t}));
  } else if (f.name == "prepare_experiment") {
    for (const auto& p : places) sc.objects.push_back({p, "bench"});
    for (const auto& t : things) {
      sc.objects.push_back({t, "equipment"});
      sc.start.insert(A(rng.chance(0.3) ? "installed" : "on", {t, where()}));
    }
  } else {
    throw std::invalid_argument("no scenario builder for family " + f.name);
  }
  std::sort(sc.objects.begin(), sc.objects.end());
  return sc;
}

// Self-avoiding random walk of `k` steps (falling back to revisits when
// boxed in), then extended until `handempty` holds if the domain has it.
inline std::vector<ActionId> random_walk(const GroundUniverse& u, BitState& x, std::size_t k, Rng& rng) {
  std::vector<ActionId> walk;
  std::unordered_set<BitState, BitStateHash> seen{x};
  auto handempty = u.atom_index(A("handempty"));
  auto step = [&](bool want_handempty) {
    std::vector<ActionId> fresh, moving, emptying;
    for (ActionId a : u.applicable(x)) {
      BitState y = u.successor(x, u.actions()[a]);
      if (y == x) continue;
      moving.push_back(a);
      if (!seen.count(y)) fresh.push_back(a);
      if (handempty && y.test(*handempty)) emptying.push_back(a);
    }
    const std::vector<ActionId>* pool = &moving;
    if (want_handempty && !emptying.empty())
      pool = &emptying;
    else if (!fresh.empty())
      pool = &fresh;
    if (pool->empty()) return false;
    ActionId a = rng.pick(*pool);
    x = u.successor(x, u.actions()[a]);
    seen.insert(x);
    walk.push_back(a);
    return true;
  };
  for (std::size_t i = 0; i < k; ++i)
    if (!step(false)) break;
  for (int guard = 0; handempty && !x.test(*handempty) && guard < 8; ++guard)
    if (!step(true)) break;
  return walk;
}

inline Plan plan_of(const GroundUniverse& u, const std::vector<ActionId>& ids, Provenance p) {
  Plan out;
  out.provenance = p;
  for (ActionId a : ids) out.actions.push_back(ActionCall::of(u.actions()[a]));
  return out;
}

}  // namespace gen

// Builds one instance with quota bucket `target`. Deterministic in `seed`.
inline GeneratedTask generate_one(const TaskFamily& fam, const GenSpec& spec, const std::vector<LengthBucket>& buckets,
                                  std::size_t target, std::size_t index, std::uint64_t seed) {
  Rng rng(seed);
  const LengthBucket& tb = buckets[target];
  std::string sub = spec.subfamily;
  if (sub == "mixed") sub = fam.subfamilies[index % fam.subfamilies.size()];
  if (std::find(fam.subfamilies.begin(), fam.subfamilies.end(), sub) == fam.subfamilies.end())
    throw std::invalid_argument("family " + fam.name + " has no subfamily '" + sub + "'");

  const std::size_t goal_len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(tb.lo),
                                                                     static_cast<std::int64_t>(tb.hi)));
  // Blocks need about two steps per moved block; the room-style domains about
  // four per moved object.
  const std::size_t per_object = fam.blocks ? 2 : 3;
  std::size_t n = std::clamp<std::size_t>(goal_len / per_object + 2, spec.min_objects,
                                          std::min(spec.max_objects, fam.blocks ? spec.max_objects
                                                                                : fam.objects.size()));
  std::size_t k = goal_len + goal_len / 2;

  std::string id = fam.name + "-" + [&] {
    std::string s = std::to_string(spec.first_index + index);
    return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
  }();

  for (std::size_t attempt = 1; attempt <= spec.attempts; ++attempt) {
    gen::Scenario sc = gen::scenario(fam, sub, n, rng);
    Problem q;
    q.name = id;
    q.domain = fam.domain;
    q.objects = sc.objects;
    q.init = sc.start;
    GroundUniverse u(q);
    BitState start = u.encode(sc.start);
    BitState end = start;
    std::vector<ActionId> walk = gen::random_walk(u, end, k, rng);

    std::vector<ActionId> witness;
    if (sc.backward) {
      // The walk ran from the goal; replay it in reverse through inverse actions.
      std::vector<BitState> states{start};
      for (ActionId a : walk) states.push_back(u.successor(states.back(), u.actions()[a]));
      bool ok = true;
      for (std::size_t j = walk.size(); j-- > 0 && ok;) {
        ok = false;
        for (ActionId b : u.applicable(states[j + 1]))
          if (u.successor(states[j + 1], u.actions()[b]) == states[j]) {
            witness.push_back(b);
            ok = true;
            break;
          }
      }
      if (!ok) continue;
      q.init = u.decode(end);
      q.goal = sc.start;
    } else {
      witness = walk;
      q.goal = u.decode(end);
    }
    if (fam.name == "bw_align" &&
        std::none_of(q.goal.begin(), q.goal.end(), [](const GroundAtom& a) { return a.predicate == "oriented"; })) {
      k += 2;
      continue;
    }
    check_problem(q);

    GroundUniverse uq(q);
    Plan wplan = gen::plan_of(uq, witness, Provenance::heuristic);
    SearchConfig ff;
    ff.mode = SearchMode::heuristic_ff;
    ff.max_expansions = spec.ff_budget;
    SolveResult fr = solve(uq, ff);
    Plan ref = wplan;
    if (fr.plan && fr.plan->length() < ref.length()) ref = *fr.plan;
    bool optimal = ref.length() == 0;
    if (!optimal && ref.length() <= spec.bfs_max_length) {
      SearchConfig bfs;
      bfs.mode = SearchMode::bfs_optimal;
      bfs.max_expansions = spec.bfs_budget;
      SolveResult br = solve(uq, bfs);
      if (br.plan) {
        ref = *br.plan;
        optimal = true;
      }
    }
    const std::size_t len = ref.length();
    if (!optimal) ref.provenance = Provenance::heuristic;

    if (tb.contains(len)) {
      GeneratedTask t;
      t.id = id;
      t.family = fam.name;
      t.subfamily = sub;
      t.problem = std::move(q);
      t.witness = std::move(wplan);
      t.reference = std::move(ref);
      t.bucket = target;
      t.bucket_range = tb;
      t.length = len;
      t.length_optimal = optimal;
      t.seed = seed;
      t.attempts = attempt;
      return t;
    }
    // Steer the next attempt toward the bucket.
    if (len < tb.lo) {
      k += (tb.lo - len) + 1;
      if (k > 3 * n && n < spec.max_objects) ++n;
    } else {
      std::size_t over = len - tb.hi;
      k = k > over + 1 ? k - over - 1 : 0;
      if (n > spec.min_objects && k < n) --n;
    }
  }
  throw GenerationExhausted("could not generate " + id + " with length in " + tb.label() + " after " +
                            std::to_string(spec.attempts) + " attempts");
}

// Bucket quotas by largest remainder, assigned to instance indices in a
// seeded shuffled order.
inline std::vector<std::size_t> bucket_schedule(const std::vector<LengthBucket>& bs, std::size_t count,
                                                std::uint64_t seed, std::string_view family) {
  std::vector<double> w;
  for (const auto& b : bs) w.push_back(b.weight);
  auto quota = apportion(count, w);
  std::vector<std::size_t> order;
  for (std::size_t b = 0; b < quota.size(); ++b) order.insert(order.end(), quota[b], b);
  Rng rng(derive_seed(seed, "taskgen/schedule/" + std::string(family)));
  rng.shuffle(order);
  return order;
}

inline std::vector<GeneratedTask> generate(const GenSpec& spec) {
  spec.check();
  const TaskFamily& fam = task_family(spec.family);
  const auto buckets = spec.buckets ? *spec.buckets : fam.buckets;
  auto order = bucket_schedule(buckets, spec.count, spec.seed, fam.name);
  std::vector<GeneratedTask> out(spec.count);
  parallel_for(spec.count, spec.jobs, [&](std::size_t i) {
    std::uint64_t s = derive_seed(spec.seed, "taskgen/" + fam.name, spec.first_index + i);
    out[i] = generate_one(fam, spec, buckets, order[i], i, s);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("cannot write " + p.string());
}

// Digest of a problem's content (objects, init, goal, domain), ignoring its name.
inline std::string problem_digest(const Problem& q) {
  Problem anon = q;
  anon.name = "p";
  return sha256_hex(render_domain(*q.domain) + render_problem(anon));
}

// Writes <dir>/<family>/{domain.pddl, <id>.problem.pddl, <id>.witness.plan,
// <id>.meta} and <dir>/manifest.json. Returns the manifest.
inline nlohmann::json write_dataset(const std::filesystem::path& dir, const std::vector<GeneratedTask>& tasks,
                                    const nlohmann::json& extra = nlohmann::json::object()) {
  nlohmann::json manifest = extra;
  manifest["schema_version"] = 1;
  manifest["instances"] = nlohmann::json::array();
  std::set<std::string> domains_written;
  for (const auto& t : tasks) {
    auto fdir = dir / t.family;
    if (domains_written.insert(t.family).second) write_file(fdir / "domain.pddl", render_domain(*t.problem.domain));
    std::string prob = render_problem(t.problem);
    std::string wit = render_plan(t.witness);
    std::string ref = render_plan(t.reference);
    std::string meta = t.meta().dump(2) + "\n";
    write_file(fdir / (t.id + ".problem.pddl"), prob);
    write_file(fdir / (t.id + ".witness.plan"), wit);
    write_file(fdir / (t.id + ".reference.plan"), ref);
    write_file(fdir / (t.id + ".meta"), meta);
    manifest["instances"].push_back({{"id", t.id},
                                     {"family", t.family},
                                     {"bucket", t.bucket},
                                     {"length", t.length},
                                     {"problem", t.family + "/" + t.id + ".problem.pddl"},
                                     {"problem_sha256", sha256_hex(prob)},
                                     {"witness_sha256", sha256_hex(wit)},
                                     {"reference_sha256", sha256_hex(ref)},
                                     {"meta_sha256", sha256_hex(meta)},
                                     {"problem_digest", problem_digest(t.problem)}});
  }
  manifest["count"] = tasks.size();
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

inline std::vector<GeneratedTask> load_dataset(const std::filesystem::path& dir) {
  auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  std::map<std::string, std::shared_ptr<const Domain>> doms;
  std::vector<GeneratedTask> out;
  for (const auto& e : manifest.at("instances")) {
    GeneratedTask t;
    t.id = e.at("id");
    t.family = e.at("family");
    auto& d = doms[t.family];
    if (!d) d = std::make_shared<const Domain>(parse_domain(read_file(dir / t.family / "domain.pddl")));
    std::string prob = read_file(dir / e.at("problem").get<std::string>());
    if (sha256_hex(prob) != e.at("problem_sha256")) throw std::runtime_error("digest mismatch for " + t.id);
    t.problem = parse_problem(prob, d);
    t.witness = parse_plan(read_file(dir / t.family / (t.id + ".witness.plan")));
    auto refp = dir / t.family / (t.id + ".reference.plan");
    t.reference = std::filesystem::exists(refp) ? parse_plan(read_file(refp)) : t.witness;
    auto meta = nlohmann::json::parse(read_file(dir / t.family / (t.id + ".meta")));
    t.subfamily = meta.value("subfamily", "");
    t.bucket = meta.value("bucket", 0);
    if (auto label = meta.value("bucket_range", std::string()); !label.empty()) {
      auto dash = label.find('-');
      t.bucket_range.lo = std::stoul(label.substr(0, dash));
      t.bucket_range.hi = std::stoul(label.substr(dash + 1));
    }
    t.length = meta.value("length", t.reference.length());
    t.length_optimal = meta.value("length_optimal", false);
    t.seed = meta.value("seed", std::uint64_t{0});
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Problem statements
// ---------------------------------------------------------------------------

namespace gen {

inline std::string join_atoms(const State& s, bool oxford) {
  std::vector<std::string> parts;
  for (const auto& a : s) parts.push_back(a.str());
  if (parts.empty()) return "nothing";
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += (i + 1 == parts.size() && oxford) ? " and " : ", ";
    out += parts[i];
  }
  return out;
}

}  // namespace gen

inline std::size_t paraphrase_template_count() { return 8; }

// Seeded template rewording; every init and goal atom appears verbatim.
inline std::string template_statement(const Problem& q, const TaskFamily& fam, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> things, places;
  for (const auto& o : q.objects) {
    if (fam.blocks || o.type == "item" || o.type == "box" || o.type == "part" || o.type == "equipment")
      things.push_back(o.name);
    else
      places.push_back(o.name);
  }
  auto list = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s.empty() ? std::string("none") : s;
  };
  const std::string T = list(things);
  const std::string P = list(places);
  const std::string N = fam.noun;
  const std::string L = fam.place;
  std::vector<std::string> intros;
  if (fam.blocks) {
    intros = {"A robot arm works with the blocks " + T + " on a table.",
              "There are " + std::to_string(things.size()) + " blocks on the table: " + T + ".",
              "You control a gripper that can move the blocks " + T + ".",
              "The workspace holds the blocks " + T + ", which a single arm can rearrange.",
              "Consider a tabletop with blocks " + T + " and one robot hand.",
              "Blocks " + T + " are arranged on a table in front of a robot.",
              "The scene contains the blocks " + T + "; a manipulator can pick them up one at a time.",
              "In this blocks puzzle the pieces are " + T + "."};
    if (fam.name == "bw_align")
      for (auto& s : intros) s += " Some blocks are keyed and only accept an oriented block on top.";
  } else {
    intros = {"A robot must rearrange each " + N + " among the " + L + "s " + P + ". The objects are " + T + ".",
              "The environment has the " + L + "s " + P + " and the " + N + "s " + T + ".",
              "You direct a mobile robot that can carry one " + N + " at a time. Objects: " + T + ". Locations: " +
                  P + ".",
              "Here the " + L + "s are " + P + ", and the robot handles " + T + ".",
              "Help the robot organise " + T + " across " + P + ".",
              "A single-arm robot moves between " + P + " and handles the objects " + T + ".",
              "The task area consists of " + P + "; the items involved are " + T + ".",
              "This scene involves the " + N + "s " + T + " distributed over " + P + "."};
  }
  const bool oxford = rng.chance(0.5);
  const std::string init = gen::join_atoms(q.init, oxford);
  const std::string goal = gen::join_atoms(q.goal, oxford);
  const std::vector<std::string> inits = {"Initially, the following facts hold: " + init + ".",
                                          "At the start: " + init + ".",
                                          "The current state is " + init + ".",
                                          "Right now " + init + " are true."};
  const std::vector<std::string> goals = {"The goal is to reach a state where " + goal + " hold.",
                                          "Finish when " + goal + " are all true.",
                                          "Target state: " + goal + ".",
                                          "We want to end with " + goal + "."};
  std::string out = intros[rng.below(intros.size())];
  out += " " + inits[rng.below(inits.size())];
  out += " " + goals[rng.below(goals.size())];
  return out;
}

inline bool statement_preserves_atoms(const Problem& q, std::string_view text) {
  for (const auto* s : {&q.init, &q.goal})
    for (const auto& a : *s)
      if (text.find(a.str()) == std::string_view::npos) return false;
  return true;
}

inline constexpr std::string_view kParaphraseSystem =
    "Rephrase the planning problem statement you are given. Keep every parenthesized fact exactly as written "
    "and do not drop any of them. Reply with the rephrased statement only.";

// Template statement, optionally reworded by an LLM. The LLM text is used only
// when every init and goal atom survives verbatim; otherwise the template is.
inline std::string paraphrase_problem(const Problem& q, const TaskFamily& fam, std::uint64_t seed,
                                      LLMClient* llm = nullptr, const LLMConfig& cfg = {}) {
  std::string base = template_statement(q, fam, seed);
  if (!llm) return base;
  try {
    std::string out = llm->complete(cfg, std::string(kParaphraseSystem), base);
    if (statement_preserves_atoms(q, out)) return out;
  } catch (const LLMError&) {
  }
  return base;
}

}  // namespace planforge
