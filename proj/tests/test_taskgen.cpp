#include <gtest/gtest.h>

#include "oracle.hpp"
#include "planforge/taskgen.hpp"
#include "test_util.hpp"

using namespace planforge;

namespace {

GenSpec spec(std::string family, std::size_t count, std::uint64_t seed) {
  GenSpec s;
  s.family = std::move(family);
  s.count = count;
  s.seed = seed;
  return s;
}

std::string fingerprint(const std::vector<GeneratedTask>& ts) {
  std::string out;
  for (const auto& t : ts) out += render_problem(t.problem) + render_plan(t.witness) + render_plan(t.reference);
  return out;
}

bool valid(const Problem& q, const Plan& p) {
  GroundUniverse u(q);
  return plan_is_valid(u, p);
}

// Atoms mentioned as "(...)" in free text.
std::set<std::string> atoms_in(const std::string& text) {
  std::set<std::string> out;
  for (std::size_t i = text.find('('); i != std::string::npos; i = text.find('(', i + 1))
    out.insert(text.substr(i, text.find(')', i) - i + 1));
  return out;
}

std::set<std::string> atom_strings(const Problem& q) {
  std::set<std::string> out;
  for (const auto* s : {&q.init, &q.goal})
    for (const auto& a : *s) out.insert(a.str());
  return out;
}

}  // namespace

TEST(Buckets, Apportion) {
  EXPECT_EQ(apportion(100, {6, 2, 1, 1}), (std::vector<std::size_t>{60, 20, 10, 10}));
  EXPECT_EQ(apportion(7, {1, 1, 1}), (std::vector<std::size_t>{3, 2, 2}));
  EXPECT_EQ(apportion(200, {1, 4, 6, 4, 1}), (std::vector<std::size_t>{13, 50, 75, 50, 12}));
  for (std::size_t n = 0; n < 60; ++n) {
    auto a = apportion(n, {0.6, 0.2, 0.1, 0.1});
    EXPECT_EQ(a[0] + a[1] + a[2] + a[3], n);
  }
}

TEST(Buckets, Checks) {
  EXPECT_NO_THROW(check_buckets(decade_buckets()));
  EXPECT_NO_THROW(check_buckets(classic_buckets()));
  EXPECT_THROW(check_buckets({{0, 10, 0.5}, {10, 20, 0.5}}), std::invalid_argument);
  EXPECT_THROW(check_buckets({{0, 9, 0.5}, {10, 20, 0.4}}), std::invalid_argument);
  EXPECT_THROW(check_buckets({}), std::invalid_argument);
  EXPECT_EQ(bucket_of(decade_buckets(), 30), 3u);
  EXPECT_EQ(bucket_of(decade_buckets(), 61), std::nullopt);
}

TEST(Families, AllKnown) {
  for (const auto& f : family_names()) {
    const auto& fam = task_family(f);
    EXPECT_EQ(fam.name, f);
    check_buckets(fam.buckets);
  }
  EXPECT_THROW(task_family("bw_easy"), std::invalid_argument);
}

TEST(Generate, HardSixTwoOneOne) {
  GenSpec s = spec("bw_hard", 100, 42);
  s.buckets = decade_buckets({6, 2, 1, 1});
  auto ts = generate(s);
  std::vector<std::size_t> counts(4, 0);
  for (const auto& t : ts) {
    ++counts[t.bucket];
    ASSERT_TRUE(s.buckets->at(t.bucket).contains(t.length)) << t.id;
    ASSERT_EQ(t.reference.length(), t.length);
    ASSERT_TRUE(valid(t.problem, t.witness)) << t.id;
    ASSERT_TRUE(valid(t.problem, t.reference)) << t.id;
  }
  EXPECT_EQ(counts, (std::vector<std::size_t>{60, 20, 10, 10}));
}

TEST(Generate, ZeroLengthBucket) {
  GenSpec s = spec("bw_classic", 1, 3);
  s.buckets = std::vector<LengthBucket>{{0, 0, 1.0}};
  auto ts = generate(s);
  ASSERT_EQ(ts.size(), 1u);
  const auto& q = ts[0].problem;
  EXPECT_TRUE(std::includes(q.init.begin(), q.init.end(), q.goal.begin(), q.goal.end()));
  EXPECT_EQ(ts[0].witness.length(), 0u);
  EXPECT_EQ(ts[0].length, 0u);
}

TEST(Generate, ReorganizeRoomTwelveObjects) {
  GenSpec s = spec("reorganize_room", 3, 9);
  s.min_objects = s.max_objects = 12;
  const auto& vocab = task_family("reorganize_room").objects;
  for (const auto& t : generate(s)) {
    std::size_t items = 0;
    for (const auto& o : t.problem.objects)
      if (o.type == "item" || o.type == "box") {
        ++items;
        EXPECT_NE(std::find(vocab.begin(), vocab.end(), o.name), vocab.end()) << o.name;
      }
    EXPECT_EQ(items, 12u);
    EXPECT_TRUE(valid(t.problem, t.witness));
    // Every object ends up somewhere in the goal description.
    for (const auto& o : t.problem.objects) {
      if (o.type == "furniture") continue;
      bool placed = false;
      for (const auto& g : t.problem.goal)
        if ((g.predicate == "on" || g.predicate == "in") && g.args[0] == o.name) placed = true;
      EXPECT_TRUE(placed) << o.name;
    }
  }
}

TEST(Generate, EveryFamilySolvableWithFullStateGoals) {
  for (const auto& f : family_names()) {
    auto ts = generate(spec(f, 8, 77));
    ASSERT_EQ(ts.size(), 8u);
    std::set<std::string> ids;
    for (const auto& t : ts) {
      EXPECT_TRUE(ids.insert(t.id).second);
      EXPECT_TRUE(valid(t.problem, t.witness)) << t.id;
      EXPECT_TRUE(valid(t.problem, t.reference)) << t.id;
      EXPECT_LE(t.reference.length(), t.witness.length());
      // The goal is the complete state reached by the witness.
      GroundUniverse u(t.problem);
      EXPECT_EQ(execute_prefix(u, t.witness).state, t.problem.goal) << t.id;
      if (t.length_optimal && t.length <= 8) {
        EXPECT_EQ(oracle::bfs_length(t.problem, 100000), static_cast<int>(t.length)) << t.id;
      }
    }
  }
}

TEST(Generate, AlignGoalsNeedRotation) {
  for (const auto& t : generate(spec("bw_align", 12, 5))) {
    bool oriented = false;
    for (const auto& g : t.problem.goal) oriented |= g.predicate == "oriented";
    ASSERT_TRUE(oriented);
    bool rotates = false;
    for (const auto& a : t.witness.actions) rotates |= a.name == "rotate";
    EXPECT_TRUE(rotates) << t.id;
    rotates = false;
    for (const auto& a : t.reference.actions) rotates |= a.name == "rotate";
    EXPECT_TRUE(rotates) << t.id;
  }
}

TEST(Generate, SubfamilyShapes) {
  GenSpec s = spec("bw_hard", 6, 11);
  s.buckets = std::vector<LengthBucket>{{2, 12, 1.0}};
  s.subfamily = "unstack";
  for (const auto& t : generate(s))
    for (const auto& g : t.problem.goal) EXPECT_NE(g.predicate, "on") << t.id;
  s.subfamily = "stack";
  for (const auto& t : generate(s)) {
    std::size_t table = 0;
    for (const auto& g : t.problem.goal) table += g.predicate == "ontable";
    EXPECT_EQ(table, 1u) << t.id;
  }
  s.subfamily = "pyramid";
  EXPECT_THROW(generate(s), std::invalid_argument);
}

TEST(Generate, DeterministicAndJobIndependent) {
  GenSpec s = spec("machine_parts_assembly", 6, 123);
  auto a = generate(s);
  auto b = generate(s);
  s.jobs = 3;
  auto c = generate(s);
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint(a), fingerprint(c));
  s.seed = 124;
  EXPECT_NE(fingerprint(a), fingerprint(generate(s)));
}

TEST(Generate, ExhaustedWhenBucketUnreachable) {
  GenSpec s = spec("bw_hard", 1, 1);
  s.min_objects = s.max_objects = 2;
  s.buckets = std::vector<LengthBucket>{{40, 60, 1.0}};
  s.attempts = 5;
  EXPECT_THROW(generate(s), GenerationExhausted);
}

TEST(Dataset, WriteLoadRoundTrip) {
  auto dir = std::filesystem::temp_directory_path() / "planforge_taskgen_rt";
  std::filesystem::remove_all(dir);
  auto ts = generate(spec("prepare_experiment", 4, 8));
  auto m = write_dataset(dir, ts);
  EXPECT_EQ(m["count"], 4);
  EXPECT_TRUE(std::filesystem::exists(dir / "prepare_experiment" / "domain.pddl"));
  EXPECT_TRUE(std::filesystem::exists(dir / "prepare_experiment" / (ts[0].id + ".meta")));
  auto back = load_dataset(dir);
  ASSERT_EQ(back.size(), ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_EQ(back[i].problem, ts[i].problem);
    EXPECT_EQ(back[i].witness.actions, ts[i].witness.actions);
    EXPECT_EQ(back[i].length, ts[i].length);
  }
  write_file(dir / "prepare_experiment" / (ts[0].id + ".problem.pddl"), "tampered");
  EXPECT_THROW(load_dataset(dir), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Paraphrase, TemplatesAreDeterministicAndPreserveAtoms) {
  auto t = generate(spec("reorganize_room", 1, 4))[0];
  const auto& fam = task_family("reorganize_room");
  EXPECT_EQ(paraphrase_problem(t.problem, fam, 1), paraphrase_problem(t.problem, fam, 1));
  std::set<std::string> texts;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::string s = paraphrase_problem(t.problem, fam, seed);
    EXPECT_TRUE(statement_preserves_atoms(t.problem, s));
    EXPECT_EQ(atoms_in(s), atom_strings(t.problem));
    texts.insert(s);
  }
  EXPECT_GE(texts.size(), 8u);
  EXPECT_NE(paraphrase_problem(t.problem, fam, 1), paraphrase_problem(t.problem, fam, 2));
}

TEST(Paraphrase, LlmOutputVerified) {
  Problem q = testutil::bw3();
  const auto& fam = task_family("bw_classic");
  std::string keep = "Blocks a, b, c. Now: (ontable a) (ontable b) (ontable c) (clear a) (clear b) (clear c) "
                     "(handempty). Want (on a b) (on b c).";
  auto good = ScriptedClient::replies({keep});
  EXPECT_EQ(paraphrase_problem(q, fam, 3, good.get()), keep);
  auto dropping = ScriptedClient::replies({"Stack the three blocks into a tower."});
  EXPECT_EQ(paraphrase_problem(q, fam, 3, dropping.get()), paraphrase_problem(q, fam, 3));
}
