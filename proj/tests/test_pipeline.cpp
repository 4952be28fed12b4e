#include <gtest/gtest.h>

#include "planforge/pipeline.hpp"
#include "test_util.hpp"

using namespace planforge;
using nlohmann::json;

namespace {

json classic_config(std::size_t count = 20) {
  return {{"seed", 7},
          {"suite_size", 4},
          {"families",
           {{{"family", "bw_classic"}, {"count", count}, {"max_objects", 6}, {"buckets", {{1, 6, 0.5}, {7, 12, 0.5}}}}}}};
}

fs::path fresh(const std::string& name) {
  auto d = fs::temp_directory_path() / ("planforge_pipeline_" + name);
  fs::remove_all(d);
  return d;
}

std::string corpus_bytes(const fs::path& run) { return read_file(run / "04-corpus" / "corpus.jsonl"); }

}  // namespace

TEST(Pipeline, EndToEndClassic) {
  auto dir = fresh("e2e");
  auto rep = full_pipeline(PipelineConfig::from_json(classic_config()), dir);
  ASSERT_EQ(rep.stages.size(), 5u);
  for (const auto& s : rep.stages) EXPECT_EQ(s.status, "ran") << s.name;
  auto corpus = load_corpus(dir / "04-corpus");
  EXPECT_EQ(corpus.records.size(), 20u);
  EXPECT_TRUE(invalid_records(corpus).empty());
  EXPECT_EQ(rep.corpus_totals["records"], 20);
  for (const auto& r : corpus.records) {
    auto d = std::make_shared<const Domain>(parse_domain(corpus.manifest["domains"]["bw_classic"].get<std::string>()));
    GroundUniverse u(parse_problem(r.problem, d));
    Plan p;
    for (const auto& a : r.plan) p.actions.push_back(*parse_action_call(a));
    auto tr = extract_trace(u, p);
    auto reason = extract_reason(r.target);
    ASSERT_TRUE(reason);
    EXPECT_TRUE(check_cot_faithfulness(*reason, tr, u).ok()) << r.id;
  }
  auto report = json::parse(read_file(dir / "report.json"));
  EXPECT_EQ(report["corpus_totals"]["records"], 20);
  EXPECT_TRUE(report["eval_report"].is_null());
}

TEST(Pipeline, MatchesStandaloneCorpus) {
  auto dir = fresh("standalone");
  auto cfg = PipelineConfig::from_json(classic_config(12));
  full_pipeline(cfg, dir);
  std::ostringstream os;
  emit_records(build_corpus(cfg.corpus_config(nullptr)), os);
  EXPECT_EQ(corpus_bytes(dir), os.str());
}

TEST(Pipeline, IdempotentRerun) {
  auto dir = fresh("idem");
  auto cfg = PipelineConfig::from_json(classic_config(8));
  auto a = full_pipeline(cfg, dir);
  auto b = full_pipeline(cfg, dir);
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    EXPECT_EQ(b.stages[i].status, "skipped") << b.stages[i].name;
    EXPECT_EQ(b.stages[i].outputs_digest, a.stages[i].outputs_digest);
  }
  auto more = classic_config(9);
  auto c = full_pipeline(PipelineConfig::from_json(more), dir);
  EXPECT_EQ(c.stages[1].status, "ran");
  EXPECT_EQ(c.corpus_totals["records"], 9);
}

TEST(Pipeline, ResumeAfterInterruptedSolve) {
  auto cfg = PipelineConfig::from_json(classic_config());
  auto whole = fresh("whole");
  full_pipeline(cfg, whole);

  auto part = fresh("part");
  PipelineOptions stop;
  stop.stop_after = "solve";
  auto first = full_pipeline(cfg, part, stop);
  EXPECT_EQ(first.stages[3].status, "not-run");
  EXPECT_FALSE(fs::exists(part / "04-corpus"));
  // Leave the solve stage half written.
  fs::remove(part / "03-solve" / "stage.json");
  fs::remove(part / "03-solve" / "bw_classic" / "bw_classic-00003.plan");

  auto resumed = full_pipeline(cfg, part);
  EXPECT_EQ(resumed.stages[0].status, "skipped");
  EXPECT_EQ(resumed.stages[1].status, "skipped");
  EXPECT_EQ(resumed.stages[2].status, "ran");
  EXPECT_EQ(corpus_bytes(part), corpus_bytes(whole));

  // Tampered outputs are detected and rebuilt.
  write_file(part / "04-corpus" / "corpus.jsonl", "garbage\n");
  auto again = full_pipeline(cfg, part);
  EXPECT_EQ(again.stages[3].status, "ran");
  EXPECT_EQ(corpus_bytes(part), corpus_bytes(whole));
}

TEST(Pipeline, ZeroFamilies) {
  auto dir = fresh("empty");
  auto rep = full_pipeline(PipelineConfig::from_json(json{{"seed", 1}}), dir);
  EXPECT_EQ(rep.corpus_totals["records"], 0);
  EXPECT_TRUE(read_file(dir / "04-corpus" / "corpus.jsonl").empty());
}

TEST(Pipeline, BrokenDomainFailsWithStageIdentity) {
  auto dir = fresh("broken");
  std::string broken(domains::kBlocksWorld);
  broken.replace(broken.find("(on ?x ?y) (clear ?x) (handempty) (not (holding ?x))"),
                 std::string("(on ?x ?y) ").size(), "");
  write_file(dir / "in" / "bw.pddl", broken);
  auto j = classic_config(4);
  j["families"][0]["domain"] = "in/bw.pddl";
  auto cfg = PipelineConfig::from_json(j, dir);
  try {
    full_pipeline(cfg, dir / "run");
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "domain");
    EXPECT_NE(std::string(e.what()).find("unsolvable"), std::string::npos);
  }

  auto llm = ScriptedClient::replies({std::string(domains::kBlocksWorld)});
  PipelineOptions opt;
  opt.llm = llm.get();
  auto rep = full_pipeline(cfg, dir / "run", opt);
  auto log = json::parse(read_file(dir / "run" / "01-domain" / "bw_classic.json"));
  EXPECT_EQ(log["repair_rounds"], 1);
  EXPECT_EQ(rep.corpus_totals["records"], 4);
  EXPECT_EQ(llm->requests().size(), 1u);
}

TEST(Pipeline, ScoresResponsesOnEvalSplit) {
  auto dir = fresh("eval");
  auto base = full_pipeline(PipelineConfig::from_json(classic_config()), dir / "a");
  auto corpus = load_corpus(dir / "a" / "04-corpus");
  std::string lines;
  std::size_t n = 0;
  for (const auto& r : corpus.records) {
    if (r.split != "eval") continue;
    ++n;
    std::string body;
    for (const auto& a : r.plan) body += a + "\n";
    lines += ModelResponse{r.id, "<FINAL>\n" + body + "</FINAL>", 12}.to_json().dump() + "\n";
  }
  ASSERT_EQ(n, 2u);
  write_file(dir / "responses.jsonl", lines);
  auto j = classic_config();
  j["responses"] = "responses.jsonl";
  j["model"] = "oracle";
  auto rep = full_pipeline(PipelineConfig::from_json(j, dir), dir / "b");
  ASSERT_TRUE(rep.eval_report);
  auto ev = json::parse(read_file(*rep.eval_report));
  EXPECT_EQ(ev["model"], "oracle");
  EXPECT_EQ(ev["overall"]["success_rate"], "1");
  EXPECT_EQ(ev["overall"]["n"], 2);
  EXPECT_TRUE(fs::exists(dir / "b" / "05-eval" / "table.txt"));
}

TEST(PipelineConfig, RejectsUnknownKeys) {
  EXPECT_THROW(PipelineConfig::from_json(json{{"sed", 1}}), std::invalid_argument);
  EXPECT_THROW(PipelineConfig::from_json(json{{"families", {{{"family", "bw_classic"}, {"cnt", 2}}}}}),
               std::invalid_argument);
  EXPECT_THROW(PipelineConfig::from_json(json{{"families", {{{"family", "nope"}}}}}), std::invalid_argument);
  EXPECT_THROW(PipelineConfig::from_json(json{{"alignment", "magic"}}), std::invalid_argument);
}

TEST(PipelineConfig, ResolvesRelativePaths) {
  auto cfg = PipelineConfig::from_json(json{{"responses", "r.jsonl"}, {"llm_replay", "/abs/log.jsonl"}}, "/base");
  EXPECT_EQ(*cfg.responses, fs::path("/base/r.jsonl"));
  EXPECT_EQ(*cfg.llm_replay, fs::path("/abs/log.jsonl"));
}
