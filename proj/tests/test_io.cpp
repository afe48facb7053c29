#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>

#include "forage/datagen.hpp"
#include "forage/error.hpp"
#include "forage/io.hpp"

using namespace forage;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("forage_io_" + std::to_string(::getpid())) / name;
  fs::create_directories(dir);
  return dir;
}

const Dataset& dataset() {
  static const Dataset ds = [] {
    GenConfig cfg;
    cfg.n_tasks = 12;
    return generate_dataset(cfg);
  }();
  return ds;
}

}  // namespace

TEST(Io, DocumentAndTaskRoundTrip) {
  for (const auto& d : dataset().documents) EXPECT_EQ(document_from_json(to_json(d)), d);
  for (const auto& t : dataset().tasks) {
    const Task back = task_from_json(to_json(t));
    EXPECT_EQ(back.task_id, t.task_id);
    EXPECT_EQ(back.question, t.question);
    EXPECT_EQ(back.gold_answers, t.gold_answers);
    EXPECT_EQ(back.golden_doc_ids, t.golden_doc_ids);
    EXPECT_EQ(back.created_seed, t.created_seed);
    ASSERT_EQ(back.chains.size(), t.chains.size());
    EXPECT_EQ(back.hop_chain().claims, t.hop_chain().claims);
    EXPECT_EQ(back.hop_chain().doc_ids, t.hop_chain().doc_ids);
  }
}

TEST(Io, ExportIsByteStableAndResolves) {
  const auto a = scratch("a"), b = scratch("b");
  export_dataset(dataset().tasks, dataset().documents, a.string());
  export_dataset(dataset().tasks, dataset().documents, b.string());
  EXPECT_EQ(read_text_file((a / "corpus.jsonl").string()), read_text_file((b / "corpus.jsonl").string()));
  EXPECT_EQ(read_text_file((a / "tasks.jsonl").string()), read_text_file((b / "tasks.jsonl").string()));
  const auto docs = load_corpus_file((a / "corpus.jsonl").string());
  const auto tasks = load_tasks_file((a / "tasks.jsonl").string());
  EXPECT_EQ(docs.size(), 12u * 8u);
  EXPECT_EQ(tasks.size(), 12u);
  std::set<std::string> ids;
  for (const auto& d : docs) ids.insert(d.doc_id);
  for (const auto& t : tasks) {
    for (const auto& g : t.golden_doc_ids) EXPECT_EQ(ids.count(g), 1u);
  }
}

TEST(Io, ParamsFile) {
  PolicyParams p;
  p.theta = {1, -2, 0.5, 0.25, 1e-9, 3, -4, 0.125};
  p.w = {0.1, 0.2, 0.3, 0.4};
  const auto path = (scratch("p") / "params.json").string();
  save_params_file(p, path);
  EXPECT_EQ(load_params_file(path), p);
  auto j = to_json(p);
  j["feature_version"] = 99;
  EXPECT_THROW(params_from_json(j), Error);
  j = to_json(p);
  j["theta"].erase(0);
  EXPECT_THROW(params_from_json(j), Error);
}

TEST(Io, TrajectoryAndRewardRecords) {
  Trajectory t{"q?", {Block::think("hm"), Block::search("x"), Block::info({"d1", "d2"}, {"one", "two"}), Block::answer("a")}};
  const auto rec = trajectory_record(t);
  EXPECT_EQ(trajectory_from_record(rec), t);
  ASSERT_EQ(rec.at("mask_spans").size(), 3u);
  EXPECT_EQ(rec.at("mask_spans")[1].at("origin"), "injected");

  RewardBreakdown r = total_reward(1.0, 2.0 / 3, 4, RewardConfig{});
  r.curve.values = {1.0 / 3, 2.0 / 3, 2.0 / 3};
  const auto back = reward_from_record(reward_record("t1", r));
  EXPECT_EQ(back.total, r.total);
  EXPECT_EQ(back.curve.values, r.curve.values);
  EXPECT_EQ(back.steps_T, 4u);
}

TEST(Io, Errors) {
  EXPECT_THROW(read_text_file("/nonexistent/forage/file"), Error);
  const auto path = (scratch("bad") / "bad.jsonl").string();
  write_text_file(path, "{\"doc_id\":\"a\",\"title\":\"\",\"body\":\"x\",\"is_distractor\":false}\n{oops\n");
  try {
    load_corpus_file(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  EXPECT_EQ(action_from_json(to_json(Action::search(3, "Kabo"))), Action::search(3, "Kabo"));
}
