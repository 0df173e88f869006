#include "bfa/minidb/engine.hpp"

#include <gtest/gtest.h>

using namespace bfa;
using namespace bfa::minidb;

namespace {

struct Outcome {
  QueryRun run;
  std::vector<BranchId> coverage;
};

Outcome exec(const std::string& sql, const Database& db, BranchId flip = 0) {
  auto sel = FlipSelection::of(flip);
  CoverageSink sink;
  FlipContext ctx{sel, sink};
  auto run = run_query(sql, db, ctx);
  return {std::move(run), sink.record().ids};
}

Database small_db() {
  Database db;
  db.add_table(parse_table_csv("r", "a:int\n1\n2\n3\n4\n5\n"));
  db.add_table(parse_table_csv("p", "a:int\n1\n2\n3\n"));
  db.add_table(parse_table_csv("q", "b:int\n2\n3\n3\n4\n"));
  db.add_table(parse_table_csv("e", "z:int\n"));
  return db;
}

Database collision_db() {
  // Every r.a is 1 mod 8, so all of r lands in the bucket of s.b = 9.
  std::string csv = "a:int\n";
  for (int i = 0; i < 1000; ++i) csv += std::to_string(8 * i + 1) + "\n";
  Database db;
  db.add_table(parse_table_csv("r", csv));
  db.add_table(parse_table_csv("s", "b:int\n9\n"));
  return db;
}

} // namespace

TEST(Execute, ScanFiveRows) {
  auto o = exec("SELECT * FROM r", small_db());
  EXPECT_EQ(o.run.result.rows.size(), 5u);
  EXPECT_EQ(o.run.result.stats.work_units, 10);
  EXPECT_EQ(o.run.result.stats.rows_out, 5);
}

TEST(Execute, EmptyBaseTableDoesNoWork) {
  auto db = small_db();
  EXPECT_EQ(exec("SELECT * FROM e", db).run.result.stats.work_units, 0);
  auto joined = exec("SELECT * FROM e JOIN q ON e.z = q.b", db);
  EXPECT_TRUE(joined.run.result.rows.empty());
  EXPECT_EQ(joined.run.result.stats.work_units, 0);
  EXPECT_EQ(exec("SELECT * FROM e JOIN q ON e.z = q.b", db, 1).run.result.stats.work_units, 0);
}

TEST(Execute, EmptyInnerStopsAfterFirstOuterRow) {
  auto o = exec("SELECT * FROM p JOIN e ON p.a = e.z", small_db());
  EXPECT_EQ(o.run.result.stats.work_units, 1);
}

TEST(Execute, FilterCountsShortCircuitEvaluations) {
  auto db = small_db();
  EXPECT_EQ(exec("SELECT * FROM r WHERE a > 2", db).run.result.stats.work_units, 5 + 5 + 3);
  // a > 1 fails once; four rows evaluate both predicates.
  EXPECT_EQ(exec("SELECT * FROM r WHERE a > 1 AND a < 4", db).run.result.stats.work_units, 5 + 9 + 2);
}

TEST(Execute, NestedLoopAccounting) {
  auto o = exec("SELECT * FROM p JOIN q ON p.a = q.b", small_db());
  EXPECT_EQ(o.run.result.rows.size(), 3u);
  EXPECT_EQ(o.run.result.stats.work_units, 3 + 4 + 12 + 3);
}

TEST(Execute, HashJoinAccounting) {
  auto o = exec("SELECT * FROM p JOIN q ON p.a = q.b", small_db(), 1);
  EXPECT_EQ(o.run.plan.root.children[0].kind, NodeKind::HashJoin);
  EXPECT_EQ(o.run.result.rows.size(), 3u);
  // build p: 3 scans + 3 inserts; probe q: 4 scans + 3 bucket entries compared.
  EXPECT_EQ(o.run.result.stats.work_units, 3 + 3 + 4 + 3 + 3);
  EXPECT_EQ(o.run.digest.digest, exec("SELECT * FROM p JOIN q ON p.a = q.b", small_db()).run.digest.digest);
}

TEST(Execute, JoinOutputIsLeftThenRight) {
  auto db = small_db();
  for (BranchId flip : {0, 1}) {
    auto o = exec("SELECT * FROM q JOIN p ON q.b = p.a", db, flip);
    for (const auto& row : o.run.result.rows) {
      ASSERT_EQ(row.size(), 2u);
      EXPECT_EQ(row[0], row[1]);
    }
  }
}

TEST(Execute, HashRecheckFlipEmitsCollisions) {
  auto db = collision_db();
  auto base = exec("SELECT * FROM s JOIN r ON s.b = r.a", db);
  ASSERT_EQ(base.run.plan.root.children[0].kind, NodeKind::HashJoin);
  EXPECT_EQ(base.run.result.rows.size(), 1u);
  EXPECT_EQ(base.run.result.stats.work_units, 1 + 1 + 1000 + 1000 + 1);
  auto flipped = exec("SELECT * FROM s JOIN r ON s.b = r.a", db, 5);
  EXPECT_EQ(flipped.run.result.rows.size(), 1000u);
  EXPECT_EQ(flipped.run.result.stats.work_units, 1 + 1 + 1000 + 1000 + 1000);
  EXPECT_NE(flipped.run.digest.digest, base.run.digest.digest);
}

TEST(Execute, LimitEarlyStopVersusDrain) {
  auto db = small_db();
  auto early = exec("SELECT * FROM r LIMIT 2", db);
  EXPECT_EQ(early.run.result.stats.work_units, 2 + 2);
  auto drained = exec("SELECT * FROM r LIMIT 2", db, 3);
  EXPECT_EQ(drained.run.result.stats.work_units, 5 + 2);
  EXPECT_EQ(drained.run.digest.digest, early.run.digest.digest);
  EXPECT_EQ(exec("SELECT * FROM r LIMIT 0", db).run.result.stats.work_units, 0);
  EXPECT_EQ(exec("SELECT * FROM r LIMIT 9", db).run.result.rows.size(), 5u);
}

TEST(Execute, CoverageReflectsReachedFlipPoints) {
  auto db = small_db();
  auto single = exec("SELECT * FROM r WHERE a = 1", db);
  EXPECT_EQ(single.coverage, (std::vector<BranchId>{2, 3}));
  auto nl = exec("SELECT * FROM p JOIN q ON p.a = q.b WHERE p.a > 1", db);
  EXPECT_EQ(nl.coverage, (std::vector<BranchId>{2, 6, 1, 3}));
  auto hash = exec("SELECT * FROM s JOIN r ON s.b = r.a", collision_db());
  EXPECT_EQ(hash.coverage, (std::vector<BranchId>{2, 1, 4, 3, 5}));
  // No probe key lands in an occupied bucket: FP5 never runs.
  Database miss;
  std::string csv = "a:int\n";
  for (int i = 0; i < 1000; ++i) csv += std::to_string(8 * i + 2) + "\n";
  miss.add_table(parse_table_csv("r", csv));
  miss.add_table(parse_table_csv("s", "b:int\n9\n"));
  auto no_compare = exec("SELECT * FROM s JOIN r ON s.b = r.a", miss);
  EXPECT_EQ(no_compare.coverage, (std::vector<BranchId>{2, 1, 4, 3}));
}

TEST(Execute, WorkUnitsDeterministic) {
  auto db = collision_db();
  auto a = exec("SELECT r.a FROM s JOIN r ON s.b = r.a WHERE r.a < 500", db);
  auto b = exec("SELECT r.a FROM s JOIN r ON s.b = r.a WHERE r.a < 500", db);
  EXPECT_EQ(a.run.result.stats.work_units, b.run.result.stats.work_units);
  EXPECT_EQ(a.run.digest.digest, b.run.digest.digest);
}

TEST(KeyHash, IntAndText) {
  EXPECT_EQ(key_hash(Value{std::int64_t{9}}), 9u);
  EXPECT_EQ(key_hash(Value{std::int64_t{-1}}), ~std::uint64_t{0});
  EXPECT_EQ(key_hash(Value{std::string("")}), 0xcbf29ce484222325ULL);
}
