#include <algorithm>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "gqf/filter.hpp"
#include "gqf/oracle.hpp"

namespace gqf {
namespace {

FilterConfig small_cfg(PolicyKind policy = PolicyKind::kNoRedistribution) {
  return FilterConfig{3, 4, 0, policy};
}

uint64_t fp(uint64_t bucket, uint32_t remainder, uint32_t r = 4) {
  return join_fingerprint(bucket, remainder, r);
}

TEST(MakeFilter, EmptyInitialization) {
  GraveyardFilter f(small_cfg());
  EXPECT_EQ(f.capacity(), 8u);
  EXPECT_EQ(f.element_count(), 0u);
  EXPECT_EQ(f.tombstone_count(), 0u);
  for (uint64_t i = 0; i < 8; ++i) {
    SlotView v = f.slot_view(i);
    EXPECT_TRUE(v.empty);
    EXPECT_FALSE(v.occupied);
  }
  EXPECT_TRUE(f.decode().empty());
}

TEST(MakeFilter, PaperScaleCapacity) {
  GraveyardFilter f(FilterConfig{25, 7, 0, PolicyKind::kNoRedistribution});
  EXPECT_EQ(f.capacity(), uint64_t{1} << 25);
}

TEST(MakeFilter, RejectsBadParameters) {
  EXPECT_THROW(GraveyardFilter(FilterConfig{2, 4, 0, {}}),
               std::invalid_argument);
  EXPECT_THROW(GraveyardFilter(FilterConfig{31, 4, 0, {}}),
               std::invalid_argument);
  EXPECT_THROW(GraveyardFilter(FilterConfig{30, 35, 0, {}}),
               std::invalid_argument);
  EXPECT_THROW(GraveyardFilter(FilterConfig{10, 0, 0, {}}),
               std::invalid_argument);
}

void expect_slot(const GraveyardFilter& f, uint64_t i, bool occupied,
                 bool continuation, bool shifted, uint32_t remainder) {
  SlotView v = f.slot_view(i);
  EXPECT_FALSE(v.empty) << "slot " << i;
  EXPECT_FALSE(v.tombstone) << "slot " << i;
  EXPECT_EQ(v.occupied, occupied) << "slot " << i;
  EXPECT_EQ(v.continuation, continuation) << "slot " << i;
  EXPECT_EQ(v.shifted, shifted) << "slot " << i;
  EXPECT_EQ(v.remainder, remainder) << "slot " << i;
}

// Buckets (1,1,2) with remainders (3,9,5): the canonical three-element
// layout. Cross-checked against the brute-force reference layout below.
GraveyardFilter three_insert_table(PolicyKind policy = PolicyKind::kNoRedistribution) {
  GraveyardFilter f(small_cfg(policy));
  f.insert_fp(fp(1, 3));
  f.insert_fp(fp(1, 9));
  f.insert_fp(fp(2, 5));
  return f;
}

TEST(Insert, ThreeInsertLayout) {
  GraveyardFilter f = three_insert_table();
  expect_slot(f, 1, /*occ*/ true, /*cont*/ false, /*shift*/ false, 3);
  expect_slot(f, 2, /*occ*/ true, /*cont*/ true, /*shift*/ true, 9);
  expect_slot(f, 3, /*occ*/ false, /*cont*/ false, /*shift*/ true, 5);
  for (uint64_t i : {0, 4, 5, 6, 7}) EXPECT_TRUE(f.slot_view(i).empty);

  // The independent reference construction must agree slot for slot.
  GraveyardFilter ref = ref_layout({fp(1, 3), fp(1, 9), fp(2, 5)}, small_cfg());
  for (uint64_t i = 0; i < 8; ++i) {
    SlotView a = f.slot_view(i);
    SlotView b = ref.slot_view(i);
    EXPECT_EQ(a.empty, b.empty) << i;
    EXPECT_EQ(a.occupied, b.occupied) << i;
    EXPECT_EQ(a.continuation, b.continuation) << i;
    EXPECT_EQ(a.shifted, b.shifted) << i;
    EXPECT_EQ(a.remainder, b.remainder) << i;
  }
}

TEST(Insert, EmptyTableCanonicalSlot) {
  GraveyardFilter f(small_cfg());
  f.insert_fp(fp(5, 7));
  expect_slot(f, 5, true, false, false, 7);
  EXPECT_EQ(f.element_count(), 1u);
}

TEST(Insert, DuplicateFingerprintStoredTwice) {
  GraveyardFilter f(small_cfg());
  f.insert_fp(fp(4, 2));
  f.insert_fp(fp(4, 2));
  std::vector<uint64_t> expect{fp(4, 2), fp(4, 2)};
  EXPECT_EQ(f.decode(), expect);
}

TEST(Insert, CapacityExhausted) {
  GraveyardFilter f(small_cfg());
  for (uint32_t i = 0; i < 8; ++i) f.insert_fp(fp(0, i));
  EXPECT_EQ(f.element_count(), 8u);
  EXPECT_THROW(f.insert_fp(fp(1, 1)), capacity_exhausted);
}

TEST(FindClusterStart, UnshiftedSlotIsItsOwnStart) {
  GraveyardFilter f(small_cfg());
  f.insert_fp(fp(1, 3));
  EXPECT_EQ(f.find_cluster_start(1), 1u);
}

TEST(FindClusterStart, ThreeInsertExample) {
  GraveyardFilter f = three_insert_table();
  EXPECT_EQ(f.find_cluster_start(3), 1u);
  EXPECT_EQ(f.find_cluster_start(2), 1u);
}

TEST(FindClusterStart, Wraparound) {
  // Quotient 2^q-1 colliding twice: the cluster spans the index wrap.
  GraveyardFilter f(small_cfg());
  f.insert_fp(fp(7, 1));
  f.insert_fp(fp(7, 6));
  expect_slot(f, 7, true, false, false, 1);
  expect_slot(f, 0, false, true, true, 6);
  EXPECT_EQ(f.find_cluster_start(0), 7u);

  GraveyardFilter ref = ref_layout({fp(7, 1), fp(7, 6)}, small_cfg());
  EXPECT_EQ(ref.decode(), f.decode());
  EXPECT_EQ(ref.find_cluster_start(0), 7u);
}

TEST(FindRun, CanonicalSingleton) {
  GraveyardFilter f(small_cfg());
  f.insert_fp(fp(4, 9));
  EXPECT_EQ(f.find_run(4), 4u);
}

TEST(FindRun, ThreeInsertExample) {
  GraveyardFilter f = three_insert_table();
  EXPECT_EQ(f.find_run(1), 1u);
  EXPECT_EQ(f.find_run(2), 3u);
}

TEST(FindRun, PushedAcrossWrap) {
  GraveyardFilter f(small_cfg());
  f.insert_fp(fp(6, 1));
  f.insert_fp(fp(6, 2));
  f.insert_fp(fp(7, 5));  // run for 7 pushed to slot 0
  EXPECT_EQ(f.find_run(7), 0u);
  GraveyardFilter ref = ref_layout({fp(6, 1), fp(6, 2), fp(7, 5)}, small_cfg());
  EXPECT_EQ(ref.find_run(7), 0u);
  EXPECT_EQ(ref.decode(), f.decode());
}

TEST(Query, EmptyTable) {
  GraveyardFilter f(small_cfg());
  EXPECT_FALSE(f.query_fp(fp(3, 3)));
}

TEST(Query, ThreeInsertExample) {
  GraveyardFilter f = three_insert_table();
  EXPECT_TRUE(f.query_fp(fp(2, 5)));
  EXPECT_TRUE(f.query_fp(fp(1, 3)));
  EXPECT_TRUE(f.query_fp(fp(1, 9)));
  EXPECT_FALSE(f.query_fp(fp(2, 6)));
  EXPECT_FALSE(f.query_fp(fp(3, 5)));
}

TEST(Delete, ThreeInsertExample) {
  GraveyardFilter f = three_insert_table();
  EXPECT_TRUE(f.erase_fp(fp(1, 3)));
  expect_slot(f, 1, true, false, false, 9);
  SlotView t = f.slot_view(2);
  EXPECT_TRUE(t.tombstone);
  EXPECT_TRUE(t.occupied);
  EXPECT_TRUE(t.continuation);
  EXPECT_TRUE(t.shifted);
  expect_slot(f, 3, false, false, true, 5);
  EXPECT_EQ(f.payloads().at(2), (TombstonePayload{1, 2}));
  EXPECT_EQ(f.element_count(), 2u);
  EXPECT_EQ(f.tombstone_count(), 1u);
  EXPECT_EQ(validate_structure(f), std::nullopt);
}

TEST(Delete, OnlyElementLeavesUnattachedTombstone) {
  GraveyardFilter f(small_cfg());
  f.insert_fp(fp(5, 7));
  EXPECT_TRUE(f.erase_fp(fp(5, 7)));
  SlotView t = f.slot_view(5);
  EXPECT_TRUE(t.tombstone);
  EXPECT_FALSE(t.occupied);
  EXPECT_FALSE(t.continuation);
  EXPECT_FALSE(t.shifted);
  EXPECT_EQ(f.payloads().at(5), (TombstonePayload{kNoBucket, kNoBucket}));
  EXPECT_EQ(f.element_count(), 0u);
  EXPECT_EQ(f.tombstone_count(), 1u);
  EXPECT_EQ(validate_structure(f), std::nullopt);
}

TEST(Delete, AbsentKeyReportsNotFoundAndLeavesTableUnchanged) {
  GraveyardFilter f = three_insert_table();
  std::vector<uint64_t> before = f.decode();
  EXPECT_FALSE(f.erase_fp(fp(1, 4)));   // bucket occupied, remainder absent
  EXPECT_FALSE(f.erase_fp(fp(6, 1)));   // bucket unoccupied
  EXPECT_EQ(f.decode(), before);
  EXPECT_EQ(f.tombstone_count(), 0u);
}

TEST(Insert, ReusesTombstoneAfterDelete) {
  GraveyardFilter f = three_insert_table();
  ASSERT_TRUE(f.erase_fp(fp(1, 3)));
  ASSERT_EQ(f.tombstone_count(), 1u);
  f.insert_fp(fp(2, 1));  // ordering check passes: consumed
  expect_slot(f, 2, true, false, false, 1);
  expect_slot(f, 3, false, true, true, 5);
  EXPECT_EQ(f.tombstone_count(), 0u);
  EXPECT_EQ(f.element_count(), 3u);
  EXPECT_EQ(validate_structure(f), std::nullopt);
}

TEST(Decode, EmptyTable) {
  GraveyardFilter f(small_cfg());
  EXPECT_TRUE(f.decode().empty());
}

TEST(Decode, ThreeInsertExample) {
  GraveyardFilter f = three_insert_table();
  std::vector<uint64_t> expect{fp(1, 3), fp(1, 9), fp(2, 5)};
  std::sort(expect.begin(), expect.end());
  EXPECT_EQ(f.decode(), expect);
}

TEST(Loads, Arithmetic) {
  GraveyardFilter f(small_cfg());
  EXPECT_DOUBLE_EQ(f.element_load(), 0.0);
  EXPECT_DOUBLE_EQ(f.physical_load(), 0.0);

  // 4 elements + 2 tombstones at q=3: loads (0.5, 0.75).
  for (uint32_t i = 0; i < 6; ++i) f.insert_fp(fp(i, i + 1));
  ASSERT_TRUE(f.erase_fp(fp(0, 1)));
  ASSERT_TRUE(f.erase_fp(fp(1, 2)));
  EXPECT_EQ(f.element_count(), 4u);
  EXPECT_EQ(f.tombstone_count(), 2u);
  EXPECT_DOUBLE_EQ(f.element_load(), 0.5);
  EXPECT_DOUBLE_EQ(f.physical_load(), 0.75);
}

TEST(Loads, FullTablePhysicalLoadOne) {
  GraveyardFilter f(small_cfg());
  for (uint32_t i = 0; i < 8; ++i) f.insert_fp(fp(i, 0));
  EXPECT_DOUBLE_EQ(f.physical_load(), 1.0);
}

// Randomized churn at every policy: no false negatives, decode equivalence,
// structural invariants after each operation.
TEST(FuzzSmall, AllPoliciesStayConsistent) {
  for (PolicyKind policy : kAllPolicies) {
    FilterConfig config{6, 6, 11, policy};
    GraveyardFilter f(config);
    ExactOracle oracle(config.q, config.r, config.seed);
    std::mt19937_64 rng(99);
    for (int op = 0; op < 3000; ++op) {
      double x = std::uniform_real_distribution<>(0, 1)(rng);
      if ((x < 0.5 && oracle.size() < 48) || oracle.size() == 0) {
        uint64_t key = rng();
        f.insert(key);
        oracle.insert(key);
      } else if (x < 0.8) {
        uint64_t key = oracle.live_keys()[rng() % oracle.size()];
        EXPECT_TRUE(f.erase(key)) << to_string(policy) << " op " << op;
        oracle.erase(key);
      } else {
        uint64_t key =
            (rng() % 2 == 0 && oracle.size()) ? oracle.live_keys()[0] : rng();
        bool got = f.query(key);
        if (oracle.contains_fp(oracle.fp_of(key)))
          EXPECT_TRUE(got) << to_string(policy) << " op " << op;
      }
      ASSERT_EQ(f.decode(), oracle.fingerprints())
          << to_string(policy) << " op " << op;
      auto problem = validate_structure(f);
      ASSERT_EQ(problem, std::nullopt)
          << to_string(policy) << " op " << op << ": " << *problem;
    }
  }
}

}  // namespace
}  // namespace gqf
