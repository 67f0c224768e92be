#include <gtest/gtest.h>

#include <random>

#include "obser/errors.hpp"
#include "obser/estimators.hpp"
#include "obser/memory.hpp"
#include "obser/synthenv.hpp"
#include "test_util.hpp"

using namespace obser;
using testutil::basis;

namespace {

// One room per omega vector, all over the same prototypes.
EpisodicMemory make_rooms(const std::vector<std::vector<double>>& omegas, std::size_t dim,
                          double kappa, std::size_t n, std::uint64_t seed,
                          std::vector<Embedding>* prototypes_out = nullptr) {
  std::mt19937_64 rng(seed);
  const std::size_t classes = omegas.front().size();
  const auto prototypes = make_prototypes(dim, classes, PrototypeLayout::kAuto, rng);
  const std::vector<double> kappas(classes, kappa);
  EpisodicMemory memory;
  for (std::size_t r = 0; r < omegas.size(); ++r) {
    const std::string region = "room" + std::to_string(r);
    auto data = sample_mixture(prototypes, omegas[r], kappas, n, Allocation::kExact, rng, region + "_");
    memory.add({data.observations(), region, {}});
  }
  if (prototypes_out) *prototypes_out = prototypes;
  return memory;
}

std::vector<double> with_query_fraction(double f, std::size_t classes) {
  std::vector<double> w(classes, (1.0 - f) / double(classes - 1));
  w[0] = f;
  return w;
}

}  // namespace

TEST(Recall, SingleEntry) {
  const auto memory = make_rooms({{0.5, 0.5}}, 4, 50.0, 20, 1);
  const std::vector<Embedding> q{basis(4, 0)};
  const auto r = recall(q, memory, KernelConfig(0.1));
  EXPECT_EQ(r.index, 0u);
  EXPECT_EQ(r.region, "room0");
}

TEST(Recall, PicksRoomWhereQueryClassIsCommon) {
  const auto memory = make_rooms({with_query_fraction(0.9, 4), with_query_fraction(0.1, 4),
                                  with_query_fraction(0.1, 4), with_query_fraction(0.1, 4),
                                  with_query_fraction(0.1, 4)},
                                 8, 200.0, 200, 2);
  std::vector<Embedding> q;
  for (std::size_t i = 0; i < 5; ++i) q.push_back(memory[1].observations.embedding(i));
  // The first five observations of room1 all belong to class 0 under exact allocation.
  for (auto mode : {RecallMode::kMeanDirection, RecallMode::kPerQueryAverage}) {
    EXPECT_EQ(recall(q, memory, KernelConfig(0.1), mode).index, 0u);
  }
  // Brute-force densities agree.
  const auto mean = mean_direction(q);
  std::size_t best = 0;
  double best_d = -1;
  for (std::size_t m = 0; m < memory.size(); ++m) {
    const auto e = memory[m].observations.embeddings();
    const double d = testutil::density(mean, {e.begin(), e.end()}, 0.1);
    if (d > best_d) {
      best_d = d;
      best = m;
    }
  }
  EXPECT_EQ(best, 0u);
}

TEST(Recall, PointMassQueryScoresOne) {
  EpisodicMemory memory;
  memory.add({ObservationSet::from_embeddings({basis(3, 0)}), "a", {}});
  memory.add({ObservationSet::from_embeddings({basis(3, 1)}), "b", {}});
  const std::vector<Embedding> q{basis(3, 1)};
  const auto r = recall(q, memory, KernelConfig(0.1));
  EXPECT_EQ(r.region, "b");
  EXPECT_DOUBLE_EQ(r.score, 1.0);
}

TEST(Recall, Errors) {
  const std::vector<Embedding> q{basis(3, 0)};
  EXPECT_THROW(recall(q, EpisodicMemory(), KernelConfig(0.1)), EmptyInput);
  const auto memory = make_rooms({{0.5, 0.5}}, 4, 50.0, 20, 1);
  EXPECT_THROW(recall(std::vector<Embedding>{}, memory, KernelConfig(0.1)), EmptyInput);
  const std::vector<Embedding> opposite{basis(4, 0), basis(4, 0, -1)};
  EXPECT_THROW(recall(opposite, memory, KernelConfig(0.1)), DegenerateResultant);
}

TEST(Recall, InvariantToDuplicatingEntries) {
  const auto memory = make_rooms({with_query_fraction(0.3, 3), with_query_fraction(0.5, 3)}, 6, 30.0, 60, 3);
  std::vector<Embedding> q{memory[0].observations.embedding(0)};
  const auto base = recall(q, memory, KernelConfig(0.2));
  EpisodicMemory doubled;
  for (const auto& e : memory.entries()) {
    std::vector<Embedding> twice;
    for (int k = 0; k < 2; ++k) {
      for (const auto& x : e.observations.embeddings()) twice.push_back(x);
    }
    doubled.add({ObservationSet::from_embeddings(twice), e.region, {}});
  }
  const auto r = recall(q, doubled, KernelConfig(0.2));
  EXPECT_EQ(r.index, base.index);
  EXPECT_NEAR(r.score, base.score, 1e-12);
}

TEST(EpisodicMemory, Invariants) {
  EpisodicMemory m;
  m.add({ObservationSet::from_embeddings({basis(3, 0)}), "a", {}});
  EXPECT_THROW(m.add({ObservationSet::from_embeddings({basis(3, 1)}), "a", {}}), DomainError);
  EXPECT_THROW(m.add({ObservationSet(), "b", {}}), EmptyInput);
  EXPECT_THROW(m.add({ObservationSet::from_embeddings({basis(4, 1)}), "c", {}}), DimensionMismatch);
  EXPECT_EQ(m.find("a"), 0u);
  EXPECT_FALSE(m.find("zz"));
}

TEST(RetrieveSubenv, OwnSetFirstWithZeroKl) {
  const auto rooms = make_rooms({{0.5, 0.5}, {0.9, 0.1}, {0.2, 0.8}}, 4, 50.0, 40, 4);
  const Environment env{rooms, std::nullopt};
  const auto ranked = retrieve_subenv(rooms[1], env, KernelConfig(0.15), 3);
  EXPECT_EQ(ranked[0].region, "room1");
  EXPECT_EQ(ranked[0].kl, 0.0);
}

TEST(RetrieveSubenv, OrdersByExactDivergence) {
  std::vector<double> mem(10), low(10), high(10);
  for (std::size_t c = 0; c < 10; ++c) {
    mem[c] = (c < 5 ? 0.2 : 0.8) / 5;
    low[c] = (c < 5 ? 0.3 : 0.7) / 5;
    high[c] = (c < 5 ? 0.8 : 0.2) / 5;
  }
  const auto rooms = make_rooms({mem, high, low}, 16, 200.0, 1000, 5);
  ASSERT_LT(exact_kl(mem, low), exact_kl(mem, high));
  EpisodicMemory candidates;
  candidates.add(rooms[1]);
  candidates.add(rooms[2]);
  const Environment env{candidates, std::nullopt};
  const auto ranked = retrieve_subenv(rooms[0], env, KernelConfig(0.15), 2);
  EXPECT_EQ(ranked[0].region, "room2");
  EXPECT_NEAR(ranked[1].kl, exact_kl(mem, high), 0.05);
}

TEST(RetrieveSubenv, FullOrderingPrefixesAndReachability) {
  const auto rooms = make_rooms({{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}, {0.4, 0.4, 0.2}, {0.1, 0.1, 0.8}}, 6,
                                40.0, 60, 6);
  const Environment env{rooms, std::nullopt};
  const KernelConfig cfg(0.2);
  const auto all = retrieve_subenv(rooms[0], env, cfg, 4);
  ASSERT_EQ(all.size(), 4u);
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LE(all[i - 1].kl, all[i].kl);
  for (std::size_t j = 1; j <= 4; ++j) {
    const auto prefix = retrieve_subenv(rooms[0], env, cfg, j);
    ASSERT_EQ(prefix.size(), j);
    for (std::size_t i = 0; i < j; ++i) EXPECT_EQ(prefix[i].region, all[i].region);
  }
  EXPECT_EQ(retrieve_subenv(rooms[0], env, cfg, 10).size(), 4u);
  EXPECT_THROW(retrieve_subenv(rooms[0], env, cfg, 0), DomainError);

  Environment limited{rooms, std::map<std::string, std::vector<std::string>>{{"room0", {"room3", "room1"}}}};
  const auto reach = retrieve_subenv(rooms[0], limited, cfg, 4);
  ASSERT_EQ(reach.size(), 2u);
  for (const auto& r : reach) EXPECT_TRUE(r.region == "room1" || r.region == "room3");
  // A region without an entry in the map reaches everything.
  EXPECT_EQ(retrieve_subenv(rooms[2], limited, cfg, 4).size(), 4u);

  Environment none{rooms, std::map<std::string, std::vector<std::string>>{{"room0", {}}}};
  EXPECT_THROW(retrieve_subenv(rooms[0], none, cfg, 1), EmptyInput);
}

TEST(FindObject, DelegatesToRetrieveObject) {
  const auto rooms = make_rooms({{0.5, 0.5}, {0.3, 0.7}}, 5, 20.0, 50, 7);
  const Environment env{rooms, std::nullopt};
  const KernelConfig cfg(0.1);
  const auto q = rooms[1].observations.embedding(3);
  const auto found = find_object(q, "room1", env, cfg, 5);
  const auto direct = retrieve_object(q, rooms[1].observations, cfg, 5);
  ASSERT_EQ(found.size(), 5u);
  EXPECT_EQ(found[0].id, rooms[1].observations[3].id);
  EXPECT_DOUBLE_EQ(found[0].belief, 1.0);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(found[i].id, direct[i].id);
    EXPECT_EQ(found[i].belief, direct[i].belief);
  }
  EXPECT_THROW(find_object(q, "nowhere", env, cfg, 1), DomainError);
}

TEST(ChainedInference, AllRoomsEqualsDirectRetrieval) {
  for (std::uint64_t seed : {10u, 11u, 12u}) {
    const auto rooms = make_rooms({{0.4, 0.3, 0.3}, {0.1, 0.6, 0.3}, {0.3, 0.3, 0.4}}, 8, 30.0, 40, seed);
    const Environment env{rooms, std::nullopt};
    const KernelConfig cfg(0.1);
    ObservationSet all;
    for (const auto& e : rooms.entries()) {
      for (const auto& o : e.observations.observations()) all.add(o);
    }
    std::vector<Embedding> q{rooms[2].observations.embedding(0), rooms[2].observations.embedding(1)};
    const auto chained = chained_inference(q, rooms, env, cfg, rooms.size(), 15);
    const auto direct = retrieve_object(mean_direction(q), all, cfg, 15);
    ASSERT_EQ(chained.objects.size(), direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
      EXPECT_EQ(chained.objects[i].id, direct[i].id);
      EXPECT_EQ(chained.objects[i].belief, direct[i].belief);
    }
  }
}

TEST(ChainedInference, EmptyMemoryFailsAtRecall) {
  const auto rooms = make_rooms({{0.5, 0.5}}, 4, 20.0, 10, 1);
  const Environment env{rooms, std::nullopt};
  const std::vector<Embedding> q{basis(4, 0)};
  EXPECT_THROW(chained_inference(q, EpisodicMemory(), env, KernelConfig(0.1), 1, 1), EmptyInput);
}

TEST(Segment, IdenticalWaypointsFormOneSegment) {
  const auto rooms = make_rooms({{0.5, 0.5}}, 4, 20.0, 30, 8);
  const std::vector<ObservationSet> w(6, rooms[0].observations);
  for (double threshold : {0.0, 0.1, 5.0}) {
    const auto s = segment_trajectory(w, threshold, KernelConfig(0.1));
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], (Segment{0, 6, 0}));
  }
}

TEST(Segment, AlternatingPointMassesSplitEverywhere) {
  const auto a = ObservationSet::from_embeddings(testutil::repeat(basis(3, 0), 4));
  const auto b = ObservationSet::from_embeddings(testutil::repeat(basis(3, 1), 4));
  const std::vector<ObservationSet> w{a, b, a, b, a};
  const auto s = segment_trajectory(w, 0.5, KernelConfig(0.1));
  ASSERT_EQ(s.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(s[i], (Segment{i, i + 1, i}));
}

TEST(Segment, SingleWaypointAndErrors) {
  const auto a = ObservationSet::from_embeddings({basis(3, 0)});
  const std::vector<ObservationSet> one{a};
  const auto s = segment_trajectory(one, 0.2, KernelConfig(0.1));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0], (Segment{0, 1, 0}));
  EXPECT_THROW(segment_trajectory(std::vector<ObservationSet>{}, 0.2, KernelConfig(0.1)), EmptyInput);
  EXPECT_THROW(segment_trajectory(one, -0.1, KernelConfig(0.1)), DomainError);
  const std::vector<ObservationSet> holes{a, ObservationSet()};
  EXPECT_THROW(segment_trajectory(holes, 0.2, KernelConfig(0.1)), EmptyInput);
}

TEST(Segment, PartitionProperty) {
  std::mt19937_64 rng(13);
  const auto rooms = make_rooms({{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}}, 6, 50.0, 30, 9);
  for (int t = 0; t < 20; ++t) {
    std::vector<ObservationSet> w;
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i) w.push_back(rooms[rng() % 3].observations);
    const double threshold = 0.05 * double(rng() % 30);
    const auto segments = segment_trajectory(w, threshold, KernelConfig(0.15));
    std::size_t next = 0;
    for (const auto& s : segments) {
      EXPECT_EQ(s.start, next);
      EXPECT_LT(s.start, s.end);
      EXPECT_EQ(s.pivot, s.start);
      next = s.end;
    }
    EXPECT_EQ(next, n);
  }
}
