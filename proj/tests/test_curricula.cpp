#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "ckit/curricula.hpp"
#include "ckit/error.hpp"
#include "ckit/segments.hpp"
#include "oracles.hpp"

using namespace ckit;
using Catch::Matchers::ContainsSubstring;

namespace {

Document doc(DocId id, Stage stage, std::size_t words) {
  return Document{id, "s", stage, std::vector<std::string>(words, "w" + std::to_string(id))};
}

Corpus flat_corpus(std::size_t n, std::size_t words = 10) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(doc(i + 1, kAllStages[i % kStageCount], words));
  return Corpus("flat", std::move(docs));
}

InfluenceMatrix phi_for(const Corpus& corpus, std::size_t T, std::uint64_t seed) {
  Rng rng(seed);
  InfluenceMatrix phi{Matrix<double>(corpus.size(), T), {}, {}};
  for (const auto& d : corpus.documents()) phi.doc_ids.push_back(d.doc_id);
  for (std::size_t t = 0; t < T; ++t) phi.checkpoint_indices.push_back(static_cast<std::uint32_t>(t));
  for (double& v : phi.values.data()) v = rng.uniform() - 0.5;
  return phi;
}

ScoreTable one_column(std::vector<DocId> ids, std::vector<double> values) {
  ScoreTable t{std::move(ids), Matrix<double>(values.size(), 1)};
  for (std::size_t i = 0; i < values.size(); ++i) t.values(i, 0) = values[i];
  return t;
}

StrategySpec spec_of(const std::string& name) { return StrategySpec::defaults_for(parse_strategy(name)); }

std::multiset<DocId> as_set(std::span<const DocId> ids) { return {ids.begin(), ids.end()}; }

}  // namespace

TEST_CASE("strategy names") {
  const auto all = all_strategies();
  REQUIRE(all.size() == 14);
  std::set<std::string> names;
  for (const auto id : all) {
    const auto name = strategy_name(id);
    names.insert(name);
    CHECK(parse_strategy(name) == id);
  }
  CHECK(names.size() == 14);
  CHECK(names.contains("C_rand"));
  CHECK(names.contains("C_source"));
  CHECK(names.contains("C_50"));
  CHECK(names.contains("C_A"));
  CHECK(names.contains("Ch_tilde_asc"));
  CHECK(parse_strategy("C_E", Direction::Descending) == StrategyId{Family::Cumulative, Direction::Descending});
  CHECK_THROWS_AS(parse_strategy("C_E"), Error);
  CHECK_THROWS_AS(parse_strategy("C_E_asc", Direction::Descending), Error);
  CHECK_THROWS_AS(parse_strategy("C_unknown"), Error);
}

TEST_CASE("defaults") {
  const StrategySpec s;
  CHECK(s.epochs == 10);
  CHECK(s.block_size == 1000);
  CHECK(s.segments == 10);
  CHECK(s.keep_fraction == 0.5);
  CHECK(s.epochs_per_stage == 2);
  CHECK(kDefaultWordBudget == 100'000'000);
}

TEST_CASE("build_random") {
  const auto corpus = test::synthetic_corpus(30, 1);
  const auto spec = spec_of("C_rand");
  const auto a = build_random(corpus, spec, 7);
  CHECK(a.epochs.size() == 10);
  CHECK(validate_manifest(a, corpus).ok());
  CHECK(build_random(corpus, spec, 7) == a);
  CHECK_FALSE(build_random(corpus, spec, 8).epochs == a.epochs);
  CHECK(a.epochs[0] != a.epochs[1]);

  auto single = spec;
  single.reshuffle_each_epoch = false;
  const auto s = build_random(corpus, single, 7);
  for (const auto& e : s.epochs) CHECK(e == s.epochs[0]);

  const Corpus one("one", {doc(42, Stage::C3, 5)});
  for (const auto& e : build_random(one, spec, 1).epochs) CHECK(e == std::vector<DocId>{42});
}

TEST_CASE("build_sorted") {
  const auto corpus = flat_corpus(3);
  auto spec = spec_of("C_desc");
  spec.epochs = 2;
  const auto m = build_sorted(corpus, one_column({1, 2, 3}, {0.9, 0.1, 0.5}), spec, 0);
  CHECK(m.epochs[0] == std::vector<DocId>{1, 3, 2});
  CHECK(m.epochs[1] == std::vector<DocId>{1, 3, 2});

  const auto tied = build_sorted(corpus, one_column({3, 1, 2}, {0.2, 0.2, 0.2}), spec, 0);
  CHECK(tied.epochs[0] == std::vector<DocId>{1, 2, 3});

  SECTION("epoch t follows column t only") {
    const auto big = test::synthetic_corpus(40, 3);
    const auto phi = phi_for(big, 10, 4);
    auto s = spec_of("C_asc");
    const auto before = build_sorted(big, scores_from(phi), s, 0);
    auto perturbed = phi;
    for (std::size_t i = 0; i < perturbed.documents(); ++i) perturbed.values(i, 1) = -perturbed.values(i, 1);
    const auto after = build_sorted(big, scores_from(perturbed), s, 0);
    CHECK(after.epochs[2] == before.epochs[2]);
    CHECK(after.epochs[1] != before.epochs[1]);
    std::vector<DocId> reversed(before.epochs[1].rbegin(), before.epochs[1].rend());
    CHECK(after.epochs[1] == reversed);
  }
  SECTION("too few columns") {
    const auto big = test::synthetic_corpus(10, 3);
    CHECK_THROWS_AS(build_sorted(big, scores_from(phi_for(big, 3, 1)), spec_of("C_asc"), 0), Error);
  }
  SECTION("missing score") {
    CHECK_THROWS_WITH(build_sorted(corpus, one_column({1, 2}, {0.1, 0.2}), spec, 0), ContainsSubstring("doc_id 3"));
  }
}

TEST_CASE("build_block_shuffled") {
  const auto corpus = test::synthetic_corpus(100, 9);
  const auto phi = phi_for(corpus, 10, 1);
  auto spec = spec_of("C_tilde_desc");

  spec.block_size = 1;
  CHECK(build_block_shuffled(corpus, scores_from(phi), spec, 3).epochs ==
        build_sorted(corpus, scores_from(phi), spec, 3).epochs);

  spec.block_size = 16;
  const auto sorted = build_sorted(corpus, scores_from(phi), spec, 3);
  const auto blocked = build_block_shuffled(corpus, scores_from(phi), spec, 3);
  CHECK(validate_manifest(blocked, corpus).ok());
  for (std::size_t e = 0; e < 10; ++e) {
    CHECK(blocked.epochs[e] != sorted.epochs[e]);
    for (std::size_t b = 0; b < 100; b += 16) {
      const std::size_t len = std::min<std::size_t>(16, 100 - b);
      CHECK(as_set(std::span(blocked.epochs[e]).subspan(b, len)) == as_set(std::span(sorted.epochs[e]).subspan(b, len)));
    }
  }

  spec.block_size = 1000;
  const auto full = build_block_shuffled(corpus, scores_from(phi), spec, 3);
  CHECK(as_set(full.epochs[0]) == as_set(sorted.epochs[0]));
}

TEST_CASE("build_filtered_topk") {
  SECTION("4 documents of 10 words, keep 2") {
    const auto corpus = flat_corpus(4);
    InfluenceMatrix phi{Matrix<double>(4, 10), {1, 2, 3, 4}, {}};
    for (std::size_t t = 0; t < 10; ++t) {
      phi.checkpoint_indices.push_back(static_cast<std::uint32_t>(t));
      phi.values(0, t) = 0.1;
      phi.values(1, t) = 0.9;
      phi.values(2, t) = 0.4;
      phi.values(3, t) = 0.8;
    }
    const auto m = build_filtered_topk(corpus, phi, spec_of("C_50"), 5);
    REQUIRE(m.epochs.size() == 10);
    for (std::size_t e = 0; e < 10; ++e) {
      const auto& ep = m.epochs[e];
      REQUIRE(ep.size() == 4);
      CHECK(m.word_counts[e] == 40);
      CHECK(as_set(ep) == std::multiset<DocId>{2, 2, 4, 4});
      CHECK(ep[0] == ep[2]);
      CHECK(ep[1] == ep[3]);
    }
    CHECK(validate_manifest(m, corpus, &phi).ok());
  }
  SECTION("keep everything") {
    const auto corpus = test::synthetic_corpus(50, 2);
    const auto phi = phi_for(corpus, 10, 2);
    auto spec = spec_of("C_50");
    spec.keep_fraction = 1.0;
    const auto m = build_filtered_topk(corpus, phi, spec, 1);
    for (std::size_t e = 0; e < 10; ++e) {
      CHECK(m.word_counts[e] == corpus.total_words());
      CHECK(m.epochs[e].size() == corpus.size());
    }
  }
  SECTION("uneven lengths stay within one document of the corpus total") {
    const auto corpus = test::synthetic_corpus(301, 4);
    const auto phi = phi_for(corpus, 10, 3);
    const auto m = build_filtered_topk(corpus, phi, spec_of("C_50"), 1);
    CHECK(validate_manifest(m, corpus, &phi).ok());
    for (const auto w : m.word_counts) {
      CHECK(w >= corpus.total_words());
      CHECK(w < corpus.total_words() + corpus.max_document_words());
    }
    std::set<DocId> distinct(m.epochs[0].begin(), m.epochs[0].end());
    CHECK(distinct.size() == 151);
  }
}

TEST_CASE("build_cumulative_segments") {
  const auto corpus = test::synthetic_corpus(200, 6);
  const auto phi = phi_for(corpus, 10, 6);
  const auto agg = aggregate(phi);

  for (const auto dir : {Direction::Ascending, Direction::Descending}) {
    auto spec = StrategySpec::defaults_for({Family::Cumulative, dir});
    const auto m = build_cumulative_segments(corpus, agg, spec, 2);
    REQUIRE(m.epochs.size() == 10);
    CHECK(validate_manifest(m, corpus).ok());
    std::multiset<DocId> all;
    for (const auto& e : m.epochs) all.insert(e.begin(), e.end());
    CHECK(all.size() == corpus.size());
    CHECK(std::set<DocId>(all.begin(), all.end()).size() == corpus.size());

    // Segments follow aggregate order: every score in segment s is on the
    // right side of every score in segment s+1.
    std::map<DocId, double> score;
    for (std::size_t i = 0; i < agg.doc_ids.size(); ++i) score[agg.doc_ids[i]] = agg.values[i];
    for (std::size_t s = 0; s + 1 < 10; ++s) {
      double edge_this = dir == Direction::Ascending ? -1e300 : 1e300;
      for (const auto id : m.epochs[s]) {
        edge_this = dir == Direction::Ascending ? std::max(edge_this, score[id]) : std::min(edge_this, score[id]);
      }
      for (const auto id : m.epochs[s + 1]) {
        if (dir == Direction::Ascending) {
          CHECK(score[id] >= edge_this);
        } else {
          CHECK(score[id] <= edge_this);
        }
      }
    }
  }

  auto one = spec_of("C_E_asc");
  one.segments = 1;
  const auto single = build_cumulative_segments(corpus, agg, one, 2);
  REQUIRE(single.epochs.size() == 1);
  CHECK(single.epochs[0].size() == corpus.size());
  CHECK(validate_manifest(single, corpus).ok());
}

TEST_CASE("balanced_segment_ends") {
  const std::vector<std::uint64_t> even(12, 5);
  CHECK(balanced_segment_ends(even, 4) == std::vector<std::size_t>{3, 6, 9, 12});
  CHECK(balanced_segment_ends(even, 1) == std::vector<std::size_t>{12});
  CHECK(balanced_segment_ends(even, 12).back() == 12);
  // One heavy item still leaves every segment non-empty.
  const std::vector<std::uint64_t> heavy{100, 1, 1, 1};
  CHECK(balanced_segment_ends(heavy, 3) == std::vector<std::size_t>{1, 2, 4});
  CHECK_THROWS_AS(balanced_segment_ends(even, 13), Error);
  CHECK_THROWS_AS(balanced_segment_ends(even, 0), Error);

  // Linear scan of the boundary rule: closest prefix to (s+1)/m of the total,
  // earliest on a tie, each segment at least one item.
  Rng rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(60);
    const std::size_t m = 1 + rng.below(n);
    std::vector<std::uint64_t> w(n);
    for (auto& v : w) v = 1 + rng.below(trial % 2 ? 5 : 200);
    std::vector<std::int64_t> prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + static_cast<std::int64_t>(w[i]);
    std::vector<std::size_t> expected;
    std::size_t prev = 0;
    for (std::size_t s = 0; s + 1 < m; ++s) {
      const std::int64_t target = static_cast<std::int64_t>(s + 1) * prefix[n];
      std::size_t best = prev + 1;
      for (std::size_t j = prev + 1; j <= n - (m - 1 - s); ++j) {
        const auto dist = [&](std::size_t k) { return std::llabs(static_cast<std::int64_t>(m) * prefix[k] - target); };
        if (dist(j) < dist(best)) best = j;
      }
      expected.push_back(best);
      prev = best;
    }
    expected.push_back(n);
    CHECK(balanced_segment_ends(w, m) == expected);
  }
}

TEST_CASE("alternating_order") {
  CHECK(alternating_order(4) == std::vector<std::size_t>{3, 0, 2, 1});
  CHECK(alternating_order(4, false) == std::vector<std::size_t>{0, 3, 1, 2});
  CHECK(alternating_order(5) == std::vector<std::size_t>{4, 0, 3, 1, 2});
  CHECK(alternating_order(1) == std::vector<std::size_t>{0});
}

TEST_CASE("build_alternating") {
  const auto corpus = test::synthetic_corpus(120, 7);
  const auto phi = phi_for(corpus, 10, 7);
  const auto agg = aggregate(phi);
  auto spec = spec_of("C_A");
  const auto m = build_alternating(corpus, agg, spec, 4);
  REQUIRE(m.epochs.size() == 10);
  CHECK(validate_manifest(m, corpus).ok());
  CHECK(m.epochs[0] != m.epochs[1]);

  // The first segment visited holds the highest-influence documents.
  auto sorted = build_sorted(corpus, scores_from(agg), spec_of("C_desc"), 0).epochs[0];
  const auto first = m.epochs[0].front();
  const auto pos = std::find(sorted.begin(), sorted.end(), first) - sorted.begin();
  CHECK(pos < 20);

  spec.segments = 1;
  const auto r = build_alternating(corpus, agg, spec, 4);
  CHECK(validate_manifest(r, corpus).ok());
  CHECK(r.epochs[0] != r.epochs[1]);
}

TEST_CASE("build_source_stages") {
  const auto corpus = test::synthetic_corpus(150, 8);
  const auto m = build_source_stages(corpus, spec_of("C_source"), 1);
  REQUIRE(m.epochs.size() == 10);
  CHECK(validate_manifest(m, corpus).ok());
  for (std::size_t e = 0; e < 10; ++e) {
    for (const auto id : m.epochs[e]) CHECK(corpus.by_id(id).stage == kAllStages[e / 2]);
  }
  CHECK(m.warnings.empty());

  const Corpus only_c1("c1", {doc(1, Stage::C1, 3), doc(2, Stage::C1, 4)});
  const auto sparse = build_source_stages(only_c1, spec_of("C_source"), 1);
  REQUIRE(sparse.epochs.size() == 10);
  CHECK(sparse.epochs[0].size() == 2);
  CHECK(sparse.epochs[1].size() == 2);
  for (std::size_t e = 2; e < 10; ++e) CHECK(sparse.epochs[e].empty());
  CHECK(sparse.warnings.size() == 4);
  CHECK(validate_manifest(sparse, only_c1).ok());

  auto reordered = spec_of("C_source");
  reordered.stage_order = {Stage::C5, Stage::C4, Stage::C3, Stage::C2, Stage::C1};
  const auto rev = build_source_stages(corpus, reordered, 1);
  for (const auto id : rev.epochs[0]) CHECK(corpus.by_id(id).stage == Stage::C5);

  auto dup = spec_of("C_source");
  dup.stage_order = {Stage::C1, Stage::C1, Stage::C2, Stage::C3, Stage::C4, Stage::C5};
  CHECK_THROWS_AS(build_source_stages(corpus, dup, 1), Error);
  auto missing = spec_of("C_source");
  missing.stage_order = {Stage::C1, Stage::C2};
  CHECK_THROWS_AS(build_source_stages(corpus, missing, 1), Error);
}

TEST_CASE("enforce_budget") {
  const auto corpus = test::synthetic_corpus(60, 10);
  const auto full = build_random(corpus, spec_of("C_rand"), 3);
  CHECK(enforce_budget(full, full.total_words(), corpus).epochs == full.epochs);
  CHECK_FALSE(enforce_budget(full, full.total_words(), corpus).truncated);

  const auto half = enforce_budget(full, full.total_words() / 2, corpus);
  CHECK(half.truncated);
  CHECK(half.total_words() <= full.total_words() / 2);
  // The next document would not have fitted.
  const auto e = half.epochs.size() - 1;
  const DocId next = half.epochs[e].size() < full.epochs[e].size() ? full.epochs[e][half.epochs[e].size()]
                                                                    : full.epochs[e + 1][0];
  CHECK(half.total_words() + corpus.by_id(next).word_count() > full.total_words() / 2);
  CHECK(half.epochs.size() >= 4);
  CHECK(half.epochs.size() <= 6);
  CHECK(validate_manifest(half, corpus).ok());

  // 10 passes over the corpus fit easily in the default budget.
  CHECK_FALSE(build_random(corpus, spec_of("C_rand"), 3, kDefaultWordBudget).truncated);

  const auto none = enforce_budget(full, 0, corpus);
  CHECK(none.epochs.empty());
  CHECK(none.truncated);
}

TEST_CASE("build_curriculum requires its inputs") {
  const auto corpus = test::synthetic_corpus(20, 1);
  CHECK_THROWS_WITH(build_curriculum(corpus, StrategySpec::defaults_for({Family::Cumulative, Direction::Descending}),
                                     {}, 0),
                    ContainsSubstring("needs an influence matrix"));
  CHECK_THROWS_WITH(build_curriculum(corpus, spec_of("C_PPL"), {}, 0), ContainsSubstring("heuristic"));
  CHECK_NOTHROW(build_curriculum(corpus, spec_of("C_rand"), {}, 0));
}

TEST_CASE("validate_manifest reports violations") {
  const auto corpus = test::synthetic_corpus(30, 11);
  const auto good = build_random(corpus, spec_of("C_rand"), 1);
  CHECK(validate_manifest(good, corpus).ok());

  SECTION("missing document") {
    auto bad = good;
    bad.epochs[3].pop_back();
    bad.word_counts = enforce_budget(bad, bad.budget, corpus).word_counts;
    const auto report = validate_manifest(bad, corpus);
    REQUIRE_FALSE(report.ok());
    CHECK_THAT(report.to_string(), ContainsSubstring("epoch 3 not a permutation"));
  }
  SECTION("word counts") {
    auto bad = good;
    bad.word_counts[0] += 1;
    CHECK_FALSE(validate_manifest(bad, corpus).ok());
  }
  SECTION("unknown id") {
    auto bad = good;
    bad.epochs[0][0] = 999999;
    CHECK_THAT(validate_manifest(bad, corpus).to_string(), ContainsSubstring("unknown doc_id"));
  }
  SECTION("budget") {
    auto bad = good;
    bad.budget = 10;
    CHECK_THAT(validate_manifest(bad, corpus).to_string(), ContainsSubstring("budget exceeded"));
  }
  SECTION("different corpus") {
    CHECK_FALSE(validate_manifest(good, test::synthetic_corpus(30, 12)).ok());
  }
  SECTION("overlapping segments") {
    const auto phi = phi_for(corpus, 10, 1);
    auto m = build_cumulative_segments(corpus, aggregate(phi), spec_of("C_E_asc"), 1);
    m.epochs[4].push_back(m.epochs[2][0]);
    m.word_counts[4] += corpus.by_id(m.epochs[2][0]).word_count();
    CHECK_THAT(validate_manifest(m, corpus).to_string(), ContainsSubstring("partition violated"));
  }
  SECTION("C_50 outside the retained set") {
    const auto phi = phi_for(corpus, 10, 1);
    auto m = build_filtered_topk(corpus, phi, spec_of("C_50"), 1);
    auto other = phi;
    for (double& v : other.values.data()) v = -v;
    CHECK_FALSE(validate_manifest(m, corpus, &other).ok());
    CHECK(validate_manifest(m, corpus, &phi).ok());
  }
}

TEST_CASE("manifest files round-trip") {
  const auto dir = test::scratch_dir("cur-io");
  const auto corpus = test::synthetic_corpus(40, 2);
  const auto phi = phi_for(corpus, 10, 2);
  const std::vector<HeuristicScore> none;
  for (const auto id : all_strategies()) {
    auto spec = StrategySpec::defaults_for(id);
    spec.block_size = 7;
    spec.segments = 4;
    std::vector<HeuristicScore> h;
    for (const auto& d : corpus.documents()) h.push_back({d.doc_id, 0.5, static_cast<double>(d.word_count())});
    const auto m = build_curriculum(corpus, spec, {&phi, &h}, 5, 3000);
    const auto path = dir / (m.strategy() + ".manifest");
    write_manifest(m, path);
    CHECK(read_manifest(path) == m);
    write_manifest_text(m, dir / (m.strategy() + ".txt"));
  }
  std::ofstream(dir / "bad.manifest") << "#ckit-manifest 1\nstrategy C_nope\n";
  CHECK_THROWS_WITH(read_manifest(dir / "bad.manifest"), ContainsSubstring("bad.manifest:2"));
}
