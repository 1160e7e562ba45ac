#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "ckit/error.hpp"
#include "ckit/heuristics.hpp"
#include "oracles.hpp"

using namespace ckit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Corpus corpus_of(std::initializer_list<std::string> texts) {
  std::vector<Document> docs;
  DocId id = 0;
  for (const auto& t : texts) docs.push_back({id++, "s", Stage::C1, tokenize(t)});
  return Corpus("h", std::move(docs));
}

}  // namespace

TEST_CASE("mattr") {
  CHECK(mattr(tokenize("a b c d e f"), 5) == 1.0);
  CHECK(mattr(tokenize("a a a a a"), 5) == 0.2);
  CHECK_THAT(mattr(tokenize("a b a b a b"), 5), WithinAbs(0.4, 1e-15));
  CHECK_THAT(mattr(tokenize("a a b"), 5), WithinAbs(2.0 / 3.0, 1e-15));
  CHECK(mattr(tokenize("x"), 1) == 1.0);
  CHECK_THROWS_AS(mattr(tokenize("a b"), 0), Error);
  CHECK_THROWS_AS(mattr({}, 5), Error);
}

TEST_CASE("mattr matches window enumeration") {
  const auto corpus = test::synthetic_corpus(200, 17, 1, 60);
  for (const auto& d : corpus.documents()) {
    for (const std::size_t w : {1u, 3u, 5u, 11u}) {
      CHECK_THAT(mattr(d.tokens, w), WithinAbs(test::naive_mattr(d.tokens, w), 1e-12));
    }
  }
}

TEST_CASE("unigram probabilities") {
  const auto c = corpus_of({"a a b", "a"});
  const auto mle = UnigramModel::train(c, 0.0);
  CHECK(mle.probability("a") == 0.75);
  CHECK(mle.probability("b") == 0.25);
  CHECK(mle.probability("zzz") == 0.0);

  const auto smooth = UnigramModel::train(c, 1.0);
  CHECK_THAT(smooth.probability("a"), WithinRel(4.0 / 7.0, 1e-15));
  CHECK_THAT(smooth.probability("b"), WithinRel(2.0 / 7.0, 1e-15));
  CHECK_THAT(smooth.unknown_probability(), WithinRel(1.0 / 7.0, 1e-15));
  CHECK(smooth.vocab_size() == 2);
  CHECK(smooth.total() == 4);
  CHECK(smooth.count("a") == 3);
  CHECK_THROWS_AS(UnigramModel::train(c, -1.0), Error);
}

TEST_CASE("perplexity") {
  const auto two = UnigramModel::train(corpus_of({"a b"}), 0.0);
  CHECK_THAT(perplexity(two, tokenize("a b")), WithinAbs(2.0, 1e-9));
  CHECK_THAT(perplexity(two, tokenize("a b a b a b a b")), WithinAbs(2.0, 1e-9));

  const auto one = UnigramModel::train(corpus_of({"q q q"}), 0.0);
  CHECK(perplexity(one, tokenize("q q")) == 1.0);

  CHECK_THROWS_AS(perplexity(two, tokenize("a z")), Error);
  CHECK_THROWS_AS(perplexity(two, std::vector<std::string>{}), Error);

  const auto smooth = UnigramModel::train(corpus_of({"a a a b"}), 1.0);
  const auto doc = tokenize("a b c");
  const double expected = std::exp(-(std::log(4.0 / 7) + std::log(2.0 / 7) + std::log(1.0 / 7)) / 3.0);
  CHECK_THAT(perplexity(smooth, doc), WithinRel(expected, 1e-12));
}

TEST_CASE("score_corpus") {
  const auto corpus = test::synthetic_corpus(300, 5);
  const auto scores = score_corpus(corpus, 5, 1.0, 1);
  REQUIRE(scores.size() == corpus.size());
  const auto model = UnigramModel::train(corpus, 1.0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(scores[i].doc_id == corpus[i].doc_id);
    CHECK(scores[i].mattr == mattr(corpus[i].tokens, 5));
    CHECK(scores[i].perplexity == perplexity(model, corpus[i].tokens));
  }
  CHECK(score_corpus(corpus, 5, 1.0, 4) == scores);

  const auto dir = test::scratch_dir("heur-table");
  write_score_table(scores, dir / "s.tsv");
  CHECK(read_score_table(dir / "s.tsv") == scores);
  CHECK(test::read_file(dir / "s.tsv").starts_with("doc_id\tmattr\tperplexity\n"));

  std::ofstream(dir / "bad.tsv") << "doc_id\tmattr\tperplexity\n1\tx\t2\n";
  CHECK_THROWS_AS(read_score_table(dir / "bad.tsv"), Error);
}
