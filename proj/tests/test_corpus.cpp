#include <catch_amalgamated.hpp>

#include <fstream>

#include "ckit/corpus.hpp"
#include "ckit/error.hpp"
#include "oracles.hpp"

using namespace ckit;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::trunc) << text;
  return path;
}

Document doc(DocId id, Stage stage, std::size_t words, const std::string& source = "s") {
  Document d{id, source, stage, {}};
  for (std::size_t i = 0; i < words; ++i) d.tokens.push_back("t" + std::to_string(i % 7));
  return d;
}

}  // namespace

TEST_CASE("tokenize splits on any whitespace") {
  CHECK(tokenize("  a\tb\n c  ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("Hello, world!") == std::vector<std::string>{"Hello,", "world!"});
  CHECK(tokenize(" \t ").empty());
}

TEST_CASE("stage labels round-trip") {
  for (const Stage s : kAllStages) CHECK(parse_stage(to_string(s)) == s);
  CHECK_FALSE(parse_stage("C6"));
  CHECK_FALSE(parse_stage("c1"));
}

TEST_CASE("load_corpus sums word counts") {
  const auto dir = test::scratch_dir("corpus-load");
  const auto path = write_text(dir / "c.tsv",
                               "#ckit-corpus 1\n#name toy\n"
                               "1\tchildes\tC1\ttext\ta b c d\n"
                               "2\tchildes\tC1\ttext\te f\n"
                               "3\twiki\tC5\ttext\tg h i j k l\n");
  const auto corpus = load_corpus(path);
  CHECK(corpus.name() == "toy");
  CHECK(corpus.size() == 3);
  CHECK(corpus.total_words() == 12);
  CHECK(corpus.max_document_words() == 6);
  CHECK(corpus[2].stage == Stage::C5);
  const auto per_stage = corpus.words_per_stage();
  CHECK(per_stage[0] == 6);
  CHECK(per_stage[4] == 6);
}

TEST_CASE("load_corpus reads file-backed records") {
  const auto dir = test::scratch_dir("corpus-file");
  write_text(dir / "texts.txt", "xxhello there worldyy");
  const auto path = write_text(dir / "c.tsv", "5\tbooks\tC3\tfile\ttexts.txt\t2\t17\n");
  const auto corpus = load_corpus(path);
  CHECK(corpus[0].tokens == std::vector<std::string>{"hello", "there", "world"});

  write_text(dir / "bad.tsv", "5\tbooks\tC3\tfile\ttexts.txt\t10\t100\n");
  CHECK_THROWS_WITH(load_corpus(dir / "bad.tsv"), ContainsSubstring("bad.tsv:1"));
}

TEST_CASE("load_corpus rejects bad manifests") {
  const auto dir = test::scratch_dir("corpus-bad");
  CHECK_THROWS_WITH(load_corpus(write_text(dir / "dup.tsv", "7\ta\tC1\ttext\tx\n7\ta\tC1\ttext\ty\n")),
                    ContainsSubstring("duplicate doc_id"));
  CHECK_THROWS_WITH(load_corpus(write_text(dir / "empty.tsv", "#ckit-corpus 1\n")), ContainsSubstring("empty corpus"));
  CHECK_THROWS_WITH(load_corpus(write_text(dir / "stage.tsv", "1\ta\tC9\ttext\tx\n")), ContainsSubstring("stage.tsv:1"));
  CHECK_THROWS_WITH(load_corpus(write_text(dir / "words.tsv", "1\ta\tC1\ttext\t   \n")),
                    ContainsSubstring("no words"));
  CHECK_THROWS_WITH(load_corpus(write_text(dir / "count.tsv", "#documents 2\n1\ta\tC1\ttext\tx\n")),
                    ContainsSubstring("count.tsv"));
  CHECK_THROWS_AS(load_corpus(dir / "missing.tsv"), Error);
}

TEST_CASE("save_corpus round-trips") {
  const auto dir = test::scratch_dir("corpus-save");
  const auto corpus = test::synthetic_corpus(50, 3);
  save_corpus(corpus, dir / "out.tsv");
  const auto back = load_corpus(dir / "out.tsv");
  CHECK(back == corpus);
  CHECK(back.fingerprint() == corpus.fingerprint());
}

TEST_CASE("fingerprint tracks ids, stages and lengths") {
  const Corpus a("a", {doc(1, Stage::C1, 3), doc(2, Stage::C2, 4)});
  const Corpus b("b", {doc(1, Stage::C1, 3), doc(2, Stage::C2, 4)});
  const Corpus c("a", {doc(1, Stage::C1, 3), doc(2, Stage::C3, 4)});
  const Corpus d("a", {doc(1, Stage::C1, 3), doc(2, Stage::C2, 5)});
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
  CHECK(a.fingerprint() != d.fingerprint());
}

TEST_CASE("synth_equitoken slices each source into fixed-length documents") {
  SECTION("230 words, target 100") {
    const Corpus c("c", {doc(1, Stage::C2, 120), doc(2, Stage::C2, 110)});
    const auto r = synth_equitoken(c, 100);
    CHECK(r.corpus.size() == 2);
    CHECK(r.words_dropped == 30);
    for (const auto& d : r.corpus.documents()) CHECK(d.word_count() == 100);
    CHECK(r.corpus.name() == "c-equitoken");
  }
  SECTION("exact fit") {
    const Corpus c("c", {doc(1, Stage::C1, 60), doc(2, Stage::C1, 40)});
    const auto r = synth_equitoken(c, 100);
    CHECK(r.corpus.size() == 1);
    CHECK(r.words_dropped == 0);
  }
  SECTION("sources are not mixed and keep their stage") {
    const Corpus c("c", {doc(1, Stage::C1, 150, "x"), doc(2, Stage::C4, 90, "y"), doc(3, Stage::C1, 60, "x")});
    const auto r = synth_equitoken(c, 100);
    REQUIRE(r.corpus.size() == 2);
    CHECK(r.corpus[0].stage == Stage::C1);
    CHECK(r.corpus[1].stage == Stage::C1);
    CHECK(r.words_dropped == 10 + 90);
  }
  SECTION("token order is preserved across document joins") {
    Document a{1, "s", Stage::C1, {"a", "b", "c"}};
    Document b{2, "s", Stage::C1, {"d", "e"}};
    const auto r = synth_equitoken(Corpus("c", {a, b}), 2);
    REQUIRE(r.corpus.size() == 2);
    CHECK(r.corpus[0].tokens == std::vector<std::string>{"a", "b"});
    CHECK(r.corpus[1].tokens == std::vector<std::string>{"c", "d"});
    CHECK(r.words_dropped == 1);
  }
  SECTION("nothing long enough") {
    CHECK_THROWS_AS(synth_equitoken(Corpus("c", {doc(1, Stage::C1, 5)}), 100), Error);
  }
}

TEST_CASE("stratify samples an equal word budget per stage") {
  std::vector<Document> docs;
  DocId id = 0;
  for (const Stage s : kAllStages) {
    for (int i = 0; i < 50; ++i) docs.push_back(doc(id++, s, 10 + (i % 11)));
  }
  const Corpus c("c", docs);
  const auto out = stratify(c, 500, 42);
  const auto totals = out.words_per_stage();
  for (const auto t : totals) {
    CHECK(t <= 500);
    CHECK(t + c.max_document_words() >= 500);
  }
  CHECK(stratify(c, 500, 42) == out);
  CHECK_FALSE(stratify(c, 500, 43) == out);

  // Input order is kept.
  std::optional<std::size_t> last;
  for (const auto& d : out.documents()) {
    const auto pos = c.position_of(d.doc_id);
    REQUIRE(pos);
    if (last) CHECK(*pos > *last);
    last = pos;
  }
}

TEST_CASE("stratify names the short stage") {
  const Corpus c("c", {doc(1, Stage::C1, 100), doc(2, Stage::C2, 100), doc(3, Stage::C3, 100), doc(4, Stage::C4, 100),
                       doc(5, Stage::C5, 10)});
  CHECK_THROWS_WITH(stratify(c, 50, 0), ContainsSubstring("C5"));
}
