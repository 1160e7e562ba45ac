#include <catch_amalgamated.hpp>

#include <cstring>
#include <fstream>

#include "ckit/error.hpp"
#include "ckit/gradstore.hpp"
#include "oracles.hpp"

using namespace ckit;
using Catch::Matchers::ContainsSubstring;

namespace {

CheckpointGradients sample(std::uint32_t index, std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix<double> m(n, d);
  // Values that survive narrowing to float unchanged.
  for (double& v : m.data()) v = static_cast<float>(rng.normal());
  std::vector<DocId> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(100 + i);
  return make_checkpoint(index, std::move(m), std::move(ids));
}

void patch(const std::filesystem::path& path, std::size_t offset, const std::string& bytes) {
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(static_cast<std::streamoff>(offset));
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("dump size follows the header layout") {
  const auto dir = test::scratch_dir("gs-size");
  const auto g = make_checkpoint(0, Matrix<double>(2, 3, 0.0), {1, 2});
  write_dump(g, dir / "z.gdmp");
  CHECK(std::filesystem::file_size(dir / "z.gdmp") == 44);
  CHECK(test::read_file(dir / "z.gdmp").substr(0, 4) == "GDMP");
}

TEST_CASE("write then read is bit-exact") {
  const auto dir = test::scratch_dir("gs-roundtrip");
  const auto g = sample(4, 17, 5, 1);
  write_dump(g, dir / "g.gdmp");
  const auto back = read_dump(dir / "g.gdmp");
  CHECK(back == g);
  CHECK(back.header.checkpoint_index == 4);
  CHECK(back.header.n_documents == 17);
  CHECK(back.header.feature_dim == 5);
  CHECK(back.row_of(105) == 5u);
  CHECK_FALSE(back.row_of(7));
}

TEST_CASE("header fields are little-endian") {
  const auto dir = test::scratch_dir("gs-endian");
  write_dump(sample(0x01020304, 2, 1, 2), dir / "g.gdmp");
  const auto bytes = test::read_file(dir / "g.gdmp");
  CHECK(bytes.substr(8, 4) == std::string("\x04\x03\x02\x01", 4));
}

TEST_CASE("reader rejects corrupt dumps") {
  const auto dir = test::scratch_dir("gs-corrupt");
  const auto g = sample(0, 4, 3, 3);
  const auto path = dir / "g.gdmp";

  SECTION("bad magic") {
    write_dump(g, path);
    patch(path, 0, "XXXX");
    CHECK_THROWS_WITH(read_dump(path), ContainsSubstring("bad magic"));
  }
  SECTION("version") {
    write_dump(g, path);
    patch(path, 4, std::string("\x02\0\0\0", 4));
    CHECK_THROWS_WITH(read_dump(path), ContainsSubstring("version"));
  }
  SECTION("truncated payload") {
    write_dump(g, path);
    std::filesystem::resize_file(path, kDumpHeaderBytes + 3 * 3 * 4);
    CHECK_THROWS_WITH(read_dump(path), ContainsSubstring("truncated payload"));
  }
  SECTION("truncated header") {
    write_dump(g, path);
    std::filesystem::resize_file(path, 10);
    CHECK_THROWS_WITH(read_dump(path), ContainsSubstring("truncated header"));
  }
  SECTION("trailing bytes") {
    write_dump(g, path);
    std::ofstream(path, std::ios::app | std::ios::binary) << "junk";
    CHECK_THROWS_WITH(read_dump(path), ContainsSubstring("trailing"));
  }
  SECTION("non-finite value") {
    write_dump(g, path);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::string bytes(4, '\0');
    std::memcpy(bytes.data(), &nan, 4);
    patch(path, kDumpHeaderBytes + 4 * (3 + 1), bytes);
    CHECK_THROWS_WITH(read_dump(path), ContainsSubstring("row 1"));
  }
  SECTION("sidecar mismatch") {
    write_dump(g, path);
    std::ofstream(sidecar_path(path), std::ios::trunc) << "0 100\n1 101\n";
    CHECK_THROWS_AS(read_dump(path), Error);
  }
  SECTION("error names the file") {
    write_dump(g, path);
    patch(path, 0, "XXXX");
    CHECK_THROWS_WITH(read_dump(path), ContainsSubstring("g.gdmp"));
  }
}

TEST_CASE("validate catches shape, values and duplicate ids") {
  auto g = sample(0, 3, 2, 4);
  CHECK_NOTHROW(validate(g));
  auto dup = g;
  dup.doc_ids[2] = dup.doc_ids[0];
  CHECK_THROWS_WITH(validate(dup), ContainsSubstring("duplicate"));
  auto inf = g;
  inf.rows(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH(validate(inf), ContainsSubstring("row 1"));
  auto shape = g;
  shape.header.n_documents = 4;
  CHECK_THROWS_AS(validate(shape), Error);
}

TEST_CASE("check_alignment compares against corpus order") {
  const auto corpus = test::synthetic_corpus(5, 1);
  std::vector<DocId> ids;
  for (const auto& d : corpus.documents()) ids.push_back(d.doc_id);
  const auto good = make_checkpoint(0, Matrix<double>(5, 2, 1.0), ids);
  CHECK_NOTHROW(check_alignment(good, corpus));
  std::swap(ids[0], ids[1]);
  CHECK_THROWS_AS(check_alignment(make_checkpoint(0, Matrix<double>(5, 2, 1.0), ids), corpus), Error);
  CHECK_THROWS_AS(check_alignment(make_checkpoint(0, Matrix<double>(4, 2, 1.0), {1000, 1001, 1002, 1003}), corpus),
                  Error);
}

TEST_CASE("checkpoint sets load in index order") {
  const auto dir = test::scratch_dir("gs-set");
  for (std::uint32_t t = 0; t < 10; ++t) {
    write_dump(sample(9 - t, 6, 4, t), dir / ("ck" + std::to_string(t) + ".gdmp"));
  }
  const auto set = load_checkpoint_set(dir);
  REQUIRE(set.size() == 10);
  for (std::uint32_t t = 0; t < 10; ++t) CHECK(set.checkpoints[t].header.checkpoint_index == t);
  CHECK(set.weights == std::vector<double>(10, 1.0));

  CHECK_THROWS_AS(load_checkpoint_set(dir, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(make_checkpoint_set({sample(0, 6, 4, 0), sample(1, 6, 4, 1)}, {1.0, -1.0}), Error);
}

TEST_CASE("checkpoint sets reject inconsistent members") {
  CHECK_THROWS_AS(make_checkpoint_set({sample(0, 6, 4, 0), sample(1, 6, 5, 1)}), Error);
  CHECK_THROWS_AS(make_checkpoint_set({sample(0, 6, 4, 0), sample(1, 7, 4, 1)}), Error);
  CHECK_THROWS_AS(make_checkpoint_set({sample(1, 6, 4, 0), sample(1, 6, 4, 1)}), Error);
  auto other = sample(1, 6, 4, 1);
  other.doc_ids[3] = 9999;
  CHECK_THROWS_AS(make_checkpoint_set({sample(0, 6, 4, 0), other}), Error);
  CHECK_THROWS_AS(make_checkpoint_set({}), Error);

  const auto dir = test::scratch_dir("gs-empty");
  CHECK_THROWS_AS(load_checkpoint_set(dir), Error);
}

TEST_CASE("streaming reader yields rows in order") {
  const auto dir = test::scratch_dir("gs-stream");
  const auto g = sample(2, 5, 3, 9);
  write_dump(g, dir / "g.gdmp");
  DumpReader reader(dir / "g.gdmp");
  std::vector<float> row(3);
  std::size_t r = 0;
  while (reader.next_row(row)) {
    for (std::size_t k = 0; k < 3; ++k) CHECK(row[k] == static_cast<float>(g.rows(r, k)));
    ++r;
  }
  CHECK(r == 5);
  CHECK(reader.rows_read() == 5);
}
