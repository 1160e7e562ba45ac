#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include "ckit/corpus.hpp"
#include "ckit/matrix.hpp"

namespace ckit {

// On-disk layout of a gradient dump (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "GDMP"
//   4       4     format_version (u32, currently 1)
//   8       4     checkpoint_index (u32)
//   12      4     n_documents (u32, >= 1)
//   16      4     feature_dim (u32, >= 1)
//   20      4*n*d row-major IEEE-754 binary32 payload
//
// A sidecar "<dump>.rows" holds one "row_position doc_id" pair per line.
inline constexpr std::array<char, 4> kDumpMagic{'G', 'D', 'M', 'P'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::size_t kDumpHeaderBytes = 20;

struct DumpHeader {
  std::uint32_t format_version = kDumpVersion;
  std::uint32_t checkpoint_index = 0;
  std::uint32_t n_documents = 0;
  std::uint32_t feature_dim = 0;

  friend bool operator==(const DumpHeader&, const DumpHeader&) = default;
};

// Gradient features of every document at one checkpoint. Values are held in
// double once loaded; the dump itself stores binary32 and every value read
// from a dump is exactly representable.
struct CheckpointGradients {
  DumpHeader header;
  Matrix<double> rows;        // n_documents x feature_dim
  std::vector<DocId> doc_ids;  // row position -> doc_id

  std::optional<std::size_t> row_of(DocId id) const;

  friend bool operator==(const CheckpointGradients&, const CheckpointGradients&) = default;
};

// Builds a CheckpointGradients with a consistent header.
CheckpointGradients make_checkpoint(std::uint32_t checkpoint_index, Matrix<double> rows, std::vector<DocId> doc_ids);

// Shape, finiteness and doc_id uniqueness. Throws Error naming the first bad row.
void validate(const CheckpointGradients& grads);

// Throws unless the rows are in corpus order with matching doc_ids.
void check_alignment(const CheckpointGradients& grads, const Corpus& corpus);

std::filesystem::path sidecar_path(const std::filesystem::path& dump_path);

// Writes the dump and its sidecar. Values are narrowed to binary32.
void write_dump(const CheckpointGradients& grads, const std::filesystem::path& path);

// Sequential reader over a dump file; rows come off disk one at a time.
class DumpReader {
 public:
  explicit DumpReader(const std::filesystem::path& path);

  const DumpHeader& header() const noexcept { return header_; }
  std::size_t rows_read() const noexcept { return rows_read_; }

  // Reads the next row into out (size feature_dim). Returns false after the
  // last row. Throws on truncation or a non-finite value.
  bool next_row(std::span<float> out);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  DumpHeader header_;
  std::size_t rows_read_ = 0;
  std::vector<unsigned char> buffer_;
};

CheckpointGradients read_dump(const std::filesystem::path& path);

struct CheckpointSet {
  std::vector<CheckpointGradients> checkpoints;  // strictly increasing checkpoint_index
  std::vector<double> weights;                   // eta_t, one per checkpoint, default 1

  std::size_t size() const noexcept { return checkpoints.size(); }
};

// Checks shared shape, shared row labels, ordering, and weights >= 0.
void validate(const CheckpointSet& set);

CheckpointSet make_checkpoint_set(std::vector<CheckpointGradients> checkpoints, std::vector<double> weights = {});

// Loads every "*.gdmp" file in a directory, ordered by checkpoint_index.
CheckpointSet load_checkpoint_set(const std::filesystem::path& directory, std::vector<double> weights = {});

}  // namespace ckit
