#include "ckit/gradstore.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <string>
#include <unordered_set>

#include "ckit/error.hpp"

namespace ckit {

namespace {

void put_u32(unsigned char* p, std::uint32_t v) {
  p[0] = static_cast<unsigned char>(v);
  p[1] = static_cast<unsigned char>(v >> 8);
  p[2] = static_cast<unsigned char>(v >> 16);
  p[3] = static_cast<unsigned char>(v >> 24);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::vector<DocId> read_sidecar(const std::filesystem::path& path, std::size_t expected_rows) {
  const auto side = sidecar_path(path);
  std::ifstream in(side);
  if (!in) throw Error("cannot open row map " + side.string());
  std::vector<DocId> ids;
  ids.reserve(expected_rows);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::size_t row = 0;
    DocId id = 0;
    std::string extra;
    if (!(fields >> row >> id) || (fields >> extra)) throw ParseError(side.string(), line_no, "expected 'row_position doc_id'");
    if (row != ids.size()) {
      throw ParseError(side.string(), line_no, "row position " + std::to_string(row) + " out of sequence");
    }
    ids.push_back(id);
  }
  if (ids.size() != expected_rows) {
    throw Error(side.string() + ": row map has " + std::to_string(ids.size()) + " rows, dump header says " +
                std::to_string(expected_rows));
  }
  return ids;
}

}  // namespace

std::optional<std::size_t> CheckpointGradients::row_of(DocId id) const {
  const auto it = std::find(doc_ids.begin(), doc_ids.end(), id);
  if (it == doc_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - doc_ids.begin());
}

CheckpointGradients make_checkpoint(std::uint32_t checkpoint_index, Matrix<double> rows, std::vector<DocId> doc_ids) {
  CheckpointGradients g;
  g.header.checkpoint_index = checkpoint_index;
  g.header.n_documents = static_cast<std::uint32_t>(rows.rows());
  g.header.feature_dim = static_cast<std::uint32_t>(rows.cols());
  g.rows = std::move(rows);
  g.doc_ids = std::move(doc_ids);
  validate(g);
  return g;
}

void validate(const CheckpointGradients& grads) {
  const auto& h = grads.header;
  if (h.format_version != kDumpVersion) throw Error("unsupported dump version " + std::to_string(h.format_version));
  if (h.n_documents == 0) throw Error("dump has no documents");
  if (h.feature_dim == 0) throw Error("dump has feature_dim 0");
  if (grads.rows.rows() != h.n_documents || grads.rows.cols() != h.feature_dim) {
    throw Error("header/row count mismatch: header says " + std::to_string(h.n_documents) + "x" +
                std::to_string(h.feature_dim) + ", matrix is " + std::to_string(grads.rows.rows()) + "x" +
                std::to_string(grads.rows.cols()));
  }
  if (grads.doc_ids.size() != h.n_documents) {
    throw Error("header/row count mismatch: " + std::to_string(grads.doc_ids.size()) + " doc_ids for " +
                std::to_string(h.n_documents) + " rows");
  }
  std::unordered_set<DocId> seen;
  for (std::size_t r = 0; r < grads.rows.rows(); ++r) {
    for (const double v : grads.rows.row(r)) {
      if (!std::isfinite(v)) throw Error("non-finite gradient value in row " + std::to_string(r));
    }
    if (!seen.insert(grads.doc_ids[r]).second) {
      throw Error("duplicate doc_id " + std::to_string(grads.doc_ids[r]) + " in row map");
    }
  }
}

void check_alignment(const CheckpointGradients& grads, const Corpus& corpus) {
  if (grads.doc_ids.size() != corpus.size()) {
    throw Error("checkpoint " + std::to_string(grads.header.checkpoint_index) + " has " +
                std::to_string(grads.doc_ids.size()) + " rows, corpus has " + std::to_string(corpus.size()) +
                " documents");
  }
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (grads.doc_ids[i] != corpus[i].doc_id) {
      throw Error("checkpoint " + std::to_string(grads.header.checkpoint_index) + " row " + std::to_string(i) +
                  " is doc_id " + std::to_string(grads.doc_ids[i]) + ", corpus position " + std::to_string(i) +
                  " is doc_id " + std::to_string(corpus[i].doc_id));
    }
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& dump_path) {
  auto p = dump_path;
  p += ".rows";
  return p;
}

void write_dump(const CheckpointGradients& grads, const std::filesystem::path& path) {
  validate(grads);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dump " + path.string());

  std::array<unsigned char, kDumpHeaderBytes> header{};
  std::copy(kDumpMagic.begin(), kDumpMagic.end(), header.begin());
  put_u32(header.data() + 4, grads.header.format_version);
  put_u32(header.data() + 8, grads.header.checkpoint_index);
  put_u32(header.data() + 12, grads.header.n_documents);
  put_u32(header.data() + 16, grads.header.feature_dim);
  out.write(reinterpret_cast<const char*>(header.data()), header.size());

  std::vector<unsigned char> row_bytes(4 * grads.rows.cols());
  for (std::size_t r = 0; r < grads.rows.rows(); ++r) {
    const auto row = grads.rows.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      put_u32(row_bytes.data() + 4 * c, std::bit_cast<std::uint32_t>(static_cast<float>(row[c])));
    }
    out.write(reinterpret_cast<const char*>(row_bytes.data()), static_cast<std::streamsize>(row_bytes.size()));
  }
  if (!out.flush()) throw Error("write failed: " + path.string());

  std::ofstream side(sidecar_path(path), std::ios::trunc);
  if (!side) throw Error("cannot write row map " + sidecar_path(path).string());
  for (std::size_t r = 0; r < grads.doc_ids.size(); ++r) side << r << ' ' << grads.doc_ids[r] << '\n';
  if (!side.flush()) throw Error("write failed: " + sidecar_path(path).string());
}

DumpReader::DumpReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error("cannot open dump " + path.string());
  std::array<unsigned char, kDumpHeaderBytes> raw{};
  in_.read(reinterpret_cast<char*>(raw.data()), raw.size());
  if (in_.gcount() < 4 || !std::equal(kDumpMagic.begin(), kDumpMagic.end(), raw.begin())) {
    throw Error(path.string() + ": bad magic");
  }
  if (static_cast<std::size_t>(in_.gcount()) != raw.size()) throw Error(path.string() + ": truncated header");
  header_.format_version = get_u32(raw.data() + 4);
  header_.checkpoint_index = get_u32(raw.data() + 8);
  header_.n_documents = get_u32(raw.data() + 12);
  header_.feature_dim = get_u32(raw.data() + 16);
  if (header_.format_version != kDumpVersion) {
    throw Error(path.string() + ": version mismatch (file " + std::to_string(header_.format_version) + ", expected " +
                std::to_string(kDumpVersion) + ")");
  }
  if (header_.n_documents == 0) throw Error(path.string() + ": n_documents is 0");
  if (header_.feature_dim == 0) throw Error(path.string() + ": feature_dim is 0");
  buffer_.resize(4 * static_cast<std::size_t>(header_.feature_dim));
}

bool DumpReader::next_row(std::span<float> out) {
  if (rows_read_ == header_.n_documents) return false;
  if (out.size() != header_.feature_dim) throw Error("DumpReader::next_row: output span has wrong size");
  in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (static_cast<std::size_t>(in_.gcount()) != buffer_.size()) {
    throw Error(path_.string() + ": truncated payload (row " + std::to_string(rows_read_) + " of " +
                std::to_string(header_.n_documents) + " incomplete)");
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = std::bit_cast<float>(get_u32(buffer_.data() + 4 * c));
    if (!std::isfinite(out[c])) {
      throw Error(path_.string() + ": non-finite value in row " + std::to_string(rows_read_) + ", column " +
                  std::to_string(c));
    }
  }
  ++rows_read_;
  if (rows_read_ == header_.n_documents && in_.peek() != std::char_traits<char>::eof()) {
    throw Error(path_.string() + ": trailing bytes after payload");
  }
  return true;
}

CheckpointGradients read_dump(const std::filesystem::path& path) {
  DumpReader reader(path);
  CheckpointGradients g;
  g.header = reader.header();
  g.rows = Matrix<double>(g.header.n_documents, g.header.feature_dim);
  std::vector<float> row(g.header.feature_dim);
  for (std::size_t r = 0; reader.next_row(row); ++r) {
    std::copy(row.begin(), row.end(), g.rows.row(r).begin());
  }
  g.doc_ids = read_sidecar(path, g.header.n_documents);
  try {
    validate(g);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return g;
}

void validate(const CheckpointSet& set) {
  if (set.checkpoints.empty()) throw Error("checkpoint set is empty");
  if (set.weights.size() != set.checkpoints.size()) {
    throw Error("checkpoint set has " + std::to_string(set.weights.size()) + " weights for " +
                std::to_string(set.checkpoints.size()) + " checkpoints");
  }
  const auto& first = set.checkpoints.front();
  for (std::size_t t = 0; t < set.size(); ++t) {
    const auto& ck = set.checkpoints[t];
    validate(ck);
    if (ck.header.n_documents != first.header.n_documents || ck.header.feature_dim != first.header.feature_dim) {
      throw Error("checkpoint " + std::to_string(ck.header.checkpoint_index) + " shape differs from checkpoint " +
                  std::to_string(first.header.checkpoint_index));
    }
    if (ck.doc_ids != first.doc_ids) {
      throw Error("checkpoint " + std::to_string(ck.header.checkpoint_index) + " row map differs from checkpoint " +
                  std::to_string(first.header.checkpoint_index));
    }
    if (t > 0 && ck.header.checkpoint_index <= set.checkpoints[t - 1].header.checkpoint_index) {
      throw Error("checkpoints not strictly ordered by checkpoint_index");
    }
    if (!(set.weights[t] >= 0.0) || !std::isfinite(set.weights[t])) {
      throw Error("checkpoint weight " + std::to_string(t) + " must be finite and >= 0");
    }
  }
}

CheckpointSet make_checkpoint_set(std::vector<CheckpointGradients> checkpoints, std::vector<double> weights) {
  CheckpointSet set{std::move(checkpoints), std::move(weights)};
  if (set.weights.empty()) set.weights.assign(set.checkpoints.size(), 1.0);
  validate(set);
  return set;
}

CheckpointSet load_checkpoint_set(const std::filesystem::path& directory, std::vector<double> weights) {
  if (!std::filesystem::is_directory(directory)) throw Error("not a dump directory: " + directory.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".gdmp") files.push_back(entry.path());
  }
  if (files.empty()) throw Error("no .gdmp files in " + directory.string());
  std::sort(files.begin(), files.end());

  std::vector<CheckpointGradients> checkpoints;
  checkpoints.reserve(files.size());
  for (const auto& f : files) checkpoints.push_back(read_dump(f));
  std::stable_sort(checkpoints.begin(), checkpoints.end(), [](const auto& a, const auto& b) {
    return a.header.checkpoint_index < b.header.checkpoint_index;
  });
  return make_checkpoint_set(std::move(checkpoints), std::move(weights));
}

}  // namespace ckit
