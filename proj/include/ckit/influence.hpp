#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ckit/gradstore.hpp"
#include "ckit/matrix.hpp"

namespace ckit {

// Gradients whose rows have unit Euclidean norm, except all-zero rows which
// stay zero. Only normalize_rows produces one.
class NormalizedGradients {
 public:
  const CheckpointGradients& gradients() const noexcept { return grads_; }
  std::size_t zero_rows() const noexcept { return zero_rows_; }
  std::size_t size() const noexcept { return grads_.rows.rows(); }

 private:
  friend NormalizedGradients normalize_rows(const CheckpointGradients& grads);
  CheckpointGradients grads_;
  std::size_t zero_rows_ = 0;
};

NormalizedGradients normalize_rows(const CheckpointGradients& grads);

// Row chunking for the mean-gradient reduction. Results are bit-identical for
// a fixed chunk_rows whatever the worker count.
struct ReductionOptions {
  std::size_t chunk_rows = 4096;
  unsigned workers = 1;  // 0 = hardware concurrency
};

// Average cosine influence of each document on the whole set, via the mean
// normalized gradient: phi_i = g_i . mean(g). With include_self == false the
// document's own term is removed from the mean. Throws for a single document
// without the self term.
std::vector<double> influence_column(const NormalizedGradients& grads, bool include_self,
                                     const ReductionOptions& options = {});

// O(n^2 d) reference: averages every pairwise dot product directly.
std::vector<double> pairwise_oracle(const NormalizedGradients& grads, bool include_self);

struct StreamedColumn {
  std::vector<double> values;
  std::size_t zero_rows = 0;
};

// Same result as normalize_rows + influence_column, bit for bit, but reads the
// dump twice instead of holding it in memory.
StreamedColumn influence_column_streaming(const std::filesystem::path& dump_path, bool include_self,
                                          const ReductionOptions& options = {});

struct InfluenceMatrix {
  Matrix<double> values;                        // documents x checkpoints
  std::vector<DocId> doc_ids;                   // row labels
  std::vector<std::uint32_t> checkpoint_indices;  // column labels
  bool self_term_included = true;
  bool convolved = false;
  std::vector<std::size_t> zero_rows;  // per checkpoint, when known

  std::size_t documents() const noexcept { return values.rows(); }
  std::size_t checkpoints() const noexcept { return values.cols(); }

  friend bool operator==(const InfluenceMatrix&, const InfluenceMatrix&) = default;
};

InfluenceMatrix influence_matrix(const CheckpointSet& set, bool include_self, const ReductionOptions& options = {});

struct AggregateInfluence {
  std::vector<DocId> doc_ids;
  std::vector<double> values;  // row sums of the influence matrix
};

AggregateInfluence aggregate(const InfluenceMatrix& phi);

struct LognormFilter {
  std::vector<double> taps;  // h(0..T-1), non-negative, sum 1
  double mu = 0.0;
  double sigma = 1.0;
};

// Taps proportional to the lognormal density at k+1 for k = 0..T-1.
LognormFilter make_lognorm_filter(std::size_t length, double mu = 0.0, double sigma = 1.0);

// Causal convolution along the checkpoint axis:
//   out(i, t) = sum_k phi(i, t-k) * h(k), terms with t-k < 0 dropped.
InfluenceMatrix convolve(const InfluenceMatrix& phi, const LognormFilter& filter);

// Binary layout (little-endian), mirroring the dump header:
//   "PHIM" | version u32 | flags u32 (bit0 self term, bit1 convolved)
//   | n_documents u32 | n_checkpoints u32 | checkpoint indices u32[T]
//   | doc_ids u64[n] | values f64[n*T] row-major
void write_phi(const InfluenceMatrix& phi, const std::filesystem::path& path);
InfluenceMatrix read_phi(const std::filesystem::path& path);

// Tab-separated: doc_id, one column per checkpoint, aggregate.
void write_phi_table(const InfluenceMatrix& phi, const std::filesystem::path& path);

}  // namespace ckit
