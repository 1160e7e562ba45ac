#include "ckit/influence.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "ckit/error.hpp"
#include "ckit/text.hpp"
#include "parallel.hpp"

namespace ckit {

namespace {

// Scales a row to unit norm in place; returns false for an all-zero row.
bool normalize_in_place(std::span<double> row) {
  double sq = 0.0;
  for (const double v : row) sq += v * v;
  if (sq == 0.0) return false;
  const double norm = std::sqrt(sq);
  for (double& v : row) v /= norm;
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Combines per-chunk sums pairwise, level by level, in chunk order.
std::vector<double> tree_reduce(std::vector<std::vector<double>> partial) {
  while (partial.size() > 1) {
    std::vector<std::vector<double>> next((partial.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] = std::move(partial[2 * i]);
      if (2 * i + 1 < partial.size()) {
        const auto& rhs = partial[2 * i + 1];
        for (std::size_t k = 0; k < rhs.size(); ++k) next[i][k] += rhs[k];
      }
    }
    partial = std::move(next);
  }
  return std::move(partial.front());
}

std::size_t chunk_count(std::size_t n, std::size_t chunk_rows) { return (n + chunk_rows - 1) / chunk_rows; }

void check_self_exclusion(std::size_t n, bool include_self) {
  if (!include_self && n == 1) throw Error("self-exclusion undefined for a single document");
}

double finish(double g_dot_mean, double self_dot, std::size_t n, bool include_self) {
  if (include_self) return g_dot_mean;
  const auto nd = static_cast<double>(n);
  return (nd * g_dot_mean - self_dot) / (nd - 1.0);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t get_u32(std::istream& in, const std::string& file) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw Error(file + ": truncated influence matrix");
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
         static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

std::uint64_t get_u64(std::istream& in, const std::string& file) {
  const std::uint64_t lo = get_u32(in, file);
  const std::uint64_t hi = get_u32(in, file);
  return lo | hi << 32;
}

constexpr std::array<char, 4> kPhiMagic{'P', 'H', 'I', 'M'};
constexpr std::uint32_t kPhiVersion = 1;

}  // namespace

NormalizedGradients normalize_rows(const CheckpointGradients& grads) {
  NormalizedGradients out;
  out.grads_ = grads;
  auto& rows = out.grads_.rows;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    if (!normalize_in_place(rows.row(r))) ++out.zero_rows_;
  }
  return out;
}

std::vector<double> influence_column(const NormalizedGradients& grads, bool include_self,
                                     const ReductionOptions& options) {
  const auto& rows = grads.gradients().rows;
  const std::size_t n = rows.rows();
  const std::size_t d = rows.cols();
  check_self_exclusion(n, include_self);
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_rows);
  const std::size_t chunks = chunk_count(n, chunk);

  std::vector<std::vector<double>> partial(chunks, std::vector<double>(d, 0.0));
  detail::parallel_for(chunks, options.workers, [&](std::size_t c) {
    auto& acc = partial[c];
    for (std::size_t r = c * chunk; r < std::min(n, (c + 1) * chunk); ++r) {
      const auto row = rows.row(r);
      for (std::size_t k = 0; k < d; ++k) acc[k] += row[k];
    }
  });
  std::vector<double> mean = tree_reduce(std::move(partial));
  for (double& v : mean) v /= static_cast<double>(n);

  std::vector<double> phi(n);
  detail::parallel_for(chunks, options.workers, [&](std::size_t c) {
    for (std::size_t r = c * chunk; r < std::min(n, (c + 1) * chunk); ++r) {
      const auto row = rows.row(r);
      phi[r] = finish(dot(row, mean), include_self ? 0.0 : dot(row, row), n, include_self);
    }
  });
  return phi;
}

std::vector<double> pairwise_oracle(const NormalizedGradients& grads, bool include_self) {
  const auto& rows = grads.gradients().rows;
  const std::size_t n = rows.rows();
  check_self_exclusion(n, include_self);
  std::vector<double> phi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!include_self && i == j) continue;
      total += dot(rows.row(i), rows.row(j));
    }
    phi[i] = total / static_cast<double>(include_self ? n : n - 1);
  }
  return phi;
}

StreamedColumn influence_column_streaming(const std::filesystem::path& dump_path, bool include_self,
                                          const ReductionOptions& options) {
  StreamedColumn out;
  std::size_t n = 0;
  std::size_t d = 0;
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_rows);

  std::vector<std::vector<double>> partial;
  {
    DumpReader reader(dump_path);
    n = reader.header().n_documents;
    d = reader.header().feature_dim;
    check_self_exclusion(n, include_self);
    partial.assign(chunk_count(n, chunk), std::vector<double>(d, 0.0));
    std::vector<float> raw(d);
    std::vector<double> row(d);
    for (std::size_t r = 0; reader.next_row(raw); ++r) {
      std::copy(raw.begin(), raw.end(), row.begin());
      if (!normalize_in_place(row)) ++out.zero_rows;
      auto& acc = partial[r / chunk];
      for (std::size_t k = 0; k < d; ++k) acc[k] += row[k];
    }
  }
  std::vector<double> mean = tree_reduce(std::move(partial));
  for (double& v : mean) v /= static_cast<double>(n);

  DumpReader reader(dump_path);
  out.values.resize(n);
  std::vector<float> raw(d);
  std::vector<double> row(d);
  for (std::size_t r = 0; reader.next_row(raw); ++r) {
    std::copy(raw.begin(), raw.end(), row.begin());
    normalize_in_place(row);
    out.values[r] = finish(dot(row, mean), include_self ? 0.0 : dot(row, row), n, include_self);
  }
  return out;
}

InfluenceMatrix influence_matrix(const CheckpointSet& set, bool include_self, const ReductionOptions& options) {
  validate(set);
  const std::size_t n = set.checkpoints.front().header.n_documents;
  const std::size_t T = set.size();

  InfluenceMatrix phi;
  phi.values = Matrix<double>(n, T);
  phi.doc_ids = set.checkpoints.front().doc_ids;
  phi.self_term_included = include_self;
  phi.zero_rows.assign(T, 0);
  for (const auto& ck : set.checkpoints) phi.checkpoint_indices.push_back(ck.header.checkpoint_index);

  ReductionOptions per_column = options;
  per_column.workers = 1;
  detail::parallel_for(T, options.workers, [&](std::size_t t) {
    const auto normalized = normalize_rows(set.checkpoints[t]);
    const auto column = influence_column(normalized, include_self, per_column);
    phi.zero_rows[t] = normalized.zero_rows();
    const double eta = set.weights[t];
    for (std::size_t i = 0; i < n; ++i) phi.values(i, t) = eta == 1.0 ? column[i] : eta * column[i];
  });
  return phi;
}

AggregateInfluence aggregate(const InfluenceMatrix& phi) {
  AggregateInfluence agg{phi.doc_ids, std::vector<double>(phi.documents(), 0.0)};
  for (std::size_t i = 0; i < phi.documents(); ++i) {
    for (const double v : phi.values.row(i)) agg.values[i] += v;
  }
  return agg;
}

LognormFilter make_lognorm_filter(std::size_t length, double mu, double sigma) {
  if (length == 0) throw Error("filter length must be >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error("lognormal sigma must be > 0");
  if (!std::isfinite(mu)) throw Error("lognormal mu must be finite");
  LognormFilter f{std::vector<double>(length), mu, sigma};
  double total = 0.0;
  for (std::size_t k = 0; k < length; ++k) {
    const double x = static_cast<double>(k + 1);
    const double z = (std::log(x) - mu) / sigma;
    f.taps[k] = std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(2.0 * std::numbers::pi));
    total += f.taps[k];
  }
  if (!(total > 0.0)) throw Error("lognormal filter underflows to zero for these parameters");
  for (double& h : f.taps) h /= total;
  return f;
}

InfluenceMatrix convolve(const InfluenceMatrix& phi, const LognormFilter& filter) {
  const std::size_t T = phi.checkpoints();
  if (filter.taps.size() > T) {
    throw Error("filter has " + std::to_string(filter.taps.size()) + " taps but the influence matrix has only " +
                std::to_string(T) + " checkpoints");
  }
  InfluenceMatrix out = phi;
  out.convolved = true;
  for (std::size_t i = 0; i < phi.documents(); ++i) {
    const auto in_row = phi.values.row(i);
    auto out_row = out.values.row(i);
    for (std::size_t t = 0; t < T; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < filter.taps.size() && k <= t; ++k) acc += in_row[t - k] * filter.taps[k];
      out_row[t] = acc;
    }
  }
  return out;
}

void write_phi(const InfluenceMatrix& phi, const std::filesystem::path& path) {
  if (phi.doc_ids.size() != phi.documents() || phi.checkpoint_indices.size() != phi.checkpoints()) {
    throw Error("influence matrix labels do not match its shape");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write influence matrix " + path.string());
  out.write(kPhiMagic.data(), kPhiMagic.size());
  put_u32(out, kPhiVersion);
  put_u32(out, (phi.self_term_included ? 1u : 0u) | (phi.convolved ? 2u : 0u));
  put_u32(out, static_cast<std::uint32_t>(phi.documents()));
  put_u32(out, static_cast<std::uint32_t>(phi.checkpoints()));
  for (const auto idx : phi.checkpoint_indices) put_u32(out, idx);
  for (const auto id : phi.doc_ids) put_u64(out, id);
  for (const double v : phi.values.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out.flush()) throw Error("write failed: " + path.string());
}

InfluenceMatrix read_phi(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open influence matrix " + file);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4 || magic != kPhiMagic) throw Error(file + ": bad magic");
  if (const auto v = get_u32(in, file); v != kPhiVersion) throw Error(file + ": version mismatch");
  const auto flags = get_u32(in, file);
  const auto n = get_u32(in, file);
  const auto T = get_u32(in, file);
  if (n == 0 || T == 0) throw Error(file + ": empty influence matrix");

  InfluenceMatrix phi;
  phi.self_term_included = (flags & 1u) != 0;
  phi.convolved = (flags & 2u) != 0;
  phi.values = Matrix<double>(n, T);
  for (std::uint32_t t = 0; t < T; ++t) phi.checkpoint_indices.push_back(get_u32(in, file));
  for (std::uint32_t i = 0; i < n; ++i) phi.doc_ids.push_back(get_u64(in, file));
  for (double& v : phi.values.data()) {
    v = std::bit_cast<double>(get_u64(in, file));
    if (!std::isfinite(v)) throw Error(file + ": non-finite influence value");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw Error(file + ": trailing bytes");
  return phi;
}

void write_phi_table(const InfluenceMatrix& phi, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "doc_id";
  for (const auto idx : phi.checkpoint_indices) out << "\tphi_" << idx;
  out << "\taggregate\n";
  const auto agg = aggregate(phi);
  for (std::size_t i = 0; i < phi.documents(); ++i) {
    out << phi.doc_ids[i];
    for (const double v : phi.values.row(i)) out << '\t' << format_double(v);
    out << '\t' << format_double(agg.values[i]) << '\n';
  }
  if (!out.flush()) throw Error("write failed: " + path.string());
}

}  // namespace ckit
