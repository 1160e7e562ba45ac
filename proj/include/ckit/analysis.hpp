#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ckit/corpus.hpp"
#include "ckit/curricula.hpp"
#include "ckit/matrix.hpp"

namespace ckit {

inline constexpr std::size_t kDefaultTimelineSegments = 1000;
inline constexpr double kJsdEpsilon = 1e-10;

// Stage mix over training time: one row per contiguous segment of the
// flattened curriculum, kStageCount columns of word-weighted shares.
struct CompositionTimeline {
  Matrix<double> shares;

  std::size_t segments() const noexcept { return shares.rows(); }
};

enum class SegmentBalance { Words, Documents };

CompositionTimeline composition_timeline(const CurriculumManifest& manifest, const Corpus& corpus,
                                         std::size_t n_segments = kDefaultTimelineSegments,
                                         SegmentBalance balance = SegmentBalance::Words);

// Mean over segments of the symmetrised KL divergence
//   (KL(p_i || q_i) + KL(q_i || p_i)) / 2, natural log.
// Zero cells are raised to kJsdEpsilon and their row renormalised first.
double jsd_mean(const CompositionTimeline& a, const CompositionTimeline& b);

// Kendall tau-b of paired observations, O(n log n). nullopt when a side is
// constant (the tie-corrected denominator vanishes).
std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Tau-b between two document orders. The longer list is truncated to the
// shorter one's length. Each document in either list is one observation,
// ranked by its first occurrence; a document missing from one list takes
// that list's length as rank (tied last there).
std::optional<double> kendall_tau_b_orders(std::span<const DocId> a, std::span<const DocId> b);

// Epoch-by-epoch tau-b over the common prefix of epochs. Empty epochs give
// nullopt.
std::vector<std::optional<double>> kendall_tau_b_per_epoch(const CurriculumManifest& a, const CurriculumManifest& b);

// Pearson correlation of mid-ranks. nullopt for a constant series.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> mid_ranks(std::span<const double> values);

struct LossSeries {
  std::vector<std::int64_t> steps;  // strictly increasing
  std::vector<double> losses;       // > 0
};

void validate(const LossSeries& series);

// lr(s) = loss(s) / min over earlier steps; the first step is 1.
std::vector<double> loss_ratio(const LossSeries& series);

// Two columns per line (step, loss), whitespace or comma separated. Lines
// starting with '#' and a non-numeric header line are skipped.
LossSeries read_loss_log(const std::filesystem::path& path);

}  // namespace ckit
