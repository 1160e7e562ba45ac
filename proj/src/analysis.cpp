#include "ckit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ckit/error.hpp"
#include "ckit/segments.hpp"
#include "ckit/text.hpp"

namespace ckit {

namespace {

std::vector<double> smoothed(std::span<const double> row) {
  std::vector<double> out(row.begin(), row.end());
  bool replaced = false;
  for (double& v : out) {
    if (v <= 0.0) {
      v = kJsdEpsilon;
      replaced = true;
    }
  }
  if (replaced) {
    const double total = std::accumulate(out.begin(), out.end(), 0.0);
    for (double& v : out) v /= total;
  }
  return out;
}

double kl(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) s += p[k] * std::log(p[k] / q[k]);
  return s;
}

std::int64_t tie_pairs(std::span<const std::size_t> order, auto&& same) {
  std::int64_t pairs = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= order.size(); ++i) {
    if (i < order.size() && same(order[i - 1], order[i])) {
      ++run;
    } else {
      pairs += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return pairs;
}

// Counts pairs i < j with v[i] > v[j] while merge-sorting v.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t inv = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<std::int64_t>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

CompositionTimeline composition_timeline(const CurriculumManifest& manifest, const Corpus& corpus,
                                         std::size_t n_segments, SegmentBalance balance) {
  std::vector<const Document*> flat;
  for (const auto& epoch : manifest.epochs) {
    for (const auto id : epoch) flat.push_back(&corpus.by_id(id));
  }
  if (flat.empty()) throw Error("composition_timeline: manifest is empty");
  if (n_segments == 0 || n_segments > flat.size()) {
    throw Error("composition_timeline: " + std::to_string(n_segments) + " segments requested for " +
                std::to_string(flat.size()) + " documents");
  }
  std::vector<std::uint64_t> weights(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    weights[i] = balance == SegmentBalance::Words ? flat[i]->word_count() : 1;
  }
  const auto ends = balanced_segment_ends(weights, n_segments);

  CompositionTimeline timeline{Matrix<double>(n_segments, kStageCount, 0.0)};
  std::size_t begin = 0;
  for (std::size_t s = 0; s < n_segments; ++s) {
    auto row = timeline.shares.row(s);
    double total = 0.0;
    for (std::size_t i = begin; i < ends[s]; ++i) {
      const auto w = static_cast<double>(flat[i]->word_count());
      row[stage_index(flat[i]->stage)] += w;
      total += w;
    }
    for (double& v : row) v /= total;
    begin = ends[s];
  }
  return timeline;
}

double jsd_mean(const CompositionTimeline& a, const CompositionTimeline& b) {
  if (a.shares.rows() != b.shares.rows() || a.shares.cols() != b.shares.cols()) {
    throw Error("jsd_mean: timeline shapes differ (" + std::to_string(a.shares.rows()) + "x" +
                std::to_string(a.shares.cols()) + " vs " + std::to_string(b.shares.rows()) + "x" +
                std::to_string(b.shares.cols()) + ")");
  }
  if (a.shares.rows() == 0) throw Error("jsd_mean: empty timelines");
  double total = 0.0;
  for (std::size_t i = 0; i < a.shares.rows(); ++i) {
    const auto p = smoothed(a.shares.row(i));
    const auto q = smoothed(b.shares.row(i));
    total += (kl(p, q) + kl(q, p)) / 2.0;
  }
  return total / static_cast<double>(a.shares.rows());
}

std::optional<double> kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("kendall_tau_b: series lengths differ");
  if (x.empty()) throw Error("kendall_tau_b: empty input");
  const std::size_t n = x.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const std::int64_t ties_x = tie_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const std::int64_t ties_xy =
      tie_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });

  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> scratch(n);
  const std::int64_t swaps = count_inversions(ys, scratch, 0, n);

  // ys is now sorted, so tied y values are adjacent.
  std::vector<std::size_t> ident(n);
  std::iota(ident.begin(), ident.end(), std::size_t{0});
  const std::int64_t ties_y = tie_pairs(ident, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t concordant_minus_discordant = n0 - ties_x - ties_y + ties_xy - 2 * swaps;
  const double denom = std::sqrt(static_cast<double>(n0 - ties_x) * static_cast<double>(n0 - ties_y));
  if (denom == 0.0) return std::nullopt;
  return static_cast<double>(concordant_minus_discordant) / denom;
}

std::optional<double> kendall_tau_b_orders(std::span<const DocId> a, std::span<const DocId> b) {
  const std::size_t n = std::min(a.size(), b.size());
  if (n == 0) throw Error("kendall_tau_b: empty input");
  a = a.first(n);
  b = b.first(n);

  std::unordered_map<DocId, std::size_t> observation;  // doc -> index into ranks
  std::vector<double> rank_a, rank_b;
  const auto add = [&](DocId id) {
    const auto [it, inserted] = observation.emplace(id, rank_a.size());
    if (inserted) {
      rank_a.push_back(static_cast<double>(n));
      rank_b.push_back(static_cast<double>(n));
    }
    return it->second;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = add(a[i]);
    rank_a[k] = std::min(rank_a[k], static_cast<double>(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = add(b[i]);
    rank_b[k] = std::min(rank_b[k], static_cast<double>(i));
  }
  return kendall_tau_b(rank_a, rank_b);
}

std::vector<std::optional<double>> kendall_tau_b_per_epoch(const CurriculumManifest& a, const CurriculumManifest& b) {
  std::vector<std::optional<double>> taus;
  const std::size_t epochs = std::min(a.epochs.size(), b.epochs.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    if (a.epochs[e].empty() || b.epochs[e].empty()) {
      taus.push_back(std::nullopt);
    } else {
      taus.push_back(kendall_tau_b_orders(a.epochs[e], b.epochs[e]));
    }
  }
  return taus;
}

std::vector<double> mid_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mean_rank;
    i = j;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("spearman: series lengths differ");
  if (x.size() < 2) throw Error("spearman: need at least 2 points");
  const auto rx = mid_ranks(x);
  const auto ry = mid_ranks(y);
  const double n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

void validate(const LossSeries& series) {
  if (series.steps.size() != series.losses.size()) throw Error("loss series: steps and losses differ in length");
  if (series.steps.empty()) throw Error("loss series is empty");
  for (std::size_t i = 0; i < series.steps.size(); ++i) {
    if (i > 0 && series.steps[i] <= series.steps[i - 1]) {
      throw Error("loss series: steps not strictly increasing at step " + std::to_string(series.steps[i]));
    }
    if (!(series.losses[i] > 0.0) || !std::isfinite(series.losses[i])) {
      throw Error("non-positive loss at step " + std::to_string(series.steps[i]));
    }
  }
}

std::vector<double> loss_ratio(const LossSeries& series) {
  validate(series);
  std::vector<double> ratio(series.losses.size());
  ratio[0] = 1.0;
  double running_min = series.losses[0];
  for (std::size_t s = 1; s < series.losses.size(); ++s) {
    ratio[s] = series.losses[s] / running_min;
    running_min = std::min(running_min, series.losses[s]);
  }
  return ratio;
}

LossSeries read_loss_log(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream in(path);
  if (!in) throw Error("cannot open loss log " + file);
  LossSeries series;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::string step_text, loss_text;
    if (!(fields >> step_text) || step_text.front() == '#') continue;
    fields >> loss_text;
    const auto step = parse_number<std::int64_t>(step_text);
    const auto loss = parse_number<double>(loss_text);
    if (!step || !loss) {
      if (series.steps.empty() && line_no == 1) continue;  // header
      throw ParseError(file, line_no, "expected 'step loss'");
    }
    series.steps.push_back(*step);
    series.losses.push_back(*loss);
  }
  validate(series);
  return series;
}

}  // namespace ckit
