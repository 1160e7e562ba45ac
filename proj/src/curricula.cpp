#include "ckit/curricula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ckit/error.hpp"
#include "ckit/random.hpp"
#include "ckit/segments.hpp"

namespace ckit {

namespace {

struct FamilyInfo {
  Family family;
  std::string_view name;
  bool directional;
  Coverage coverage;
  bool influence;
  Direction default_direction;
};

constexpr FamilyInfo kFamilies[] = {
    {Family::Random, "C_rand", false, Coverage::EpochWise, false, Direction::Ascending},
    {Family::Source, "C_source", false, Coverage::Staged, false, Direction::Ascending},
    {Family::Mattr, "C_MATTR", false, Coverage::EpochWise, false, Direction::Ascending},
    {Family::Perplexity, "C_PPL", false, Coverage::EpochWise, false, Direction::Ascending},
    {Family::Sorted, "C", true, Coverage::EpochWise, true, Direction::Descending},
    {Family::BlockShuffled, "C_tilde", true, Coverage::EpochWise, true, Direction::Descending},
    {Family::ConvolvedBlockShuffled, "Ch_tilde", true, Coverage::EpochWise, true, Direction::Descending},
    {Family::FilteredTopK, "C_50", false, Coverage::Retained, true, Direction::Descending},
    {Family::Cumulative, "C_E", true, Coverage::Cumulative, true, Direction::Descending},
    {Family::Alternating, "C_A", false, Coverage::EpochWise, true, Direction::Ascending},
};

const FamilyInfo& info(Family f) {
  for (const auto& fi : kFamilies) {
    if (fi.family == f) return fi;
  }
  throw Error("unknown strategy family");
}

std::vector<double> aligned_column(const Corpus& corpus, const ScoreTable& table, std::size_t column) {
  std::unordered_map<DocId, std::size_t> row_of;
  row_of.reserve(table.doc_ids.size());
  for (std::size_t r = 0; r < table.doc_ids.size(); ++r) row_of.emplace(table.doc_ids[r], r);
  std::vector<double> out(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto it = row_of.find(corpus[i].doc_id);
    if (it == row_of.end()) throw Error("missing score for doc_id " + std::to_string(corpus[i].doc_id));
    out[i] = table.values(it->second, column);
    if (!std::isfinite(out[i])) throw Error("non-finite score for doc_id " + std::to_string(corpus[i].doc_id));
  }
  return out;
}

void check_table(const ScoreTable& table) {
  if (table.values.rows() != table.doc_ids.size() || table.values.cols() == 0) {
    throw Error("score table shape does not match its doc_ids");
  }
}

// Column used for epoch t: the only column of a static table, else column t.
std::size_t column_for_epoch(const ScoreTable& table, std::size_t epoch, std::size_t epochs) {
  if (table.values.cols() == 1) return 0;
  if (table.values.cols() < epochs) {
    throw Error("score table has " + std::to_string(table.values.cols()) + " columns but " + std::to_string(epochs) +
                " epochs were requested");
  }
  return epoch;
}

// Corpus positions ordered by score in `direction`, ties by doc_id ascending.
std::vector<std::size_t> sort_positions(const Corpus& corpus, std::span<const double> scores, Direction direction) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return direction == Direction::Ascending ? scores[a] < scores[b] : scores[a] > scores[b];
    return corpus[a].doc_id < corpus[b].doc_id;
  });
  return order;
}

std::vector<DocId> ids_of(const Corpus& corpus, std::span<const std::size_t> positions) {
  std::vector<DocId> ids;
  ids.reserve(positions.size());
  for (const auto p : positions) ids.push_back(corpus[p].doc_id);
  return ids;
}

Rng epoch_rng(std::uint64_t seed, const StrategySpec& spec, std::size_t epoch) {
  return Rng(derive_stream_seed(seed, strategy_name(spec.id), epoch));
}

CurriculumManifest start(const Corpus& corpus, const StrategySpec& spec, std::uint64_t seed, std::uint64_t budget) {
  CurriculumManifest m;
  m.spec = spec;
  m.seed = seed;
  m.budget = budget;
  m.corpus_name = corpus.name();
  m.corpus_fingerprint = corpus.fingerprint();
  return m;
}

std::vector<std::uint64_t> epoch_words(const CurriculumManifest& m, const Corpus& corpus) {
  std::vector<std::uint64_t> words;
  words.reserve(m.epochs.size());
  for (const auto& epoch : m.epochs) {
    std::uint64_t w = 0;
    for (const auto id : epoch) w += corpus.by_id(id).word_count();
    words.push_back(w);
  }
  return words;
}

CurriculumManifest finish(CurriculumManifest m, const Corpus& corpus) {
  m.word_counts = epoch_words(m, corpus);
  const auto budget = m.budget;
  return enforce_budget(std::move(m), budget, corpus);
}

void check_epochs(const StrategySpec& spec) {
  if (spec.epochs == 0) throw Error("epochs must be >= 1");
}

// Sorted aggregate order split into word-balanced contiguous segments.
std::vector<std::vector<std::size_t>> influence_segments(const Corpus& corpus, const AggregateInfluence& agg,
                                                         std::size_t m, Direction direction) {
  if (m == 0) throw Error("segment count must be >= 1");
  if (m > corpus.size()) {
    throw Error("segment count " + std::to_string(m) + " exceeds corpus size " + std::to_string(corpus.size()));
  }
  const auto table = scores_from(agg);
  const auto scores = aligned_column(corpus, table, 0);
  const auto order = sort_positions(corpus, scores, direction);
  std::vector<std::uint64_t> weights(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) weights[i] = corpus[order[i]].word_count();
  const auto ends = balanced_segment_ends(weights, m);
  std::vector<std::vector<std::size_t>> segments;
  std::size_t begin = 0;
  for (const auto end : ends) {
    segments.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
    begin = end;
  }
  return segments;
}

std::size_t retained_count(double keep_fraction, std::size_t n) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw Error("keep_fraction must be in (0, 1]");
  const double exact = keep_fraction * static_cast<double>(n);
  // Absorb representation error so that e.g. 0.3 * 10 keeps 3, not 4.
  const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::clamp<std::size_t>(k, 1, n);
}

// Positions of the top-k documents of one influence column, best first.
std::vector<std::size_t> top_k(const Corpus& corpus, const InfluenceMatrix& phi, std::size_t column, std::size_t k) {
  const auto scores = aligned_column(corpus, scores_from(phi), column);
  auto order = sort_positions(corpus, scores, Direction::Descending);
  order.resize(k);
  return order;
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::Ascending ? "asc" : "desc"; }

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "asc" || s == "ascending") return Direction::Ascending;
  if (s == "desc" || s == "descending") return Direction::Descending;
  return std::nullopt;
}

bool is_directional(Family f) { return info(f).directional; }
Coverage coverage_of(Family f) { return info(f).coverage; }
bool needs_influence(Family f) { return info(f).influence; }

std::string strategy_name(StrategyId id) {
  const auto& fi = info(id.family);
  std::string name(fi.name);
  if (fi.directional) {
    name += '_';
    name += to_string(id.direction);
  }
  return name;
}

StrategyId parse_strategy(std::string_view name, std::optional<Direction> direction) {
  for (const auto& fi : kFamilies) {
    if (fi.name == name) {
      if (fi.directional && !direction) {
        throw Error("strategy " + std::string(name) + " needs a direction (asc or desc)");
      }
      return StrategyId{fi.family, fi.directional ? *direction : fi.default_direction};
    }
  }
  for (const auto& fi : kFamilies) {
    if (!fi.directional) continue;
    for (const Direction d : {Direction::Ascending, Direction::Descending}) {
      if (strategy_name({fi.family, d}) == name) {
        if (direction && *direction != d) {
          throw Error("strategy " + std::string(name) + " conflicts with direction " + std::string(to_string(*direction)));
        }
        return StrategyId{fi.family, d};
      }
    }
  }
  throw Error("unknown strategy '" + std::string(name) + "'");
}

std::vector<StrategyId> all_strategies() {
  std::vector<StrategyId> out;
  for (const auto& fi : kFamilies) {
    if (fi.directional) {
      out.push_back({fi.family, Direction::Descending});
      out.push_back({fi.family, Direction::Ascending});
    } else {
      out.push_back({fi.family, fi.default_direction});
    }
  }
  return out;
}

StrategySpec StrategySpec::defaults_for(StrategyId id) {
  StrategySpec spec;
  spec.id = id;
  return spec;
}

ScoreTable scores_from(const InfluenceMatrix& phi) { return ScoreTable{phi.doc_ids, phi.values}; }

ScoreTable scores_from(const AggregateInfluence& agg) {
  ScoreTable t{agg.doc_ids, Matrix<double>(agg.values.size(), 1)};
  for (std::size_t i = 0; i < agg.values.size(); ++i) t.values(i, 0) = agg.values[i];
  return t;
}

ScoreTable scores_from(std::span<const HeuristicScore> scores, HeuristicKind kind) {
  ScoreTable t{{}, Matrix<double>(scores.size(), 1)};
  for (std::size_t i = 0; i < scores.size(); ++i) {
    t.doc_ids.push_back(scores[i].doc_id);
    t.values(i, 0) = kind == HeuristicKind::Mattr ? scores[i].mattr : scores[i].perplexity;
  }
  return t;
}

std::uint64_t CurriculumManifest::total_words() const {
  return std::accumulate(word_counts.begin(), word_counts.end(), std::uint64_t{0});
}

std::size_t CurriculumManifest::total_documents() const {
  std::size_t n = 0;
  for (const auto& e : epochs) n += e.size();
  return n;
}

CurriculumManifest build_random(const Corpus& corpus, const StrategySpec& spec, std::uint64_t seed,
                                std::uint64_t budget) {
  check_epochs(spec);
  auto m = start(corpus, spec, seed, budget);
  std::vector<DocId> canonical;
  for (const auto& doc : corpus.documents()) canonical.push_back(doc.doc_id);
  for (std::size_t e = 0; e < spec.epochs; ++e) {
    auto ids = canonical;
    auto rng = epoch_rng(seed, spec, spec.reshuffle_each_epoch ? e : 0);
    shuffle(std::span(ids), rng);
    m.epochs.push_back(std::move(ids));
  }
  return finish(std::move(m), corpus);
}

CurriculumManifest build_sorted(const Corpus& corpus, const ScoreTable& scores, const StrategySpec& spec,
                                std::uint64_t seed, std::uint64_t budget) {
  check_epochs(spec);
  check_table(scores);
  auto m = start(corpus, spec, seed, budget);
  for (std::size_t e = 0; e < spec.epochs; ++e) {
    const auto column = aligned_column(corpus, scores, column_for_epoch(scores, e, spec.epochs));
    m.epochs.push_back(ids_of(corpus, sort_positions(corpus, column, spec.id.direction)));
  }
  return finish(std::move(m), corpus);
}

CurriculumManifest build_block_shuffled(const Corpus& corpus, const ScoreTable& scores, const StrategySpec& spec,
                                        std::uint64_t seed, std::uint64_t budget) {
  check_epochs(spec);
  check_table(scores);
  if (spec.block_size == 0) throw Error("block_size must be >= 1");
  auto m = start(corpus, spec, seed, budget);
  for (std::size_t e = 0; e < spec.epochs; ++e) {
    const auto column = aligned_column(corpus, scores, column_for_epoch(scores, e, spec.epochs));
    auto ids = ids_of(corpus, sort_positions(corpus, column, spec.id.direction));
    auto rng = epoch_rng(seed, spec, e);
    for (std::size_t begin = 0; begin < ids.size(); begin += spec.block_size) {
      const std::size_t len = std::min(spec.block_size, ids.size() - begin);
      shuffle(std::span(ids).subspan(begin, len), rng);
    }
    m.epochs.push_back(std::move(ids));
  }
  return finish(std::move(m), corpus);
}

CurriculumManifest build_filtered_topk(const Corpus& corpus, const InfluenceMatrix& phi, const StrategySpec& spec,
                                       std::uint64_t seed, std::uint64_t budget) {
  check_epochs(spec);
  if (phi.checkpoints() < spec.epochs) {
    throw Error("influence matrix has " + std::to_string(phi.checkpoints()) + " checkpoints but " +
                std::to_string(spec.epochs) + " epochs were requested");
  }
  const std::size_t k = retained_count(spec.keep_fraction, corpus.size());
  auto m = start(corpus, spec, seed, budget);
  const std::uint64_t target = corpus.total_words();
  for (std::size_t e = 0; e < spec.epochs; ++e) {
    auto retained = ids_of(corpus, top_k(corpus, phi, e, k));
    if (retained.empty()) throw Error("retained set is empty");
    auto rng = epoch_rng(seed, spec, e);
    shuffle(std::span(retained), rng);
    std::vector<DocId> epoch;
    std::uint64_t words = 0;
    for (std::size_t i = 0; words < target; ++i) {
      const DocId id = retained[i % retained.size()];
      epoch.push_back(id);
      words += corpus.by_id(id).word_count();
    }
    m.epochs.push_back(std::move(epoch));
  }
  return finish(std::move(m), corpus);
}

CurriculumManifest build_cumulative_segments(const Corpus& corpus, const AggregateInfluence& agg,
                                             const StrategySpec& spec, std::uint64_t seed, std::uint64_t budget) {
  const auto segments = influence_segments(corpus, agg, spec.segments, spec.id.direction);
  auto m = start(corpus, spec, seed, budget);
  for (std::size_t e = 0; e < segments.size(); ++e) {
    auto ids = ids_of(corpus, segments[e]);
    auto rng = epoch_rng(seed, spec, e);
    shuffle(std::span(ids), rng);
    m.epochs.push_back(std::move(ids));
  }
  return finish(std::move(m), corpus);
}

std::vector<std::size_t> alternating_order(std::size_t segments, bool start_high) {
  std::vector<std::size_t> order;
  if (segments == 0) return order;
  std::size_t lo = 0;
  std::size_t hi = segments - 1;
  bool take_high = start_high;
  while (order.size() < segments) {
    order.push_back(take_high ? hi-- : lo++);
    take_high = !take_high;
  }
  return order;
}

CurriculumManifest build_alternating(const Corpus& corpus, const AggregateInfluence& agg, const StrategySpec& spec,
                                     std::uint64_t seed, std::uint64_t budget) {
  check_epochs(spec);
  const auto segments = influence_segments(corpus, agg, spec.segments, Direction::Ascending);
  const auto order = alternating_order(segments.size(), spec.alternate_from_high);
  auto m = start(corpus, spec, seed, budget);
  for (std::size_t e = 0; e < spec.epochs; ++e) {
    auto rng = epoch_rng(seed, spec, e);
    std::vector<DocId> epoch;
    epoch.reserve(corpus.size());
    for (const auto s : order) {
      auto ids = ids_of(corpus, segments[s]);
      shuffle(std::span(ids), rng);
      epoch.insert(epoch.end(), ids.begin(), ids.end());
    }
    m.epochs.push_back(std::move(epoch));
  }
  return finish(std::move(m), corpus);
}

CurriculumManifest build_source_stages(const Corpus& corpus, const StrategySpec& spec, std::uint64_t seed,
                                       std::uint64_t budget) {
  if (spec.epochs_per_stage == 0) throw Error("epochs_per_stage must be >= 1");
  std::array<bool, kStageCount> listed{};
  for (const Stage s : spec.stage_order) {
    if (listed[stage_index(s)]) throw Error("stage " + std::string(to_string(s)) + " listed twice in stage order");
    listed[stage_index(s)] = true;
  }
  std::array<std::vector<DocId>, kStageCount> by_stage;
  for (const auto& doc : corpus.documents()) by_stage[stage_index(doc.stage)].push_back(doc.doc_id);
  for (const Stage s : kAllStages) {
    if (!by_stage[stage_index(s)].empty() && !listed[stage_index(s)]) {
      throw Error("stage " + std::string(to_string(s)) + " is in the corpus but missing from the stage order");
    }
  }

  auto m = start(corpus, spec, seed, budget);
  std::size_t e = 0;
  for (const Stage s : spec.stage_order) {
    const auto& docs = by_stage[stage_index(s)];
    if (docs.empty()) {
      m.warnings.push_back("stage " + std::string(to_string(s)) + " has no documents; its " +
                           std::to_string(spec.epochs_per_stage) + " epochs are empty");
    }
    for (std::size_t k = 0; k < spec.epochs_per_stage; ++k, ++e) {
      auto ids = docs;
      auto rng = epoch_rng(seed, spec, e);
      shuffle(std::span(ids), rng);
      m.epochs.push_back(std::move(ids));
    }
  }
  return finish(std::move(m), corpus);
}

CurriculumManifest enforce_budget(CurriculumManifest manifest, std::uint64_t max_words, const Corpus& corpus) {
  manifest.budget = max_words;
  std::uint64_t used = 0;
  for (std::size_t e = 0; e < manifest.epochs.size(); ++e) {
    auto& epoch = manifest.epochs[e];
    for (std::size_t i = 0; i < epoch.size(); ++i) {
      const auto w = corpus.by_id(epoch[i]).word_count();
      if (used + w > max_words) {
        epoch.resize(i);
        manifest.epochs.resize(i == 0 ? e : e + 1);
        manifest.truncated = true;
        manifest.word_counts = epoch_words(manifest, corpus);
        return manifest;
      }
      used += w;
    }
  }
  manifest.word_counts = epoch_words(manifest, corpus);
  return manifest;
}

CurriculumManifest build_curriculum(const Corpus& corpus, const StrategySpec& spec, const CurriculumInputs& inputs,
                                    std::uint64_t seed, std::uint64_t budget) {
  const auto name = strategy_name(spec.id);
  if (needs_influence(spec.id.family) && inputs.phi == nullptr) {
    throw Error("strategy " + name + " needs an influence matrix");
  }
  if ((spec.id.family == Family::Mattr || spec.id.family == Family::Perplexity) && inputs.heuristics == nullptr) {
    throw Error("strategy " + name + " needs a heuristic score table");
  }
  switch (spec.id.family) {
    case Family::Random:
      return build_random(corpus, spec, seed, budget);
    case Family::Source:
      return build_source_stages(corpus, spec, seed, budget);
    case Family::Mattr:
      return build_sorted(corpus, scores_from(*inputs.heuristics, HeuristicKind::Mattr), spec, seed, budget);
    case Family::Perplexity:
      return build_sorted(corpus, scores_from(*inputs.heuristics, HeuristicKind::Perplexity), spec, seed, budget);
    case Family::Sorted:
      return build_sorted(corpus, scores_from(*inputs.phi), spec, seed, budget);
    case Family::BlockShuffled:
      return build_block_shuffled(corpus, scores_from(*inputs.phi), spec, seed, budget);
    case Family::ConvolvedBlockShuffled: {
      const auto filter = make_lognorm_filter(inputs.phi->checkpoints(), spec.filter_mu, spec.filter_sigma);
      return build_block_shuffled(corpus, scores_from(convolve(*inputs.phi, filter)), spec, seed, budget);
    }
    case Family::FilteredTopK:
      return build_filtered_topk(corpus, *inputs.phi, spec, seed, budget);
    case Family::Cumulative:
      return build_cumulative_segments(corpus, aggregate(*inputs.phi), spec, seed, budget);
    case Family::Alternating:
      return build_alternating(corpus, aggregate(*inputs.phi), spec, seed, budget);
  }
  throw Error("unhandled strategy " + name);
}

std::string ValidationReport::to_string() const {
  if (violations.empty()) return "ok\n";
  std::ostringstream out;
  for (const auto& v : violations) {
    if (v.epoch && !v.message.starts_with("epoch ")) out << "epoch " << *v.epoch << ": ";
    out << v.message << '\n';
  }
  return out.str();
}

ValidationReport validate_manifest(const CurriculumManifest& manifest, const Corpus& corpus,
                                   const InfluenceMatrix* phi) {
  ValidationReport report;
  const auto fail = [&](std::optional<std::size_t> epoch, std::string msg) {
    report.violations.push_back({epoch, std::move(msg)});
  };
  const auto& spec = manifest.spec;
  const std::size_t n_epochs = manifest.epochs.size();

  if (manifest.corpus_fingerprint != corpus.fingerprint()) fail(std::nullopt, "manifest was built for a different corpus");
  if (manifest.word_counts.size() != n_epochs) fail(std::nullopt, "word_counts has wrong length");

  // Per-epoch existence and word accounting.
  bool ids_ok = true;
  for (std::size_t e = 0; e < n_epochs; ++e) {
    std::uint64_t words = 0;
    for (const auto id : manifest.epochs[e]) {
      if (const auto pos = corpus.position_of(id)) {
        words += corpus[*pos].word_count();
      } else {
        ids_ok = false;
        fail(e, "unknown doc_id " + std::to_string(id));
      }
    }
    if (e < manifest.word_counts.size() && manifest.word_counts[e] != words) {
      fail(e, "recorded word count " + std::to_string(manifest.word_counts[e]) + " but documents hold " +
                  std::to_string(words));
    }
  }
  if (manifest.total_words() > manifest.budget) {
    fail(std::nullopt, "budget exceeded: " + std::to_string(manifest.total_words()) + " > " +
                           std::to_string(manifest.budget));
  }
  if (!ids_ok) return report;

  const auto coverage = coverage_of(spec.id.family);
  std::size_t expected_epochs = spec.epochs;
  if (coverage == Coverage::Cumulative) expected_epochs = spec.segments;
  if (coverage == Coverage::Staged) expected_epochs = spec.stage_order.size() * spec.epochs_per_stage;
  if (manifest.truncated ? n_epochs > expected_epochs : n_epochs != expected_epochs) {
    fail(std::nullopt, "expected " + std::to_string(expected_epochs) + " epochs, found " + std::to_string(n_epochs));
  }

  const auto is_partial = [&](std::size_t e) { return manifest.truncated && e + 1 == n_epochs; };

  // True iff `epoch` holds each id of `members` exactly once and nothing else;
  // with `partial`, a duplicate-free subset also passes.
  const auto permutation_of = [](const std::vector<DocId>& epoch, std::vector<DocId> members, bool partial) {
    std::vector<DocId> sorted = epoch;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
    std::sort(members.begin(), members.end());
    if (partial) return std::includes(members.begin(), members.end(), sorted.begin(), sorted.end());
    return sorted == members;
  };

  std::vector<DocId> all_ids;
  for (const auto& doc : corpus.documents()) all_ids.push_back(doc.doc_id);

  switch (coverage) {
    case Coverage::EpochWise:
      for (std::size_t e = 0; e < n_epochs; ++e) {
        if (!permutation_of(manifest.epochs[e], all_ids, is_partial(e))) fail(e, "epoch " + std::to_string(e) + " not a permutation");
      }
      break;

    case Coverage::Staged: {
      const std::size_t per = std::max<std::size_t>(1, spec.epochs_per_stage);
      for (std::size_t e = 0; e < n_epochs; ++e) {
        if (e / per >= spec.stage_order.size()) break;
        const Stage stage = spec.stage_order[e / per];
        std::vector<DocId> members;
        for (const auto& doc : corpus.documents()) {
          if (doc.stage == stage) members.push_back(doc.doc_id);
        }
        for (const auto id : manifest.epochs[e]) {
          if (corpus.by_id(id).stage != stage) {
            fail(e, "doc_id " + std::to_string(id) + " is not in stage " + std::string(to_string(stage)));
          }
        }
        if (!permutation_of(manifest.epochs[e], members, is_partial(e))) {
          fail(e, "epoch " + std::to_string(e) + " not a permutation of stage " + std::string(to_string(stage)));
        }
      }
      break;
    }

    case Coverage::Cumulative: {
      std::vector<DocId> seen;
      for (const auto& epoch : manifest.epochs) seen.insert(seen.end(), epoch.begin(), epoch.end());
      std::sort(seen.begin(), seen.end());
      const bool disjoint = std::adjacent_find(seen.begin(), seen.end()) == seen.end();
      const bool covers = manifest.truncated || seen.size() == all_ids.size();
      if (!disjoint || !covers) fail(std::nullopt, "partition violated");
      for (std::size_t e = 0; e < n_epochs; ++e) {
        if (manifest.epochs[e].empty() && !is_partial(e)) fail(e, "empty segment");
      }
      break;
    }

    case Coverage::Retained: {
      std::size_t k = 0;
      try {
        k = retained_count(spec.keep_fraction, corpus.size());
      } catch (const Error& err) {
        fail(std::nullopt, err.what());
        break;
      }
      const std::uint64_t target = corpus.total_words();
      for (std::size_t e = 0; e < n_epochs; ++e) {
        const auto& epoch = manifest.epochs[e];
        std::unordered_map<DocId, std::size_t> counts;
        for (const auto id : epoch) ++counts[id];
        if (is_partial(e)) {
          if (counts.size() > k) fail(e, "more distinct documents than the retained set allows");
          continue;
        }
        if (counts.size() != k) {
          fail(e, "epoch " + std::to_string(e) + " uses " + std::to_string(counts.size()) + " distinct documents, expected " +
                      std::to_string(k));
        }
        std::size_t lo = epoch.size();
        std::size_t hi = 0;
        for (const auto& [id, c] : counts) {
          lo = std::min(lo, c);
          hi = std::max(hi, c);
        }
        if (!counts.empty() && hi - lo > 1) fail(e, "retained documents not cycled evenly");
        const auto words = manifest.word_counts[e];
        if (words < target || words >= target + corpus.max_document_words()) {
          fail(e, "epoch " + std::to_string(e) + " shows " + std::to_string(words) + " words, outside [" +
                      std::to_string(target) + ", " + std::to_string(target + corpus.max_document_words()) + ")");
        }
        if (phi != nullptr && e < phi->checkpoints()) {
          std::vector<DocId> expected = ids_of(corpus, top_k(corpus, *phi, e, k));
          std::sort(expected.begin(), expected.end());
          for (const auto& [id, c] : counts) {
            if (!std::binary_search(expected.begin(), expected.end(), id)) {
              fail(e, "doc_id " + std::to_string(id) + " is not in the retained top " + std::to_string(k));
            }
          }
        }
      }
      break;
    }
  }
  return report;
}

}  // namespace ckit
