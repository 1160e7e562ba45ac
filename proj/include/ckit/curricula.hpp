#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ckit/corpus.hpp"
#include "ckit/heuristics.hpp"
#include "ckit/influence.hpp"
#include "ckit/matrix.hpp"

namespace ckit {

inline constexpr std::uint64_t kDefaultWordBudget = 100'000'000;

enum class Direction { Ascending, Descending };

std::string_view to_string(Direction d);  // "asc" / "desc"
std::optional<Direction> parse_direction(std::string_view s);

// Strategy families. Four of them come in both directions, giving 14
// concrete curricula.
enum class Family {
  Random,                  // C_rand
  Source,                  // C_source
  Mattr,                   // C_MATTR
  Perplexity,              // C_PPL
  Sorted,                  // C_asc / C_desc
  BlockShuffled,           // C_tilde_*
  ConvolvedBlockShuffled,  // Ch_tilde_*
  FilteredTopK,            // C_50
  Cumulative,              // C_E_*
  Alternating,             // C_A
};

// How a strategy's epochs relate to the corpus; selects the validation rules.
enum class Coverage {
  EpochWise,   // every epoch is a permutation of the corpus
  Retained,    // every epoch cycles through a retained subset
  Cumulative,  // epochs partition the corpus
  Staged,      // every epoch is a permutation of one stage
};

struct StrategyId {
  Family family = Family::Random;
  Direction direction = Direction::Ascending;

  friend bool operator==(const StrategyId&, const StrategyId&) = default;
};

bool is_directional(Family f);
Coverage coverage_of(Family f);
bool needs_influence(Family f);
std::string strategy_name(StrategyId id);

// Accepts a full name ("C_E_desc") or a directional family name ("C_E") with
// an explicit direction. Throws Error for unknown names or a missing
// direction.
StrategyId parse_strategy(std::string_view name, std::optional<Direction> direction = std::nullopt);

// All 14 curricula in a fixed order.
std::vector<StrategyId> all_strategies();

struct StrategySpec {
  StrategyId id;
  std::size_t epochs = 10;
  std::size_t block_size = 1000;
  std::size_t segments = 10;
  double keep_fraction = 0.5;
  std::size_t epochs_per_stage = 2;
  double filter_mu = 0.0;
  double filter_sigma = 1.0;
  bool reshuffle_each_epoch = true;  // C_rand: fresh shuffle per pass
  bool alternate_from_high = true;   // C_A: start at the highest-influence segment
  std::vector<Stage> stage_order{kAllStages.begin(), kAllStages.end()};

  static StrategySpec defaults_for(StrategyId id);

  friend bool operator==(const StrategySpec&, const StrategySpec&) = default;
};

// Per-document scores keyed by doc_id, one column per epoch (or a single
// column used for every epoch).
struct ScoreTable {
  std::vector<DocId> doc_ids;
  Matrix<double> values;
};

ScoreTable scores_from(const InfluenceMatrix& phi);
ScoreTable scores_from(const AggregateInfluence& agg);
enum class HeuristicKind { Mattr, Perplexity };
ScoreTable scores_from(std::span<const HeuristicScore> scores, HeuristicKind kind);

struct CurriculumManifest {
  StrategySpec spec;
  std::uint64_t seed = 0;
  std::uint64_t budget = kDefaultWordBudget;
  std::string corpus_name;
  std::uint64_t corpus_fingerprint = 0;
  std::vector<std::vector<DocId>> epochs;
  std::vector<std::uint64_t> word_counts;  // per epoch
  bool truncated = false;
  std::vector<std::string> warnings;

  std::string strategy() const { return strategy_name(spec.id); }
  std::uint64_t total_words() const;
  std::size_t total_documents() const;

  friend bool operator==(const CurriculumManifest&, const CurriculumManifest&) = default;
};

// Each epoch an independent seeded shuffle of the corpus (or one shuffle
// reused when spec.reshuffle_each_epoch is false).
CurriculumManifest build_random(const Corpus& corpus, const StrategySpec& spec, std::uint64_t seed,
                                std::uint64_t budget = kDefaultWordBudget);

// Epoch t sorted by score column t (or the only column), ties by doc_id
// ascending. Backs C_asc/C_desc, C_MATTR and C_PPL.
CurriculumManifest build_sorted(const Corpus& corpus, const ScoreTable& scores, const StrategySpec& spec,
                                std::uint64_t seed, std::uint64_t budget = kDefaultWordBudget);

// build_sorted, then a seeded shuffle inside consecutive blocks of
// spec.block_size documents.
CurriculumManifest build_block_shuffled(const Corpus& corpus, const ScoreTable& scores, const StrategySpec& spec,
                                        std::uint64_t seed, std::uint64_t budget = kDefaultWordBudget);

// Epoch t keeps the top ceil(keep_fraction * |D|) documents by influence
// column t, shuffles them once, and cycles through them until the epoch has
// at least as many words as the corpus.
CurriculumManifest build_filtered_topk(const Corpus& corpus, const InfluenceMatrix& phi, const StrategySpec& spec,
                                       std::uint64_t seed, std::uint64_t budget = kDefaultWordBudget);

// Sorts by aggregate influence, splits into spec.segments word-balanced
// contiguous segments, and emits one shuffled segment per epoch.
CurriculumManifest build_cumulative_segments(const Corpus& corpus, const AggregateInfluence& agg,
                                             const StrategySpec& spec, std::uint64_t seed,
                                             std::uint64_t budget = kDefaultWordBudget);

// Segment visit order for C_A over m ascending segments (0-based):
// m-1, 0, m-2, 1, ... when starting high; 0, m-1, 1, m-2, ... otherwise.
std::vector<std::size_t> alternating_order(std::size_t segments, bool start_high = true);

// Ascending aggregate-influence segments visited in alternating order every
// epoch, each segment freshly shuffled per epoch.
CurriculumManifest build_alternating(const Corpus& corpus, const AggregateInfluence& agg, const StrategySpec& spec,
                                     std::uint64_t seed, std::uint64_t budget = kDefaultWordBudget);

// epochs_per_stage shuffled epochs of each stage in spec.stage_order. Stages
// with no documents still get (empty) epochs, with a warning.
CurriculumManifest build_source_stages(const Corpus& corpus, const StrategySpec& spec, std::uint64_t seed,
                                       std::uint64_t budget = kDefaultWordBudget);

// Cuts the manifest after the last whole document that fits in max_words;
// later epochs are dropped.
CurriculumManifest enforce_budget(CurriculumManifest manifest, std::uint64_t max_words, const Corpus& corpus);

struct CurriculumInputs {
  const InfluenceMatrix* phi = nullptr;
  const std::vector<HeuristicScore>* heuristics = nullptr;
};

// Dispatches on spec.id.family. Throws Error when a required input is absent.
CurriculumManifest build_curriculum(const Corpus& corpus, const StrategySpec& spec, const CurriculumInputs& inputs,
                                    std::uint64_t seed, std::uint64_t budget = kDefaultWordBudget);

struct Violation {
  std::optional<std::size_t> epoch;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  std::string to_string() const;
};

// Checks every manifest invariant for the strategy's coverage class. With phi
// given, C_50 epochs are also checked against the top-k set of each column.
ValidationReport validate_manifest(const CurriculumManifest& manifest, const Corpus& corpus,
                                   const InfluenceMatrix* phi = nullptr);

void write_manifest(const CurriculumManifest& manifest, const std::filesystem::path& path);
CurriculumManifest read_manifest(const std::filesystem::path& path);

// One doc_id per line with "# epoch k" separators.
void write_manifest_text(const CurriculumManifest& manifest, const std::filesystem::path& path);

}  // namespace ckit
