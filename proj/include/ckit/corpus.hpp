#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ckit {

using DocId = std::uint64_t;

// Source-difficulty stages, easiest (child-directed speech) to hardest
// (written English).
enum class Stage : std::uint8_t { C1 = 0, C2, C3, C4, C5 };
inline constexpr std::size_t kStageCount = 5;
inline constexpr std::array<Stage, kStageCount> kAllStages{Stage::C1, Stage::C2, Stage::C3,
                                                          Stage::C4, Stage::C5};

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view label);
inline std::size_t stage_index(Stage stage) { return static_cast<std::size_t>(stage); }

// Whitespace tokenization: no case folding, punctuation stays attached.
std::vector<std::string> tokenize(std::string_view text);

struct Document {
  DocId doc_id = 0;
  std::string source_name;
  Stage stage = Stage::C1;
  std::vector<std::string> tokens;

  std::size_t word_count() const noexcept { return tokens.size(); }

  friend bool operator==(const Document&, const Document&) = default;
};

// Immutable ordered collection of documents. The document order is the
// identity order every gradient dump and manifest refers to.
class Corpus {
 public:
  // Throws Error on an empty document list, duplicate doc_id or a document
  // without tokens.
  Corpus(std::string name, std::vector<Document> documents);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Document>& documents() const noexcept { return documents_; }
  const Document& operator[](std::size_t i) const { return documents_[i]; }
  std::size_t size() const noexcept { return documents_.size(); }
  std::uint64_t total_words() const noexcept { return total_words_; }
  std::size_t max_document_words() const noexcept { return max_document_words_; }

  std::optional<std::size_t> position_of(DocId id) const;
  const Document& by_id(DocId id) const;  // throws Error for unknown ids
  std::array<std::uint64_t, kStageCount> words_per_stage() const;

  // FNV-1a over (doc_id, stage, word_count) in document order.
  std::uint64_t fingerprint() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.name_ == b.name_ && a.documents_ == b.documents_;
  }

 private:
  std::string name_;
  std::vector<Document> documents_;
  std::unordered_map<DocId, std::size_t> positions_;
  std::uint64_t total_words_ = 0;
  std::size_t max_document_words_ = 0;
};

// Reads the line-delimited corpus manifest described in README.md. Errors
// carry "<path>:<line>:".
Corpus load_corpus(const std::filesystem::path& manifest_path);

// Writes the manifest with inline text records.
void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path);

struct EquitokenResult {
  Corpus corpus;
  std::uint64_t words_dropped = 0;
};

// Concatenates each (source, stage) group's tokens in document order and
// slices them into documents of exactly target_len words. Remainders are
// dropped. Groups appear in order of first occurrence; new doc_ids count up
// from 0.
EquitokenResult synth_equitoken(const Corpus& corpus, std::size_t target_len);

// Per stage, greedily takes documents in seeded-shuffled order until the next
// one would overshoot words_per_stage. Selected documents keep their ids and
// their relative order from the input.
Corpus stratify(const Corpus& corpus, std::uint64_t words_per_stage, std::uint64_t seed);

}  // namespace ckit
