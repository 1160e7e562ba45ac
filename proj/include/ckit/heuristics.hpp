#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ckit/corpus.hpp"

namespace ckit {

inline constexpr std::size_t kDefaultMattrWindow = 5;

// Moving-average type-token ratio: mean over all length-`window` windows of
// distinct/window. Sequences shorter than the window score their plain TTR.
double mattr(std::span<const std::string> tokens, std::size_t window = kDefaultMattrWindow);

// Frozen unigram model with add-alpha smoothing over the vocabulary plus one
// unknown-token slot:
//   p(w)   = (count(w) + alpha) / (total + alpha * (V + 1))
//   p(unk) = alpha / (total + alpha * (V + 1))
class UnigramModel {
 public:
  static UnigramModel train(const Corpus& corpus, double alpha = 1.0);

  double probability(const std::string& token) const;
  double unknown_probability() const;
  bool known(const std::string& token) const { return counts_.contains(token); }

  std::uint64_t total() const noexcept { return total_; }
  std::size_t vocab_size() const noexcept { return counts_.size(); }
  double alpha() const noexcept { return alpha_; }
  std::uint64_t count(const std::string& token) const;

 private:
  std::map<std::string, std::uint64_t, std::less<>> counts_;
  std::uint64_t total_ = 0;
  double alpha_ = 1.0;
};

// exp(-mean log p(w)). Throws "zero-probability token" when alpha is 0 and a
// token is unseen.
double perplexity(const UnigramModel& model, std::span<const std::string> tokens);

struct HeuristicScore {
  DocId doc_id = 0;
  double mattr = 0.0;
  double perplexity = 0.0;

  friend bool operator==(const HeuristicScore&, const HeuristicScore&) = default;
};

// Scores every document, in corpus order, against a model trained on the
// same corpus.
std::vector<HeuristicScore> score_corpus(const Corpus& corpus, std::size_t window = kDefaultMattrWindow,
                                         double alpha = 1.0, unsigned workers = 1);

// Tab-separated with a "doc_id\tmattr\tperplexity" header line.
void write_score_table(std::span<const HeuristicScore> scores, const std::filesystem::path& path);
std::vector<HeuristicScore> read_score_table(const std::filesystem::path& path);

}  // namespace ckit
