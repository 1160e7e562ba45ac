#include "ckit/heuristics.hpp"

#include <cmath>
#include <fstream>
#include <string_view>
#include <unordered_map>

#include "ckit/error.hpp"
#include "ckit/text.hpp"
#include "parallel.hpp"

namespace ckit {

double mattr(std::span<const std::string> tokens, std::size_t window) {
  if (tokens.empty()) throw Error("mattr: empty token sequence");
  if (window == 0) throw Error("mattr: window must be >= 1");

  std::unordered_map<std::string_view, std::size_t> counts;
  if (tokens.size() < window) {
    for (const auto& t : tokens) ++counts[t];
    return static_cast<double>(counts.size()) / static_cast<double>(tokens.size());
  }

  for (std::size_t i = 0; i < window; ++i) ++counts[tokens[i]];
  std::uint64_t distinct_sum = counts.size();
  for (std::size_t i = window; i < tokens.size(); ++i) {
    if (--counts[tokens[i - window]] == 0) counts.erase(tokens[i - window]);
    ++counts[tokens[i]];
    distinct_sum += counts.size();
  }
  const std::size_t windows = tokens.size() - window + 1;
  return static_cast<double>(distinct_sum) / (static_cast<double>(windows) * static_cast<double>(window));
}

UnigramModel UnigramModel::train(const Corpus& corpus, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error("unigram alpha must be finite and >= 0");
  UnigramModel model;
  model.alpha_ = alpha;
  for (const auto& doc : corpus.documents()) {
    for (const auto& tok : doc.tokens) ++model.counts_[tok];
    model.total_ += doc.word_count();
  }
  return model;
}

std::uint64_t UnigramModel::count(const std::string& token) const {
  const auto it = counts_.find(token);
  return it == counts_.end() ? 0 : it->second;
}

double UnigramModel::probability(const std::string& token) const {
  const double denom = static_cast<double>(total_) + alpha_ * static_cast<double>(counts_.size() + 1);
  return (static_cast<double>(count(token)) + alpha_) / denom;
}

double UnigramModel::unknown_probability() const {
  return alpha_ / (static_cast<double>(total_) + alpha_ * static_cast<double>(counts_.size() + 1));
}

double perplexity(const UnigramModel& model, std::span<const std::string> tokens) {
  if (tokens.empty()) throw Error("perplexity: empty token sequence");
  double log_sum = 0.0;
  for (const auto& tok : tokens) {
    const double p = model.probability(tok);
    if (p <= 0.0) throw Error("zero-probability token '" + tok + "'");
    log_sum += std::log(p);
  }
  return std::exp(-log_sum / static_cast<double>(tokens.size()));
}

std::vector<HeuristicScore> score_corpus(const Corpus& corpus, std::size_t window, double alpha, unsigned workers) {
  const auto model = UnigramModel::train(corpus, alpha);
  std::vector<HeuristicScore> scores(corpus.size());
  detail::parallel_for(corpus.size(), workers, [&](std::size_t i) {
    const auto& doc = corpus[i];
    scores[i] = HeuristicScore{doc.doc_id, mattr(doc.tokens, window), perplexity(model, doc.tokens)};
  });
  return scores;
}

void write_score_table(std::span<const HeuristicScore> scores, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "doc_id\tmattr\tperplexity\n";
  for (const auto& s : scores) {
    out << s.doc_id << '\t' << format_double(s.mattr) << '\t' << format_double(s.perplexity) << '\n';
  }
  if (!out.flush()) throw Error("write failed: " + path.string());
}

std::vector<HeuristicScore> read_score_table(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream in(path);
  if (!in) throw Error("cannot open score table " + file);
  std::vector<HeuristicScore> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("doc_id", 0) == 0) continue;
    std::string_view rest(line);
    std::string_view fields[3];
    for (int f = 0; f < 3; ++f) {
      const auto tab = rest.find('\t');
      fields[f] = rest.substr(0, tab);
      rest = tab == std::string_view::npos ? std::string_view{} : rest.substr(tab + 1);
      if (tab == std::string_view::npos && f < 2) throw ParseError(file, line_no, "expected 3 tab-separated fields");
    }
    const auto id = parse_number<DocId>(fields[0]);
    const auto m = parse_number<double>(fields[1]);
    const auto p = parse_number<double>(fields[2]);
    if (!id || !m || !p) throw ParseError(file, line_no, "malformed score row");
    scores.push_back({*id, *m, *p});
  }
  if (scores.empty()) throw Error(file + ": no scores");
  return scores;
}

}  // namespace ckit
