#include "ckit/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <utility>

#include "ckit/error.hpp"
#include "ckit/random.hpp"

namespace ckit {

namespace {

constexpr std::string_view kMagicLine = "#ckit-corpus 1";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::vector<std::string_view> split_tabs(std::string_view line, std::size_t max_fields) {
  std::vector<std::string_view> fields;
  while (fields.size() + 1 < max_fields) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) break;
    fields.push_back(line.substr(0, tab));
    line.remove_prefix(tab + 1);
  }
  fields.push_back(line);
  return fields;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::string read_byte_range(const std::filesystem::path& file, std::uint64_t offset, std::uint64_t length,
                            const std::string& manifest, std::size_t line) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError(manifest, line, "cannot open text file " + file.string());
  in.seekg(static_cast<std::streamoff>(offset));
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::uint64_t>(in.gcount()) != length) {
    throw ParseError(manifest, line, "byte range " + std::to_string(offset) + "+" + std::to_string(length) +
                                         " is past the end of " + file.string());
  }
  return text;
}

}  // namespace

std::string_view to_string(Stage stage) {
  static constexpr std::array<std::string_view, kStageCount> names{"C1", "C2", "C3", "C4", "C5"};
  return names[stage_index(stage)];
}

std::optional<Stage> parse_stage(std::string_view label) {
  for (const Stage s : kAllStages) {
    if (to_string(s) == label) return s;
  }
  return std::nullopt;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

Corpus::Corpus(std::string name, std::vector<Document> documents)
    : name_(std::move(name)), documents_(std::move(documents)) {
  if (documents_.empty()) throw Error("empty corpus");
  positions_.reserve(documents_.size());
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const Document& doc = documents_[i];
    if (doc.tokens.empty()) throw Error("document " + std::to_string(doc.doc_id) + " has no words");
    if (!positions_.emplace(doc.doc_id, i).second) {
      throw Error("duplicate doc_id " + std::to_string(doc.doc_id));
    }
    total_words_ += doc.word_count();
    max_document_words_ = std::max(max_document_words_, doc.word_count());
  }
}

std::optional<std::size_t> Corpus::position_of(DocId id) const {
  const auto it = positions_.find(id);
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

const Document& Corpus::by_id(DocId id) const {
  const auto pos = position_of(id);
  if (!pos) throw Error("unknown doc_id " + std::to_string(id));
  return documents_[*pos];
}

std::array<std::uint64_t, kStageCount> Corpus::words_per_stage() const {
  std::array<std::uint64_t, kStageCount> words{};
  for (const auto& doc : documents_) words[stage_index(doc.stage)] += doc.word_count();
  return words;
}

std::uint64_t Corpus::fingerprint() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& doc : documents_) {
    const std::uint64_t fields[3] = {doc.doc_id, stage_index(doc.stage), doc.word_count()};
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(fields), sizeof fields), h);
  }
  return h;
}

Corpus load_corpus(const std::filesystem::path& manifest_path) {
  const std::string file = manifest_path.string();
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot open corpus manifest " + file);

  std::string name = manifest_path.stem().string();
  std::optional<std::uint64_t> declared_docs;
  std::optional<std::uint64_t> declared_words;
  std::vector<Document> docs;
  std::unordered_map<DocId, std::size_t> seen;  // doc_id -> line

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view rest(line);
      rest.remove_prefix(1);
      const auto space = rest.find(' ');
      const std::string_view key = rest.substr(0, space);
      const std::string_view value = space == std::string_view::npos ? std::string_view{} : rest.substr(space + 1);
      if (key == "name") {
        name = std::string(value);
      } else if (key == "documents" || key == "words") {
        const auto n = parse_int<std::uint64_t>(value);
        if (!n) throw ParseError(file, line_no, "bad header count '" + std::string(value) + "'");
        (key == "documents" ? declared_docs : declared_words) = *n;
      } else if (line_no == 1 && line != kMagicLine && key == "ckit-corpus") {
        throw ParseError(file, line_no, "unsupported corpus manifest version '" + std::string(value) + "'");
      }
      continue;  // other '#' lines are comments
    }

    const auto fields = split_tabs(line, 7);
    if (fields.size() < 5) throw ParseError(file, line_no, "malformed record: expected at least 5 tab-separated fields");
    const auto id = parse_int<DocId>(fields[0]);
    if (!id) throw ParseError(file, line_no, "malformed record: bad doc_id '" + std::string(fields[0]) + "'");
    if (fields[1].empty()) throw ParseError(file, line_no, "malformed record: empty source name");
    const auto stage = parse_stage(fields[2]);
    if (!stage) throw ParseError(file, line_no, "unknown stage label '" + std::string(fields[2]) + "'");
    if (const auto it = seen.find(*id); it != seen.end()) {
      throw ParseError(file, line_no,
                       "duplicate doc_id " + std::to_string(*id) + " (first seen on line " + std::to_string(it->second) + ")");
    }
    seen.emplace(*id, line_no);

    std::vector<std::string> tokens;
    if (fields[3] == "text") {
      // Text may itself contain tabs; rejoin everything after the kind field.
      const std::size_t text_start = fields[4].data() - line.data();
      tokens = tokenize(std::string_view(line).substr(text_start));
    } else if (fields[3] == "file") {
      if (fields.size() != 7) throw ParseError(file, line_no, "malformed record: file records need path, offset, length");
      const auto offset = parse_int<std::uint64_t>(fields[5]);
      const auto length = parse_int<std::uint64_t>(fields[6]);
      if (!offset || !length) throw ParseError(file, line_no, "malformed record: bad byte range");
      std::filesystem::path text_path{std::string(fields[4])};
      if (text_path.is_relative()) text_path = manifest_path.parent_path() / text_path;
      tokens = tokenize(read_byte_range(text_path, *offset, *length, file, line_no));
    } else {
      throw ParseError(file, line_no, "malformed record: unknown text kind '" + std::string(fields[3]) + "'");
    }
    if (tokens.empty()) throw ParseError(file, line_no, "document " + std::to_string(*id) + " has no words");
    docs.push_back(Document{*id, std::string(fields[1]), *stage, std::move(tokens)});
  }

  if (docs.empty()) throw Error(file + ": empty corpus");
  Corpus corpus(std::move(name), std::move(docs));
  if (declared_docs && *declared_docs != corpus.size()) {
    throw Error(file + ": header declares " + std::to_string(*declared_docs) + " documents, found " +
                std::to_string(corpus.size()));
  }
  if (declared_words && *declared_words != corpus.total_words()) {
    throw Error(file + ": header declares " + std::to_string(*declared_words) + " words, found " +
                std::to_string(corpus.total_words()));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path) {
  const auto bad = [](std::string_view s) { return s.find_first_of("\t\n\r") != std::string_view::npos; };
  if (bad(corpus.name())) throw Error("corpus name contains a tab or newline");

  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw Error("cannot write corpus manifest " + manifest_path.string());
  out << kMagicLine << '\n'
      << "#name " << corpus.name() << '\n'
      << "#documents " << corpus.size() << '\n'
      << "#words " << corpus.total_words() << '\n';
  for (const auto& doc : corpus.documents()) {
    if (bad(doc.source_name)) throw Error("source name of doc " + std::to_string(doc.doc_id) + " contains a tab or newline");
    out << doc.doc_id << '\t' << doc.source_name << '\t' << to_string(doc.stage) << "\ttext\t";
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) out << ' ';
      out << doc.tokens[i];
    }
    out << '\n';
  }
  if (!out.flush()) throw Error("write failed: " + manifest_path.string());
}

EquitokenResult synth_equitoken(const Corpus& corpus, std::size_t target_len) {
  if (target_len == 0) throw Error("target_len must be >= 1");

  struct Group {
    std::string source;
    Stage stage;
    std::vector<const std::string*> stream;
  };
  std::vector<Group> groups;
  std::map<std::pair<std::string, Stage>, std::size_t> group_of;
  for (const auto& doc : corpus.documents()) {
    const auto key = std::make_pair(doc.source_name, doc.stage);
    auto [it, inserted] = group_of.emplace(key, groups.size());
    if (inserted) groups.push_back(Group{doc.source_name, doc.stage, {}});
    auto& stream = groups[it->second].stream;
    for (const auto& tok : doc.tokens) stream.push_back(&tok);
  }

  std::vector<Document> out;
  std::uint64_t dropped = 0;
  DocId next_id = 0;
  for (const auto& g : groups) {
    const std::size_t full = g.stream.size() / target_len;
    dropped += g.stream.size() % target_len;
    for (std::size_t k = 0; k < full; ++k) {
      Document doc{next_id++, g.source, g.stage, {}};
      doc.tokens.reserve(target_len);
      for (std::size_t j = 0; j < target_len; ++j) doc.tokens.push_back(*g.stream[k * target_len + j]);
      out.push_back(std::move(doc));
    }
  }
  if (out.empty()) {
    throw Error("synth_equitoken: no group has " + std::to_string(target_len) + " words; output would be empty");
  }
  return EquitokenResult{Corpus(corpus.name() + "-equitoken", std::move(out)), dropped};
}

Corpus stratify(const Corpus& corpus, std::uint64_t words_per_stage, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kStageCount> by_stage;
  for (std::size_t i = 0; i < corpus.size(); ++i) by_stage[stage_index(corpus[i].stage)].push_back(i);

  const auto supply = corpus.words_per_stage();
  for (const Stage s : kAllStages) {
    const auto k = stage_index(s);
    if (!by_stage[k].empty() && supply[k] < words_per_stage) {
      throw Error("stratify: stage " + std::string(to_string(s)) + " has " + std::to_string(supply[k]) +
                  " words, " + std::to_string(words_per_stage - supply[k]) + " short of " +
                  std::to_string(words_per_stage));
    }
  }

  std::vector<bool> keep(corpus.size(), false);
  for (const Stage s : kAllStages) {
    auto order = by_stage[stage_index(s)];
    Rng rng(derive_stream_seed(seed, "stratify", stage_index(s)));
    shuffle(std::span(order), rng);
    std::uint64_t taken = 0;
    for (const std::size_t i : order) {
      if (taken + corpus[i].word_count() > words_per_stage) break;
      taken += corpus[i].word_count();
      keep[i] = true;
    }
  }

  std::vector<Document> docs;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (keep[i]) docs.push_back(corpus[i]);
  }
  if (docs.empty()) throw Error("stratify: words_per_stage too small to admit any document");
  return Corpus(corpus.name() + "-stratified", std::move(docs));
}

}  // namespace ckit
