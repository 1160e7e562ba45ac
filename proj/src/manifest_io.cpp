#include <charconv>
#include <fstream>
#include <sstream>

#include "ckit/curricula.hpp"
#include "ckit/error.hpp"
#include "ckit/text.hpp"

namespace ckit {

namespace {

constexpr std::string_view kManifestMagic = "#ckit-manifest 1";

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << v;
  return s.str();
}

std::string join_stages(const std::vector<Stage>& stages) {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ',';
    out += to_string(stages[i]);
  }
  return out;
}

}  // namespace

void write_manifest(const CurriculumManifest& m, const std::filesystem::path& path) {
  if (m.word_counts.size() != m.epochs.size()) throw Error("manifest word_counts do not match its epochs");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write manifest " + path.string());
  const auto& p = m.spec;
  out << kManifestMagic << '\n'
      << "strategy " << m.strategy() << '\n'
      << "seed " << m.seed << '\n'
      << "budget " << m.budget << '\n'
      << "corpus " << hex64(m.corpus_fingerprint) << ' ' << m.corpus_name << '\n'
      << "param epochs " << p.epochs << '\n'
      << "param block_size " << p.block_size << '\n'
      << "param segments " << p.segments << '\n'
      << "param keep_fraction " << format_double(p.keep_fraction) << '\n'
      << "param epochs_per_stage " << p.epochs_per_stage << '\n'
      << "param filter_mu " << format_double(p.filter_mu) << '\n'
      << "param filter_sigma " << format_double(p.filter_sigma) << '\n'
      << "param reshuffle_each_epoch " << (p.reshuffle_each_epoch ? 1 : 0) << '\n'
      << "param alternate_from_high " << (p.alternate_from_high ? 1 : 0) << '\n'
      << "param stage_order " << join_stages(p.stage_order) << '\n'
      << "truncated " << (m.truncated ? 1 : 0) << '\n';
  for (const auto& w : m.warnings) out << "warning " << w << '\n';
  out << "epochs " << m.epochs.size() << '\n';
  for (std::size_t e = 0; e < m.epochs.size(); ++e) {
    out << "epoch " << m.epochs[e].size() << ' ' << m.word_counts[e];
    for (const auto id : m.epochs[e]) out << ' ' << id;
    out << '\n';
  }
  if (!out.flush()) throw Error("write failed: " + path.string());
}

CurriculumManifest read_manifest(const std::filesystem::path& path) {
  const std::string file = path.string();
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + file);

  CurriculumManifest m;
  std::string strategy;
  std::optional<std::size_t> declared_epochs;
  std::string line;
  std::size_t line_no = 0;
  const auto bad = [&](const std::string& what) { return ParseError(file, line_no, what); };

  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != kManifestMagic) throw bad("not a manifest file (expected '" + std::string(kManifestMagic) + "')");
      continue;
    }
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "strategy") {
      fields >> strategy;
      try {
        m.spec.id = parse_strategy(strategy);
      } catch (const Error& e) {
        throw bad(e.what());
      }
    } else if (key == "seed") {
      if (!(fields >> m.seed)) throw bad("bad seed");
    } else if (key == "budget") {
      if (!(fields >> m.budget)) throw bad("bad budget");
    } else if (key == "corpus") {
      std::string hex;
      fields >> hex;
      std::uint64_t fp = 0;
      const auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), fp, 16);
      if (hex.empty() || ec != std::errc{} || ptr != hex.data() + hex.size()) throw bad("bad corpus fingerprint");
      m.corpus_fingerprint = fp;
      std::getline(fields >> std::ws, m.corpus_name);
    } else if (key == "param") {
      std::string name, value;
      fields >> name >> value;
      auto& p = m.spec;
      const auto as_size = [&] {
        const auto v = parse_number<std::size_t>(value);
        if (!v) throw bad("bad value for " + name);
        return *v;
      };
      const auto as_double = [&] {
        const auto v = parse_number<double>(value);
        if (!v) throw bad("bad value for " + name);
        return *v;
      };
      if (name == "epochs") p.epochs = as_size();
      else if (name == "block_size") p.block_size = as_size();
      else if (name == "segments") p.segments = as_size();
      else if (name == "keep_fraction") p.keep_fraction = as_double();
      else if (name == "epochs_per_stage") p.epochs_per_stage = as_size();
      else if (name == "filter_mu") p.filter_mu = as_double();
      else if (name == "filter_sigma") p.filter_sigma = as_double();
      else if (name == "reshuffle_each_epoch") p.reshuffle_each_epoch = as_size() != 0;
      else if (name == "alternate_from_high") p.alternate_from_high = as_size() != 0;
      else if (name == "stage_order") {
        p.stage_order.clear();
        std::istringstream stages(value);
        std::string label;
        while (std::getline(stages, label, ',')) {
          const auto s = parse_stage(label);
          if (!s) throw bad("unknown stage label '" + label + "'");
          p.stage_order.push_back(*s);
        }
      } else {
        throw bad("unknown parameter '" + name + "'");
      }
    } else if (key == "truncated") {
      int t = 0;
      fields >> t;
      m.truncated = t != 0;
    } else if (key == "warning") {
      std::string w;
      std::getline(fields >> std::ws, w);
      m.warnings.push_back(w);
    } else if (key == "epochs") {
      std::size_t n = 0;
      if (!(fields >> n)) throw bad("bad epoch count");
      declared_epochs = n;
    } else if (key == "epoch") {
      std::size_t count = 0;
      std::uint64_t words = 0;
      if (!(fields >> count >> words)) throw bad("bad epoch header");
      std::vector<DocId> ids(count);
      for (auto& id : ids) {
        if (!(fields >> id)) throw bad("epoch lists fewer doc_ids than its length prefix");
      }
      std::string extra;
      if (fields >> extra) throw bad("epoch lists more doc_ids than its length prefix");
      m.epochs.push_back(std::move(ids));
      m.word_counts.push_back(words);
    } else {
      throw bad("unknown record '" + key + "'");
    }
  }
  if (line_no == 0) throw Error(file + ": empty manifest");
  if (strategy.empty()) throw Error(file + ": missing strategy");
  if (declared_epochs && *declared_epochs != m.epochs.size()) {
    throw Error(file + ": declares " + std::to_string(*declared_epochs) + " epochs, found " +
                std::to_string(m.epochs.size()));
  }
  return m;
}

void write_manifest_text(const CurriculumManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t e = 0; e < m.epochs.size(); ++e) {
    out << "# epoch " << e << '\n';
    for (const auto id : m.epochs[e]) out << id << '\n';
  }
  if (!out.flush()) throw Error("write failed: " + path.string());
}

}  // namespace ckit
