#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ckit/analysis.hpp"
#include "ckit/corpus.hpp"
#include "ckit/curricula.hpp"
#include "ckit/error.hpp"
#include "ckit/gradstore.hpp"
#include "ckit/heuristics.hpp"
#include "ckit/influence.hpp"
#include "ckit/plot.hpp"
#include "ckit/text.hpp"
#include "json.hpp"
#include "json_config.hpp"

namespace ckit::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kOutDirEnv = "CKIT_OUT_DIR";

struct Parser {
  std::unique_ptr<CLI::App> app;
  std::vector<std::pair<CLI::App*, std::string>> commands;  // leaf subcommands
  std::map<const CLI::App*, std::string> write_config;      // --write-config targets
};

// --config itself lives on the root app (CLI11 only reads config files
// there); the subcommand lets it fall through.
void add_config_options(CLI::App* sub, Parser& p) {
  sub->config_formatter(std::make_shared<JsonConfig>());
  sub->fallthrough();
  sub->footer("Settings can also come from --config FILE (JSON from --write-config); flags given on the\n"
              "command line win over the file.");
  sub->add_option("--write-config", p.write_config[sub], "Write the effective settings as JSON to this file");
}

void add_out_dir(CLI::App* sub, PipelineConfig& c) {
  sub->add_option("--out", c.output_dir, "Output directory")->envname(kOutDirEnv);
}

void add_reduction_options(CLI::App* sub, PipelineConfig& c) {
  sub->add_option("--chunk-rows", c.chunk_rows, "Rows per reduction chunk (fixes the summation order)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

std::unique_ptr<Parser> make_parser(PipelineConfig& c) {
  auto p = std::make_unique<Parser>();
  p->app = std::make_unique<CLI::App>("Influence-based curriculum compiler and analyzer", "ckit");
  auto& app = *p->app;
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "Read subcommand settings from a JSON file written by --write-config");

  // corpus
  auto* corpus = app.add_subcommand("corpus", "Load, equalize or stratify a corpus manifest");
  corpus->require_subcommand(1);
  corpus->fallthrough();
  auto* load = corpus->add_subcommand("load", "Validate a corpus manifest and print its summary");
  load->add_option("--corpus", c.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  load->add_option("--out-file", c.output_file, "Re-write the corpus with inline text to this path");
  add_config_options(load, *p);
  p->commands.emplace_back(load, "corpus load");

  auto* equi = corpus->add_subcommand("synth-equitoken", "Rebuild the corpus as fixed-length documents");
  equi->add_option("--corpus", c.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  equi->add_option("--target-len", c.target_len, "Words per synthetic document")->check(CLI::PositiveNumber);
  equi->add_option("--out-file", c.output_file, "Output corpus manifest")->required();
  add_config_options(equi, *p);
  p->commands.emplace_back(equi, "corpus synth-equitoken");

  auto* strat = corpus->add_subcommand("stratify", "Sample an equal number of words per stage");
  strat->add_option("--corpus", c.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  strat->add_option("--words-per-stage", c.words_per_stage, "Word budget per stage")->required()->check(CLI::PositiveNumber);
  strat->add_option("--seed", c.seed, "Sampling seed");
  strat->add_option("--out-file", c.output_file, "Output corpus manifest")->required();
  add_config_options(strat, *p);
  p->commands.emplace_back(strat, "corpus stratify");

  // scores
  auto* scores = app.add_subcommand("scores", "Score documents by MATTR and unigram perplexity");
  scores->add_option("--corpus", c.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  scores->add_option("--window", c.window, "MATTR window length")->check(CLI::PositiveNumber);
  scores->add_option("--alpha", c.alpha, "Add-alpha smoothing of the unigram model")->check(CLI::NonNegativeNumber);
  scores->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
  add_out_dir(scores, c);
  add_config_options(scores, *p);
  p->commands.emplace_back(scores, "scores");

  // influence
  auto* infl = app.add_subcommand("influence", "Compute the influence matrix from gradient dumps");
  infl->add_option("--corpus", c.corpus, "Corpus manifest the dumps were extracted from")->required()->check(CLI::ExistingFile);
  infl->add_option("--dumps", c.dumps, "Directory of *.gdmp checkpoint dumps")->required()->check(CLI::ExistingDirectory);
  infl->add_flag("--exclude-self", c.exclude_self, "Average over the other documents only");
  infl->add_option("--filter", c.filter, "Also write a convolved matrix with this filter")->check(CLI::IsMember({"", "lognorm"}));
  infl->add_option("--mu", c.mu, "Lognormal filter mu");
  infl->add_option("--sigma", c.sigma, "Lognormal filter sigma")->check(CLI::PositiveNumber);
  infl->add_option("--eta", c.eta, "Per-checkpoint weights, comma separated (default all 1)")->delimiter(',');
  add_reduction_options(infl, c);
  add_out_dir(infl, c);
  add_config_options(infl, *p);
  p->commands.emplace_back(infl, "influence");

  // build
  auto* build = app.add_subcommand("build", "Compile curriculum manifests");
  build->add_option("--corpus", c.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  auto* strategy = build->add_option("--strategy", c.strategy, "Strategy name, e.g. C_rand, C_E (with --direction) or C_E_desc");
  auto* all = build->add_flag("--all", c.all, "Build all 14 strategies with the shared seed");
  strategy->excludes(all);
  build->add_option("--direction", c.direction, "Sort direction for directional strategies")->check(CLI::IsMember({"", "asc", "desc"}));
  build->add_option("--seed", c.seed, "Seed for every shuffle");
  build->add_option("--budget", c.budget, "Maximum words shown over the whole curriculum");
  build->add_option("--phi", c.phi, "Influence matrix (phi.bin) for influence strategies")->check(CLI::ExistingFile);
  build->add_option("--scores", c.scores, "Heuristic score table for C_MATTR / C_PPL")->check(CLI::ExistingFile);
  build->add_option("--epochs", c.epochs, "Epochs for epoch-wise strategies")->check(CLI::PositiveNumber);
  build->add_option("--block-size", c.block_size, "Shuffle block size for C_tilde / Ch_tilde")->check(CLI::PositiveNumber);
  build->add_option("--segments", c.segments, "Segments for C_E / C_A")->check(CLI::PositiveNumber);
  build->add_option("--keep-fraction", c.keep_fraction, "Fraction kept by C_50")->check(CLI::Range(0.0, 1.0));
  build->add_option("--epochs-per-stage", c.epochs_per_stage, "Epochs per stage for C_source")->check(CLI::PositiveNumber);
  build->add_option("--mu", c.mu, "Lognormal filter mu for Ch_tilde");
  build->add_option("--sigma", c.sigma, "Lognormal filter sigma for Ch_tilde")->check(CLI::PositiveNumber);
  build->add_flag("--single-shuffle", c.single_shuffle, "C_rand: reuse one shuffle for every pass");
  build->add_flag("--alternate-from-low", c.alternate_from_low, "C_A: start at the lowest-influence segment");
  build->add_option("--stage-order", c.stage_order, "C_source stage order, comma separated");
  add_out_dir(build, c);
  add_config_options(build, *p);
  p->commands.emplace_back(build, "build");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Compare curricula and training logs");
  analyze->add_option("--corpus", c.corpus, "Corpus manifest")->required()->check(CLI::ExistingFile);
  analyze->add_option("--manifest", c.manifests, "Curriculum manifest (repeatable)")->check(CLI::ExistingFile);
  analyze->add_option("--loss", c.loss_logs, "Loss log with 'step loss' lines (repeatable)")->check(CLI::ExistingFile);
  analyze->add_flag("--jsd", c.jsd, "Pairwise mean Jensen-Shannon divergence of stage mixes");
  analyze->add_flag("--tau", c.tau, "Pairwise per-epoch Kendall tau-b");
  analyze->add_flag("--composition", c.composition, "Stage composition timelines");
  analyze->add_option("--segments", c.n_segments, "Timeline segments")->check(CLI::PositiveNumber);
  analyze->add_flag("--count-balanced", c.count_balanced, "Balance segments by document count instead of words");
  add_out_dir(analyze, c);
  add_config_options(analyze, *p);
  p->commands.emplace_back(analyze, "analyze");

  // plot
  auto* plot = app.add_subcommand("plot", "Render report.json as SVG charts");
  plot->add_option("--report", c.report, "report.json written by analyze")->required()->check(CLI::ExistingFile);
  add_out_dir(plot, c);
  add_config_options(plot, *p);
  p->commands.emplace_back(plot, "plot");

  return p;
}

// Parses args, handles --write-config, returns the chosen leaf command.
std::string parse_into(Parser& p, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  p.app->parse(reversed);
  for (const auto& [sub, name] : p.commands) {
    if (!sub->parsed()) continue;
    const auto& target = p.write_config[sub];
    if (!target.empty()) {
      std::ofstream out(target, std::ios::trunc);
      if (!out) throw Error("cannot write config " + target);
      out << sub->config_to_str(true, false);
    }
    return name;
  }
  throw Error("no subcommand given");
}

fs::path out_path(const PipelineConfig& c, const std::string& file) {
  fs::create_directories(c.output_dir);
  return fs::path(c.output_dir) / file;
}

std::string stage_words(const Corpus& corpus) {
  std::ostringstream s;
  const auto words = corpus.words_per_stage();
  for (const Stage st : kAllStages) s << ' ' << to_string(st) << '=' << words[stage_index(st)];
  return s.str();
}

void print_corpus(const Corpus& corpus) {
  std::cout << "corpus " << corpus.name() << ": " << corpus.size() << " documents, " << corpus.total_words()
            << " words, longest " << corpus.max_document_words() << "\nwords per stage:" << stage_words(corpus)
            << '\n';
}

int cmd_corpus_load(const PipelineConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  print_corpus(corpus);
  if (!c.output_file.empty()) save_corpus(corpus, c.output_file);
  return 0;
}

int cmd_synth_equitoken(const PipelineConfig& c) {
  const auto result = synth_equitoken(load_corpus(c.corpus), c.target_len);
  save_corpus(result.corpus, c.output_file);
  print_corpus(result.corpus);
  std::cout << "dropped " << result.words_dropped << " words\n";
  return 0;
}

int cmd_stratify(const PipelineConfig& c) {
  const auto out = stratify(load_corpus(c.corpus), c.words_per_stage, c.seed);
  save_corpus(out, c.output_file);
  print_corpus(out);
  return 0;
}

int cmd_scores(const PipelineConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  const auto scores = score_corpus(corpus, c.window, c.alpha, c.threads);
  const auto path = out_path(c, "scores.tsv");
  write_score_table(scores, path);
  std::cout << "scored " << scores.size() << " documents -> " << path.string() << '\n';
  return 0;
}

void write_aggregate(const AggregateInfluence& agg, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << "doc_id\taggregate\n";
  for (std::size_t i = 0; i < agg.values.size(); ++i) out << agg.doc_ids[i] << '\t' << format_double(agg.values[i]) << '\n';
}

int cmd_influence(const PipelineConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  const auto set = load_checkpoint_set(c.dumps, c.eta);
  for (const auto& ck : set.checkpoints) check_alignment(ck, corpus);

  const auto phi = influence_matrix(set, !c.exclude_self, ReductionOptions{c.chunk_rows, c.threads});
  write_phi(phi, out_path(c, "phi.bin"));
  write_phi_table(phi, out_path(c, "phi.tsv"));
  write_aggregate(aggregate(phi), out_path(c, "aggregate.tsv"));

  const auto values = phi.values.data();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::cout << "influence matrix: " << phi.documents() << " documents x " << phi.checkpoints() << " checkpoints ("
            << (phi.self_term_included ? "self term included" : "self term excluded") << ")\n"
            << "  min " << format_double(*lo) << "  mean " << format_double(mean) << "  max " << format_double(*hi)
            << '\n';
  for (std::size_t t = 0; t < phi.checkpoints(); ++t) {
    if (phi.zero_rows[t] > 0) {
      std::cout << "  warning: checkpoint " << phi.checkpoint_indices[t] << " has " << phi.zero_rows[t]
                << " zero gradient rows\n";
    }
  }
  if (c.filter == "lognorm") {
    const auto filter = make_lognorm_filter(phi.checkpoints(), c.mu, c.sigma);
    const auto conv = convolve(phi, filter);
    write_phi(conv, out_path(c, "phi_conv.bin"));
    write_phi_table(conv, out_path(c, "phi_conv.tsv"));
    std::cout << "  convolved with lognormal(mu=" << format_double(c.mu) << ", sigma=" << format_double(c.sigma)
              << ") -> phi_conv.bin\n";
  }
  return 0;
}

std::vector<Stage> parse_stage_order(const std::string& text) {
  std::vector<Stage> stages;
  std::istringstream in(text);
  std::string label;
  while (std::getline(in, label, ',')) {
    const auto s = parse_stage(label);
    if (!s) throw Error("unknown stage '" + label + "' in --stage-order");
    stages.push_back(*s);
  }
  if (stages.empty()) throw Error("--stage-order is empty");
  return stages;
}

int cmd_build(const PipelineConfig& c) {
  if (c.strategy.empty() && !c.all) throw Error("build needs --strategy or --all");
  const auto corpus = load_corpus(c.corpus);
  std::optional<InfluenceMatrix> phi;
  if (!c.phi.empty()) phi = read_phi(c.phi);
  std::optional<std::vector<HeuristicScore>> heuristics;
  if (!c.scores.empty()) heuristics = read_score_table(c.scores);

  std::vector<StrategyId> ids;
  if (c.all) {
    ids = all_strategies();
  } else {
    std::optional<Direction> dir;
    if (!c.direction.empty()) dir = parse_direction(c.direction);
    ids.push_back(parse_strategy(c.strategy, dir));
  }

  const CurriculumInputs inputs{phi ? &*phi : nullptr, heuristics ? &*heuristics : nullptr};
  bool all_valid = true;
  for (const auto id : ids) {
    auto spec = StrategySpec::defaults_for(id);
    spec.epochs = c.epochs;
    spec.block_size = c.block_size;
    spec.segments = c.segments;
    spec.keep_fraction = c.keep_fraction;
    spec.epochs_per_stage = c.epochs_per_stage;
    spec.filter_mu = c.mu;
    spec.filter_sigma = c.sigma;
    spec.reshuffle_each_epoch = !c.single_shuffle;
    spec.alternate_from_high = !c.alternate_from_low;
    spec.stage_order = parse_stage_order(c.stage_order);

    const auto manifest = build_curriculum(corpus, spec, inputs, c.seed, c.budget);
    const auto report = validate_manifest(manifest, corpus, phi ? &*phi : nullptr);
    const auto name = manifest.strategy();
    write_manifest(manifest, out_path(c, name + ".manifest"));
    write_manifest_text(manifest, out_path(c, name + ".txt"));
    {
      std::ofstream v(out_path(c, name + ".validation.txt"), std::ios::trunc);
      v << report.to_string();
    }
    std::cout << name << ": " << manifest.epochs.size() << " epochs, " << manifest.total_words() << " words"
              << (manifest.truncated ? " (truncated by budget)" : "") << ", "
              << (report.ok() ? "valid" : std::to_string(report.violations.size()) + " violations") << '\n';
    for (const auto& w : manifest.warnings) std::cout << "  warning: " << w << '\n';
    if (!report.ok()) {
      all_valid = false;
      std::cerr << report.to_string();
    }
  }
  return all_valid ? 0 : 1;
}

std::vector<std::string> unique_labels(const std::vector<std::string>& paths) {
  std::vector<std::string> labels;
  std::map<std::string, int> seen;
  for (const auto& p : paths) {
    std::string label = fs::path(p).stem().string();
    if (const int n = seen[label]++; n > 0) label += "#" + std::to_string(n + 1);
    labels.push_back(label);
  }
  return labels;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

int cmd_analyze(const PipelineConfig& c) {
  const auto corpus = load_corpus(c.corpus);
  std::vector<CurriculumManifest> manifests;
  for (const auto& path : c.manifests) {
    auto m = read_manifest(path);
    if (m.corpus_fingerprint != corpus.fingerprint()) {
      throw Error(path + ": manifest was built for corpus '" + m.corpus_name + "', not '" + corpus.name() + "'");
    }
    manifests.push_back(std::move(m));
  }
  if (manifests.empty() && c.loss_logs.empty()) throw Error("analyze needs at least one --manifest or --loss");
  const auto labels = unique_labels(c.manifests);

  const bool any = c.jsd || c.tau || c.composition;
  const bool do_composition = any ? (c.composition || c.jsd) : !manifests.empty();
  const bool do_jsd = any ? c.jsd : !manifests.empty();
  const bool do_tau = any ? c.tau : manifests.size() >= 2;
  if (do_tau && manifests.size() < 2) throw Error("--tau needs at least two manifests");

  json report;
  report["corpus"] = corpus.name();
  report["manifests"] = labels;

  std::vector<CompositionTimeline> timelines;
  if (do_composition) {
    const auto balance = c.count_balanced ? SegmentBalance::Documents : SegmentBalance::Words;
    report["segments"] = c.n_segments;
    report["segment_balance"] = c.count_balanced ? "documents" : "words";
    json comp = json::object();
    for (std::size_t i = 0; i < manifests.size(); ++i) {
      try {
        timelines.push_back(composition_timeline(manifests[i], corpus, c.n_segments, balance));
      } catch (const Error& e) {
        throw Error(c.manifests[i] + ": " + e.what());
      }
      std::ofstream t(out_path(c, "composition_" + labels[i] + ".tsv"), std::ios::trunc);
      t << "segment";
      for (const Stage s : kAllStages) t << '\t' << to_string(s);
      t << '\n';
      json rows = json::array();
      for (std::size_t s = 0; s < timelines.back().segments(); ++s) {
        const auto row = timelines.back().shares.row(s);
        t << s;
        for (const double v : row) t << '\t' << format_double(v);
        t << '\n';
        rows.push_back(std::vector<double>(row.begin(), row.end()));
      }
      comp[labels[i]] = std::move(rows);
    }
    report["composition"] = std::move(comp);
  }

  if (do_jsd) {
    const std::size_t n = timelines.size();
    Matrix<double> jsd(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) jsd(i, j) = jsd(j, i) = jsd_mean(timelines[i], timelines[j]);
    }
    std::ofstream t(out_path(c, "jsd.tsv"), std::ios::trunc);
    t << "curriculum";
    for (const auto& l : labels) t << '\t' << l;
    t << '\n';
    json matrix = json::array();
    for (std::size_t i = 0; i < n; ++i) {
      t << labels[i];
      for (std::size_t j = 0; j < n; ++j) t << '\t' << format_double(jsd(i, j));
      t << '\n';
      const auto row = jsd.row(i);
      matrix.push_back(std::vector<double>(row.begin(), row.end()));
    }
    report["jsd"] = {{"labels", labels}, {"matrix", std::move(matrix)}};
    std::cout << "jsd: " << n << "x" << n << " matrix -> jsd.tsv\n";
  }

  if (do_tau) {
    json pairs = json::array();
    std::ofstream t(out_path(c, "tau.tsv"), std::ios::trunc);
    t << "a\tb\tepoch\ttau_b\n";
    for (std::size_t i = 0; i < manifests.size(); ++i) {
      for (std::size_t j = i + 1; j < manifests.size(); ++j) {
        const auto taus = kendall_tau_b_per_epoch(manifests[i], manifests[j]);
        json per_epoch = json::array();
        double sum = 0.0;
        std::size_t defined = 0;
        for (std::size_t e = 0; e < taus.size(); ++e) {
          per_epoch.push_back(optional_number(taus[e]));
          t << labels[i] << '\t' << labels[j] << '\t' << e << '\t' << (taus[e] ? format_double(*taus[e]) : "undefined")
            << '\n';
          if (taus[e]) {
            sum += *taus[e];
            ++defined;
          }
        }
        const std::optional<double> mean = defined ? std::optional(sum / static_cast<double>(defined)) : std::nullopt;
        pairs.push_back({{"a", labels[i]}, {"b", labels[j]}, {"per_epoch", std::move(per_epoch)},
                         {"mean", optional_number(mean)}});
        std::cout << "tau_b " << labels[i] << " vs " << labels[j] << ": mean "
                  << (mean ? format_double(*mean) : "undefined") << " over " << taus.size() << " epochs\n";
      }
    }
    report["tau"] = std::move(pairs);
  }

  if (!c.loss_logs.empty()) {
    const auto loss_labels = unique_labels(c.loss_logs);
    json losses = json::object();
    for (std::size_t i = 0; i < c.loss_logs.size(); ++i) {
      const auto series = read_loss_log(c.loss_logs[i]);
      const auto ratio = loss_ratio(series);
      std::ofstream t(out_path(c, "loss_ratio_" + loss_labels[i] + ".tsv"), std::ios::trunc);
      t << "step\tloss\tloss_ratio\n";
      for (std::size_t s = 0; s < ratio.size(); ++s) {
        t << series.steps[s] << '\t' << format_double(series.losses[s]) << '\t' << format_double(ratio[s]) << '\n';
      }
      losses[loss_labels[i]] = {{"steps", series.steps}, {"loss", series.losses}, {"ratio", ratio}};
      std::cout << "loss ratio " << loss_labels[i] << ": max " << format_double(*std::max_element(ratio.begin(), ratio.end()))
                << '\n';
    }
    report["loss_ratio"] = std::move(losses);
  }

  std::ofstream out(out_path(c, "report.json"), std::ios::trunc);
  out << report.dump(2) << '\n';
  if (!out.flush()) throw Error("cannot write report.json");
  return 0;
}

int cmd_plot(const PipelineConfig& c) {
  std::ifstream in(c.report);
  json report;
  try {
    in >> report;
  } catch (const json::exception& e) {
    throw Error(c.report + ": " + e.what());
  }
  std::size_t charts = 0;
  if (report.contains("composition")) {
    for (const auto& [label, rows] : report["composition"].items()) {
      CompositionTimeline t{Matrix<double>(rows.size(), kStageCount)};
      for (std::size_t s = 0; s < rows.size(); ++s) {
        for (std::size_t k = 0; k < kStageCount; ++k) t.shares(s, k) = rows[s].at(k).get<double>();
      }
      write_composition_svg(t, "Stage composition: " + label, out_path(c, "composition_" + label + ".svg"));
      ++charts;
    }
  }
  if (report.contains("jsd")) {
    const auto labels = report["jsd"]["labels"].get<std::vector<std::string>>();
    Matrix<double> m(labels.size(), labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = 0; j < labels.size(); ++j) m(i, j) = report["jsd"]["matrix"][i][j].get<double>();
    }
    write_heat_table_svg(labels, m, "Mean Jensen-Shannon divergence", out_path(c, "jsd.svg"));
    ++charts;
  }
  if (report.contains("loss_ratio")) {
    std::vector<LineSeries> loss, ratio;
    for (const auto& [label, s] : report["loss_ratio"].items()) {
      std::vector<double> steps;
      for (const auto& v : s["steps"]) steps.push_back(v.get<double>());
      loss.push_back({label, steps, s["loss"].get<std::vector<double>>()});
      ratio.push_back({label, steps, s["ratio"].get<std::vector<double>>()});
    }
    write_line_chart_svg(loss, "Training loss", out_path(c, "loss.svg"));
    write_line_chart_svg(ratio, "Loss ratio", out_path(c, "loss_ratio.svg"));
    charts += 2;
  }
  std::cout << "wrote " << charts << " charts to " << c.output_dir << '\n';
  return 0;
}

}  // namespace

Invocation parse(const std::vector<std::string>& args) {
  Invocation inv;
  auto parser = make_parser(inv.config);
  inv.command = parse_into(*parser, args);
  return inv;
}

int run(const std::vector<std::string>& args) {
  PipelineConfig config;
  auto parser = make_parser(config);
  std::string command;
  try {
    command = parse_into(*parser, args);
  } catch (const CLI::ParseError& e) {
    return parser->app->exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (command == "corpus load") return cmd_corpus_load(config);
    if (command == "corpus synth-equitoken") return cmd_synth_equitoken(config);
    if (command == "corpus stratify") return cmd_stratify(config);
    if (command == "scores") return cmd_scores(config);
    if (command == "influence") return cmd_influence(config);
    if (command == "build") return cmd_build(config);
    if (command == "analyze") return cmd_analyze(config);
    if (command == "plot") return cmd_plot(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  std::cerr << "error: unknown command " << command << '\n';
  return 2;
}

}  // namespace ckit::cli
