// capvar: surprisal-variance diversity analysis for grouped caption sets.

#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capvar/corpus.hpp"
#include "capvar/error.hpp"
#include "capvar/lexstats.hpp"
#include "capvar/pipeline.hpp"
#include "capvar/reports.hpp"
#include "capvar/scorers.hpp"
#include "capvar/stats.hpp"
#include "capvar/synthetic.hpp"

namespace {

using namespace capvar;

struct DatasetArgs {
  std::string path;
  std::string format = "jsonl";
  bool strict = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--dataset", path, "Caption dataset (JSONL or CSV)")->required();
    cmd->add_option("--format", format, "Input format")->check(CLI::IsMember({"jsonl", "csv"}));
    cmd->add_flag("--strict", strict, "Enforce 5 human + 5 model captions per image");
  }

  LoadedDataset load() const {
    return load_dataset(path, format == "csv" ? InputFormat::Csv : InputFormat::Jsonl, strict);
  }
};

ngram::LogBase parse_log_base(const std::string& s) {
  return s == "e" ? ngram::LogBase::E : ngram::LogBase::Two;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty() || out_path == "-") {
    std::cout << content;
  } else {
    write_text_file(out_path, content);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surprisal-variance diversity analysis for grouped caption sets"};
  app.require_subcommand(1);

  // load-check
  DatasetArgs lc_data;
  auto* load_check = app.add_subcommand("load-check", "Load, clean and tokenize a dataset and report");
  lc_data.add_to(load_check);

  // lexstats
  DatasetArgs lex_data;
  std::string lex_out;
  std::size_t lex_window = 1000;
  auto* lexstats = app.add_subcommand("lexstats", "Lexical statistics per source (TSV)");
  lex_data.add_to(lexstats);
  lexstats->add_option("--out", lex_out, "Output TSV (default stdout)");
  lexstats->add_option("--window", lex_window, "TTR window size")->check(CLI::PositiveNumber);

  // score
  DatasetArgs score_data;
  std::vector<std::string> score_specs;
  std::string score_out;
  std::string score_log_base = "2";
  unsigned score_threads = 1;
  bool score_exclude_eos = false;
  std::string score_cache;
  auto* score = app.add_subcommand("score", "Leave-one-image-out n-gram scoring to interchange JSONL");
  score_data.add_to(score);
  score->add_option("--scorer", score_specs, "kn:ORDER:DISCOUNT[:FLOOR[:ID]]")->required();
  score->add_option("--out", score_out, "Output directory")->required();
  score->add_option("--log-base", score_log_base, "Surprisal log base")->check(CLI::IsMember({"2", "e"}));
  score->add_option("--threads", score_threads, "Worker threads (0 = auto)");
  score->add_flag("--exclude-eos", score_exclude_eos, "Do not score the end-of-caption symbol");
  score->add_option("--count-cache", score_cache, "Binary count-table cache file");

  // variance
  DatasetArgs var_data;
  std::vector<std::string> var_scored;
  std::string var_out;
  auto* var = app.add_subcommand("variance", "Per-image surprisal variance from interchange files");
  var_data.add_to(var);
  var->add_option("--scored", var_scored, "Interchange JSONL file(s)")->required();
  var->add_option("--out", var_out, "Output TSV (default stdout)");

  // ttest
  std::string tt_variances;
  std::string tt_tag = "data";
  std::string tt_out;
  auto* ttest = app.add_subcommand("ttest", "Paired human-vs-model t-test on a variances TSV");
  ttest->add_option("--variances", tt_variances, "TSV written by the variance subcommand")->required();
  ttest->add_option("--data-tag", tt_tag, "Value for the data_tag column");
  ttest->add_option("--out", tt_out, "Output TSV (default stdout)");

  // run
  DatasetArgs run_data;
  std::vector<std::string> run_specs;
  std::string run_out;
  std::string run_log_base = "2";
  unsigned run_threads = 1;
  bool run_exclude_eos = false;
  std::string run_tag;
  std::size_t run_window = 1000;
  auto* run_cmd = app.add_subcommand("run", "Full pipeline: lexstats, scoring, variance, paired test");
  run_data.add_to(run_cmd);
  run_cmd->add_option("--scorer", run_specs, "kn:ORDER:DISCOUNT[:FLOOR[:ID]] or ext:PATH:ID")->required();
  run_cmd->add_option("--out", run_out, "Output directory")->required();
  run_cmd->add_option("--log-base", run_log_base, "Surprisal log base")->check(CLI::IsMember({"2", "e"}));
  run_cmd->add_option("--threads", run_threads, "Worker threads (0 = auto)");
  run_cmd->add_flag("--exclude-eos", run_exclude_eos, "Do not score the end-of-caption symbol");
  run_cmd->add_option("--data-tag", run_tag, "data_tag column value (default: dataset file stem)");
  run_cmd->add_option("--window", run_window, "TTR window size")->check(CLI::PositiveNumber);

  // synth
  SyntheticSpec synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-group dataset (JSONL)");
  synth->add_option("--out", synth_out, "Output JSONL (default stdout)");
  synth->add_option("--images", synth_spec.n_images, "Number of images");
  synth->add_option("--captions-per-group", synth_spec.captions_per_group, "Captions per group per image");
  synth->add_option("--templates", synth_spec.template_pool, "Template pool size");
  synth->add_option("--vocab", synth_spec.vocab_size, "Vocabulary size");
  synth->add_option("--rate", synth_spec.substitution_rate, "Per-token substitution rate for the human group");
  synth->add_option("--min-length", synth_spec.min_length, "Minimum template length");
  synth->add_option("--max-length", synth_spec.max_length, "Maximum template length");
  synth->add_option("--seed", synth_spec.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*run_cmd) {
    RunConfig config;
    config.dataset_path = run_data.path;
    config.format = run_data.format == "csv" ? InputFormat::Csv : InputFormat::Jsonl;
    config.strict = run_data.strict;
    config.out_dir = run_out;
    config.log_base = parse_log_base(run_log_base);
    config.include_eos = !run_exclude_eos;
    config.threads = run_threads;
    config.data_tag = run_tag;
    config.lex_window = run_window;
    try {
      for (const auto& s : run_specs) config.scorers.push_back(parse_scorer_spec(s));
    } catch (const Error& e) {
      std::cerr << error_json(e.code(), e.detail()) << '\n';
      return exit_code_for(e.code());
    }
    return run_with_exit_code(config, std::cerr);
  }

  try {
    if (*load_check) {
      auto loaded = lc_data.load();
      const auto& meta = loaded.dataset.metadata();
      std::cout << loaded.report.summary() << '\n'
                << "images: " << meta.n_images << ", human: " << meta.n_human << ", model: " << meta.n_model << '\n'
                << "fingerprint: " << dataset_fingerprint(loaded.dataset) << '\n';
      for (const auto& d : loaded.report.dropped) {
        std::cout << "dropped line " << d.line << " (" << d.image_id << ", " << d.describer_id << "): " << d.reason
                  << '\n';
      }
    } else if (*lexstats) {
      auto loaded = lex_data.load();
      auto rows = per_source_stats(loaded.dataset, LexOptions{lex_window});
      for (const auto& row : rows)
        for (const auto& w : row.report.warnings) std::cerr << "warning: " << row.source << ": " << w << '\n';
      emit(lex_out, lexstats_tsv(rows));
    } else if (*score) {
      auto loaded = score_data.load();
      std::filesystem::create_directories(score_out);
      std::map<std::string, int> seen;
      for (const auto& text : score_specs) {
        auto spec = parse_scorer_spec(text);
        if (spec.kind != ScorerSpec::Kind::Kn) throw Error(ErrorCode::ConfigError, "score only runs kn scorers");
        if (seen[spec.scorer_id]++) throw Error(ErrorCode::ConfigError, "duplicate scorer_id '" + spec.scorer_id + "'");
        NgramScorerConfig sc;
        sc.scorer_id = spec.scorer_id;
        sc.order = spec.order;
        sc.params = {spec.discount, spec.floor};
        sc.surprisal = {parse_log_base(score_log_base), !score_exclude_eos};
        sc.threads = score_threads;
        if (!score_cache.empty()) sc.count_cache = score_cache + "." + spec.scorer_id;
        auto scored = score_dataset_ngram(loaded.dataset, sc);
        const auto path = std::filesystem::path(score_out) / (spec.scorer_id + ".jsonl");
        write_interchange(scored, path);
        std::cout << spec.scorer_id << ": " << scored.records.size() << " records -> " << path.string() << '\n';
      }
    } else if (*var) {
      auto loaded = var_data.load();
      std::vector<VarianceRecord> all;
      for (const auto& path : var_scored) {
        auto scored = import_external_surprisals(path, loaded.dataset);
        for (const auto& w : scored.warnings) std::cerr << "warning: " << w << '\n';
        if (!scored.complete()) {
          std::cerr << "warning: " << path << " is missing " << scored.missing.size() << " captions\n";
        }
        auto result = group_variance(scored, loaded.dataset);
        for (const auto& s : result.skipped) {
          std::cerr << "skipped " << s.image_id << "/" << group_name(s.group) << ": " << s.n_captions
                    << " scored captions (INSUFFICIENT_CAPTIONS)\n";
        }
        all.insert(all.end(), result.records.begin(), result.records.end());
      }
      emit(var_out, variances_tsv(all));
    } else if (*ttest) {
      auto records = parse_variances_tsv(read_text_file(tt_variances));
      std::map<std::string, VarianceResult> by_scorer;
      for (auto& r : records) by_scorer[r.scorer_id].records.push_back(std::move(r));
      std::vector<VarianceTestRow> rows;
      for (const auto& [scorer, result] : by_scorer) {
        auto paired = pair_by_image(result);
        rows.push_back({scorer, tt_tag, paired_t_test(paired.human, paired.model)});
      }
      emit(tt_out, variance_test_tsv(rows));
    } else if (*synth) {
      emit(synth_out, serialize_dataset(generate_synthetic(synth_spec)));
    }
  } catch (const Error& e) {
    std::cerr << error_json(e.code(), e.detail()) << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << error_json(ErrorCode::Internal, e.what()) << '\n';
    return 4;
  }
  return 0;
}
