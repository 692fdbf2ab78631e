#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "capvar/corpus.hpp"
#include "capvar/lexstats.hpp"
#include "capvar/ngram.hpp"
#include "capvar/stats.hpp"

namespace capvar {

struct ScorerSpec {
  enum class Kind { Kn, External };
  Kind kind = Kind::Kn;
  int order = 2;
  double discount = 0.1;
  double floor = 1.0;
  std::filesystem::path path;  // External only
  std::string scorer_id;
};

// "kn:ORDER:DISCOUNT[:FLOOR[:ID]]" or "ext:PATH:ID" (PATH has no colon; ID may).
// Throws CONFIG_ERROR.
ScorerSpec parse_scorer_spec(std::string_view text);

struct RunConfig {
  std::filesystem::path dataset_path;
  InputFormat format = InputFormat::Jsonl;
  bool strict = false;
  std::vector<ScorerSpec> scorers;
  std::filesystem::path out_dir;
  ngram::LogBase log_base = ngram::LogBase::Two;
  bool include_eos = true;
  unsigned threads = 1;
  std::string data_tag;  // defaults to the dataset file stem
  std::size_t lex_window = 1000;
};

// Throws CONFIG_ERROR: no scorers, duplicate scorer ids, bad parameters.
void validate(const RunConfig& config);

struct ScorerOutcome {
  std::string scorer_id;
  std::size_t n_records = 0;
  bool complete = true;
  std::size_t n_missing = 0;
  std::size_t n_warnings = 0;
  std::size_t n_skipped_groups = 0;
  PairedTestResult test;
};

struct RunSummary {
  std::string data_tag;
  std::string fingerprint;
  LoadReport load;
  DatasetMetadata metadata;
  std::vector<SourceLexReport> lexstats;
  std::vector<ScorerOutcome> scorers;
};

// load -> lexstats -> each scorer -> per-image variance -> paired test.
// Writes lexstats.tsv, per_model_surprisal.tsv, variance_test.tsv,
// variances.tsv, summary.json and scored/<scorer_id>.jsonl under out_dir.
RunSummary run(const RunConfig& config);

// Runs and maps failures to exit codes (0 ok, 2 config, 3 data, 4 internal),
// writing a JSON error line to `err` and to out_dir/error.json (out_dir is
// created if needed).
int run_with_exit_code(const RunConfig& config, std::ostream& err);

void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

// {"error": CODE, "message": ...} as a single line.
std::string error_json(ErrorCode code, std::string_view message);

}  // namespace capvar
