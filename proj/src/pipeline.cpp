#include "capvar/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "capvar/error.hpp"
#include "capvar/reports.hpp"
#include "capvar/scorers.hpp"

namespace capvar {

namespace {

using nlohmann::json;

double parse_number(std::string_view text, std::string_view what) {
  std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end) throw Error(ErrorCode::ConfigError, "bad " + std::string(what) + " '" + s + "'");
  return v;
}

json test_json(const PairedTestResult& r) {
  return json{{"n_pairs", r.n_pairs},         {"df", r.df},
              {"mean_h", r.mean_h},           {"sd_h", r.sd_h},
              {"mean_m", r.mean_m},           {"sd_m", r.sd_m},
              {"mean_diff", r.mean_diff},     {"t", r.t_value},
              {"p_two_sided", r.p_two_sided}, {"p_stars", p_stars(r.p_two_sided)},
              {"cohens_dz", r.cohens_dz},     {"zero_variance", r.zero_variance}};
}

}  // namespace

ScorerSpec parse_scorer_spec(std::string_view text) {
  ScorerSpec spec;
  if (text.starts_with("kn:")) {
    std::vector<std::string_view> parts;
    std::size_t pos = 3;
    while (true) {
      std::size_t c = text.find(':', pos);
      parts.push_back(text.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    if (parts.size() < 2 || parts.size() > 4) {
      throw Error(ErrorCode::ConfigError, "expected kn:ORDER:DISCOUNT[:FLOOR[:ID]], got '" + std::string(text) + "'");
    }
    spec.kind = ScorerSpec::Kind::Kn;
    const double order = parse_number(parts[0], "order");
    if (order != 2.0 && order != 3.0) throw Error(ErrorCode::ConfigError, "kn order must be 2 or 3");
    spec.order = static_cast<int>(order);
    spec.discount = parse_number(parts[1], "discount");
    if (parts.size() >= 3) spec.floor = parse_number(parts[2], "floor");
    if (!(spec.discount > 0.0 && spec.discount < 1.0)) throw Error(ErrorCode::ConfigError, "discount must lie in (0,1)");
    if (!(spec.floor >= 0.0)) throw Error(ErrorCode::ConfigError, "floor must be >= 0");
    spec.scorer_id = parts.size() == 4 ? std::string(parts[3]) : "kn" + std::to_string(spec.order);
    return spec;
  }
  if (text.starts_with("ext:")) {
    std::string_view rest = text.substr(4);
    // The id may itself contain ':' (e.g. ext:gpt2), so the path ends at the
    // first colon.
    std::size_t c = rest.find(':');
    if (c == std::string_view::npos || c == 0 || c + 1 == rest.size()) {
      throw Error(ErrorCode::ConfigError, "expected ext:PATH:ID, got '" + std::string(text) + "'");
    }
    spec.kind = ScorerSpec::Kind::External;
    spec.path = std::string(rest.substr(0, c));
    spec.scorer_id = std::string(rest.substr(c + 1));
    return spec;
  }
  throw Error(ErrorCode::ConfigError, "unknown scorer spec '" + std::string(text) + "'");
}

void validate(const RunConfig& config) {
  if (config.dataset_path.empty()) throw Error(ErrorCode::ConfigError, "no dataset given");
  if (config.out_dir.empty()) throw Error(ErrorCode::ConfigError, "no output directory given");
  if (config.scorers.empty()) throw Error(ErrorCode::ConfigError, "at least one scorer is required");
  if (config.lex_window == 0) throw Error(ErrorCode::ConfigError, "lexstats window must be positive");
  std::set<std::string> ids;
  for (const auto& s : config.scorers) {
    if (s.scorer_id.empty()) throw Error(ErrorCode::ConfigError, "empty scorer_id");
    if (s.scorer_id.find_first_of("/\\\t\n") != std::string::npos) {
      throw Error(ErrorCode::ConfigError, "scorer_id '" + s.scorer_id + "' contains a path separator or tab");
    }
    if (!ids.insert(s.scorer_id).second) throw Error(ErrorCode::ConfigError, "duplicate scorer_id '" + s.scorer_id + "'");
    if (s.kind == ScorerSpec::Kind::Kn) {
      if (s.order != 2 && s.order != 3) throw Error(ErrorCode::ConfigError, "kn order must be 2 or 3");
      if (!(s.discount > 0.0 && s.discount < 1.0)) throw Error(ErrorCode::ConfigError, "discount must lie in (0,1)");
      if (!(s.floor >= 0.0)) throw Error(ErrorCode::ConfigError, "floor must be >= 0");
    } else if (s.path.empty()) {
      throw Error(ErrorCode::ConfigError, "external scorer '" + s.scorer_id + "' has no path");
    }
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_json(ErrorCode code, std::string_view message) {
  return json{{"error", std::string(error_code_name(code))}, {"message", std::string(message)}}.dump();
}

RunSummary run(const RunConfig& config) {
  validate(config);
  auto loaded = load_dataset(config.dataset_path, config.format, config.strict);
  const Dataset& dataset = loaded.dataset;
  if (dataset.n_captions() == 0) throw Error(ErrorCode::EmptyInput, "dataset has no usable captions");

  std::filesystem::create_directories(config.out_dir / "scored");

  RunSummary summary;
  summary.data_tag = config.data_tag.empty() ? config.dataset_path.stem().string() : config.data_tag;
  summary.fingerprint = dataset_fingerprint(dataset);
  summary.load = loaded.report;
  summary.metadata = dataset.metadata();
  summary.lexstats = per_source_stats(dataset, LexOptions{config.lex_window});
  write_text_file(config.out_dir / "lexstats.tsv", lexstats_tsv(summary.lexstats));

  std::vector<VarianceTestRow> test_rows;
  std::vector<DescriberRow> describer_rows;
  std::vector<VarianceRecord> all_variances;

  for (const auto& spec : config.scorers) {
    ScoredDataset scored;
    if (spec.kind == ScorerSpec::Kind::Kn) {
      NgramScorerConfig sc;
      sc.scorer_id = spec.scorer_id;
      sc.order = spec.order;
      sc.params = {spec.discount, spec.floor};
      sc.surprisal = {config.log_base, config.include_eos};
      sc.threads = config.threads;
      scored = score_dataset_ngram(dataset, sc);
    } else {
      scored = import_external_surprisals(spec.path, dataset, spec.scorer_id);
      if (config.log_base == ngram::LogBase::E) {
        for (auto& r : scored.records) {
          for (auto& s : r.per_token_surprisal) s *= std::numbers::ln2;
          r.mean_surprisal = arithmetic_mean(r.per_token_surprisal);
        }
        scored.unit = ngram::LogBase::E;
      }
    }
    write_interchange(scored, config.out_dir / "scored" / (spec.scorer_id + ".jsonl"));

    auto variances = group_variance(scored, dataset);
    auto paired = pair_by_image(variances);
    ScorerOutcome outcome;
    outcome.scorer_id = spec.scorer_id;
    outcome.n_records = scored.records.size();
    outcome.complete = scored.complete();
    outcome.n_missing = scored.missing.size();
    outcome.n_warnings = scored.warnings.size();
    outcome.n_skipped_groups = variances.skipped.size();
    outcome.test = paired_t_test(paired.human, paired.model);
    summary.scorers.push_back(outcome);

    test_rows.push_back({spec.scorer_id, summary.data_tag, outcome.test});
    for (auto& d : describer_summary(scored)) describer_rows.push_back({spec.scorer_id, summary.data_tag, std::move(d)});
    all_variances.insert(all_variances.end(), variances.records.begin(), variances.records.end());
  }

  write_text_file(config.out_dir / "variances.tsv", variances_tsv(all_variances));
  write_text_file(config.out_dir / "per_model_surprisal.tsv", per_model_surprisal_tsv(describer_rows));
  write_text_file(config.out_dir / "variance_test.tsv", variance_test_tsv(test_rows));

  json j;
  j["data_tag"] = summary.data_tag;
  j["log_base"] = config.log_base == ngram::LogBase::Two ? "2" : "e";
  j["dataset"] = {{"path", config.dataset_path.string()},
                  {"fingerprint", summary.fingerprint},
                  {"n_images", summary.metadata.n_images},
                  {"n_human", summary.metadata.n_human},
                  {"n_model", summary.metadata.n_model},
                  {"records_read", summary.load.records_read},
                  {"records_dropped", summary.load.records_dropped}};
  json dropped = json::array();
  for (const auto& d : summary.load.dropped) {
    dropped.push_back({{"line", d.line}, {"image_id", d.image_id}, {"describer_id", d.describer_id}, {"reason", d.reason}});
  }
  j["dataset"]["dropped"] = dropped;
  json scorers = json::array();
  for (const auto& s : summary.scorers) {
    scorers.push_back({{"scorer_id", s.scorer_id},
                       {"n_records", s.n_records},
                       {"complete", s.complete},
                       {"n_missing", s.n_missing},
                       {"n_warnings", s.n_warnings},
                       {"n_skipped_groups", s.n_skipped_groups},
                       {"paired_test", test_json(s.test)}});
  }
  j["scorers"] = scorers;
  write_text_file(config.out_dir / "summary.json", j.dump(2) + "\n");
  return summary;
}

int run_with_exit_code(const RunConfig& config, std::ostream& err) {
  auto report = [&](ErrorCode code, std::string_view message) {
    const std::string line = error_json(code, message);
    err << line << '\n';
    std::error_code ec;
    if (!config.out_dir.empty() && (std::filesystem::create_directories(config.out_dir, ec), !ec)) {
      std::ofstream(config.out_dir / "error.json") << line << '\n';
    }
    return exit_code_for(code);
  };
  try {
    run(config);
    return 0;
  } catch (const Error& e) {
    return report(e.code(), e.detail());
  } catch (const std::filesystem::filesystem_error& e) {
    return report(ErrorCode::IoError, e.what());
  } catch (const std::exception& e) {
    return report(ErrorCode::Internal, e.what());
  }
}

}  // namespace capvar
