#include "capvar/scorers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <tuple>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "capvar/error.hpp"

namespace capvar {

namespace {

using nlohmann::json;

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

bool record_less(const SurprisalRecord& a, const SurprisalRecord& b) {
  return std::tie(a.image_id, a.describer_id) < std::tie(b.image_id, b.describer_id);
}

}  // namespace

double arithmetic_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

ScoredDataset score_dataset_ngram(const Dataset& dataset, const NgramScorerConfig& config,
                                  NgramScoreStats* stats) {
  ngram::validate(config.params);
  if (config.order != 2 && config.order != 3) {
    throw Error(ErrorCode::InvalidArgument, "order must be 2 or 3");
  }
  const auto& images = dataset.images();
  if (images.size() < 2) {
    throw Error(ErrorCode::EmptyTrainingPool, "leave-one-image-out needs at least two images");
  }

  const auto captions = dataset.all_captions();
  const std::string fingerprint = dataset_fingerprint(dataset);
  const std::string cache_tag = fingerprint + ":" + std::to_string(config.order);
  const std::size_t built_before = ngram::count_tables_built();
  const ngram::NgramCountTable table = [&] {
    if (!config.count_cache.empty() && std::filesystem::exists(config.count_cache)) {
      std::string tag;
      auto cached = ngram::load_counts(config.count_cache, &tag);
      if (tag == cache_tag && cached.order() == config.order) return cached;
    }
    auto built = ngram::build_counts(captions, config.order);
    if (!config.count_cache.empty()) ngram::save_counts(built, config.count_cache, cache_tag);
    return built;
  }();
  const std::size_t tables_built = ngram::count_tables_built() - built_before;

  std::vector<const ImageCaptions*> jobs;
  jobs.reserve(images.size());
  for (const auto& [id, img] : images) jobs.push_back(&img);

  std::vector<std::vector<SurprisalRecord>> results(jobs.size());
  std::vector<std::size_t> pool_sizes(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    try {
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        const ImageCaptions& img = *jobs[i];
        std::vector<TokenizedCaption> held;
        held.reserve(img.size());
        held.insert(held.end(), img.human.begin(), img.human.end());
        held.insert(held.end(), img.model.begin(), img.model.end());
        std::sort(held.begin(), held.end(),
                  [](const auto& a, const auto& b) { return a.describer_id < b.describer_id; });

        const ngram::CountOverlay overlay(table, held);
        pool_sizes[i] = overlay.n_captions();
        if (overlay.n_captions() == 0) {
          throw Error(ErrorCode::EmptyTrainingPool, "image " + held.front().image_id + " leaves no training captions");
        }
        const ngram::KneserNeyLM lm(overlay, config.params);

        auto& out = results[i];
        out.reserve(held.size());
        for (const auto& c : held) {
          auto score = ngram::caption_surprisal(lm, c.tokens, config.surprisal);
          SurprisalRecord r;
          r.image_id = c.image_id;
          r.describer_id = c.describer_id;
          r.group = c.group;
          r.scorer_id = config.scorer_id;
          r.tokens = c.tokens;
          if (config.surprisal.include_eos) r.tokens.emplace_back(ngram::kEosToken);
          r.per_token_surprisal = std::move(score.per_token);
          r.mean_surprisal = score.mean;
          out.push_back(std::move(r));
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = jobs.size();
    }
  };

  unsigned threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ScoredDataset scored;
  scored.scorer_id = config.scorer_id;
  scored.dataset_fingerprint = fingerprint;
  scored.unit = config.surprisal.base;
  scored.records.reserve(dataset.n_captions());
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(scored.records));

  if (stats) {
    stats->tables_built = tables_built;
    stats->images_scored = jobs.size();
    stats->min_pool_captions = *std::min_element(pool_sizes.begin(), pool_sizes.end());
    stats->max_pool_captions = *std::max_element(pool_sizes.begin(), pool_sizes.end());
  }
  return scored;
}

ScoredDataset import_external_surprisals_text(std::string_view content, const Dataset& dataset,
                                              std::optional<std::string> scorer_id) {
  ScoredDataset scored;
  scored.dataset_fingerprint = dataset_fingerprint(dataset);
  scored.unit = ngram::LogBase::Two;

  std::optional<std::string> file_scorer;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::FormatError, line_prefix(line_no) + e.what());
    }
    auto str_field = [&](const char* name) {
      auto it = obj.find(name);
      if (!obj.is_object() || it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::FormatError, line_prefix(line_no) + "missing string field '" + name + "'");
      }
      return it->get<std::string>();
    };

    SurprisalRecord r;
    r.image_id = str_field("image_id");
    r.describer_id = str_field("describer_id");
    r.scorer_id = str_field("scorer_id");
    if (file_scorer && *file_scorer != r.scorer_id) {
      throw Error(ErrorCode::FormatError, line_prefix(line_no) + "mixed scorer_id values in one file");
    }
    file_scorer = r.scorer_id;

    auto toks = obj.find("tokens");
    auto surp = obj.find("surprisal");
    auto base = obj.find("log_base");
    if (toks == obj.end() || !toks->is_array() || surp == obj.end() || !surp->is_array()) {
      throw Error(ErrorCode::FormatError, line_prefix(line_no) + "tokens and surprisal must be arrays");
    }
    double scale = 1.0;
    if (base == obj.end()) {
      throw Error(ErrorCode::FormatError, line_prefix(line_no) + "missing log_base");
    } else if ((base->is_number() && base->get<double>() == 2.0) || (base->is_string() && *base == "2")) {
      scale = 1.0;
    } else if (base->is_string() && *base == "e") {
      scale = 1.0 / std::numbers::ln2;
    } else {
      throw Error(ErrorCode::FormatError, line_prefix(line_no) + "log_base must be 2 or \"e\"");
    }
    if (toks->size() != surp->size()) {
      throw Error(ErrorCode::FormatError, line_prefix(line_no) + "tokens and surprisal lengths differ");
    }
    if (surp->empty()) throw Error(ErrorCode::FormatError, line_prefix(line_no) + "empty surprisal array");
    for (const auto& t : *toks) {
      if (!t.is_string()) throw Error(ErrorCode::FormatError, line_prefix(line_no) + "non-string token");
      r.tokens.push_back(t.get<std::string>());
    }
    for (const auto& s : *surp) {
      if (!s.is_number()) throw Error(ErrorCode::FormatError, line_prefix(line_no) + "non-numeric surprisal");
      const double v = s.get<double>();
      if (!std::isfinite(v)) throw Error(ErrorCode::FormatError, line_prefix(line_no) + "non-finite surprisal");
      if (v < 0.0) {
        throw Error(ErrorCode::NegativeSurprisal, line_prefix(line_no) + "negative surprisal " + std::to_string(v));
      }
      r.per_token_surprisal.push_back(v * scale);
    }

    const TokenizedCaption* caption = dataset.find(r.image_id, r.describer_id);
    if (!caption) {
      throw Error(ErrorCode::UnknownCaption,
                  line_prefix(line_no) + "(" + r.image_id + ", " + r.describer_id + ") not in dataset");
    }
    r.group = caption->group;
    r.mean_surprisal = arithmetic_mean(r.per_token_surprisal);

    std::span<const std::string> file_tokens(r.tokens);
    if (!file_tokens.empty() && file_tokens.back() == ngram::kEosToken) file_tokens = file_tokens.first(file_tokens.size() - 1);
    if (!std::equal(file_tokens.begin(), file_tokens.end(), caption->tokens.begin(), caption->tokens.end())) {
      scored.warnings.push_back("(" + r.image_id + ", " + r.describer_id + "): tokens differ from dataset (" +
                                std::to_string(file_tokens.size()) + " vs " +
                                std::to_string(caption->tokens.size()) + ")");
    }
    scored.records.push_back(std::move(r));
  }

  std::sort(scored.records.begin(), scored.records.end(), record_less);
  for (std::size_t i = 1; i < scored.records.size(); ++i) {
    const auto& a = scored.records[i - 1];
    const auto& b = scored.records[i];
    if (a.image_id == b.image_id && a.describer_id == b.describer_id) {
      throw Error(ErrorCode::FormatError, "duplicate record for (" + a.image_id + ", " + a.describer_id + ")");
    }
  }

  scored.scorer_id = scorer_id ? *scorer_id : file_scorer.value_or("ext");
  for (auto& r : scored.records) r.scorer_id = scored.scorer_id;

  std::size_t k = 0;
  for (const auto& c : dataset.all_captions()) {
    while (k < scored.records.size() &&
           std::tie(scored.records[k].image_id, scored.records[k].describer_id) < std::tie(c.image_id, c.describer_id))
      ++k;
    if (k < scored.records.size() && scored.records[k].image_id == c.image_id &&
        scored.records[k].describer_id == c.describer_id)
      continue;
    scored.missing.emplace_back(c.image_id, c.describer_id);
  }
  return scored;
}

ScoredDataset import_external_surprisals(const std::filesystem::path& path, const Dataset& dataset,
                                         std::optional<std::string> scorer_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return import_external_surprisals_text(ss.str(), dataset, std::move(scorer_id));
}

std::string export_interchange(const ScoredDataset& scored) {
  std::string out;
  for (const auto& r : scored.records) {
    json obj = json::object();
    obj["image_id"] = r.image_id;
    obj["describer_id"] = r.describer_id;
    obj["scorer_id"] = r.scorer_id;
    obj["tokens"] = r.tokens;
    obj["surprisal"] = r.per_token_surprisal;
    if (scored.unit == ngram::LogBase::Two) {
      obj["log_base"] = 2;
    } else {
      obj["log_base"] = "e";
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_interchange(const ScoredDataset& scored, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << export_interchange(scored);
}

}  // namespace capvar
