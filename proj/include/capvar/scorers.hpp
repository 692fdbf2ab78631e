#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "capvar/corpus.hpp"
#include "capvar/ngram.hpp"

namespace capvar {

struct SurprisalRecord {
  std::string image_id;
  std::string describer_id;
  Group group = Group::Human;
  std::string scorer_id;
  // Scored tokens, aligned with per_token_surprisal. The n-gram scorer
  // includes "</s>" when the end symbol is scored.
  std::vector<std::string> tokens;
  std::vector<double> per_token_surprisal;
  double mean_surprisal = 0.0;

  bool operator==(const SurprisalRecord&) const = default;
};

struct ScoredDataset {
  std::string scorer_id;
  std::string dataset_fingerprint;
  ngram::LogBase unit = ngram::LogBase::Two;
  // Sorted by (image_id, describer_id); at most one record per caption.
  std::vector<SurprisalRecord> records;
  // Dataset captions with no record (external imports only).
  std::vector<std::pair<std::string, std::string>> missing;
  std::vector<std::string> warnings;

  bool complete() const { return missing.empty(); }
  bool operator==(const ScoredDataset&) const = default;
};

double arithmetic_mean(std::span<const double> values);

struct NgramScorerConfig {
  std::string scorer_id = "kn2";
  int order = 2;
  ngram::KnParams params;
  ngram::SurprisalOptions surprisal;
  unsigned threads = 1;  // 0 = hardware concurrency
  // When set, the global table is loaded from this file if its tag matches
  // the dataset, and written there otherwise.
  std::filesystem::path count_cache;
};

struct NgramScoreStats {
  std::size_t tables_built = 0;  // global count tables built by this call
  std::size_t images_scored = 0;
  std::size_t min_pool_captions = 0;
  std::size_t max_pool_captions = 0;
};

// Leave-one-image-out scoring: one global table over every caption, then a
// CountOverlay per image that removes that image's captions before its
// captions are scored.
ScoredDataset score_dataset_ngram(const Dataset& dataset, const NgramScorerConfig& config,
                                  NgramScoreStats* stats = nullptr);

// Surprisal-interchange JSONL. Per-token values are taken verbatim (natural
// log files are converted to bits); means are always recomputed.
ScoredDataset import_external_surprisals(const std::filesystem::path& path, const Dataset& dataset,
                                         std::optional<std::string> scorer_id = std::nullopt);
ScoredDataset import_external_surprisals_text(std::string_view content, const Dataset& dataset,
                                              std::optional<std::string> scorer_id = std::nullopt);

std::string export_interchange(const ScoredDataset& scored);
void write_interchange(const ScoredDataset& scored, const std::filesystem::path& path);

}  // namespace capvar
