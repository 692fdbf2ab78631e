#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "capvar/corpus.hpp"

namespace capvar {

struct LexOptions {
  std::size_t window = 1000;
};

struct LexReport {
  double asl = 0.0;   // mean tokens per caption
  double sdsl = 0.0;  // population SD of caption length
  std::size_t n_types = 0;
  double ttr1 = 0.0;  // mean segmental TTR over `window`-token chunks
  double ttr2 = 0.0;  // same over within-caption bigrams
  std::size_t n_captions = 0;
  std::size_t n_tokens = 0;
  std::vector<std::string> warnings;
};

// Mean over consecutive non-overlapping windows of (distinct items / window).
// A trailing partial window is ignored unless there is no full window, in
// which case the ratio is taken over the whole stream and `short_stream` is
// set.
double segmental_ttr(std::span<const std::string> stream, std::size_t window, bool* short_stream = nullptr);

// Captions are sorted by (image_id, describer_id) before chunking, so the
// result does not depend on input order. Throws EMPTY_INPUT.
LexReport lexical_stats(std::vector<TokenizedCaption> captions, const LexOptions& options = {});

struct SourceLexReport {
  std::string source;
  bool pooled = false;
  LexReport report;
};

// One row per describer_id (sorted), then pooled "human" and "model" rows
// for each group present.
std::vector<SourceLexReport> per_source_stats(const Dataset& dataset, const LexOptions& options = {});

}  // namespace capvar
