#include "capvar/lexstats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string_view>
#include <tuple>
#include <unordered_set>

#include "capvar/error.hpp"

namespace capvar {

double segmental_ttr(std::span<const std::string> stream, std::size_t window, bool* short_stream) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "window must be positive");
  if (short_stream) *short_stream = false;
  if (stream.empty()) return 0.0;

  const std::size_t chunks = stream.size() / window;
  if (chunks == 0) {
    if (short_stream) *short_stream = true;
    std::unordered_set<std::string_view> types(stream.begin(), stream.end());
    return static_cast<double>(types.size()) / static_cast<double>(stream.size());
  }
  double sum = 0.0;
  std::unordered_set<std::string_view> types;
  for (std::size_t c = 0; c < chunks; ++c) {
    types.clear();
    for (std::size_t i = c * window; i < (c + 1) * window; ++i) types.insert(stream[i]);
    sum += static_cast<double>(types.size()) / static_cast<double>(window);
  }
  return sum / static_cast<double>(chunks);
}

LexReport lexical_stats(std::vector<TokenizedCaption> captions, const LexOptions& options) {
  if (captions.empty()) throw Error(ErrorCode::EmptyInput, "no captions");
  std::sort(captions.begin(), captions.end(), [](const auto& a, const auto& b) {
    return std::tie(a.image_id, a.describer_id) < std::tie(b.image_id, b.describer_id);
  });

  LexReport r;
  r.n_captions = captions.size();
  std::vector<std::string> unigrams;
  std::vector<std::string> bigrams;
  for (const auto& c : captions) {
    r.n_tokens += c.tokens.size();
    unigrams.insert(unigrams.end(), c.tokens.begin(), c.tokens.end());
    for (std::size_t i = 1; i < c.tokens.size(); ++i) bigrams.push_back(c.tokens[i - 1] + ' ' + c.tokens[i]);
  }

  const double n = static_cast<double>(r.n_captions);
  r.asl = static_cast<double>(r.n_tokens) / n;
  double ss = 0.0;
  for (const auto& c : captions) {
    const double dev = static_cast<double>(c.tokens.size()) - r.asl;
    ss += dev * dev;
  }
  r.sdsl = std::sqrt(ss / n);

  r.n_types = std::unordered_set<std::string_view>(unigrams.begin(), unigrams.end()).size();

  bool short1 = false, short2 = false;
  r.ttr1 = segmental_ttr(unigrams, options.window, &short1);
  if (short1) {
    r.warnings.push_back("fewer than " + std::to_string(options.window) +
                         " tokens: TTR1 computed over the whole stream");
  }
  if (bigrams.empty()) {
    r.ttr2 = 0.0;
    r.warnings.push_back("no within-caption bigrams: TTR2 reported as 0");
  } else {
    r.ttr2 = segmental_ttr(bigrams, options.window, &short2);
    if (short2) {
      r.warnings.push_back("fewer than " + std::to_string(options.window) +
                           " bigrams: TTR2 computed over the whole stream");
    }
  }
  return r;
}

std::vector<SourceLexReport> per_source_stats(const Dataset& dataset, const LexOptions& options) {
  std::map<std::string, std::vector<TokenizedCaption>> by_describer;
  std::vector<TokenizedCaption> human, model;
  for (const auto& c : dataset.all_captions()) {
    by_describer[c.describer_id].push_back(c);
    (c.group == Group::Human ? human : model).push_back(c);
  }
  std::vector<SourceLexReport> out;
  for (auto& [id, caps] : by_describer) out.push_back({id, false, lexical_stats(std::move(caps), options)});
  if (!human.empty()) out.push_back({"human", true, lexical_stats(std::move(human), options)});
  if (!model.empty()) out.push_back({"model", true, lexical_stats(std::move(model), options)});
  return out;
}

}  // namespace capvar
