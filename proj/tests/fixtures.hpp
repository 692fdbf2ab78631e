#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "capvar/corpus.hpp"
#include "capvar/lexstats.hpp"
#include "capvar/reports.hpp"

namespace fixtures {

// Small everyday corpus for normalization checks.
inline const std::vector<std::vector<std::string>>& twenty_captions() {
  static const std::vector<std::vector<std::string>> caps = {
    {"a", "dog", "runs", "in", "the", "park"},     {"a", "dog", "plays", "with", "a", "ball"},
    {"the", "cat", "sleeps", "on", "the", "sofa"}, {"a", "cat", "on", "a", "sofa"},
    {"two", "dogs", "play", "in", "the", "snow"},  {"a", "man", "rides", "a", "horse"},
    {"a", "woman", "rides", "a", "bike"},          {"the", "man", "and", "the", "dog"},
    {"a", "red", "bus", "on", "the", "street"},    {"a", "bus", "parked", "on", "a", "street"},
    {"people", "walk", "in", "the", "park"},       {"a", "kite", "in", "the", "sky"},
    {"the", "sky", "is", "blue"},                  {"a", "plate", "of", "food"},
    {"a", "plate", "with", "a", "pizza"},          {"the", "pizza", "is", "on", "the", "table"},
    {"a", "dog"},                                  {"dog"},
    {"a", "train", "on", "the", "tracks"},         {"the", "train", "in", "the", "station"}};
  return caps;
}

// Image "solo" uses words that occur nowhere else; the other images share a
// small everyday vocabulary.
inline std::vector<capvar::TokenizedCaption> memorization_captions() {
  using capvar::Group;
  const std::vector<std::vector<std::string>> shared = {
      {"a", "dog", "on", "the", "grass"},  {"a", "cat", "on", "a", "sofa"},    {"the", "dog", "runs", "fast"},
      {"a", "man", "with", "a", "dog"},    {"two", "cats", "on", "the", "bed"}, {"a", "bus", "on", "the", "road"},
      {"the", "bus", "is", "red"},         {"a", "red", "car", "parked"},      {"a", "man", "near", "a", "car"},
      {"the", "road", "is", "wet"}};
  const std::vector<std::vector<std::string>> solo = {
      {"zebras", "graze", "savanna"},          {"striped", "zebras", "graze"},  {"zebras", "beside", "acacia"},
      {"savanna", "zebras", "herd"},           {"herd", "grazing", "acacia"},   {"zebras", "graze", "acacia"},
      {"striped", "herd", "savanna"},          {"zebras", "herd", "grazing"},   {"acacia", "savanna", "zebras"},
      {"grazing", "striped", "zebras"}};
  std::vector<capvar::TokenizedCaption> out;
  auto add_image = [&](const std::string& id, const std::vector<std::vector<std::string>>& caps) {
    for (std::size_t k = 0; k < caps.size(); ++k) {
      const bool human = k < 5;
      out.push_back({id, (human ? "human_" : "model_") + std::to_string(k % 5 + 1), human ? Group::Human : Group::Model,
                     caps[k]});
    }
  };
  add_image("img_a", shared);
  std::vector<std::vector<std::string>> rotated(shared.begin() + 3, shared.end());
  rotated.insert(rotated.end(), shared.begin(), shared.begin() + 3);
  add_image("img_b", rotated);
  add_image("solo", solo);
  return out;
}

struct LexFixture {
  const char* name;
  std::vector<std::vector<std::string>> captions;
  double asl;
  double sdsl;
  std::size_t n_types;
};

// Values worked out by hand; sdsl is the population SD of caption lengths.
inline const std::vector<LexFixture>& lex_fixtures() {
  static const std::vector<LexFixture> all = {
      {"lengths 3 and 5", {{"a", "b", "c"}, {"a", "b", "d", "e", "f"}}, 4.0, 1.0, 6},
      {"single word", {{"dog"}}, 1.0, 0.0, 1},
      {"one repeated type", {{"a", "a", "a", "a"}, {"a", "a"}}, 3.0, 1.0, 1},
      {"lengths 1 to 4", {{"x"}, {"x", "y"}, {"x", "y", "z"}, {"w", "x", "y", "z"}}, 2.5, std::sqrt(1.25), 4},
      {"one long outlier",
       {{"the", "cat"}, {"the", "dog"}, {"a", "cat"}, {"a", "dog"}, {"the", "cat", "sat", "on", "a", "red", "mat"}},
       3.0,
       2.0,
       8}};
  return all;
}

inline std::vector<capvar::TokenizedCaption> lex_captions(const std::vector<std::vector<std::string>>& caps,
                                                          const std::string& describer = "human_1") {
  std::vector<capvar::TokenizedCaption> out;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    out.push_back({"img" + std::to_string(1000 + i), describer, capvar::Group::Human, caps[i]});
  }
  return out;
}

// Mean over full windows of distinct/window, written out directly.
inline double windowed_ttr(const std::vector<std::string>& stream, std::size_t window) {
  const std::size_t full = stream.size() / window;
  if (full == 0) {
    return static_cast<double>(std::set<std::string>(stream.begin(), stream.end()).size()) /
           static_cast<double>(stream.size());
  }
  double sum = 0.0;
  for (std::size_t w = 0; w < full; ++w) {
    std::set<std::string> seen(stream.begin() + w * window, stream.begin() + (w + 1) * window);
    sum += static_cast<double>(seen.size()) / static_cast<double>(window);
  }
  return sum / static_cast<double>(full);
}

// Rows behind tests/golden/*.tsv. The expected text there was written by
// hand from these numbers.
inline std::vector<capvar::SourceLexReport> golden_lexstats_rows() {
  using capvar::LexReport;
  std::vector<capvar::SourceLexReport> rows;
  rows.push_back({"human_1", false, LexReport{10.4412, 2.3571, 7252, 0.2812, 0.6589, 25000, 261000, {}}});
  rows.push_back({"model_1", false, LexReport{24.4149, -0.0, 5431, 0.0987, 0.99999, 5000, 122050, {}}});
  rows.push_back({"human", true, capvar::lexical_stats(lex_captions(lex_fixtures()[0].captions))});
  auto single = lex_captions({{"dog"}}, "model_1");
  single[0].group = capvar::Group::Model;
  rows.push_back({"model", true, capvar::lexical_stats(single)});
  return rows;
}

inline std::vector<capvar::VarianceTestRow> golden_variance_rows() {
  capvar::PairedTestResult a;
  a.n_pairs = 5000, a.df = 4999;
  a.mean_h = 5.2, a.sd_h = 5.04, a.mean_m = 2.17, a.sd_m = 2.0;
  a.t_value = 40.8812, a.p_two_sided = 1e-300, a.cohens_dz = 0.5782;
  capvar::PairedTestResult b;
  b.n_pairs = 10, b.df = 9;
  b.mean_h = 0.0126, b.sd_h = 0.0004, b.mean_m = 0.01299, b.sd_m = 1.23456;
  b.t_value = -2.4999, b.p_two_sided = 0.034, b.cohens_dz = 0.7906;
  capvar::PairedTestResult c;
  c.n_pairs = 2, c.df = 1;
  c.mean_h = -0.0, c.sd_h = 0.0, c.mean_m = -0.0001, c.sd_m = 0.0;
  c.t_value = -0.0, c.p_two_sided = 1.0, c.cohens_dz = 0.0, c.zero_variance = true;
  return {{"kn2", "greedy", a}, {"kn3", "nucleus", b}, {"ext:gpt2", "greedy", c}};
}

}  // namespace fixtures
