// Brute-force interpolated Kneser-Ney over string n-grams. Shares no code with
// the library: counts come straight from padded token lists.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "capvar/corpus.hpp"

namespace oracle {

using Words = std::vector<std::string>;

class KnOracle {
 public:
  KnOracle(const std::vector<Words>& captions, int order, double discount, double floor)
      : order_(order), D_(discount), alpha_(floor) {
    for (const auto& cap : captions) {
      Words padded(order - 1, "<s>");
      padded.insert(padded.end(), cap.begin(), cap.end());
      padded.push_back("</s>");
      for (const auto& w : cap) words_.insert(w);
      for (std::size_t t = order - 1; t < padded.size(); ++t) {
        ++bigram_[{padded[t - 1], padded[t]}];
        if (order == 3) ++trigram_[{padded[t - 2], padded[t - 1], padded[t]}];
      }
    }
  }

  std::string map(const std::string& w) const {
    if (w == "<s>" || w == "</s>") return w;
    return words_.count(w) ? w : "<unk>";
  }

  std::size_t outcome_count() const { return words_.size() + 2; }

  Words outcomes() const {
    Words o(words_.begin(), words_.end());
    o.push_back("</s>");
    o.push_back("<unk>");
    return o;
  }

  double continuation(const std::string& w) const {
    std::set<std::string> left;
    for (const auto& [k, c] : bigram_)
      if (k.second == w && c > 0) left.insert(k.first);
    const double den = static_cast<double>(bigram_.size()) + alpha_ * static_cast<double>(outcome_count());
    return (static_cast<double>(left.size()) + alpha_) / den;
  }

  double middle(const std::string& v, const std::string& w) const {
    // N1+(. v x) for every x
    std::map<std::string, std::set<std::string>> left_of;
    for (const auto& [k, c] : trigram_)
      if (std::get<1>(k) == v) left_of[std::get<2>(k)].insert(std::get<0>(k));
    double total = 0.0;
    for (const auto& [x, s] : left_of) total += static_cast<double>(s.size());
    const double lower = continuation(w);
    if (total == 0.0) return lower;
    const double n_vw = left_of.count(w) ? static_cast<double>(left_of.at(w).size()) : 0.0;
    const double types = static_cast<double>(left_of.size());
    return std::max(n_vw - D_, 0.0) / total + D_ * types / total * lower;
  }

  double prob(const Words& context, const std::string& word_in) const {
    const std::string w = map(word_in);
    if (order_ == 2) {
      const std::string v = map(context.at(0));
      double total = 0.0, types = 0.0, hit = 0.0;
      for (const auto& [k, c] : bigram_) {
        if (k.first != v) continue;
        total += c;
        types += 1;
        if (k.second == w) hit = c;
      }
      const double lower = continuation(w);
      if (total == 0.0) return lower;
      return std::max(hit - D_, 0.0) / total + D_ * types / total * lower;
    }
    const std::string u = map(context.at(0));
    const std::string v = map(context.at(1));
    double total = 0.0, types = 0.0, hit = 0.0;
    for (const auto& [k, c] : trigram_) {
      if (std::get<0>(k) != u || std::get<1>(k) != v) continue;
      total += c;
      types += 1;
      if (std::get<2>(k) == w) hit = c;
    }
    const double lower = middle(v, w);
    if (total == 0.0) return lower;
    return std::max(hit - D_, 0.0) / total + D_ * types / total * lower;
  }

 private:
  int order_;
  double D_, alpha_;
  std::set<std::string> words_;
  std::map<std::pair<std::string, std::string>, double> bigram_;
  std::map<std::tuple<std::string, std::string, std::string>, double> trigram_;
};

inline std::vector<capvar::TokenizedCaption> as_captions(const std::vector<Words>& caps,
                                                         const std::string& image_prefix = "img",
                                                         std::size_t per_image = 1) {
  std::vector<capvar::TokenizedCaption> out;
  for (std::size_t i = 0; i < caps.size(); ++i) {
    capvar::TokenizedCaption c;
    c.image_id = image_prefix + std::to_string(i / per_image);
    c.describer_id = "d" + std::to_string(i % per_image);
    c.group = (i % per_image) % 2 == 0 ? capvar::Group::Human : capvar::Group::Model;
    c.tokens = caps[i];
    out.push_back(std::move(c));
  }
  return out;
}

// Random corpus with Zipf-ish word choice so both repeated and rare n-grams occur.
inline std::vector<Words> random_corpus(std::mt19937_64& rng, std::size_t n_captions, std::size_t vocab,
                                        std::size_t max_len = 12) {
  std::vector<double> weights(vocab);
  for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::vector<Words> caps(n_captions);
  for (auto& c : caps) {
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) c.push_back("v" + std::to_string(word(rng)));
  }
  return caps;
}

}  // namespace oracle
