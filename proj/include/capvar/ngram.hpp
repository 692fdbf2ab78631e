#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "capvar/corpus.hpp"
#include "capvar/error.hpp"

namespace capvar::ngram {

using TokenId = std::uint32_t;
using NgramKey = std::uint64_t;
using Count = std::uint64_t;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;
inline constexpr TokenId kFirstWord = 3;

inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";

inline constexpr int kIdBits = 21;
inline constexpr TokenId kMaxVocab = (TokenId{1} << kIdBits) - 1;

constexpr NgramKey pack(TokenId a, TokenId b) { return (NgramKey{a} << kIdBits) | b; }
constexpr NgramKey pack(TokenId a, TokenId b, TokenId c) {
  return (NgramKey{a} << (2 * kIdBits)) | (NgramKey{b} << kIdBits) | c;
}

class Vocabulary {
 public:
  Vocabulary();

  TokenId intern(std::string_view word);
  // Returns kUnk for unknown words.
  TokenId lookup(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(TokenId id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
};

// Appends the padded id sequence of one caption: (order-1) <s>, the tokens,
// one </s>. Unknown words map through `to_id`.
template <typename ToId>
void pad_caption(std::span<const std::string> tokens, int order, ToId&& to_id, std::vector<TokenId>& out) {
  out.clear();
  out.insert(out.end(), static_cast<std::size_t>(order - 1), kBos);
  for (const auto& t : tokens) out.push_back(to_id(t));
  out.push_back(kEos);
}

// Raw and continuation statistics for an interpolated Kneser-Ney model of
// order 2 or 3. Immutable once built.
//
// Counting convention: unigram counts cover every padded token (so <s> is
// counted); n-grams of order >= 2 are counted only when they end at a
// predicted position (a word or </s>). That keeps <s> out of every
// continuation statistic.
class NgramCountTable {
 public:
  int order() const { return order_; }
  const Vocabulary& vocab() const { return vocab_; }

  Count unigram_count(TokenId w) const { return w < unigram_.size() ? unigram_[w] : 0; }
  Count bigram_count(TokenId a, TokenId b) const { return find(bigram_, pack(a, b)); }
  Count trigram_count(TokenId a, TokenId b, TokenId c) const { return find(trigram_, pack(a, b, c)); }

  // c(v.) and N1+(v.) over bigrams
  Count context_total(TokenId v) const { return dense(ctx1_total_, v); }
  Count context_types(TokenId v) const { return dense(ctx1_types_, v); }
  // c(uv.) and N1+(uv.) over trigrams
  Count context_total(TokenId u, TokenId v) const { return find(ctx2_total_, pack(u, v)); }
  Count context_types(TokenId u, TokenId v) const { return find(ctx2_types_, pack(u, v)); }

  // N1+(.w) and N1+(..)
  Count left_continuations(TokenId w) const { return dense(left_cont_, w); }
  Count bigram_types() const { return bigram_types_; }

  // N1+(.vw), N1+(.v.) and |{w : N1+(.vw) > 0}| over trigrams
  Count middle_continuations(TokenId v, TokenId w) const { return find(mid_cont_, pack(v, w)); }
  Count middle_total(TokenId v) const { return dense(mid_total_, v); }
  Count middle_types(TokenId v) const { return dense(mid_types_, v); }

  // Distinct word types with a nonzero count (reserved symbols excluded).
  Count word_types() const { return word_types_; }
  Count total_unigram_count() const { return total_unigrams_; }
  std::size_t n_captions() const { return n_captions_; }

  bool in_vocab(TokenId w) const { return w >= kFirstWord && unigram_count(w) > 0; }
  TokenId map_token(std::string_view word) const;

  // Sorted (key, count) pairs for one order; used by the cache writer and
  // by tests that enumerate the table.
  std::vector<std::pair<NgramKey, Count>> sorted_entries(int n) const;

 private:
  friend NgramCountTable build_counts(std::span<const TokenizedCaption>, int);
  friend NgramCountTable load_counts(const std::filesystem::path&, std::string*);

  using Map = std::unordered_map<NgramKey, Count>;

  static Count find(const Map& m, NgramKey k) {
    auto it = m.find(k);
    return it == m.end() ? 0 : it->second;
  }
  static Count dense(const std::vector<Count>& v, TokenId i) { return i < v.size() ? v[i] : 0; }

  void finalize();

  int order_ = 2;
  Vocabulary vocab_;
  std::size_t n_captions_ = 0;
  std::vector<Count> unigram_;
  Map bigram_;
  Map trigram_;

  std::vector<Count> ctx1_total_, ctx1_types_, left_cont_, mid_total_, mid_types_;
  Map ctx2_total_, ctx2_types_, mid_cont_;
  Count bigram_types_ = 0;
  Count word_types_ = 0;
  Count total_unigrams_ = 0;
};

NgramCountTable build_counts(std::span<const TokenizedCaption> captions, int order);

// Number of tables counted from a corpus by build_counts in this process
// (cache loads are not included).
std::size_t count_tables_built();

// Binary cache: magic, version, order, vocab size, caption count, an opaque
// tag (e.g. a dataset fingerprint), the vocabulary, then sorted (key, count)
// pairs per order. Derived statistics are recomputed on load. Host byte order.
void save_counts(const NgramCountTable& table, const std::filesystem::path& path, std::string_view tag = {});
NgramCountTable load_counts(const std::filesystem::path& path, std::string* tag = nullptr);

// Small sorted map of subtracted counts.
class DeltaMap {
 public:
  void add(NgramKey key, Count d) { entries_.emplace_back(key, d); }
  void finalize();
  Count get(NgramKey key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const auto& e, NgramKey k) { return e.first < k; });
    return (it != entries_.end() && it->first == key) ? it->second : 0;
  }
  const std::vector<std::pair<NgramKey, Count>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<std::pair<NgramKey, Count>> entries_;
};

// Leave-one-out view of a base table: every query answers as if the table had
// been rebuilt without the held-out captions. Construction touches only the
// held-out n-grams; continuation statistics are corrected exactly where an
// effective count reaches zero.
class CountOverlay {
 public:
  CountOverlay(const NgramCountTable& base, std::span<const TokenizedCaption> held_out);

  int order() const { return base_->order(); }
  const Vocabulary& vocab() const { return base_->vocab(); }
  const NgramCountTable& base() const { return *base_; }

  Count unigram_count(TokenId w) const { return base_->unigram_count(w) - d_unigram_.get(w); }
  Count bigram_count(TokenId a, TokenId b) const { return base_->bigram_count(a, b) - d_bigram_.get(pack(a, b)); }
  Count trigram_count(TokenId a, TokenId b, TokenId c) const {
    return base_->trigram_count(a, b, c) - d_trigram_.get(pack(a, b, c));
  }
  Count context_total(TokenId v) const { return base_->context_total(v) - d_ctx1_total_.get(v); }
  Count context_types(TokenId v) const { return base_->context_types(v) - d_ctx1_types_.get(v); }
  Count context_total(TokenId u, TokenId v) const {
    return base_->context_total(u, v) - d_ctx2_total_.get(pack(u, v));
  }
  Count context_types(TokenId u, TokenId v) const {
    return base_->context_types(u, v) - d_ctx2_types_.get(pack(u, v));
  }
  Count left_continuations(TokenId w) const { return base_->left_continuations(w) - d_left_cont_.get(w); }
  Count bigram_types() const { return base_->bigram_types() - d_bigram_types_; }
  Count middle_continuations(TokenId v, TokenId w) const {
    return base_->middle_continuations(v, w) - d_mid_cont_.get(pack(v, w));
  }
  Count middle_total(TokenId v) const { return base_->middle_total(v) - d_mid_total_.get(v); }
  Count middle_types(TokenId v) const { return base_->middle_types(v) - d_mid_types_.get(v); }
  Count word_types() const { return base_->word_types() - d_word_types_; }
  Count total_unigram_count() const { return base_->total_unigram_count() - d_total_unigrams_; }
  std::size_t n_captions() const { return base_->n_captions() - n_held_out_; }

  bool in_vocab(TokenId w) const { return w >= kFirstWord && unigram_count(w) > 0; }
  TokenId map_token(std::string_view word) const;

 private:
  const NgramCountTable* base_;
  std::size_t n_held_out_ = 0;
  DeltaMap d_unigram_, d_bigram_, d_trigram_;
  DeltaMap d_ctx1_total_, d_ctx1_types_, d_ctx2_total_, d_ctx2_types_;
  DeltaMap d_left_cont_, d_mid_cont_, d_mid_total_, d_mid_types_;
  Count d_bigram_types_ = 0;
  Count d_word_types_ = 0;
  Count d_total_unigrams_ = 0;
};

template <typename T>
concept CountView = requires(const T& v, TokenId a, TokenId b, TokenId c, std::string_view s) {
  { v.order() } -> std::convertible_to<int>;
  { v.vocab() } -> std::convertible_to<const Vocabulary&>;
  { v.unigram_count(a) } -> std::convertible_to<Count>;
  { v.bigram_count(a, b) } -> std::convertible_to<Count>;
  { v.trigram_count(a, b, c) } -> std::convertible_to<Count>;
  { v.context_total(a) } -> std::convertible_to<Count>;
  { v.context_types(a) } -> std::convertible_to<Count>;
  { v.context_total(a, b) } -> std::convertible_to<Count>;
  { v.context_types(a, b) } -> std::convertible_to<Count>;
  { v.left_continuations(a) } -> std::convertible_to<Count>;
  { v.bigram_types() } -> std::convertible_to<Count>;
  { v.middle_continuations(a, b) } -> std::convertible_to<Count>;
  { v.middle_total(a) } -> std::convertible_to<Count>;
  { v.middle_types(a) } -> std::convertible_to<Count>;
  { v.word_types() } -> std::convertible_to<Count>;
  { v.map_token(s) } -> std::convertible_to<TokenId>;
};

struct KnParams {
  double discount = 0.1;  // D in (0,1)
  double floor = 1.0;     // additive floor on continuation counts, >= 0
};

void validate(const KnParams& params);

// Interpolated Kneser-Ney over any CountView.
//
//   top:    P(w|uv) = max(c(uvw)-D,0)/c(uv.) + D*N1+(uv.)/c(uv.) * P_mid(w|v)
//   middle: P_mid(w|v) = max(N1+(.vw)-D,0)/N1+(.v.) + D*K(v)/N1+(.v.) * P_cont(w)
//           K(v) = |{w : N1+(.vw) > 0}|
//   bottom: P_cont(w) = (N1+(.w) + a) / (N1+(..) + a*|O|)
//
// O is the outcome set: seen word types plus <unk> and </s>. A level whose
// denominator is zero passes the next-lower probability through unchanged.
// Order 2 skips the middle level.
template <CountView View>
class KneserNeyLM {
 public:
  KneserNeyLM(const View& counts, KnParams params) : counts_(&counts), params_(params) {
    validate(params_);
  }

  int order() const { return counts_->order(); }
  const View& counts() const { return *counts_; }
  const KnParams& params() const { return params_; }

  std::size_t outcome_count() const { return static_cast<std::size_t>(counts_->word_types()) + 2; }

  TokenId map_token(std::string_view word) const { return counts_->map_token(word); }

  double continuation_prob(TokenId w) const {
    const double alpha = params_.floor;
    const double num = static_cast<double>(counts_->left_continuations(w)) + alpha;
    const double den = static_cast<double>(counts_->bigram_types()) + alpha * static_cast<double>(outcome_count());
    if (den <= 0.0) return 0.0;
    return num / den;
  }

  double middle_prob(TokenId v, TokenId w) const {
    const double lower = continuation_prob(w);
    const Count total = counts_->middle_total(v);
    if (total == 0) return lower;
    const double D = params_.discount;
    const double t = static_cast<double>(total);
    const double hit = std::max(static_cast<double>(counts_->middle_continuations(v, w)) - D, 0.0) / t;
    return hit + D * static_cast<double>(counts_->middle_types(v)) / t * lower;
  }

  // Ids must already be mapped (map_token). `context` has order()-1 entries.
  double prob(std::span<const TokenId> context, TokenId word) const {
    if (static_cast<int>(context.size()) != order() - 1) {
      throw Error(ErrorCode::InvalidContextLength,
                  "context has " + std::to_string(context.size()) + " tokens, order is " +
                      std::to_string(order()));
    }
    if (word == kBos) throw Error(ErrorCode::InvalidArgument, "<s> is never predicted");
    const double D = params_.discount;
    if (order() == 2) {
      const TokenId v = context[0];
      const double lower = continuation_prob(word);
      const Count total = counts_->context_total(v);
      if (total == 0) return lower;
      const double t = static_cast<double>(total);
      const double hit = std::max(static_cast<double>(counts_->bigram_count(v, word)) - D, 0.0) / t;
      return hit + D * static_cast<double>(counts_->context_types(v)) / t * lower;
    }
    const TokenId u = context[0];
    const TokenId v = context[1];
    const double lower = middle_prob(v, word);
    const Count total = counts_->context_total(u, v);
    if (total == 0) return lower;
    const double t = static_cast<double>(total);
    const double hit = std::max(static_cast<double>(counts_->trigram_count(u, v, word)) - D, 0.0) / t;
    return hit + D * static_cast<double>(counts_->context_types(u, v)) / t * lower;
  }

  // String interface: out-of-vocabulary tokens map to <unk> first.
  double prob(std::span<const std::string> context, std::string_view word) const {
    if (static_cast<int>(context.size()) != order() - 1) {
      throw Error(ErrorCode::InvalidContextLength,
                  "context has " + std::to_string(context.size()) + " tokens, order is " +
                      std::to_string(order()));
    }
    TokenId ids[2] = {kBos, kBos};
    for (std::size_t i = 0; i < context.size(); ++i) ids[i] = map_token(context[i]);
    return prob(std::span<const TokenId>(ids, context.size()), map_token(word));
  }

 private:
  const View* counts_;
  KnParams params_;
};

enum class LogBase { Two, E };

struct SurprisalOptions {
  LogBase base = LogBase::Two;
  bool include_eos = true;
};

struct SurprisalScore {
  std::vector<double> per_token;
  double mean = 0.0;
};

template <typename M>
concept CaptionModel = requires(const M& m, std::span<const std::string> ctx, std::string_view w) {
  { m.order() } -> std::convertible_to<int>;
  { m.prob(ctx, w) } -> std::convertible_to<double>;
};

inline double surprisal_of(double p, LogBase base) {
  const double s = base == LogBase::Two ? -std::log2(p) : -std::log(p);
  return s > 0.0 ? s : 0.0;
}

// Pads like build_counts and scores every non-pad position (</s> included
// unless options.include_eos is false).
template <CaptionModel M>
SurprisalScore caption_surprisal(const M& lm, std::span<const std::string> tokens, SurprisalOptions options = {}) {
  if (tokens.empty()) throw Error(ErrorCode::InvalidArgument, "caption has no tokens");
  const int n = lm.order();
  std::vector<std::string> padded(static_cast<std::size_t>(n - 1), std::string(kBosToken));
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  if (options.include_eos) padded.emplace_back(kEosToken);

  SurprisalScore score;
  score.per_token.reserve(padded.size());
  double sum = 0.0;
  for (std::size_t t = static_cast<std::size_t>(n - 1); t < padded.size(); ++t) {
    std::span<const std::string> ctx(padded.data() + t - (n - 1), static_cast<std::size_t>(n - 1));
    const double s = surprisal_of(lm.prob(ctx, padded[t]), options.base);
    score.per_token.push_back(s);
    sum += s;
  }
  score.mean = sum / static_cast<double>(score.per_token.size());
  return score;
}

}  // namespace capvar::ngram
