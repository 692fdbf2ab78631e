#include "capvar/ngram.hpp"

#include <atomic>
#include <cstring>
#include <fstream>

namespace capvar::ngram {

namespace {

std::atomic<std::size_t> g_tables_built{0};

constexpr NgramKey kIdMask = (NgramKey{1} << kIdBits) - 1;
constexpr char kCacheMagic[8] = {'C', 'A', 'P', 'V', 'N', 'G', 'C', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

TokenId first_id(NgramKey k, int n) { return static_cast<TokenId>((k >> ((n - 1) * kIdBits)) & kIdMask); }
TokenId mid_id(NgramKey k) { return static_cast<TokenId>((k >> kIdBits) & kIdMask); }
TokenId last_id(NgramKey k) { return static_cast<TokenId>(k & kIdMask); }

void check_order(int order) {
  if (order != 2 && order != 3) {
    throw Error(ErrorCode::InvalidArgument, "order must be 2 or 3, got " + std::to_string(order));
  }
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error(ErrorCode::CacheFormat, "truncated count cache");
  return v;
}

// Walks the n-grams of one padded sequence the way the table counts them.
template <typename Fn1, typename Fn2, typename Fn3>
void for_each_ngram(const std::vector<TokenId>& p, int order, Fn1&& uni, Fn2&& bi, Fn3&& tri) {
  for (TokenId w : p) uni(w);
  for (std::size_t t = static_cast<std::size_t>(order - 1); t < p.size(); ++t) {
    bi(p[t - 1], p[t]);
    if (order == 3) tri(p[t - 2], p[t - 1], p[t]);
  }
}

}  // namespace

Vocabulary::Vocabulary() {
  for (std::string_view w : {kBosToken, kEosToken, kUnkToken}) intern(w);
}

TokenId Vocabulary::intern(std::string_view word) {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  if (words_.size() >= kMaxVocab) {
    throw Error(ErrorCode::InvalidArgument, "vocabulary exceeds " + std::to_string(kMaxVocab) + " types");
  }
  auto id = static_cast<TokenId>(words_.size());
  words_.emplace_back(word);
  index_.emplace(words_.back(), id);
  return id;
}

TokenId Vocabulary::lookup(std::string_view word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.find(word) != index_.end(); }

std::size_t count_tables_built() { return g_tables_built.load(); }

void validate(const KnParams& params) {
  if (!(params.discount > 0.0 && params.discount < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "discount must lie in (0,1)");
  }
  if (!(params.floor >= 0.0) || !std::isfinite(params.floor)) {
    throw Error(ErrorCode::InvalidArgument, "floor must be finite and >= 0");
  }
}

TokenId NgramCountTable::map_token(std::string_view word) const {
  if (word == kBosToken) return kBos;
  if (word == kEosToken) return kEos;
  TokenId id = vocab_.lookup(word);
  return in_vocab(id) ? id : kUnk;
}

void NgramCountTable::finalize() {
  const std::size_t V = vocab_.size();
  unigram_.resize(V, 0);
  ctx1_total_.assign(V, 0);
  ctx1_types_.assign(V, 0);
  left_cont_.assign(V, 0);
  mid_total_.assign(V, 0);
  mid_types_.assign(V, 0);
  ctx2_total_.clear();
  ctx2_types_.clear();
  mid_cont_.clear();
  bigram_types_ = 0;

  for (const auto& [key, c] : bigram_) {
    const TokenId a = first_id(key, 2), b = last_id(key);
    ctx1_total_[a] += c;
    ++ctx1_types_[a];
    ++left_cont_[b];
    ++bigram_types_;
  }
  if (order_ == 3) {
    ctx2_total_.reserve(bigram_.size());
    mid_cont_.reserve(bigram_.size());
    for (const auto& [key, c] : trigram_) {
      const TokenId a = first_id(key, 3), b = mid_id(key), w = last_id(key);
      ctx2_total_[pack(a, b)] += c;
      ++ctx2_types_[pack(a, b)];
      ++mid_cont_[pack(b, w)];
      ++mid_total_[b];
    }
    for (const auto& [key, n] : mid_cont_) ++mid_types_[first_id(key, 2)];
  }

  word_types_ = 0;
  total_unigrams_ = 0;
  for (TokenId w = 0; w < V; ++w) {
    total_unigrams_ += unigram_[w];
    if (w >= kFirstWord && unigram_[w] > 0) ++word_types_;
  }
}

std::vector<std::pair<NgramKey, Count>> NgramCountTable::sorted_entries(int n) const {
  std::vector<std::pair<NgramKey, Count>> out;
  if (n == 1) {
    for (TokenId w = 0; w < unigram_.size(); ++w)
      if (unigram_[w] > 0) out.emplace_back(w, unigram_[w]);
    return out;
  }
  const Map& m = n == 2 ? bigram_ : trigram_;
  out.assign(m.begin(), m.end());
  std::sort(out.begin(), out.end());
  return out;
}

NgramCountTable build_counts(std::span<const TokenizedCaption> captions, int order) {
  check_order(order);
  if (captions.empty()) throw Error(ErrorCode::InvalidArgument, "cannot count an empty corpus");

  NgramCountTable table;
  table.order_ = order;
  table.n_captions_ = captions.size();
  std::vector<TokenId> padded;
  std::size_t tokens = 0;
  for (const auto& c : captions) tokens += c.tokens.size() + 1;
  table.bigram_.reserve(tokens);
  if (order == 3) table.trigram_.reserve(tokens);

  for (const auto& c : captions) {
    pad_caption(c.tokens, order, [&](const std::string& t) { return table.vocab_.intern(t); }, padded);
    if (table.unigram_.size() < table.vocab_.size()) table.unigram_.resize(table.vocab_.size() * 2, 0);
    for_each_ngram(
        padded, order, [&](TokenId w) { ++table.unigram_[w]; },
        [&](TokenId a, TokenId b) { ++table.bigram_[pack(a, b)]; },
        [&](TokenId a, TokenId b, TokenId w) { ++table.trigram_[pack(a, b, w)]; });
  }
  table.unigram_.resize(table.vocab_.size());
  table.finalize();
  ++g_tables_built;
  return table;
}

void save_counts(const NgramCountTable& table, const std::filesystem::path& path, std::string_view tag) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  write_pod(out, kCacheVersion);
  write_pod(out, static_cast<std::uint32_t>(table.order()));
  write_pod(out, static_cast<std::uint32_t>(table.vocab().size()));
  write_pod(out, static_cast<std::uint64_t>(table.n_captions()));
  write_pod(out, static_cast<std::uint32_t>(tag.size()));
  out.write(tag.data(), static_cast<std::streamsize>(tag.size()));
  for (TokenId id = kFirstWord; id < table.vocab().size(); ++id) {
    const std::string& w = table.vocab().word(id);
    write_pod(out, static_cast<std::uint32_t>(w.size()));
    out.write(w.data(), static_cast<std::streamsize>(w.size()));
  }
  for (int n = 1; n <= table.order(); ++n) {
    auto entries = table.sorted_entries(n);
    write_pod(out, static_cast<std::uint64_t>(entries.size()));
    for (const auto& [k, c] : entries) {
      write_pod(out, static_cast<std::uint64_t>(k));
      write_pod(out, static_cast<std::uint64_t>(c));
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

NgramCountTable load_counts(const std::filesystem::path& path, std::string* tag) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[sizeof kCacheMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::CacheFormat, path.string() + " is not a count cache");
  }
  if (read_pod<std::uint32_t>(in) != kCacheVersion) {
    throw Error(ErrorCode::CacheFormat, "unsupported cache version");
  }
  NgramCountTable table;
  table.order_ = static_cast<int>(read_pod<std::uint32_t>(in));
  check_order(table.order_);
  const auto vsize = read_pod<std::uint32_t>(in);
  table.n_captions_ = read_pod<std::uint64_t>(in);
  const auto tag_len = read_pod<std::uint32_t>(in);
  std::string stored_tag(tag_len, '\0');
  in.read(stored_tag.data(), tag_len);
  if (!in) throw Error(ErrorCode::CacheFormat, "truncated cache tag");
  if (tag) *tag = std::move(stored_tag);
  if (vsize < kFirstWord || vsize > kMaxVocab) throw Error(ErrorCode::CacheFormat, "bad vocabulary size");
  for (TokenId id = kFirstWord; id < vsize; ++id) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string w(len, '\0');
    in.read(w.data(), len);
    if (!in) throw Error(ErrorCode::CacheFormat, "truncated vocabulary");
    if (table.vocab_.intern(w) != id) throw Error(ErrorCode::CacheFormat, "duplicate vocabulary entry");
  }
  table.unigram_.assign(vsize, 0);
  for (int n = 1; n <= table.order_; ++n) {
    const auto entries = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < entries; ++i) {
      const auto k = read_pod<std::uint64_t>(in);
      const auto c = read_pod<std::uint64_t>(in);
      if (n == 1) {
        if (k >= vsize) throw Error(ErrorCode::CacheFormat, "unigram id out of range");
        table.unigram_[k] = c;
      } else {
        (n == 2 ? table.bigram_ : table.trigram_).emplace(k, c);
      }
    }
  }
  table.finalize();
  return table;
}

void DeltaMap::finalize() {
  std::sort(entries_.begin(), entries_.end());
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (out > 0 && entries_[out - 1].first == entries_[i].first) {
      entries_[out - 1].second += entries_[i].second;
    } else {
      entries_[out++] = entries_[i];
    }
  }
  entries_.resize(out);
}

CountOverlay::CountOverlay(const NgramCountTable& base, std::span<const TokenizedCaption> held_out)
    : base_(&base), n_held_out_(held_out.size()) {
  const int order = base.order();
  const Vocabulary& vocab = base.vocab();
  std::vector<TokenId> padded;

  for (const auto& c : held_out) {
    pad_caption(c.tokens, order, [&](const std::string& t) {
      if (!vocab.contains(t)) {
        throw Error(ErrorCode::NegativeCount, "held-out token '" + t + "' is not in the base table");
      }
      return vocab.lookup(t);
    }, padded);
    for_each_ngram(
        padded, order, [&](TokenId w) { d_unigram_.add(w, 1); },
        [&](TokenId a, TokenId b) { d_bigram_.add(pack(a, b), 1); },
        [&](TokenId a, TokenId b, TokenId w) { d_trigram_.add(pack(a, b, w), 1); });
  }
  d_unigram_.finalize();
  d_bigram_.finalize();
  d_trigram_.finalize();

  auto underflow = [](const char* what) {
    return Error(ErrorCode::NegativeCount, std::string(what) + " count would drop below zero");
  };

  for (const auto& [w, d] : d_unigram_.entries()) {
    const Count c = base.unigram_count(static_cast<TokenId>(w));
    if (c < d) throw underflow("unigram");
    d_total_unigrams_ += d;
    if (c == d && w >= kFirstWord) ++d_word_types_;
  }
  for (const auto& [key, d] : d_bigram_.entries()) {
    const TokenId a = first_id(key, 2), b = last_id(key);
    const Count c = base.bigram_count(a, b);
    if (c < d) throw underflow("bigram");
    d_ctx1_total_.add(a, d);
    if (c == d) {
      d_ctx1_types_.add(a, 1);
      d_left_cont_.add(b, 1);
      ++d_bigram_types_;
    }
  }
  for (const auto& [key, d] : d_trigram_.entries()) {
    const TokenId a = first_id(key, 3), b = mid_id(key), w = last_id(key);
    const Count c = base.trigram_count(a, b, w);
    if (c < d) throw underflow("trigram");
    d_ctx2_total_.add(pack(a, b), d);
    if (c == d) {
      d_ctx2_types_.add(pack(a, b), 1);
      d_mid_cont_.add(pack(b, w), 1);
      d_mid_total_.add(b, 1);
    }
  }
  d_mid_cont_.finalize();
  for (const auto& [key, d] : d_mid_cont_.entries()) {
    if (base.middle_continuations(first_id(key, 2), last_id(key)) == d) d_mid_types_.add(first_id(key, 2), 1);
  }
  for (DeltaMap* m : {&d_ctx1_total_, &d_ctx1_types_, &d_ctx2_total_, &d_ctx2_types_, &d_left_cont_,
                      &d_mid_total_, &d_mid_types_}) {
    m->finalize();
  }
}

TokenId CountOverlay::map_token(std::string_view word) const {
  if (word == kBosToken) return kBos;
  if (word == kEosToken) return kEos;
  TokenId id = vocab().lookup(word);
  return in_vocab(id) ? id : kUnk;
}

}  // namespace capvar::ngram
