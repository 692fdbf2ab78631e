#include "capvar/synthetic.hpp"

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "capvar/error.hpp"

namespace capvar {

namespace {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// draws are derived from raw output to keep datasets identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

std::string padded_name(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

int digits(std::size_t n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

}  // namespace

void validate(const SyntheticSpec& spec) {
  if (spec.n_images == 0 || spec.captions_per_group == 0 || spec.template_pool == 0 || spec.vocab_size == 0 ||
      spec.min_length == 0) {
    throw Error(ErrorCode::ConfigError, "synthetic sizes must all be >= 1");
  }
  if (spec.max_length < spec.min_length) throw Error(ErrorCode::ConfigError, "max_length < min_length");
  if (!(spec.substitution_rate >= 0.0 && spec.substitution_rate <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "substitution rate must lie in [0,1]");
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);

  std::vector<std::string> vocab;
  vocab.reserve(spec.vocab_size);
  const int vw = digits(spec.vocab_size - 1);
  for (std::size_t i = 0; i < spec.vocab_size; ++i) vocab.push_back(padded_name("w", i, vw));

  std::vector<std::vector<std::string>> templates(spec.template_pool);
  const std::size_t span = spec.max_length - spec.min_length + 1;
  for (auto& t : templates) {
    const std::size_t len = spec.min_length + rng.below(span);
    for (std::size_t i = 0; i < len; ++i) t.push_back(vocab[rng.below(vocab.size())]);
  }

  std::vector<TokenizedCaption> captions;
  captions.reserve(spec.n_images * spec.captions_per_group * 2);
  const int iw = digits(spec.n_images - 1);
  const int dw = digits(spec.captions_per_group);
  for (std::size_t img = 0; img < spec.n_images; ++img) {
    const std::string image_id = padded_name("img", img, iw);
    for (std::size_t k = 0; k < spec.captions_per_group; ++k) {
      TokenizedCaption c{image_id, padded_name("model_", k + 1, dw), Group::Model,
                         templates[rng.below(templates.size())]};
      captions.push_back(std::move(c));
    }
    for (std::size_t k = 0; k < spec.captions_per_group; ++k) {
      TokenizedCaption c{image_id, padded_name("human_", k + 1, dw), Group::Human,
                         templates[rng.below(templates.size())]};
      for (auto& tok : c.tokens) {
        if (rng.unit() < spec.substitution_rate) tok = vocab[rng.below(vocab.size())];
      }
      captions.push_back(std::move(c));
    }
  }
  return Dataset::from_captions(std::move(captions), false);
}

}  // namespace capvar
