#pragma once

#include <cstddef>
#include <cstdint>

#include "capvar/corpus.hpp"

namespace capvar {

// Two-group caption generator for validating the pipeline. MODEL captions
// are drawn verbatim from a small pool of shared templates; HUMAN captions
// are drawn from the same pool and then each token is replaced, with
// probability substitution_rate, by a uniform draw from the vocabulary.
struct SyntheticSpec {
  std::size_t n_images = 200;
  std::size_t captions_per_group = 5;
  std::size_t template_pool = 20;
  std::size_t vocab_size = 1000;
  double substitution_rate = 0.3;
  std::uint64_t seed = 42;
  // Template lengths are uniform on [min_length, max_length].
  std::size_t min_length = 8;
  std::size_t max_length = 13;
};

void validate(const SyntheticSpec& spec);

Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace capvar
