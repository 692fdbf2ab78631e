#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "capvar/corpus.hpp"
#include "capvar/scorers.hpp"

namespace capvar {

enum class VarianceKind { Sample, Population };

// Single-pass (Welford) variance; Sample divides by n-1.
double variance(std::span<const double> values, VarianceKind kind = VarianceKind::Sample);

struct VarianceRecord {
  std::string image_id;
  Group group = Group::Human;
  std::string scorer_id;
  std::size_t n_captions = 0;
  double variance = 0.0;
};

struct SkippedGroup {
  std::string image_id;
  Group group = Group::Human;
  std::size_t n_captions = 0;
};

struct VarianceResult {
  std::vector<VarianceRecord> records;  // sorted by (image_id, group)
  std::vector<SkippedGroup> skipped;    // INSUFFICIENT_CAPTIONS
};

// Variance of caption mean surprisals within each (image, group).
VarianceResult group_variance(const ScoredDataset& scored, const Dataset& dataset,
                              VarianceKind kind = VarianceKind::Sample);

struct PairedSamples {
  std::vector<std::string> image_ids;
  std::vector<double> human;
  std::vector<double> model;
};

// Images with a variance record in both groups, in image order.
PairedSamples pair_by_image(const VarianceResult& variances);

struct PairedTestResult {
  std::size_t n_pairs = 0;
  double mean_h = 0.0, sd_h = 0.0;
  double mean_m = 0.0, sd_m = 0.0;
  double mean_diff = 0.0;
  double t_value = 0.0;
  std::size_t df = 0;
  double p_two_sided = 1.0;
  double cohens_dz = 0.0;
  // ZERO_VARIANCE_OF_DIFFERENCES: all differences equal. t is 0 (p = 1,
  // dz = 0) when they are all zero, otherwise +-inf with p = 0.
  bool zero_variance = false;
};

// Paired t-test on h[i] - m[i]. Throws LENGTH_MISMATCH, or
// INSUFFICIENT_CAPTIONS when fewer than two pairs are given.
PairedTestResult paired_t_test(std::span<const double> h, std::span<const double> m);

// Regularized incomplete beta I_x(a, b); y must equal 1 - x (passed
// separately so callers can avoid cancellation).
double regularized_incomplete_beta(double a, double b, double x, double y);
double regularized_incomplete_beta(double a, double b, double x);

// One-sided upper tail P(T > t) of Student's t with df degrees of freedom.
double student_t_sf(double t, double df);

// "***" p < .001, "**" < .01, "*" < .05, otherwise "ns".
std::string p_stars(double p);

// Per-describer summary: mean of caption means and across-image variance of
// caption means (sd = sqrt(variance)).
struct DescriberSurprisal {
  std::string describer_id;
  Group group = Group::Human;
  std::size_t n_captions = 0;
  double mean_surprisal = 0.0;
  double variance = 0.0;
  double sd = 0.0;
};

std::vector<DescriberSurprisal> describer_summary(const ScoredDataset& scored,
                                                  VarianceKind kind = VarianceKind::Sample);

}  // namespace capvar
