#include "capvar/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "capvar/error.hpp"

namespace capvar {

namespace {

// Continued fraction for I_x(a,b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 100000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double two_pass_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double two_pass_sd(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double variance(std::span<const double> values, VarianceKind kind) {
  const std::size_t n = values.size();
  if (n == 0 || (kind == VarianceKind::Sample && n < 2)) {
    throw Error(ErrorCode::InsufficientCaptions, "variance needs at least two values");
  }
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : values) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  const double denom = kind == VarianceKind::Sample ? static_cast<double>(n - 1) : static_cast<double>(n);
  return std::max(0.0, m2 / denom);
}

VarianceResult group_variance(const ScoredDataset& scored, const Dataset& dataset, VarianceKind kind) {
  std::map<std::pair<std::string, Group>, std::vector<double>> means;
  for (const auto& r : scored.records) {
    if (!dataset.find(r.image_id, r.describer_id)) {
      throw Error(ErrorCode::UnknownCaption, "(" + r.image_id + ", " + r.describer_id + ") not in dataset");
    }
    means[{r.image_id, r.group}].push_back(r.mean_surprisal);
  }

  VarianceResult out;
  for (const auto& [image_id, img] : dataset.images()) {
    for (Group g : {Group::Human, Group::Model}) {
      const std::size_t in_dataset = g == Group::Human ? img.human.size() : img.model.size();
      if (in_dataset == 0) continue;
      auto it = means.find({image_id, g});
      const std::size_t n = it == means.end() ? 0 : it->second.size();
      if (n < 2) {
        out.skipped.push_back({image_id, g, n});
        continue;
      }
      out.records.push_back({image_id, g, scored.scorer_id, n, variance(it->second, kind)});
    }
  }
  return out;
}

PairedSamples pair_by_image(const VarianceResult& variances) {
  std::map<std::string, std::pair<const VarianceRecord*, const VarianceRecord*>> by_image;
  for (const auto& r : variances.records) {
    auto& slot = by_image[r.image_id];
    (r.group == Group::Human ? slot.first : slot.second) = &r;
  }
  PairedSamples out;
  for (const auto& [id, pair] : by_image) {
    if (!pair.first || !pair.second) continue;
    out.image_ids.push_back(id);
    out.human.push_back(pair.first->variance);
    out.model.push_back(pair.second->variance);
  }
  return out;
}

PairedTestResult paired_t_test(std::span<const double> h, std::span<const double> m) {
  if (h.size() != m.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(h.size()) + " human vs " + std::to_string(m.size()) + " model values");
  }
  const std::size_t n = h.size();
  if (n < 2) throw Error(ErrorCode::InsufficientCaptions, "paired t-test needs at least two pairs");

  PairedTestResult r;
  r.n_pairs = n;
  r.df = n - 1;
  r.mean_h = two_pass_mean(h);
  r.sd_h = two_pass_sd(h, r.mean_h);
  r.mean_m = two_pass_mean(m);
  r.sd_m = two_pass_sd(m, r.mean_m);

  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = h[i] - m[i];
  r.mean_diff = two_pass_mean(d);

  if (std::all_of(d.begin(), d.end(), [&](double x) { return x == d.front(); })) {
    r.zero_variance = true;
    if (d.front() == 0.0) {
      r.t_value = 0.0;
      r.p_two_sided = 1.0;
      r.cohens_dz = 0.0;
    } else {
      r.t_value = std::copysign(std::numeric_limits<double>::infinity(), d.front());
      r.p_two_sided = 0.0;
      r.cohens_dz = std::numeric_limits<double>::infinity();
    }
    return r;
  }

  const double sd_d = two_pass_sd(d, r.mean_diff);
  const double root_n = std::sqrt(static_cast<double>(n));
  r.t_value = r.mean_diff / (sd_d / root_n);
  r.p_two_sided = std::min(1.0, 2.0 * student_t_sf(std::fabs(r.t_value), static_cast<double>(r.df)));
  r.cohens_dz = std::fabs(r.mean_diff) / sd_d;
  return r;
}

double regularized_incomplete_beta(double a, double b, double x, double y) {
  if (!(a > 0.0 && b > 0.0)) throw Error(ErrorCode::InvalidArgument, "beta parameters must be positive");
  if (x < 0.0 || x > 1.0) throw Error(ErrorCode::InvalidArgument, "x must lie in [0,1]");
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  const double log_x = x > 0.5 ? std::log1p(-y) : std::log(x);
  const double log_y = y > 0.5 ? std::log1p(-x) : std::log(y);
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * log_x + b * log_y);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

double regularized_incomplete_beta(double a, double b, double x) {
  return regularized_incomplete_beta(a, b, x, 1.0 - x);
}

double student_t_sf(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::InvalidArgument, "df must be positive");
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  if (t == 0.0) return 0.5;
  const double t2 = t * t;
  double x, y;
  if (std::isinf(t2)) {
    x = 0.0;
    y = 1.0;
  } else {
    x = df / (df + t2);
    y = t2 / (df + t2);
  }
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x, y);
  return t > 0.0 ? tail : 1.0 - tail;
}

std::string p_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "ns";
}

std::vector<DescriberSurprisal> describer_summary(const ScoredDataset& scored, VarianceKind kind) {
  std::map<std::string, std::pair<Group, std::vector<double>>> by_describer;
  for (const auto& r : scored.records) {
    auto& slot = by_describer[r.describer_id];
    slot.first = r.group;
    slot.second.push_back(r.mean_surprisal);
  }
  std::vector<DescriberSurprisal> out;
  for (const auto& [id, slot] : by_describer) {
    DescriberSurprisal row;
    row.describer_id = id;
    row.group = slot.first;
    row.n_captions = slot.second.size();
    row.mean_surprisal = two_pass_mean(slot.second);
    const bool enough = kind == VarianceKind::Sample ? slot.second.size() >= 2 : !slot.second.empty();
    row.variance = enough ? variance(slot.second, kind) : 0.0;
    row.sd = std::sqrt(row.variance);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace capvar
