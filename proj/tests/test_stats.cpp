#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "capvar/error.hpp"
#include "capvar/reports.hpp"
#include "capvar/stats.hpp"
#include "data/stats_reference.hpp"

using namespace capvar;

namespace {

double two_pass_sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

double t_density(double x, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * std::numbers::pi);
  return c * std::pow(1.0 + x * x / df, -(df + 1) / 2);
}

// Adaptive Simpson on [a, b].
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
               double whole, double eps, int depth) {
  const double m = (a + b) / 2, lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * eps) return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) + simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
  const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6 * (fa + 4 * fm + fb), eps, 60);
}

}  // namespace

TEST_CASE("sample variance fixtures") {
  const std::vector<double> ones{1, 1, 1, 1, 1};
  const std::vector<double> ramp{1, 2, 3, 4, 5};
  CHECK(variance(ones) == 0.0);
  CHECK(variance(ramp) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(variance(ramp, VarianceKind::Population) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("variance matches two-pass reference on random 5-value sets") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> v(5);
    for (auto& x : v) x = u(rng);
    CHECK(std::abs(variance(v) - two_pass_sample_variance(v)) <= 1e-12);
  }
}

TEST_CASE("paired t-test matches frozen reference values") {
  REQUIRE(kPairedReferences.size() == 20);
  for (const auto& ref : kPairedReferences) {
    const auto r = paired_t_test(ref.h, ref.m);
    CHECK(std::abs(r.t_value - ref.t) <= 1e-9 * std::max(1.0, std::abs(ref.t)));
    CHECK(std::abs(r.p_two_sided - ref.p) <= 1e-8);
    CHECK(r.df == ref.h.size() - 1);
    CHECK(std::abs(r.cohens_dz - std::abs(r.t_value) / std::sqrt(static_cast<double>(r.n_pairs))) <= 1e-12);
  }
}

TEST_CASE("small worked paired example") {
  const std::vector<double> h{5, 7, 9, 6}, m{4, 5, 8, 7};
  const auto r = paired_t_test(h, m);
  CHECK(r.n_pairs == 4);
  CHECK(r.mean_diff == doctest::Approx(0.75));
  CHECK(r.mean_h == doctest::Approx(6.75));
  CHECK(r.mean_m == doctest::Approx(6.0));
  CHECK(r.sd_h == doctest::Approx(std::sqrt(two_pass_sample_variance(h))));
}

TEST_CASE("zero variance of differences") {
  SUBCASE("identical pairs") {
    const std::vector<double> h{1.5, 2.0, 3.25};
    const auto r = paired_t_test(h, h);
    CHECK(r.zero_variance);
    CHECK(r.t_value == 0.0);
    CHECK(r.p_two_sided == 1.0);
    CHECK(r.cohens_dz == 0.0);
  }
  SUBCASE("constant difference") {
    const std::vector<double> h{2, 4, 6}, m{1, 3, 5};
    const auto r = paired_t_test(h, m);
    CHECK(r.zero_variance);
    CHECK(std::isinf(r.t_value));
    CHECK(r.t_value > 0);
    CHECK(r.p_two_sided == 0.0);
  }
}

TEST_CASE("paired t-test errors") {
  const std::vector<double> a{1, 2, 3}, b{1, 2};
  CHECK_THROWS_AS(paired_t_test(a, b), Error);
  try {
    paired_t_test(a, b);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
  const std::vector<double> one{1};
  try {
    paired_t_test(one, one);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientCaptions);
  }
}

TEST_CASE("paired t-test properties") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(3.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + trial % 40;
    std::vector<double> h(n), m(n), hs(n), ms(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = nd(rng);
      m[i] = nd(rng) * 0.8;
      hs[i] = h[i] + 17.0;
      ms[i] = m[i] + 17.0;
    }
    const auto r = paired_t_test(h, m);
    const auto swapped = paired_t_test(m, h);
    CHECK(swapped.t_value == doctest::Approx(-r.t_value).epsilon(1e-12));
    CHECK(swapped.p_two_sided == doctest::Approx(r.p_two_sided).epsilon(1e-12));
    CHECK(swapped.cohens_dz == doctest::Approx(r.cohens_dz).epsilon(1e-12));

    const auto shifted = paired_t_test(hs, ms);
    CHECK(shifted.t_value == doctest::Approx(r.t_value).epsilon(1e-9));
    CHECK(shifted.p_two_sided == doctest::Approx(r.p_two_sided).epsilon(1e-9));
    CHECK(shifted.cohens_dz == doctest::Approx(r.cohens_dz).epsilon(1e-9));

    CHECK(std::abs(r.cohens_dz - std::abs(r.t_value) / std::sqrt(static_cast<double>(n))) <= 1e-12);
    CHECK(r.p_two_sided >= 0.0);
    CHECK(r.p_two_sided <= 1.0);
    CHECK((r.t_value > 0) == (r.mean_diff > 0));
  }
}

TEST_CASE("student t survival function closed forms") {
  CHECK(std::abs(student_t_sf(1.0, 1.0) - 0.25) <= 1e-12);
  for (double df : {1.0, 2.0, 7.0, 100.0, 5000.0}) CHECK(student_t_sf(0.0, df) == 0.5);
  // Cauchy: sf(t) = 1/2 - atan(t)/pi
  for (double t : {-30.0, -2.0, 0.5, 3.0, 80.0}) {
    CHECK(std::abs(student_t_sf(t, 1.0) - (0.5 - std::atan(t) / std::numbers::pi)) <= 1e-12);
  }
  // df = 2: sf(t) = (1 - t / sqrt(t^2 + 2)) / 2
  for (double t : {-4.0, 0.25, 1.0, 9.0}) {
    CHECK(std::abs(student_t_sf(t, 2.0) - 0.5 * (1 - t / std::sqrt(t * t + 2))) <= 1e-12);
  }
}

TEST_CASE("student t survival function matches quadrature") {
  const double df = 10.0;
  auto f = [df](double x) { return t_density(x, df); };
  // Upper tail via 1/2 - integral over [0, t].
  const double reference = 0.5 - integrate(f, 0.0, 2.0, 1e-14);
  CHECK(std::abs(student_t_sf(2.0, df) - reference) <= 1e-8);
  for (double t : {0.7, 1.3, 3.1, 4.4}) {
    CHECK(std::abs(student_t_sf(t, df) - (0.5 - integrate(f, 0.0, t, 1e-14))) <= 1e-8);
  }
}

TEST_CASE("student t survival function matches frozen grid") {
  for (const auto& ref : kSfReferences) {
    INFO("t=" << ref.t << " df=" << ref.df);
    CHECK(std::abs(student_t_sf(ref.t, ref.df) - ref.sf) <= 1e-10);
  }
}

TEST_CASE("student t survival function is monotone and approaches the normal tail") {
  for (double df : {1.0, 3.0, 30.0, 1000.0, 10000.0}) {
    double prev = 1.0;
    for (double t = -50.0; t <= 50.0; t += 0.05) {
      const double s = student_t_sf(t, df);
      CHECK(s <= prev);
      prev = s;
    }
  }
  for (double df : {1000.0, 4999.0, 10000.0}) {
    for (double t = -6.0; t <= 6.0; t += 0.125) {
      const double normal = 0.5 * std::erfc(t / std::numbers::sqrt2);
      CHECK(std::abs(student_t_sf(t, df) - normal) <= 1e-3);
    }
  }
}

TEST_CASE("incomplete beta symmetry") {
  for (double x : {0.01, 0.2, 0.5, 0.77, 0.999}) {
    for (auto [a, b] : {std::pair{0.5, 0.5}, {2.0, 3.0}, {50.0, 0.5}, {0.5, 2500.0}}) {
      CHECK(regularized_incomplete_beta(a, b, x) + regularized_incomplete_beta(b, a, 1 - x) ==
            doctest::Approx(1.0).epsilon(1e-13));
    }
  }
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, b) = 1 - (1-x)^b
  CHECK(regularized_incomplete_beta(1.0, 4.0, 0.3) == doctest::Approx(1 - std::pow(0.7, 4)).epsilon(1e-14));
}

TEST_CASE("p stars thresholds") {
  CHECK(p_stars(0.0) == "***");
  CHECK(p_stars(0.000999) == "***");
  CHECK(p_stars(0.001) == "**");
  CHECK(p_stars(0.0099) == "**");
  CHECK(p_stars(0.01) == "*");
  CHECK(p_stars(0.049) == "*");
  CHECK(p_stars(0.05) == "ns");
  CHECK(p_stars(1.0) == "ns");
}

TEST_CASE("variance TSV round trip") {
  std::vector<VarianceRecord> recs{{"img1", Group::Human, "kn2", 5, 1.0 / 3.0},
                                   {"img1", Group::Model, "kn2", 5, 2.718281828459045},
                                   {"img2", Group::Human, "kn2", 4, 0.0}};
  const auto back = parse_variances_tsv(variances_tsv(recs));
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].image_id == recs[i].image_id);
    CHECK(back[i].group == recs[i].group);
    CHECK(back[i].scorer_id == recs[i].scorer_id);
    CHECK(back[i].n_captions == recs[i].n_captions);
    CHECK(back[i].variance == recs[i].variance);
  }
}
