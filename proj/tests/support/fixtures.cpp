#include "fixtures.hpp"

#include <unistd.h>

#include <cmath>
#include <random>

namespace fixtures {

namespace {

std::filesystem::path unique_dir(const std::string& tag) {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    auto p = base / ("odbguard-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    if (std::filesystem::create_directories(p)) return p;
  }
}

}  // namespace

TempDir::TempDir(const std::string& tag) : path_(unique_dir(tag)) {}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

double uniform(odbguard::Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

double normal(odbguard::Rng& rng, double mean, double sd) {
  std::normal_distribution<double> d(mean, sd);
  return d(rng);
}

odbguard::RawTrip random_trip(odbguard::Rng& rng, bool with_labels) {
  odbguard::RawTrip trip;
  if (rng.uniform() < 0.8) trip.vin = "1HGCM82633A00" + std::to_string(1000 + rng() % 9000);
  trip.meta.seed = rng();
  if (rng.uniform() < 0.7) trip.meta.scenario = "gen-" + std::to_string(rng() % 1000);

  const auto n_speed = static_cast<std::size_t>(rng() % 40);
  const auto n_accel = static_cast<std::size_t>(rng() % 200);
  double t = uniform(rng, 0.0, 3.0);
  for (std::size_t i = 0; i < n_speed; ++i) {
    // Mix of whole and fractional speeds, irregular gaps.
    const double v = rng.uniform() < 0.5 ? std::floor(uniform(rng, 0.0, 256.0)) : uniform(rng, 0.0, 255.0);
    trip.speed_series.push_back({t, std::min(v, 255.0)});
    t += uniform(rng, 0.5, 1.5);
  }
  t = uniform(rng, 0.0, 2.0);
  for (std::size_t i = 0; i < n_accel; ++i) {
    trip.accel_series.push_back({t, normal(rng, 0.0, 3.0), normal(rng), normal(rng, 9.81, 0.5)});
    t += uniform(rng, 0.01, 0.2);
  }
  if (!trip.speed_series.empty() && !trip.accel_series.empty()) {
    // Keep the channels overlapping.
    const bool disjoint = trip.speed_series.back().t < trip.accel_series.front().t ||
                          trip.accel_series.back().t < trip.speed_series.front().t;
    if (disjoint) trip.accel_series.clear();
  }
  if (with_labels) {
    std::vector<bool> labels;
    for (std::size_t i = 0; i < trip.speed_series.size(); ++i) labels.push_back(rng.uniform() < 0.3);
    trip.truth_labels = labels;
  }
  return trip;
}

std::vector<odbguard::AlignedRecord> random_records(odbguard::Rng& rng, std::size_t n) {
  std::vector<odbguard::AlignedRecord> out;
  std::int64_t t = static_cast<std::int64_t>(rng() % 100);
  for (std::size_t i = 0; i < n; ++i) {
    odbguard::AlignedRecord r;
    r.t = t;
    t += 1 + static_cast<std::int64_t>(rng() % 3);
    r.y = normal(rng, 0.0, 2.0);
    r.x = {normal(rng, 0.0, 2.0), normal(rng), normal(rng, 9.81, 0.3)};
    const double u = rng.uniform();
    if (u < 0.3) {
      r.label = true;
    } else if (u < 0.8) {
      r.label = false;
    }
    out.push_back(r);
  }
  return out;
}

odbguard::PosteriorSamples random_posterior(odbguard::Rng& rng, std::size_t n_draws) {
  odbguard::PosteriorSamples s;
  s.hyperparams.e = uniform(rng, 0.5, 20.0);
  s.hyperparams.lambda = uniform(rng, 0.1, 10.0);
  s.hyperparams.j_max = 1 + static_cast<int>(rng() % 8);
  s.hyperparams.n_iter = 100 + static_cast<int>(rng() % 1000);
  s.hyperparams.burn_in = static_cast<int>(rng() % 100);
  s.hyperparams.thin = 1 + static_cast<int>(rng() % 5);
  s.hyperparams.seed = rng();
  s.hyperparams.mu_beta = {normal(rng), normal(rng), normal(rng)};
  s.n_records_fitted = rng() % 100000;
  for (std::size_t d = 0; d < n_draws; ++d) {
    odbguard::PosteriorDraw draw;
    draw.alpha = uniform(rng, 0.01, 50.0);
    const int j = s.hyperparams.j_max;
    double rest = 1.0;
    for (int k = 0; k < j; ++k) {
      odbguard::MixtureComponent c;
      c.pi = k + 1 == j ? rest : rest * rng.uniform();
      rest -= c.pi;
      c.beta = {normal(rng), normal(rng), normal(rng)};
      c.sigma2 = uniform(rng, 1e-6, 4.0);
      draw.components.push_back(c);
    }
    s.draws.push_back(draw);
  }
  return s;
}

std::vector<odbguard::AlignedRecord> linear_records(std::size_t n, const std::array<double, 3>& beta,
                                                    double sigma, std::uint64_t seed) {
  odbguard::Rng rng(seed);
  std::vector<odbguard::AlignedRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    odbguard::AlignedRecord r;
    r.t = static_cast<std::int64_t>(i);
    r.x = {normal(rng), normal(rng), normal(rng)};
    r.y = r.x[0] * beta[0] + r.x[1] * beta[1] + r.x[2] * beta[2] + normal(rng, 0.0, sigma);
    r.label = false;
    out.push_back(r);
  }
  return out;
}

std::array<std::array<double, 3>, 3> inverse3(const std::array<std::array<double, 3>, 3>& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  std::array<std::array<double, 3>, 3> inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

NigPosterior nig_posterior(const std::vector<odbguard::AlignedRecord>& records,
                           const odbguard::HyperParams& hp) {
  std::array<std::array<double, 3>, 3> precision{};
  std::array<double, 3> rhs{};
  double yy = 0.0;
  for (int i = 0; i < 3; ++i) {
    precision[i][i] = 1.0 / hp.lambda;
    rhs[i] = hp.mu_beta[i] / hp.lambda;
  }
  for (const auto& r : records) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) precision[i][j] += r.x[i] * r.x[j];
      rhs[i] += r.x[i] * r.y;
    }
    yy += r.y * r.y;
  }
  NigPosterior post;
  post.cov_scale = inverse3(precision);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) post.mean[i] += post.cov_scale[i][j] * rhs[j];
  }
  double prior_quad = 0.0, post_quad = 0.0;
  for (int i = 0; i < 3; ++i) {
    prior_quad += hp.mu_beta[i] * hp.mu_beta[i] / hp.lambda;
    for (int j = 0; j < 3; ++j) post_quad += post.mean[i] * precision[i][j] * post.mean[j];
  }
  post.a = hp.a + static_cast<double>(records.size()) / 2.0;
  post.b = hp.b + 0.5 * (yy + prior_quad - post_quad);
  return post;
}

std::array<double, 3> ols(const std::vector<odbguard::AlignedRecord>& records) {
  std::array<std::array<double, 3>, 3> xtx{};
  std::array<double, 3> xty{};
  for (const auto& r : records) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) xtx[i][j] += r.x[i] * r.x[j];
      xty[i] += r.x[i] * r.y;
    }
  }
  const auto inv = inverse3(xtx);
  std::array<double, 3> beta{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) beta[i] += inv[i][j] * xty[j];
  }
  return beta;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double Moments::se() const { return std::sqrt(var / static_cast<double>(n)); }

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.n = v.size();
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

double batch_se(const std::vector<double>& v, std::size_t n_batches) {
  const std::size_t size = v.size() / n_batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) s += v[i];
    means.push_back(s / static_cast<double>(size));
  }
  return std::sqrt(moments(means).var / static_cast<double>(n_batches));
}

}  // namespace fixtures
