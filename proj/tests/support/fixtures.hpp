#pragma once

// Generators and independent reference computations shared by the test
// binaries. Nothing here calls into the sampler code it is used to check.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "odbguard/model.hpp"
#include "odbguard/rng.hpp"
#include "odbguard/trace.hpp"

namespace fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

double uniform(odbguard::Rng& rng, double lo, double hi);
double normal(odbguard::Rng& rng, double mean = 0.0, double sd = 1.0);

/// Arbitrary valid trip: random lengths, irregular timestamps, optional labels.
odbguard::RawTrip random_trip(odbguard::Rng& rng, bool with_labels);
std::vector<odbguard::AlignedRecord> random_records(odbguard::Rng& rng, std::size_t n);
odbguard::PosteriorSamples random_posterior(odbguard::Rng& rng, std::size_t n_draws);

/// y = x' beta + N(0, sigma^2) with x ~ N(0, I).
std::vector<odbguard::AlignedRecord> linear_records(std::size_t n, const std::array<double, 3>& beta,
                                                    double sigma, std::uint64_t seed);

/// Closed-form Normal-Inverse-Gamma posterior of a single regression.
struct NigPosterior {
  std::array<double, 3> mean{};
  std::array<std::array<double, 3>, 3> cov_scale{};  ///< V*
  double a = 0.0;
  double b = 0.0;

  double sigma2_mean() const { return b / (a - 1.0); }
  double sigma2_var() const { return b * b / ((a - 1.0) * (a - 1.0) * (a - 2.0)); }
  /// Marginal of beta_k is Student-t with 2a dof, scale^2 = (b/a) V*_kk.
  double beta_var(int k) const { return (b / a) * cov_scale[k][k] * (2.0 * a) / (2.0 * a - 2.0); }
};

NigPosterior nig_posterior(const std::vector<odbguard::AlignedRecord>& records,
                           const odbguard::HyperParams& hp);

/// Ordinary least squares without intercept.
std::array<double, 3> ols(const std::vector<odbguard::AlignedRecord>& records);

std::array<std::array<double, 3>, 3> inverse3(const std::array<std::array<double, 3>, 3>& m);

/// Standard normal CDF and its inverse by bisection.
double normal_cdf(double z);
double normal_quantile(double p);

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double se() const;  ///< naive standard error of the mean
  std::size_t n = 0;
};
Moments moments(const std::vector<double>& v);

/// Standard error of the mean allowing for autocorrelation (batch means).
double batch_se(const std::vector<double>& v, std::size_t n_batches = 50);

}  // namespace fixtures
