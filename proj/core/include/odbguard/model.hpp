#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace odbguard {

/// Prior and sampler settings for the Dirichlet-process mixture of
/// regressions. V_beta = lambda * I.
struct HyperParams {
  double e = 10.0;  ///< Gamma shape of the concentration prior.
  double f = 1.0;   ///< Gamma rate of the concentration prior.
  std::array<double, 3> mu_beta{0.0, 0.0, 0.0};
  double lambda = 5.0;
  double a = 2.0;  ///< Inverse-Gamma shape of sigma^2.
  double b = 0.5;  ///< Inverse-Gamma scale of sigma^2.
  int j_max = 30;
  int n_iter = 30000;
  int burn_in = 15000;
  int thin = 1;
  std::uint64_t seed = 0;

  /// Throws UsageError on an invalid combination.
  void validate() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

struct MixtureComponent {
  double pi = 0.0;
  std::array<double, 3> beta{};
  double sigma2 = 1.0;

  friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

/// One retained Gibbs draw.
struct PosteriorDraw {
  double alpha = 1.0;
  std::vector<MixtureComponent> components;

  friend bool operator==(const PosteriorDraw&, const PosteriorDraw&) = default;
};

/// The fitted model: retained draws plus the settings that produced them.
struct PosteriorSamples {
  HyperParams hyperparams;
  std::vector<PosteriorDraw> draws;
  std::size_t n_records_fitted = 0;

  friend bool operator==(const PosteriorSamples&, const PosteriorSamples&) = default;
};

inline constexpr int kPosteriorSchemaVersion = 1;

// Posterior JSON:
// {version, hyperparams, n_records_fitted,
//  draws:[{alpha, components:[{pi, beta:[b1,b2,b3], sigma2}]}]}

void save_posterior(const PosteriorSamples& samples, std::ostream& out);
void save_posterior(const PosteriorSamples& samples, const std::filesystem::path& path);
PosteriorSamples load_posterior(std::istream& in);
PosteriorSamples load_posterior(const std::filesystem::path& path);

HyperParams load_hyperparams(const std::filesystem::path& path);

}  // namespace odbguard
