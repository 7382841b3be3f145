#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "odbguard/model.hpp"
#include "odbguard/rng.hpp"
#include "odbguard/trace.hpp"

namespace odbguard {

/// Truncated stick-breaking: pi_j = u_j * prod_{k<j} (1 - u_k) for the |u|
/// sticks, plus the leftover mass as a final weight. Throws UsageError if any
/// u lies outside (0, 1).
std::vector<double> stick_weights(std::span<const double> u);

/// Data summary of the records assigned to one component.
struct SufficientStats {
  std::size_t n = 0;
  std::array<double, 9> xtx{};  ///< row-major X'X
  std::array<double, 3> xty{};
  double yty = 0.0;

  void add(const AlignedRecord& r);
};

SufficientStats summarize(std::span<const AlignedRecord> records);

/// Draws z_i with P(z_i = j) proportional to pi_j N(y_i | x_i' beta_j,
/// sigma2_j), evaluated in log space. If every mass underflows the record
/// goes to the component with the largest log density. Indices are 0-based.
std::vector<int> sample_indicators(std::span<const AlignedRecord> records,
                                   std::span<const MixtureComponent> components, Rng& rng);

/// Conjugate Normal-Inverse-Gamma update: sigma2 ~ IG(a*, b*), then
/// beta ~ N(mu*, sigma2 V*). No data reduces to a draw from the prior.
std::pair<std::array<double, 3>, double> sample_component_params(const SufficientStats& stats,
                                                                 const HyperParams& hp, Rng& rng);
std::pair<std::array<double, 3>, double> sample_component_params(
    std::span<const AlignedRecord> assigned, const HyperParams& hp, Rng& rng);

/// u_j ~ Beta(1 + n_j, alpha + sum_{k>j} n_k) for j < n_components - 1.
std::vector<double> sample_sticks(std::span<const int> z, int n_components, double alpha,
                                  Rng& rng);

/// alpha ~ Gamma(e + |u|, f - sum_j log(1 - u_j)).
double sample_alpha(std::span<const double> u, const HyperParams& hp, Rng& rng);

/// Called after every sweep with (iteration, n_iter).
using FitProgress = std::function<void(int, int)>;

/// Blocked Gibbs sampler for the truncated DP mixture of regressions.
/// Requires at least 10 records, none labelled manipulated. The truncation
/// level is min(hp.j_max, records.size()). Deterministic in hp.seed.
PosteriorSamples fit(std::span<const AlignedRecord> records, const HyperParams& hp,
                     const FitProgress& progress = {});

namespace detail {
/// fit() without the data preconditions; `n_components` is used as given.
PosteriorSamples run_gibbs(std::span<const AlignedRecord> records, const HyperParams& hp,
                           int n_components, const FitProgress& progress = {});
}  // namespace detail

struct ComponentSummary {
  int index = 0;
  double mean_weight = 0.0;
  std::array<double, 3> beta_mean{};
  std::array<double, 3> beta_lo{};  ///< 2.5% posterior quantile
  std::array<double, 3> beta_hi{};  ///< 97.5% posterior quantile
  double sigma2_mean = 0.0;
};

struct ComponentReport {
  std::vector<int> per_draw_count;  ///< components with pi >= threshold in each draw
  std::vector<ComponentSummary> components;  ///< mean weight >= threshold, heaviest first
};

/// Components whose posterior mean weight reaches `threshold`.
ComponentReport nonempty_components(const PosteriorSamples& samples, double threshold = 1e-5);

}  // namespace odbguard
