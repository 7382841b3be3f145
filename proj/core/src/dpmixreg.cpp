#include "odbguard/dpmixreg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "odbguard/error.hpp"

namespace odbguard {

namespace {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Keeps a Beta draw strictly inside (0, 1) so log(1 - u) stays finite.
double clamp_open_unit(double u) {
  constexpr double kLo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(u, kLo, hi);
}

double draw_gamma(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double draw_beta(double a, double b, Rng& rng) {
  const double x = draw_gamma(a, 1.0, rng);
  const double y = draw_gamma(b, 1.0, rng);
  if (x + y == 0.0) return a >= b ? 1.0 : 0.0;
  return x / (x + y);
}

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

void HyperParams::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(e) || !positive(f)) throw UsageError("e and f must be > 0");
  if (!positive(lambda)) throw UsageError("lambda must be > 0");
  if (!positive(a) || !positive(b)) throw UsageError("a and b must be > 0");
  for (double m : mu_beta) {
    if (!std::isfinite(m)) throw UsageError("mu_beta must be finite");
  }
  if (j_max < 1) throw UsageError("J_max must be >= 1");
  if (n_iter < 1) throw UsageError("n_iter must be >= 1");
  if (burn_in < 0 || burn_in >= n_iter) throw UsageError("burn_in must lie in [0, n_iter)");
  if (thin < 1) throw UsageError("thin must be >= 1");
}

std::vector<double> stick_weights(std::span<const double> u) {
  std::vector<double> w;
  w.reserve(u.size() + 1);
  double remaining = 1.0;
  for (double uj : u) {
    if (!(uj > 0.0 && uj < 1.0)) throw UsageError("stick proportions must lie in (0, 1)");
    w.push_back(uj * remaining);
    remaining *= 1.0 - uj;
  }
  w.push_back(remaining);
  return w;
}

void SufficientStats::add(const AlignedRecord& r) {
  ++n;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) xtx[3 * i + j] += r.x[i] * r.x[j];
    xty[i] += r.x[i] * r.y;
  }
  yty += r.y * r.y;
}

SufficientStats summarize(std::span<const AlignedRecord> records) {
  SufficientStats s;
  for (const auto& r : records) s.add(r);
  return s;
}

std::vector<int> sample_indicators(std::span<const AlignedRecord> records,
                                   std::span<const MixtureComponent> components, Rng& rng) {
  const std::size_t J = components.size();
  if (J == 0) throw UsageError("sample_indicators needs at least one component");
  std::vector<double> log_norm(J), inv_two_var(J), log_pi(J);
  for (std::size_t j = 0; j < J; ++j) {
    const auto& c = components[j];
    if (!(c.sigma2 > 0.0)) throw NumericError("component variance must be > 0");
    log_pi[j] = c.pi > 0.0 ? std::log(c.pi) : kNegInf;
    log_norm[j] = -0.5 * std::log(2.0 * std::numbers::pi * c.sigma2);
    inv_two_var[j] = 0.5 / c.sigma2;
  }

  std::vector<int> z(records.size());
  std::vector<double> lp(J), ld(J);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    double best = kNegInf;
    for (std::size_t j = 0; j < J; ++j) {
      const auto& beta = components[j].beta;
      const double resid = r.y - (r.x[0] * beta[0] + r.x[1] * beta[1] + r.x[2] * beta[2]);
      ld[j] = log_norm[j] - resid * resid * inv_two_var[j];
      lp[j] = log_pi[j] + ld[j];
      best = std::max(best, lp[j]);
    }
    if (!std::isfinite(best)) {
      z[i] = static_cast<int>(std::max_element(ld.begin(), ld.end()) - ld.begin());
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      lp[j] = std::exp(lp[j] - best);
      total += lp[j];
    }
    double target = rng.uniform() * total;
    std::size_t pick = J - 1;
    for (std::size_t j = 0; j < J; ++j) {
      target -= lp[j];
      if (target < 0.0) {
        pick = j;
        break;
      }
    }
    // Rounding can leave `target` marginally positive; never land on a zero mass.
    while (lp[pick] == 0.0 && pick > 0) --pick;
    z[i] = static_cast<int>(pick);
  }
  return z;
}

std::pair<std::array<double, 3>, double> sample_component_params(const SufficientStats& stats,
                                                                 const HyperParams& hp, Rng& rng) {
  const Mat3 xtx = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(stats.xtx.data());
  const Vec3 xty(stats.xty[0], stats.xty[1], stats.xty[2]);
  const Vec3 mu(hp.mu_beta[0], hp.mu_beta[1], hp.mu_beta[2]);
  const double prior_prec = 1.0 / hp.lambda;

  const Mat3 precision = prior_prec * Mat3::Identity() + xtx;
  const Eigen::LLT<Mat3> llt(precision);
  if (llt.info() != Eigen::Success) {
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(precision, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "posterior precision is not positive definite (eigenvalues " << eig.eigenvalues().transpose()
        << ", n=" << stats.n << ")";
    throw NumericError(msg.str());
  }
  const Vec3 rhs = prior_prec * mu + xty;
  const Vec3 mean = llt.solve(rhs);

  const double quad = std::max(0.0, stats.yty + prior_prec * mu.squaredNorm() - mean.dot(rhs));
  const double a_post = hp.a + 0.5 * static_cast<double>(stats.n);
  const double b_post = hp.b + 0.5 * quad;

  const double sigma2 = 1.0 / draw_gamma(a_post, b_post, rng);
  if (!std::isfinite(sigma2) || sigma2 <= 0.0) {
    throw NumericError("sigma2 draw is not a positive finite number (a*=" + std::to_string(a_post) +
                       ", b*=" + std::to_string(b_post) + ")");
  }
  std::normal_distribution<double> std_normal(0.0, 1.0);
  Vec3 noise;
  for (int i = 0; i < 3; ++i) noise[i] = std_normal(rng);
  const Vec3 beta = mean + std::sqrt(sigma2) * Vec3(llt.matrixU().solve(noise));
  if (!beta.allFinite()) throw NumericError("beta draw is not finite");
  return {{beta[0], beta[1], beta[2]}, sigma2};
}

std::pair<std::array<double, 3>, double> sample_component_params(
    std::span<const AlignedRecord> assigned, const HyperParams& hp, Rng& rng) {
  return sample_component_params(summarize(assigned), hp, rng);
}

std::vector<double> sample_sticks(std::span<const int> z, int n_components, double alpha,
                                  Rng& rng) {
  if (n_components < 1) throw UsageError("need at least one component");
  std::vector<double> counts(static_cast<std::size_t>(n_components), 0.0);
  for (int zi : z) {
    if (zi < 0 || zi >= n_components) throw UsageError("indicator out of range");
    counts[static_cast<std::size_t>(zi)] += 1.0;
  }
  std::vector<double> u(static_cast<std::size_t>(n_components - 1));
  double tail = 0.0;
  for (double c : counts) tail += c;
  for (std::size_t j = 0; j < u.size(); ++j) {
    tail -= counts[j];
    u[j] = clamp_open_unit(draw_beta(1.0 + counts[j], alpha + tail, rng));
  }
  return u;
}

double sample_alpha(std::span<const double> u, const HyperParams& hp, Rng& rng) {
  double rate = hp.f;
  for (double uj : u) rate -= std::log1p(-uj);
  const double alpha = draw_gamma(hp.e + static_cast<double>(u.size()), rate, rng);
  // A Gamma draw can round to zero for tiny shapes; alpha must stay positive.
  return std::max(alpha, std::numeric_limits<double>::min());
}

namespace detail {

PosteriorSamples run_gibbs(std::span<const AlignedRecord> records, const HyperParams& hp,
                           int n_components, const FitProgress& progress) {
  hp.validate();
  if (n_components < 1) throw UsageError("need at least one component");
  const auto J = static_cast<std::size_t>(n_components);

  PosteriorSamples out;
  out.hyperparams = hp;
  out.n_records_fitted = records.size();
  out.draws.reserve(static_cast<std::size_t>((hp.n_iter - hp.burn_in + hp.thin - 1) / hp.thin));

  // Start from a draw of the prior hierarchy.
  Rng init = Rng::substream(hp.seed, 0);
  double alpha = draw_gamma(hp.e, hp.f, init);
  std::vector<double> u(J - 1);
  for (auto& uj : u) uj = clamp_open_unit(draw_beta(1.0, alpha, init));
  std::vector<MixtureComponent> comps(J);
  const SufficientStats empty;
  for (auto& c : comps) std::tie(c.beta, c.sigma2) = sample_component_params(empty, hp, init);

  std::vector<int> z;
  std::vector<SufficientStats> stats(J);
  for (int iter = 0; iter < hp.n_iter; ++iter) {
    Rng rng = Rng::substream(hp.seed, static_cast<std::uint64_t>(iter) + 1);
    try {
      auto w = stick_weights(u);
      for (std::size_t j = 0; j < J; ++j) comps[j].pi = w[j];

      z = sample_indicators(records, comps, rng);

      std::fill(stats.begin(), stats.end(), SufficientStats{});
      for (std::size_t i = 0; i < records.size(); ++i) stats[static_cast<std::size_t>(z[i])].add(records[i]);
      for (std::size_t j = 0; j < J; ++j) {
        std::tie(comps[j].beta, comps[j].sigma2) = sample_component_params(stats[j], hp, rng);
      }

      u = sample_sticks(z, n_components, alpha, rng);
      alpha = sample_alpha(u, hp, rng);
    } catch (const NumericError& e) {
      throw NumericError("Gibbs iteration " + std::to_string(iter) + ": " + e.what());
    }

    if (iter >= hp.burn_in && (iter - hp.burn_in) % hp.thin == 0) {
      auto w = stick_weights(u);
      PosteriorDraw d;
      d.alpha = alpha;
      d.components = comps;
      for (std::size_t j = 0; j < J; ++j) d.components[j].pi = w[j];
      out.draws.push_back(std::move(d));
    }
    if (progress) progress(iter + 1, hp.n_iter);
  }
  return out;
}

}  // namespace detail

PosteriorSamples fit(std::span<const AlignedRecord> records, const HyperParams& hp,
                     const FitProgress& progress) {
  hp.validate();
  if (records.size() < 10) {
    throw UsageError("fit needs at least 10 records, got " + std::to_string(records.size()));
  }
  for (const auto& r : records) {
    if (r.label.value_or(false)) {
      throw UsageError("training records must be clean; record t=" + std::to_string(r.t) +
                       " is labelled manipulated");
    }
  }
  const int J = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(hp.j_max), records.size()));
  return detail::run_gibbs(records, hp, J, progress);
}

ComponentReport nonempty_components(const PosteriorSamples& samples, double threshold) {
  if (samples.draws.empty()) throw UsageError("posterior has no draws");
  ComponentReport report;
  std::size_t J = 0;
  for (const auto& d : samples.draws) J = std::max(J, d.components.size());

  std::vector<double> weight_sum(J, 0.0);
  for (const auto& d : samples.draws) {
    int count = 0;
    for (std::size_t j = 0; j < d.components.size(); ++j) {
      weight_sum[j] += d.components[j].pi;
      if (d.components[j].pi >= threshold) ++count;
    }
    report.per_draw_count.push_back(count);
  }

  const auto n_draws = static_cast<double>(samples.draws.size());
  for (std::size_t j = 0; j < J; ++j) {
    const double mean_weight = weight_sum[j] / n_draws;
    if (mean_weight < threshold) continue;
    ComponentSummary s;
    s.index = static_cast<int>(j);
    s.mean_weight = mean_weight;
    std::array<std::vector<double>, 3> betas;
    double sigma2_sum = 0.0;
    std::size_t present = 0;
    for (const auto& d : samples.draws) {
      if (j >= d.components.size()) continue;
      const auto& c = d.components[j];
      for (int k = 0; k < 3; ++k) betas[k].push_back(c.beta[k]);
      sigma2_sum += c.sigma2;
      ++present;
    }
    for (int k = 0; k < 3; ++k) {
      double sum = 0.0;
      for (double b : betas[k]) sum += b;
      s.beta_mean[k] = sum / static_cast<double>(present);
      s.beta_lo[k] = quantile(betas[k], 0.025);
      s.beta_hi[k] = quantile(betas[k], 0.975);
    }
    s.sigma2_mean = sigma2_sum / static_cast<double>(present);
    report.components.push_back(s);
  }
  std::stable_sort(report.components.begin(), report.components.end(),
                   [](const auto& a, const auto& b) { return a.mean_weight > b.mean_weight; });
  return report;
}

}  // namespace odbguard
