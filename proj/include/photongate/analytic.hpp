// ============================================================================
// analytic.hpp -- closed-form detected photon statistics
//
// Maps an incoming photon-number distribution through the two-detector
// beamsplitter scheme (random 50/50 routing, one click per detector per
// pulse) and provides the closed forms for ideal emitters, an emitter with
// Poisson background, and coherent light.
// ============================================================================
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "photongate/core.hpp"

namespace photongate {

/// Photon-number distribution of the light arriving at the beamsplitter.
struct SourceDistribution {
  std::vector<double> probs;  ///< P_in(n), n = 0..n_max
  double tail_mass = 0.0;     ///< probability beyond n_max

  [[nodiscard]] std::size_t n_max() const noexcept {
    return probs.empty() ? 0 : probs.size() - 1;
  }
};

/// Binomial distribution of s emitters each surviving with probability eta.
/// Entries beyond the last nonzero term are dropped (eta = 0 gives [1]).
SourceDistribution binomial_source(std::uint32_t s, double eta);

/// Poisson with mean mu truncated at n_max; the tail is summed explicitly.
SourceDistribution poisson_source(double mu, std::size_t n_max);

/// Poisson with the cutoff chosen so the tail falls below 1e-12.
SourceDistribution poisson_source(double mu);

/// Detected statistics of an arbitrary incoming distribution.
/// Throws RangeError if the distribution is invalid or visibly truncated
/// (tail above the normalization tolerance).
PhotonStats hbt_transform(const SourceDistribution& src);

/// Direct closed form for s ideal emitters with common efficiency eta:
/// P(0) = (1-eta)^s, P(1) = 2[(1-eta/2)^s - (1-eta)^s].
PhotonStats multi_emitter_stats(std::uint32_t s, double eta);

/// Mean detected photon number for s ideal emitters as an explicit finite sum
/// over the emitted photon number.
double multi_emitter_mean_n(std::uint32_t s, double eta);

PhotonStats double_molecule_stats(double eta);

/// One ideal emitter of efficiency eta plus background of detected mean
/// eta * gamma, balanced channels.
PhotonStats single_with_background_stats(const DetectionParams& params);

/// Same model parametrised by measured signal S and background B means.
PhotonStats stats_from_sb(double signal, double background);

/// Detected background mean B = 2 (1 - exp(-eta gamma / 2)) for the
/// single-emitter-plus-background model.
double background_from_params(double eta, double gamma);

/// Detected statistics of any source model with per-channel efficiencies
/// eta1, eta2 (route 50/50, then detect). Reduces to the balanced closed
/// forms at delta = 0.
PhotonStats source_stats(const SourceModel& source, const DetectionParams& params);

double mandel_q(const PhotonStats& stats);

enum class SbrStatus {
  Finite,         ///< value is P(1)^2 / (2 P(2))
  Infinite,       ///< no coincidences; value is +inf
  NotApplicable,  ///< P(1) < 2 sqrt(P(2)) - 3 P(2)
};

struct SbrEstimate {
  SbrStatus status = SbrStatus::NotApplicable;
  double value = 0.0;

  [[nodiscard]] bool usable() const noexcept {
    return status != SbrStatus::NotApplicable;
  }
};

/// Signal-to-background ratio of a single emitter with background,
/// estimated from P(1)^2 / (2 P(2)).
SbrEstimate sbr_from_stats(const PhotonStats& stats);

/// Normalized zero-delay coincidence ratio P(1,1) / (P_A P_B).
/// Throws DivideByZero when either channel never clicked.
double g2_zero_estimate(const ClickCounts& counts);

}  // namespace photongate
