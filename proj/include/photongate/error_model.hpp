// ============================================================================
// error_model.hpp -- systematic and statistical errors of the measured P_A
//
// Systematic: two detection channels with efficiencies eta1 = (1+delta) eta
// and eta2 = (1-delta) eta instead of a balanced pair. Statistical: binomial
// fluctuation of a probability estimated from M pulse cycles.
// ============================================================================
#pragma once

#include <cstdint>
#include <optional>

#include "photongate/core.hpp"

namespace photongate {

/// Statistics of a single emitter with background seen by unbalanced
/// detectors.
PhotonStats unbalanced_stats(const DetectionParams& params);

struct SystematicDeviation {
  double delta_p1 = 0.0;  ///< P_A(1) - P'_A(1), never positive
  double delta_p2 = 0.0;  ///< P_A(2) - P'_A(2) = -delta_p1
};

/// Balanced minus unbalanced probabilities, from the closed bracket form.
SystematicDeviation systematic_deviation(const DetectionParams& params);

struct RelativeDeviation {
  double r1 = 0.0;
  double r2 = 0.0;
};

/// delta P divided by the balanced probability. Throws DivideByZero when the
/// balanced P_A(1) or P_A(2) vanishes (eta = 0 or gamma = 0).
RelativeDeviation relative_deviations(const DetectionParams& params);

/// The same ratios from their standalone closed forms; used to cross-check
/// relative_deviations.
RelativeDeviation relative_deviations_closed_form(const DetectionParams& params);

struct SamplingFluctuation {
  double variance = 0.0;  ///< p (1 - p) / M
  double std_dev = 0.0;
};

SamplingFluctuation sampling_fluctuation(double p, std::uint64_t cycles);

struct DeviationReport {
  double delta_p1 = 0.0;
  double delta_p2 = 0.0;
  std::optional<double> r1;  ///< absent when the balanced P_A(1) is 0
  std::optional<double> r2;  ///< absent when the balanced P_A(2) is 0
  double sigma_sq = 0.0;     ///< fluctuation variance of the balanced P_A(1)
};

DeviationReport deviation_report(const DetectionParams& params);

}  // namespace photongate
