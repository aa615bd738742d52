// ============================================================================
// criterion.hpp -- single-molecule decision rule
//
// A source is compared with two ideal emitters producing the same mean
// detected photon number <n>. Fewer coincidences than that boundary (or,
// equivalently, more single-click events) identify a single emitter. The
// boundary is shifted by the channel-unbalance deviation and by the
// finite-sample fluctuation, and is only meaningful while the signal to
// background ratio stays above SBR0(<n>).
// ============================================================================
#pragma once

#include <utility>

#include "photongate/core.hpp"
#include "photongate/error_model.hpp"

namespace photongate {

/// Efficiency at which two ideal emitters give this <n>: 2 - sqrt(4 - 2<n>).
/// Throws RangeError outside [0, 2].
double boundary_eta(double mean_n);

struct UncorrectedBounds {
  double p1 = 0.0;  ///< single-event lower bound
  double p2 = 0.0;  ///< coincidence upper bound
};

UncorrectedBounds uncorrected_bounds(double mean_n);

/// Smallest S/B for which a single emitter with background still has fewer
/// coincidences than the two-emitter boundary at this <n>. Found by bisection
/// on the background mean. Requires 0 < <n> <= 1.
double sbr_threshold(double mean_n);

/// How the finite-sample term enters the corrected critical values.
enum class FluctuationTerm {
  Variance,  ///< p (1 - p) / M, negligible at realistic M
  StdDev,    ///< sqrt(p (1 - p) / M)
};

struct CriticalValues {
  double p1_bound = 0.0;
  double p2_bound = 0.0;
  double p1_corrected = 0.0;
  double p2_corrected = 0.0;
  double delta_p1 = 0.0;
  double delta_p2 = 0.0;
  /// Fluctuation term actually applied to P1 and P2.
  double sigma_p1 = 0.0;
  double sigma_p2 = 0.0;
  /// Both forms, evaluated at the uncorrected bounds.
  SamplingFluctuation fluct_p1;
  SamplingFluctuation fluct_p2;
};

/// P1 = p1_bound - deltaP(1) + sigma(1), P2 = p2_bound - deltaP(2) - sigma(2),
/// with deltaP from params and sigma from params.cycles().
CriticalValues corrected_critical_values(
    double mean_n, const DetectionParams& params,
    FluctuationTerm term = FluctuationTerm::Variance);

struct ClassifyOptions {
  FluctuationTerm term = FluctuationTerm::Variance;
  /// |P(1) - P1| within this band counts as a tie (decided NotSingle).
  double tie_tolerance = 1e-12;
};

/// Decision for measured statistics. counts must be self-consistent and
/// describe the same probabilities as stats.
///
/// P(1) <= P1 gives NotSingle. Otherwise the SBR is estimated; the source is
/// Single when it reaches SBR0(<n>) and Indeterminate when it does not, or
/// when the estimator is inapplicable. <n> outside (0, 1] is Indeterminate.
Verdict classify(const PhotonStats& stats, const ClickCounts& counts,
                 const DetectionParams& params, const ClassifyOptions& options = {});

/// Convenience overload deriving the statistics from the counts.
Verdict classify(const ClickCounts& counts, const DetectionParams& params,
                 const ClassifyOptions& options = {});

/// Detection parameters of the single-emitter-plus-background model that
/// reproduces <n> and the measured SBR: eta = S and gamma from
/// B = 2 (1 - exp(-eta gamma / 2)). Throws RangeError when the SBR estimator
/// is not applicable.
DetectionParams infer_params(const PhotonStats& stats, double delta,
                             std::uint64_t cycles);

}  // namespace photongate
