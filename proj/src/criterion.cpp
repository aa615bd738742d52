#include "photongate/criterion.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "photongate/analytic.hpp"
#include "photongate/errors.hpp"
#include "photongate/simulation.hpp"

namespace photongate {

namespace {

void check_mean_n(double mean_n) {
  if (!std::isfinite(mean_n) || mean_n < 0.0 || mean_n > 2.0) {
    throw RangeError("mean_n", fmt::format("{} outside [0, 2]", mean_n));
  }
}

void check_operating_range(double mean_n) {
  if (!std::isfinite(mean_n) || mean_n <= 0.0 || mean_n > 1.0) {
    throw RangeError("mean_n", fmt::format("{} outside (0, 1]", mean_n));
  }
}

// Single emitter with background at fixed <n>: coincidence probability as a
// function of the detected background mean B, with S = (n - B) / (1 - B/2).
double coincidences_at_fixed_mean(double mean_n, double B) {
  const double S = (mean_n - B) / (1.0 - 0.5 * B);
  return 0.5 * B * S + 0.25 * B * B - 0.25 * B * B * S;
}

}  // namespace

double boundary_eta(double mean_n) {
  check_mean_n(mean_n);
  // 2 - sqrt(4 - 2n) rationalised to avoid cancellation at small n.
  return 2.0 * mean_n / (2.0 + std::sqrt(4.0 - 2.0 * mean_n));
}

UncorrectedBounds uncorrected_bounds(double mean_n) {
  const double e = boundary_eta(mean_n);
  return {mean_n - e * e, 0.5 * e * e};
}

double sbr_threshold(double mean_n) {
  check_operating_range(mean_n);
  const double target = uncorrected_bounds(mean_n).p2;
  double lo = 0.0;  // background-free: no coincidences, below target
  double hi = mean_n;
  if (!(coincidences_at_fixed_mean(mean_n, hi) > target)) {
    throw ConvergenceError(
        fmt::format("SBR0 root not bracketed at <n> = {}", mean_n));
  }
  for (int it = 0; it < 400 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi;
       ++it) {
    const double mid = 0.5 * (lo + hi);
    if (coincidences_at_fixed_mean(mean_n, mid) > target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double B = 0.5 * (lo + hi);
  if (!(B > 0.0)) {
    throw ConvergenceError(fmt::format("SBR0 solve collapsed at <n> = {}", mean_n));
  }
  const double S = (mean_n - B) / (1.0 - 0.5 * B);
  return S / B;
}

CriticalValues corrected_critical_values(double mean_n,
                                         const DetectionParams& params,
                                         FluctuationTerm term) {
  check_operating_range(mean_n);
  const auto bounds = uncorrected_bounds(mean_n);
  const auto dev = systematic_deviation(params);

  CriticalValues cv;
  cv.p1_bound = bounds.p1;
  cv.p2_bound = bounds.p2;
  cv.delta_p1 = dev.delta_p1;
  cv.delta_p2 = dev.delta_p2;
  cv.fluct_p1 = sampling_fluctuation(bounds.p1, params.cycles());
  cv.fluct_p2 = sampling_fluctuation(bounds.p2, params.cycles());
  if (term == FluctuationTerm::Variance) {
    cv.sigma_p1 = cv.fluct_p1.variance;
    cv.sigma_p2 = cv.fluct_p2.variance;
  } else {
    cv.sigma_p1 = cv.fluct_p1.std_dev;
    cv.sigma_p2 = cv.fluct_p2.std_dev;
  }
  cv.p1_corrected = bounds.p1 - dev.delta_p1 + cv.sigma_p1;
  cv.p2_corrected = bounds.p2 - dev.delta_p2 - cv.sigma_p2;
  return cv;
}

Verdict classify(const PhotonStats& stats, const ClickCounts& counts,
                 const DetectionParams& params, const ClassifyOptions& options) {
  if (!counts.consistent() || counts.n_all == 0) {
    throw RangeError("counts", "outcome tallies do not add up to n_all");
  }
  const auto measured = stats_from_counts(counts);
  if (std::abs(measured.p1() - stats.p1()) > kNormalizationTolerance ||
      std::abs(measured.p2() - stats.p2()) > kNormalizationTolerance) {
    throw RangeError("counts", "do not match the supplied statistics");
  }

  Verdict v;
  v.mean_n = stats.mean_n();
  v.p1_measured = stats.p1();
  v.p2_measured = stats.p2();
  v.q = stats.q();

  if (v.mean_n <= 0.0) {
    v.decision = Decision::Indeterminate;
    v.reason = "no photons detected";
    return v;
  }
  if (v.mean_n > 1.0) {
    v.decision = Decision::Indeterminate;
    v.reason = fmt::format("<n> = {:.6g} outside validated range (0, 1]", v.mean_n);
    return v;
  }

  const auto cv = corrected_critical_values(v.mean_n, params, options.term);
  v.p1_critical = cv.p1_corrected;
  v.p2_critical = cv.p2_corrected;
  v.fluctuation_variance_p1 = cv.fluct_p1.variance;
  v.fluctuation_stddev_p1 = cv.fluct_p1.std_dev;
  v.sbr0 = sbr_threshold(v.mean_n);
  v.margin_p1 = v.p1_measured - v.p1_critical;

  if (v.margin_p1 <= options.tie_tolerance) {
    v.decision = Decision::NotSingle;
    v.reason = "P(1) does not exceed the critical value P1";
    return v;
  }

  const auto sbr = sbr_from_stats(stats);
  if (!sbr.usable()) {
    v.decision = Decision::Indeterminate;
    v.reason = "SBR estimator not applicable: P(1) < 2 sqrt(P(2)) - 3 P(2)";
    return v;
  }
  v.measured_sbr = sbr.value;
  if (sbr.value < v.sbr0) {
    v.decision = Decision::Indeterminate;
    v.reason = fmt::format("SBR {:.4g} below threshold SBR0 = {:.4g}; criterion not applicable",
                           sbr.value, v.sbr0);
    return v;
  }
  v.decision = Decision::Single;
  v.reason = "P(1) exceeds the critical value P1";
  return v;
}

Verdict classify(const ClickCounts& counts, const DetectionParams& params,
                 const ClassifyOptions& options) {
  return classify(stats_from_counts(counts), counts, params, options);
}

DetectionParams infer_params(const PhotonStats& stats, double delta,
                             std::uint64_t cycles) {
  const double n = stats.mean_n();
  if (!(n > 0.0)) {
    throw RangeError("mean_n", "no photons detected; nothing to infer");
  }
  const auto sbr = sbr_from_stats(stats);
  if (!sbr.usable()) {
    throw RangeError("sbr", "SBR estimator not applicable to these statistics");
  }
  if (sbr.status == SbrStatus::Infinite) {
    return DetectionParams::make(std::min(n, 1.0), delta, 0.0, cycles);
  }
  // n = B + r B (1 - B/2): smaller root of (r/2) B^2 - (1 + r) B + n = 0.
  const double r = sbr.value;
  const double disc = (1.0 + r) * (1.0 + r) - 2.0 * r * n;
  if (disc < 0.0) {
    throw RangeError("sbr", "no background level reproduces these statistics");
  }
  const double B = 2.0 * n / ((1.0 + r) + std::sqrt(disc));
  const double S = r * B;
  if (!(S > 0.0) || S > 1.0 || B >= 2.0) {
    throw RangeError("sbr", fmt::format("inferred S = {}, B = {} out of range", S, B));
  }
  const double gamma = -2.0 * std::log1p(-0.5 * B) / S;
  return DetectionParams::make(S, delta, gamma, cycles);
}

}  // namespace photongate
