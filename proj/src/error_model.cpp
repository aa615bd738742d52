#include "photongate/error_model.hpp"

#include <cmath>

#include <fmt/format.h>

#include "photongate/analytic.hpp"
#include "photongate/errors.hpp"

namespace photongate {

namespace {

// (1 - eta1/2) e^{-x} + (1 - eta2/2) e^{x} - (2 - eta), x = delta eta gamma / 2.
// Written with expm1 because x is ~1e-3 in realistic regimes.
double unbalance_excess(const DetectionParams& params) {
  const double x = 0.5 * params.delta() * params.background_mean();
  const double keep_a = 1.0 - 0.5 * params.eta1();
  const double keep_b = 1.0 - 0.5 * params.eta2();
  return keep_a * std::expm1(-x) + keep_b * std::expm1(x);
}

}  // namespace

PhotonStats unbalanced_stats(const DetectionParams& params) {
  return source_stats(EmitterWithBackground{}, params);
}

SystematicDeviation systematic_deviation(const DetectionParams& params) {
  const double damping = std::exp(-0.5 * params.background_mean());
  const double excess = unbalance_excess(params);
  return {-excess * damping, excess * damping};
}

RelativeDeviation relative_deviations(const DetectionParams& params) {
  const auto balanced = single_with_background_stats(params);
  if (balanced.p1() == 0.0) {
    throw DivideByZero("R1: balanced P_A(1) is zero");
  }
  if (balanced.p2() == 0.0) {
    throw DivideByZero("R2: balanced P_A(2) is zero (no background)");
  }
  const auto dev = systematic_deviation(params);
  return {dev.delta_p1 / balanced.p1(), dev.delta_p2 / balanced.p2()};
}

RelativeDeviation relative_deviations_closed_form(const DetectionParams& params) {
  const double eta = params.eta();
  const double h = 0.5 * params.background_mean();
  const double excess = unbalance_excess(params);
  // 2 (1 - e^{-h}) + eta (2 e^{-h} - 1)
  const double den1 = -2.0 * std::expm1(-h) + eta * (1.0 + 2.0 * std::expm1(-h));
  // eta - 2 + e^{h} + (1 - eta) e^{-h}
  const double den2 = std::expm1(h) + (1.0 - eta) * std::expm1(-h);
  if (den1 == 0.0) {
    throw DivideByZero("R1: balanced P_A(1) is zero");
  }
  if (den2 == 0.0) {
    throw DivideByZero("R2: balanced P_A(2) is zero (no background)");
  }
  return {-excess / den1, excess / den2};
}

SamplingFluctuation sampling_fluctuation(double p, std::uint64_t cycles) {
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw RangeError("p", fmt::format("{} is not a probability", p));
  }
  if (cycles < 1) {
    throw RangeError("cycles", "must be at least 1");
  }
  const double variance = p * (1.0 - p) / static_cast<double>(cycles);
  return {variance, std::sqrt(variance)};
}

DeviationReport deviation_report(const DetectionParams& params) {
  const auto balanced = single_with_background_stats(params);
  const auto dev = systematic_deviation(params);
  DeviationReport r;
  r.delta_p1 = dev.delta_p1;
  r.delta_p2 = dev.delta_p2;
  if (balanced.p1() > 0.0) {
    r.r1 = dev.delta_p1 / balanced.p1();
  }
  if (balanced.p2() > 0.0) {
    r.r2 = dev.delta_p2 / balanced.p2();
  }
  r.sigma_sq = sampling_fluctuation(balanced.p1(), params.cycles()).variance;
  return r;
}

}  // namespace photongate
