#include "photongate/core.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include <fmt/format.h>

#include "photongate/errors.hpp"

namespace photongate {

namespace {

void require_finite(const char* field, double v) {
  if (!std::isfinite(v)) {
    throw RangeError(field, "must be finite");
  }
}

}  // namespace

DetectionParams DetectionParams::make(double eta, double delta, double gamma,
                                      std::uint64_t cycles) {
  require_finite("eta", eta);
  require_finite("delta", delta);
  require_finite("gamma", gamma);
  if (eta < 0.0 || eta > 1.0) {
    throw RangeError("eta", fmt::format("{} outside [0, 1]", eta));
  }
  if (delta < 0.0 || delta >= 1.0) {
    throw RangeError("delta", fmt::format("{} outside [0, 1)", delta));
  }
  if (gamma < 0.0) {
    throw RangeError("gamma", fmt::format("{} is negative", gamma));
  }
  if (cycles < 1) {
    throw RangeError("cycles", "must be at least 1");
  }
  // eta2 = (1 - delta) eta is always within [0, 1] given the checks above.
  if ((1.0 + delta) * eta > 1.0) {
    throw RangeError("delta", fmt::format("eta1 = (1 + {}) * {} = {} exceeds 1",
                                          delta, eta, (1.0 + delta) * eta));
  }
  return {eta, delta, gamma, cycles};
}

DetectionParams DetectionParams::from_channels(double eta1, double eta2,
                                               double gamma,
                                               std::uint64_t cycles) {
  require_finite("eta1", eta1);
  require_finite("eta2", eta2);
  if (eta1 < 0.0 || eta1 > 1.0) {
    throw RangeError("eta1", fmt::format("{} outside [0, 1]", eta1));
  }
  if (eta2 < 0.0 || eta2 > 1.0) {
    throw RangeError("eta2", fmt::format("{} outside [0, 1]", eta2));
  }
  if (eta1 < eta2) {
    throw RangeError("eta1", "must be >= eta2 (swap the channel labels)");
  }
  const double sum = eta1 + eta2;
  const double delta = sum > 0.0 ? (eta1 - eta2) / sum : 0.0;
  return make(0.5 * sum, delta, gamma, cycles);
}

void validate(const SourceModel& source) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IdealEmitters>) {
          if (s.count < 1) {
            throw RangeError("source.emitters", "must be at least 1");
          }
        } else if constexpr (std::is_same_v<T, Coherent>) {
          if (!std::isfinite(s.mu) || s.mu < 0.0) {
            throw RangeError("source.mu", fmt::format("{} is not a valid mean", s.mu));
          }
        }
      },
      source);
}

std::string describe(const SourceModel& source) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IdealEmitters>) {
          return fmt::format("ideal emitters (s = {})", s.count);
        } else if constexpr (std::is_same_v<T, EmitterWithBackground>) {
          return "single emitter with Poisson background";
        } else {
          return fmt::format("coherent light (mu = {})", s.mu);
        }
      },
      source);
}

PhotonStats PhotonStats::from_probabilities(double p0, double p1, double p2) {
  constexpr double kClamp = 1e-12;
  const char* names[] = {"p0", "p1", "p2"};
  double* values[] = {&p0, &p1, &p2};
  for (int i = 0; i < 3; ++i) {
    double& v = *values[i];
    require_finite(names[i], v);
    if (v < -kClamp || v > 1.0 + kClamp) {
      throw RangeError(names[i], fmt::format("{} is not a probability", v));
    }
    v = std::clamp(v, 0.0, 1.0);
  }
  const double sum = p0 + p1 + p2;
  if (std::abs(sum - 1.0) > kNormalizationTolerance) {
    throw RangeError("p0+p1+p2", fmt::format("sums to {:.17g}, not 1", sum));
  }
  return {p0, p1, p2};
}

double PhotonStats::q() const noexcept {
  const double n = mean_n();
  if (n <= 0.0) {
    return 0.0;
  }
  return 2.0 * p2_ / n - n;
}

ClickCounts counts_from_totals(std::uint64_t n_all, std::uint64_t n_single,
                               std::uint64_t n_double) {
  if (n_single + n_double > n_all) {
    throw RangeError("n_all", fmt::format("{} pulses cannot hold {} events",
                                          n_all, n_single + n_double));
  }
  ClickCounts c;
  c.n_all = n_all;
  c.n_11 = n_double;
  c.n_10 = n_single - n_single / 2;
  c.n_01 = n_single / 2;
  c.n_00 = n_all - n_single - n_double;
  return c;
}

const char* to_string(Decision d) noexcept {
  switch (d) {
    case Decision::Single:
      return "Yes";
    case Decision::NotSingle:
      return "No";
    case Decision::Indeterminate:
      return "Indeterminate";
  }
  return "?";
}

}  // namespace photongate
