#include "photongate/analytic.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <type_traits>

#include <fmt/format.h>

#include "photongate/errors.hpp"

namespace photongate {

namespace {

void check_efficiency(const char* field, double eta) {
  if (!std::isfinite(eta) || eta < 0.0 || eta > 1.0) {
    throw RangeError(field, fmt::format("{} outside [0, 1]", eta));
  }
}

void check_emitters(std::uint32_t s) {
  if (s < 1) {
    throw RangeError("s", "at least one emitter required");
  }
}

void trim_trailing_zeros(std::vector<double>& probs) {
  while (probs.size() > 1 && probs.back() == 0.0) {
    probs.pop_back();
  }
}

// 1 - (1 - p)^s without cancellation for small p.
double one_minus_pow_complement(double p, double s) {
  return -std::expm1(s * std::log1p(-p));
}

double poisson_term(double mu, std::size_t k) {
  if (mu == 0.0) {
    return k == 0 ? 1.0 : 0.0;
  }
  const double kk = static_cast<double>(k);
  return std::exp(kk * std::log(mu) - mu - std::lgamma(kk + 1.0));
}

// All Poisson terms until they are negligible past the mode.
std::vector<double> poisson_terms(double mu) {
  std::vector<double> terms;
  constexpr std::size_t kCap = 100000;
  for (std::size_t k = 0; k < kCap; ++k) {
    const double t = poisson_term(mu, k);
    terms.push_back(t);
    if (static_cast<double>(k) > mu && t < 1e-300) {
      break;
    }
    if (mu == 0.0) {
      break;
    }
  }
  return terms;
}

PhotonStats from_joint(double p00, double p10, double p01, double p11) {
  return PhotonStats::from_probabilities(p00, p10 + p01, p11);
}

}  // namespace

SourceDistribution binomial_source(std::uint32_t s, double eta) {
  check_emitters(s);
  check_efficiency("eta", eta);
  SourceDistribution d;
  d.probs.resize(s + 1);
  double coeff = 1.0;  // C(s, n)
  for (std::uint32_t n = 0; n <= s; ++n) {
    d.probs[n] = coeff * std::pow(1.0 - eta, s - n) * std::pow(eta, n);
    coeff = coeff * static_cast<double>(s - n) / static_cast<double>(n + 1);
  }
  trim_trailing_zeros(d.probs);
  return d;
}

SourceDistribution poisson_source(double mu, std::size_t n_max) {
  if (!std::isfinite(mu) || mu < 0.0) {
    throw RangeError("mu", fmt::format("{} is not a valid Poisson mean", mu));
  }
  const auto terms = poisson_terms(mu);
  SourceDistribution d;
  const std::size_t kept = std::min(n_max + 1, terms.size());
  d.probs.assign(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(kept));
  // Sum the tail from the smallest terms upward.
  double tail = 0.0;
  for (std::size_t k = terms.size(); k-- > kept;) {
    tail += terms[k];
  }
  d.tail_mass = tail;
  trim_trailing_zeros(d.probs);
  return d;
}

SourceDistribution poisson_source(double mu) {
  if (!std::isfinite(mu) || mu < 0.0) {
    throw RangeError("mu", fmt::format("{} is not a valid Poisson mean", mu));
  }
  constexpr double kTailTarget = 1e-12;
  const auto terms = poisson_terms(mu);
  // suffix[k] = sum_{j >= k} terms[j]
  std::vector<double> suffix(terms.size() + 1, 0.0);
  for (std::size_t k = terms.size(); k-- > 0;) {
    suffix[k] = suffix[k + 1] + terms[k];
  }
  std::size_t n_max = 0;
  while (n_max + 1 < terms.size() && suffix[n_max + 1] >= kTailTarget) {
    ++n_max;
  }
  return poisson_source(mu, n_max);
}

PhotonStats hbt_transform(const SourceDistribution& src) {
  if (src.probs.empty()) {
    throw RangeError("probs", "empty distribution");
  }
  double total = src.tail_mass;
  for (double p : src.probs) {
    if (!std::isfinite(p) || p < 0.0) {
      throw RangeError("probs", fmt::format("{} is not a probability", p));
    }
    total += p;
  }
  if (!std::isfinite(src.tail_mass) || src.tail_mass < 0.0) {
    throw RangeError("tail_mass", "must be a nonnegative probability");
  }
  if (std::abs(total - 1.0) > kNormalizationTolerance) {
    throw RangeError("probs", fmt::format("sums to {:.17g} with tail", total));
  }
  if (src.tail_mass > kNormalizationTolerance) {
    throw RangeError("tail_mass",
                     fmt::format("{:.3g} truncated; raise n_max", src.tail_mass));
  }

  double p1 = 0.0;
  double p2 = 0.0;
  for (std::size_t n = 1; n < src.probs.size(); ++n) {
    // A pulse of n photons lands entirely on one detector with 2^(1-n).
    const double same_side = std::ldexp(1.0, 1 - static_cast<int>(n));
    p1 += src.probs[n] * same_side;
    p2 += src.probs[n] * (1.0 - same_side);
  }
  // Truncated photon numbers reach both detectors up to 2^-n_max.
  p2 += src.tail_mass;
  return PhotonStats::from_probabilities(src.probs[0], p1, p2);
}

PhotonStats multi_emitter_stats(std::uint32_t s, double eta) {
  check_emitters(s);
  check_efficiency("eta", eta);
  const double ds = static_cast<double>(s);
  const double any = one_minus_pow_complement(eta, ds);         // 1 - (1-eta)^s
  const double any_a = one_minus_pow_complement(0.5 * eta, ds);  // 1 - (1-eta/2)^s
  const double p1 = 2.0 * (any - any_a);
  const double p2 = 2.0 * any_a - any;
  return PhotonStats::from_probabilities(1.0 - any, p1, p2);
}

double multi_emitter_mean_n(std::uint32_t s, double eta) {
  const auto src = binomial_source(s, eta);
  double mean = src.probs.size() > 1 ? src.probs[1] : 0.0;
  for (std::size_t n = 2; n < src.probs.size(); ++n) {
    const double weight = (std::ldexp(1.0, static_cast<int>(n)) - 1.0) /
                          std::ldexp(1.0, static_cast<int>(n) - 1);
    mean += weight * src.probs[n];
  }
  return mean;
}

PhotonStats double_molecule_stats(double eta) {
  check_efficiency("eta", eta);
  const double e2 = eta * eta;
  return PhotonStats::from_probabilities((1.0 - eta) * (1.0 - eta),
                                         2.0 * eta - 1.5 * e2, 0.5 * e2);
}

double background_from_params(double eta, double gamma) {
  return -2.0 * std::expm1(-0.5 * eta * gamma);
}

PhotonStats single_with_background_stats(const DetectionParams& params) {
  const double eta = params.eta();
  const double h = 0.5 * params.background_mean();
  const double u = std::exp(-h);     // no background on one side
  const double w = -std::expm1(-h);  // background on one side
  const double p0 = u * u * (1.0 - eta);
  const double p1 = 2.0 * u * w + eta * u * (1.0 - 2.0 * w);
  const double p2 = w * w + eta * u * w;
  return PhotonStats::from_probabilities(p0, p1, p2);
}

PhotonStats stats_from_sb(double signal, double background) {
  if (!std::isfinite(signal) || signal < 0.0 || signal > 1.0) {
    throw RangeError("S", fmt::format("{} outside [0, 1]", signal));
  }
  if (!std::isfinite(background) || background < 0.0 || background > 2.0) {
    throw RangeError("B", fmt::format("{} outside [0, 2]", background));
  }
  const double S = signal;
  const double B = background;
  const double half = 1.0 - 0.5 * B;
  const double p0 = (1.0 - S) * half * half;
  const double p1 = (S + B - S * B) * half;
  const double p2 = 0.5 * B * S + 0.25 * B * B - 0.25 * B * B * S;
  return PhotonStats::from_probabilities(p0, p1, p2);
}

PhotonStats source_stats(const SourceModel& source, const DetectionParams& params) {
  validate(source);
  const double a = 0.5 * params.eta1();  // photon routed to A and detected
  const double b = 0.5 * params.eta2();
  const double lost = 1.0 - params.eta();

  return std::visit(
      [&](const auto& s) -> PhotonStats {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IdealEmitters>) {
          const double ds = static_cast<double>(s.count);
          const double any = one_minus_pow_complement(params.eta(), ds);
          const double click_a = one_minus_pow_complement(a, ds);
          const double click_b = one_minus_pow_complement(b, ds);
          return from_joint(1.0 - any, any - click_b, any - click_a,
                            click_a + click_b - any);
        } else if constexpr (std::is_same_v<T, EmitterWithBackground>) {
          const double g = params.gamma();
          const double bg_a = -std::expm1(-g * a);
          const double bg_b = -std::expm1(-g * b);
          const double p11 = a * bg_b + b * bg_a + lost * bg_a * bg_b;
          const double p10 = (1.0 - bg_b) * (a + lost * bg_a);
          const double p01 = (1.0 - bg_a) * (b + lost * bg_b);
          const double p00 = lost * (1.0 - bg_a) * (1.0 - bg_b);
          return from_joint(p00, p10, p01, p11);
        } else {
          const double click_a = -std::expm1(-s.mu * a);
          const double click_b = -std::expm1(-s.mu * b);
          return from_joint((1.0 - click_a) * (1.0 - click_b),
                            click_a * (1.0 - click_b), (1.0 - click_a) * click_b,
                            click_a * click_b);
        }
      },
      source);
}

double mandel_q(const PhotonStats& stats) { return stats.q(); }

SbrEstimate sbr_from_stats(const PhotonStats& stats) {
  const double p1 = stats.p1();
  const double p2 = stats.p2();
  if (p2 == 0.0) {
    return {SbrStatus::Infinite, std::numeric_limits<double>::infinity()};
  }
  if (p1 < 2.0 * std::sqrt(p2) - 3.0 * p2) {
    return {SbrStatus::NotApplicable, std::numeric_limits<double>::quiet_NaN()};
  }
  return {SbrStatus::Finite, p1 * p1 / (2.0 * p2)};
}

double g2_zero_estimate(const ClickCounts& counts) {
  if (counts.n_all == 0) {
    throw DivideByZero("g2(0): no pulses");
  }
  const double n = static_cast<double>(counts.n_all);
  const double pa = static_cast<double>(counts.n_10 + counts.n_11) / n;
  const double pb = static_cast<double>(counts.n_01 + counts.n_11) / n;
  if (pa == 0.0 || pb == 0.0) {
    throw DivideByZero("g2(0): a channel recorded no clicks");
  }
  return (static_cast<double>(counts.n_11) / n) / (pa * pb);
}

}  // namespace photongate
