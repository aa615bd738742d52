// ============================================================================
// core.hpp -- shared vocabulary for per-pulse photon statistics
//
// Every quantity here describes one excitation pulse seen through a 50/50
// beamsplitter feeding two saturable single-photon detectors (A and B). A
// detector clicks at most once per gate, so a pulse yields one of four joint
// outcomes and the detected photon number n is 0, 1 or 2.
// ============================================================================
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace photongate {

inline constexpr double kNormalizationTolerance = 1e-9;

/// Detection-side parameters.
///
/// The channel unbalance is restricted to [0, 1). A negative unbalance is the
/// same physical system with the two detectors relabelled, and the
/// deviation formulas are invariant under that swap.
///
/// gamma is a source-side background scale: the detected background is
/// Poisson with mean eta * gamma.
class DetectionParams {
public:
  /// Throws RangeError naming the offending field.
  static DetectionParams make(double eta, double delta, double gamma,
                              std::uint64_t cycles);

  /// Builds from per-channel efficiencies (eta1 >= eta2).
  static DetectionParams from_channels(double eta1, double eta2, double gamma,
                                       std::uint64_t cycles);

  [[nodiscard]] double eta() const noexcept { return eta_; }
  [[nodiscard]] double delta() const noexcept { return delta_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] std::uint64_t cycles() const noexcept { return cycles_; }

  [[nodiscard]] double eta1() const noexcept { return (1.0 + delta_) * eta_; }
  [[nodiscard]] double eta2() const noexcept { return (1.0 - delta_) * eta_; }

  /// Mean detected background photons per pulse.
  [[nodiscard]] double background_mean() const noexcept { return eta_ * gamma_; }

  [[nodiscard]] DetectionParams with_cycles(std::uint64_t cycles) const {
    return make(eta_, delta_, gamma_, cycles);
  }

  friend bool operator==(const DetectionParams&, const DetectionParams&) = default;

private:
  DetectionParams(double eta, double delta, double gamma, std::uint64_t cycles)
      : eta_(eta), delta_(delta), gamma_(gamma), cycles_(cycles) {}

  double eta_;
  double delta_;
  double gamma_;
  std::uint64_t cycles_;
};

// ---------------------------------------------------------------------------
// Source models
// ---------------------------------------------------------------------------

/// s independent ideal single-photon emitters, no background.
struct IdealEmitters {
  std::uint32_t count = 1;
};

/// One ideal emitter plus Poisson background of detected mean eta * gamma.
struct EmitterWithBackground {};

/// Pulsed coherent light with source-side Poisson mean mu.
struct Coherent {
  double mu = 0.0;
};

using SourceModel = std::variant<IdealEmitters, EmitterWithBackground, Coherent>;

/// Throws RangeError if s < 1 or mu < 0 (or not finite).
void validate(const SourceModel& source);

[[nodiscard]] std::string describe(const SourceModel& source);

// ---------------------------------------------------------------------------
// Detected statistics
// ---------------------------------------------------------------------------

/// Per-pulse detected probabilities P(0), P(1), P(2).
///
/// Only the three probabilities are stored; the mean photon number and the
/// Mandel parameter are always derived from them.
class PhotonStats {
public:
  /// Throws RangeError if an entry is negative or the sum misses 1 by more
  /// than kNormalizationTolerance. Round-off negatives down to -1e-12 are
  /// clamped to zero.
  static PhotonStats from_probabilities(double p0, double p1, double p2);

  [[nodiscard]] double p0() const noexcept { return p0_; }
  [[nodiscard]] double p1() const noexcept { return p1_; }
  [[nodiscard]] double p2() const noexcept { return p2_; }

  /// <n> = P(1) + 2 P(2).
  [[nodiscard]] double mean_n() const noexcept { return p1_ + 2.0 * p2_; }

  /// Mandel Q = 2 P(2) / <n> - <n>; zero for the vacuum.
  [[nodiscard]] double q() const noexcept;

private:
  PhotonStats(double p0, double p1, double p2) : p0_(p0), p1_(p1), p2_(p2) {}

  double p0_;
  double p1_;
  double p2_;
};

/// Tallies of joint click outcomes (SPCM A, SPCM B) over n_all pulses.
struct ClickCounts {
  std::uint64_t n_all = 0;
  std::uint64_t n_00 = 0;
  std::uint64_t n_10 = 0;
  std::uint64_t n_01 = 0;
  std::uint64_t n_11 = 0;

  /// Counts for one pulse with at most one click per channel.
  void record(bool click_a, bool click_b) noexcept {
    ++n_all;
    if (click_a && click_b) {
      ++n_11;
    } else if (click_a) {
      ++n_10;
    } else if (click_b) {
      ++n_01;
    } else {
      ++n_00;
    }
  }

  ClickCounts& operator+=(const ClickCounts& other) noexcept {
    n_all += other.n_all;
    n_00 += other.n_00;
    n_10 += other.n_10;
    n_01 += other.n_01;
    n_11 += other.n_11;
    return *this;
  }

  [[nodiscard]] std::uint64_t single_events() const noexcept { return n_10 + n_01; }
  [[nodiscard]] std::uint64_t double_events() const noexcept { return n_11; }

  [[nodiscard]] bool consistent() const noexcept {
    return n_00 + n_10 + n_01 + n_11 == n_all;
  }

  friend bool operator==(const ClickCounts&, const ClickCounts&) = default;
};

/// Builds counts from the summary totals N_all, N(1), N(2).
/// Single events are split evenly between the two channels.
[[nodiscard]] ClickCounts counts_from_totals(std::uint64_t n_all,
                                             std::uint64_t n_single,
                                             std::uint64_t n_double);

// ---------------------------------------------------------------------------
// Classification output
// ---------------------------------------------------------------------------

enum class Decision { Single, NotSingle, Indeterminate };

[[nodiscard]] const char* to_string(Decision d) noexcept;

struct Verdict {
  Decision decision = Decision::Indeterminate;
  std::string reason;

  double mean_n = 0.0;
  double p1_measured = 0.0;
  double p2_measured = 0.0;
  double q = 0.0;

  /// Corrected critical values P1, P2.
  double p1_critical = 0.0;
  double p2_critical = 0.0;

  /// SBR estimate P(1)^2 / (2 P(2)); absent when the source was not deemed
  /// single or the estimator is not applicable. +inf with no coincidences.
  std::optional<double> measured_sbr;
  double sbr0 = 0.0;

  /// P(1) - P1.
  double margin_p1 = 0.0;

  /// Finite-sample fluctuation of P(1) at the critical value, both forms.
  double fluctuation_variance_p1 = 0.0;
  double fluctuation_stddev_p1 = 0.0;
};

}  // namespace photongate
