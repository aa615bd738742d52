// ============================================================================
// simulation.hpp -- Monte Carlo pulse-train simulator
//
// Each pulse: every ideal emitter yields exactly one photon; background and
// coherent light yield Poisson photon numbers. A photon is routed 50/50 and
// then detected with eta1 on A or eta2 on B. Each detector clicks at most
// once per pulse. Pulses are processed in fixed-size blocks, block b drawing
// from Philox stream (seed, b), so the tallies do not depend on how many
// threads run the blocks.
// ============================================================================
#pragma once

#include <cstdint>
#include <vector>

#include "photongate/core.hpp"
#include "photongate/rng.hpp"
#include "photongate/timetag.hpp"

namespace photongate {

struct SimConfig {
  SourceModel source = IdealEmitters{1};
  DetectionParams params = DetectionParams::make(0.1, 0.0, 0.0, 1);
  std::uint64_t seed = 0;
  std::uint64_t block_size = 1 << 16;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// Throws RangeError for an invalid source or block size.
void validate(const SimConfig& cfg);

struct PulseOutcome {
  bool click_a = false;
  bool click_b = false;
};

/// Draws one pulse of a given source through the detection model.
class PulseSampler {
public:
  PulseSampler(const SourceModel& source, const DetectionParams& params);

  PulseOutcome operator()(PhiloxStream& rng) const;

private:
  std::uint32_t emitters_ = 0;
  double poisson_mean_ = 0.0;  ///< detected Poisson photons per pulse
  double exp_neg_mean_ = 1.0;
  double detect_a_ = 0.0;      ///< per emitter photon: routed to A and detected
  double detect_any_ = 0.0;    ///< per emitter photon: detected on either side
  double split_a_ = 0.5;       ///< detected Poisson photon lands on A
};

/// Simulates params.cycles() pulses. Deterministic for a fixed config.
ClickCounts simulate_pulses(const SimConfig& cfg);

/// Same pulses as simulate_pulses, emitted as one in-gate record per click.
/// Ingesting the result with the same gate reproduces simulate_pulses.
std::vector<ClickRecord> simulate_timetags(const SimConfig& cfg, const GateConfig& gate);

/// Empirical probabilities N(k) / N_all. Throws RangeError for n_all = 0.
PhotonStats stats_from_counts(const ClickCounts& counts);

}  // namespace photongate
