#include "photongate/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>
#include <type_traits>

#include <fmt/format.h>

#include "photongate/errors.hpp"

namespace photongate {

namespace {

// Above this mean the sequential inversion gets slow; fall back to the
// standard library sampler on the same stream.
constexpr double kInversionLimit = 30.0;

std::uint32_t draw_poisson(PhiloxStream& rng, double mean, double exp_neg_mean) {
  if (mean <= 0.0) {
    return 0;
  }
  if (mean > kInversionLimit) {
    std::poisson_distribution<std::uint32_t> dist(mean);
    return dist(rng);
  }
  const double u = rng.uniform();
  std::uint32_t k = 0;
  double term = exp_neg_mean;
  double cdf = term;
  while (u >= cdf && term > 0.0) {
    ++k;
    term *= mean / k;
    cdf += term;
  }
  return k;
}

template <typename Emit>
void run_block(const PulseSampler& sampler, std::uint64_t seed, std::uint64_t block,
               std::uint64_t first, std::uint64_t last, Emit&& emit) {
  PhiloxStream rng(seed, block);
  for (std::uint64_t pulse = first; pulse < last; ++pulse) {
    emit(pulse, sampler(rng));
  }
}

}  // namespace

void validate(const SimConfig& cfg) {
  validate(cfg.source);
  if (cfg.block_size < 1) {
    throw RangeError("block_size", "must be at least 1");
  }
}

PulseSampler::PulseSampler(const SourceModel& source, const DetectionParams& params) {
  validate(source);
  const double eta = params.eta();
  detect_a_ = 0.5 * params.eta1();
  detect_any_ = eta;
  split_a_ = 0.5 * (1.0 + params.delta());
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IdealEmitters>) {
          emitters_ = s.count;
        } else if constexpr (std::is_same_v<T, EmitterWithBackground>) {
          emitters_ = 1;
          poisson_mean_ = params.background_mean();
        } else {
          poisson_mean_ = s.mu * eta;
        }
      },
      source);
  exp_neg_mean_ = std::exp(-poisson_mean_);
}

PulseOutcome PulseSampler::operator()(PhiloxStream& rng) const {
  PulseOutcome out;
  for (std::uint32_t i = 0; i < emitters_; ++i) {
    const double u = rng.uniform();
    if (u < detect_a_) {
      out.click_a = true;
    } else if (u < detect_any_) {
      out.click_b = true;
    }
  }
  const std::uint32_t photons = draw_poisson(rng, poisson_mean_, exp_neg_mean_);
  for (std::uint32_t i = 0; i < photons; ++i) {
    if (rng.uniform() < split_a_) {
      out.click_a = true;
    } else {
      out.click_b = true;
    }
  }
  return out;
}

ClickCounts simulate_pulses(const SimConfig& cfg) {
  validate(cfg);
  const PulseSampler sampler(cfg.source, cfg.params);
  const std::uint64_t total = cfg.params.cycles();
  const std::uint64_t bs = cfg.block_size;
  const std::uint64_t n_blocks = (total + bs - 1) / bs;

  std::vector<ClickCounts> per_block(n_blocks);
  auto work_on = [&](std::uint64_t b) {
    const std::uint64_t first = b * bs;
    const std::uint64_t last = std::min(total, first + bs);
    ClickCounts c;
    run_block(sampler, cfg.seed, b, first, last,
              [&](std::uint64_t, PulseOutcome o) { c.record(o.click_a, o.click_b); });
    per_block[b] = c;
  };

  unsigned threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  threads = static_cast<unsigned>(
      std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(n_blocks, 1)));
  if (threads == 1) {
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
      work_on(b);
    }
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::uint64_t b = next++; b < n_blocks; b = next++) {
          work_on(b);
        }
      });
    }
  }

  ClickCounts total_counts;
  for (const auto& c : per_block) {
    total_counts += c;
  }
  return total_counts;
}

std::vector<ClickRecord> simulate_timetags(const SimConfig& cfg, const GateConfig& gate) {
  validate(cfg);
  validate(gate);
  const PulseSampler sampler(cfg.source, cfg.params);
  const std::uint64_t total = cfg.params.cycles();
  const std::uint64_t bs = cfg.block_size;

  const auto place = [&](std::uint64_t pulse, double fraction) {
    const double t = static_cast<double>(pulse) * gate.pulse_period_ns +
                     gate.gate_offset_ns + fraction * gate.gate_width_ns;
    return static_cast<std::int64_t>(std::ceil(t));
  };
  // Rounding up to whole ns moves a record by < 1 ns; a 2 ns gate keeps the
  // B record (placed at mid-gate) inside.
  if (gate.gate_width_ns < 2.0) {
    throw GateError("gate too narrow to place integer-ns timestamps");
  }

  std::vector<ClickRecord> records;
  for (std::uint64_t b = 0; b * bs < total; ++b) {
    const std::uint64_t first = b * bs;
    run_block(sampler, cfg.seed, b, first, std::min(total, first + bs),
              [&](std::uint64_t pulse, PulseOutcome o) {
                if (o.click_a) {
                  records.push_back({Channel::A, place(pulse, 0.25)});
                }
                if (o.click_b) {
                  records.push_back({Channel::B, place(pulse, 0.5)});
                }
              });
  }
  return records;
}

PhotonStats stats_from_counts(const ClickCounts& counts) {
  if (counts.n_all == 0) {
    throw RangeError("n_all", "no pulse cycles recorded");
  }
  if (!counts.consistent()) {
    throw RangeError("counts", "outcome tallies do not add up to n_all");
  }
  const double n = static_cast<double>(counts.n_all);
  return PhotonStats::from_probabilities(static_cast<double>(counts.n_00) / n,
                                         static_cast<double>(counts.n_10 + counts.n_01) / n,
                                         static_cast<double>(counts.n_11) / n);
}

}  // namespace photongate
