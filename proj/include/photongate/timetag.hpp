// ============================================================================
// timetag.hpp -- time-gated ingestion of recorded detector clicks
//
// A record at time t belongs to pulse floor(t / tau_r). It counts only if
// its offset inside the period falls in [gate_offset, gate_offset + width);
// several kept records of one channel in one pulse collapse into one click.
//
// File formats:
//   CSV     header "channel,timestamp_ns", rows "A,123" / "B,456"
//   binary  u64 LE record count, then per record: u8 channel (0 = A,
//           1 = B) and u64 LE timestamp in ns
//   counts  "key = value" lines, n_all/n_00/n_10/n_01/n_11 required
// ============================================================================
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "photongate/core.hpp"

namespace photongate {

/// Gate timing in ns. Requires gate_width < dead_time < pulse_period and the
/// gate to fit inside one period.
struct GateConfig {
  double pulse_period_ns = 500.0;
  double gate_offset_ns = 0.0;
  double gate_width_ns = 20.0;
  double dead_time_ns = 50.0;
};

/// Throws GateError.
void validate(const GateConfig& gate);

enum class Channel : std::uint8_t { A = 0, B = 1 };

struct ClickRecord {
  Channel channel = Channel::A;
  std::int64_t timestamp_ns = 0;

  friend bool operator==(const ClickRecord&, const ClickRecord&) = default;
};

/// Single-pass gated tally of a click stream.
class GatedCounter {
public:
  GatedCounter(const GateConfig& gate, std::uint64_t n_pulses);

  /// Throws FormatError for a negative timestamp or one earlier than the
  /// previous record of the same channel.
  void add(const ClickRecord& record);

  [[nodiscard]] ClickCounts counts() const;

  [[nodiscard]] std::uint64_t outside_gate() const noexcept { return outside_gate_; }
  [[nodiscard]] std::uint64_t beyond_last_pulse() const noexcept { return beyond_last_; }
  [[nodiscard]] std::uint64_t saturated() const noexcept { return saturated_; }

private:
  GateConfig gate_;
  std::uint64_t n_pulses_;
  std::int64_t last_[2] = {-1, -1};
  std::unordered_map<std::uint64_t, std::uint8_t> clicked_;  // pulse -> A|B bits
  std::uint64_t outside_gate_ = 0;
  std::uint64_t beyond_last_ = 0;
  std::uint64_t saturated_ = 0;
};

ClickCounts ingest_records(std::span<const ClickRecord> records,
                           const GateConfig& gate, std::uint64_t n_pulses);

using RecordSink = std::function<void(const ClickRecord&)>;

/// Streaming readers; throw FormatError with the offending line or record.
void scan_timetags_csv(std::istream& in, const RecordSink& sink);
void scan_timetags_binary(std::istream& in, const RecordSink& sink);

std::vector<ClickRecord> read_timetags_csv(std::istream& in);
std::vector<ClickRecord> read_timetags_binary(std::istream& in);

void write_timetags_csv(std::ostream& out, std::span<const ClickRecord> records);
void write_timetags_binary(std::ostream& out, std::span<const ClickRecord> records);

// ---------------------------------------------------------------------------
// Flat key-value text
// ---------------------------------------------------------------------------

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// Parses "key = value" lines; '#' starts a comment. Throws FormatError on a
/// line without '=' or a repeated key.
std::vector<KeyValue> read_key_values(std::istream& in);

using Echo = std::vector<std::pair<std::string, std::string>>;

inline constexpr const char* kCountsBlockHeader = "# photon-gate click counts";

/// Writes the counts followed by arbitrary echo entries.
void write_counts_block(std::ostream& out, const ClickCounts& counts,
                        const Echo& echo = {});

/// Reads the n_* entries of a counts block, ignoring other keys. Throws
/// FormatError when a count is missing, malformed or inconsistent.
ClickCounts read_counts_block(std::istream& in);

}  // namespace photongate
