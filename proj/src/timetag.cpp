#include "photongate/timetag.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include <fmt/format.h>

#include "photongate/errors.hpp"

namespace photongate {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

std::uint64_t read_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | p[i];
  }
  return v;
}

void write_u64_le(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (auto& b : bytes) {
    b = static_cast<char>(v & 0xFF);
    v >>= 8;
  }
  out.write(bytes.data(), bytes.size());
}

}  // namespace

void validate(const GateConfig& gate) {
  const double period = gate.pulse_period_ns;
  const double width = gate.gate_width_ns;
  const double dead = gate.dead_time_ns;
  const double offset = gate.gate_offset_ns;
  if (!(std::isfinite(period) && std::isfinite(width) && std::isfinite(dead) &&
        std::isfinite(offset))) {
    throw GateError("gate timings must be finite");
  }
  if (!(width > 0.0)) {
    throw GateError(fmt::format("gate width {} ns must be positive", width));
  }
  if (!(width < dead && dead < period)) {
    throw GateError(fmt::format(
        "need gate width < dead time < pulse period, got {} / {} / {} ns", width,
        dead, period));
  }
  if (offset < 0.0 || offset + width > period) {
    throw GateError(fmt::format("gate [{}, {}) ns does not fit in a {} ns period",
                                offset, offset + width, period));
  }
}

GatedCounter::GatedCounter(const GateConfig& gate, std::uint64_t n_pulses)
    : gate_(gate), n_pulses_(n_pulses) {
  validate(gate_);
}

void GatedCounter::add(const ClickRecord& record) {
  const auto ch = static_cast<std::size_t>(record.channel);
  if (ch > 1) {
    throw FormatError("unknown channel");
  }
  if (record.timestamp_ns < 0) {
    throw FormatError(fmt::format("negative timestamp {}", record.timestamp_ns));
  }
  if (record.timestamp_ns < last_[ch]) {
    throw FormatError(fmt::format("channel {} timestamps not sorted: {} after {}",
                                  ch == 0 ? 'A' : 'B', record.timestamp_ns,
                                  last_[ch]));
  }
  last_[ch] = record.timestamp_ns;

  const double t = static_cast<double>(record.timestamp_ns);
  const double period = gate_.pulse_period_ns;
  auto pulse = static_cast<std::uint64_t>(std::floor(t / period));
  double offset = t - static_cast<double>(pulse) * period;
  if (offset < 0.0) {
    --pulse;
    offset += period;
  } else if (offset >= period) {
    ++pulse;
    offset -= period;
  }
  if (offset < gate_.gate_offset_ns ||
      offset >= gate_.gate_offset_ns + gate_.gate_width_ns) {
    ++outside_gate_;
    return;
  }
  if (pulse >= n_pulses_) {
    ++beyond_last_;
    return;
  }
  auto& bits = clicked_[pulse];
  const auto bit = static_cast<std::uint8_t>(1u << ch);
  if (bits & bit) {
    ++saturated_;
  }
  bits = static_cast<std::uint8_t>(bits | bit);
}

ClickCounts GatedCounter::counts() const {
  ClickCounts c;
  c.n_all = n_pulses_;
  for (const auto& [pulse, bits] : clicked_) {
    switch (bits) {
      case 1:
        ++c.n_10;
        break;
      case 2:
        ++c.n_01;
        break;
      default:
        ++c.n_11;
        break;
    }
  }
  c.n_00 = n_pulses_ - clicked_.size();
  return c;
}

ClickCounts ingest_records(std::span<const ClickRecord> records,
                           const GateConfig& gate, std::uint64_t n_pulses) {
  GatedCounter counter(gate, n_pulses);
  for (const auto& r : records) {
    counter.add(r);
  }
  return counter.counts();
}

void scan_timetags_csv(std::istream& in, const RecordSink& sink) {
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim(line);
    if (text.empty()) {
      continue;
    }
    if (!header_seen) {
      if (text != "channel,timestamp_ns") {
        throw FormatError("expected header 'channel,timestamp_ns'", lineno);
      }
      header_seen = true;
      continue;
    }
    const auto comma = text.find(',');
    if (comma == std::string_view::npos) {
      throw FormatError("expected 'channel,timestamp_ns'", lineno);
    }
    const auto chan = trim(text.substr(0, comma));
    const auto stamp = trim(text.substr(comma + 1));
    ClickRecord r;
    if (chan == "A") {
      r.channel = Channel::A;
    } else if (chan == "B") {
      r.channel = Channel::B;
    } else {
      throw FormatError(fmt::format("unknown channel '{}'", chan), lineno);
    }
    if (!stamp.empty() && stamp.front() == '-') {
      throw FormatError(fmt::format("negative timestamp {}", stamp), lineno);
    }
    if (!parse_int(stamp, r.timestamp_ns)) {
      throw FormatError(fmt::format("bad timestamp '{}'", stamp), lineno);
    }
    try {
      sink(r);
    } catch (const FormatError& e) {
      throw FormatError(e.what(), lineno);
    }
  }
  if (!header_seen) {
    throw FormatError("missing header 'channel,timestamp_ns'");
  }
}

void scan_timetags_binary(std::istream& in, const RecordSink& sink) {
  std::array<unsigned char, 9> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), 8)) {
    throw FormatError("binary time tags: missing record count");
  }
  const std::uint64_t n = read_u64_le(buf.data());
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(buf.data()), 9)) {
      throw FormatError(fmt::format("binary time tags: truncated at record {} of {}", i, n));
    }
    if (buf[0] > 1) {
      throw FormatError(fmt::format("binary time tags: record {} has channel {}", i, buf[0]));
    }
    const std::uint64_t t = read_u64_le(buf.data() + 1);
    if (t > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw FormatError(fmt::format("binary time tags: record {} timestamp overflows", i));
    }
    sink({static_cast<Channel>(buf[0]), static_cast<std::int64_t>(t)});
  }
}

std::vector<ClickRecord> read_timetags_csv(std::istream& in) {
  std::vector<ClickRecord> out;
  scan_timetags_csv(in, [&](const ClickRecord& r) { out.push_back(r); });
  return out;
}

std::vector<ClickRecord> read_timetags_binary(std::istream& in) {
  std::vector<ClickRecord> out;
  scan_timetags_binary(in, [&](const ClickRecord& r) { out.push_back(r); });
  return out;
}

void write_timetags_csv(std::ostream& out, std::span<const ClickRecord> records) {
  out << "channel,timestamp_ns\n";
  for (const auto& r : records) {
    out << (r.channel == Channel::A ? 'A' : 'B') << ',' << r.timestamp_ns << '\n';
  }
}

void write_timetags_binary(std::ostream& out, std::span<const ClickRecord> records) {
  write_u64_le(out, records.size());
  for (const auto& r : records) {
    out.put(static_cast<char>(r.channel));
    write_u64_le(out, static_cast<std::uint64_t>(r.timestamp_ns));
  }
}

std::vector<KeyValue> read_key_values(std::istream& in) {
  std::vector<KeyValue> entries;
  std::set<std::string, std::less<>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) {
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(fmt::format("expected 'key = value', got '{}'", text), lineno);
    }
    KeyValue kv{std::string(trim(text.substr(0, eq))),
                std::string(trim(text.substr(eq + 1))), lineno};
    if (kv.key.empty()) {
      throw FormatError("empty key", lineno);
    }
    if (!seen.insert(kv.key).second) {
      throw FormatError(fmt::format("duplicate key '{}'", kv.key), lineno);
    }
    entries.push_back(std::move(kv));
  }
  return entries;
}

void write_counts_block(std::ostream& out, const ClickCounts& counts,
                        const Echo& echo) {
  out << kCountsBlockHeader << '\n';
  out << "n_all = " << counts.n_all << '\n';
  out << "n_00 = " << counts.n_00 << '\n';
  out << "n_10 = " << counts.n_10 << '\n';
  out << "n_01 = " << counts.n_01 << '\n';
  out << "n_11 = " << counts.n_11 << '\n';
  for (const auto& [key, value] : echo) {
    out << key << " = " << value << '\n';
  }
}

ClickCounts read_counts_block(std::istream& in) {
  const auto entries = read_key_values(in);
  ClickCounts c;
  struct Field {
    const char* name;
    std::uint64_t* target;
    bool found = false;
  };
  std::array<Field, 5> fields = {{{"n_all", &c.n_all},
                                  {"n_00", &c.n_00},
                                  {"n_10", &c.n_10},
                                  {"n_01", &c.n_01},
                                  {"n_11", &c.n_11}}};
  for (const auto& kv : entries) {
    for (auto& f : fields) {
      if (kv.key == f.name) {
        if (!parse_int(kv.value, *f.target)) {
          throw FormatError(fmt::format("{} = '{}' is not a count", kv.key, kv.value),
                            kv.line);
        }
        f.found = true;
      }
    }
  }
  for (const auto& f : fields) {
    if (!f.found) {
      throw FormatError(fmt::format("counts block lacks '{}'", f.name));
    }
  }
  if (!c.consistent()) {
    throw FormatError("counts block: n_00 + n_10 + n_01 + n_11 != n_all");
  }
  return c;
}

}  // namespace photongate
