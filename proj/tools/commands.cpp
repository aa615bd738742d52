#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include "photongate/analytic.hpp"
#include "photongate/criterion.hpp"
#include "photongate/errors.hpp"
#include "photongate/simulation.hpp"

namespace photongate::cli {

namespace {

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

std::string fmt_sbr(const SbrEstimate& s) {
  switch (s.status) {
    case SbrStatus::Infinite:
      return "inf";
    case SbrStatus::NotApplicable:
      return "n/a";
    case SbrStatus::Finite:
      break;
  }
  return fmt::format("{:.4g}", s.value);
}

// Adding +0.0 turns a negative zero into a plain zero.
std::string num(double v) { return fmt::format("{:.6g}", v + 0.0); }

std::string fmt_optional(const std::optional<double>& v) {
  return v ? num(*v) : std::string("n/a");
}

// Options shared by more than one subcommand. Unset optionals mean "not
// given on the command line".
struct Options {
  std::string config;
  std::string input;
  std::string output;
  std::string format = "auto";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> cycles;
  std::optional<double> eta;
  std::optional<double> delta;
  std::optional<double> gamma;
  std::optional<unsigned> threads;
  GateConfig gate;
  std::string curve;
  std::optional<double> from;
  std::optional<double> to;
  std::size_t steps = 100;
  FluctuationTerm term = FluctuationTerm::Variance;
};

void add_fluctuation_option(CLI::App* cmd, Options& o) {
  const std::map<std::string, FluctuationTerm> names{{"variance", FluctuationTerm::Variance},
                                                      {"stddev", FluctuationTerm::StdDev}};
  cmd->add_option("--fluctuation", o.term, "Finite-sample term added to the critical values")
      ->transform(CLI::CheckedTransformer(names, CLI::ignore_case))
      ->default_str("variance");
}

void add_gate_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--pulse-period-ns", o.gate.pulse_period_ns, "Laser pulse period")
      ->capture_default_str();
  cmd->add_option("--gate-offset-ns", o.gate.gate_offset_ns,
                  "Gate opening after the sync edge")
      ->capture_default_str();
  cmd->add_option("--gate-width-ns", o.gate.gate_width_ns, "Gate width")
      ->capture_default_str();
  cmd->add_option("--dead-time-ns", o.gate.dead_time_ns, "Detector dead time")
      ->capture_default_str();
}

void add_param_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--eta", o.eta, "Mean overall detection efficiency");
  cmd->add_option("--delta", o.delta, "Channel unbalance (eta1 - eta2) / (eta1 + eta2)");
  cmd->add_option("--gamma", o.gamma, "Background photons per pulse, source side");
  cmd->add_option("--cycles", o.cycles, "Number of pulse cycles M");
}

std::ofstream open_output(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot write '{}'", path));
  }
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const Options& o, std::ostream& out) {
  std::ifstream in(o.config);
  if (!in) {
    throw ConfigError(fmt::format("cannot read config '{}'", o.config));
  }
  RunConfig rc = parse_config(in);
  if (o.seed) rc.seed = o.seed;
  if (o.cycles) rc.cycles = o.cycles;
  if (o.eta) rc.eta = *o.eta;
  if (o.delta) rc.delta = *o.delta;
  if (o.gamma) rc.gamma = *o.gamma;
  if (o.threads) rc.threads = *o.threads;
  if (!rc.seed) {
    throw ConfigError("no seed: set 'seed' in the config or pass --seed");
  }
  if (!rc.cycles) {
    throw ConfigError("no cycles: set 'cycles' in the config or pass --cycles");
  }

  SimConfig sim;
  sim.source = rc.source;
  try {
    sim.params = DetectionParams::make(rc.eta, rc.delta, rc.gamma, *rc.cycles);
  } catch (const RangeError& e) {
    throw ConfigError(e.what());
  }
  sim.seed = *rc.seed;
  sim.block_size = rc.block_size;
  sim.threads = rc.threads;
  validate(sim);

  const std::string format = o.format == "auto" ? "counts" : o.format;
  spdlog::info("simulating {} pulses of {}", *rc.cycles, describe(rc.source));
  const auto start = std::chrono::steady_clock::now();

  ClickCounts counts;
  if (format == "counts") {
    counts = simulate_pulses(sim);
  } else {
    const auto records = simulate_timetags(sim, o.gate);
    counts = ingest_records(records, o.gate, *rc.cycles);
    auto file = open_output(o.output, format == "binary");
    if (format == "csv") {
      write_timetags_csv(file, records);
    } else {
      write_timetags_binary(file, records);
    }
    spdlog::info("wrote {} time tags to {}", records.size(), o.output);
  }

  auto report = make_report(counts, sim.params, echo(rc), o.term);
  report.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (format == "counts") {
    auto file = open_output(o.output, false);
    write_counts_block(file, counts, report.config);
    write_report(file, report, "# ");
    if (!file) {
      throw std::runtime_error(fmt::format("failed writing '{}'", o.output));
    }
  }
  write_report(out, report);
  fmt::print(out, "wall clock      {:.3f} s\n", report.duration_s);
  return 0;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

std::string sniff_format(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot read '{}'", path));
  }
  std::string head(32, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.rfind("channel", 0) == 0) {
    return "csv";
  }
  if (head.rfind("#", 0) == 0 || head.rfind("n_", 0) == 0) {
    return "counts";
  }
  return "binary";
}

ClickCounts load_counts(const Options& o) {
  const std::string format = o.format == "auto" ? sniff_format(o.input) : o.format;
  spdlog::debug("reading {} as {}", o.input, format);
  std::ifstream in(o.input, format == "binary" ? std::ios::binary : std::ios::in);
  if (!in) {
    throw std::runtime_error(fmt::format("cannot read '{}'", o.input));
  }
  if (format == "counts") {
    auto c = read_counts_block(in);
    if (o.cycles && *o.cycles != c.n_all) {
      throw std::runtime_error(
          fmt::format("--cycles {} disagrees with n_all = {} in '{}'", *o.cycles, c.n_all, o.input));
    }
    return c;
  }
  if (!o.cycles) {
    throw std::runtime_error("time-tag input needs --cycles (number of pulses recorded)");
  }
  GatedCounter counter(o.gate, *o.cycles);
  const RecordSink sink = [&](const ClickRecord& r) { counter.add(r); };
  if (format == "csv") {
    scan_timetags_csv(in, sink);
  } else {
    scan_timetags_binary(in, sink);
  }
  spdlog::info("{} records outside the gate, {} beyond the last pulse, {} saturated",
               counter.outside_gate(), counter.beyond_last_pulse(), counter.saturated());
  return counter.counts();
}

int cmd_classify(const Options& o, std::ostream& out) {
  const auto counts = load_counts(o);
  const auto stats = stats_from_counts(counts);
  const double delta = o.delta.value_or(0.0);
  if (o.eta.has_value() != o.gamma.has_value()) {
    throw std::runtime_error("give both --eta and --gamma, or neither to infer them");
  }
  const DetectionParams params =
      o.eta ? DetectionParams::make(*o.eta, delta, *o.gamma, counts.n_all)
            : infer_params(stats, delta, counts.n_all);
  if (!o.eta) {
    spdlog::info("inferred eta = {:.6g}, gamma = {:.6g} from <n> and SBR", params.eta(),
                 params.gamma());
  }
  ClassifyOptions opts;
  opts.term = o.term;
  const auto v = classify(stats, counts, params, opts);
  fmt::print(out, "{}\n{}\n", table_header(), table_row(v));
  fmt::print(out, "P(2) = {:.6g}  P2 = {:.6g}  SBR0 = {:.4g}  eta = {:.6g}  gamma = {:.6g}\n",
             v.p2_measured, v.p2_critical, v.sbr0, params.eta(), params.gamma());
  fmt::print(out, "reason: {}\n", v.reason);
  return exit_code(v.decision);
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

std::vector<double> grid(double from, double to, std::size_t steps) {
  std::vector<double> xs;
  xs.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    xs.push_back(steps == 1 ? from
                            : from + (to - from) * static_cast<double>(i) /
                                         static_cast<double>(steps - 1));
  }
  return xs;
}

void sweep_sbr0(const Options& o, std::ostream& csv) {
  const double from = o.from.value_or(0.01);
  const double to = o.to.value_or(1.0);
  if (!(from > 0.0 && to <= 1.0 && from <= to)) {
    throw RangeError("--from/--to", "need 0 < from <= to <= 1");
  }
  csv << "mean_n,sbr0\n";
  for (double n : grid(from, to, o.steps)) {
    csv << fmt::format("{:.10g},{:.10g}\n", n, sbr_threshold(n));
  }
}

void sweep_critical(const Options& o, std::ostream& csv) {
  const double from = o.from.value_or(0.01);
  const double to = o.to.value_or(0.5);
  if (!(from >= 0.0 && from <= to)) {
    throw RangeError("--from/--to", "need 0 <= from <= to");
  }
  const double delta = o.delta.value_or(0.0);
  const double gamma = o.gamma.value_or(0.0);
  const std::uint64_t cycles = o.cycles.value_or(10000);
  // Validate the whole range before writing anything.
  const auto etas = grid(from, to, o.steps);
  std::vector<DetectionParams> params;
  for (double eta : etas) {
    params.push_back(DetectionParams::make(eta, delta, gamma, cycles));
  }
  csv << "eta,mean_n,p1_uncorrected,p2_uncorrected,p1_corrected,p2_corrected\n";
  for (const auto& p : params) {
    const double n = single_with_background_stats(p).mean_n();
    const auto cv = corrected_critical_values(n, p);
    csv << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", p.eta(), n,
                       cv.p1_bound, cv.p2_bound, cv.p1_corrected, cv.p2_corrected);
  }
}

int cmd_sweep(const Options& o, std::ostream& out) {
  std::ostringstream csv;
  if (o.curve == "sbr0") {
    sweep_sbr0(o, csv);
  } else {
    sweep_critical(o, csv);
  }
  if (o.output.empty()) {
    out << csv.str();
  } else {
    auto file = open_output(o.output, false);
    file << csv.str();
  }
  return 0;
}

}  // namespace

int exit_code(Decision d) noexcept {
  switch (d) {
    case Decision::Single:
      return kExitSingle;
    case Decision::NotSingle:
      return kExitNotSingle;
    case Decision::Indeterminate:
      return kExitIndeterminate;
  }
  return kExitError;
}

ConfigError::ConfigError(const std::string& what, std::size_t line)
    : std::runtime_error(line ? fmt::format("config line {}: {}", line, what)
                              : fmt::format("config: {}", what)),
      line_(line) {}

RunConfig parse_config(std::istream& in) {
  std::vector<KeyValue> entries;
  try {
    entries = read_key_values(in);
  } catch (const FormatError& e) {
    std::string_view what = e.what();
    if (e.line() != 0) {
      what.remove_prefix(what.find(": ") + 2);
    }
    throw ConfigError(std::string(what), e.line());
  }
  std::map<std::string, const KeyValue*> by_key;
  for (const auto& kv : entries) {
    by_key[kv.key] = &kv;
  }
  static const char* const kKnown[] = {"source.kind", "source.emitters", "source.mu",
                                       "params.eta",  "params.delta",    "params.gamma",
                                       "cycles",      "seed",            "sim.block_size",
                                       "sim.threads"};
  for (const auto& kv : entries) {
    if (std::find(std::begin(kKnown), std::end(kKnown), kv.key) == std::end(kKnown)) {
      throw ConfigError(fmt::format("unknown key '{}'", kv.key), kv.line);
    }
  }

  auto get = [&](const char* key, auto& target) -> bool {
    const auto it = by_key.find(key);
    if (it == by_key.end()) {
      return false;
    }
    if (!parse_number(it->second->value, target)) {
      throw ConfigError(fmt::format("{} = '{}' is not a valid number", key, it->second->value),
                        it->second->line);
    }
    return true;
  };
  auto line_of = [&](const char* key) -> std::size_t {
    const auto it = by_key.find(key);
    return it == by_key.end() ? 0 : it->second->line;
  };

  RunConfig rc;
  const auto kind = by_key.find("source.kind");
  if (kind == by_key.end()) {
    throw ConfigError("missing 'source.kind' (ideal, background or coherent)");
  }
  const std::string& k = kind->second->value;
  if (k == "ideal") {
    std::uint32_t s = 1;
    get("source.emitters", s);
    if (s < 1) {
      throw ConfigError("source.emitters must be at least 1", line_of("source.emitters"));
    }
    rc.source = IdealEmitters{s};
  } else if (k == "background") {
    rc.source = EmitterWithBackground{};
  } else if (k == "coherent") {
    double mu = 0.0;
    if (!get("source.mu", mu)) {
      throw ConfigError("coherent source needs 'source.mu'", kind->second->line);
    }
    if (!(mu >= 0.0) || !std::isfinite(mu)) {
      throw ConfigError("source.mu must be a nonnegative mean", line_of("source.mu"));
    }
    rc.source = Coherent{mu};
  } else {
    throw ConfigError(fmt::format("unknown source.kind '{}'", k), kind->second->line);
  }
  if (k != "ideal" && by_key.count("source.emitters")) {
    throw ConfigError("source.emitters only applies to source.kind = ideal",
                      line_of("source.emitters"));
  }
  if (k != "coherent" && by_key.count("source.mu")) {
    throw ConfigError("source.mu only applies to source.kind = coherent", line_of("source.mu"));
  }

  if (!get("params.eta", rc.eta)) {
    throw ConfigError("missing 'params.eta'");
  }
  get("params.delta", rc.delta);
  get("params.gamma", rc.gamma);
  std::uint64_t u = 0;
  if (get("cycles", u)) {
    if (u < 1) {
      throw ConfigError("cycles must be at least 1", line_of("cycles"));
    }
    rc.cycles = u;
  }
  if (get("seed", u)) {
    rc.seed = u;
  }
  if (get("sim.block_size", rc.block_size) && rc.block_size < 1) {
    throw ConfigError("sim.block_size must be at least 1", line_of("sim.block_size"));
  }
  get("sim.threads", rc.threads);

  try {
    (void)DetectionParams::make(rc.eta, rc.delta, rc.gamma, rc.cycles.value_or(1));
  } catch (const RangeError& e) {
    throw ConfigError(e.what(), line_of(("params." + e.field()).c_str()));
  }
  return rc;
}

Echo echo(const RunConfig& cfg) {
  Echo e;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, IdealEmitters>) {
          e.emplace_back("source.kind", "ideal");
          e.emplace_back("source.emitters", fmt::format("{}", s.count));
        } else if constexpr (std::is_same_v<T, EmitterWithBackground>) {
          e.emplace_back("source.kind", "background");
        } else {
          e.emplace_back("source.kind", "coherent");
          e.emplace_back("source.mu", fmt::format("{}", s.mu));
        }
      },
      cfg.source);
  e.emplace_back("params.eta", fmt::format("{}", cfg.eta));
  e.emplace_back("params.delta", fmt::format("{}", cfg.delta));
  e.emplace_back("params.gamma", fmt::format("{}", cfg.gamma));
  if (cfg.cycles) e.emplace_back("cycles", fmt::format("{}", *cfg.cycles));
  if (cfg.seed) e.emplace_back("seed", fmt::format("{}", *cfg.seed));
  e.emplace_back("sim.block_size", fmt::format("{}", cfg.block_size));
  return e;
}

RunReport make_report(const ClickCounts& counts, const DetectionParams& params, Echo config,
                      FluctuationTerm term) {
  RunReport r;
  r.counts = counts;
  r.stats = stats_from_counts(counts);
  ClassifyOptions opts;
  opts.term = term;
  r.verdict = classify(r.stats, counts, params, opts);
  r.deviations = deviation_report(params);
  r.config = std::move(config);
  return r;
}

void write_report(std::ostream& out, const RunReport& r, const std::string& prefix) {
  auto line = [&](std::string_view label, const std::string& value) {
    fmt::print(out, "{}{:<16}{}\n", prefix, label, value);
  };
  for (const auto& [key, value] : r.config) {
    line(key, value);
  }
  line("pulses", fmt::format("{}", r.counts.n_all));
  line("N(1)", fmt::format("{}", r.counts.single_events()));
  line("N(2)", fmt::format("{}", r.counts.double_events()));
  line("P(0)", num(r.stats.p0()));
  line("P(1)", num(r.stats.p1()));
  line("P(2)", num(r.stats.p2()));
  line("<n>", num(r.stats.mean_n()));
  line("Q", num(r.stats.q()));
  line("SBR", fmt_sbr(sbr_from_stats(r.stats)));
  std::string g2 = "n/a";
  try {
    g2 = fmt::format("{:.4g}", g2_zero_estimate(r.counts));
  } catch (const DivideByZero&) {
  }
  line("g2(0)", g2);
  line("P1 critical", num(r.verdict.p1_critical));
  line("P2 critical", num(r.verdict.p2_critical));
  line("SBR0", fmt::format("{:.4g}", r.verdict.sbr0));
  line("dP(1)", num(r.deviations.delta_p1));
  line("dP(2)", num(r.deviations.delta_p2));
  line("R1", fmt_optional(r.deviations.r1));
  line("R2", fmt_optional(r.deviations.r2));
  line("var P(1)", num(r.deviations.sigma_sq));
  line("single", to_string(r.verdict.decision));
  line("reason", r.verdict.reason);
}

std::string table_header() {
  return fmt::format("{:>9} {:>9} {:>9} {:>10} {:>8}  {}", "<n>", "P(1)", "P1", "Q", "SBR",
                     "single");
}

std::string table_row(const Verdict& v) {
  const double p2 = v.p2_measured;
  const SbrEstimate sbr = sbr_from_stats(
      PhotonStats::from_probabilities(1.0 - v.p1_measured - p2, v.p1_measured, p2));
  return fmt::format("{:>9.5f} {:>9.5f} {:>9.5f} {:>10.5f} {:>8}  {}", v.mean_n, v.p1_measured,
                     v.p1_critical, v.q, fmt_sbr(sbr), to_string(v.decision));
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Photon statistics and the single-emitter criterion", "photon-gate"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo pulse train from a config file");
  sim->add_option("--config", o.config, "Key-value config file")->required();
  sim->add_option("--output", o.output, "Counts block or time-tag file")->required();
  sim->add_option("--seed", o.seed, "RNG seed (overrides the config)");
  sim->add_option("--threads", o.threads, "Worker threads, 0 = all cores");
  sim->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"auto", "counts", "csv", "binary"}))
      ->capture_default_str();
  add_param_options(sim, o);
  add_gate_options(sim, o);
  add_fluctuation_option(sim, o);

  auto* cls = app.add_subcommand("classify", "Decide whether recorded clicks come from one emitter");
  cls->add_option("--input", o.input, "Time tags (CSV or binary) or a counts block")->required();
  cls->add_option("--format", o.format, "Input format")
      ->check(CLI::IsMember({"auto", "counts", "csv", "binary"}))
      ->capture_default_str();
  add_param_options(cls, o);
  add_gate_options(cls, o);
  add_fluctuation_option(cls, o);

  auto* swp = app.add_subcommand("sweep", "Tabulate the SBR threshold or the critical values");
  swp->add_option("curve", o.curve, "sbr0 or critical")
      ->required()
      ->check(CLI::IsMember({"sbr0", "critical"}));
  swp->add_option("--from", o.from, "First grid point (<n> for sbr0, eta for critical)");
  swp->add_option("--to", o.to, "Last grid point");
  swp->add_option("--steps", o.steps, "Number of grid points")->capture_default_str();
  swp->add_option("--output", o.output, "CSV file (default: stdout)");
  add_param_options(swp, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o, out);
    if (cls->parsed()) return cmd_classify(o, out);
    return cmd_sweep(o, out);
  } catch (const std::exception& e) {
    spdlog::debug("command failed: {}", e.what());
    fmt::print(err, "error: {}\n", e.what());
    return kExitError;
  }
}

}  // namespace photongate::cli
