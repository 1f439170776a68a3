#include "twostate/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "twostate/barrier.hpp"
#include "twostate/conditions.hpp"
#include "twostate/model_io.hpp"
#include "twostate/nodes.hpp"
#include "twostate/sampling.hpp"
#include "twostate/simlab.hpp"
#include "twostate/stream.hpp"
#include "twostate/viterbi.hpp"

namespace twostate {

using nlohmann::json;

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  return f;
}

/// Writes to the named file, or to `fallback` when the path is empty.
template <typename Fn>
void with_output(const std::string& path, std::ostream& fallback, Fn&& fn) {
  if (path.empty()) {
    fn(fallback);
    return;
  }
  auto f = open_output(path);
  fn(f);
  if (!f) throw Error(ErrorCode::Io, "failed writing " + path);
}

std::string short_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string states_string(std::span<const State> states) {
  std::string s;
  s.reserve(states.size());
  for (State x : states) s += to_char(x);
  return s;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const auto comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadArgument, std::string("bad number '") + tok + "' in " + what);
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct Options {
  std::string model;
  std::string obs;
  std::string out;
  std::string stats;
  std::string states;
  std::string report;
  std::string sweep_csv;
  std::string window;
  std::string sweep_stay, sweep_stay_b, sweep_gap, sweep_ratio;
  std::vector<std::string> suites;
  bool oracle = false;
  bool as_json = false;
  std::size_t length = 0;
  std::size_t replicas = 100;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> suite_length;
  double mass_threshold = 0.1;
  std::optional<double> epsilon;
};

int cmd_classify(const Options& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto report = check_conditions(model);
  if (o.as_json) {
    out << report.to_json(model).dump(2) << '\n';
    return kExitOk;
  }
  out << case_name(report.case_label) << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %-10s %-5s %-4s %s\n", "condition", "applicable", "holds", "P_l", "mass");
  out << line;
  for (const auto& e : report.entries) {
    std::snprintf(line, sizeof line, "%-22s %-10s %-5s %-4s %s\n", e.name.c_str(), e.applicable ? "yes" : "no",
                  e.holds ? "yes" : "no", std::string(1, to_char(e.measure)).c_str(), short_real(e.mass).c_str());
    out << line;
  }
  return kExitOk;
}

int cmd_decode(const Options& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto xs = load_observations(o.obs, model);
  if (o.oracle && xs.size() > kBruteForceMaxLength) {
    throw Error(ErrorCode::TooLong, "--oracle enumerates all paths and accepts at most " +
                                        std::to_string(kBruteForceMaxLength) + " observations, got " +
                                        std::to_string(xs.size()));
  }
  const auto alignment = decode_batch(model, xs);
  int code = kExitOk;
  with_output(o.out, out, [&](std::ostream& s) {
    s << "path=" << states_string(alignment.states) << '\n';
    s << "log_likelihood=" << format_real(alignment.log_likelihood) << '\n';
    s << "tie=" << (alignment.tie ? "true" : "false") << '\n';
    if (o.oracle) {
      const auto brute = decode_brute_force(model, xs);
      const bool same = brute.states == alignment.states &&
                        close_relative(brute.log_likelihood, alignment.log_likelihood, 1e-9);
      s << "oracle=" << (same ? "exact" : "mismatch") << '\n';
      if (!same) {
        s << "oracle_path=" << states_string(brute.states) << '\n';
        code = kExitSuiteFailure;
      }
    }
  });
  return code;
}

int cmd_stream(const Options& o, std::ostream& out, std::ostream& err) {
  const auto model = load_model(o.model);
  std::ifstream in(o.obs);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + o.obs);
  std::size_t line_no = 0;
  std::string line;
  auto source = [&]() -> std::optional<Observation> {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;
      const auto last = line.find_last_not_of(" \t\r");
      try {
        return parse_observation(model, std::string_view(line).substr(first, last - first + 1));
      } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (in.bad()) throw Error(ErrorCode::Io, "read error in " + o.obs);
    return std::nullopt;
  };
  StreamStats stats;
  with_output(o.out, out, [&](std::ostream& s) {
    write_segment_csv_header(s);
    stats = run_stream(model, source, [&](const Segment& seg) { write_segment_csv_row(s, seg); });
  });
  const std::string doc = stats.to_json().dump(2) + "\n";
  if (o.stats.empty()) {
    err << doc;
  } else {
    with_output(o.stats, err, [&](std::ostream& s) { s << doc; });
  }
  return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
  if (!o.seed) throw Error(ErrorCode::BadArgument, "simulate requires --seed");
  if (o.length == 0) throw Error(ErrorCode::EmptyLength, "--length must be at least 1");
  const auto model = load_model(o.model);
  const auto real = sample_realization(model, o.length, *o.seed);
  with_output(o.obs, out, [&](std::ostream& s) { write_observations(s, model, real.observations); });
  if (!o.states.empty()) {
    with_output(o.states, out, [&](std::ostream& s) {
      for (State x : real.states) s << to_char(x) << '\n';
    });
  }
  return kExitOk;
}

int cmd_nodes(const Options& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto xs = load_observations(o.obs, model);
  const auto reports = classify_trace(model, score_forward(model, xs, model.initial()));
  with_output(o.out, out, [&](std::ostream& s) { write_node_csv(s, reports); });
  return kExitOk;
}

int cmd_barrier(const Options& o, std::ostream& out) {
  const auto model = load_model(o.model);
  const auto cert = build_barrier_certificate(model, {o.mass_threshold, o.epsilon});
  json doc = cert.to_json(model);
  int code = kExitOk;
  if (!o.window.empty()) {
    const auto window = load_observations(o.window, model);
    const bool ok = verify_barrier(model, cert, window);
    doc["window_valid"] = ok;
    if (!ok) code = kExitSuiteFailure;
  }
  with_output(o.out, out, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
  return code;
}

int cmd_verify(const Options& o, std::ostream& out) {
  if (!o.seed) throw Error(ErrorCode::BadArgument, "verify requires --seed");
  ExperimentPlan plan;
  plan.seed = *o.seed;
  plan.replicas = o.replicas;
  plan.jobs = o.jobs;
  plan.length = o.suite_length;
  plan.config.mass_threshold = o.mass_threshold;
  if (!o.model.empty()) plan.model = load_model(o.model);
  std::vector<std::string> names = o.suites.empty() ? std::vector<std::string>{"all"} : o.suites;
  for (const auto& n : names) {
    if (n == "all") {
      plan.suites.insert(plan.suites.end(), std::begin(kAllSuites), std::end(kAllSuites));
    } else {
      plan.suites.push_back(parse_suite(n));
    }
  }

  const bool sweep = !o.sweep_stay.empty() || !o.sweep_stay_b.empty() || !o.sweep_gap.empty() ||
                     !o.sweep_ratio.empty() || !o.sweep_csv.empty();
  bool passed = true;
  json doc;
  if (sweep) {
    if (!o.model.empty()) throw Error(ErrorCode::BadPlan, "--model and sweep options are mutually exclusive");
    SweepGrid grid;
    grid.stay_a = parse_list(o.sweep_stay, "--sweep-stay");
    grid.stay_b = parse_list(o.sweep_stay_b, "--sweep-stay-b");
    grid.mean_gaps = parse_list(o.sweep_gap, "--sweep-gap");
    if (!o.sweep_ratio.empty()) grid.variance_ratios = parse_list(o.sweep_ratio, "--sweep-variance-ratio");
    const auto points = sweep_models(grid, plan);
    json list = json::array();
    for (const auto& pt : points) {
      passed = passed && pt.report.passed();
      list.push_back({{"p_aa", pt.p_aa},
                      {"p_bb", pt.p_bb},
                      {"mean_separation", pt.mean_gap},
                      {"variance_ratio", pt.variance_ratio},
                      {"case", case_name(pt.case_label)},
                      {"report", pt.report.to_json()}});
    }
    doc = {{"seed", plan.seed}, {"passed", passed}, {"points", list}};
    if (!o.sweep_csv.empty()) with_output(o.sweep_csv, out, [&](std::ostream& s) { write_sweep_csv(s, points); });
  } else {
    const auto report = run_suite(plan);
    passed = report.passed();
    doc = report.to_json();
  }
  with_output(o.report, out, [&](std::ostream& s) { s << doc.dump(2) << '\n'; });
  return passed ? kExitOk : kExitSuiteFailure;
}

int report_error(std::ostream& err, ErrorCode code, const std::vector<std::string>& details) {
  const int exit = error_category(code) == ErrorCategory::io ? kExitIo : kExitValidation;
  err << "error code=" << error_code_name(code) << " exit=" << exit << '\n';
  for (const auto& d : details) err << "detail: " << d << '\n';
  return exit;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-state HMM Viterbi decoding, node detection and verification"};
  app.name("twostate");
  app.require_subcommand(1);
  Options o;

  auto model_opt = [&](CLI::App* sub, bool required = true) {
    auto* opt = sub->add_option("--model", o.model, "model JSON file");
    if (required) opt->required();
  };

  auto* classify = app.add_subcommand("classify", "print the case label and the condition report");
  model_opt(classify);
  classify->add_flag("--json", o.as_json, "print the report as JSON");

  auto* decode = app.add_subcommand("decode", "batch Viterbi alignment of an observation file");
  model_opt(decode);
  decode->add_option("--obs", o.obs, "observation file, one token per line")->required();
  decode->add_flag("--oracle", o.oracle, "cross-check against exhaustive enumeration (n <= 24)");
  decode->add_option("--out", o.out, "output file (default stdout)");

  auto* stream = app.add_subcommand("stream", "online decoding with commits at strong nodes");
  model_opt(stream);
  stream->add_option("--obs", o.obs, "observation file, one token per line")->required();
  stream->add_option("--out", o.out, "segment CSV file (default stdout)");
  stream->add_option("--stats", o.stats, "statistics JSON file (default stderr)");

  auto* simulate = app.add_subcommand("simulate", "sample a realization");
  model_opt(simulate);
  simulate->add_option("--length", o.length, "number of observations")->required();
  simulate->add_option("--seed", o.seed, "generator seed (required)");
  simulate->add_option("--obs", o.obs, "observation output file (default stdout)");
  simulate->add_option("--states", o.states, "hidden-state output file");

  auto* nodes = app.add_subcommand("nodes", "per-step node classification as CSV");
  model_opt(nodes);
  nodes->add_option("--obs", o.obs, "observation file, one token per line")->required();
  nodes->add_option("--out", o.out, "output file (default stdout)");

  auto* barrier = app.add_subcommand("barrier", "construct a barrier certificate");
  model_opt(barrier);
  barrier->add_option("--mass-threshold", o.mass_threshold, "required set mass when choosing epsilon")
      ->check(CLI::Range(1e-12, 1.0));
  barrier->add_option("--epsilon", o.epsilon, "use this epsilon instead of the grid search")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  barrier->add_option("--window", o.window, "observation file to check against the certificate");
  barrier->add_option("--out", o.out, "output file (default stdout)");

  auto* verify = app.add_subcommand("verify", "run property suites over replicated simulations");
  verify->add_option("--suite", o.suites,
                     "nodes|barriers|lemma2|case-structure|corollary8|lemma10|growth|stream|all (repeatable)");
  verify->add_option("--replicas", o.replicas, "replicas per suite")->check(CLI::PositiveNumber);
  verify->add_option("--seed", o.seed, "base seed (required)");
  verify->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  model_opt(verify, false);
  verify->add_option("--length", o.suite_length, "sequence length (default per suite)")->check(CLI::PositiveNumber);
  verify->add_option("--mass-threshold", o.mass_threshold, "barrier set mass threshold")
      ->check(CLI::Range(1e-12, 1.0));
  verify->add_option("--report", o.report, "report JSON file (default stdout)");
  verify->add_option("--sweep-stay", o.sweep_stay, "comma-separated p_aa values");
  verify->add_option("--sweep-stay-b", o.sweep_stay_b, "comma-separated p_bb values (default: equal to p_aa)");
  verify->add_option("--sweep-gap", o.sweep_gap, "comma-separated Gaussian mean separations");
  verify->add_option("--sweep-variance-ratio", o.sweep_ratio, "comma-separated variance ratios (default 1)");
  verify->add_option("--sweep-csv", o.sweep_csv, "aggregate CSV output file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, ErrorCode::BadArgument, {e.what()});
  }

  try {
    if (classify->parsed()) return cmd_classify(o, out);
    if (decode->parsed()) return cmd_decode(o, out);
    if (stream->parsed()) return cmd_stream(o, out, err);
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (nodes->parsed()) return cmd_nodes(o, out);
    if (barrier->parsed()) return cmd_barrier(o, out);
    if (verify->parsed()) return cmd_verify(o, out);
  } catch (const ValidationError& e) {
    std::vector<std::string> details;
    for (const auto& v : e.violations())
      details.push_back(std::string(error_code_name(v.code)) + ": " + v.detail);
    return report_error(err, e.code(), details);
  } catch (const Error& e) {
    return report_error(err, e.code(), {e.what()});
  }
  return report_error(err, ErrorCode::BadArgument, {"no subcommand given"});
}

}  // namespace twostate
