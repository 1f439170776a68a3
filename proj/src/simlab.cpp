#include "twostate/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "twostate/barrier.hpp"
#include "twostate/conditions.hpp"
#include "twostate/model_io.hpp"
#include "twostate/nodes.hpp"
#include "twostate/observation_set.hpp"
#include "twostate/sampling.hpp"
#include "twostate/stream.hpp"
#include "twostate/viterbi.hpp"

namespace twostate {

using nlohmann::json;

std::string_view suite_name(Suite suite) {
  switch (suite) {
    case Suite::nodes: return "nodes";
    case Suite::barriers: return "barriers";
    case Suite::lemma2: return "lemma2";
    case Suite::case_structure: return "case-structure";
    case Suite::corollary8: return "corollary8";
    case Suite::lemma10: return "lemma10";
    case Suite::growth: return "growth";
    case Suite::stream: return "stream";
  }
  return "unknown";
}

Suite parse_suite(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '_', '-');
  for (Suite s : kAllSuites)
    if (suite_name(s) == key) return s;
  throw Error(ErrorCode::BadPlan, "unknown suite '" + std::string(name) + "'");
}

std::size_t default_length(Suite suite) {
  switch (suite) {
    case Suite::nodes: return 200;
    case Suite::growth: return 2000;
    case Suite::case_structure:
    case Suite::corollary8:
    case Suite::stream: return 10000;
    case Suite::barriers:
    case Suite::lemma2:
    case Suite::lemma10: return 0;  // no simulated sequence of a set length
  }
  return 0;
}

void validate_plan(const ExperimentPlan& plan) {
  if (plan.suites.empty()) throw Error(ErrorCode::BadPlan, "no suite selected");
  if (plan.replicas == 0) throw Error(ErrorCode::BadPlan, "replicas must be at least 1");
  if (plan.length && *plan.length == 0) throw Error(ErrorCode::BadPlan, "length must be at least 1");
  if (plan.jobs == 0) throw Error(ErrorCode::BadPlan, "jobs must be at least 1");
  const auto& c = plan.config;
  if (c.max_suffix == 0 || c.windows == 0 || c.prefixes == 0)
    throw Error(ErrorCode::BadPlan, "suffix, window and prefix counts must be positive");
  if (!(c.mass_threshold > 0.0 && c.mass_threshold <= 1.0))
    throw Error(ErrorCode::BadPlan, "mass threshold must lie in (0, 1]");
}

// ---------------------------------------------------------------- results

double CheckResult::pass_rate() const {
  return trials ? static_cast<double>(trials - failures) / static_cast<double>(trials) : 1.0;
}

std::pair<double, double> CheckResult::wilson() const {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = pass_rate();
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::size_t NodeStats::max_gap() const {
  return max_gaps.empty() ? 0 : *std::max_element(max_gaps.begin(), max_gaps.end());
}

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed(); });
}

const CheckResult& SuiteResult::check(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw Error(ErrorCode::BadArgument, "suite " + std::string(suite_name(suite)) + " has no check " +
                                          std::string(name));
}

namespace {

json counterexample_json(const Counterexample& c) {
  return {{"replica", c.replica}, {"seed", c.seed}, {"time", c.time}, {"detail", c.detail}, {"model", c.model}};
}

std::size_t nearest_rank(std::vector<std::size_t> sorted, double q) {
  if (sorted.empty()) return 0;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

json rate(std::size_t count, std::size_t total) {
  return total ? json(static_cast<double>(count) / static_cast<double>(total)) : json(nullptr);
}

}  // namespace

json SuiteResult::to_json() const {
  json checks_json = json::array();
  for (const auto& c : checks) {
    json ce = json::array();
    for (const auto& x : c.counterexamples) ce.push_back(counterexample_json(x));
    const auto [lo, hi] = c.wilson();
    checks_json.push_back({{"name", c.name},
                           {"passed", c.passed()},
                           {"trials", c.trials},
                           {"failures", c.failures},
                           {"pass_rate", c.pass_rate()},
                           {"wilson95", {lo, hi}},
                           {"extra", c.extra},
                           {"counterexamples", ce}});
  }
  json summary = {
      {"observations", stats.observations},
      {"strong_a_rate", rate(stats.strong_a, stats.observations)},
      {"strong_b_rate", rate(stats.strong_b, stats.observations)},
      {"weak_nodes", stats.weak},
      {"mean_gap", stats.mean_gap()},
      {"max_gap_quantiles",
       {{"p50", nearest_rank(stats.max_gaps, 0.5)},
        {"p90", nearest_rank(stats.max_gaps, 0.9)},
        {"p99", nearest_rank(stats.max_gaps, 0.99)},
        {"max", stats.max_gap()}}},
      {"barrier_occurrence_rate", rate(stats.barrier_windows, stats.windows_scanned)},
  };
  return {{"suite", suite_name(suite)},
          {"passed", passed()},
          {"replicas", replicas},
          {"length", length ? json(length) : json(nullptr)},
          {"checks", checks_json},
          {"summary", summary}};
}

bool VerificationReport::passed() const {
  return std::all_of(suites.begin(), suites.end(), [](const SuiteResult& s) { return s.passed(); });
}

json VerificationReport::to_json() const {
  json list = json::array();
  for (const auto& s : suites) list.push_back(s.to_json());
  return {{"seed", seed}, {"passed", passed()}, {"suites", list}};
}

// ---------------------------------------------------------------- models

TwoStateHmm swap_states(const TwoStateHmm& model) {
  RawModel raw = model.raw();
  const auto& p = model.transitions();
  raw.transitions = {{{p[1][1], p[1][0]}, {p[0][1], p[0][0]}}};
  if (raw.initial) raw.initial = std::array<double, 2>{(*raw.initial)[1], (*raw.initial)[0]};
  std::swap(raw.emit_a, raw.emit_b);
  return validate_model(raw);
}

namespace {

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

constexpr int kMaxModelAttempts = 10000;

bool no_b_stay_region(const TwoStateHmm& model) {
  return classify_case(model) == CaseLabel::case1 && check_conditions(model).holds("no_b_stay_region");
}

}  // namespace

TwoStateHmm random_corollary8_model(Rng& rng, bool categorical) {
  for (int attempt = 0; attempt < kMaxModelAttempts; ++attempt) {
    RawModel raw;
    if (categorical) {
      const double p_aa = uniform_in(rng, 0.6, 0.95);
      const double p_bb = uniform_in(rng, 1.02 - p_aa, p_aa - 0.02);
      raw.transitions = {{{p_aa, 1.0 - p_aa}, {1.0 - p_bb, p_bb}}};
      const double r = p_aa / p_bb;
      const std::size_t k = 2 + rng.below(3);
      std::vector<double> fa(k), h(k);
      double sa = 0.0, sh = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        fa[i] = uniform_in(rng, 0.05, 1.0);
        h[i] = uniform_in(rng, 0.0, 1.0);
        sa += fa[i];
        sh += h[i];
      }
      for (std::size_t i = 0; i < k; ++i) {
        fa[i] /= sa;
        h[i] /= sh;
      }
      // f_b = (1 - w) f_a + w h stays below 0.9 (r - 1) f_a + f_a < r f_a,
      // so p_bb f_b < p_aa f_a at every symbol.
      double w = 1.0;
      for (std::size_t i = 0; i < k; ++i)
        if (h[i] > fa[i]) w = std::min(w, 0.9 * (r - 1.0) * fa[i] / (h[i] - fa[i]));
      std::vector<double> fb(k);
      double gap = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        fb[i] = (1.0 - w) * fa[i] + w * h[i];
        gap = std::max(gap, std::abs(fb[i] - fa[i]));
      }
      if (gap < 1e-3) continue;
      std::vector<std::string> alphabet;
      for (std::size_t i = 0; i < k; ++i) alphabet.push_back("s" + std::to_string(i));
      raw.emit_a = EmissionModel::categorical(alphabet, fa);
      raw.emit_b = EmissionModel::categorical(alphabet, fb);
    } else {
      const double mean_a = uniform_in(rng, -1.0, 1.0);
      const double var_a = uniform_in(rng, 1.0, 3.0);
      const double var_b = var_a * uniform_in(rng, 0.3, 0.9);
      const double mean_b = mean_a + uniform_in(rng, -0.3, 0.3);
      // sup log(f_b / f_a) of the concave quadratic in x.
      const double A = 1.0 / (2.0 * var_a) - 1.0 / (2.0 * var_b);
      const double B = mean_b / var_b - mean_a / var_a;
      const double C = 0.5 * std::log(var_a / var_b) - mean_b * mean_b / (2.0 * var_b) +
                       mean_a * mean_a / (2.0 * var_a);
      const double sup = C - B * B / (4.0 * A);
      const double p_aa = uniform_in(rng, 0.7, 0.98);
      const double hi = p_aa * std::exp(-sup - 0.01);
      const double lo = 1.0 - p_aa + 0.01;
      if (!(hi > lo)) continue;
      const double p_bb = uniform_in(rng, lo, hi);
      raw.transitions = {{{p_aa, 1.0 - p_aa}, {1.0 - p_bb, p_bb}}};
      raw.emit_a = EmissionModel::gaussian(mean_a, var_a);
      raw.emit_b = EmissionModel::gaussian(mean_b, var_b);
    }
    auto model = validate_model(raw);
    if (no_b_stay_region(model)) return model;
  }
  throw Error(ErrorCode::BadPlan, "could not draw a model with an empty b-stay region");
}

TwoStateHmm random_lemma10_model(Rng& rng, bool categorical) {
  RandomModelOptions opts;
  opts.family = categorical ? FamilyChoice::categorical : FamilyChoice::gaussian;
  opts.case_label = CaseLabel::case2;
  auto model = random_model(rng, opts);
  return model.p(State::b, State::a) >= model.p(State::a, State::b) ? model : swap_states(model);
}

TwoStateHmm replica_model(Suite suite, std::size_t replica, Rng& rng) {
  RandomModelOptions opts;
  switch (suite) {
    case Suite::nodes:
    case Suite::lemma2: return random_model(rng, opts);
    case Suite::barriers:
    case Suite::case_structure:
    case Suite::growth:
    case Suite::stream:
      opts.case_label = static_cast<CaseLabel>(replica % 3);
      return random_model(rng, opts);
    case Suite::corollary8: return random_corollary8_model(rng, replica % 2 == 0);
    case Suite::lemma10: return random_lemma10_model(rng, replica % 2 == 0);
  }
  throw Error(ErrorCode::BadPlan, "unknown suite");
}

TwoStateHmm sweep_model(double p_aa, double p_bb, double mean_gap, double variance_ratio) {
  RawModel raw;
  raw.transitions = {{{p_aa, 1.0 - p_aa}, {1.0 - p_bb, p_bb}}};
  raw.emit_a = EmissionModel::gaussian(-0.5 * mean_gap, 1.0);
  raw.emit_b = EmissionModel::gaussian(0.5 * mean_gap, variance_ratio);
  return validate_model(raw);
}

// ---------------------------------------------------------------- replicas

namespace {

using Check = ReplicaOutcome::Check;

/// Per-replica context: the model, the generator and the outcome under construction.
class Replica {
 public:
  Replica(const ExperimentPlan& plan, Suite suite, std::size_t index)
      : plan_(plan),
        config_(plan.config),
        index_(index),
        seed_(mix_seed(plan.seed, index)),
        rng_(seed_),
        model_(plan.model ? *plan.model : replica_model(suite, index, rng_)),
        length_(plan.length.value_or(default_length(suite))) {}

  const TwoStateHmm& model() const { return model_; }
  Rng& rng() { return rng_; }
  const SuiteConfig& config() const { return config_; }
  std::size_t length() const { return length_; }
  ReplicaOutcome& outcome() { return out_; }

  Check& check(const std::string& name) {
    for (auto& [n, c] : out_.checks)
      if (n == name) return c;
    out_.checks.emplace_back(name, Check{});
    return out_.checks.back().second;
  }

  /// Registers a check with zero trials so it shows up even when vacuous.
  void declare(const std::string& name) { check(name); }

  void record(const std::string& name, bool ok, std::size_t time = 0, const std::string& detail = {}) {
    auto& c = check(name);
    ++c.trials;
    if (ok) return;
    ++c.failures;
    if (c.counterexamples.size() < config_.max_counterexamples)
      c.counterexamples.push_back({index_, seed_, time, detail, model_to_json(model_)});
  }

  /// Decodes a realization once, folding node statistics into the outcome.
  std::vector<NodeReport> classify(std::span<const Observation> xs) {
    auto reports = classify_trace(model_, score_forward(model_, xs, model_.initial()));
    auto& st = out_.stats;
    st.observations += xs.size();
    std::size_t last = 0;
    std::size_t max_gap = 0;
    auto gap = [&](std::size_t from, std::size_t to) {
      const std::size_t g = to - from - 1;
      ++st.gaps;
      st.gap_sum += g;
      max_gap = std::max(max_gap, g);
    };
    for (const auto& r : reports) {
      if (r.kind == NodeKind::strong_a) ++st.strong_a;
      if (r.kind == NodeKind::strong_b) ++st.strong_b;
      if (r.kind == NodeKind::weak_a || r.kind == NodeKind::weak_b) ++st.weak;
      if (is_strong(r.kind)) {
        gap(last, r.time);
        last = r.time;
      }
    }
    if (last < xs.size()) gap(last, xs.size());  // the end of the sequence closes the last gap
    st.max_gaps.push_back(max_gap);
    return reports;
  }

  /// Observations from the model (half the time) or from uniformly chosen states.
  std::vector<Observation> random_sequence(std::size_t n) {
    if (n == 0) return {};
    if (rng_.uniform() < 0.5) return sample_realization(model_, n, rng_).observations;
    return sample_arbitrary(model_, n, rng_);
  }

 private:
  const ExperimentPlan& plan_;
  SuiteConfig config_;
  std::size_t index_;
  std::uint64_t seed_;
  Rng rng_;
  TwoStateHmm model_;
  std::size_t length_;
  ReplicaOutcome out_;
};

std::string state_detail(const char* what, State expected, State got) {
  return std::string(what) + ": expected " + to_char(expected) + ", got " + to_char(got);
}

bool initial_is_stationary(const TwoStateHmm& model) {
  return std::abs(model.initial()[0] - model.stationary()[0]) <= 1e-12;
}

void run_nodes(Replica& r) {
  const auto& model = r.model();
  const auto& cfg = r.config();
  const std::size_t n = r.length();
  r.declare("future_invariance");
  const auto real = sample_realization(model, n, r.rng());
  const auto& xs = real.observations;
  const auto reports = r.classify(xs);

  std::vector<std::size_t> strong;
  for (const auto& rep : reports)
    if (is_strong(rep.kind)) strong.push_back(rep.time);
  std::vector<std::size_t> chosen;
  if (strong.size() <= cfg.nodes_per_replica) {
    chosen = strong;
  } else {
    for (std::size_t j = 0; j < cfg.nodes_per_replica; ++j)
      chosen.push_back(strong[j * strong.size() / cfg.nodes_per_replica]);
  }

  for (std::size_t u : chosen) {
    const State s = node_state(reports[u - 1].kind);
    std::vector<Observation> seq(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(u));
    for (std::size_t c = 0; c < cfg.continuations; ++c) {
      const std::size_t m = 1 + r.rng().below(cfg.max_suffix);
      std::vector<Observation> suffix = r.rng().uniform() < 0.5
                                            ? sample_realization(model, m, r.rng(), real.states[u - 1]).observations
                                            : sample_arbitrary(model, m, r.rng());
      seq.resize(u);
      seq.insert(seq.end(), suffix.begin(), suffix.end());
      const State got = decode_batch(model, seq).states[u - 1];
      r.record("future_invariance", got == s, u,
               state_detail("alignment at the node", s, got) + " (suffix length " + std::to_string(m) + ")");
    }
  }

  // Pointwise strong-node frequency for the mixture case, pooled in the fold.
  if (classify_case(model) == CaseLabel::case3 && n >= 2) {
    const auto& pi = model.stationary();
    const State s = pi[0] >= pi[1] ? State::a : State::b;
    const State t = other(s);
    const auto set = log_ratio_set(model, s, safe_log(pi[idx(t)]) - safe_log(pi[idx(s)]));
    const double p = pi[0] * set.mass(model.emission(State::a)) + pi[1] * set.mass(model.emission(State::b));
    const NodeKind strong_s = s == State::a ? NodeKind::strong_a : NodeKind::strong_b;
    std::size_t hits = 0;
    for (std::size_t u = 2; u <= n; ++u) hits += reports[u - 1].kind == strong_s ? 1 : 0;
    auto& e = r.outcome().extra;
    e["mixture_trials"] = e.value("mixture_trials", 0.0) + static_cast<double>(n - 1);
    e["mixture_hits"] = e.value("mixture_hits", 0.0) + static_cast<double>(hits);
    e["mixture_expected"] = e.value("mixture_expected", 0.0) + static_cast<double>(n - 1) * p;
    e["mixture_variance"] = e.value("mixture_variance", 0.0) + static_cast<double>(n - 1) * p * (1.0 - p);
  }

  // How often certificate windows occur in the realization.
  try {
    const auto cert = build_barrier_certificate(model, {cfg.mass_threshold, std::nullopt});
    auto& st = r.outcome().stats;
    for (std::size_t i = 0; i + cert.length <= n; ++i) {
      ++st.windows_scanned;
      if (verify_barrier(model, cert, std::span<const Observation>(xs).subspan(i, cert.length))) ++st.barrier_windows;
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MassThresholdUnreachable) throw;
  }
}

void run_barriers(Replica& r) {
  const auto& model = r.model();
  const auto& cfg = r.config();
  r.declare("certificate_built");
  r.declare("certificate_minimal_k");
  r.declare("window_in_sets");
  r.declare("window_contains_strong_node");
  r.declare("case1_target_nodes_only");

  BarrierCertificate cert;
  try {
    cert = build_barrier_certificate(model, {cfg.mass_threshold, std::nullopt});
    r.record("certificate_built", true);
  } catch (const Error& e) {
    r.record("certificate_built", false, 0, e.what());
    return;
  }

  if (cert.case_label != CaseLabel::case3) {
    const double log_shrink = std::log1p(-cert.epsilon);
    const double step = cert.case_label == CaseLabel::case1 ? log_shrink : 2.0 * log_shrink;
    const double laa = model.log_p(State::a, State::a), lab = model.log_p(State::a, State::b);
    const double lba = model.log_p(State::b, State::a), lbb = model.log_p(State::b, State::b);
    const double bound = cert.case_label == CaseLabel::case1 ? lab + lba - laa - lbb : laa + lbb - lba - lab;
    const bool holds = static_cast<double>(cert.k) * step < bound;
    const bool minimal = cert.k == 1 || !(static_cast<double>(cert.k - 1) * step < bound);
    bool positive = true;
    for (State s : cert.pattern) positive = positive && cert.hit_mass[idx(s)].value_or(0.0) > 0.0;
    r.record("certificate_minimal_k", holds && minimal && positive, 0,
             "k=" + std::to_string(cert.k) + " epsilon=" + format_real(cert.epsilon));
  }

  // With a non-stationary start the first observation is weighed by the
  // initial distribution rather than by a transition row, so the length-1
  // mixture certificate needs at least one preceding observation.
  const bool needs_prefix = cert.case_label == CaseLabel::case3 && !initial_is_stationary(model);
  for (std::size_t p = 0; p < cfg.prefixes; ++p) {
    const std::size_t min_len = needs_prefix ? 1 : 0;
    const std::size_t len = min_len + r.rng().below(cfg.max_prefix + 1 - min_len);
    auto seq = r.random_sequence(len);
    const auto window = sample_barrier_window(model, cert, r.rng());
    r.record("window_in_sets", verify_barrier(model, cert, window), len + 1);
    seq.insert(seq.end(), window.begin(), window.end());
    const auto reports = classify_trace(model, score_forward(model, seq, model.initial()));
    bool found = false;
    std::string wrong;
    for (std::size_t i = len; i < seq.size(); ++i) {
      const auto k = reports[i].kind;
      if (!is_strong(k)) continue;
      found = true;
      if (node_state(k) != cert.target && wrong.empty()) wrong = std::to_string(i + 1);
    }
    r.record("window_contains_strong_node", found, len + 1,
             "no strong node in window of length " + std::to_string(cert.length) + " after prefix " +
                 std::to_string(len));
    if (cert.case_label == CaseLabel::case1) {
      r.record("case1_target_nodes_only", wrong.empty(), len + 1,
               "strong node of the non-target state at time " + wrong);
    }
  }
}

void run_lemma2(Replica& r) {
  const auto report = check_conditions(r.model());
  r.record("some_state_dominates", report.some_state_dominates(), 0,
           "neither a_dominant nor b_dominant holds (" + std::string(case_name(report.case_label)) + ")");
}

void run_case_structure(Replica& r) {
  const auto& model = r.model();
  const std::size_t n = r.length();
  const auto xs = sample_realization(model, n, r.rng()).observations;
  const auto reports = r.classify(xs);
  const auto v = decode_batch(model, xs).states;
  const CaseLabel label = classify_case(model);
  r.declare("case1_changes_at_nodes");
  r.declare("case2_repeats_at_nodes");
  r.declare("case3_every_step_node");
  r.declare("case3_pointwise_argmax");

  for (std::size_t u = 1; u < n; ++u) {
    const bool node = is_node(reports[u - 1].kind);
    const bool changes = v[u - 1] != v[u];
    if (label == CaseLabel::case1) {
      r.record("case1_changes_at_nodes", !changes || node, u, "state changes after a non-node step");
    } else if (label == CaseLabel::case2) {
      r.record("case2_repeats_at_nodes", changes || node, u, "state repeats after a non-node step");
    }
  }
  if (label != CaseLabel::case3) return;

  const LogPair log_pi{safe_log(model.stationary()[0]), safe_log(model.stationary()[1])};
  const LogPair log_q = model.log_initial();
  for (std::size_t u = 1; u <= n; ++u) {
    r.record("case3_every_step_node", is_node(reports[u - 1].kind), u,
             std::string("step classified ") + std::string(node_kind_name(reports[u - 1].kind)));
    const LogPair& w = u == 1 ? log_q : log_pi;
    const LogPair lf = model.log_emissions(xs[u - 1]);
    const State expected = compare_scores(w[0] + lf[0], w[1] + lf[1]) >= 0 ? State::a : State::b;
    r.record("case3_pointwise_argmax", v[u - 1] == expected, u, state_detail("pointwise rule", expected, v[u - 1]));
  }
}

void run_corollary8(Replica& r) {
  const auto& model = r.model();
  r.declare("no_strong_b");
  r.declare("constant_a_after_first_strong_a");
  r.declare("b_nodes_precede_first_strong_a");
  if (!no_b_stay_region(model)) {
    r.outcome().extra["skipped"] = "model is not case 1 with an empty b-stay region";
    return;
  }
  const std::size_t n = r.length();
  const auto xs = sample_realization(model, n, r.rng()).observations;
  const auto reports = r.classify(xs);
  const auto v = decode_batch(model, xs).states;
  // At time 1 the scores carry the initial distribution, which the region
  // condition says nothing about unless it is the stationary one.
  const std::size_t first = initial_is_stationary(model) ? 1 : 2;
  std::size_t first_a = 0;
  for (std::size_t u = first; u <= n; ++u) {
    const auto k = reports[u - 1].kind;
    r.record("no_strong_b", k != NodeKind::strong_b, u, "strong b-node");
    if (first_a == 0 && k == NodeKind::strong_a) first_a = u;
    if (first_a != 0)
      r.record("b_nodes_precede_first_strong_a", !is_b_node(k), u,
               "b-node after the strong a-node at " + std::to_string(first_a));
  }
  if (first_a == 0) return;
  for (std::size_t u = first_a; u <= n; ++u)
    r.record("constant_a_after_first_strong_a", v[u - 1] == State::a, u,
             "alignment leaves a after the strong a-node at " + std::to_string(first_a));
}

void run_lemma10(Replica& r) {
  const auto& model = r.model();
  const auto& cfg = r.config();
  r.declare("first_of_ab_pair_not_b_node");
  r.declare("b_node_then_strong_a");
  if (classify_case(model) != CaseLabel::case2 || model.p(State::b, State::a) < model.p(State::a, State::b)) {
    r.outcome().extra["skipped"] = "model is not case 2 with p_ba >= p_ab";
    return;
  }
  const auto cert = build_barrier_certificate(model, {cfg.mass_threshold, std::nullopt});
  const auto& set_a = *cert.sets[0];
  const auto& set_b = *cert.sets[1];
  std::size_t b_nodes = 0;
  for (std::size_t w = 0; w < cfg.windows; ++w) {
    // The pair argument uses the scores of the observation before z_1.
    const std::size_t len = 1 + r.rng().below(cfg.max_prefix);
    auto seq = r.random_sequence(len);
    seq.push_back(sample_in_set(model.emission(State::a), set_a, r.rng()));
    seq.push_back(sample_in_set(model.emission(State::b), set_b, r.rng()));
    seq.push_back(sample_in_set(model.emission(State::a), set_a, r.rng()));
    const auto reports = classify_trace(model, score_forward(model, seq, model.initial()));
    const auto k1 = reports[len].kind;
    const auto k2 = reports[len + 1].kind;
    const auto k3 = reports[len + 2].kind;
    r.record("first_of_ab_pair_not_b_node", !is_b_node(k1), len + 1,
             std::string("z_1 classified ") + std::string(node_kind_name(k1)));
    if (is_b_node(k2)) ++b_nodes;
    r.record("b_node_then_strong_a", !is_b_node(k2) || k3 == NodeKind::strong_a, len + 3,
             std::string("z_2 is a b-node but z_3 classified ") + std::string(node_kind_name(k3)));
  }
  r.outcome().extra["epsilon"] = cert.epsilon;
  r.outcome().extra["b_node_pairs"] = b_nodes;
}

void run_growth(Replica& r) {
  const std::size_t n = r.length();
  const auto xs = sample_realization(r.model(), n, r.rng()).observations;
  const auto reports = r.classify(xs);
  const std::size_t half = n / 2;
  std::size_t at_half = 0, at_full = 0;
  for (const auto& rep : reports) {
    if (!is_strong(rep.kind)) continue;
    ++at_full;
    if (rep.time <= half) ++at_half;
  }
  r.record("count_grows", at_full > at_half, n,
           "no strong node in (n/2, n]: " + std::to_string(at_half) + " strong nodes at n/2 and at n");
  auto& e = r.outcome().extra;
  e["half_length"] = half;
  e["full_length"] = n;
  e["strong_at_half"] = at_half;
  e["strong_at_full"] = at_full;
}

void run_stream(Replica& r) {
  const auto& model = r.model();
  const auto& cfg = r.config();
  const std::size_t n = r.length();
  const auto xs = sample_realization(model, n, r.rng()).observations;
  const auto result = stream_decode(model, xs);
  const auto streamed = concatenate(result.segments);
  const auto batch = decode_batch(model, xs).states;
  const auto& st = result.stats;

  std::size_t mismatch = 0;
  for (std::size_t i = 0; i < std::max(streamed.size(), batch.size()) && mismatch == 0; ++i)
    if (i >= streamed.size() || i >= batch.size() || streamed[i] != batch[i]) mismatch = i + 1;
  r.record("batch_equivalence", mismatch == 0, mismatch, "stream and batch alignments differ");

  r.declare("committed_prefix_final");
  for (std::size_t c = 0; c < cfg.stream_continuations && st.committed > 0; ++c) {
    const std::size_t m = 1 + r.rng().below(cfg.max_suffix);
    auto seq = xs;
    const auto suffix = r.random_sequence(m);
    seq.insert(seq.end(), suffix.begin(), suffix.end());
    const auto extended = decode_batch(model, seq).states;
    std::size_t diff = 0;
    for (std::size_t i = 0; i < st.committed && diff == 0; ++i)
      if (extended[i] != streamed[i]) diff = i + 1;
    r.record("committed_prefix_final", diff == 0, diff, "continuation changed a committed state");
  }

  r.record("peak_buffer_is_max_gap_plus_one", st.peak_buffer == st.max_gap + 1, n,
           "peak buffer " + std::to_string(st.peak_buffer) + ", max gap " + std::to_string(st.max_gap));

  std::size_t expected_start = 1;
  bool monotone = true;
  std::string why;
  for (const auto& seg : result.segments) {
    if (seg.start != expected_start || seg.end < seg.start || seg.states.size() != seg.end - seg.start + 1) {
      monotone = false;
      why = "segment " + std::to_string(seg.start) + ".." + std::to_string(seg.end) + " breaks the tiling";
      break;
    }
    if (seg.node_state && seg.states.back() != *seg.node_state) {
      monotone = false;
      why = "segment ending at " + std::to_string(seg.end) + " does not end in its node state";
      break;
    }
    expected_start = seg.end + 1;
  }
  r.record("segments_monotone", monotone && expected_start == n + 1, n, why);

  r.declare("segment_maximizes_from_reset");
  LogPair log_initial = model.log_initial();
  for (const auto& seg : result.segments) {
    if (seg.states.size() <= cfg.max_bruteforce_span) {
      const auto span = std::span<const Observation>(xs).subspan(seg.start - 1, seg.states.size());
      const auto oracle = brute_force_alignment(model, span, log_initial);
      r.record("segment_maximizes_from_reset", oracle.states == seg.states, seg.start,
               "segment " + std::to_string(seg.start) + ".." + std::to_string(seg.end) +
                   " differs from the enumerated maximizer");
    }
    if (seg.node_state) log_initial = model.log_row(*seg.node_state);
  }

  auto& stats = r.outcome().stats;
  stats.observations += st.observations;
  stats.strong_a += st.kind_counts[static_cast<std::size_t>(NodeKind::strong_a)];
  stats.strong_b += st.kind_counts[static_cast<std::size_t>(NodeKind::strong_b)];
  stats.weak += st.kind_counts[static_cast<std::size_t>(NodeKind::weak_a)] +
                st.kind_counts[static_cast<std::size_t>(NodeKind::weak_b)];
  stats.gaps += st.gap_count;
  stats.gap_sum += static_cast<std::size_t>(std::llround(st.mean_gap * static_cast<double>(st.gap_count)));
  stats.max_gaps.push_back(st.max_gap);
  auto& e = r.outcome().extra;
  e["committed"] = st.committed;
  e["observations"] = st.observations;
  e["peak_buffer"] = st.peak_buffer;
}

void dispatch(Suite suite, Replica& r) {
  switch (suite) {
    case Suite::nodes: return run_nodes(r);
    case Suite::barriers: return run_barriers(r);
    case Suite::lemma2: return run_lemma2(r);
    case Suite::case_structure: return run_case_structure(r);
    case Suite::corollary8: return run_corollary8(r);
    case Suite::lemma10: return run_lemma10(r);
    case Suite::growth: return run_growth(r);
    case Suite::stream: return run_stream(r);
  }
}

// ---------------------------------------------------------------- folding

double num(const json& e, const char* key) { return e.contains(key) ? e.at(key).get<double>() : 0.0; }

SuiteResult fold(Suite suite, const ExperimentPlan& plan, std::vector<ReplicaOutcome>& outcomes) {
  SuiteResult result;
  result.suite = suite;
  result.replicas = outcomes.size();
  result.length = plan.length.value_or(default_length(suite));
  const auto& cfg = plan.config;

  auto find = [&](const std::string& name) -> CheckResult& {
    for (auto& c : result.checks)
      if (c.name == name) return c;
    result.checks.push_back(CheckResult{});
    result.checks.back().name = name;
    return result.checks.back();
  };

  double mix_trials = 0, mix_hits = 0, mix_expected = 0, mix_var = 0;
  double half_len = 0, full_len = 0, at_half = 0, at_full = 0;
  std::size_t committed = 0, observed = 0, peak = 0, skipped = 0;
  for (auto& o : outcomes) {
    for (auto& [name, c] : o.checks) {
      auto& dst = find(name);
      dst.trials += c.trials;
      dst.failures += c.failures;
      for (auto& ce : c.counterexamples)
        if (dst.counterexamples.size() < cfg.max_counterexamples) dst.counterexamples.push_back(std::move(ce));
    }
    auto& s = result.stats;
    s.observations += o.stats.observations;
    s.strong_a += o.stats.strong_a;
    s.strong_b += o.stats.strong_b;
    s.weak += o.stats.weak;
    s.gaps += o.stats.gaps;
    s.gap_sum += o.stats.gap_sum;
    s.max_gaps.insert(s.max_gaps.end(), o.stats.max_gaps.begin(), o.stats.max_gaps.end());
    s.windows_scanned += o.stats.windows_scanned;
    s.barrier_windows += o.stats.barrier_windows;

    const auto& e = o.extra;
    mix_trials += num(e, "mixture_trials");
    mix_hits += num(e, "mixture_hits");
    mix_expected += num(e, "mixture_expected");
    mix_var += num(e, "mixture_variance");
    half_len += num(e, "half_length");
    full_len += num(e, "full_length");
    at_half += num(e, "strong_at_half");
    at_full += num(e, "strong_at_full");
    committed += static_cast<std::size_t>(num(e, "committed"));
    observed += static_cast<std::size_t>(num(e, "observations"));
    peak = std::max(peak, static_cast<std::size_t>(num(e, "peak_buffer")));
    if (e.contains("skipped")) ++skipped;
  }

  if (suite == Suite::nodes && mix_trials > 0) {
    auto& c = find("mixture_strong_rate");
    c.trials = static_cast<std::size_t>(mix_trials);
    const double z = mix_var > 0 ? (mix_hits - mix_expected) / std::sqrt(mix_var) : 0.0;
    const bool ok = mix_var > 0 ? std::abs(z) <= 3.0 : std::abs(mix_hits - mix_expected) < 0.5;
    c.aggregate_pass = ok;
    c.extra = {{"observed_rate", mix_hits / mix_trials},
               {"expected_rate", mix_expected / mix_trials},
               {"z", z},
               {"tolerance_sd", 3.0}};
  }
  if (suite == Suite::growth) {
    auto& grows = find("count_grows");
    grows.aggregate_pass = grows.pass_rate() >= cfg.growth_fraction;
    grows.extra = {{"required_fraction", cfg.growth_fraction}};
    auto& drift = find("rate_stable");
    const double rate_half = half_len > 0 ? at_half / half_len : 0.0;
    const double rate_full = full_len > 0 ? at_full / full_len : 0.0;
    const double rel = rate_half > 0 ? std::abs(rate_full - rate_half) / rate_half : 1.0;
    drift.trials = 1;
    drift.aggregate_pass = rel < cfg.max_rate_drift;
    drift.extra = {{"rate_half", rate_half}, {"rate_full", rate_full}, {"relative_drift", rel},
                   {"max_drift", cfg.max_rate_drift}};
  }
  if (suite == Suite::stream && !result.checks.empty()) {
    auto& c = find("batch_equivalence");
    c.extra = {{"committed_fraction", observed ? static_cast<double>(committed) / static_cast<double>(observed) : 0.0},
               {"peak_buffer", peak}};
  }
  if (skipped > 0) {
    for (auto& c : result.checks) c.extra["skipped_replicas"] = skipped;
  }
  return result;
}

ReplicaOutcome run_guarded(Suite suite, const ExperimentPlan& plan, std::size_t replica) {
  try {
    return run_replica(suite, plan, replica);
  } catch (const Error& e) {
    ReplicaOutcome o;
    Check c;
    c.trials = 1;
    c.failures = 1;
    c.counterexamples.push_back({replica, mix_seed(plan.seed, replica), 0, e.what(),
                                 plan.model ? model_to_json(*plan.model) : json(nullptr)});
    o.checks.emplace_back("replica_completed", std::move(c));
    return o;
  }
}

}  // namespace

ReplicaOutcome run_replica(Suite suite, const ExperimentPlan& plan, std::size_t replica) {
  Replica r(plan, suite, replica);
  dispatch(suite, r);
  return std::move(r.outcome());
}

VerificationReport run_suite(const ExperimentPlan& plan) {
  validate_plan(plan);
  VerificationReport report;
  report.seed = plan.seed;
  for (Suite suite : plan.suites) {
    std::vector<ReplicaOutcome> outcomes(plan.replicas);
    const std::size_t workers = std::min(plan.jobs, plan.replicas);
    if (workers <= 1) {
      for (std::size_t i = 0; i < plan.replicas; ++i) outcomes[i] = run_guarded(suite, plan, i);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i = next++; i < plan.replicas; i = next++) {
            try {
              outcomes[i] = run_guarded(suite, plan, i);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
      for (auto& t : pool) t.join();
      if (failure) std::rethrow_exception(failure);
    }
    report.suites.push_back(fold(suite, plan, outcomes));
  }
  return report;
}

// ---------------------------------------------------------------- sweeps

std::vector<SweepPoint> sweep_models(const SweepGrid& grid, const ExperimentPlan& plan) {
  if (grid.stay_a.empty() || grid.mean_gaps.empty() || grid.variance_ratios.empty())
    throw Error(ErrorCode::BadPlan, "sweep grid is empty");
  validate_plan(plan);
  std::vector<SweepPoint> points;
  for (double pa : grid.stay_a) {
    const std::vector<double> bs = grid.stay_b.empty() ? std::vector<double>{pa} : grid.stay_b;
    for (double pb : bs) {
      for (double gap : grid.mean_gaps) {
        for (double ratio : grid.variance_ratios) {
          SweepPoint pt;
          pt.p_aa = pa;
          pt.p_bb = pb;
          pt.mean_gap = gap;
          pt.variance_ratio = ratio;
          ExperimentPlan local = plan;
          local.model = sweep_model(pa, pb, gap, ratio);
          pt.case_label = classify_case(*local.model);
          pt.report = run_suite(local);
          points.push_back(std::move(pt));
        }
      }
    }
  }
  return points;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << "p_aa,p_bb,mean_separation,variance_ratio,case,strong_node_rate,mean_node_gap,max_node_gap,passed\n";
  for (const auto& pt : points) {
    std::size_t obs = 0, strong = 0, gaps = 0, gap_sum = 0, max_gap = 0;
    for (const auto& s : pt.report.suites) {
      obs += s.stats.observations;
      strong += s.stats.strong_a + s.stats.strong_b;
      gaps += s.stats.gaps;
      gap_sum += s.stats.gap_sum;
      max_gap = std::max(max_gap, s.stats.max_gap());
    }
    const double rate_value = obs ? static_cast<double>(strong) / static_cast<double>(obs) : 0.0;
    const double mean_gap = gaps ? static_cast<double>(gap_sum) / static_cast<double>(gaps) : 0.0;
    out << format_real(pt.p_aa) << ',' << format_real(pt.p_bb) << ',' << format_real(pt.mean_gap) << ','
        << format_real(pt.variance_ratio) << ',' << case_name(pt.case_label) << ',' << format_real(rate_value) << ','
        << format_real(mean_gap) << ',' << max_gap << ',' << (pt.report.passed() ? "true" : "false") << '\n';
  }
}

}  // namespace twostate
