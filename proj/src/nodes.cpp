#include "twostate/nodes.hpp"

#include <ostream>

#include "twostate/model_io.hpp"

namespace twostate {

std::string_view node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::strong_a: return "strong_a";
    case NodeKind::weak_a: return "weak_a";
    case NodeKind::strong_b: return "strong_b";
    case NodeKind::weak_b: return "weak_b";
    case NodeKind::stay: return "stay";
    case NodeKind::swap: return "swap";
  }
  return "unknown";
}

NodeReport classify_step(const TwoStateHmm& model, const ScorePair& scores, double offset) {
  const double a_to_a = scores[State::a] + model.log_p(State::a, State::a);
  const double b_to_a = scores[State::b] + model.log_p(State::b, State::a);
  const double a_to_b = scores[State::a] + model.log_p(State::a, State::b);
  const double b_to_b = scores[State::b] + model.log_p(State::b, State::b);

  NodeReport r;
  r.time = scores.time;
  r.margin_into_a = a_to_a - b_to_a;
  r.margin_into_b = a_to_b - b_to_b;

  const int into_a = compare_scores(a_to_a, b_to_a, offset);
  const int into_b = compare_scores(a_to_b, b_to_b, offset);
  if (into_a > 0 && into_b > 0) {
    r.kind = NodeKind::strong_a;
  } else if (into_a < 0 && into_b < 0) {
    r.kind = NodeKind::strong_b;
  } else if (into_a > 0 && into_b < 0) {
    r.kind = NodeKind::stay;
  } else if (into_a < 0 && into_b > 0) {
    r.kind = NodeKind::swap;
  } else if (into_a >= 0 && into_b >= 0) {
    r.kind = NodeKind::weak_a;
  } else {
    r.kind = NodeKind::weak_b;
  }
  return r;
}

std::vector<NodeReport> classify_trace(const TwoStateHmm& model, const ForwardTrace& trace) {
  std::vector<NodeReport> out;
  out.reserve(trace.scores.size());
  for (const auto& s : trace.scores) out.push_back(classify_step(model, s));
  return out;
}

Length1Barrier check_length1_barrier(const TwoStateHmm& model, Observation x) {
  const LogPair f = model.log_emissions(x);
  Length1Barrier out{true, true};
  for (State i : kStates) {
    for (State j : kStates) {
      const double through_a = model.log_p(i, State::a) + f[0] + model.log_p(State::a, j);
      const double through_b = model.log_p(i, State::b) + f[1] + model.log_p(State::b, j);
      const int cmp = compare_scores(through_a, through_b);
      out.is_a_barrier = out.is_a_barrier && cmp > 0;
      out.is_b_barrier = out.is_b_barrier && cmp < 0;
    }
  }
  return out;
}

void write_node_csv(std::ostream& out, std::span<const NodeReport> reports) {
  out << "time,kind,margin1,margin2\n";
  for (const auto& r : reports) {
    out << r.time << ',' << node_kind_name(r.kind) << ',' << format_real(r.margin_into_a) << ','
        << format_real(r.margin_into_b) << '\n';
  }
}

}  // namespace twostate
