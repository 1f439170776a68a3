#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "twostate/viterbi.hpp"

namespace twostate {

enum class NodeKind : std::uint8_t {
  strong_a,
  weak_a,
  strong_b,
  weak_b,
  stay,  // not a node: both states keep their own predecessor
  swap,  // not a node: both states take the other state as predecessor
};

inline constexpr std::size_t kNodeKindCount = 6;

std::string_view node_kind_name(NodeKind kind);

constexpr bool is_node(NodeKind k) { return k != NodeKind::stay && k != NodeKind::swap; }
constexpr bool is_strong(NodeKind k) { return k == NodeKind::strong_a || k == NodeKind::strong_b; }
constexpr bool is_b_node(NodeKind k) { return k == NodeKind::strong_b || k == NodeKind::weak_b; }
constexpr State node_state(NodeKind k) {
  return k == NodeKind::strong_b || k == NodeKind::weak_b ? State::b : State::a;
}

/// Classification of time u from the scores at u alone.
///
///   margin_into_a = log delta_u(a) p_aa - log delta_u(b) p_ba
///   margin_into_b = log delta_u(a) p_ab - log delta_u(b) p_bb
///
/// Both positive beyond round-off: strong a-node (every alignment of every
/// extension passes through a at u). Both negative: strong b-node. Opposite
/// signs: stay (+,-) or swap (-,+). A margin within round-off of zero makes
/// the node weak; a node with both margins tied is reported as weak a.
struct NodeReport {
  std::size_t time = 0;
  NodeKind kind = NodeKind::stay;
  double margin_into_a = 0.0;
  double margin_into_b = 0.0;
};

NodeReport classify_step(const TwoStateHmm& model, const ScorePair& scores, double offset = 0.0);

std::vector<NodeReport> classify_trace(const TwoStateHmm& model, const ForwardTrace& trace);

struct Length1Barrier {
  bool is_a_barrier = false;
  bool is_b_barrier = false;
};

/// x is an a-barrier of length 1 when p_ia f_a(x) p_aj > p_ib f_b(x) p_bj for
/// all four (i, j); such an observation is a strong a-node after any prefix.
Length1Barrier check_length1_barrier(const TwoStateHmm& model, Observation x);

/// CSV with header "time,kind,margin1,margin2"; margins in log domain, %.17g.
void write_node_csv(std::ostream& out, std::span<const NodeReport> reports);

}  // namespace twostate
