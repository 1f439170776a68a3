#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "twostate/nodes.hpp"

namespace twostate {

/// A committed (or flushed) piece of the alignment covering times start..end.
struct Segment {
  std::size_t start = 1;
  std::size_t end = 0;
  std::vector<State> states;
  /// State of the strong node that closed the segment; empty for a flush.
  std::optional<State> node_state;
  /// False only for the flushed tail, which later observations could revise.
  bool final = true;
};

/// A gap is the number of observations strictly between consecutive commit
/// points, where the commit points are time 0, every strong node and the flush.
/// After a flush, peak_buffer == max_gap + 1.
struct StreamStats {
  std::size_t observations = 0;
  std::size_t committed = 0;  // observations covered by final segments
  std::size_t flushed = 0;    // observations covered by the flushed tail
  bool flushed_tail = false;
  std::size_t segments = 0;
  std::array<std::size_t, kNodeKindCount> kind_counts{};
  std::size_t strong_nodes = 0;
  std::size_t gap_count = 0;
  std::size_t max_gap = 0;
  double mean_gap = 0.0;
  std::size_t peak_buffer = 0;
  /// committed / observations before the flush (0 for an empty stream).
  double committed_fraction = 0.0;

  nlohmann::json to_json() const;
};

/// Online Viterbi decoding that commits at strong nodes.
///
/// Buffered state is the scores for the current time and one backpointer pair
/// per observation since the last commit. At a strong s-node at time u the
/// buffer is backtracked from s, emitted as a final segment, and cleared; the
/// recursion restarts from row (p_{s.}) and log delta_u(s) moves into a running
/// offset so scores stay O(1) in magnitude.
class StreamDecoder {
 public:
  explicit StreamDecoder(const TwoStateHmm& model);

  /// Consumes one observation. Returns the segment it closes, if any. Throws
  /// ImpossibleObservation when both scores become -inf; the decoder rejects
  /// every later call after that.
  std::optional<Segment> push(Observation x);

  /// Emits the best path for the buffered tail (terminal state by argmax,
  /// ties toward a) and finalizes the decoder. Throws EmptyBuffer when nothing
  /// is buffered and Finalized on a second call.
  Segment flush();

  /// The report for the most recent push.
  const NodeReport& last_report() const { return last_report_; }
  const StreamStats& stats() const { return stats_; }
  std::size_t time() const { return time_; }
  std::size_t committed() const { return committed_; }
  std::size_t buffered() const { return back_.size(); }
  bool poisoned() const { return poisoned_; }
  bool finalized() const { return finalized_; }

 private:
  void require_live() const;
  void record_gap(std::size_t gap);

  const TwoStateHmm* model_;
  LogPair log_initial_;
  LogPair delta_{kNegInf, kNegInf};
  double offset_ = 0.0;
  std::vector<BackpointerPair> back_;
  std::size_t time_ = 0;
  std::size_t committed_ = 0;
  std::size_t gap_sum_ = 0;
  NodeReport last_report_;
  StreamStats stats_;
  bool poisoned_ = false;
  bool finalized_ = false;
};

using ObservationSource = std::function<std::optional<Observation>()>;
using SegmentSink = std::function<void(const Segment&)>;

/// Pushes every observation from `source`, passing segments to `sink` as they
/// are emitted, and flushes a nonempty tail at the end.
StreamStats run_stream(const TwoStateHmm& model, const ObservationSource& source, const SegmentSink& sink);

struct StreamResult {
  std::vector<Segment> segments;
  StreamStats stats;
};

/// run_stream over an in-memory sequence, collecting the segments.
StreamResult stream_decode(const TwoStateHmm& model, std::span<const Observation> observations);

/// Concatenated segment states.
std::vector<State> concatenate(std::span<const Segment> segments);

/// CSV header "start,end,states,node_state"; node_state is "-" for a flush.
void write_segment_csv_header(std::ostream& out);
void write_segment_csv_row(std::ostream& out, const Segment& segment);

}  // namespace twostate
