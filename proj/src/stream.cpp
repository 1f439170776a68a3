#include "twostate/stream.hpp"

#include <ostream>

namespace twostate {

using nlohmann::json;

StreamDecoder::StreamDecoder(const TwoStateHmm& model) : model_(&model), log_initial_(model.log_initial()) {}

void StreamDecoder::require_live() const {
  if (poisoned_) throw Error(ErrorCode::ImpossibleObservation, "stream was poisoned by an impossible observation");
  if (finalized_) throw Error(ErrorCode::Finalized, "stream already flushed");
}

void StreamDecoder::record_gap(std::size_t gap) {
  ++stats_.gap_count;
  gap_sum_ += gap;
  stats_.max_gap = std::max(stats_.max_gap, gap);
  stats_.mean_gap = static_cast<double>(gap_sum_) / static_cast<double>(stats_.gap_count);
}

std::optional<Segment> StreamDecoder::push(Observation x) {
  require_live();
  const LogPair emit = model_->log_emissions(x);
  BackpointerPair bp{};
  LogPair next = back_.empty() ? start_scores(log_initial_, emit) : advance_scores(*model_, delta_, emit, bp, offset_);
  if (next[0] == kNegInf && next[1] == kNegInf) {
    poisoned_ = true;
    throw Error(ErrorCode::ImpossibleObservation,
                "observation at time " + std::to_string(time_ + 1) + " has zero density under every path");
  }
  delta_ = next;
  back_.push_back(bp);
  ++time_;
  ++stats_.observations;
  stats_.peak_buffer = std::max(stats_.peak_buffer, back_.size());

  last_report_ = classify_step(*model_, ScorePair{time_, delta_}, offset_);
  ++stats_.kind_counts[static_cast<std::size_t>(last_report_.kind)];
  std::optional<Segment> out;
  if (is_strong(last_report_.kind)) {
    ++stats_.strong_nodes;
    const State s = node_state(last_report_.kind);
    Segment seg;
    seg.start = committed_ + 1;
    seg.end = time_;
    seg.states = backtrack(back_, s);
    seg.node_state = s;
    record_gap(back_.size() - 1);
    offset_ += delta_[idx(s)];
    log_initial_ = model_->log_row(s);
    back_.clear();
    committed_ = time_;
    stats_.committed = committed_;
    ++stats_.segments;
    out = std::move(seg);
  }
  stats_.committed_fraction = static_cast<double>(committed_) / static_cast<double>(time_);
  return out;
}

Segment StreamDecoder::flush() {
  require_live();
  if (back_.empty()) throw Error(ErrorCode::EmptyBuffer, "nothing buffered to flush");
  Segment seg;
  seg.start = committed_ + 1;
  seg.end = time_;
  seg.states = backtrack(back_, best_terminal(delta_, nullptr, offset_));
  seg.final = false;
  record_gap(back_.size() - 1);
  stats_.flushed = back_.size();
  stats_.flushed_tail = true;
  ++stats_.segments;
  back_.clear();
  finalized_ = true;
  return seg;
}

StreamStats run_stream(const TwoStateHmm& model, const ObservationSource& source, const SegmentSink& sink) {
  StreamDecoder decoder(model);
  while (auto x = source()) {
    if (auto seg = decoder.push(*x)) sink(*seg);
  }
  if (decoder.buffered() > 0) sink(decoder.flush());
  return decoder.stats();
}

StreamResult stream_decode(const TwoStateHmm& model, std::span<const Observation> observations) {
  StreamResult result;
  std::size_t i = 0;
  result.stats = run_stream(
      model,
      [&]() -> std::optional<Observation> {
        if (i == observations.size()) return std::nullopt;
        return observations[i++];
      },
      [&](const Segment& s) { result.segments.push_back(s); });
  return result;
}

std::vector<State> concatenate(std::span<const Segment> segments) {
  std::vector<State> out;
  for (const auto& s : segments) out.insert(out.end(), s.states.begin(), s.states.end());
  return out;
}

json StreamStats::to_json() const {
  json kinds = json::object();
  for (std::size_t k = 0; k < kNodeKindCount; ++k)
    kinds[std::string(node_kind_name(static_cast<NodeKind>(k)))] = kind_counts[k];
  json tail = flushed_tail ? json{{"length", flushed}, {"final", false}} : json(nullptr);
  return {{"observations", observations},
          {"committed", committed},
          {"committed_fraction", committed_fraction},
          {"flushed_tail", tail},
          {"segments", segments},
          {"node_counts", kinds},
          {"strong_nodes", strong_nodes},
          {"gap_count", gap_count},
          {"max_gap", max_gap},
          {"mean_gap", mean_gap},
          {"peak_buffer", peak_buffer}};
}

void write_segment_csv_header(std::ostream& out) { out << "start,end,states,node_state\n"; }

void write_segment_csv_row(std::ostream& out, const Segment& segment) {
  out << segment.start << ',' << segment.end << ',';
  for (State s : segment.states) out << to_char(s);
  out << ',';
  if (segment.node_state)
    out << to_char(*segment.node_state);
  else
    out << '-';
  out << '\n';
}

}  // namespace twostate
