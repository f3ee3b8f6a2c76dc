#pragma once

#include <algorithm>

#include "scd/types.hpp"

namespace scd {

enum class Verdict : std::uint8_t { Suspicious, Benign, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Suspicious: return "suspicious";
    case Verdict::Benign: return "benign";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

enum class ScoreEventKind : std::uint8_t { NoChange, ScoreChanged, SuspicionRaised };

struct ScoreEvent {
  ScoreEventKind kind = ScoreEventKind::NoChange;
  std::uint32_t new_score = 0;
};

// One scoring step: +alpha on a suspicious window (capped at gamma),
// -beta otherwise (floored at 0). Inconclusive windows carry no evidence
// and decay like benign ones. The flag latches at gamma; in non-sticky
// mode it clears again once the score drains back to 0.
inline ScoreEvent update_score(ProcessMonitorState& st, Verdict verdict, const ScoreConfig& cfg) {
  if (st.score > cfg.gamma) {
    throw std::invalid_argument("update_score: score above gamma");
  }
  const std::uint32_t old_score = st.score;
  if (verdict == Verdict::Suspicious) {
    const std::uint64_t bumped = std::uint64_t(old_score) + cfg.alpha;
    st.score = static_cast<std::uint32_t>(std::min<std::uint64_t>(bumped, cfg.gamma));
  } else {
    st.score = old_score > cfg.beta ? old_score - cfg.beta : 0;
  }

  bool raised = false;
  if (verdict == Verdict::Suspicious && st.score == cfg.gamma && !st.suspected) {
    st.suspected = true;
    raised = true;
  }
  if (!cfg.sticky && st.suspected && st.score == 0 && !raised) {
    st.suspected = false;
  }

  ScoreEvent ev;
  ev.new_score = st.score;
  if (raised) {
    ev.kind = ScoreEventKind::SuspicionRaised;
  } else if (st.score != old_score) {
    ev.kind = ScoreEventKind::ScoreChanged;
  }
  return ev;
}

// fork(): the child process inherits the parent's suspicion flag and score
// as-of-now, but starts a fresh observation window at the parent's current
// width.
inline ProcessMonitorState on_fork(const ProcessMonitorState& parent, std::uint32_t child_pid) {
  ProcessMonitorState child;
  child.pid = child_pid;
  child.score = parent.score;
  child.suspected = parent.suspected;
  child.window_width = parent.window_width;
  child.window_elapsed = 0;
  child.accum = EventWindowSample{};
  child.prev_window_rates.reset();
  return child;
}

}  // namespace scd
