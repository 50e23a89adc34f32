#pragma once

// Replay buffers of observed or predicted transitions, and the structured
// difference between a predicted and an actual state.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "groundwork/worldmodel.hpp"

namespace groundwork::agent {

using wm::LowState;

enum class Origin { Predicted, Actual, Warmup, Exploration };
std::string to_string(Origin o);

struct Transition {
  LowState state;
  std::string action;
  double reward = 0.0;  // carried for completeness; planning is goal-based
  LowState next;
  std::string label;    // abstract operator label, empty for random actions
  Origin origin = Origin::Actual;
  std::string outcome = "none";  // none | win | loss after the transition
};

struct ReplayBuffer {
  std::vector<Transition> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  void push(Transition t) { entries.push_back(std::move(t)); }
  const Transition& operator[](std::size_t i) const { return entries[i]; }
};

/// One key whose value differs. Items are rendered in list-literal syntax.
struct KeyDiff {
  std::string key;
  bool aux = false;
  std::vector<std::string> predicted;
  std::vector<std::string> actual;
  std::vector<std::string> missing;  // in actual, not predicted
  std::vector<std::string> extra;    // in predicted, not actual
};

/// A key present on one side only whose coordinates appear under another key on the other side.
struct KeyCoincidence {
  std::string missing_key;
  std::string other_key;
};

struct StateDiff {
  std::vector<KeyDiff> keys;
  std::vector<KeyCoincidence> coincidences;

  bool empty() const { return keys.empty() && coincidences.empty(); }
};

StateDiff diff_states(const LowState& predicted, const LowState& actual);
/// Prediction-error lines: per-key predicted/actual or Missing/Extra lines, then key coincidences.
std::string render_diff(const StateDiff& diff);

struct Mismatch {
  std::string label;           // abstract step label
  std::size_t index = 0;       // index into the aligned buffers
  std::size_t segment_offset = 0;  // action index within the segment
  LowState segment_start;
  std::vector<std::string> segment_actions;  // actions up to and including the failing one
  LowState before;
  std::string action;
  LowState predicted;
  LowState actual;
  StateDiff diff;
  bool truncated = false;      // the actual episode ended before the prediction did
  std::string error;           // set when the model raised instead of predicting
};

/// First index where the buffers' successor states differ. A length difference is a
/// mismatch at the shorter length. Labels and segment context come from the actual side.
std::optional<Mismatch> detect_mismatch(const ReplayBuffer& predicted, const ReplayBuffer& actual);

/// Python-style list rendering used in diffs: ['a', 'b'] and [[1, 2], [3, 4]].
std::string py_list(const std::vector<std::string>& items);
std::string py_coords(const std::vector<wm::Coord>& coords);

}  // namespace groundwork::agent
