#pragma once

// Deterministic grid-world games: native step functions (the ground truth the
// agent has to learn), win/loss detection, level files, random levels and the
// per-game PDDL abstractions with their checkers.

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "groundwork/pddl.hpp"
#include "groundwork/worldmodel.hpp"

namespace groundwork::env {

using wm::Coord;
using wm::LowState;

enum class Terminal { None, Win, Loss };
std::string to_string(Terminal t);

struct EnvOutcome {
  LowState state;
  Terminal terminal = Terminal::None;

  bool operator==(const EnvOutcome&) const = default;
};

class InvalidActionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LevelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Named rectangle, inclusive bounds.
struct Region {
  std::string name;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(Coord c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
};

struct Level {
  std::string env_id;
  std::string name;
  LowState initial;
  /// PDDL goal literals, e.g. "(overlapping baba_obj flag_obj)" or "(not (unstored_box b1))".
  std::vector<std::string> goal;
  std::vector<Region> regions;
  std::vector<std::pair<std::string, std::string>> connections;
};

struct LevelParams {
  int width = 7;
  int height = 7;
  int boxes = 1;      // boxes / boulders / items per color, depending on the game
  int obstacles = 3;  // interior walls
  int hazards = 0;    // poisons / cherries / goop
  std::size_t max_attempts = 200;
  std::size_t verify_nodes = 200'000;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string id() const = 0;
  /// Canonical action order; also the BFS tie-breaking order.
  virtual const std::vector<std::string>& actions() const = 0;
  virtual std::vector<std::string> aux_keys() const { return {}; }

  /// Validates the action, keeps terminal states absorbing, then applies the rules.
  EnvOutcome step(const LowState& s, const std::string& action) const;
  virtual Terminal status(const LowState& s) const = 0;
  virtual void validate(const LowState& s) const;

  virtual wm::CheckerSet checkers(const Level& level) const = 0;
  const pddl::Domain& domain() const;
  /// Objects and goal from the level, init abstracted from `current`.
  pddl::Problem problem(const Level& level, const LowState& current) const;
  pddl::Problem problem(const Level& level) const { return problem(level, level.initial); }

  std::string builtin_program_source() const;
  wm::TransitionProgram builtin_program() const;
  /// Natural-language description used in synthesis prompts.
  std::string description() const;

  Level parse_level(std::string_view text) const;
  Level load_level(const std::string& path) const;
  /// Level files under assets/<id>/levels, sorted by file name.
  std::vector<std::string> shipped_level_paths() const;
  std::vector<Level> shipped_levels() const;
  /// Seeded generator; the result is verified solvable by native search.
  virtual Level random_level(std::uint64_t seed, const LevelParams& params) const = 0;

  /// One character per cell using the default legend.
  std::string render(const LowState& s) const;
  std::string serialize_level(const Level& level) const;

 protected:
  virtual LowState apply(const LowState& s, const std::string& action) const = 0;
  /// Recomputes derived aux facts (e.g. active rules) after parsing or stepping.
  virtual void refresh(LowState& s) const {}
  virtual std::vector<pddl::TypedName> problem_objects(const Level& level) const = 0;
  virtual std::vector<std::string> default_goal(const Level& level) const = 0;
  /// Legend used by render() and random levels: character -> object types.
  virtual std::vector<std::pair<char, std::vector<std::string>>> default_legend() const = 0;

  /// Native breadth-first search to a win; false if none within the node cap.
  bool solvable(const LowState& s, std::size_t max_nodes) const;

 private:
  mutable std::shared_ptr<const pddl::Domain> domain_;
};

std::unique_ptr<Environment> make_environment(std::string_view id);
/// "sokoban", "pushboulders", "keke", "clusterbox", "babyai".
const std::vector<std::string>& environment_ids();

/// Asset root: $GROUNDWORK_ASSETS if set, else the build-time default.
std::string asset_dir();
std::string read_text_file(const std::string& path);

Coord offset(Coord c, const std::string& direction);

// ---- game-specific helpers exposed for tests ----

struct KekeRule {
  std::string subject;   // "rock_word"
  std::string verb;      // "is_word"
  std::string object;    // "flag_word"
  std::vector<Coord> cells;

  std::string str() const { return subject + " " + verb + " " + object; }
};

/// Horizontal (left to right) and vertical (top to bottom) word triples
/// noun-is-(noun|property), sorted and deduplicated by text.
std::vector<KekeRule> parse_rules(const LowState& s);
std::vector<std::string> parse_rule_strings(const LowState& s);

/// Sokoban simple deadlock: an unstored box with a blocked vertical and a blocked horizontal side.
bool sokoban_boxes_stuck(const LowState& s);

/// True iff every box color forms one 4-connected group.
bool clusterbox_all_clustered(const LowState& s);

}  // namespace groundwork::env
