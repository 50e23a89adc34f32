#pragma once

// Low-level states, the learned transition program and the checker bridge
// between PDDL literals and low-level states.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "groundwork/pddl.hpp"
#include "groundwork/script.hpp"

namespace groundwork::wm {

/// Cell coordinate: x is the column, y the row (y grows downwards).
struct Coord {
  int x = 0;
  int y = 0;

  auto operator<=>(const Coord&) const = default;
  bool operator==(const Coord&) const = default;
};

class MalformedStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical state: object type -> sorted coordinate list (empty lists are
/// dropped), plus auxiliary string-list facts keyed by a per-environment schema.
class LowState {
 public:
  using ObjectMap = std::map<std::string, std::vector<Coord>, std::less<>>;
  using AuxMap = std::map<std::string, std::vector<std::string>, std::less<>>;

  LowState() = default;
  LowState(int width, int height, std::vector<std::string> aux_keys = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Coord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }

  const ObjectMap& objects() const { return objects_; }
  const AuxMap& aux() const { return aux_; }

  /// Coordinates of a type (empty if absent).
  const std::vector<Coord>& coords(std::string_view type) const;
  std::size_t count(std::string_view type) const { return coords(type).size(); }
  bool has(std::string_view type, Coord c) const;
  /// Types with at least one object at c, sorted.
  std::vector<std::string> types_at(Coord c) const;

  void add(const std::string& type, Coord c);
  /// Removes one object of the type at c; returns false if none.
  bool remove(const std::string& type, Coord c);
  void set_coords(const std::string& type, std::vector<Coord> coords);
  void erase_type(const std::string& type);

  const std::vector<std::string>& aux(std::string_view key) const;
  void set_aux(const std::string& key, std::vector<std::string> values);
  bool has_aux_key(std::string_view key) const { return aux_.find(key) != aux_.end(); }

  std::size_t hash() const;
  bool operator==(const LowState& other) const = default;
  bool operator<(const LowState& other) const;

  /// Deterministic JSON with sorted keys and sorted coordinate lists.
  std::string to_json() const;
  static LowState from_json(std::string_view json);

  /// Compact binary encoding for search frontiers; unpack(pack()) is the identity.
  std::string pack() const;
  static LowState unpack(std::string_view bytes);

 private:
  int width_ = 0;
  int height_ = 0;
  ObjectMap objects_;
  AuxMap aux_;
};

struct LowStateHash {
  std::size_t operator()(const LowState& s) const { return s.hash(); }
};

/// Source text of a transition program plus bookkeeping. Compilation happens
/// once at construction; a program that fails to compile keeps the error and
/// every simulate() call reports it as a crash.
class TransitionProgram {
 public:
  TransitionProgram() = default;
  TransitionProgram(std::string source, int version, std::string provenance);

  const std::string& source() const { return source_; }
  int version() const { return version_; }
  const std::string& provenance() const { return provenance_; }
  bool loaded() const { return compiled_ != nullptr; }
  const std::string& load_error() const { return load_error_; }
  const script::Program* compiled() const { return compiled_.get(); }

 private:
  std::string source_;
  int version_ = 0;
  std::string provenance_;
  std::shared_ptr<const script::Program> compiled_;
  std::string load_error_;
};

enum class SimErrorKind { Crash, Timeout, Malformed };

/// Raised by simulate. Crashes, timeouts and malformed outputs are model
/// defects that the agent routes into refinement.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(SimErrorKind kind, const std::string& message);
  SimErrorKind kind() const { return kind_; }

 private:
  SimErrorKind kind_;
};

/// Executes transition programs. Owns one sandbox; not thread-safe.
class Simulator {
 public:
  explicit Simulator(script::Limits limits = {});

  /// The program's predicted next state, canonicalized. The input is not modified.
  LowState simulate(const TransitionProgram& program, const LowState& s, const std::string& action);

  std::uint64_t calls() const { return calls_; }

 private:
  script::Interpreter interp_;
  std::uint64_t calls_ = 0;
};

LowState simulate(const TransitionProgram& program, const LowState& s, const std::string& action);

/// State <-> sandbox value conversion.
script::Value to_value(const LowState& s);
/// Width/height keys are validated and dropped; aux keys are those of `schema`.
LowState from_value(const script::Value& v, const LowState& schema);

class MissingCheckerError : public std::runtime_error {
 public:
  explicit MissingCheckerError(const std::string& predicate);
};

using Checker = std::function<bool(const LowState&, const std::vector<std::string>&)>;

class CheckerSet {
 public:
  void add(const std::string& predicate, Checker fn);
  bool contains(std::string_view predicate) const;
  bool evaluate(const LowState& s, const pddl::Atom& atom) const;
  std::vector<std::string> predicates() const;

 private:
  std::map<std::string, Checker, std::less<>> checkers_;
};

/// True iff every EFF+ atom evaluates true and every EFF- atom false.
bool check_effects(const CheckerSet& cs, const LowState& s, const pddl::GroundedOperator& op);
bool check_literals(const CheckerSet& cs, const LowState& s, const std::vector<pddl::Literal>& literals);
/// The subset of candidate atoms whose evaluator returns true.
pddl::AbstractState abstract(const CheckerSet& cs, const LowState& s, const std::vector<pddl::Atom>& candidates);

/// Every ground atom of every domain predicate over the problem's objects.
std::vector<pddl::Atom> candidate_atoms(const pddl::Domain& domain, const pddl::Problem& problem);

}  // namespace groundwork::wm
