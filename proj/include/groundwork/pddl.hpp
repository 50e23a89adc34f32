#pragma once

// Typed STRIPS subset of PDDL 1.2: domain/problem parsing, grounding and
// closed-world literal evaluation.

#include <compare>
#include <cstddef>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace groundwork::pddl {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Raised for valid PDDL that uses a construct outside the supported subset.
class UnsupportedError : public std::runtime_error {
 public:
  UnsupportedError(const std::string& construct, int line, int column);
  const std::string& construct() const { return construct_; }

 private:
  std::string construct_;
};

/// Undeclared predicate/type/object, arity mismatch and similar.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Atom {
  std::string predicate;
  std::vector<std::string> args;

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
  std::string str() const;  // "(pred a b)"
};

struct Literal {
  Atom atom;
  bool positive = true;

  auto operator<=>(const Literal&) const = default;
  bool operator==(const Literal&) const = default;
  std::string str() const;
};

using AbstractState = std::set<Atom>;

struct TypedName {
  std::string name;
  std::string type = "object";

  bool operator==(const TypedName&) const = default;
};

struct PredicateSchema {
  std::string name;
  std::vector<TypedName> params;

  std::size_t arity() const { return params.size(); }
  bool operator==(const PredicateSchema&) const = default;
};

/// Literals inside schemas use variable names ("?box") or constants as args.
struct OperatorSchema {
  std::string name;
  std::vector<TypedName> params;
  std::vector<Literal> preconditions;
  std::vector<Atom> add_effects;
  std::vector<Atom> del_effects;

  bool operator==(const OperatorSchema&) const = default;
};

struct Domain {
  std::string name;
  std::vector<std::string> requirements;
  /// Declared types in declaration order, each with its parent ("object" for roots).
  std::vector<std::pair<std::string, std::string>> types;
  std::vector<TypedName> constants;
  std::vector<PredicateSchema> predicates;
  std::vector<OperatorSchema> operators;

  bool has_type(std::string_view type) const;
  bool is_subtype(std::string_view type, std::string_view ancestor) const;
  const PredicateSchema* find_predicate(std::string_view name) const;
  const OperatorSchema* find_operator(std::string_view name) const;

  bool operator==(const Domain&) const = default;
};

struct Problem {
  std::string name;
  std::string domain_name;
  /// Objects in declaration order.
  std::vector<TypedName> objects;
  AbstractState init;
  std::vector<Literal> goal;

  const TypedName* find_object(std::string_view name) const;
  /// Objects of the given type (including subtypes), domain constants included.
  std::vector<std::string> objects_of_type(const Domain& domain, std::string_view type) const;

  bool operator==(const Problem&) const = default;
};

struct GroundedOperator {
  std::string schema;
  std::vector<std::string> args;
  std::vector<Literal> preconditions;
  std::vector<Atom> add_effects;
  std::vector<Atom> del_effects;

  /// "push_to_hole b1"
  std::string label() const;
  /// Effects as literals: EFF+ positive, EFF- negated.
  std::vector<Literal> effect_literals() const;

  bool operator==(const GroundedOperator&) const = default;
};

Domain parse_domain(std::string_view text);
Problem parse_problem(std::string_view text, const Domain& domain);

/// All type-consistent bindings, schema declaration order then lexicographic
/// argument order.
std::vector<GroundedOperator> ground(const Domain& domain, const Problem& problem);

bool holds(const AbstractState& state, const std::vector<Literal>& literals);

std::string serialize(const Domain& domain);
std::string serialize(const Problem& problem);

/// Parses a single ground atom "(pred a b)" or "pred a b".
Atom parse_atom(std::string_view text);

}  // namespace groundwork::pddl
