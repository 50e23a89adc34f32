#pragma once

// A sandboxed interpreter for a Python subset. Synthesized transition programs
// run here: there is no file, network or process access, and every call is
// bounded by a step budget, a wall-clock cap, a recursion cap and an
// allocation cap.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace groundwork::script {

enum class ErrorKind {
  Syntax,     // program failed to compile
  Runtime,    // script-level exception (NameError, KeyError, ...)
  Timeout,    // wall-clock cap exceeded
  StepLimit,  // instruction budget exceeded
  Memory,     // allocation cap exceeded
  Recursion,  // call depth cap exceeded
};

class ScriptError : public std::runtime_error {
 public:
  ScriptError(ErrorKind kind, std::string py_type, const std::string& message, int line = 0);

  ErrorKind kind() const { return kind_; }
  /// Python-style exception name, e.g. "KeyError".
  const std::string& py_type() const { return py_type_; }
  int line() const { return line_; }
  const std::string& message() const { return message_; }
  bool catchable() const { return kind_ == ErrorKind::Runtime; }

 private:
  ErrorKind kind_;
  std::string py_type_;
  std::string message_;
  int line_;
};

class Value;
struct Str;
struct List;
struct Tuple;
class Dict;
class Set;

class Value {
 public:
  enum class Type : std::uint8_t {
    Undefined,
    None,
    Bool,
    Int,
    Float,
    Str,
    List,
    Tuple,
    Dict,
    Set,
    Function,
    Builtin,
    Method,
    Module,
    Exception,
  };

  Value() : type_(Type::None), i_(0) {}

  static Value undefined();
  static Value boolean(bool b);
  static Value integer(std::int64_t i);
  static Value real(double f);
  static Value str(std::string s);
  static Value list(std::vector<Value> items = {});
  static Value tuple(std::vector<Value> items);
  static Value dict();
  static Value set();
  /// Internal tagged constructors (functions, builtins, bound methods, modules).
  static Value tagged(Type type, std::uint32_t id, std::shared_ptr<void> obj);

  Type type() const { return type_; }
  bool is_none() const { return type_ == Type::None; }
  bool is_undefined() const { return type_ == Type::Undefined; }
  bool is_number() const { return type_ == Type::Int || type_ == Type::Float || type_ == Type::Bool; }

  bool as_bool() const { return b_; }
  std::int64_t as_int() const { return type_ == Type::Bool ? (b_ ? 1 : 0) : i_; }
  double as_float() const;
  std::uint32_t id() const { return id_; }
  const std::string& as_str() const;
  List& as_list() const;
  const Tuple& as_tuple() const;
  Dict& as_dict() const;
  Set& as_set() const;
  const std::shared_ptr<void>& object() const { return obj_; }
  /// Items of a list or tuple.
  const std::vector<Value>& sequence() const;

  bool truthy() const;
  std::size_t hash() const;  // throws TypeError for unhashable values
  bool identical(const Value& other) const;

  std::string repr() const;
  std::string to_string() const;  // str()
  std::string type_name() const;

  friend bool operator==(const Value& a, const Value& b);
  friend bool operator!=(const Value& a, const Value& b) { return !(a == b); }

 private:
  Type type_;
  union {
    bool b_;
    std::int64_t i_;
    double f_;
    std::uint32_t id_;
  };
  std::shared_ptr<void> obj_;
};

struct Str {
  std::string text;
  mutable std::size_t cached_hash = 0;
  mutable bool hashed = false;
};

struct List {
  std::vector<Value> items;
};

struct Tuple {
  std::vector<Value> items;
};

struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash(); }
};

/// Insertion-ordered hash map with Python key semantics.
class Dict {
 public:
  const Value* find(const Value& key) const;
  Value* find(const Value& key);
  void set(const Value& key, Value value);
  bool erase(const Value& key);
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<Value, Value>>& entries() const { return entries_; }
  void clear();

 private:
  static constexpr std::size_t kIndexThreshold = 24;
  std::vector<std::pair<Value, Value>> entries_;
  std::vector<std::size_t> hashes_;
  std::unordered_multimap<std::size_t, std::size_t> index_;  // hash -> slot, only for large dicts
  std::size_t locate(const Value& key, std::size_t h) const;
  void rebuild_index();
};

/// Insertion-ordered set.
class Set {
 public:
  bool contains(const Value& v) const;
  bool add(const Value& v);
  bool erase(const Value& v);
  std::size_t size() const { return items_.size(); }
  const std::vector<Value>& items() const { return items_; }

 private:
  Dict dict_;
  std::vector<Value> items_;
};

/// Ordering used by sorted()/min()/max(); throws TypeError for unorderable pairs.
bool less_than(const Value& a, const Value& b);

struct Limits {
  std::uint64_t max_steps = 5'000'000;
  std::chrono::milliseconds max_time{2000};
  std::size_t max_depth = 150;
  std::size_t max_allocations = 10'000'000;
};

struct ModuleAst;

/// A compiled program. Immutable and safe to share across threads.
class Program {
 public:
  const std::string& source() const;
  bool defines(std::string_view function_name) const;
  const ModuleAst& ast() const { return *ast_; }

 private:
  friend std::shared_ptr<const Program> compile(std::string_view source);
  std::shared_ptr<const ModuleAst> ast_;
};

/// Throws ScriptError(Syntax) with the offending line.
std::shared_ptr<const Program> compile(std::string_view source);

/// Runs programs. Every call starts from fresh globals, so no state persists
/// between calls. Not thread-safe; use one Interpreter per thread.
class Interpreter {
 public:
  explicit Interpreter(Limits limits = {});
  ~Interpreter();
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  /// Executes the module body, then calls `function(args...)`.
  Value call(const Program& program, std::string_view function, std::vector<Value> args);

  const Limits& limits() const { return limits_; }
  /// Steps consumed by the last call.
  std::uint64_t last_steps() const;

 private:
  struct Impl;
  Limits limits_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace groundwork::script
