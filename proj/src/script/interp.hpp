#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ast.hpp"
#include "runtime.hpp"

namespace groundwork::script {

struct Frame {
  std::vector<Value> slots;
  std::shared_ptr<Frame> parent;
};

struct Impl;

using KwArgs = std::vector<std::pair<std::string, Value>>;
using BuiltinFn = Value (*)(Impl&, std::vector<Value>&, KwArgs&);
using MethodFn = Value (*)(Impl&, const Value& self, std::vector<Value>&, KwArgs&);

struct Function : NamedObject {
  std::shared_ptr<FunctionDef> def;
  std::shared_ptr<Frame> env;
  std::vector<Value> defaults;  // aligned to the trailing parameters
};

struct Builtin : NamedObject {
  BuiltinFn fn = nullptr;
  bool exception_class = false;
  std::string base;  // parent exception class
  int type_tag = -1;  // Value::Type for isinstance, or -1
};

struct BoundMethod : NamedObject {
  Value self;
  MethodFn fn = nullptr;
};

struct Module : NamedObject {
  std::map<std::string, Value, std::less<>> members;
  bool permissive = false;  // unknown members resolve to None (typing)
};

template <class T>
const T& object_as(const Value& v) {
  return static_cast<const T&>(*static_cast<const NamedObject*>(v.object().get()));
}

template <class T>
Value make_object(Value::Type type, std::shared_ptr<T> obj) {
  std::shared_ptr<NamedObject> base = std::move(obj);
  return Value::tagged(type, 0, std::static_pointer_cast<void>(base));
}

struct Impl {
  explicit Impl(Limits l) : limits(l) {}

  Limits limits;
  std::uint64_t steps = 0;
  std::chrono::steady_clock::time_point start;
  std::unordered_map<std::string, Value> globals;
  std::vector<std::shared_ptr<Frame>> captured;
  std::size_t depth = 0;
  std::vector<Value> handling;  // exceptions currently being handled, for bare raise
  Value return_value;
  int line = 0;

  void tick() {
    if (++steps > limits.max_steps)
      throw ScriptError(ErrorKind::StepLimit, "StepLimitExceeded",
                        "step budget of " + std::to_string(limits.max_steps) + " exhausted", line);
    if ((steps & 4095) == 0 && std::chrono::steady_clock::now() - start > limits.max_time)
      throw ScriptError(ErrorKind::Timeout, "Timeout",
                        "wall-clock cap of " + std::to_string(limits.max_time.count()) + " ms exceeded", line);
  }

  Value call_value(const Value& f, std::vector<Value> args, KwArgs kw = {});
  Value call_function(const Function& fn, std::vector<Value>& args, KwArgs& kw);
};

// builtins.cpp
const std::unordered_map<std::string, Value>& builtin_table();
MethodFn find_method(Value::Type type, std::string_view name);
Value import_module(const std::string& name);
std::vector<Value> iterate(Impl& impl, const Value& v);
Value make_exception(const std::string& type, const std::string& message);
bool exception_matches(const std::string& thrown, const std::string& handler);
bool is_exception_class(const std::string& name);
Value binary_op(Impl& impl, BinOpKind op, const Value& a, const Value& b);
bool contains(const Value& container, const Value& item);
Value subscript(const Value& obj, const Value& index);
Value slice(const Value& obj, const Value& lower, const Value& upper, const Value& step);
void store_subscript(const Value& obj, const Value& index, Value value);
void store_slice(Impl& impl, const Value& obj, const Value& lower, const Value& upper, const Value& step, const Value& value);
void delete_subscript(const Value& obj, const Value& index);
void delete_slice(const Value& obj, const Value& lower, const Value& upper, const Value& step);
std::string format_value(const Value& v, const std::string& spec);

}  // namespace groundwork::script
