#include <charconv>
#include <cmath>
#include <functional>

#include "runtime.hpp"

namespace groundwork::script {

ScriptError::ScriptError(ErrorKind kind, std::string py_type, const std::string& message, int line)
    : std::runtime_error(py_type + ": " + message + (line > 0 ? " (line " + std::to_string(line) + ")" : "")),
      kind_(kind),
      py_type_(std::move(py_type)),
      message_(message),
      line_(line) {}

AllocBudget& alloc_budget() {
  thread_local AllocBudget budget;
  return budget;
}

void charge(std::size_t units) {
  AllocBudget& b = alloc_budget();
  b.used += units;
  if (b.used > b.limit)
    throw ScriptError(ErrorKind::Memory, "MemoryError", "allocation cap of " + std::to_string(b.limit) + " exceeded");
}

void raise(const std::string& py_type, const std::string& message) {
  throw ScriptError(ErrorKind::Runtime, py_type, message);
}

Value Value::undefined() {
  Value v;
  v.type_ = Type::Undefined;
  return v;
}

Value Value::boolean(bool b) {
  Value v;
  v.type_ = Type::Bool;
  v.i_ = 0;
  v.b_ = b;
  return v;
}

Value Value::integer(std::int64_t i) {
  Value v;
  v.type_ = Type::Int;
  v.i_ = i;
  return v;
}

Value Value::real(double f) {
  Value v;
  v.type_ = Type::Float;
  v.f_ = f;
  return v;
}

Value Value::str(std::string s) {
  charge(1 + s.size() / 64);
  Value v;
  v.type_ = Type::Str;
  auto p = std::make_shared<Str>();
  p->text = std::move(s);
  v.obj_ = std::move(p);
  return v;
}

Value Value::list(std::vector<Value> items) {
  charge(1 + items.size());
  Value v;
  v.type_ = Type::List;
  auto p = std::make_shared<List>();
  p->items = std::move(items);
  v.obj_ = std::move(p);
  return v;
}

Value Value::tuple(std::vector<Value> items) {
  charge(1 + items.size());
  Value v;
  v.type_ = Type::Tuple;
  auto p = std::make_shared<Tuple>();
  p->items = std::move(items);
  v.obj_ = std::move(p);
  return v;
}

Value Value::dict() {
  charge(1);
  Value v;
  v.type_ = Type::Dict;
  v.obj_ = std::make_shared<Dict>();
  return v;
}

Value Value::set() {
  charge(1);
  Value v;
  v.type_ = Type::Set;
  v.obj_ = std::make_shared<Set>();
  return v;
}

Value Value::tagged(Type type, std::uint32_t id, std::shared_ptr<void> obj) {
  Value v;
  v.type_ = type;
  v.i_ = 0;
  v.id_ = id;
  v.obj_ = std::move(obj);
  return v;
}

double Value::as_float() const {
  switch (type_) {
    case Type::Float: return f_;
    case Type::Int: return static_cast<double>(i_);
    case Type::Bool: return b_ ? 1.0 : 0.0;
    default: raise("TypeError", "must be real number, not " + type_name());
  }
}

const std::string& Value::as_str() const { return static_cast<const Str*>(obj_.get())->text; }
List& Value::as_list() const { return *static_cast<List*>(obj_.get()); }
const Tuple& Value::as_tuple() const { return *static_cast<const Tuple*>(obj_.get()); }
Dict& Value::as_dict() const { return *static_cast<Dict*>(obj_.get()); }
Set& Value::as_set() const { return *static_cast<Set*>(obj_.get()); }

const std::vector<Value>& Value::sequence() const {
  if (type_ == Type::List) return as_list().items;
  return as_tuple().items;
}

bool Value::truthy() const {
  switch (type_) {
    case Type::Undefined:
    case Type::None: return false;
    case Type::Bool: return b_;
    case Type::Int: return i_ != 0;
    case Type::Float: return f_ != 0.0;
    case Type::Str: return !as_str().empty();
    case Type::List: return !as_list().items.empty();
    case Type::Tuple: return !as_tuple().items.empty();
    case Type::Dict: return as_dict().size() > 0;
    case Type::Set: return as_set().size() > 0;
    default: return true;
  }
}

namespace {

std::size_t mix(std::size_t seed, std::size_t h) { return seed ^ (h + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)); }

std::size_t int_hash(std::int64_t i) { return std::hash<std::int64_t>{}(i); }

}  // namespace

std::size_t Value::hash() const {
  switch (type_) {
    case Type::None: return 0x5bd1e995;
    case Type::Bool: return int_hash(b_ ? 1 : 0);
    case Type::Int: return int_hash(i_);
    case Type::Float: {
      double ip;
      if (std::modf(f_, &ip) == 0.0 && std::fabs(f_) < 9.2e18) return int_hash(static_cast<std::int64_t>(f_));
      return std::hash<double>{}(f_);
    }
    case Type::Str: {
      const auto* s = static_cast<const Str*>(obj_.get());
      if (!s->hashed) {
        s->cached_hash = std::hash<std::string>{}(s->text);
        s->hashed = true;
      }
      return s->cached_hash;
    }
    case Type::Tuple: {
      std::size_t h = 0x345678;
      for (const auto& item : as_tuple().items) h = mix(h, item.hash());
      return h;
    }
    case Type::Function:
    case Type::Builtin:
    case Type::Method:
    case Type::Module:
    case Type::Exception:
      return mix(std::hash<const void*>{}(obj_.get()), id_);
    default:
      raise("TypeError", "unhashable type: '" + type_name() + "'");
  }
}

bool Value::identical(const Value& other) const {
  if (type_ != other.type_) return false;
  switch (type_) {
    case Type::Undefined:
    case Type::None: return true;
    case Type::Bool: return b_ == other.b_;
    case Type::Int: return i_ == other.i_;
    case Type::Float: return f_ == other.f_;
    default: return obj_.get() == other.obj_.get() && id_ == other.id_;
  }
}

bool operator==(const Value& a, const Value& b) {
  using T = Value::Type;
  if (a.is_number() && b.is_number()) {
    if (a.type_ == T::Float || b.type_ == T::Float) return a.as_float() == b.as_float();
    return a.as_int() == b.as_int();
  }
  if (a.type_ != b.type_) return false;
  switch (a.type_) {
    case T::Undefined:
    case T::None: return true;
    case T::Str: return a.obj_ == b.obj_ || a.as_str() == b.as_str();
    case T::List:
    case T::Tuple: {
      if (a.obj_ == b.obj_) return true;
      const auto& x = a.sequence();
      const auto& y = b.sequence();
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != y[i]) return false;
      return true;
    }
    case T::Dict: {
      const Dict& x = a.as_dict();
      const Dict& y = b.as_dict();
      if (x.size() != y.size()) return false;
      for (const auto& [k, v] : x.entries()) {
        const Value* other = y.find(k);
        if (!other || *other != v) return false;
      }
      return true;
    }
    case T::Set: {
      const Set& x = a.as_set();
      const Set& y = b.as_set();
      if (x.size() != y.size()) return false;
      for (const auto& v : x.items())
        if (!y.contains(v)) return false;
      return true;
    }
    default:
      return a.identical(b);
  }
}

std::string Value::type_name() const {
  switch (type_) {
    case Type::Undefined: return "undefined";
    case Type::None: return "NoneType";
    case Type::Bool: return "bool";
    case Type::Int: return "int";
    case Type::Float: return "float";
    case Type::Str: return "str";
    case Type::List: return "list";
    case Type::Tuple: return "tuple";
    case Type::Dict: return "dict";
    case Type::Set: return "set";
    case Type::Function: return "function";
    case Type::Builtin: return "builtin_function_or_method";
    case Type::Method: return "method";
    case Type::Module: return "module";
    case Type::Exception: return static_cast<const NamedObject*>(obj_.get())->name;
  }
  return "object";
}

namespace {

std::string float_repr(double f) {
  if (std::isnan(f)) return "nan";
  if (std::isinf(f)) return f > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, f);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string str_repr(const std::string& s) {
  const bool use_double = s.find('\'') != std::string::npos && s.find('"') == std::string::npos;
  const char q = use_double ? '"' : '\'';
  std::string out(1, q);
  for (unsigned char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c == static_cast<unsigned char>(q)) {
          out += '\\';
          out += static_cast<char>(c);
        } else if (c < 0x20 || c == 0x7f) {
          static const char* hex = "0123456789abcdef";
          out += "\\x";
          out += hex[c >> 4];
          out += hex[c & 15];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += q;
  return out;
}

void repr_into(const Value& v, std::string& out, int depth) {
  using T = Value::Type;
  if (depth > 64) {
    out += "...";
    return;
  }
  switch (v.type()) {
    case T::Undefined: out += "<undefined>"; return;
    case T::None: out += "None"; return;
    case T::Bool: out += v.as_bool() ? "True" : "False"; return;
    case T::Int: out += std::to_string(v.as_int()); return;
    case T::Float: out += float_repr(v.as_float()); return;
    case T::Str: out += str_repr(v.as_str()); return;
    case T::List:
    case T::Tuple: {
      const bool list = v.type() == T::List;
      const auto& items = v.sequence();
      out += list ? '[' : '(';
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        repr_into(items[i], out, depth + 1);
      }
      if (!list && items.size() == 1) out += ',';
      out += list ? ']' : ')';
      return;
    }
    case T::Dict: {
      out += '{';
      bool first = true;
      for (const auto& [k, val] : v.as_dict().entries()) {
        if (!first) out += ", ";
        first = false;
        repr_into(k, out, depth + 1);
        out += ": ";
        repr_into(val, out, depth + 1);
      }
      out += '}';
      return;
    }
    case T::Set: {
      const auto& items = v.as_set().items();
      if (items.empty()) {
        out += "set()";
        return;
      }
      out += '{';
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        repr_into(items[i], out, depth + 1);
      }
      out += '}';
      return;
    }
    case T::Function:
      out += "<function " + static_cast<const NamedObject*>(v.object().get())->name + ">";
      return;
    case T::Builtin:
      out += "<built-in function " + static_cast<const NamedObject*>(v.object().get())->name + ">";
      return;
    case T::Method:
      out += "<bound method " + static_cast<const NamedObject*>(v.object().get())->name + ">";
      return;
    case T::Module:
      out += "<module '" + static_cast<const NamedObject*>(v.object().get())->name + "'>";
      return;
    case T::Exception: {
      const auto* e = static_cast<const ExceptionObject*>(v.object().get());
      out += e->name + "(" + (e->message.empty() ? "" : str_repr(e->message)) + ")";
      return;
    }
  }
}

}  // namespace

std::string Value::repr() const {
  std::string out;
  repr_into(*this, out, 0);
  return out;
}

std::string Value::to_string() const {
  if (type_ == Type::Str) return as_str();
  if (type_ == Type::Exception) return static_cast<const ExceptionObject*>(obj_.get())->message;
  return repr();
}

// ---- Dict ----

std::size_t Dict::locate(const Value& key, std::size_t h) const {
  if (!index_.empty() || entries_.size() >= kIndexThreshold) {
    auto [lo, hi] = index_.equal_range(h);
    for (auto it = lo; it != hi; ++it)
      if (entries_[it->second].first == key) return it->second;
    return entries_.size();
  }
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (hashes_[i] == h && entries_[i].first == key) return i;
  return entries_.size();
}

const Value* Dict::find(const Value& key) const {
  std::size_t i = locate(key, key.hash());
  return i < entries_.size() ? &entries_[i].second : nullptr;
}

Value* Dict::find(const Value& key) {
  std::size_t i = locate(key, key.hash());
  return i < entries_.size() ? &entries_[i].second : nullptr;
}

void Dict::set(const Value& key, Value value) {
  const std::size_t h = key.hash();
  std::size_t i = locate(key, h);
  if (i < entries_.size()) {
    entries_[i].second = std::move(value);
    return;
  }
  charge(1);
  entries_.emplace_back(key, std::move(value));
  hashes_.push_back(h);
  if (entries_.size() == kIndexThreshold)
    rebuild_index();
  else if (entries_.size() > kIndexThreshold)
    index_.emplace(h, entries_.size() - 1);
}

bool Dict::erase(const Value& key) {
  std::size_t i = locate(key, key.hash());
  if (i == entries_.size()) return false;
  entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(i));
  hashes_.erase(hashes_.begin() + static_cast<std::ptrdiff_t>(i));
  rebuild_index();
  return true;
}

void Dict::clear() {
  entries_.clear();
  hashes_.clear();
  index_.clear();
}

void Dict::rebuild_index() {
  index_.clear();
  if (entries_.size() < kIndexThreshold) return;
  for (std::size_t i = 0; i < entries_.size(); ++i) index_.emplace(hashes_[i], i);
}

// ---- Set ----

bool Set::contains(const Value& v) const { return dict_.find(v) != nullptr; }

bool Set::add(const Value& v) {
  if (dict_.find(v)) return false;
  dict_.set(v, Value());
  items_.push_back(v);
  return true;
}

bool Set::erase(const Value& v) {
  if (!dict_.erase(v)) return false;
  for (auto it = items_.begin(); it != items_.end(); ++it) {
    if (*it == v) {
      items_.erase(it);
      break;
    }
  }
  return true;
}

// ---- ordering ----

bool less_than(const Value& a, const Value& b) {
  using T = Value::Type;
  if (a.is_number() && b.is_number()) {
    if (a.type() == T::Float || b.type() == T::Float) return a.as_float() < b.as_float();
    return a.as_int() < b.as_int();
  }
  if (a.type() == T::Str && b.type() == T::Str) return a.as_str() < b.as_str();
  if ((a.type() == T::List && b.type() == T::List) || (a.type() == T::Tuple && b.type() == T::Tuple)) {
    const auto& x = a.sequence();
    const auto& y = b.sequence();
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
      if (x[i] == y[i]) continue;
      return less_than(x[i], y[i]);
    }
    return x.size() < y.size();
  }
  raise("TypeError", "'<' not supported between instances of '" + a.type_name() + "' and '" + b.type_name() + "'");
}

}  // namespace groundwork::script
