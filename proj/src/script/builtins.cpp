#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <cctype>
#include <cerrno>
#include <numeric>
#include <optional>
#include <unordered_map>

#include "interp.hpp"

namespace groundwork::script {

namespace {

using T = Value::Type;

// ---- argument helpers ----

void arity(const std::vector<Value>& args, std::size_t lo, std::size_t hi, const char* name) {
  if (args.size() < lo || args.size() > hi) {
    std::string expect = lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi);
    raise("TypeError", std::string(name) + "() takes " + expect + " arguments (" + std::to_string(args.size()) +
                           " given)");
  }
}

void no_kwargs(const KwArgs& kw, const char* name) {
  if (!kw.empty()) raise("TypeError", std::string(name) + "() takes no keyword arguments");
}

std::optional<Value> take_kw(KwArgs& kw, std::string_view key) {
  for (auto it = kw.begin(); it != kw.end(); ++it) {
    if (it->first == key) {
      Value v = std::move(it->second);
      kw.erase(it);
      return v;
    }
  }
  return std::nullopt;
}

void check_kw_consumed(const KwArgs& kw, const char* name) {
  if (!kw.empty())
    raise("TypeError", std::string(name) + "() got an unexpected keyword argument '" + kw.front().first + "'");
}

bool is_int(const Value& v) { return v.type() == T::Int || v.type() == T::Bool; }

std::int64_t to_index(const Value& v, const char* what) {
  if (!is_int(v)) raise("TypeError", std::string(what) + " indices must be integers or slices, not " + v.type_name());
  return v.as_int();
}

std::int64_t int_arg(const Value& v, const char* fn) {
  if (!is_int(v)) raise("TypeError", std::string(fn) + "() argument must be int, not '" + v.type_name() + "'");
  return v.as_int();
}

const std::string& str_arg(const Value& v, const char* fn) {
  if (v.type() != T::Str) raise("TypeError", std::string(fn) + "() argument must be str, not " + v.type_name());
  return v.as_str();
}

Value checked(std::int64_t a, std::int64_t b, bool (*op)(std::int64_t, std::int64_t, std::int64_t*)) {
  std::int64_t r;
  if (op(a, b, &r)) raise("OverflowError", "integer overflow");
  return Value::integer(r);
}

bool add_ovf(std::int64_t a, std::int64_t b, std::int64_t* r) { return __builtin_add_overflow(a, b, r); }
bool sub_ovf(std::int64_t a, std::int64_t b, std::int64_t* r) { return __builtin_sub_overflow(a, b, r); }
bool mul_ovf(std::int64_t a, std::int64_t b, std::int64_t* r) { return __builtin_mul_overflow(a, b, r); }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  if (b == 0) raise("ZeroDivisionError", "integer division or modulo by zero");
  if (a == INT64_MIN && b == -1) raise("OverflowError", "integer overflow");
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  if (b == 0) raise("ZeroDivisionError", "integer division or modulo by zero");
  if (b == -1) return 0;
  std::int64_t m = a % b;
  if (m != 0 && ((m < 0) != (b < 0))) m += b;
  return m;
}

double float_mod(double a, double b) {
  if (b == 0.0) raise("ZeroDivisionError", "float modulo");
  double m = std::fmod(a, b);
  if (m != 0.0 && ((m < 0) != (b < 0))) m += b;
  return m;
}

std::vector<Value> repeat(const std::vector<Value>& items, const Value& count) {
  std::int64_t n = count.as_int();
  if (n <= 0 || items.empty()) return {};
  charge(static_cast<std::size_t>(n) * items.size());
  std::vector<Value> out;
  out.reserve(items.size() * static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out.insert(out.end(), items.begin(), items.end());
  return out;
}

std::string repeat_str(const std::string& s, std::int64_t n) {
  if (n <= 0 || s.empty()) return {};
  charge(static_cast<std::size_t>(n) * s.size() / 64);
  std::string out;
  out.reserve(s.size() * static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out += s;
  return out;
}

std::string percent_format(const std::string& fmt, const Value& args);

[[noreturn]] void unsupported(const char* op, const Value& a, const Value& b) {
  raise("TypeError", std::string("unsupported operand type(s) for ") + op + ": '" + a.type_name() + "' and '" +
                         b.type_name() + "'");
}

Value set_op(BinOpKind op, const Value& a, const Value& b) {
  Value out = Value::set();
  Set& r = out.as_set();
  const Set& x = a.as_set();
  const Set& y = b.as_set();
  switch (op) {
    case BinOpKind::BitOr:
      for (const auto& v : x.items()) r.add(v);
      for (const auto& v : y.items()) r.add(v);
      break;
    case BinOpKind::BitAnd:
      for (const auto& v : x.items())
        if (y.contains(v)) r.add(v);
      break;
    case BinOpKind::Sub:
      for (const auto& v : x.items())
        if (!y.contains(v)) r.add(v);
      break;
    case BinOpKind::BitXor:
      for (const auto& v : x.items())
        if (!y.contains(v)) r.add(v);
      for (const auto& v : y.items())
        if (!x.contains(v)) r.add(v);
      break;
    default:
      unsupported("set operation", a, b);
  }
  return out;
}

const char* op_symbol(BinOpKind op) {
  switch (op) {
    case BinOpKind::Add: return "+";
    case BinOpKind::Sub: return "-";
    case BinOpKind::Mul: return "*";
    case BinOpKind::Div: return "/";
    case BinOpKind::FloorDiv: return "//";
    case BinOpKind::Mod: return "%";
    case BinOpKind::Pow: return "**";
    case BinOpKind::BitAnd: return "&";
    case BinOpKind::BitOr: return "|";
    case BinOpKind::BitXor: return "^";
    case BinOpKind::LShift: return "<<";
    case BinOpKind::RShift: return ">>";
  }
  return "?";
}

Value int_pow(std::int64_t base, std::int64_t exp) {
  if (exp < 0) {
    if (base == 0) raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
    return Value::real(std::pow(static_cast<double>(base), static_cast<double>(exp)));
  }
  std::int64_t result = 1;
  while (exp > 0) {
    if (exp & 1)
      if (__builtin_mul_overflow(result, base, &result)) raise("OverflowError", "integer overflow");
    exp >>= 1;
    if (exp > 0 && __builtin_mul_overflow(base, base, &base)) raise("OverflowError", "integer overflow");
  }
  return Value::integer(result);
}

}  // namespace

Value binary_op(Impl& impl, BinOpKind op, const Value& a, const Value& b) {
  (void)impl;
  const bool ints = is_int(a) && is_int(b);
  const bool nums = a.is_number() && b.is_number();
  switch (op) {
    case BinOpKind::Add:
      if (ints) return checked(a.as_int(), b.as_int(), add_ovf);
      if (nums) return Value::real(a.as_float() + b.as_float());
      if (a.type() == T::Str && b.type() == T::Str) return Value::str(a.as_str() + b.as_str());
      if (a.type() == T::List && b.type() == T::List) {
        std::vector<Value> out = a.as_list().items;
        out.insert(out.end(), b.as_list().items.begin(), b.as_list().items.end());
        return Value::list(std::move(out));
      }
      if (a.type() == T::Tuple && b.type() == T::Tuple) {
        std::vector<Value> out = a.as_tuple().items;
        out.insert(out.end(), b.as_tuple().items.begin(), b.as_tuple().items.end());
        return Value::tuple(std::move(out));
      }
      if (a.type() == T::Str || b.type() == T::Str)
        raise("TypeError", "can only concatenate str (not \"" + (a.type() == T::Str ? b : a).type_name() + "\") to str");
      if (a.type() == T::List || b.type() == T::List)
        raise("TypeError", "can only concatenate list (not \"" + (a.type() == T::List ? b : a).type_name() +
                               "\") to list");
      break;
    case BinOpKind::Sub:
      if (ints) return checked(a.as_int(), b.as_int(), sub_ovf);
      if (nums) return Value::real(a.as_float() - b.as_float());
      if (a.type() == T::Set && b.type() == T::Set) return set_op(op, a, b);
      break;
    case BinOpKind::Mul:
      if (ints) return checked(a.as_int(), b.as_int(), mul_ovf);
      if (nums) return Value::real(a.as_float() * b.as_float());
      if (a.type() == T::Str && is_int(b)) return Value::str(repeat_str(a.as_str(), b.as_int()));
      if (is_int(a) && b.type() == T::Str) return Value::str(repeat_str(b.as_str(), a.as_int()));
      if (a.type() == T::List && is_int(b)) return Value::list(repeat(a.as_list().items, b));
      if (is_int(a) && b.type() == T::List) return Value::list(repeat(b.as_list().items, a));
      if (a.type() == T::Tuple && is_int(b)) return Value::tuple(repeat(a.as_tuple().items, b));
      if (is_int(a) && b.type() == T::Tuple) return Value::tuple(repeat(b.as_tuple().items, a));
      break;
    case BinOpKind::Div:
      if (nums) {
        if (b.as_float() == 0.0) raise("ZeroDivisionError", "division by zero");
        return Value::real(a.as_float() / b.as_float());
      }
      break;
    case BinOpKind::FloorDiv:
      if (ints) return Value::integer(floor_div(a.as_int(), b.as_int()));
      if (nums) {
        if (b.as_float() == 0.0) raise("ZeroDivisionError", "float floor division by zero");
        return Value::real(std::floor(a.as_float() / b.as_float()));
      }
      break;
    case BinOpKind::Mod:
      if (ints) return Value::integer(floor_mod(a.as_int(), b.as_int()));
      if (nums) return Value::real(float_mod(a.as_float(), b.as_float()));
      if (a.type() == T::Str) return Value::str(percent_format(a.as_str(), b));
      break;
    case BinOpKind::Pow:
      if (ints) return int_pow(a.as_int(), b.as_int());
      if (nums) {
        if (a.as_float() == 0.0 && b.as_float() < 0)
          raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
        return Value::real(std::pow(a.as_float(), b.as_float()));
      }
      break;
    case BinOpKind::BitAnd:
    case BinOpKind::BitOr:
    case BinOpKind::BitXor:
      if (a.type() == T::Bool && b.type() == T::Bool) {
        bool x = a.as_bool(), y = b.as_bool();
        return Value::boolean(op == BinOpKind::BitAnd ? (x && y) : op == BinOpKind::BitOr ? (x || y) : (x != y));
      }
      if (ints) {
        std::int64_t x = a.as_int(), y = b.as_int();
        return Value::integer(op == BinOpKind::BitAnd ? (x & y) : op == BinOpKind::BitOr ? (x | y) : (x ^ y));
      }
      if (a.type() == T::Set && b.type() == T::Set) return set_op(op, a, b);
      if (op == BinOpKind::BitOr && a.type() == T::Dict && b.type() == T::Dict) {
        Value out = Value::dict();
        for (const auto& [k, v] : a.as_dict().entries()) out.as_dict().set(k, v);
        for (const auto& [k, v] : b.as_dict().entries()) out.as_dict().set(k, v);
        return out;
      }
      break;
    case BinOpKind::LShift:
    case BinOpKind::RShift:
      if (ints) {
        std::int64_t x = a.as_int(), y = b.as_int();
        if (y < 0) raise("ValueError", "negative shift count");
        if (op == BinOpKind::RShift) return Value::integer(y >= 64 ? (x < 0 ? -1 : 0) : (x >> y));
        if (x == 0) return Value::integer(0);
        if (y >= 63 || (x > 0 ? x > (INT64_MAX >> y) : x < (INT64_MIN >> y))) raise("OverflowError", "integer overflow");
        return Value::integer(x * (std::int64_t{1} << y));
      }
      break;
  }
  unsupported(op_symbol(op), a, b);
}

bool contains(const Value& container, const Value& item) {
  switch (container.type()) {
    case T::List:
    case T::Tuple:
      for (const auto& v : container.sequence())
        if (v == item) return true;
      return false;
    case T::Dict:
      return container.as_dict().find(item) != nullptr;
    case T::Set:
      return container.as_set().contains(item);
    case T::Str:
      if (item.type() != T::Str)
        raise("TypeError", "'in <string>' requires string as left operand, not " + item.type_name());
      return container.as_str().find(item.as_str()) != std::string::npos;
    default:
      raise("TypeError", "argument of type '" + container.type_name() + "' is not iterable");
  }
}

namespace {

std::size_t normalize_index(std::int64_t i, std::size_t size, const char* what) {
  const auto n = static_cast<std::int64_t>(size);
  if (i < 0) i += n;
  if (i < 0 || i >= n) raise("IndexError", std::string(what) + " index out of range");
  return static_cast<std::size_t>(i);
}

struct SliceIndices {
  std::int64_t start, stop, step, length;
};

SliceIndices slice_indices(const Value& lower, const Value& upper, const Value& step_v, std::size_t size) {
  const auto n = static_cast<std::int64_t>(size);
  std::int64_t step = 1;
  if (!step_v.is_none()) {
    step = to_index(step_v, "slice");
    if (step == 0) raise("ValueError", "slice step cannot be zero");
  }
  auto clamp = [&](const Value& v, std::int64_t dflt) {
    if (v.is_none()) return dflt;
    std::int64_t i = to_index(v, "slice");
    if (i < 0) {
      i += n;
      if (i < 0) i = step < 0 ? -1 : 0;
    } else if (i >= n) {
      i = step < 0 ? n - 1 : n;
    }
    return i;
  };
  std::int64_t start = clamp(lower, step < 0 ? n - 1 : 0);
  std::int64_t stop = clamp(upper, step < 0 ? -1 : n);
  std::int64_t length = 0;
  if (step > 0 && start < stop) length = (stop - start - 1) / step + 1;
  if (step < 0 && stop < start) length = (start - stop - 1) / (-step) + 1;
  return {start, stop, step, length};
}

}  // namespace

Value subscript(const Value& obj, const Value& index) {
  switch (obj.type()) {
    case T::List: {
      const auto& items = obj.as_list().items;
      return items[normalize_index(to_index(index, "list"), items.size(), "list")];
    }
    case T::Tuple: {
      const auto& items = obj.as_tuple().items;
      return items[normalize_index(to_index(index, "tuple"), items.size(), "tuple")];
    }
    case T::Str: {
      const auto& s = obj.as_str();
      return Value::str(std::string(1, s[normalize_index(to_index(index, "string"), s.size(), "string")]));
    }
    case T::Dict: {
      const Value* v = obj.as_dict().find(index);
      if (!v) raise("KeyError", index.repr());
      return *v;
    }
    default:
      raise("TypeError", "'" + obj.type_name() + "' object is not subscriptable");
  }
}

Value slice(const Value& obj, const Value& lower, const Value& upper, const Value& step) {
  if (obj.type() == T::Str) {
    const auto& s = obj.as_str();
    auto si = slice_indices(lower, upper, step, s.size());
    std::string out;
    for (std::int64_t k = 0, i = si.start; k < si.length; ++k, i += si.step) out += s[static_cast<std::size_t>(i)];
    return Value::str(std::move(out));
  }
  if (obj.type() != T::List && obj.type() != T::Tuple)
    raise("TypeError", "'" + obj.type_name() + "' object is not subscriptable");
  const auto& items = obj.sequence();
  auto si = slice_indices(lower, upper, step, items.size());
  std::vector<Value> out;
  out.reserve(static_cast<std::size_t>(si.length));
  for (std::int64_t k = 0, i = si.start; k < si.length; ++k, i += si.step)
    out.push_back(items[static_cast<std::size_t>(i)]);
  return obj.type() == T::List ? Value::list(std::move(out)) : Value::tuple(std::move(out));
}

void store_subscript(const Value& obj, const Value& index, Value value) {
  switch (obj.type()) {
    case T::List: {
      auto& items = obj.as_list().items;
      items[normalize_index(to_index(index, "list"), items.size(), "list assignment")] = std::move(value);
      return;
    }
    case T::Dict:
      obj.as_dict().set(index, std::move(value));
      return;
    default:
      raise("TypeError", "'" + obj.type_name() + "' object does not support item assignment");
  }
}

void store_slice(Impl& impl, const Value& obj, const Value& lower, const Value& upper, const Value& step,
                 const Value& value) {
  if (obj.type() != T::List) raise("TypeError", "'" + obj.type_name() + "' object does not support item assignment");
  auto& items = obj.as_list().items;
  std::vector<Value> repl = iterate(impl, value);
  auto si = slice_indices(lower, upper, step, items.size());
  if (si.step == 1) {
    std::int64_t stop = std::max(si.start, si.stop);
    items.erase(items.begin() + si.start, items.begin() + stop);
    items.insert(items.begin() + si.start, repl.begin(), repl.end());
    return;
  }
  if (static_cast<std::int64_t>(repl.size()) != si.length)
    raise("ValueError", "attempt to assign sequence of size " + std::to_string(repl.size()) +
                            " to extended slice of size " + std::to_string(si.length));
  for (std::int64_t k = 0, i = si.start; k < si.length; ++k, i += si.step)
    items[static_cast<std::size_t>(i)] = repl[static_cast<std::size_t>(k)];
}

void delete_subscript(const Value& obj, const Value& index) {
  switch (obj.type()) {
    case T::List: {
      auto& items = obj.as_list().items;
      items.erase(items.begin() +
                  static_cast<std::ptrdiff_t>(normalize_index(to_index(index, "list"), items.size(), "list assignment")));
      return;
    }
    case T::Dict:
      if (!obj.as_dict().erase(index)) raise("KeyError", index.repr());
      return;
    default:
      raise("TypeError", "'" + obj.type_name() + "' object does not support item deletion");
  }
}

void delete_slice(const Value& obj, const Value& lower, const Value& upper, const Value& step) {
  if (obj.type() != T::List) raise("TypeError", "'" + obj.type_name() + "' object does not support item deletion");
  auto& items = obj.as_list().items;
  auto si = slice_indices(lower, upper, step, items.size());
  std::vector<bool> drop(items.size(), false);
  for (std::int64_t k = 0, i = si.start; k < si.length; ++k, i += si.step) drop[static_cast<std::size_t>(i)] = true;
  std::vector<Value> kept;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!drop[i]) kept.push_back(std::move(items[i]));
  items = std::move(kept);
}

std::vector<Value> iterate(Impl& impl, const Value& v) {
  (void)impl;
  switch (v.type()) {
    case T::List:
    case T::Tuple:
      charge(v.sequence().size());
      return v.sequence();
    case T::Str: {
      std::vector<Value> out;
      for (char c : v.as_str()) out.push_back(Value::str(std::string(1, c)));
      return out;
    }
    case T::Dict: {
      charge(v.as_dict().size());
      std::vector<Value> out;
      out.reserve(v.as_dict().size());
      for (const auto& [k, val] : v.as_dict().entries()) out.push_back(k);
      return out;
    }
    case T::Set:
      charge(v.as_set().size());
      return v.as_set().items();
    default:
      raise("TypeError", "'" + v.type_name() + "' object is not iterable");
  }
}

// ---- formatting ----

std::string format_value(const Value& v, const std::string& spec) {
  // [[fill]align][sign][0][width][,][.precision][type]
  std::size_t i = 0;
  char fill = ' ', align = 0, sign = '-', type = 0;
  int width = -1, precision = -1;
  bool comma = false;
  if (spec.size() >= 2 && std::strchr("<>^=", spec[1])) {
    fill = spec[0];
    align = spec[1];
    i = 2;
  } else if (!spec.empty() && std::strchr("<>^=", spec[0])) {
    align = spec[0];
    i = 1;
  }
  if (i < spec.size() && std::strchr("+- ", spec[i])) sign = spec[i++];
  if (i < spec.size() && spec[i] == '0') {
    if (!align) {
      fill = '0';
      align = '=';
    }
    ++i;
  }
  while (i < spec.size() && std::isdigit(static_cast<unsigned char>(spec[i]))) {
    width = (width < 0 ? 0 : width) * 10 + (spec[i] - '0');
    ++i;
  }
  if (i < spec.size() && spec[i] == ',') {
    comma = true;
    ++i;
  }
  if (i < spec.size() && spec[i] == '.') {
    ++i;
    precision = 0;
    while (i < spec.size() && std::isdigit(static_cast<unsigned char>(spec[i]))) precision = precision * 10 + (spec[i++] - '0');
  }
  if (i < spec.size()) type = spec[i++];
  if (i != spec.size()) raise("ValueError", "Invalid format specifier '" + spec + "'");

  std::string body;
  bool numeric = v.is_number();
  if (!type) {
    if (v.type() == T::Float && precision >= 0) type = 'g';
    if (v.type() == T::Str && precision >= 0) body = v.as_str().substr(0, static_cast<std::size_t>(precision));
  }
  char buf[512];
  switch (type) {
    case 0:
      if (body.empty()) body = v.to_string();
      break;
    case 's':
      if (v.type() != T::Str) raise("ValueError", "Unknown format code 's' for object of type '" + v.type_name() + "'");
      body = precision >= 0 ? v.as_str().substr(0, static_cast<std::size_t>(precision)) : v.as_str();
      break;
    case 'd':
      if (!is_int(v)) raise("ValueError", "Unknown format code 'd' for object of type '" + v.type_name() + "'");
      body = std::to_string(v.as_int());
      break;
    case 'x':
    case 'X':
    case 'o':
    case 'b': {
      if (!is_int(v)) raise("ValueError", std::string("Unknown format code '") + type + "' for object of type '" + v.type_name() + "'");
      std::int64_t n = v.as_int();
      bool neg = n < 0;
      std::uint64_t u = neg ? static_cast<std::uint64_t>(-(n + 1)) + 1 : static_cast<std::uint64_t>(n);
      int base = type == 'o' ? 8 : type == 'b' ? 2 : 16;
      const char* digits = type == 'X' ? "0123456789ABCDEF" : "0123456789abcdef";
      std::string d;
      do {
        d += digits[u % static_cast<unsigned>(base)];
        u /= static_cast<unsigned>(base);
      } while (u);
      std::reverse(d.begin(), d.end());
      body = (neg ? "-" : "") + d;
      break;
    }
    case 'f':
    case 'F':
    case 'e':
    case 'E':
    case 'g':
    case 'G':
    case '%': {
      if (!numeric) raise("ValueError", std::string("Unknown format code '") + type + "' for object of type '" + v.type_name() + "'");
      double x = v.as_float();
      int p = precision < 0 ? 6 : precision;
      if (type == '%') {
        std::snprintf(buf, sizeof buf, "%.*f%%", p, x * 100.0);
      } else {
        char f[8] = {'%', '.', '*', type, 0};
        std::snprintf(buf, sizeof buf, f, p, x);
      }
      body = buf;
      break;
    }
    default:
      raise("ValueError", std::string("Unknown format code '") + type + "'");
  }
  if (comma && numeric) {
    std::size_t start = body[0] == '-' ? 1 : 0;
    std::size_t end = body.find_first_of(".eE%", start);
    if (end == std::string::npos) end = body.size();
    for (std::ptrdiff_t k = static_cast<std::ptrdiff_t>(end) - 3; k > static_cast<std::ptrdiff_t>(start); k -= 3)
      body.insert(static_cast<std::size_t>(k), ",");
  }
  if (numeric && sign != '-' && body[0] != '-') body = std::string(1, sign == '+' ? '+' : ' ') + body;
  if (width > 0 && static_cast<int>(body.size()) < width) {
    std::size_t pad = static_cast<std::size_t>(width) - body.size();
    if (!align) align = numeric ? '>' : '<';
    switch (align) {
      case '<': body += std::string(pad, fill); break;
      case '>': body = std::string(pad, fill) + body; break;
      case '^': body = std::string(pad / 2, fill) + body + std::string(pad - pad / 2, fill); break;
      case '=': {
        std::size_t s = (!body.empty() && (body[0] == '-' || body[0] == '+' || body[0] == ' ')) ? 1 : 0;
        body.insert(s, std::string(pad, fill));
        break;
      }
    }
  }
  return body;
}

namespace {

std::string percent_format(const std::string& fmt, const Value& args) {
  std::vector<Value> values;
  if (args.type() == T::Tuple)
    values = args.as_tuple().items;
  else
    values.push_back(args);
  std::size_t next = 0;
  std::string out;
  for (std::size_t i = 0; i < fmt.size(); ++i) {
    if (fmt[i] != '%') {
      out += fmt[i];
      continue;
    }
    if (++i >= fmt.size()) raise("ValueError", "incomplete format");
    if (fmt[i] == '%') {
      out += '%';
      continue;
    }
    std::string spec;
    while (i < fmt.size() && std::strchr("-+ 0123456789.", fmt[i])) spec += fmt[i++];
    if (i >= fmt.size()) raise("ValueError", "incomplete format");
    char conv = fmt[i];
    if (next >= values.size()) raise("TypeError", "not enough arguments for format string");
    const Value& v = values[next++];
    std::string align_spec;
    if (!spec.empty() && spec[0] == '-') {
      align_spec = "<" + spec.substr(1);
    } else {
      align_spec = spec;
    }
    switch (conv) {
      case 's': out += format_value(Value::str(v.to_string()), align_spec.empty() ? "" : align_spec); break;
      case 'r': out += format_value(Value::str(v.repr()), align_spec); break;
      case 'd':
      case 'i':
        if (!v.is_number()) raise("TypeError", "%d format: a number is required, not " + v.type_name());
        out += format_value(Value::integer(v.type() == T::Float ? static_cast<std::int64_t>(v.as_float()) : v.as_int()),
                            align_spec + "d");
        break;
      case 'f':
      case 'e':
      case 'g':
      case 'x':
        out += format_value(v, align_spec + conv);
        break;
      default:
        raise("ValueError", std::string("unsupported format character '") + conv + "'");
    }
  }
  if (next < values.size()) raise("TypeError", "not all arguments converted during string formatting");
  return out;
}

std::string str_format(const std::string& fmt, const std::vector<Value>& args, const KwArgs& kw) {
  std::string out;
  std::size_t auto_index = 0;
  for (std::size_t i = 0; i < fmt.size(); ++i) {
    char c = fmt[i];
    if (c == '{' && i + 1 < fmt.size() && fmt[i + 1] == '{') {
      out += '{';
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < fmt.size() && fmt[i + 1] == '}') {
      out += '}';
      ++i;
      continue;
    }
    if (c != '{') {
      out += c;
      continue;
    }
    std::size_t close = fmt.find('}', i);
    if (close == std::string::npos) raise("ValueError", "Single '{' encountered in format string");
    std::string field = fmt.substr(i + 1, close - i - 1);
    std::string spec;
    auto colon = field.find(':');
    if (colon != std::string::npos) {
      spec = field.substr(colon + 1);
      field = field.substr(0, colon);
    }
    char conv = 0;
    auto bang = field.find('!');
    if (bang != std::string::npos) {
      conv = bang + 1 < field.size() ? field[bang + 1] : 0;
      field = field.substr(0, bang);
    }
    Value v;
    if (field.empty()) {
      if (auto_index >= args.size()) raise("IndexError", "Replacement index out of range");
      v = args[auto_index++];
    } else if (std::all_of(field.begin(), field.end(), [](char d) { return std::isdigit(static_cast<unsigned char>(d)); })) {
      std::size_t k = std::stoul(field);
      if (k >= args.size()) raise("IndexError", "Replacement index out of range");
      v = args[k];
    } else {
      bool found = false;
      for (const auto& [name, val] : kw)
        if (name == field) {
          v = val;
          found = true;
        }
      if (!found) raise("KeyError", "'" + field + "'");
    }
    if (conv == 'r') v = Value::str(v.repr());
    out += spec.empty() ? v.to_string() : format_value(v, spec);
    i = close;
  }
  return out;
}

// ---- copy ----

Value deep_copy(const Value& v, std::unordered_map<const void*, Value>& memo) {
  switch (v.type()) {
    case T::List:
    case T::Dict:
    case T::Set:
    case T::Tuple: {
      auto it = memo.find(v.object().get());
      if (it != memo.end()) return it->second;
      break;
    }
    default:
      return v;
  }
  switch (v.type()) {
    case T::List: {
      Value out = Value::list();
      memo.emplace(v.object().get(), out);
      auto& items = out.as_list().items;
      const auto& src = v.as_list().items;
      charge(src.size());
      items.reserve(src.size());
      for (const auto& item : src) items.push_back(deep_copy(item, memo));
      return out;
    }
    case T::Tuple: {
      std::vector<Value> items;
      items.reserve(v.as_tuple().items.size());
      for (const auto& item : v.as_tuple().items) items.push_back(deep_copy(item, memo));
      Value out = Value::tuple(std::move(items));
      memo.emplace(v.object().get(), out);
      return out;
    }
    case T::Dict: {
      Value out = Value::dict();
      memo.emplace(v.object().get(), out);
      for (const auto& [k, val] : v.as_dict().entries()) out.as_dict().set(deep_copy(k, memo), deep_copy(val, memo));
      return out;
    }
    default: {
      Value out = Value::set();
      memo.emplace(v.object().get(), out);
      for (const auto& item : v.as_set().items()) out.as_set().add(deep_copy(item, memo));
      return out;
    }
  }
}

Value shallow_copy(const Value& v) {
  switch (v.type()) {
    case T::List: return Value::list(v.as_list().items);
    case T::Dict: {
      Value out = Value::dict();
      for (const auto& [k, val] : v.as_dict().entries()) out.as_dict().set(k, val);
      return out;
    }
    case T::Set: {
      Value out = Value::set();
      for (const auto& item : v.as_set().items()) out.as_set().add(item);
      return out;
    }
    default: return v;
  }
}

// ---- builtin functions ----

Value b_len(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "len");
  arity(a, 1, 1, "len");
  const Value& v = a[0];
  switch (v.type()) {
    case T::Str: return Value::integer(static_cast<std::int64_t>(v.as_str().size()));
    case T::List:
    case T::Tuple: return Value::integer(static_cast<std::int64_t>(v.sequence().size()));
    case T::Dict: return Value::integer(static_cast<std::int64_t>(v.as_dict().size()));
    case T::Set: return Value::integer(static_cast<std::int64_t>(v.as_set().size()));
    default: raise("TypeError", "object of type '" + v.type_name() + "' has no len()");
  }
}

Value b_range(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "range");
  arity(a, 1, 3, "range");
  std::int64_t start = 0, stop, step = 1;
  if (a.size() == 1) {
    stop = int_arg(a[0], "range");
  } else {
    start = int_arg(a[0], "range");
    stop = int_arg(a[1], "range");
    if (a.size() == 3) step = int_arg(a[2], "range");
  }
  if (step == 0) raise("ValueError", "range() arg 3 must not be zero");
  std::int64_t n = 0;
  if (step > 0 && start < stop) n = (stop - start - 1) / step + 1;
  if (step < 0 && stop < start) n = (start - stop - 1) / (-step) + 1;
  charge(static_cast<std::size_t>(n));
  std::vector<Value> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0, v = start; k < n; ++k, v += step) out.push_back(Value::integer(v));
  return Value::list(std::move(out));
}

Value b_list(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "list");
  arity(a, 0, 1, "list");
  return Value::list(a.empty() ? std::vector<Value>{} : iterate(impl, a[0]));
}

Value b_tuple(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "tuple");
  arity(a, 0, 1, "tuple");
  if (!a.empty() && a[0].type() == T::Tuple) return a[0];
  return Value::tuple(a.empty() ? std::vector<Value>{} : iterate(impl, a[0]));
}

Value b_set(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "set");
  arity(a, 0, 1, "set");
  Value out = Value::set();
  if (!a.empty())
    for (const auto& v : iterate(impl, a[0])) out.as_set().add(v);
  return out;
}

void dict_update(Impl& impl, Dict& d, const Value& src) {
  if (src.type() == T::Dict) {
    for (const auto& [k, v] : src.as_dict().entries()) d.set(k, v);
    return;
  }
  for (const auto& pair : iterate(impl, src)) {
    std::vector<Value> kv = iterate(impl, pair);
    if (kv.size() != 2) raise("ValueError", "dictionary update sequence element has length " + std::to_string(kv.size()) + "; 2 is required");
    d.set(kv[0], kv[1]);
  }
}

Value b_dict(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  arity(a, 0, 1, "dict");
  Value out = Value::dict();
  if (!a.empty()) dict_update(impl, out.as_dict(), a[0]);
  for (auto& [k, v] : kw) out.as_dict().set(Value::str(k), v);
  return out;
}

// Applies an optional key function.
std::vector<Value> keys_for(Impl& impl, const std::vector<Value>& items, const std::optional<Value>& key) {
  if (!key || key->is_none()) return items;
  std::vector<Value> keys;
  keys.reserve(items.size());
  for (const auto& item : items) keys.push_back(impl.call_value(*key, {item}));
  return keys;
}

Value b_sorted(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  arity(a, 1, 1, "sorted");
  auto key = take_kw(kw, "key");
  auto rev = take_kw(kw, "reverse");
  check_kw_consumed(kw, "sorted");
  std::vector<Value> items = iterate(impl, a[0]);
  std::vector<Value> keys = keys_for(impl, items, key);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  const bool reverse = rev && rev->truthy();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return reverse ? less_than(keys[y], keys[x]) : less_than(keys[x], keys[y]);
  });
  std::vector<Value> out;
  out.reserve(items.size());
  for (auto i : order) out.push_back(items[i]);
  return Value::list(std::move(out));
}

Value extremum(Impl& impl, std::vector<Value>& a, KwArgs& kw, bool want_max, const char* name) {
  auto key = take_kw(kw, "key");
  auto dflt = take_kw(kw, "default");
  check_kw_consumed(kw, name);
  if (a.empty()) raise("TypeError", std::string(name) + " expected at least 1 argument, got 0");
  std::vector<Value> items = a.size() == 1 ? iterate(impl, a[0]) : a;
  if (items.empty()) {
    if (dflt) return *dflt;
    raise("ValueError", std::string(name) + "() arg is an empty sequence");
  }
  std::vector<Value> keys = keys_for(impl, items, key);
  std::size_t best = 0;
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (want_max ? less_than(keys[best], keys[i]) : less_than(keys[i], keys[best])) best = i;
  }
  return items[best];
}

Value b_min(Impl& impl, std::vector<Value>& a, KwArgs& kw) { return extremum(impl, a, kw, false, "min"); }
Value b_max(Impl& impl, std::vector<Value>& a, KwArgs& kw) { return extremum(impl, a, kw, true, "max"); }

Value b_abs(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "abs");
  arity(a, 1, 1, "abs");
  if (a[0].type() == T::Float) return Value::real(std::fabs(a[0].as_float()));
  if (is_int(a[0])) {
    if (a[0].as_int() == INT64_MIN) raise("OverflowError", "integer overflow");
    return Value::integer(std::llabs(a[0].as_int()));
  }
  raise("TypeError", "bad operand type for abs(): '" + a[0].type_name() + "'");
}

Value b_any(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "any");
  arity(a, 1, 1, "any");
  for (const auto& v : iterate(impl, a[0]))
    if (v.truthy()) return Value::boolean(true);
  return Value::boolean(false);
}

Value b_all(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "all");
  arity(a, 1, 1, "all");
  for (const auto& v : iterate(impl, a[0]))
    if (!v.truthy()) return Value::boolean(false);
  return Value::boolean(true);
}

Value b_enumerate(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  auto start_kw = take_kw(kw, "start");
  check_kw_consumed(kw, "enumerate");
  arity(a, 1, 2, "enumerate");
  std::int64_t start = a.size() == 2 ? int_arg(a[1], "enumerate") : start_kw ? int_arg(*start_kw, "enumerate") : 0;
  std::vector<Value> out;
  for (auto& v : iterate(impl, a[0])) out.push_back(Value::tuple({Value::integer(start++), std::move(v)}));
  return Value::list(std::move(out));
}

Value b_zip(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  take_kw(kw, "strict");
  check_kw_consumed(kw, "zip");
  std::vector<std::vector<Value>> seqs;
  std::size_t n = a.empty() ? 0 : SIZE_MAX;
  for (const auto& v : a) {
    seqs.push_back(iterate(impl, v));
    n = std::min(n, seqs.back().size());
  }
  std::vector<Value> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Value> row;
    for (auto& s : seqs) row.push_back(s[i]);
    out.push_back(Value::tuple(std::move(row)));
  }
  return Value::list(std::move(out));
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\n\r\f\v");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\n\r\f\v");
  return s.substr(b, e - b + 1);
}

Value b_str(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "str");
  arity(a, 0, 1, "str");
  return Value::str(a.empty() ? std::string() : a[0].to_string());
}

Value b_repr(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "repr");
  arity(a, 1, 1, "repr");
  return Value::str(a[0].repr());
}

Value b_int(Impl&, std::vector<Value>& a, KwArgs& kw) {
  auto base_kw = take_kw(kw, "base");
  check_kw_consumed(kw, "int");
  arity(a, 0, 2, "int");
  if (a.empty()) return Value::integer(0);
  const Value& v = a[0];
  if (v.type() == T::Str) {
    int base = a.size() == 2 ? static_cast<int>(int_arg(a[1], "int")) : base_kw ? static_cast<int>(int_arg(*base_kw, "int")) : 10;
    std::string s = trim(v.as_str());
    std::string digits;
    for (char c : s)
      if (c != '_') digits += c;
    errno = 0;
    char* end = nullptr;
    long long r = std::strtoll(digits.c_str(), &end, base);
    if (digits.empty() || *end != '\0' || errno == ERANGE)
      raise("ValueError", "invalid literal for int() with base " + std::to_string(base) + ": " + v.repr());
    return Value::integer(r);
  }
  if (a.size() == 2) raise("TypeError", "int() can't convert non-string with explicit base");
  if (is_int(v)) return Value::integer(v.as_int());
  if (v.type() == T::Float) {
    double f = v.as_float();
    if (std::isnan(f)) raise("ValueError", "cannot convert float NaN to integer");
    if (std::isinf(f)) raise("OverflowError", "cannot convert float infinity to integer");
    if (std::fabs(f) >= 9.2e18) raise("OverflowError", "integer overflow");
    return Value::integer(static_cast<std::int64_t>(std::trunc(f)));
  }
  raise("TypeError", "int() argument must be a string or a number, not '" + v.type_name() + "'");
}

Value b_float(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "float");
  arity(a, 0, 1, "float");
  if (a.empty()) return Value::real(0.0);
  const Value& v = a[0];
  if (v.is_number()) return Value::real(v.as_float());
  if (v.type() == T::Str) {
    std::string s = trim(v.as_str());
    std::string lower;
    for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "inf" || lower == "+inf" || lower == "infinity") return Value::real(HUGE_VAL);
    if (lower == "-inf" || lower == "-infinity") return Value::real(-HUGE_VAL);
    if (lower == "nan") return Value::real(std::nan(""));
    char* end = nullptr;
    double d = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || lower.find_first_of("xp") != std::string::npos)
      raise("ValueError", "could not convert string to float: " + v.repr());
    return Value::real(d);
  }
  raise("TypeError", "float() argument must be a string or a number, not '" + v.type_name() + "'");
}

Value b_bool(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "bool");
  arity(a, 0, 1, "bool");
  return Value::boolean(!a.empty() && a[0].truthy());
}

bool instance_of(const Value& v, const Value& cls) {
  if (cls.type() == T::Tuple) {
    for (const auto& c : cls.as_tuple().items)
      if (instance_of(v, c)) return true;
    return false;
  }
  if (cls.type() != T::Builtin) raise("TypeError", "isinstance() arg 2 must be a type or tuple of types");
  const auto& b = object_as<Builtin>(cls);
  if (b.exception_class) return v.type() == T::Exception && exception_matches(object_as<ExceptionObject>(v).name, b.name);
  if (b.type_tag < 0) raise("TypeError", "isinstance() arg 2 must be a type or tuple of types");
  auto tag = static_cast<T>(b.type_tag);
  if (v.type() == tag) return true;
  return tag == T::Int && v.type() == T::Bool;
}

Value b_isinstance(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "isinstance");
  arity(a, 2, 2, "isinstance");
  return Value::boolean(instance_of(a[0], a[1]));
}

Value b_reversed(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "reversed");
  arity(a, 1, 1, "reversed");
  if (a[0].type() == T::Set) raise("TypeError", "'set' object is not reversible");
  std::vector<Value> items = iterate(impl, a[0]);
  std::reverse(items.begin(), items.end());
  return Value::list(std::move(items));
}

Value b_sum(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  auto start_kw = take_kw(kw, "start");
  check_kw_consumed(kw, "sum");
  arity(a, 1, 2, "sum");
  Value acc = a.size() == 2 ? a[1] : start_kw ? *start_kw : Value::integer(0);
  if (acc.type() == T::Str) raise("TypeError", "sum() can't sum strings [use ''.join(seq) instead]");
  for (const auto& v : iterate(impl, a[0])) acc = binary_op(impl, BinOpKind::Add, acc, v);
  return acc;
}

Value b_map(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "map");
  if (a.size() < 2) raise("TypeError", "map() must have at least two arguments.");
  std::vector<std::vector<Value>> seqs;
  std::size_t n = SIZE_MAX;
  for (std::size_t i = 1; i < a.size(); ++i) {
    seqs.push_back(iterate(impl, a[i]));
    n = std::min(n, seqs.back().size());
  }
  std::vector<Value> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Value> args;
    for (auto& s : seqs) args.push_back(s[i]);
    out.push_back(impl.call_value(a[0], std::move(args)));
  }
  return Value::list(std::move(out));
}

Value b_filter(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "filter");
  arity(a, 2, 2, "filter");
  std::vector<Value> out;
  for (auto& v : iterate(impl, a[1])) {
    bool keep = a[0].is_none() ? v.truthy() : impl.call_value(a[0], {v}).truthy();
    if (keep) out.push_back(std::move(v));
  }
  return Value::list(std::move(out));
}

Value b_round(Impl&, std::vector<Value>& a, KwArgs& kw) {
  auto nd_kw = take_kw(kw, "ndigits");
  check_kw_consumed(kw, "round");
  arity(a, 1, 2, "round");
  Value nd = a.size() == 2 ? a[1] : nd_kw ? *nd_kw : Value();
  const Value& v = a[0];
  if (!v.is_number()) raise("TypeError", "type " + v.type_name() + " doesn't define __round__ method");
  if (nd.is_none()) {
    if (is_int(v)) return Value::integer(v.as_int());
    double r = std::nearbyint(v.as_float());
    if (!std::isfinite(r) || std::fabs(r) >= 9.2e18) raise("OverflowError", "cannot convert float to integer");
    return Value::integer(static_cast<std::int64_t>(r));
  }
  std::int64_t n = int_arg(nd, "round");
  if (is_int(v) && n >= 0) return Value::integer(v.as_int());
  double scale = std::pow(10.0, static_cast<double>(n));
  double r = std::nearbyint(v.as_float() * scale) / scale;
  if (is_int(v)) return Value::integer(static_cast<std::int64_t>(r));
  return Value::real(r);
}

Value b_print(Impl&, std::vector<Value>&, KwArgs&) { return Value(); }

Value b_hash(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "hash");
  arity(a, 1, 1, "hash");
  return Value::integer(static_cast<std::int64_t>(a[0].hash() >> 1));
}

Value b_divmod(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "divmod");
  arity(a, 2, 2, "divmod");
  return Value::tuple({binary_op(impl, BinOpKind::FloorDiv, a[0], a[1]), binary_op(impl, BinOpKind::Mod, a[0], a[1])});
}

Value b_pow(Impl& impl, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "pow");
  arity(a, 2, 2, "pow");
  return binary_op(impl, BinOpKind::Pow, a[0], a[1]);
}

Value b_chr(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "chr");
  arity(a, 1, 1, "chr");
  std::int64_t c = int_arg(a[0], "chr");
  if (c < 0 || c > 127) raise("ValueError", "chr() arg not in supported range (ASCII only)");
  return Value::str(std::string(1, static_cast<char>(c)));
}

Value b_ord(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "ord");
  arity(a, 1, 1, "ord");
  const std::string& s = str_arg(a[0], "ord");
  if (s.size() != 1) raise("TypeError", "ord() expected a character, but string of length " + std::to_string(s.size()) + " found");
  return Value::integer(static_cast<unsigned char>(s[0]));
}

Value b_callable(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "callable");
  arity(a, 1, 1, "callable");
  T t = a[0].type();
  return Value::boolean(t == T::Function || t == T::Builtin || t == T::Method);
}

Value b_type(Impl&, std::vector<Value>& a, KwArgs& kw);

Value b_deepcopy(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "deepcopy");
  arity(a, 1, 1, "deepcopy");
  std::unordered_map<const void*, Value> memo;
  return deep_copy(a[0], memo);
}

Value b_copy(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "copy");
  arity(a, 1, 1, "copy");
  return shallow_copy(a[0]);
}

template <double (*F)(double)>
Value math1(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "math");
  arity(a, 1, 1, "math function");
  double x = a[0].as_float();
  double r = F(x);
  if (std::isnan(r) && !std::isnan(x)) raise("ValueError", "math domain error");
  return Value::real(r);
}

Value math_floor_ceil(const Value& v, bool ceil) {
  if (is_int(v)) return Value::integer(v.as_int());
  double r = ceil ? std::ceil(v.as_float()) : std::floor(v.as_float());
  if (!std::isfinite(r) || std::fabs(r) >= 9.2e18) raise("OverflowError", "cannot convert float to integer");
  return Value::integer(static_cast<std::int64_t>(r));
}

Value m_floor(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "floor");
  arity(a, 1, 1, "floor");
  return math_floor_ceil(a[0], false);
}

Value m_ceil(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "ceil");
  arity(a, 1, 1, "ceil");
  return math_floor_ceil(a[0], true);
}

Value m_trunc(Impl& impl, std::vector<Value>& a, KwArgs& kw) { return b_int(impl, a, kw); }

Value m_gcd(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "gcd");
  std::int64_t g = 0;
  for (const auto& v : a) g = std::gcd(g, int_arg(v, "gcd"));
  return Value::integer(g);
}

Value m_hypot(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "hypot");
  double s = 0;
  for (const auto& v : a) s += v.as_float() * v.as_float();
  return Value::real(std::sqrt(s));
}

Value m_isinf(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "isinf");
  arity(a, 1, 1, "isinf");
  return Value::boolean(std::isinf(a[0].as_float()));
}

Value m_isnan(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "isnan");
  arity(a, 1, 1, "isnan");
  return Value::boolean(std::isnan(a[0].as_float()));
}

Value m_pow(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "pow");
  arity(a, 2, 2, "pow");
  return Value::real(std::pow(a[0].as_float(), a[1].as_float()));
}

Value m_log(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "log");
  arity(a, 1, 2, "log");
  double x = a[0].as_float();
  if (x <= 0) raise("ValueError", "math domain error");
  double r = std::log(x);
  if (a.size() == 2) r /= std::log(a[1].as_float());
  return Value::real(r);
}

Value m_isclose(Impl&, std::vector<Value>& a, KwArgs& kw) {
  auto rel = take_kw(kw, "rel_tol");
  auto abs_tol = take_kw(kw, "abs_tol");
  check_kw_consumed(kw, "isclose");
  arity(a, 2, 2, "isclose");
  double x = a[0].as_float(), y = a[1].as_float();
  double rt = rel ? rel->as_float() : 1e-9, at = abs_tol ? abs_tol->as_float() : 0.0;
  return Value::boolean(x == y || std::fabs(x - y) <= std::max(rt * std::max(std::fabs(x), std::fabs(y)), at));
}

Value m_copysign(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "copysign");
  arity(a, 2, 2, "copysign");
  return Value::real(std::copysign(a[0].as_float(), a[1].as_float()));
}

double d_sqrt(double x) { return std::sqrt(x); }
double d_fabs(double x) { return std::fabs(x); }
double d_exp(double x) { return std::exp(x); }
double d_sin(double x) { return std::sin(x); }
double d_cos(double x) { return std::cos(x); }
double d_atan(double x) { return std::atan(x); }
double d_log2(double x) { return x <= 0 ? std::nan("") : std::log2(x); }
double d_log10(double x) { return x <= 0 ? std::nan("") : std::log10(x); }

Value m_atan2(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "atan2");
  arity(a, 2, 2, "atan2");
  return Value::real(std::atan2(a[0].as_float(), a[1].as_float()));
}

// ---- tables ----

struct ExceptionClass {
  const char* name;
  const char* base;
};

const ExceptionClass kExceptions[] = {
    {"BaseException", ""},
    {"Exception", "BaseException"},
    {"ArithmeticError", "Exception"},
    {"ZeroDivisionError", "ArithmeticError"},
    {"OverflowError", "ArithmeticError"},
    {"LookupError", "Exception"},
    {"KeyError", "LookupError"},
    {"IndexError", "LookupError"},
    {"ValueError", "Exception"},
    {"TypeError", "Exception"},
    {"NameError", "Exception"},
    {"UnboundLocalError", "NameError"},
    {"AttributeError", "Exception"},
    {"AssertionError", "Exception"},
    {"RuntimeError", "Exception"},
    {"NotImplementedError", "RuntimeError"},
    {"RecursionError", "RuntimeError"},
    {"StopIteration", "Exception"},
    {"ImportError", "Exception"},
    {"ModuleNotFoundError", "ImportError"},
    {"MemoryError", "Exception"},
    {"SyntaxError", "Exception"},
};

const std::unordered_map<std::string, std::string>& exception_parents() {
  static const auto table = [] {
    std::unordered_map<std::string, std::string> t;
    for (const auto& e : kExceptions) t.emplace(e.name, e.base);
    return t;
  }();
  return table;
}

Value make_builtin(const std::string& name, BuiltinFn fn, int type_tag = -1) {
  auto b = std::make_shared<Builtin>();
  b->name = name;
  b->fn = fn;
  b->type_tag = type_tag;
  return make_object(T::Builtin, std::move(b));
}

}  // namespace

bool is_exception_class(const std::string& name) { return exception_parents().count(name) > 0; }

bool exception_matches(const std::string& thrown, const std::string& handler) {
  const auto& parents = exception_parents();
  std::string cur = thrown;
  for (int guard = 0; guard < 32 && !cur.empty(); ++guard) {
    if (cur == handler) return true;
    auto it = parents.find(cur);
    if (it == parents.end()) return handler == "Exception" || handler == "BaseException";
    cur = it->second;
  }
  return false;
}

Value make_exception(const std::string& type, const std::string& message) {
  auto e = std::make_shared<ExceptionObject>();
  e->name = type;
  e->message = message;
  return make_object(T::Exception, std::move(e));
}

const std::unordered_map<std::string, Value>& builtin_table() {
  static const std::unordered_map<std::string, Value> table = [] {
    std::unordered_map<std::string, Value> t;
    auto add = [&](const char* name, BuiltinFn fn, int tag = -1) { t.emplace(name, make_builtin(name, fn, tag)); };
    add("len", b_len);
    add("range", b_range);
    add("list", b_list, static_cast<int>(T::List));
    add("tuple", b_tuple, static_cast<int>(T::Tuple));
    add("set", b_set, static_cast<int>(T::Set));
    add("frozenset", b_set, static_cast<int>(T::Set));
    add("dict", b_dict, static_cast<int>(T::Dict));
    add("str", b_str, static_cast<int>(T::Str));
    add("int", b_int, static_cast<int>(T::Int));
    add("float", b_float, static_cast<int>(T::Float));
    add("bool", b_bool, static_cast<int>(T::Bool));
    add("sorted", b_sorted);
    add("min", b_min);
    add("max", b_max);
    add("abs", b_abs);
    add("any", b_any);
    add("all", b_all);
    add("enumerate", b_enumerate);
    add("zip", b_zip);
    add("isinstance", b_isinstance);
    add("reversed", b_reversed);
    add("sum", b_sum);
    add("map", b_map);
    add("filter", b_filter);
    add("round", b_round);
    add("print", b_print);
    add("repr", b_repr);
    add("hash", b_hash);
    add("divmod", b_divmod);
    add("pow", b_pow);
    add("chr", b_chr);
    add("ord", b_ord);
    add("callable", b_callable);
    add("type", b_type);
    for (const auto& e : kExceptions) {
      auto b = std::make_shared<Builtin>();
      b->name = e.name;
      b->exception_class = true;
      b->base = e.base;
      t.emplace(e.name, make_object(T::Builtin, std::move(b)));
    }
    return t;
  }();
  return table;
}

namespace {

Value b_type(Impl&, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "type");
  arity(a, 1, 1, "type");
  const auto& table = builtin_table();
  std::string name = a[0].type_name();
  auto it = table.find(name);
  if (it != table.end()) return it->second;
  return Value::str("<class '" + name + "'>");
}

Value make_module(const std::string& name, std::vector<std::pair<std::string, Value>> members, bool permissive = false) {
  auto m = std::make_shared<Module>();
  m->name = name;
  m->permissive = permissive;
  for (auto& [k, v] : members) m->members.emplace(k, std::move(v));
  return make_object(T::Module, std::move(m));
}

}  // namespace

Value import_module(const std::string& name) {
  static const std::unordered_map<std::string, Value> modules = [] {
    std::unordered_map<std::string, Value> m;
    m.emplace("copy", make_module("copy", {{"deepcopy", make_builtin("deepcopy", b_deepcopy)},
                                           {"copy", make_builtin("copy", b_copy)}}));
    m.emplace("math", make_module("math", {
                                              {"floor", make_builtin("floor", m_floor)},
                                              {"ceil", make_builtin("ceil", m_ceil)},
                                              {"trunc", make_builtin("trunc", m_trunc)},
                                              {"sqrt", make_builtin("sqrt", math1<d_sqrt>)},
                                              {"fabs", make_builtin("fabs", math1<d_fabs>)},
                                              {"exp", make_builtin("exp", math1<d_exp>)},
                                              {"sin", make_builtin("sin", math1<d_sin>)},
                                              {"cos", make_builtin("cos", math1<d_cos>)},
                                              {"atan", make_builtin("atan", math1<d_atan>)},
                                              {"atan2", make_builtin("atan2", m_atan2)},
                                              {"log", make_builtin("log", m_log)},
                                              {"log2", make_builtin("log2", math1<d_log2>)},
                                              {"log10", make_builtin("log10", math1<d_log10>)},
                                              {"pow", make_builtin("pow", m_pow)},
                                              {"gcd", make_builtin("gcd", m_gcd)},
                                              {"hypot", make_builtin("hypot", m_hypot)},
                                              {"isinf", make_builtin("isinf", m_isinf)},
                                              {"isnan", make_builtin("isnan", m_isnan)},
                                              {"isclose", make_builtin("isclose", m_isclose)},
                                              {"copysign", make_builtin("copysign", m_copysign)},
                                              {"inf", Value::real(HUGE_VAL)},
                                              {"nan", Value::real(std::nan(""))},
                                              {"pi", Value::real(3.141592653589793)},
                                              {"e", Value::real(2.718281828459045)},
                                          }));
    m.emplace("typing", make_module("typing", {}, true));
    m.emplace("__future__", make_module("__future__", {}, true));
    return m;
  }();
  auto it = modules.find(name);
  if (it == modules.end()) raise("ModuleNotFoundError", "No module named '" + name + "' (not available in the sandbox)");
  return it->second;
}

// ---- methods ----

namespace {

Value l_append(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "append");
  arity(a, 1, 1, "append");
  charge(1);
  self.as_list().items.push_back(std::move(a[0]));
  return Value();
}

Value l_extend(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "extend");
  arity(a, 1, 1, "extend");
  std::vector<Value> extra = iterate(impl, a[0]);
  auto& items = self.as_list().items;
  items.insert(items.end(), extra.begin(), extra.end());
  return Value();
}

Value l_pop(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "pop");
  arity(a, 0, 1, "pop");
  auto& items = self.as_list().items;
  if (items.empty()) raise("IndexError", "pop from empty list");
  std::size_t i = a.empty() ? items.size() - 1 : normalize_index(int_arg(a[0], "pop"), items.size(), "pop");
  Value v = std::move(items[i]);
  items.erase(items.begin() + static_cast<std::ptrdiff_t>(i));
  return v;
}

Value l_remove(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "remove");
  arity(a, 1, 1, "remove");
  auto& items = self.as_list().items;
  for (auto it = items.begin(); it != items.end(); ++it) {
    if (*it == a[0]) {
      items.erase(it);
      return Value();
    }
  }
  raise("ValueError", "list.remove(x): x not in list");
}

Value seq_index(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "index");
  arity(a, 1, 3, "index");
  const auto& items = self.sequence();
  auto n = static_cast<std::int64_t>(items.size());
  std::int64_t lo = a.size() > 1 ? int_arg(a[1], "index") : 0;
  std::int64_t hi = a.size() > 2 ? int_arg(a[2], "index") : n;
  if (lo < 0) lo = std::max<std::int64_t>(0, lo + n);
  if (hi < 0) hi = std::max<std::int64_t>(0, hi + n);
  hi = std::min(hi, n);
  for (std::int64_t i = lo; i < hi; ++i)
    if (items[static_cast<std::size_t>(i)] == a[0]) return Value::integer(i);
  raise("ValueError", a[0].repr() + " is not in " + self.type_name());
}

Value seq_count(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "count");
  arity(a, 1, 1, "count");
  std::int64_t c = 0;
  for (const auto& v : self.sequence())
    if (v == a[0]) ++c;
  return Value::integer(c);
}

Value l_insert(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "insert");
  arity(a, 2, 2, "insert");
  auto& items = self.as_list().items;
  auto n = static_cast<std::int64_t>(items.size());
  std::int64_t i = int_arg(a[0], "insert");
  if (i < 0) i = std::max<std::int64_t>(0, i + n);
  i = std::min(i, n);
  charge(1);
  items.insert(items.begin() + i, std::move(a[1]));
  return Value();
}

Value l_copy(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "copy");
  arity(a, 0, 0, "copy");
  return shallow_copy(self);
}

Value l_clear(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "clear");
  arity(a, 0, 0, "clear");
  if (self.type() == T::List) self.as_list().items.clear();
  else if (self.type() == T::Dict) self.as_dict().clear();
  else {
    for (const auto& v : std::vector<Value>(self.as_set().items())) self.as_set().erase(v);
  }
  return Value();
}

Value l_reverse(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "reverse");
  arity(a, 0, 0, "reverse");
  auto& items = self.as_list().items;
  std::reverse(items.begin(), items.end());
  return Value();
}

Value l_sort(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  arity(a, 0, 0, "sort");
  std::vector<Value> args{self};
  Value sorted = b_sorted(impl, args, kw);
  self.as_list().items = std::move(sorted.as_list().items);
  return Value();
}

Value d_get(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "get");
  arity(a, 1, 2, "get");
  const Value* v = self.as_dict().find(a[0]);
  if (v) return *v;
  return a.size() == 2 ? a[1] : Value();
}

Value d_keys(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "keys");
  arity(a, 0, 0, "keys");
  return Value::list(iterate(impl, self));
}

Value d_values(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "values");
  arity(a, 0, 0, "values");
  std::vector<Value> out;
  for (const auto& [k, v] : self.as_dict().entries()) out.push_back(v);
  return Value::list(std::move(out));
}

Value d_items(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "items");
  arity(a, 0, 0, "items");
  std::vector<Value> out;
  for (const auto& [k, v] : self.as_dict().entries()) out.push_back(Value::tuple({k, v}));
  return Value::list(std::move(out));
}

Value d_pop(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "pop");
  arity(a, 1, 2, "pop");
  Dict& d = self.as_dict();
  const Value* v = d.find(a[0]);
  if (!v) {
    if (a.size() == 2) return a[1];
    raise("KeyError", a[0].repr());
  }
  Value out = *v;
  d.erase(a[0]);
  return out;
}

Value d_popitem(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "popitem");
  arity(a, 0, 0, "popitem");
  Dict& d = self.as_dict();
  if (d.size() == 0) raise("KeyError", "'popitem(): dictionary is empty'");
  auto [k, v] = d.entries().back();
  d.erase(k);
  return Value::tuple({k, v});
}

Value d_setdefault(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "setdefault");
  arity(a, 1, 2, "setdefault");
  Dict& d = self.as_dict();
  if (const Value* v = d.find(a[0])) return *v;
  Value dflt = a.size() == 2 ? a[1] : Value();
  d.set(a[0], dflt);
  return dflt;
}

Value d_update(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  arity(a, 0, 1, "update");
  if (!a.empty()) dict_update(impl, self.as_dict(), a[0]);
  for (auto& [k, v] : kw) self.as_dict().set(Value::str(k), v);
  return Value();
}

Value s_add(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "add");
  arity(a, 1, 1, "add");
  self.as_set().add(a[0]);
  return Value();
}

Value s_discard(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "discard");
  arity(a, 1, 1, "discard");
  self.as_set().erase(a[0]);
  return Value();
}

Value s_remove(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "remove");
  arity(a, 1, 1, "remove");
  if (!self.as_set().erase(a[0])) raise("KeyError", a[0].repr());
  return Value();
}

Value s_pop(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "pop");
  arity(a, 0, 0, "pop");
  Set& s = self.as_set();
  if (s.size() == 0) raise("KeyError", "'pop from an empty set'");
  Value v = s.items().front();
  s.erase(v);
  return v;
}

Value set_from(Impl& impl, const Value& v) {
  if (v.type() == T::Set) return v;
  std::vector<Value> args{v};
  KwArgs none;
  return b_set(impl, args, none);
}

template <BinOpKind Op>
Value s_binop(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "set operation");
  Value acc = shallow_copy(self);
  for (const auto& other : a) acc = set_op(Op, acc, set_from(impl, other));
  return acc;
}

Value s_update(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "update");
  for (const auto& other : a)
    for (const auto& v : iterate(impl, other)) self.as_set().add(v);
  return Value();
}

Value s_issubset(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "issubset");
  arity(a, 1, 1, "issubset");
  Value other = set_from(impl, a[0]);
  for (const auto& v : self.as_set().items())
    if (!other.as_set().contains(v)) return Value::boolean(false);
  return Value::boolean(true);
}

Value s_issuperset(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "issuperset");
  arity(a, 1, 1, "issuperset");
  for (const auto& v : iterate(impl, a[0]))
    if (!self.as_set().contains(v)) return Value::boolean(false);
  return Value::boolean(true);
}

Value s_isdisjoint(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "isdisjoint");
  arity(a, 1, 1, "isdisjoint");
  for (const auto& v : iterate(impl, a[0]))
    if (self.as_set().contains(v)) return Value::boolean(false);
  return Value::boolean(true);
}

// strings

Value str_split(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  auto sep_kw = take_kw(kw, "sep");
  auto max_kw = take_kw(kw, "maxsplit");
  check_kw_consumed(kw, "split");
  arity(a, 0, 2, "split");
  Value sep = !a.empty() ? a[0] : sep_kw ? *sep_kw : Value();
  std::int64_t maxsplit = a.size() == 2 ? int_arg(a[1], "split") : max_kw ? int_arg(*max_kw, "split") : -1;
  const std::string& s = self.as_str();
  std::vector<Value> out;
  if (sep.is_none()) {
    std::size_t i = 0;
    while (i < s.size()) {
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i >= s.size()) break;
      if (maxsplit >= 0 && static_cast<std::int64_t>(out.size()) == maxsplit) {
        std::string rest = s.substr(i);
        while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.pop_back();
        out.push_back(Value::str(rest));
        break;
      }
      std::size_t j = i;
      while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back(Value::str(s.substr(i, j - i)));
      i = j;
    }
    return Value::list(std::move(out));
  }
  const std::string& d = str_arg(sep, "split");
  if (d.empty()) raise("ValueError", "empty separator");
  std::size_t start = 0;
  for (;;) {
    if (maxsplit >= 0 && static_cast<std::int64_t>(out.size()) == maxsplit) break;
    std::size_t p = s.find(d, start);
    if (p == std::string::npos) break;
    out.push_back(Value::str(s.substr(start, p - start)));
    start = p + d.size();
  }
  out.push_back(Value::str(s.substr(start)));
  return Value::list(std::move(out));
}

Value str_join(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "join");
  arity(a, 1, 1, "join");
  std::string out;
  bool first = true;
  for (const auto& v : iterate(impl, a[0])) {
    if (v.type() != T::Str) raise("TypeError", "sequence item: expected str instance, " + v.type_name() + " found");
    if (!first) out += self.as_str();
    first = false;
    out += v.as_str();
  }
  return Value::str(std::move(out));
}

template <bool Start>
Value str_affix(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, Start ? "startswith" : "endswith");
  arity(a, 1, 1, Start ? "startswith" : "endswith");
  const std::string& s = self.as_str();
  auto test = [&](const Value& p) {
    const std::string& x = str_arg(p, Start ? "startswith" : "endswith");
    return Start ? s.starts_with(x) : s.ends_with(x);
  };
  if (a[0].type() == T::Tuple) {
    for (const auto& p : a[0].as_tuple().items)
      if (test(p)) return Value::boolean(true);
    return Value::boolean(false);
  }
  return Value::boolean(test(a[0]));
}

Value str_replace(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "replace");
  arity(a, 2, 3, "replace");
  std::string s = self.as_str();
  const std::string& from = str_arg(a[0], "replace");
  const std::string& to = str_arg(a[1], "replace");
  std::int64_t count = a.size() == 3 ? int_arg(a[2], "replace") : -1;
  std::string out;
  std::size_t pos = 0;
  std::int64_t done = 0;
  if (from.empty()) {
    for (std::size_t i = 0; i <= s.size(); ++i) {
      if (count < 0 || done < count) {
        out += to;
        ++done;
      }
      if (i < s.size()) out += s[i];
    }
    return Value::str(std::move(out));
  }
  while (count < 0 || done < count) {
    std::size_t p = s.find(from, pos);
    if (p == std::string::npos) break;
    out += s.substr(pos, p - pos) + to;
    pos = p + from.size();
    ++done;
  }
  out += s.substr(pos);
  return Value::str(std::move(out));
}

template <int Side>  // 0 both, 1 left, 2 right
Value str_strip(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "strip");
  arity(a, 0, 1, "strip");
  std::string chars = " \t\n\r\f\v";
  if (!a.empty() && !a[0].is_none()) chars = str_arg(a[0], "strip");
  const std::string& s = self.as_str();
  std::size_t b = 0, e = s.size();
  if (Side != 2)
    while (b < e && chars.find(s[b]) != std::string::npos) ++b;
  if (Side != 1)
    while (e > b && chars.find(s[e - 1]) != std::string::npos) --e;
  return Value::str(s.substr(b, e - b));
}

template <int Mode>  // 0 upper, 1 lower, 2 capitalize, 3 title
Value str_case(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "case");
  arity(a, 0, 0, "case conversion");
  std::string s = self.as_str();
  bool word_start = true;
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    switch (Mode) {
      case 0: s[i] = static_cast<char>(std::toupper(c)); break;
      case 1: s[i] = static_cast<char>(std::tolower(c)); break;
      case 2: s[i] = static_cast<char>(i == 0 ? std::toupper(c) : std::tolower(c)); break;
      default:
        s[i] = static_cast<char>(word_start ? std::toupper(c) : std::tolower(c));
        word_start = !std::isalpha(c);
    }
  }
  return Value::str(std::move(s));
}

Value str_find(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "find");
  arity(a, 1, 1, "find");
  auto p = self.as_str().find(str_arg(a[0], "find"));
  return Value::integer(p == std::string::npos ? -1 : static_cast<std::int64_t>(p));
}

Value str_rfind(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "rfind");
  arity(a, 1, 1, "rfind");
  auto p = self.as_str().rfind(str_arg(a[0], "rfind"));
  return Value::integer(p == std::string::npos ? -1 : static_cast<std::int64_t>(p));
}

Value str_rsplit(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  auto sep_kw = take_kw(kw, "sep");
  auto max_kw = take_kw(kw, "maxsplit");
  check_kw_consumed(kw, "rsplit");
  arity(a, 0, 2, "rsplit");
  Value sep = !a.empty() ? a[0] : sep_kw ? *sep_kw : Value();
  std::int64_t maxsplit = a.size() == 2 ? int_arg(a[1], "rsplit") : max_kw ? int_arg(*max_kw, "rsplit") : -1;
  if (maxsplit < 0 || sep.is_none()) {
    std::vector<Value> args;
    if (!sep.is_none()) args.push_back(sep);
    if (sep.is_none() && maxsplit >= 0) {
      // whitespace split from the right
      std::vector<Value> words = str_split(impl, self, args, kw).sequence();
      if (static_cast<std::int64_t>(words.size()) <= maxsplit + 1) return Value::list(std::move(words));
      const std::string& s = self.as_str();
      std::vector<Value> tail(words.end() - maxsplit, words.end());
      std::size_t end = s.size();
      for (std::int64_t i = 0; i < maxsplit; ++i) {
        while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
        while (end > 0 && !std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
      }
      std::string head = s.substr(0, end);
      while (!head.empty() && std::isspace(static_cast<unsigned char>(head.back()))) head.pop_back();
      std::size_t b = head.find_first_not_of(" \t\n\r\f\v");
      std::vector<Value> out{Value::str(b == std::string::npos ? "" : head.substr(b))};
      out.insert(out.end(), tail.begin(), tail.end());
      return Value::list(std::move(out));
    }
    return str_split(impl, self, args, kw);
  }
  const std::string& s = self.as_str();
  const std::string& d = str_arg(sep, "rsplit");
  if (d.empty()) raise("ValueError", "empty separator");
  std::vector<Value> out;
  std::size_t end = s.size();
  while (static_cast<std::int64_t>(out.size()) < maxsplit) {
    if (end < d.size()) break;
    std::size_t p = s.rfind(d, end - d.size());
    if (p == std::string::npos) break;
    out.push_back(Value::str(s.substr(p + d.size(), end - p - d.size())));
    end = p;
  }
  out.push_back(Value::str(s.substr(0, end)));
  std::reverse(out.begin(), out.end());
  return Value::list(std::move(out));
}

template <bool Right>
Value str_partition(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, Right ? "rpartition" : "partition");
  arity(a, 1, 1, Right ? "rpartition" : "partition");
  const std::string& s = self.as_str();
  const std::string& d = str_arg(a[0], "partition");
  if (d.empty()) raise("ValueError", "empty separator");
  auto p = Right ? s.rfind(d) : s.find(d);
  if (p == std::string::npos)
    return Right ? Value::tuple({Value::str(""), Value::str(""), Value::str(s)})
                 : Value::tuple({Value::str(s), Value::str(""), Value::str("")});
  return Value::tuple({Value::str(s.substr(0, p)), Value::str(d), Value::str(s.substr(p + d.size()))});
}

Value str_index(Impl& impl, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  Value r = str_find(impl, self, a, kw);
  if (r.as_int() < 0) raise("ValueError", "substring not found");
  return r;
}

Value str_count(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "count");
  arity(a, 1, 1, "count");
  const std::string& s = self.as_str();
  const std::string& x = str_arg(a[0], "count");
  if (x.empty()) return Value::integer(static_cast<std::int64_t>(s.size() + 1));
  std::int64_t c = 0;
  for (std::size_t p = s.find(x); p != std::string::npos; p = s.find(x, p + x.size())) ++c;
  return Value::integer(c);
}

template <int (*Pred)(int)>
Value str_is(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "is");
  arity(a, 0, 0, "is");
  const std::string& s = self.as_str();
  if (s.empty()) return Value::boolean(false);
  for (unsigned char c : s)
    if (!Pred(c)) return Value::boolean(false);
  return Value::boolean(true);
}

Value str_format_method(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  return Value::str(str_format(self.as_str(), a, kw));
}

Value str_splitlines(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "splitlines");
  arity(a, 0, 0, "splitlines");
  std::vector<Value> out;
  const std::string& s = self.as_str();
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n' || s[i] == '\r') {
      out.push_back(Value::str(s.substr(start, i - start)));
      if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      start = i + 1;
    }
  }
  if (start < s.size()) out.push_back(Value::str(s.substr(start)));
  return Value::list(std::move(out));
}

template <bool Left>
Value str_just(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "just");
  arity(a, 1, 2, "just");
  std::int64_t w = int_arg(a[0], "just");
  std::string fill = a.size() == 2 ? str_arg(a[1], "just") : " ";
  if (fill.size() != 1) raise("TypeError", "The fill character must be exactly one character long");
  std::string s = self.as_str();
  if (static_cast<std::int64_t>(s.size()) >= w) return self;
  std::string pad(static_cast<std::size_t>(w) - s.size(), fill[0]);
  return Value::str(Left ? s + pad : pad + s);
}

Value str_zfill(Impl&, const Value& self, std::vector<Value>& a, KwArgs& kw) {
  no_kwargs(kw, "zfill");
  arity(a, 1, 1, "zfill");
  std::int64_t w = int_arg(a[0], "zfill");
  std::string s = self.as_str();
  if (static_cast<std::int64_t>(s.size()) >= w) return self;
  std::size_t sign = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  s.insert(sign, std::string(static_cast<std::size_t>(w) - s.size(), '0'));
  return Value::str(std::move(s));
}

using MethodTable = std::unordered_map<std::string_view, MethodFn>;

}  // namespace

MethodFn find_method(Value::Type type, std::string_view name) {
  static const MethodTable list_methods = {
      {"append", l_append}, {"extend", l_extend}, {"pop", l_pop},     {"remove", l_remove},
      {"index", seq_index}, {"insert", l_insert}, {"copy", l_copy},   {"count", seq_count},
      {"sort", l_sort},     {"reverse", l_reverse}, {"clear", l_clear}};
  static const MethodTable tuple_methods = {{"index", seq_index}, {"count", seq_count}};
  static const MethodTable dict_methods = {
      {"get", d_get},     {"keys", d_keys},         {"values", d_values}, {"items", d_items},
      {"pop", d_pop},     {"setdefault", d_setdefault}, {"copy", l_copy}, {"update", d_update},
      {"clear", l_clear}, {"popitem", d_popitem}};
  static const MethodTable set_methods = {
      {"add", s_add},
      {"discard", s_discard},
      {"remove", s_remove},
      {"pop", s_pop},
      {"copy", l_copy},
      {"clear", l_clear},
      {"update", s_update},
      {"union", s_binop<BinOpKind::BitOr>},
      {"intersection", s_binop<BinOpKind::BitAnd>},
      {"difference", s_binop<BinOpKind::Sub>},
      {"symmetric_difference", s_binop<BinOpKind::BitXor>},
      {"issubset", s_issubset},
      {"issuperset", s_issuperset},
      {"isdisjoint", s_isdisjoint}};
  static const MethodTable str_methods = {
      {"split", str_split},
      {"join", str_join},
      {"startswith", str_affix<true>},
      {"endswith", str_affix<false>},
      {"replace", str_replace},
      {"strip", str_strip<0>},
      {"lstrip", str_strip<1>},
      {"rstrip", str_strip<2>},
      {"upper", str_case<0>},
      {"lower", str_case<1>},
      {"capitalize", str_case<2>},
      {"title", str_case<3>},
      {"find", str_find},
      {"rfind", str_rfind},
      {"rsplit", str_rsplit},
      {"partition", str_partition<false>},
      {"rpartition", str_partition<true>},
      {"index", str_index},
      {"count", str_count},
      {"isdigit", str_is<std::isdigit>},
      {"isalpha", str_is<std::isalpha>},
      {"isalnum", str_is<std::isalnum>},
      {"isspace", str_is<std::isspace>},
      {"format", str_format_method},
      {"splitlines", str_splitlines},
      {"ljust", str_just<true>},
      {"rjust", str_just<false>},
      {"zfill", str_zfill}};
  const MethodTable* table = nullptr;
  switch (type) {
    case T::List: table = &list_methods; break;
    case T::Tuple: table = &tuple_methods; break;
    case T::Dict: table = &dict_methods; break;
    case T::Set: table = &set_methods; break;
    case T::Str: table = &str_methods; break;
    default: return nullptr;
  }
  auto it = table->find(name);
  return it == table->end() ? nullptr : it->second;
}

}  // namespace groundwork::script
