#include "groundwork/worldmodel.hpp"

#include <algorithm>
#include <cstring>

#include "json.hpp"

namespace groundwork::wm {

namespace {

const std::vector<Coord> kNoCoords;
const std::vector<std::string> kNoStrings;

void hash_combine(std::size_t& seed, std::size_t v) { seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2); }

}  // namespace

LowState::LowState(int width, int height, std::vector<std::string> aux_keys) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw MalformedStateError("grid dimensions must be positive");
  for (auto& k : aux_keys) aux_.emplace(std::move(k), std::vector<std::string>{});
}

const std::vector<Coord>& LowState::coords(std::string_view type) const {
  auto it = objects_.find(type);
  return it == objects_.end() ? kNoCoords : it->second;
}

bool LowState::has(std::string_view type, Coord c) const {
  const auto& v = coords(type);
  return std::binary_search(v.begin(), v.end(), c);
}

std::vector<std::string> LowState::types_at(Coord c) const {
  std::vector<std::string> out;
  for (const auto& [t, v] : objects_)
    if (std::binary_search(v.begin(), v.end(), c)) out.push_back(t);
  return out;
}

void LowState::add(const std::string& type, Coord c) {
  if (!in_bounds(c))
    throw MalformedStateError(type + " at (" + std::to_string(c.x) + ", " + std::to_string(c.y) + ") is out of bounds");
  auto& v = objects_[type];
  v.insert(std::upper_bound(v.begin(), v.end(), c), c);
}

bool LowState::remove(const std::string& type, Coord c) {
  auto it = objects_.find(type);
  if (it == objects_.end()) return false;
  auto& v = it->second;
  auto pos = std::lower_bound(v.begin(), v.end(), c);
  if (pos == v.end() || *pos != c) return false;
  v.erase(pos);
  if (v.empty()) objects_.erase(it);
  return true;
}

void LowState::set_coords(const std::string& type, std::vector<Coord> coords) {
  if (coords.empty()) {
    objects_.erase(type);
    return;
  }
  for (Coord c : coords)
    if (!in_bounds(c))
      throw MalformedStateError(type + " at (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                                ") is out of bounds");
  std::sort(coords.begin(), coords.end());
  objects_[type] = std::move(coords);
}

void LowState::erase_type(const std::string& type) { objects_.erase(type); }

const std::vector<std::string>& LowState::aux(std::string_view key) const {
  auto it = aux_.find(key);
  return it == aux_.end() ? kNoStrings : it->second;
}

void LowState::set_aux(const std::string& key, std::vector<std::string> values) {
  std::sort(values.begin(), values.end());
  aux_[key] = std::move(values);
}

std::size_t LowState::hash() const {
  std::size_t h = std::hash<int>()(width_ * 1000003 + height_);
  std::hash<std::string> hs;
  for (const auto& [t, v] : objects_) {
    hash_combine(h, hs(t));
    for (Coord c : v) hash_combine(h, static_cast<std::size_t>(c.x) * 73856093u ^ static_cast<std::size_t>(c.y) * 19349663u);
    hash_combine(h, v.size());
  }
  for (const auto& [k, v] : aux_) {
    hash_combine(h, hs(k));
    for (const auto& s : v) hash_combine(h, hs(s));
    hash_combine(h, v.size());
  }
  return h;
}

bool LowState::operator<(const LowState& o) const {
  return std::tie(width_, height_, objects_, aux_) < std::tie(o.width_, o.height_, o.objects_, o.aux_);
}

std::string LowState::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, v] : objects_) {
    auto arr = nlohmann::json::array();
    for (Coord c : v) arr.push_back({c.x, c.y});
    j[t] = std::move(arr);
  }
  for (const auto& [k, v] : aux_) j[k] = v;
  j["width"] = width_;
  j["height"] = height_;
  return j.dump();
}

LowState LowState::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedStateError(std::string("state JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("width") || !j.contains("height") || !j["width"].is_number_integer() ||
      !j["height"].is_number_integer())
    throw MalformedStateError("state JSON needs integer width and height");
  LowState s(j["width"].get<int>(), j["height"].get<int>());
  for (const auto& [k, v] : j.items()) {
    if (k == "width" || k == "height") continue;
    if (!v.is_array()) throw MalformedStateError("state key '" + k + "' is not a list");
    if (v.empty() || v[0].is_string()) {
      std::vector<std::string> vals;
      for (const auto& e : v) {
        if (!e.is_string()) throw MalformedStateError("aux key '" + k + "' must hold strings");
        vals.push_back(e.get<std::string>());
      }
      s.set_aux(k, std::move(vals));
      continue;
    }
    std::vector<Coord> cs;
    for (const auto& e : v) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw MalformedStateError("state key '" + k + "' must hold [x, y] pairs");
      cs.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    s.set_coords(k, std::move(cs));
  }
  return s;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }
void put_i32(std::string& out, std::int32_t v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); }
void put_str(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

struct Reader {
  std::string_view in;
  std::size_t pos = 0;

  template <typename T>
  T get() {
    if (pos + sizeof(T) > in.size()) throw MalformedStateError("truncated packed state");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof v);
    pos += sizeof v;
    return v;
  }
  std::string str() {
    auto n = get<std::uint32_t>();
    if (pos + n > in.size()) throw MalformedStateError("truncated packed state");
    std::string s(in.substr(pos, n));
    pos += n;
    return s;
  }
};

}  // namespace

std::string LowState::pack() const {
  std::string out;
  put_i32(out, width_);
  put_i32(out, height_);
  put_u32(out, static_cast<std::uint32_t>(objects_.size()));
  for (const auto& [t, v] : objects_) {
    put_str(out, t);
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    for (Coord c : v) {
      put_i32(out, c.x);
      put_i32(out, c.y);
    }
  }
  put_u32(out, static_cast<std::uint32_t>(aux_.size()));
  for (const auto& [k, v] : aux_) {
    put_str(out, k);
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    for (const auto& x : v) put_str(out, x);
  }
  return out;
}

LowState LowState::unpack(std::string_view bytes) {
  Reader r{bytes};
  LowState s;
  s.width_ = r.get<std::int32_t>();
  s.height_ = r.get<std::int32_t>();
  for (auto n = r.get<std::uint32_t>(); n > 0; --n) {
    std::string t = r.str();
    std::vector<Coord> v(r.get<std::uint32_t>());
    for (auto& c : v) {
      c.x = r.get<std::int32_t>();
      c.y = r.get<std::int32_t>();
    }
    s.objects_.emplace(std::move(t), std::move(v));
  }
  for (auto n = r.get<std::uint32_t>(); n > 0; --n) {
    std::string k = r.str();
    std::vector<std::string> v(r.get<std::uint32_t>());
    for (auto& x : v) x = r.str();
    s.aux_.emplace(std::move(k), std::move(v));
  }
  return s;
}

// ---- transition programs ----

TransitionProgram::TransitionProgram(std::string source, int version, std::string provenance)
    : source_(std::move(source)), version_(version), provenance_(std::move(provenance)) {
  try {
    auto p = script::compile(source_);
    if (!p->defines("transition")) {
      load_error_ = "program does not define transition(state, action)";
      return;
    }
    compiled_ = std::move(p);
  } catch (const script::ScriptError& e) {
    load_error_ = e.what();
  }
}

SimulationError::SimulationError(SimErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

script::Value to_value(const LowState& s) {
  using script::Value;
  // Merge object and aux keys so the dict iterates in sorted key order.
  std::vector<std::pair<std::string_view, Value>> entries;
  for (const auto& [t, v] : s.objects()) {
    std::vector<Value> items;
    items.reserve(v.size());
    for (Coord c : v) items.push_back(Value::list({Value::integer(c.x), Value::integer(c.y)}));
    entries.emplace_back(t, Value::list(std::move(items)));
  }
  for (const auto& [k, v] : s.aux()) {
    std::vector<Value> items;
    items.reserve(v.size());
    for (const auto& str : v) items.push_back(Value::str(str));
    entries.emplace_back(k, Value::list(std::move(items)));
  }
  entries.emplace_back("height", Value::integer(s.height()));
  entries.emplace_back("width", Value::integer(s.width()));
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Value d = Value::dict();
  for (auto& [k, v] : entries) d.as_dict().set(Value::str(std::string(k)), std::move(v));
  return d;
}

namespace {

bool as_int(const script::Value& v, int& out) {
  if (v.type() != script::Value::Type::Int) return false;
  if (v.as_int() < -1'000'000 || v.as_int() > 1'000'000) return false;
  out = static_cast<int>(v.as_int());
  return true;
}

bool is_sequence(const script::Value& v) {
  return v.type() == script::Value::Type::List || v.type() == script::Value::Type::Tuple;
}

}  // namespace

LowState from_value(const script::Value& v, const LowState& schema) {
  using T = script::Value::Type;
  if (v.type() != T::Dict) throw MalformedStateError("transition must return a dict, got " + v.type_name());
  std::vector<std::string> aux_keys;
  for (const auto& [k, _] : schema.aux()) aux_keys.push_back(k);
  LowState out(schema.width(), schema.height(), aux_keys);
  for (const auto& [key, val] : v.as_dict().entries()) {
    if (key.type() != T::Str) throw MalformedStateError("state keys must be strings, got " + key.repr());
    const std::string& k = key.as_str();
    if (k == "width" || k == "height") {
      int n = 0;
      if (!as_int(val, n) || n != (k == "width" ? schema.width() : schema.height()))
        throw MalformedStateError("'" + k + "' changed to " + val.repr());
      continue;
    }
    if (!is_sequence(val)) throw MalformedStateError("value of '" + k + "' must be a list, got " + val.type_name());
    if (schema.has_aux_key(k)) {
      std::vector<std::string> strs;
      for (const auto& e : val.sequence()) {
        if (e.type() != T::Str) throw MalformedStateError("'" + k + "' must hold strings, got " + e.repr());
        strs.push_back(e.as_str());
      }
      out.set_aux(k, std::move(strs));
      continue;
    }
    std::vector<Coord> cs;
    cs.reserve(val.sequence().size());
    for (const auto& e : val.sequence()) {
      Coord c;
      if (!is_sequence(e) || e.sequence().size() != 2 || !as_int(e.sequence()[0], c.x) ||
          !as_int(e.sequence()[1], c.y))
        throw MalformedStateError("'" + k + "' must hold [x, y] integer pairs, got " + e.repr());
      if (!out.in_bounds(c)) throw MalformedStateError("'" + k + "' has out-of-bounds coordinate " + e.repr());
      cs.push_back(c);
    }
    out.set_coords(k, std::move(cs));
  }
  return out;
}

Simulator::Simulator(script::Limits limits) : interp_(limits) {}

LowState Simulator::simulate(const TransitionProgram& program, const LowState& s, const std::string& action) {
  ++calls_;
  if (!program.loaded()) throw SimulationError(SimErrorKind::Crash, program.load_error());
  script::Value result;
  try {
    result = interp_.call(*program.compiled(), "transition", {to_value(s), script::Value::str(action)});
  } catch (const script::ScriptError& e) {
    bool timeout = e.kind() == script::ErrorKind::Timeout || e.kind() == script::ErrorKind::StepLimit;
    throw SimulationError(timeout ? SimErrorKind::Timeout : SimErrorKind::Crash, e.what());
  }
  try {
    return from_value(result, s);
  } catch (const MalformedStateError& e) {
    throw SimulationError(SimErrorKind::Malformed, e.what());
  }
}

LowState simulate(const TransitionProgram& program, const LowState& s, const std::string& action) {
  thread_local Simulator sim;
  return sim.simulate(program, s, action);
}

// ---- checkers ----

MissingCheckerError::MissingCheckerError(const std::string& predicate)
    : std::runtime_error("no checker registered for predicate '" + predicate + "'") {}

void CheckerSet::add(const std::string& predicate, Checker fn) { checkers_[predicate] = std::move(fn); }

bool CheckerSet::contains(std::string_view predicate) const { return checkers_.find(predicate) != checkers_.end(); }

bool CheckerSet::evaluate(const LowState& s, const pddl::Atom& atom) const {
  auto it = checkers_.find(atom.predicate);
  if (it == checkers_.end()) throw MissingCheckerError(atom.predicate);
  return it->second(s, atom.args);
}

std::vector<std::string> CheckerSet::predicates() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : checkers_) out.push_back(k);
  return out;
}

bool check_effects(const CheckerSet& cs, const LowState& s, const pddl::GroundedOperator& op) {
  for (const auto& a : op.add_effects)
    if (!cs.evaluate(s, a)) return false;
  for (const auto& a : op.del_effects)
    if (cs.evaluate(s, a)) return false;
  return true;
}

bool check_literals(const CheckerSet& cs, const LowState& s, const std::vector<pddl::Literal>& literals) {
  for (const auto& l : literals)
    if (cs.evaluate(s, l.atom) != l.positive) return false;
  return true;
}

pddl::AbstractState abstract(const CheckerSet& cs, const LowState& s, const std::vector<pddl::Atom>& candidates) {
  pddl::AbstractState out;
  for (const auto& a : candidates)
    if (cs.evaluate(s, a)) out.insert(a);
  return out;
}

std::vector<pddl::Atom> candidate_atoms(const pddl::Domain& domain, const pddl::Problem& problem) {
  std::vector<pddl::Atom> out;
  for (const auto& pred : domain.predicates) {
    std::vector<std::vector<std::string>> choices;
    bool empty = false;
    for (const auto& param : pred.params) {
      auto objs = problem.objects_of_type(domain, param.type);
      std::sort(objs.begin(), objs.end());
      if (objs.empty()) empty = true;
      choices.push_back(std::move(objs));
    }
    if (empty) continue;
    std::vector<std::size_t> idx(choices.size(), 0);
    for (;;) {
      pddl::Atom a{pred.name, {}};
      for (std::size_t i = 0; i < choices.size(); ++i) a.args.push_back(choices[i][idx[i]]);
      out.push_back(std::move(a));
      bool done = true;
      for (std::size_t k = choices.size(); k-- > 0;) {
        if (++idx[k] < choices[k].size()) {
          done = false;
          break;
        }
        idx[k] = 0;
      }
      if (done) break;
    }
  }
  return out;
}

}  // namespace groundwork::wm
