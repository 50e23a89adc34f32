#include "common.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_set>

namespace groundwork::env {

namespace fs = std::filesystem;

std::string to_string(Terminal t) {
  switch (t) {
    case Terminal::None: return "none";
    case Terminal::Win: return "win";
    case Terminal::Loss: return "loss";
  }
  return "none";
}

Coord offset(Coord c, const std::string& direction) {
  if (direction == "up") return {c.x, c.y - 1};
  if (direction == "down") return {c.x, c.y + 1};
  if (direction == "left") return {c.x - 1, c.y};
  if (direction == "right") return {c.x + 1, c.y};
  throw InvalidActionError("not a direction: " + direction);
}

std::string asset_dir() {
  if (const char* env = std::getenv("GROUNDWORK_ASSETS"); env && *env) return env;
#ifdef GROUNDWORK_ASSET_DIR
  return GROUNDWORK_ASSET_DIR;
#else
  return "assets";
#endif
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- Environment ----

EnvOutcome Environment::step(const LowState& s, const std::string& action) const {
  const auto& acts = actions();
  if (std::find(acts.begin(), acts.end(), action) == acts.end())
    throw InvalidActionError("action '" + action + "' is not valid in " + id());
  validate(s);
  Terminal t = status(s);
  if (t != Terminal::None) return {s, t};
  LowState next = apply(s, action);
  refresh(next);
  Terminal nt = status(next);
  return {std::move(next), nt};
}

void Environment::validate(const LowState& s) const {
  if (s.width() <= 0 || s.height() <= 0) throw InvalidStateError("empty grid");
  for (const auto& key : aux_keys())
    if (!s.has_aux_key(key)) throw InvalidStateError(id() + " state lacks aux key '" + key + "'");
  for (const auto& [key, _] : s.aux()) {
    auto keys = aux_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw InvalidStateError(id() + " state has unknown aux key '" + key + "'");
  }
}

const pddl::Domain& Environment::domain() const {
  if (!domain_) {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (!domain_)
      domain_ = std::make_shared<const pddl::Domain>(
          pddl::parse_domain(read_text_file(asset_dir() + "/" + id() + "/domain.pddl")));
  }
  return *domain_;
}

namespace {

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
  if (out.empty() || !std::isalpha(static_cast<unsigned char>(out[0]))) out = "level_" + out;
  return out;
}

}  // namespace

pddl::Problem Environment::problem(const Level& level, const LowState& current) const {
  const auto& d = domain();
  std::ostringstream text;
  text << "(define (problem " << sanitize(level.name) << ") (:domain " << d.name << ")\n  (:objects";
  for (const auto& o : problem_objects(level)) text << " " << o.name << " - " << o.type;
  text << ")\n  (:init)\n  (:goal (and";
  for (const auto& g : level.goal.empty() ? default_goal(level) : level.goal) text << " " << g;
  text << ")))\n";
  pddl::Problem p = pddl::parse_problem(text.str(), d);
  p.init = wm::abstract(checkers(level), current, wm::candidate_atoms(d, p));
  return p;
}

std::string Environment::builtin_program_source() const {
  return read_text_file(asset_dir() + "/" + id() + "/program.py");
}

wm::TransitionProgram Environment::builtin_program() const {
  return wm::TransitionProgram(builtin_program_source(), 0, "builtin");
}

std::string Environment::description() const {
  return read_text_file(asset_dir() + "/" + id() + "/description.txt");
}

Level Environment::parse_level(std::string_view text) const {
  Level level;
  level.env_id = id();
  std::map<char, std::vector<std::string>> legend;
  for (const auto& [c, types] : default_legend()) legend[c] = types;
  std::vector<std::pair<std::string, std::vector<std::string>>> aux_lines;

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  bool in_grid = false;
  std::vector<std::string> rows;
  auto fail = [&](const std::string& msg) { throw LevelFormatError("line " + std::to_string(lineno) + ": " + msg); };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (in_grid) {
      rows.push_back(line);
      continue;
    }
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.empty() || trimmed[0] == ';') continue;
    if (trimmed.rfind("---", 0) == 0) {
      in_grid = true;
      continue;
    }
    auto colon = trimmed.find(':');
    if (colon == std::string::npos) fail("expected 'key: value'");
    std::string key = trimmed.substr(0, colon);
    std::string value = trimmed.substr(colon + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
    std::istringstream vs(value);
    if (key == "env") {
      if (value != id()) fail("level is for '" + value + "', not '" + id() + "'");
    } else if (key == "name") {
      level.name = value;
    } else if (key == "legend") {
      if (value.empty()) fail("empty legend entry");
      char c = value[0];
      std::istringstream rest(value.substr(1));
      std::vector<std::string> types;
      for (std::string t; rest >> t;)
        if (t != "=") types.push_back(t);
      if (types.empty()) fail(std::string("legend for '") + c + "' names no types");
      legend[c] = types;
    } else if (key == "goal") {
      level.goal.push_back(value);
    } else if (key == "region") {
      Region r;
      if (!(vs >> r.name >> r.x0 >> r.y0 >> r.x1 >> r.y1)) fail("region needs: name x0 y0 x1 y1");
      level.regions.push_back(r);
    } else if (key == "connect") {
      std::string a, b;
      if (!(vs >> a >> b)) fail("connect needs two region names");
      level.connections.emplace_back(a, b);
      level.connections.emplace_back(b, a);
    } else if (key == "aux") {
      std::string k;
      vs >> k;
      std::vector<std::string> vals;
      for (std::string v; vs >> v;) vals.push_back(v);
      aux_lines.emplace_back(k, vals);
    } else {
      fail("unknown header key '" + key + "'");
    }
  }
  while (!rows.empty() && rows.back().find_first_not_of(' ') == std::string::npos) rows.pop_back();
  if (rows.empty()) throw LevelFormatError("level has no grid");
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());

  LowState s(static_cast<int>(width), static_cast<int>(rows.size()), aux_keys());
  for (std::size_t y = 0; y < rows.size(); ++y)
    for (std::size_t x = 0; x < rows[y].size(); ++x) {
      char c = rows[y][x];
      if (c == ' ') continue;
      auto it = legend.find(c);
      if (it == legend.end())
        throw LevelFormatError(std::string("unknown grid character '") + c + "' at (" + std::to_string(x) + ", " +
                               std::to_string(y) + ")");
      for (const auto& t : it->second) s.add(t, {static_cast<int>(x), static_cast<int>(y)});
    }
  for (auto& [k, v] : aux_lines) {
    if (!s.has_aux_key(k)) throw LevelFormatError("unknown aux key '" + k + "'");
    s.set_aux(k, v);
  }
  for (const auto& r : level.regions)
    if (!s.in_bounds({r.x0, r.y0}) || !s.in_bounds({r.x1, r.y1}) || r.x0 > r.x1 || r.y0 > r.y1)
      throw LevelFormatError("region '" + r.name + "' is outside the grid");
  std::sort(level.connections.begin(), level.connections.end());
  level.connections.erase(std::unique(level.connections.begin(), level.connections.end()), level.connections.end());
  refresh(s);
  try {
    validate(s);
  } catch (const InvalidStateError& e) {
    throw LevelFormatError(e.what());
  }
  level.initial = std::move(s);
  if (level.name.empty()) level.name = id();
  return level;
}

Level Environment::load_level(const std::string& path) const {
  Level l = parse_level(read_text_file(path));
  if (l.name == id()) l.name = fs::path(path).stem().string();
  return l;
}

std::vector<std::string> Environment::shipped_level_paths() const {
  std::vector<std::string> out;
  fs::path dir = fs::path(asset_dir()) / id() / "levels";
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Level> Environment::shipped_levels() const {
  std::vector<Level> out;
  for (const auto& p : shipped_level_paths()) out.push_back(load_level(p));
  return out;
}

namespace {

/// Cell glyphs: default legend first, fresh characters for unseen combinations.
std::map<std::vector<std::string>, char> glyphs_for(
    const LowState& s, const std::vector<std::pair<char, std::vector<std::string>>>& legend,
    std::vector<std::pair<char, std::vector<std::string>>>* extra) {
  std::map<std::vector<std::string>, char> glyph;
  std::set<char> used{' '};
  for (const auto& [c, types] : legend) {
    auto sorted = types;
    std::sort(sorted.begin(), sorted.end());
    glyph.emplace(sorted, c);
    used.insert(c);
  }
  const std::string pool = "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ!$%&*+<>?^~";
  std::size_t next = 0;
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x) {
      auto types = s.types_at({x, y});
      if (types.empty() || glyph.count(types)) continue;
      while (next < pool.size() && used.count(pool[next])) ++next;
      char c = next < pool.size() ? pool[next++] : '?';
      used.insert(c);
      glyph.emplace(types, c);
      if (extra) extra->emplace_back(c, types);
    }
  return glyph;
}

std::string grid_text(const LowState& s, const std::map<std::vector<std::string>, char>& glyph) {
  std::string out;
  for (int y = 0; y < s.height(); ++y) {
    std::string row;
    for (int x = 0; x < s.width(); ++x) {
      auto types = s.types_at({x, y});
      row += types.empty() ? ' ' : glyph.at(types);
    }
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row + "\n";
  }
  return out;
}

}  // namespace

std::string Environment::render(const LowState& s) const {
  std::vector<std::pair<char, std::vector<std::string>>> extra;
  auto glyph = glyphs_for(s, default_legend(), &extra);
  std::string out = grid_text(s, glyph);
  for (const auto& [c, types] : extra) {
    out += std::string(1, c) + " =";
    for (const auto& t : types) out += " " + t;
    out += "\n";
  }
  for (const auto& [k, v] : s.aux()) {
    out += k + ":";
    for (const auto& x : v) out += " " + x;
    out += "\n";
  }
  return out;
}

std::string Environment::serialize_level(const Level& level) const {
  std::vector<std::pair<char, std::vector<std::string>>> extra;
  auto legend = default_legend();
  auto glyph = glyphs_for(level.initial, legend, &extra);
  std::ostringstream out;
  out << "env: " << id() << "\nname: " << level.name << "\n";
  for (const auto* list : {&legend, &extra})
    for (const auto& [c, types] : *list) {
      out << "legend: " << c;
      for (const auto& t : types) out << " " << t;
      out << "\n";
    }
  for (const auto& g : level.goal) out << "goal: " << g << "\n";
  for (const auto& r : level.regions)
    out << "region: " << r.name << " " << r.x0 << " " << r.y0 << " " << r.x1 << " " << r.y1 << "\n";
  for (const auto& [a, b] : level.connections)
    if (a < b) out << "connect: " << a << " " << b << "\n";
  for (const auto& [k, v] : level.initial.aux()) {
    if (v.empty() || k == "rules_formed" || k == "overlappables") continue;
    out << "aux: " << k;
    for (const auto& x : v) out << " " << x;
    out << "\n";
  }
  out << "---\n" << grid_text(level.initial, glyph);
  return out.str();
}

bool Environment::solvable(const LowState& start, std::size_t max_nodes) const {
  if (status(start) == Terminal::Win) return true;
  std::unordered_set<LowState, wm::LowStateHash> seen{start};
  std::deque<LowState> q{start};
  while (!q.empty()) {
    LowState s = std::move(q.front());
    q.pop_front();
    for (const auto& a : actions()) {
      EnvOutcome o = step(s, a);
      if (o.terminal == Terminal::Win) return true;
      if (o.terminal == Terminal::Loss) continue;
      if (seen.size() >= max_nodes) return false;
      if (seen.insert(o.state).second) q.push_back(std::move(o.state));
    }
  }
  return false;
}

std::unique_ptr<Environment> make_environment(std::string_view id) {
  if (id == "sokoban") return detail::make_sokoban();
  if (id == "pushboulders") return detail::make_pushboulders();
  if (id == "keke") return detail::make_keke();
  if (id == "clusterbox") return detail::make_clusterbox();
  if (id == "babyai") return detail::make_babyai();
  throw std::invalid_argument("unknown environment '" + std::string(id) + "'");
}

const std::vector<std::string>& environment_ids() {
  static const std::vector<std::string> ids{"sokoban", "pushboulders", "keke", "clusterbox", "babyai"};
  return ids;
}

// ---- helpers ----

namespace detail {

std::string suffix_after(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0 ? s.substr(prefix.size()) : std::string();
}

LowState walled_room(int w, int h, const std::vector<std::string>& aux_keys, const std::string& wall) {
  LowState s(w, h, aux_keys);
  for (int x = 0; x < w; ++x) {
    s.add(wall, {x, 0});
    if (h > 1) s.add(wall, {x, h - 1});
  }
  for (int y = 1; y + 1 < h; ++y) {
    s.add(wall, {0, y});
    if (w > 1) s.add(wall, {w - 1, y});
  }
  return s;
}

std::vector<Coord> empty_cells(const LowState& s) {
  std::vector<Coord> out;
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x)
      if (s.types_at({x, y}).empty()) out.push_back({x, y});
  return out;
}

Coord take(std::mt19937_64& rng, std::vector<Coord>& pool) {
  std::size_t i = pick(rng, pool.size());
  Coord c = pool[i];
  pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
  return c;
}

int manhattan(Coord a, Coord b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

}  // namespace detail

}  // namespace groundwork::env
