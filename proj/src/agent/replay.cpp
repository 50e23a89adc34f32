#include "groundwork/replay.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace groundwork::agent {

std::string to_string(Origin o) {
  switch (o) {
    case Origin::Predicted: return "predicted";
    case Origin::Actual: return "actual";
    case Origin::Warmup: return "random-warmup";
    case Origin::Exploration: return "exploration";
  }
  return "actual";
}

std::string py_list(const std::vector<std::string>& items) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i];
  }
  return out + "]";
}

std::string py_coords(const std::vector<wm::Coord>& coords) {
  std::vector<std::string> items;
  for (auto c : coords) items.push_back("[" + std::to_string(c.x) + ", " + std::to_string(c.y) + "]");
  return py_list(items);
}

namespace {

std::vector<std::string> quoted(const std::vector<std::string>& v) {
  std::vector<std::string> out;
  for (const auto& s : v) out.push_back("'" + s + "'");
  return out;
}

std::vector<std::string> coord_items(const std::vector<wm::Coord>& v) {
  std::vector<std::string> out;
  for (auto c : v) out.push_back("[" + std::to_string(c.x) + ", " + std::to_string(c.y) + "]");
  return out;
}

// Multiset differences of sorted lists.
std::vector<std::string> minus(std::vector<std::string> a, std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::string> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

KeyDiff make_diff(const std::string& key, bool aux, std::vector<std::string> p, std::vector<std::string> a) {
  KeyDiff d;
  d.key = key;
  d.aux = aux;
  d.missing = minus(a, p);
  d.extra = minus(p, a);
  d.predicted = std::move(p);
  d.actual = std::move(a);
  return d;
}

}  // namespace

StateDiff diff_states(const LowState& predicted, const LowState& actual) {
  StateDiff out;
  if (predicted.width() != actual.width() || predicted.height() != actual.height()) {
    out.keys.push_back(make_diff("width", true, {std::to_string(predicted.width())}, {std::to_string(actual.width())}));
    out.keys.push_back(
        make_diff("height", true, {std::to_string(predicted.height())}, {std::to_string(actual.height())}));
  }
  std::set<std::string> keys;
  for (const auto& [k, _] : predicted.objects()) keys.insert(k);
  for (const auto& [k, _] : actual.objects()) keys.insert(k);
  std::set<std::string> aux_keys;
  for (const auto& [k, _] : predicted.aux()) aux_keys.insert(k);
  for (const auto& [k, _] : actual.aux()) aux_keys.insert(k);

  auto find_same = [](const LowState& s, const std::vector<wm::Coord>& coords, const std::string& skip) {
    for (const auto& [k, v] : s.objects())
      if (k != skip && v == coords) return k;
    return std::string();
  };

  std::set<std::string> explained;
  for (const auto& k : keys) {
    bool in_p = !predicted.coords(k).empty(), in_a = !actual.coords(k).empty();
    if (in_p && !in_a) {
      std::string j = find_same(actual, predicted.coords(k), k);
      if (!j.empty()) {
        out.coincidences.push_back({k, j});
        explained.insert(k);
      }
    } else if (in_a && !in_p) {
      std::string j = find_same(predicted, actual.coords(k), k);
      if (!j.empty()) {
        out.coincidences.push_back({k, j});
        explained.insert(k);
      }
    }
  }

  std::set<std::string> all(keys);
  all.insert(aux_keys.begin(), aux_keys.end());
  for (const auto& k : all) {
    if (aux_keys.count(k)) {
      if (predicted.aux(k) != actual.aux(k)) out.keys.push_back(make_diff(k, true, quoted(predicted.aux(k)), quoted(actual.aux(k))));
      continue;
    }
    if (explained.count(k) || predicted.coords(k) == actual.coords(k)) continue;
    out.keys.push_back(make_diff(k, false, coord_items(predicted.coords(k)), coord_items(actual.coords(k))));
  }
  return out;
}

std::string render_diff(const StateDiff& diff) {
  std::ostringstream os;
  bool first = true;
  auto sep = [&] {
    if (!first) os << "\n";
    first = false;
  };
  for (const auto& d : diff.keys) {
    sep();
    std::string q = "\"" + d.key + "\": ";
    if (d.predicted.empty() || d.actual.empty()) {
      os << q << "predicted: " << py_list(d.predicted) << "\n";
      os << q << "actual: " << py_list(d.actual) << "\n";
    } else {
      if (!d.missing.empty()) os << q << "Missing: " << py_list(d.missing) << "\n";
      if (!d.extra.empty()) os << q << "Extra: " << py_list(d.extra) << "\n";
    }
  }
  for (const auto& c : diff.coincidences) {
    sep();
    os << "Key mismatch: \"" << c.missing_key << "\" is missing, but \"" << c.other_key
       << "\" has the same coordinates.\n";
  }
  return os.str();
}

std::optional<Mismatch> detect_mismatch(const ReplayBuffer& predicted, const ReplayBuffer& actual) {
  std::size_t n = std::min(predicted.size(), actual.size());
  auto context = [&](Mismatch& m, std::size_t i) {
    const ReplayBuffer& src = i < actual.size() ? actual : predicted;
    m.index = i;
    m.label = src[i].label;
    std::size_t begin = i;
    while (begin > 0 && src[begin - 1].label == m.label) --begin;
    m.segment_offset = i - begin;
    m.segment_start = src[begin].state;
    for (std::size_t j = begin; j <= i; ++j) m.segment_actions.push_back(src[j].action);
    m.before = src[i].state;
    m.action = src[i].action;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (predicted[i].next == actual[i].next) continue;
    Mismatch m;
    context(m, i);
    m.predicted = predicted[i].next;
    m.actual = actual[i].next;
    m.diff = diff_states(m.predicted, m.actual);
    return m;
  }
  if (predicted.size() == actual.size()) return std::nullopt;
  Mismatch m;
  m.truncated = true;
  if (predicted.size() > actual.size()) {
    context(m, n);
    m.label = predicted[n].label;
    m.predicted = predicted[n].next;
    m.actual = n ? actual[n - 1].next : predicted[n].state;
  } else {
    context(m, n);
    m.predicted = n ? predicted[n - 1].next : actual[n].state;
    m.actual = actual[n].next;
  }
  m.diff = diff_states(m.predicted, m.actual);
  return m;
}

}  // namespace groundwork::agent
