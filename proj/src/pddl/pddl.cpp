#include "groundwork/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace groundwork::pddl {

ParseError::ParseError(const std::string& what, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": " + what),
      line_(line),
      column_(column) {}

UnsupportedError::UnsupportedError(const std::string& construct, int line, int column)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         ": unsupported construct '" + construct + "'"),
      construct_(construct) {}

std::string Atom::str() const {
  std::string out = "(" + predicate;
  for (const auto& a : args) out += " " + a;
  return out + ")";
}

std::string Literal::str() const { return positive ? atom.str() : "(not " + atom.str() + ")"; }

namespace {

struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  int line = 1;
  int column = 1;

  bool is_atom(std::string_view s) const { return !is_list && atom == s; }
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  SExpr read_top() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("empty input", line_, col_);
    SExpr e = read();
    skip_ws();
    if (pos_ < text_.size()) throw ParseError("trailing input after top-level expression", line_, col_);
    return e;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  SExpr read() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input (missing ')')", line_, col_);
    SExpr e;
    e.line = line_;
    e.column = col_;
    char c = text_[pos_];
    if (c == ')') throw ParseError("unexpected ')'", line_, col_);
    if (c == '(') {
      e.is_list = true;
      advance();
      for (;;) {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of input (missing ')')", line_, col_);
        if (text_[pos_] == ')') {
          advance();
          break;
        }
        e.items.push_back(read());
      }
      return e;
    }
    std::string tok;
    while (pos_ < text_.size()) {
      char ch = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(ch)) || ch == '(' || ch == ')' || ch == ';') break;
      tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      advance();
    }
    e.atom = std::move(tok);
    return e;
  }
};

[[noreturn]] void fail(const SExpr& at, const std::string& msg) { throw ParseError(msg, at.line, at.column); }
[[noreturn]] void unsupported(const SExpr& at, const std::string& what) {
  throw UnsupportedError(what, at.line, at.column);
}

const std::string& expect_name(const SExpr& e, const char* what) {
  if (e.is_list || e.atom.empty() || e.atom[0] == '?' || e.atom[0] == ':')
    fail(e, std::string("expected ") + what);
  return e.atom;
}

// "(?a ?b - t ?c)" or "(a b - t)" style typed lists.
std::vector<TypedName> read_typed_list(const std::vector<SExpr>& items, std::size_t begin, bool variables) {
  std::vector<TypedName> out;
  std::vector<std::string> pending;
  for (std::size_t i = begin; i < items.size(); ++i) {
    const SExpr& e = items[i];
    if (e.is_list) {
      if (!e.items.empty() && e.items[0].is_atom("either")) unsupported(e, "either");
      fail(e, "unexpected list in typed list");
    }
    if (e.atom == "-") {
      if (i + 1 >= items.size()) fail(e, "missing type after '-'");
      const SExpr& t = items[++i];
      if (t.is_list) {
        if (!t.items.empty() && t.items[0].is_atom("either")) unsupported(t, "either");
        fail(t, "expected type name");
      }
      if (pending.empty()) fail(e, "'-' without preceding names");
      for (auto& n : pending) out.push_back({std::move(n), t.atom});
      pending.clear();
      continue;
    }
    bool is_var = !e.atom.empty() && e.atom[0] == '?';
    if (variables != is_var) fail(e, variables ? "expected variable" : "expected name");
    pending.push_back(e.atom);
  }
  for (auto& n : pending) out.push_back({std::move(n), "object"});
  return out;
}

const char* const kUnsupportedHeads[] = {"or",        "imply",    "exists", "forall",   "when",
                                         "increase",  "decrease", "assign", "scale-up", "scale-down",
                                         "=",         "<",        ">",      "<=",       ">=",
                                         "either",    "preference"};

bool is_unsupported_head(std::string_view head) {
  for (const char* h : kUnsupportedHeads)
    if (head == h) return true;
  return false;
}

Atom read_atom(const SExpr& e) {
  if (!e.is_list || e.items.empty()) fail(e, "expected atom '(predicate args...)'");
  const SExpr& head = e.items[0];
  if (head.is_list) fail(head, "expected predicate name");
  if (is_unsupported_head(head.atom)) unsupported(head, head.atom);
  // "at"/"over" are ordinary predicate names unless used as timed qualifiers.
  if (e.items.size() == 3 && !e.items[1].is_list && e.items[2].is_list &&
      ((head.atom == "at" && (e.items[1].atom == "start" || e.items[1].atom == "end")) ||
       (head.atom == "over" && e.items[1].atom == "all")))
    unsupported(head, head.atom + " " + e.items[1].atom);
  Atom a;
  a.predicate = expect_name(head, "predicate name");
  for (std::size_t i = 1; i < e.items.size(); ++i) {
    const SExpr& arg = e.items[i];
    if (arg.is_list) unsupported(arg, "nested term");
    a.args.push_back(arg.atom);
  }
  return a;
}

Literal read_literal(const SExpr& e) {
  if (e.is_list && !e.items.empty() && e.items[0].is_atom("not")) {
    if (e.items.size() != 2) fail(e, "'not' takes exactly one argument");
    const SExpr& inner = e.items[1];
    if (inner.is_list && !inner.items.empty() && !inner.items[0].is_list &&
        (inner.items[0].atom == "not" || inner.items[0].atom == "and"))
      unsupported(inner, "nested " + inner.items[0].atom + " under not");
    return {read_atom(inner), false};
  }
  return {read_atom(e), true};
}

// Conjunction of literals; "()" is the empty conjunction.
std::vector<Literal> read_conjunction(const SExpr& e) {
  std::vector<Literal> out;
  if (!e.is_list) fail(e, "expected formula");
  if (e.items.empty()) return out;
  if (e.items[0].is_atom("and")) {
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      const SExpr& c = e.items[i];
      if (c.is_list && !c.items.empty() && c.items[0].is_atom("and")) {
        auto nested = read_conjunction(c);
        out.insert(out.end(), nested.begin(), nested.end());
      } else {
        out.push_back(read_literal(c));
      }
    }
    return out;
  }
  out.push_back(read_literal(e));
  return out;
}

void check_header(const SExpr& top, const char* kind, std::string& name_out) {
  if (!top.is_list || top.items.size() < 2 || !top.items[0].is_atom("define"))
    fail(top, "expected '(define ...)'");
  const SExpr& hdr = top.items[1];
  if (!hdr.is_list || hdr.items.size() != 2 || !hdr.items[0].is_atom(kind))
    fail(hdr, std::string("expected '(") + kind + " <name>)'");
  name_out = expect_name(hdr.items[1], "name");
}

const std::set<std::string>& supported_requirements() {
  static const std::set<std::string> reqs = {":strips", ":typing", ":negative-preconditions"};
  return reqs;
}

void validate_literal_args(const Domain& d, const Atom& a, const std::set<std::string>& vars,
                           const std::string& where) {
  const PredicateSchema* p = d.find_predicate(a.predicate);
  if (!p) throw ValidationError(where + ": undeclared predicate '" + a.predicate + "'");
  if (p->arity() != a.args.size())
    throw ValidationError(where + ": predicate '" + a.predicate + "' expects " +
                          std::to_string(p->arity()) + " argument(s), got " + std::to_string(a.args.size()));
  for (const auto& arg : a.args) {
    if (!arg.empty() && arg[0] == '?') {
      if (!vars.count(arg)) throw ValidationError(where + ": unbound variable '" + arg + "'");
    } else {
      bool is_const = std::any_of(d.constants.begin(), d.constants.end(),
                                  [&](const TypedName& c) { return c.name == arg; });
      if (!is_const) throw ValidationError(where + ": unknown constant '" + arg + "'");
    }
  }
}

}  // namespace

bool Domain::has_type(std::string_view type) const {
  if (type == "object") return true;
  return std::any_of(types.begin(), types.end(), [&](const auto& t) { return t.first == type; });
}

bool Domain::is_subtype(std::string_view type, std::string_view ancestor) const {
  if (ancestor == "object") return true;
  std::string_view cur = type;
  for (std::size_t guard = 0; guard <= types.size(); ++guard) {
    if (cur == ancestor) return true;
    if (cur == "object") return false;
    auto it = std::find_if(types.begin(), types.end(), [&](const auto& t) { return t.first == cur; });
    if (it == types.end()) return false;
    cur = it->second;
  }
  return false;
}

const PredicateSchema* Domain::find_predicate(std::string_view name) const {
  for (const auto& p : predicates)
    if (p.name == name) return &p;
  return nullptr;
}

const OperatorSchema* Domain::find_operator(std::string_view name) const {
  for (const auto& o : operators)
    if (o.name == name) return &o;
  return nullptr;
}

const TypedName* Problem::find_object(std::string_view name) const {
  for (const auto& o : objects)
    if (o.name == name) return &o;
  return nullptr;
}

std::vector<std::string> Problem::objects_of_type(const Domain& domain, std::string_view type) const {
  std::vector<std::string> out;
  for (const auto& c : domain.constants)
    if (domain.is_subtype(c.type, type)) out.push_back(c.name);
  for (const auto& o : objects)
    if (domain.is_subtype(o.type, type)) out.push_back(o.name);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string GroundedOperator::label() const {
  std::string out = schema;
  for (const auto& a : args) out += " " + a;
  return out;
}

std::vector<Literal> GroundedOperator::effect_literals() const {
  std::vector<Literal> out;
  for (const auto& a : add_effects) out.push_back({a, true});
  for (const auto& a : del_effects) out.push_back({a, false});
  return out;
}

Domain parse_domain(std::string_view text) {
  Reader reader(text);
  SExpr top = reader.read_top();
  Domain d;
  check_header(top, "domain", d.name);

  std::vector<const SExpr*> action_exprs;
  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const SExpr& sec = top.items[i];
    if (!sec.is_list || sec.items.empty() || sec.items[0].is_list) fail(sec, "expected domain section");
    const std::string& key = sec.items[0].atom;
    if (key == ":requirements") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& r = sec.items[j];
        if (r.is_list) fail(r, "expected requirement keyword");
        if (!supported_requirements().count(r.atom)) unsupported(r, "requirement " + r.atom);
        d.requirements.push_back(r.atom);
      }
    } else if (key == ":types") {
      for (auto& t : read_typed_list(sec.items, 1, false)) {
        if (t.name == "object") continue;
        d.types.emplace_back(t.name, t.type);
      }
    } else if (key == ":constants") {
      d.constants = read_typed_list(sec.items, 1, false);
    } else if (key == ":predicates") {
      for (std::size_t j = 1; j < sec.items.size(); ++j) {
        const SExpr& p = sec.items[j];
        if (!p.is_list || p.items.empty()) fail(p, "expected predicate declaration");
        PredicateSchema ps;
        ps.name = expect_name(p.items[0], "predicate name");
        ps.params = read_typed_list(p.items, 1, true);
        if (d.find_predicate(ps.name)) fail(p, "duplicate predicate '" + ps.name + "'");
        d.predicates.push_back(std::move(ps));
      }
    } else if (key == ":action") {
      action_exprs.push_back(&sec);
    } else if (key == ":functions" || key == ":derived" || key == ":durative-action" ||
               key == ":constraints") {
      unsupported(sec.items[0], key);
    } else {
      fail(sec.items[0], "unknown domain section '" + key + "'");
    }
  }

  // Types referenced as parents must exist.
  for (const auto& [t, parent] : d.types)
    if (!d.has_type(parent)) throw ValidationError("type '" + t + "' has undeclared parent '" + parent + "'");
  for (const auto& c : d.constants)
    if (!d.has_type(c.type)) throw ValidationError("constant '" + c.name + "' has undeclared type '" + c.type + "'");
  for (const auto& p : d.predicates)
    for (const auto& param : p.params)
      if (!d.has_type(param.type))
        throw ValidationError("predicate '" + p.name + "' uses undeclared type '" + param.type + "'");

  for (const SExpr* ap : action_exprs) {
    const SExpr& sec = *ap;
    if (sec.items.size() < 2) fail(sec, "action without name");
    OperatorSchema op;
    op.name = expect_name(sec.items[1], "action name");
    for (std::size_t j = 2; j < sec.items.size(); ++j) {
      const SExpr& k = sec.items[j];
      if (k.is_list) fail(k, "expected action keyword");
      if (j + 1 >= sec.items.size()) fail(k, "missing value for " + k.atom);
      const SExpr& v = sec.items[++j];
      if (k.atom == ":parameters") {
        if (!v.is_list) fail(v, "expected parameter list");
        op.params = read_typed_list(v.items, 0, true);
      } else if (k.atom == ":precondition") {
        op.preconditions = read_conjunction(v);
      } else if (k.atom == ":effect") {
        for (auto& lit : read_conjunction(v)) {
          (lit.positive ? op.add_effects : op.del_effects).push_back(std::move(lit.atom));
        }
      } else {
        unsupported(k, k.atom);
      }
    }
    if (d.find_operator(op.name)) fail(sec, "duplicate action '" + op.name + "'");
    std::set<std::string> vars;
    for (const auto& p : op.params) {
      if (!d.has_type(p.type))
        throw ValidationError("action '" + op.name + "' parameter " + p.name + " has undeclared type '" + p.type + "'");
      vars.insert(p.name);
    }
    const std::string where = "action '" + op.name + "'";
    for (const auto& l : op.preconditions) validate_literal_args(d, l.atom, vars, where);
    for (const auto& a : op.add_effects) validate_literal_args(d, a, vars, where);
    for (const auto& a : op.del_effects) validate_literal_args(d, a, vars, where);
    for (const auto& a : op.add_effects)
      if (std::find(op.del_effects.begin(), op.del_effects.end(), a) != op.del_effects.end())
        throw ValidationError(where + ": " + a.str() + " is both added and deleted");
    d.operators.push_back(std::move(op));
  }
  return d;
}

namespace {

void validate_ground_atom(const Domain& d, const Problem& p, const Atom& a, const std::string& where) {
  const PredicateSchema* ps = d.find_predicate(a.predicate);
  if (!ps) throw ValidationError(where + ": undeclared predicate '" + a.predicate + "'");
  if (ps->arity() != a.args.size())
    throw ValidationError(where + ": predicate '" + a.predicate + "' expects " + std::to_string(ps->arity()) +
                          " argument(s), got " + std::to_string(a.args.size()));
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    const std::string& arg = a.args[i];
    std::string type;
    if (const TypedName* o = p.find_object(arg)) {
      type = o->type;
    } else {
      auto it = std::find_if(d.constants.begin(), d.constants.end(),
                             [&](const TypedName& c) { return c.name == arg; });
      if (it == d.constants.end()) throw ValidationError(where + ": undeclared object '" + arg + "'");
      type = it->type;
    }
    if (!d.is_subtype(type, ps->params[i].type))
      throw ValidationError(where + ": object '" + arg + "' of type '" + type + "' does not match parameter type '" +
                            ps->params[i].type + "' of '" + a.predicate + "'");
  }
}

}  // namespace

Problem parse_problem(std::string_view text, const Domain& domain) {
  Reader reader(text);
  SExpr top = reader.read_top();
  Problem p;
  check_header(top, "problem", p.name);
  const SExpr* init = nullptr;
  const SExpr* goal = nullptr;
  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const SExpr& sec = top.items[i];
    if (!sec.is_list || sec.items.empty() || sec.items[0].is_list) fail(sec, "expected problem section");
    const std::string& key = sec.items[0].atom;
    if (key == ":domain") {
      if (sec.items.size() != 2) fail(sec, "expected '(:domain <name>)'");
      p.domain_name = expect_name(sec.items[1], "domain name");
    } else if (key == ":objects") {
      p.objects = read_typed_list(sec.items, 1, false);
    } else if (key == ":init") {
      init = &sec;
    } else if (key == ":goal") {
      if (sec.items.size() != 2) fail(sec, "expected '(:goal <formula>)'");
      goal = &sec;
    } else if (key == ":requirements") {
      for (std::size_t j = 1; j < sec.items.size(); ++j)
        if (!sec.items[j].is_list && !supported_requirements().count(sec.items[j].atom))
          unsupported(sec.items[j], "requirement " + sec.items[j].atom);
    } else if (key == ":metric" || key == ":constraints") {
      unsupported(sec.items[0], key);
    } else {
      fail(sec.items[0], "unknown problem section '" + key + "'");
    }
  }
  if (!p.domain_name.empty() && p.domain_name != domain.name)
    throw ValidationError("problem refers to domain '" + p.domain_name + "' but domain is '" + domain.name + "'");
  std::set<std::string> seen;
  for (const auto& o : p.objects) {
    if (!domain.has_type(o.type))
      throw ValidationError("object '" + o.name + "' has undeclared type '" + o.type + "'");
    if (!seen.insert(o.name).second) throw ValidationError("duplicate object '" + o.name + "'");
  }
  if (init) {
    for (std::size_t j = 1; j < init->items.size(); ++j) {
      const SExpr& e = init->items[j];
      if (e.is_list && !e.items.empty() && e.items[0].is_atom("not"))
        fail(e, "negative literals are not allowed in :init");
      Atom a = read_atom(e);
      validate_ground_atom(domain, p, a, ":init");
      p.init.insert(std::move(a));
    }
  }
  if (goal) {
    p.goal = read_conjunction(goal->items[1]);
    for (const auto& l : p.goal) validate_ground_atom(domain, p, l.atom, ":goal");
  }
  return p;
}

std::vector<GroundedOperator> ground(const Domain& domain, const Problem& problem) {
  std::vector<GroundedOperator> out;
  for (const auto& op : domain.operators) {
    std::vector<std::vector<std::string>> candidates;
    candidates.reserve(op.params.size());
    bool empty = false;
    for (const auto& param : op.params) {
      candidates.push_back(problem.objects_of_type(domain, param.type));
      if (candidates.back().empty()) empty = true;
    }
    if (empty) continue;

    std::vector<std::size_t> idx(op.params.size(), 0);
    std::map<std::string, std::string> binding;
    auto bind_atom = [&](const Atom& a) {
      Atom g{a.predicate, {}};
      g.args.reserve(a.args.size());
      for (const auto& arg : a.args) {
        auto it = binding.find(arg);
        g.args.push_back(it == binding.end() ? arg : it->second);
      }
      return g;
    };
    for (;;) {
      GroundedOperator g;
      g.schema = op.name;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        g.args.push_back(candidates[i][idx[i]]);
        binding[op.params[i].name] = g.args.back();
      }
      for (const auto& l : op.preconditions) g.preconditions.push_back({bind_atom(l.atom), l.positive});
      for (const auto& a : op.add_effects) g.add_effects.push_back(bind_atom(a));
      for (const auto& a : op.del_effects) g.del_effects.push_back(bind_atom(a));
      out.push_back(std::move(g));

      // Odometer increment, last parameter fastest -> lexicographic order.
      bool done = true;
      for (std::size_t k = idx.size(); k-- > 0;) {
        if (++idx[k] < candidates[k].size()) {
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

bool holds(const AbstractState& state, const std::vector<Literal>& literals) {
  for (const auto& l : literals)
    if ((state.count(l.atom) > 0) != l.positive) return false;
  return true;
}

namespace {

std::string typed_list(const std::vector<TypedName>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += " ";
    out += names[i].name + " - " + names[i].type;
  }
  return out;
}

std::string conjunction(const std::vector<Literal>& lits) {
  if (lits.empty()) return "()";
  if (lits.size() == 1) return lits[0].str();
  std::string out = "(and";
  for (const auto& l : lits) out += " " + l.str();
  return out + ")";
}

}  // namespace

std::string serialize(const Domain& d) {
  std::ostringstream os;
  os << "(define (domain " << d.name << ")\n";
  if (!d.requirements.empty()) {
    os << "  (:requirements";
    for (const auto& r : d.requirements) os << " " << r;
    os << ")\n";
  }
  if (!d.types.empty()) {
    os << "  (:types";
    for (const auto& [t, parent] : d.types) os << " " << t << " - " << parent;
    os << ")\n";
  }
  if (!d.constants.empty()) os << "  (:constants " << typed_list(d.constants) << ")\n";
  os << "  (:predicates";
  for (const auto& p : d.predicates) {
    os << "\n    (" << p.name;
    if (!p.params.empty()) os << " " << typed_list(p.params);
    os << ")";
  }
  os << ")\n";
  for (const auto& op : d.operators) {
    os << "  (:action " << op.name << "\n";
    os << "    :parameters (" << typed_list(op.params) << ")\n";
    os << "    :precondition " << conjunction(op.preconditions) << "\n";
    std::vector<Literal> eff;
    for (const auto& a : op.add_effects) eff.push_back({a, true});
    for (const auto& a : op.del_effects) eff.push_back({a, false});
    os << "    :effect " << conjunction(eff) << ")\n";
  }
  os << ")\n";
  return os.str();
}

std::string serialize(const Problem& p) {
  std::ostringstream os;
  os << "(define (problem " << p.name << ")\n";
  if (!p.domain_name.empty()) os << "  (:domain " << p.domain_name << ")\n";
  os << "  (:objects " << typed_list(p.objects) << ")\n";
  os << "  (:init";
  for (const auto& a : p.init) os << "\n    " << a.str();
  os << ")\n";
  os << "  (:goal " << conjunction(p.goal) << "))\n";
  return os.str();
}

Atom parse_atom(std::string_view text) {
  std::string s(text);
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw ValidationError("empty atom");
  if (s[first] != '(') s = "(" + s + ")";
  Reader reader(s);
  return read_atom(reader.read_top());
}

}  // namespace groundwork::pddl
