#include <map>
#include <set>
#include <unordered_set>

#include "ast.hpp"
#include "lexer.hpp"

namespace groundwork::script {

namespace {

[[noreturn]] void syntax_error(const std::string& msg, int line) {
  throw ScriptError(ErrorKind::Syntax, "SyntaxError", msg, line);
}

const std::unordered_set<std::string> kKeywords = {
    "False", "None",   "True",     "and",    "as",   "assert", "async", "await",  "break",
    "class", "continue", "def",    "del",    "elif", "else",   "except", "finally", "for",
    "from",  "global", "if",       "import", "in",   "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",    "return", "try",  "while",  "with",  "yield"};

template <class T, class... Args>
std::unique_ptr<T> make(Args&&... args) {
  return std::make_unique<T>(std::forward<Args>(args)...);
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens, int line_offset = 0)
      : toks_(std::move(tokens)), line_offset_(line_offset) {}

  std::unique_ptr<ModuleAst> module() {
    auto m = std::make_unique<ModuleAst>();
    while (!at(Tok::End)) {
      if (at(Tok::Newline)) {
        ++pos_;
        continue;
      }
      if (at(Tok::Indent)) syntax_error("unexpected indent", line());
      statement(m->body);
    }
    return m;
  }

  ExprPtr standalone_expression() {
    while (at(Tok::Newline)) ++pos_;
    ExprPtr e = testlist();
    while (at(Tok::Newline)) ++pos_;
    if (!at(Tok::End)) syntax_error("unexpected token in expression", line());
    return e;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int line_offset_;
  int loop_depth_ = 0;
  int func_depth_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  int line() const { return cur().line + line_offset_; }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_op(std::string_view op) const { return cur().kind == Tok::Op && cur().text == op; }
  bool at_kw(std::string_view kw) const { return cur().kind == Tok::Name && cur().text == kw; }

  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) syntax_error("expected '" + std::string(op) + "'" + near(), line());
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) syntax_error("expected '" + std::string(kw) + "'" + near(), line());
  }
  std::string near() const {
    if (at(Tok::Newline)) return " before end of line";
    if (at(Tok::End)) return " before end of input";
    if (at(Tok::Indent)) return " before indent";
    if (at(Tok::Dedent)) return " before dedent";
    return " near '" + cur().text + "'";
  }
  std::string identifier() {
    if (!at(Tok::Name) || kKeywords.count(cur().text)) syntax_error("expected identifier" + near(), line());
    return toks_[pos_++].text;
  }
  void end_of_statement() {
    if (accept_op(";")) return;
    if (at(Tok::Newline)) {
      ++pos_;
      return;
    }
    if (at(Tok::End) || at(Tok::Dedent)) return;
    syntax_error("invalid syntax" + near(), line());
  }

  // ---- statements ----

  void statement(Block& out) {
    const int ln = line();
    if (at(Tok::Name)) {
      const std::string& w = cur().text;
      if (w == "if") return if_stmt(out);
      if (w == "while") return while_stmt(out);
      if (w == "for") return for_stmt(out);
      if (w == "def") return def_stmt(out);
      if (w == "try") return try_stmt(out);
      if (w == "class") syntax_error("class definitions are not supported", ln);
      if (w == "with") syntax_error("'with' statements are not supported", ln);
      if (w == "async") syntax_error("async code is not supported", ln);
    }
    if (at_op("@")) syntax_error("decorators are not supported", ln);
    simple_statements(out);
  }

  void simple_statements(Block& out) {
    for (;;) {
      out.push_back(simple_statement());
      if (accept_op(";")) {
        if (at(Tok::Newline) || at(Tok::End)) break;
        continue;
      }
      break;
    }
    if (at(Tok::Newline)) {
      ++pos_;
    } else if (!at(Tok::End) && !at(Tok::Dedent)) {
      syntax_error("invalid syntax" + near(), line());
    }
  }

  StmtPtr simple_statement() {
    const int ln = line();
    if (accept_kw("pass")) return make<SimpleStmt>(StmtKind::Pass, ln);
    if (accept_kw("break")) {
      if (loop_depth_ == 0) syntax_error("'break' outside loop", ln);
      return make<SimpleStmt>(StmtKind::Break, ln);
    }
    if (accept_kw("continue")) {
      if (loop_depth_ == 0) syntax_error("'continue' not properly in loop", ln);
      return make<SimpleStmt>(StmtKind::Continue, ln);
    }
    if (accept_kw("return")) {
      if (func_depth_ == 0) syntax_error("'return' outside function", ln);
      auto s = make<ReturnStmt>(ln);
      if (!at(Tok::Newline) && !at_op(";") && !at(Tok::End) && !at(Tok::Dedent)) s->value = testlist();
      return s;
    }
    if (accept_kw("raise")) {
      auto s = make<RaiseStmt>(ln);
      if (!at(Tok::Newline) && !at_op(";") && !at(Tok::End) && !at(Tok::Dedent)) {
        s->exc = test();
        if (accept_kw("from")) test();
      }
      return s;
    }
    if (accept_kw("global") || accept_kw("nonlocal")) {
      const bool is_global = toks_[pos_ - 1].text == "global";
      auto s = make<GlobalStmt>(ln);
      do s->names.push_back(identifier());
      while (accept_op(","));
      if (!is_global) {
        for (auto& n : s->names) n = "\x01" + n;  // marks nonlocal for the resolver
      }
      return s;
    }
    if (accept_kw("del")) {
      auto s = make<DelStmt>(ln);
      do {
        ExprPtr t = bitor_expr();
        check_target(*t, true);
        s->targets.push_back(std::move(t));
      } while (accept_op(",") && !at(Tok::Newline));
      return s;
    }
    if (accept_kw("assert")) {
      auto s = make<AssertStmt>(ln);
      s->test = test();
      if (accept_op(",")) s->msg = test();
      return s;
    }
    if (at_kw("import") || at_kw("from")) return import_stmt();
    if (at_kw("yield")) syntax_error("generators are not supported", ln);

    ExprPtr first = testlist(true);
    if (at_op(":") && first->kind == ExprKind::Name) {
      // Annotated assignment; the annotation is ignored.
      ++pos_;
      test();
      if (!accept_op("=")) return make<SimpleStmt>(StmtKind::Pass, ln);
      auto s = make<AssignStmt>(ln);
      s->targets.push_back(std::move(first));
      s->value = testlist(true);
      return s;
    }
    if (at_op("=")) {
      auto s = make<AssignStmt>(ln);
      check_target(*first, false);
      s->targets.push_back(std::move(first));
      while (accept_op("=")) {
        ExprPtr next = testlist(true);
        if (at_op("=")) {
          check_target(*next, false);
          s->targets.push_back(std::move(next));
        } else {
          s->value = std::move(next);
        }
      }
      return s;
    }
    static const std::map<std::string, BinOpKind, std::less<>> kAug = {
        {"+=", BinOpKind::Add},      {"-=", BinOpKind::Sub},     {"*=", BinOpKind::Mul},
        {"/=", BinOpKind::Div},      {"//=", BinOpKind::FloorDiv}, {"%=", BinOpKind::Mod},
        {"**=", BinOpKind::Pow},     {"&=", BinOpKind::BitAnd},  {"|=", BinOpKind::BitOr},
        {"^=", BinOpKind::BitXor},   {"<<=", BinOpKind::LShift}, {">>=", BinOpKind::RShift}};
    if (at(Tok::Op)) {
      auto it = kAug.find(cur().text);
      if (it != kAug.end()) {
        ++pos_;
        if (first->kind != ExprKind::Name && first->kind != ExprKind::Subscript)
          syntax_error("illegal expression for augmented assignment", ln);
        auto s = make<AugAssignStmt>(ln);
        s->target = std::move(first);
        s->op = it->second;
        s->value = testlist();
        return s;
      }
    }
    return make<ExprStmt>(std::move(first), ln);
  }

  void check_target(const Expr& e, bool for_del) {
    switch (e.kind) {
      case ExprKind::Name:
      case ExprKind::Subscript:
        return;
      case ExprKind::Attribute:
        syntax_error("attribute assignment is not supported", e.line);
      case ExprKind::Tuple:
      case ExprKind::List:
        for (const auto& item : static_cast<const SeqExpr&>(e).items) check_target(*item, for_del);
        return;
      default:
        syntax_error(for_del ? "cannot delete expression" : "cannot assign to expression", e.line);
    }
  }

  StmtPtr import_stmt() {
    const int ln = line();
    auto s = make<ImportStmt>(ln);
    auto dotted = [&] {
      std::string name = identifier();
      while (accept_op(".")) name += "." + identifier();
      return name;
    };
    if (accept_kw("import")) {
      do {
        ImportStmt::Item item;
        item.module = dotted();
        std::string bind = item.module.substr(0, item.module.find('.'));
        if (accept_kw("as")) bind = identifier();
        item.target = make<NameExpr>(bind, ln);
        s->items.push_back(std::move(item));
      } while (accept_op(","));
      return s;
    }
    expect_kw("from");
    std::string module = dotted();
    expect_kw("import");
    const bool paren = accept_op("(");
    if (at_op("*")) syntax_error("wildcard imports are not supported", ln);
    do {
      if (paren && at_op(")")) break;
      ImportStmt::Item item;
      item.module = module;
      item.member = identifier();
      std::string bind = item.member;
      if (accept_kw("as")) bind = identifier();
      item.target = make<NameExpr>(bind, ln);
      s->items.push_back(std::move(item));
    } while (accept_op(","));
    if (paren) expect_op(")");
    return s;
  }

  Block block() {
    expect_op(":");
    Block body;
    if (!at(Tok::Newline)) {
      simple_statements(body);
      return body;
    }
    ++pos_;
    if (!at(Tok::Indent)) syntax_error("expected an indented block", line());
    ++pos_;
    while (!at(Tok::Dedent) && !at(Tok::End)) {
      if (at(Tok::Newline)) {
        ++pos_;
        continue;
      }
      if (at(Tok::Indent)) syntax_error("unexpected indent", line());
      statement(body);
    }
    if (at(Tok::Dedent)) ++pos_;
    return body;
  }

  Block loop_block() {
    ++loop_depth_;
    Block b = block();
    --loop_depth_;
    return b;
  }

  void if_stmt(Block& out) {
    auto s = make<IfStmt>(line());
    ++pos_;
    s->test = named_test();
    s->body = block();
    if (at_kw("elif")) {
      Block nested;
      if_stmt(nested);
      s->orelse = std::move(nested);
    } else if (accept_kw("else")) {
      s->orelse = block();
    }
    out.push_back(std::move(s));
  }

  ExprPtr named_test() {
    ExprPtr e = test();
    if (at_op(":=")) syntax_error("assignment expressions are not supported", line());
    return e;
  }

  void while_stmt(Block& out) {
    auto s = make<WhileStmt>(line());
    ++pos_;
    s->test = named_test();
    s->body = loop_block();
    if (accept_kw("else")) s->orelse = block();
    out.push_back(std::move(s));
  }

  void for_stmt(Block& out) {
    auto s = make<ForStmt>(line());
    ++pos_;
    s->target = target_list();
    expect_kw("in");
    s->iter = testlist();
    s->body = loop_block();
    if (accept_kw("else")) s->orelse = block();
    out.push_back(std::move(s));
  }

  ExprPtr target_list() {
    const int ln = line();
    std::vector<ExprPtr> items;
    bool trailing = false;
    for (;;) {
      if (at_op("*")) syntax_error("starred assignment targets are not supported", ln);
      items.push_back(bitor_expr());
      if (!accept_op(",")) {
        trailing = false;
        break;
      }
      trailing = true;
      if (at_kw("in") || at_op("=")) break;
    }
    ExprPtr t;
    if (items.size() == 1 && !trailing) {
      t = std::move(items[0]);
    } else {
      auto tup = make<SeqExpr>(ExprKind::Tuple, ln);
      tup->items = std::move(items);
      t = std::move(tup);
    }
    check_target(*t, false);
    return t;
  }

  std::vector<Param> parameters(std::string_view closer) {
    std::vector<Param> params;
    bool seen_default = false;
    while (!at_op(closer)) {
      if (at_op("*") || at_op("**")) syntax_error("variadic parameters are not supported", line());
      Param p;
      p.name = identifier();
      if (closer == ")" && accept_op(":")) test();  // annotation
      if (accept_op("=")) {
        p.default_value = test();
        seen_default = true;
      } else if (seen_default) {
        syntax_error("non-default argument follows default argument", line());
      }
      for (const auto& q : params)
        if (q.name == p.name) syntax_error("duplicate argument '" + p.name + "' in function definition", line());
      params.push_back(std::move(p));
      if (!accept_op(",")) break;
    }
    return params;
  }

  void def_stmt(Block& out) {
    const int ln = line();
    ++pos_;
    auto s = make<DefStmt>(ln);
    auto def = std::make_shared<FunctionDef>();
    def->name = identifier();
    def->line = ln;
    expect_op("(");
    def->params = parameters(")");
    expect_op(")");
    if (accept_op("->")) test();
    const int saved_loop = loop_depth_;
    loop_depth_ = 0;
    ++func_depth_;
    def->body = block();
    --func_depth_;
    loop_depth_ = saved_loop;
    s->target = make<NameExpr>(def->name, ln);
    s->def = std::move(def);
    out.push_back(std::move(s));
  }

  void try_stmt(Block& out) {
    auto s = make<TryStmt>(line());
    ++pos_;
    s->body = block();
    while (at_kw("except")) {
      ++pos_;
      ExceptHandler h;
      if (!at_op(":")) {
        auto add_type = [&](const Expr& e) {
          if (e.kind == ExprKind::Name) {
            h.types.push_back(static_cast<const NameExpr&>(e).name);
          } else if (e.kind == ExprKind::Attribute) {
            h.types.push_back(static_cast<const AttributeExpr&>(e).attr);
          } else {
            syntax_error("unsupported exception specification", e.line);
          }
        };
        ExprPtr spec = test();
        if (spec->kind == ExprKind::Tuple) {
          for (const auto& item : static_cast<SeqExpr&>(*spec).items) add_type(*item);
        } else {
          add_type(*spec);
        }
        if (accept_kw("as")) h.name = make<NameExpr>(identifier(), line());
      }
      h.body = block();
      s->handlers.push_back(std::move(h));
    }
    if (accept_kw("else")) {
      if (s->handlers.empty()) syntax_error("'else' requires an 'except' clause", line());
      s->orelse = block();
    }
    if (accept_kw("finally")) s->finalbody = block();
    if (s->handlers.empty() && s->finalbody.empty()) syntax_error("expected 'except' or 'finally' block", line());
    out.push_back(std::move(s));
  }

  // ---- expressions ----

  // Comma-separated tests; a trailing comma or more than one item makes a tuple.
  ExprPtr testlist(bool allow_star = false) {
    (void)allow_star;
    const int ln = line();
    ExprPtr first = test();
    if (!at_op(",")) return first;
    auto tup = make<SeqExpr>(ExprKind::Tuple, ln);
    tup->items.push_back(std::move(first));
    while (accept_op(",")) {
      if (!starts_expression()) break;
      tup->items.push_back(test());
    }
    return tup;
  }

  bool starts_expression() const {
    const Token& t = cur();
    switch (t.kind) {
      case Tok::Name:
        return !kKeywords.count(t.text) || t.text == "None" || t.text == "True" || t.text == "False" ||
               t.text == "not" || t.text == "lambda";
      case Tok::Int:
      case Tok::Float:
      case Tok::String:
      case Tok::FString:
        return true;
      case Tok::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" || t.text == "~";
      default:
        return false;
    }
  }

  ExprPtr test() {
    if (at_kw("lambda")) return lambda();
    const int ln = line();
    ExprPtr e = or_test();
    if (at_kw("if")) {
      ++pos_;
      auto ie = make<IfExpr>(ln);
      ie->body = std::move(e);
      ie->test = or_test();
      expect_kw("else");
      ie->orelse = test();
      return ie;
    }
    return e;
  }

  ExprPtr test_nocond() {
    if (at_kw("lambda")) return lambda();
    return or_test();
  }

  ExprPtr lambda() {
    const int ln = line();
    ++pos_;
    auto le = make<LambdaExpr>(ln);
    auto def = std::make_shared<FunctionDef>();
    def->name = "<lambda>";
    def->line = ln;
    def->params = parameters(":");
    expect_op(":");
    ++func_depth_;
    def->lambda_body = test();
    --func_depth_;
    le->def = std::move(def);
    return le;
  }

  ExprPtr or_test() {
    const int ln = line();
    ExprPtr e = and_test();
    if (!at_kw("or")) return e;
    auto b = make<BoolOpExpr>(false, ln);
    b->values.push_back(std::move(e));
    while (accept_kw("or")) b->values.push_back(and_test());
    return b;
  }

  ExprPtr and_test() {
    const int ln = line();
    ExprPtr e = not_test();
    if (!at_kw("and")) return e;
    auto b = make<BoolOpExpr>(true, ln);
    b->values.push_back(std::move(e));
    while (accept_kw("and")) b->values.push_back(not_test());
    return b;
  }

  ExprPtr not_test() {
    const int ln = line();
    if (accept_kw("not")) return make<UnaryExpr>(UnaryKind::Not, not_test(), ln);
    return comparison();
  }

  bool comparison_op(CmpKind& op) {
    if (at(Tok::Op)) {
      const std::string& t = cur().text;
      if (t == "==") op = CmpKind::Eq;
      else if (t == "!=") op = CmpKind::Ne;
      else if (t == "<") op = CmpKind::Lt;
      else if (t == "<=") op = CmpKind::Le;
      else if (t == ">") op = CmpKind::Gt;
      else if (t == ">=") op = CmpKind::Ge;
      else return false;
      ++pos_;
      return true;
    }
    if (at_kw("in")) {
      ++pos_;
      op = CmpKind::In;
      return true;
    }
    if (at_kw("not") && pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == Tok::Name &&
        toks_[pos_ + 1].text == "in") {
      pos_ += 2;
      op = CmpKind::NotIn;
      return true;
    }
    if (at_kw("is")) {
      ++pos_;
      op = accept_kw("not") ? CmpKind::IsNot : CmpKind::Is;
      return true;
    }
    return false;
  }

  ExprPtr comparison() {
    const int ln = line();
    ExprPtr e = bitor_expr();
    CmpKind op;
    if (!comparison_op(op)) return e;
    auto c = make<CompareExpr>(ln);
    c->left = std::move(e);
    do {
      c->ops.push_back(op);
      c->comparators.push_back(bitor_expr());
    } while (comparison_op(op));
    return c;
  }

  ExprPtr binary_level(int level) {
    static const std::vector<std::vector<std::pair<std::string, BinOpKind>>> kLevels = {
        {{"|", BinOpKind::BitOr}},
        {{"^", BinOpKind::BitXor}},
        {{"&", BinOpKind::BitAnd}},
        {{"<<", BinOpKind::LShift}, {">>", BinOpKind::RShift}},
        {{"+", BinOpKind::Add}, {"-", BinOpKind::Sub}},
        {{"*", BinOpKind::Mul}, {"/", BinOpKind::Div}, {"//", BinOpKind::FloorDiv}, {"%", BinOpKind::Mod}},
    };
    if (level == static_cast<int>(kLevels.size())) return factor();
    ExprPtr e = binary_level(level + 1);
    for (;;) {
      if (!at(Tok::Op)) return e;
      const BinOpKind* found = nullptr;
      for (const auto& [text, kind] : kLevels[level])
        if (cur().text == text) found = &kind;
      if (!found) return e;
      const int ln = line();
      ++pos_;
      e = make<BinOpExpr>(*found, std::move(e), binary_level(level + 1), ln);
    }
    return e;
  }

  ExprPtr bitor_expr() { return binary_level(0); }

  ExprPtr factor() {
    const int ln = line();
    if (accept_op("-")) return make<UnaryExpr>(UnaryKind::Neg, factor(), ln);
    if (accept_op("+")) return make<UnaryExpr>(UnaryKind::Pos, factor(), ln);
    if (accept_op("~")) return make<UnaryExpr>(UnaryKind::Invert, factor(), ln);
    return power();
  }

  ExprPtr power() {
    const int ln = line();
    if (at_kw("await")) syntax_error("async code is not supported", ln);
    ExprPtr e = primary();
    if (accept_op("**")) return make<BinOpExpr>(BinOpKind::Pow, std::move(e), factor(), ln);
    return e;
  }

  ExprPtr primary() {
    ExprPtr e = atom();
    for (;;) {
      const int ln = line();
      if (accept_op("(")) {
        auto call = make<CallExpr>(ln);
        call->func = std::move(e);
        call_arguments(*call);
        e = std::move(call);
      } else if (accept_op("[")) {
        ExprPtr index = subscript_index();
        expect_op("]");
        e = make<SubscriptExpr>(std::move(e), std::move(index), ln);
      } else if (accept_op(".")) {
        e = make<AttributeExpr>(std::move(e), identifier(), ln);
      } else {
        return e;
      }
    }
  }

  void call_arguments(CallExpr& call) {
    while (!at_op(")")) {
      if (accept_op("**")) syntax_error("keyword argument unpacking is not supported", line());
      if (accept_op("*")) {
        call.args.push_back(test());
        call.starred.push_back(true);
      } else if (at(Tok::Name) && pos_ + 1 < toks_.size() && toks_[pos_ + 1].kind == Tok::Op &&
                 toks_[pos_ + 1].text == "=") {
        Keyword kw;
        kw.name = identifier();
        ++pos_;
        kw.value = test();
        for (const auto& k : call.keywords)
          if (k.name == kw.name) syntax_error("keyword argument repeated: " + kw.name, line());
        call.keywords.push_back(std::move(kw));
      } else {
        if (!call.keywords.empty()) syntax_error("positional argument follows keyword argument", line());
        const int ln = line();
        ExprPtr arg = test();
        if (at_kw("for")) {
          auto comp = make<ComprehensionExpr>(CompKind::Generator, ln);
          comp->element = std::move(arg);
          comp_fors(*comp);
          arg = std::move(comp);
        }
        call.args.push_back(std::move(arg));
        call.starred.push_back(false);
      }
      if (!accept_op(",")) break;
    }
    expect_op(")");
  }

  ExprPtr subscript_index() {
    const int ln = line();
    auto slice_part = [&]() -> ExprPtr {
      if (at_op(":") || at_op("]") || at_op(",")) return nullptr;
      return test();
    };
    ExprPtr first = slice_part();
    if (at_op(":")) {
      auto s = make<SliceExpr>(ln);
      s->lower = std::move(first);
      ++pos_;
      s->upper = slice_part();
      if (accept_op(":")) s->step = slice_part();
      if (at_op(",")) syntax_error("multi-dimensional slicing is not supported", ln);
      return s;
    }
    if (!first) syntax_error("invalid subscript", ln);
    if (at_op(",")) {
      auto tup = make<SeqExpr>(ExprKind::Tuple, ln);
      tup->items.push_back(std::move(first));
      while (accept_op(",")) {
        if (at_op("]")) break;
        tup->items.push_back(test());
      }
      return tup;
    }
    return first;
  }

  void comp_fors(ComprehensionExpr& comp) {
    while (at_kw("for")) {
      ++pos_;
      CompFor f;
      f.target = target_list();
      expect_kw("in");
      f.iter = or_test();
      while (at_kw("if")) {
        ++pos_;
        f.conditions.push_back(test_nocond());
      }
      comp.fors.push_back(std::move(f));
      if (at_kw("async")) syntax_error("async code is not supported", line());
    }
  }

  ExprPtr atom() {
    const Token& t = cur();
    const int ln = line();
    switch (t.kind) {
      case Tok::Int:
        ++pos_;
        return make<ConstExpr>(Value::integer(t.int_value), ln);
      case Tok::Float:
        ++pos_;
        return make<ConstExpr>(Value::real(t.float_value), ln);
      case Tok::String:
      case Tok::FString:
        return strings();
      case Tok::Name: {
        if (t.text == "None") {
          ++pos_;
          return make<ConstExpr>(Value(), ln);
        }
        if (t.text == "True" || t.text == "False") {
          ++pos_;
          return make<ConstExpr>(Value::boolean(t.text == "True"), ln);
        }
        if (t.text == "yield") syntax_error("generators are not supported", ln);
        if (kKeywords.count(t.text)) syntax_error("invalid syntax near '" + t.text + "'", ln);
        ++pos_;
        return make<NameExpr>(t.text, ln);
      }
      case Tok::Op:
        if (t.text == "(") return paren();
        if (t.text == "[") return bracket();
        if (t.text == "{") return brace();
        if (t.text == "...") syntax_error("Ellipsis is not supported", ln);
        [[fallthrough]];
      default:
        syntax_error("invalid syntax" + near(), ln);
    }
  }

  ExprPtr strings() {
    const int ln = line();
    bool any_f = false;
    std::vector<std::pair<bool, std::string>> parts;
    while (at(Tok::String) || at(Tok::FString)) {
      parts.emplace_back(at(Tok::FString), cur().text);
      any_f = any_f || at(Tok::FString);
      ++pos_;
    }
    if (!any_f) {
      std::string s;
      for (auto& [f, text] : parts) s += text;
      return make<ConstExpr>(Value::str(std::move(s)), ln);
    }
    std::string body;
    for (auto& [f, text] : parts) {
      if (f) {
        body += text;
      } else {
        for (char c : text) {
          body += c;
          if (c == '{' || c == '}') body += c;
        }
      }
    }
    return fstring(body, ln);
  }

  ExprPtr fstring(const std::string& body, int ln) {
    auto fs = make<FStringExpr>(ln);
    std::string lit;
    std::size_t i = 0;
    while (i < body.size()) {
      char c = body[i];
      if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
        lit += '{';
        i += 2;
        continue;
      }
      if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
        lit += '}';
        i += 2;
        continue;
      }
      if (c == '}') syntax_error("f-string: single '}' is not allowed", ln);
      if (c != '{') {
        lit += c;
        ++i;
        continue;
      }
      // Find the matching close brace, respecting nesting and quotes.
      std::size_t j = i + 1;
      int depth = 0;
      char quote = 0;
      std::size_t conv_pos = std::string::npos, spec_pos = std::string::npos;
      for (; j < body.size(); ++j) {
        char d = body[j];
        if (quote) {
          if (d == quote) quote = 0;
          continue;
        }
        if (d == '\'' || d == '"') quote = d;
        else if (d == '(' || d == '[' || d == '{') ++depth;
        else if ((d == ')' || d == ']' || d == '}') && depth > 0) --depth;
        else if (d == '}' && depth == 0) break;
        else if (d == '!' && depth == 0 && j + 1 < body.size() && body[j + 1] != '=' && conv_pos == std::string::npos &&
                 spec_pos == std::string::npos)
          conv_pos = j;
        else if (d == ':' && depth == 0 && spec_pos == std::string::npos) spec_pos = j;
      }
      if (j >= body.size()) syntax_error("f-string: expecting '}'", ln);
      std::size_t expr_end = std::min({conv_pos, spec_pos, j});
      std::string expr_text = body.substr(i + 1, expr_end - i - 1);
      while (!expr_text.empty() && (expr_text.back() == ' ' || expr_text.back() == '=')) {
        if (expr_text.back() == '=') syntax_error("f-string '=' specifier is not supported", ln);
        expr_text.pop_back();
      }
      if (expr_text.find_first_not_of(" \t") == std::string::npos) syntax_error("f-string: empty expression", ln);
      char conv = 0;
      if (conv_pos != std::string::npos) {
        std::size_t cend = std::min(spec_pos, j);
        std::string cs = body.substr(conv_pos + 1, cend - conv_pos - 1);
        if (cs != "r" && cs != "s" && cs != "a") syntax_error("f-string: invalid conversion character", ln);
        conv = cs[0] == 'a' ? 'r' : cs[0];
      }
      std::string spec;
      if (spec_pos != std::string::npos) spec = body.substr(spec_pos + 1, j - spec_pos - 1);
      if (spec.find('{') != std::string::npos) syntax_error("nested f-string format specs are not supported", ln);

      Parser sub(tokenize("(" + expr_text + ")"), ln - 1);
      sub.func_depth_ = func_depth_;
      fs->literals.push_back(std::move(lit));
      lit.clear();
      fs->exprs.push_back(sub.standalone_expression());
      fs->conversions.push_back(conv);
      fs->specs.push_back(std::move(spec));
      i = j + 1;
    }
    fs->literals.push_back(std::move(lit));
    return fs;
  }

  ExprPtr paren() {
    const int ln = line();
    ++pos_;
    if (accept_op(")")) return make<SeqExpr>(ExprKind::Tuple, ln);
    ExprPtr first = test();
    if (at_kw("for")) {
      auto comp = make<ComprehensionExpr>(CompKind::Generator, ln);
      comp->element = std::move(first);
      comp_fors(*comp);
      expect_op(")");
      return comp;
    }
    if (at_op(":=")) syntax_error("assignment expressions are not supported", ln);
    if (accept_op(")")) return first;
    auto tup = make<SeqExpr>(ExprKind::Tuple, ln);
    tup->items.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op(")")) break;
      tup->items.push_back(test());
    }
    expect_op(")");
    return tup;
  }

  ExprPtr bracket() {
    const int ln = line();
    ++pos_;
    auto list = make<SeqExpr>(ExprKind::List, ln);
    if (accept_op("]")) return list;
    if (at_op("*")) syntax_error("starred expressions are not supported in list displays", ln);
    ExprPtr first = test();
    if (at_kw("for")) {
      auto comp = make<ComprehensionExpr>(CompKind::List, ln);
      comp->element = std::move(first);
      comp_fors(*comp);
      expect_op("]");
      return comp;
    }
    list->items.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      list->items.push_back(test());
    }
    expect_op("]");
    return list;
  }

  ExprPtr brace() {
    const int ln = line();
    ++pos_;
    if (accept_op("}")) return make<DictExpr>(ln);
    if (at_op("**") || at_op("*")) syntax_error("unpacking in displays is not supported", ln);
    ExprPtr first = test();
    if (accept_op(":")) {
      ExprPtr value = test();
      if (at_kw("for")) {
        auto comp = make<ComprehensionExpr>(CompKind::Dict, ln);
        comp->key = std::move(first);
        comp->element = std::move(value);
        comp_fors(*comp);
        expect_op("}");
        return comp;
      }
      auto d = make<DictExpr>(ln);
      d->items.emplace_back(std::move(first), std::move(value));
      while (accept_op(",")) {
        if (at_op("}")) break;
        ExprPtr k = test();
        expect_op(":");
        d->items.emplace_back(std::move(k), test());
      }
      expect_op("}");
      return d;
    }
    if (at_kw("for")) {
      auto comp = make<ComprehensionExpr>(CompKind::Set, ln);
      comp->element = std::move(first);
      comp_fors(*comp);
      expect_op("}");
      return comp;
    }
    auto s = make<SeqExpr>(ExprKind::Set, ln);
    s->items.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("}")) break;
      s->items.push_back(test());
    }
    expect_op("}");
    return s;
  }
};

// ---- name resolution ----

struct ScopeInfo {
  FunctionDef* def = nullptr;  // null for the module scope
  std::map<std::string, std::uint32_t> locals;
  std::set<std::string> globals;
  std::set<std::string> nonlocals;
  std::vector<std::map<std::string, std::uint32_t>> comp_layers;
  std::uint32_t num_slots = 0;
  std::vector<std::string> slot_names;

  std::uint32_t new_slot(const std::string& name) {
    slot_names.push_back(name);
    return num_slots++;
  }
};

class Resolver {
 public:
  explicit Resolver(ModuleAst& m) : module_(m) {}

  std::uint32_t run() {
    scopes_.emplace_back();
    for (const auto& s : module_.body) {
      if (s->kind == StmtKind::Def) module_.defined_functions.push_back(static_cast<DefStmt&>(*s).def->name);
    }
    block(module_.body);
    std::uint32_t n = scopes_.back().num_slots;
    scopes_.pop_back();
    return n;
  }

 private:
  ModuleAst& module_;
  std::vector<ScopeInfo> scopes_;

  // Collects names bound in a function body, not descending into nested scopes.
  static void collect_target(const Expr& e, std::set<std::string>& out) {
    if (e.kind == ExprKind::Name) {
      out.insert(static_cast<const NameExpr&>(e).name);
    } else if (e.kind == ExprKind::Tuple || e.kind == ExprKind::List) {
      for (const auto& i : static_cast<const SeqExpr&>(e).items) collect_target(*i, out);
    }
  }

  static void collect(const Block& b, std::set<std::string>& bound, std::set<std::string>& globals,
                      std::set<std::string>& nonlocals) {
    for (const auto& sp : b) {
      const Stmt& s = *sp;
      switch (s.kind) {
        case StmtKind::Assign:
          for (const auto& t : static_cast<const AssignStmt&>(s).targets) collect_target(*t, bound);
          break;
        case StmtKind::AugAssign:
          collect_target(*static_cast<const AugAssignStmt&>(s).target, bound);
          break;
        case StmtKind::For: {
          const auto& f = static_cast<const ForStmt&>(s);
          collect_target(*f.target, bound);
          collect(f.body, bound, globals, nonlocals);
          collect(f.orelse, bound, globals, nonlocals);
          break;
        }
        case StmtKind::While: {
          const auto& w = static_cast<const WhileStmt&>(s);
          collect(w.body, bound, globals, nonlocals);
          collect(w.orelse, bound, globals, nonlocals);
          break;
        }
        case StmtKind::If: {
          const auto& i = static_cast<const IfStmt&>(s);
          collect(i.body, bound, globals, nonlocals);
          collect(i.orelse, bound, globals, nonlocals);
          break;
        }
        case StmtKind::Def:
          bound.insert(static_cast<const DefStmt&>(s).def->name);
          break;
        case StmtKind::Import:
          for (const auto& item : static_cast<const ImportStmt&>(s).items) collect_target(*item.target, bound);
          break;
        case StmtKind::Global:
          for (const auto& n : static_cast<const GlobalStmt&>(s).names) {
            if (!n.empty() && n[0] == '\x01')
              nonlocals.insert(n.substr(1));
            else
              globals.insert(n);
          }
          break;
        case StmtKind::Del:
          for (const auto& t : static_cast<const DelStmt&>(s).targets) collect_target(*t, bound);
          break;
        case StmtKind::Try: {
          const auto& t = static_cast<const TryStmt&>(s);
          collect(t.body, bound, globals, nonlocals);
          for (const auto& h : t.handlers) {
            if (h.name) collect_target(*h.name, bound);
            collect(h.body, bound, globals, nonlocals);
          }
          collect(t.orelse, bound, globals, nonlocals);
          collect(t.finalbody, bound, globals, nonlocals);
          break;
        }
        default:
          break;
      }
    }
  }

  void resolve_name(NameExpr& n) {
    const std::size_t top = scopes_.size() - 1;
    for (std::size_t i = top + 1; i-- > 0;) {
      ScopeInfo& sc = scopes_[i];
      const std::uint32_t depth = static_cast<std::uint32_t>(top - i);
      for (auto layer = sc.comp_layers.rbegin(); layer != sc.comp_layers.rend(); ++layer) {
        auto it = layer->find(n.name);
        if (it != layer->end()) {
          n.scope = depth == 0 ? Scope::Local : Scope::Free;
          n.slot = it->second;
          n.depth = depth;
          return;
        }
      }
      if (sc.def == nullptr) break;  // module scope: globals
      if (sc.globals.count(n.name)) break;
      if (sc.nonlocals.count(n.name)) continue;
      auto it = sc.locals.find(n.name);
      if (it != sc.locals.end()) {
        n.scope = depth == 0 ? Scope::Local : Scope::Free;
        n.slot = it->second;
        n.depth = depth;
        return;
      }
    }
    n.scope = Scope::Global;
  }

  void function(FunctionDef& def) {
    ScopeInfo sc;
    sc.def = &def;
    for (const auto& p : def.params) sc.locals.emplace(p.name, sc.new_slot(p.name));
    std::set<std::string> bound, globals, nonlocals;
    if (!def.lambda_body) collect(def.body, bound, globals, nonlocals);
    for (const auto& g : globals) {
      if (sc.locals.count(g)) syntax_error("name '" + g + "' is parameter and global", def.line);
    }
    for (const auto& name : bound) {
      if (globals.count(name) || nonlocals.count(name) || sc.locals.count(name)) continue;
      sc.locals.emplace(name, sc.new_slot(name));
    }
    sc.globals = std::move(globals);
    sc.nonlocals = std::move(nonlocals);
    for (const auto& nl : sc.nonlocals) {
      bool found = false;
      for (std::size_t i = scopes_.size(); i-- > 0 && scopes_[i].def;)
        if (scopes_[i].locals.count(nl)) found = true;
      if (!found) syntax_error("no binding for nonlocal '" + nl + "' found", def.line);
    }
    scopes_.push_back(std::move(sc));
    if (def.lambda_body)
      expr(*def.lambda_body);
    else
      block(def.body);
    def.num_slots = scopes_.back().num_slots;
    def.slot_names = scopes_.back().slot_names;
    scopes_.pop_back();
  }

  void block(Block& b) {
    for (auto& s : b) stmt(*s);
  }

  void stmt(Stmt& s) {
    switch (s.kind) {
      case StmtKind::Expr:
        expr(*static_cast<ExprStmt&>(s).value);
        break;
      case StmtKind::Assign: {
        auto& a = static_cast<AssignStmt&>(s);
        expr(*a.value);
        for (auto& t : a.targets) expr(*t);
        break;
      }
      case StmtKind::AugAssign: {
        auto& a = static_cast<AugAssignStmt&>(s);
        expr(*a.value);
        expr(*a.target);
        break;
      }
      case StmtKind::If: {
        auto& i = static_cast<IfStmt&>(s);
        expr(*i.test);
        block(i.body);
        block(i.orelse);
        break;
      }
      case StmtKind::While: {
        auto& w = static_cast<WhileStmt&>(s);
        expr(*w.test);
        block(w.body);
        block(w.orelse);
        break;
      }
      case StmtKind::For: {
        auto& f = static_cast<ForStmt&>(s);
        expr(*f.iter);
        expr(*f.target);
        block(f.body);
        block(f.orelse);
        break;
      }
      case StmtKind::Def: {
        auto& d = static_cast<DefStmt&>(s);
        for (auto& p : d.def->params)
          if (p.default_value) expr(*p.default_value);
        function(*d.def);
        expr(*d.target);
        break;
      }
      case StmtKind::Return: {
        auto& r = static_cast<ReturnStmt&>(s);
        if (r.value) expr(*r.value);
        break;
      }
      case StmtKind::Import:
        for (auto& item : static_cast<ImportStmt&>(s).items) expr(*item.target);
        break;
      case StmtKind::Del:
        for (auto& t : static_cast<DelStmt&>(s).targets) expr(*t);
        break;
      case StmtKind::Try: {
        auto& t = static_cast<TryStmt&>(s);
        block(t.body);
        for (auto& h : t.handlers) {
          if (h.name) expr(*h.name);
          block(h.body);
        }
        block(t.orelse);
        block(t.finalbody);
        break;
      }
      case StmtKind::Raise: {
        auto& r = static_cast<RaiseStmt&>(s);
        if (r.exc) expr(*r.exc);
        break;
      }
      case StmtKind::Assert: {
        auto& a = static_cast<AssertStmt&>(s);
        expr(*a.test);
        if (a.msg) expr(*a.msg);
        break;
      }
      default:
        break;
    }
  }

  void comprehension(ComprehensionExpr& c) {
    // The first iterable is evaluated in the enclosing scope.
    expr(*c.fors.front().iter);
    ScopeInfo& sc = scopes_.back();
    sc.comp_layers.emplace_back();
    for (std::size_t i = 0; i < c.fors.size(); ++i) {
      auto& f = c.fors[i];
      if (i > 0) expr(*f.iter);
      std::set<std::string> names;
      collect_target(*f.target, names);
      for (const auto& n : names) {
        ScopeInfo& cur = scopes_.back();
        if (!cur.comp_layers.back().count(n)) cur.comp_layers.back().emplace(n, cur.new_slot(n));
      }
      expr(*f.target);
      for (auto& cond : f.conditions) expr(*cond);
    }
    if (c.key) expr(*c.key);
    expr(*c.element);
    scopes_.back().comp_layers.pop_back();
  }

  void expr(Expr& e) {
    switch (e.kind) {
      case ExprKind::Const:
        break;
      case ExprKind::Name:
        resolve_name(static_cast<NameExpr&>(e));
        break;
      case ExprKind::List:
      case ExprKind::Tuple:
      case ExprKind::Set:
        for (auto& i : static_cast<SeqExpr&>(e).items) expr(*i);
        break;
      case ExprKind::Dict:
        for (auto& [k, v] : static_cast<DictExpr&>(e).items) {
          expr(*k);
          expr(*v);
        }
        break;
      case ExprKind::Comprehension:
        comprehension(static_cast<ComprehensionExpr&>(e));
        break;
      case ExprKind::BinOp: {
        auto& b = static_cast<BinOpExpr&>(e);
        expr(*b.left);
        expr(*b.right);
        break;
      }
      case ExprKind::Unary:
        expr(*static_cast<UnaryExpr&>(e).operand);
        break;
      case ExprKind::BoolOp:
        for (auto& v : static_cast<BoolOpExpr&>(e).values) expr(*v);
        break;
      case ExprKind::Compare: {
        auto& c = static_cast<CompareExpr&>(e);
        expr(*c.left);
        for (auto& v : c.comparators) expr(*v);
        break;
      }
      case ExprKind::IfExp: {
        auto& i = static_cast<IfExpr&>(e);
        expr(*i.test);
        expr(*i.body);
        expr(*i.orelse);
        break;
      }
      case ExprKind::Call: {
        auto& c = static_cast<CallExpr&>(e);
        expr(*c.func);
        for (auto& a : c.args) expr(*a);
        for (auto& k : c.keywords) expr(*k.value);
        break;
      }
      case ExprKind::Attribute:
        expr(*static_cast<AttributeExpr&>(e).object);
        break;
      case ExprKind::Subscript: {
        auto& s = static_cast<SubscriptExpr&>(e);
        expr(*s.object);
        expr(*s.index);
        break;
      }
      case ExprKind::Slice: {
        auto& s = static_cast<SliceExpr&>(e);
        if (s.lower) expr(*s.lower);
        if (s.upper) expr(*s.upper);
        if (s.step) expr(*s.step);
        break;
      }
      case ExprKind::Lambda: {
        auto& l = static_cast<LambdaExpr&>(e);
        for (auto& p : l.def->params)
          if (p.default_value) expr(*p.default_value);
        function(*l.def);
        break;
      }
      case ExprKind::FString:
        for (auto& x : static_cast<FStringExpr&>(e).exprs) expr(*x);
        break;
    }
  }
};

}  // namespace

std::unique_ptr<ModuleAst> parse_module(std::string_view source) {
  Parser parser(tokenize(source));
  auto m = parser.module();
  m->source = std::string(source);
  m->module_slots = Resolver(*m).run();
  return m;
}

}  // namespace groundwork::script
