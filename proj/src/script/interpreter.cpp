#include <algorithm>
#include <cmath>
#include <functional>

#include "interp.hpp"

namespace groundwork::script {

namespace {

enum class Flow : std::uint8_t { Normal, Return, Break, Continue };

[[noreturn]] void name_error(const std::string& name) { raise("NameError", "name '" + name + "' is not defined"); }

class Executor {
 public:
  explicit Executor(Impl& impl) : impl_(impl) {}

  Flow block(const Block& body, const std::shared_ptr<Frame>& frame) {
    for (const auto& s : body) {
      Flow f = stmt(*s, frame);
      if (f != Flow::Normal) return f;
    }
    return Flow::Normal;
  }

  Value eval(const Expr& e, const std::shared_ptr<Frame>& frame);

 private:
  Impl& impl_;

  // ---- names ----

  Value load(const NameExpr& n, const std::shared_ptr<Frame>& frame) {
    switch (n.scope) {
      case Scope::Local: {
        const Value& v = frame->slots[n.slot];
        if (v.is_undefined())
          raise("UnboundLocalError", "local variable '" + n.name + "' referenced before assignment");
        return v;
      }
      case Scope::Free: {
        Frame* f = frame.get();
        for (std::uint32_t d = 0; d < n.depth; ++d) f = f->parent.get();
        const Value& v = f->slots[n.slot];
        if (v.is_undefined()) raise("NameError", "free variable '" + n.name + "' referenced before assignment");
        return v;
      }
      default: {
        auto it = impl_.globals.find(n.name);
        if (it != impl_.globals.end()) return it->second;
        const auto& builtins = builtin_table();
        auto b = builtins.find(n.name);
        if (b != builtins.end()) return b->second;
        name_error(n.name);
      }
    }
  }

  Value* slot_ref(const NameExpr& n, const std::shared_ptr<Frame>& frame) {
    if (n.scope == Scope::Local) return &frame->slots[n.slot];
    Frame* f = frame.get();
    for (std::uint32_t d = 0; d < n.depth; ++d) f = f->parent.get();
    return &f->slots[n.slot];
  }

  void store_name(const NameExpr& n, const std::shared_ptr<Frame>& frame, Value v) {
    if (n.scope == Scope::Global)
      impl_.globals[n.name] = std::move(v);
    else
      *slot_ref(n, frame) = std::move(v);
  }

  void assign(const Expr& target, const std::shared_ptr<Frame>& frame, Value v) {
    switch (target.kind) {
      case ExprKind::Name:
        store_name(static_cast<const NameExpr&>(target), frame, std::move(v));
        return;
      case ExprKind::Tuple:
      case ExprKind::List: {
        const auto& items = static_cast<const SeqExpr&>(target).items;
        std::vector<Value> values = (v.type() == Value::Type::List || v.type() == Value::Type::Tuple)
                                        ? v.sequence()
                                        : iterate(impl_, v);
        if (values.size() > items.size())
          raise("ValueError", "too many values to unpack (expected " + std::to_string(items.size()) + ")");
        if (values.size() < items.size())
          raise("ValueError", "not enough values to unpack (expected " + std::to_string(items.size()) + ", got " +
                                  std::to_string(values.size()) + ")");
        for (std::size_t i = 0; i < items.size(); ++i) assign(*items[i], frame, std::move(values[i]));
        return;
      }
      case ExprKind::Subscript: {
        const auto& s = static_cast<const SubscriptExpr&>(target);
        Value obj = eval(*s.object, frame);
        if (s.index->kind == ExprKind::Slice) {
          const auto& sl = static_cast<const SliceExpr&>(*s.index);
          store_slice(impl_, obj, opt(sl.lower, frame), opt(sl.upper, frame), opt(sl.step, frame), v);
          return;
        }
        store_subscript(obj, eval(*s.index, frame), std::move(v));
        return;
      }
      default:
        raise("SyntaxError", "cannot assign to expression");
    }
  }

  Value opt(const ExprPtr& e, const std::shared_ptr<Frame>& frame) { return e ? eval(*e, frame) : Value(); }

  void del(const Expr& target, const std::shared_ptr<Frame>& frame) {
    switch (target.kind) {
      case ExprKind::Name: {
        const auto& n = static_cast<const NameExpr&>(target);
        if (n.scope == Scope::Global) {
          if (!impl_.globals.erase(n.name)) name_error(n.name);
        } else {
          Value* slot = slot_ref(n, frame);
          if (slot->is_undefined()) name_error(n.name);
          *slot = Value::undefined();
        }
        return;
      }
      case ExprKind::Tuple:
      case ExprKind::List:
        for (const auto& item : static_cast<const SeqExpr&>(target).items) del(*item, frame);
        return;
      case ExprKind::Subscript: {
        const auto& s = static_cast<const SubscriptExpr&>(target);
        Value obj = eval(*s.object, frame);
        if (s.index->kind == ExprKind::Slice) {
          const auto& sl = static_cast<const SliceExpr&>(*s.index);
          delete_slice(obj, opt(sl.lower, frame), opt(sl.upper, frame), opt(sl.step, frame));
          return;
        }
        delete_subscript(obj, eval(*s.index, frame));
        return;
      }
      default:
        raise("SyntaxError", "cannot delete expression");
    }
  }

  // ---- statements ----

  Flow stmt(const Stmt& s, const std::shared_ptr<Frame>& frame) {
    try {
      return stmt_inner(s, frame);
    } catch (const ScriptError& e) {
      if (e.line() != 0 || e.kind() == ErrorKind::Syntax) throw;
      throw ScriptError(e.kind(), e.py_type(), e.message(), s.line);
    }
  }

  Flow stmt_inner(const Stmt& s, const std::shared_ptr<Frame>& frame) {
    impl_.line = s.line;
    impl_.tick();
    switch (s.kind) {
      case StmtKind::Expr:
        eval(*static_cast<const ExprStmt&>(s).value, frame);
        return Flow::Normal;
      case StmtKind::Assign: {
        const auto& a = static_cast<const AssignStmt&>(s);
        Value v = eval(*a.value, frame);
        for (const auto& t : a.targets) assign(*t, frame, v);
        return Flow::Normal;
      }
      case StmtKind::AugAssign:
        aug_assign(static_cast<const AugAssignStmt&>(s), frame);
        return Flow::Normal;
      case StmtKind::If: {
        const auto& i = static_cast<const IfStmt&>(s);
        return block(eval(*i.test, frame).truthy() ? i.body : i.orelse, frame);
      }
      case StmtKind::While: {
        const auto& w = static_cast<const WhileStmt&>(s);
        for (;;) {
          if (!eval(*w.test, frame).truthy()) return block(w.orelse, frame);
          impl_.tick();
          Flow f = block(w.body, frame);
          if (f == Flow::Break) return Flow::Normal;
          if (f == Flow::Return) return f;
        }
      }
      case StmtKind::For:
        return for_loop(static_cast<const ForStmt&>(s), frame);
      case StmtKind::Def: {
        const auto& d = static_cast<const DefStmt&>(s);
        assign(*d.target, frame, make_function(d.def, frame));
        return Flow::Normal;
      }
      case StmtKind::Return: {
        const auto& r = static_cast<const ReturnStmt&>(s);
        impl_.return_value = r.value ? eval(*r.value, frame) : Value();
        return Flow::Return;
      }
      case StmtKind::Break:
        return Flow::Break;
      case StmtKind::Continue:
        return Flow::Continue;
      case StmtKind::Pass:
      case StmtKind::Global:
        return Flow::Normal;
      case StmtKind::Import: {
        for (const auto& item : static_cast<const ImportStmt&>(s).items) {
          Value module = import_module(item.module);
          if (item.member.empty()) {
            assign(*item.target, frame, module);
            continue;
          }
          const auto& m = object_as<Module>(module);
          auto it = m.members.find(item.member);
          if (it == m.members.end()) {
            if (!m.permissive)
              raise("ImportError", "cannot import name '" + item.member + "' from '" + item.module + "'");
            assign(*item.target, frame, Value());
          } else {
            assign(*item.target, frame, it->second);
          }
        }
        return Flow::Normal;
      }
      case StmtKind::Del:
        for (const auto& t : static_cast<const DelStmt&>(s).targets) del(*t, frame);
        return Flow::Normal;
      case StmtKind::Try:
        return try_stmt(static_cast<const TryStmt&>(s), frame);
      case StmtKind::Raise:
        raise_stmt(static_cast<const RaiseStmt&>(s), frame);
      case StmtKind::Assert: {
        const auto& a = static_cast<const AssertStmt&>(s);
        if (!eval(*a.test, frame).truthy())
          raise("AssertionError", a.msg ? eval(*a.msg, frame).to_string() : std::string());
        return Flow::Normal;
      }
    }
    return Flow::Normal;
  }

  void aug_assign(const AugAssignStmt& a, const std::shared_ptr<Frame>& frame) {
    if (a.target->kind == ExprKind::Name) {
      const auto& n = static_cast<const NameExpr&>(*a.target);
      Value cur = load(n, frame);
      Value rhs = eval(*a.value, frame);
      if (a.op == BinOpKind::Add && cur.type() == Value::Type::List) {
        extend_list(cur, rhs);
        return;
      }
      store_name(n, frame, binary_op(impl_, a.op, cur, rhs));
      return;
    }
    const auto& s = static_cast<const SubscriptExpr&>(*a.target);
    Value obj = eval(*s.object, frame);
    if (s.index->kind == ExprKind::Slice) raise("TypeError", "augmented assignment to a slice is not supported");
    Value index = eval(*s.index, frame);
    Value cur = subscript(obj, index);
    Value rhs = eval(*a.value, frame);
    if (a.op == BinOpKind::Add && cur.type() == Value::Type::List) {
      extend_list(cur, rhs);
      return;
    }
    store_subscript(obj, index, binary_op(impl_, a.op, cur, rhs));
  }

  void extend_list(const Value& list, const Value& rhs) {
    std::vector<Value> extra = iterate(impl_, rhs);
    charge(extra.size());
    auto& items = list.as_list().items;
    items.insert(items.end(), extra.begin(), extra.end());
  }

  template <class Body>
  void for_each(const Value& iterable, Body&& body) {
    if (iterable.type() == Value::Type::List) {
      // Index-based so that appends during iteration are observed.
      const Value keep = iterable;
      auto& items = keep.as_list().items;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (!body(Value(items[i]))) return;
      }
      return;
    }
    if (iterable.type() == Value::Type::Tuple) {
      const Value keep = iterable;
      for (const auto& item : keep.as_tuple().items)
        if (!body(item)) return;
      return;
    }
    for (auto& item : iterate(impl_, iterable))
      if (!body(std::move(item))) return;
  }

  Flow for_loop(const ForStmt& f, const std::shared_ptr<Frame>& frame) {
    Value iterable = eval(*f.iter, frame);
    Flow result = Flow::Normal;
    bool broke = false;
    for_each(iterable, [&](Value item) {
      impl_.tick();
      assign(*f.target, frame, std::move(item));
      Flow fl = block(f.body, frame);
      if (fl == Flow::Break) {
        broke = true;
        return false;
      }
      if (fl == Flow::Return) {
        result = fl;
        return false;
      }
      return true;
    });
    if (result == Flow::Return) return result;
    if (!broke) return block(f.orelse, frame);
    return Flow::Normal;
  }

  Flow try_stmt(const TryStmt& t, const std::shared_ptr<Frame>& frame) {
    Flow result = Flow::Normal;
    try {
      bool handled_normally = true;
      try {
        result = block(t.body, frame);
      } catch (const ScriptError& err) {
        if (!err.catchable()) throw;
        handled_normally = false;
        const ExceptHandler* match = nullptr;
        for (const auto& h : t.handlers) {
          if (h.types.empty()) {
            match = &h;
            break;
          }
          for (const auto& type : h.types) {
            if (!is_exception_class(type)) {
              // Evaluating an unknown name raises NameError like Python would.
              auto it = impl_.globals.find(type);
              if (it == impl_.globals.end()) name_error(type);
              raise("TypeError", "catching classes that do not inherit from BaseException is not allowed");
            }
            if (exception_matches(err.py_type(), type)) {
              match = &h;
              break;
            }
          }
          if (match) break;
        }
        if (!match) throw;
        Value exc = make_exception(err.py_type(), err.message());
        if (match->name) assign(*match->name, frame, exc);
        impl_.handling.push_back(exc);
        struct Pop {
          Impl& impl;
          ~Pop() { impl.handling.pop_back(); }
        } pop{impl_};
        result = block(match->body, frame);
      }
      if (handled_normally && result == Flow::Normal) result = block(t.orelse, frame);
    } catch (const ScriptError& err) {
      if (t.finalbody.empty() || !err.catchable()) throw;
      Flow f = block(t.finalbody, frame);
      if (f != Flow::Normal) return f;  // return/break in finally swallows the exception
      throw;
    }
    if (!t.finalbody.empty()) {
      const Value saved = impl_.return_value;
      Flow f = block(t.finalbody, frame);
      if (f != Flow::Normal) return f;
      impl_.return_value = saved;
    }
    return result;
  }

  [[noreturn]] void raise_stmt(const RaiseStmt& r, const std::shared_ptr<Frame>& frame) {
    if (!r.exc) {
      if (impl_.handling.empty()) raise("RuntimeError", "No active exception to reraise");
      const auto& e = object_as<ExceptionObject>(impl_.handling.back());
      throw ScriptError(ErrorKind::Runtime, e.name, e.message, r.line);
    }
    Value v = eval(*r.exc, frame);
    if (v.type() == Value::Type::Exception) {
      const auto& e = object_as<ExceptionObject>(v);
      throw ScriptError(ErrorKind::Runtime, e.name, e.message, r.line);
    }
    if (v.type() == Value::Type::Builtin && object_as<Builtin>(v).exception_class)
      throw ScriptError(ErrorKind::Runtime, object_as<Builtin>(v).name, "", r.line);
    raise("TypeError", "exceptions must derive from BaseException");
  }

  Value make_function(const std::shared_ptr<FunctionDef>& def, const std::shared_ptr<Frame>& frame) {
    auto fn = std::make_shared<Function>();
    fn->name = def->name;
    fn->def = def;
    fn->env = frame;
    for (const auto& p : def->params)
      if (p.default_value) fn->defaults.push_back(eval(*p.default_value, frame));
    if (impl_.captured.empty() || impl_.captured.back() != frame) impl_.captured.push_back(frame);
    return make_object(Value::Type::Function, std::move(fn));
  }

  // ---- expressions ----

  Value compare(CmpKind op, const Value& a, const Value& b) {
    switch (op) {
      case CmpKind::Eq: return Value::boolean(a == b);
      case CmpKind::Ne: return Value::boolean(a != b);
      case CmpKind::Lt:
      case CmpKind::Gt:
      case CmpKind::Le:
      case CmpKind::Ge: {
        if (a.type() == Value::Type::Set && b.type() == Value::Type::Set) {
          const Set& x = a.as_set();
          const Set& y = b.as_set();
          auto subset = [](const Set& p, const Set& q) {
            for (const auto& v : p.items())
              if (!q.contains(v)) return false;
            return true;
          };
          switch (op) {
            case CmpKind::Le: return Value::boolean(subset(x, y));
            case CmpKind::Ge: return Value::boolean(subset(y, x));
            case CmpKind::Lt: return Value::boolean(x.size() < y.size() && subset(x, y));
            default: return Value::boolean(y.size() < x.size() && subset(y, x));
          }
        }
        if ((a.type() == Value::Type::Float && std::isnan(a.as_float())) ||
            (b.type() == Value::Type::Float && std::isnan(b.as_float()))) {
          if (!b.is_number() || !a.is_number()) less_than(a, b);
          return Value::boolean(false);
        }
        switch (op) {
          case CmpKind::Lt: return Value::boolean(less_than(a, b));
          case CmpKind::Gt: return Value::boolean(less_than(b, a));
          case CmpKind::Le: return Value::boolean(!less_than(b, a));
          default: return Value::boolean(!less_than(a, b));
        }
      }
      case CmpKind::In: return Value::boolean(contains(b, a));
      case CmpKind::NotIn: return Value::boolean(!contains(b, a));
      case CmpKind::Is: return Value::boolean(a.identical(b));
      case CmpKind::IsNot: return Value::boolean(!a.identical(b));
    }
    return Value::boolean(false);
  }

  void comprehension_loop(const ComprehensionExpr& c, std::size_t level, const std::shared_ptr<Frame>& frame,
                          const Value& first_iter, const std::function<void()>& emit) {
    const CompFor& f = c.fors[level];
    Value iterable = level == 0 ? first_iter : eval(*f.iter, frame);
    for_each(iterable, [&](Value item) {
      impl_.tick();
      assign(*f.target, frame, std::move(item));
      for (const auto& cond : f.conditions)
        if (!eval(*cond, frame).truthy()) return true;
      if (level + 1 < c.fors.size())
        comprehension_loop(c, level + 1, frame, first_iter, emit);
      else
        emit();
      return true;
    });
  }

  Value comprehension(const ComprehensionExpr& c, const std::shared_ptr<Frame>& frame) {
    Value first_iter = eval(*c.fors.front().iter, frame);
    switch (c.comp) {
      case CompKind::List:
      case CompKind::Generator: {
        Value out = Value::list();
        auto& items = out.as_list().items;
        comprehension_loop(c, 0, frame, first_iter, [&] {
          charge(1);
          items.push_back(eval(*c.element, frame));
        });
        return out;
      }
      case CompKind::Set: {
        Value out = Value::set();
        Set& s = out.as_set();
        comprehension_loop(c, 0, frame, first_iter, [&] {
          charge(1);
          s.add(eval(*c.element, frame));
        });
        return out;
      }
      case CompKind::Dict: {
        Value out = Value::dict();
        Dict& d = out.as_dict();
        comprehension_loop(c, 0, frame, first_iter, [&] {
          Value k = eval(*c.key, frame);
          d.set(k, eval(*c.element, frame));
        });
        return out;
      }
    }
    return Value();
  }

  Value call(const CallExpr& c, const std::shared_ptr<Frame>& frame) {
    std::vector<Value> args;
    args.reserve(c.args.size());
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      Value v = eval(*c.args[i], frame);
      if (c.starred[i]) {
        for (auto& item : iterate(impl_, v)) args.push_back(std::move(item));
      } else {
        args.push_back(std::move(v));
      }
    }
    KwArgs kw;
    for (const auto& k : c.keywords) kw.emplace_back(k.name, eval(*k.value, frame));

    if (c.func->kind == ExprKind::Attribute) {
      const auto& attr = static_cast<const AttributeExpr&>(*c.func);
      Value obj = eval(*attr.object, frame);
      if (obj.type() != Value::Type::Module) {
        MethodFn m = find_method(obj.type(), attr.attr);
        if (!m)
          raise("AttributeError", "'" + obj.type_name() + "' object has no attribute '" + attr.attr + "'");
        impl_.line = c.line;
        return m(impl_, obj, args, kw);
      }
      return impl_.call_value(attribute(obj, attr.attr), std::move(args), std::move(kw));
    }
    Value f = eval(*c.func, frame);
    impl_.line = c.line;
    return impl_.call_value(f, std::move(args), std::move(kw));
  }

  Value attribute(const Value& obj, const std::string& name) {
    if (obj.type() == Value::Type::Module) {
      const auto& m = object_as<Module>(obj);
      auto it = m.members.find(name);
      if (it != m.members.end()) return it->second;
      if (m.permissive) return Value();
      raise("AttributeError", "module '" + m.name + "' has no attribute '" + name + "'");
    }
    if (obj.type() == Value::Type::Exception && name == "args") {
      const auto& e = object_as<ExceptionObject>(obj);
      return Value::tuple({Value::str(e.message)});
    }
    MethodFn m = find_method(obj.type(), name);
    if (!m) raise("AttributeError", "'" + obj.type_name() + "' object has no attribute '" + name + "'");
    auto bm = std::make_shared<BoundMethod>();
    bm->name = obj.type_name() + "." + name;
    bm->self = obj;
    bm->fn = m;
    return make_object(Value::Type::Method, std::move(bm));
  }
};

Value Executor::eval(const Expr& e, const std::shared_ptr<Frame>& frame) {
  switch (e.kind) {
    case ExprKind::Const:
      return static_cast<const ConstExpr&>(e).value;
    case ExprKind::Name:
      return load(static_cast<const NameExpr&>(e), frame);
    case ExprKind::List:
    case ExprKind::Tuple: {
      const auto& items = static_cast<const SeqExpr&>(e).items;
      std::vector<Value> values;
      values.reserve(items.size());
      for (const auto& i : items) values.push_back(eval(*i, frame));
      return e.kind == ExprKind::List ? Value::list(std::move(values)) : Value::tuple(std::move(values));
    }
    case ExprKind::Set: {
      Value out = Value::set();
      for (const auto& i : static_cast<const SeqExpr&>(e).items) out.as_set().add(eval(*i, frame));
      return out;
    }
    case ExprKind::Dict: {
      Value out = Value::dict();
      for (const auto& [k, v] : static_cast<const DictExpr&>(e).items) {
        Value key = eval(*k, frame);
        out.as_dict().set(key, eval(*v, frame));
      }
      return out;
    }
    case ExprKind::Comprehension:
      return comprehension(static_cast<const ComprehensionExpr&>(e), frame);
    case ExprKind::BinOp: {
      const auto& b = static_cast<const BinOpExpr&>(e);
      Value l = eval(*b.left, frame);
      Value r = eval(*b.right, frame);
      impl_.line = e.line;
      return binary_op(impl_, b.op, l, r);
    }
    case ExprKind::Unary: {
      const auto& u = static_cast<const UnaryExpr&>(e);
      Value v = eval(*u.operand, frame);
      switch (u.op) {
        case UnaryKind::Not:
          return Value::boolean(!v.truthy());
        case UnaryKind::Neg:
          if (v.type() == Value::Type::Float) return Value::real(-v.as_float());
          if (v.type() == Value::Type::Int || v.type() == Value::Type::Bool) {
            if (v.as_int() == INT64_MIN) raise("OverflowError", "integer overflow");
            return Value::integer(-v.as_int());
          }
          raise("TypeError", "bad operand type for unary -: '" + v.type_name() + "'");
        case UnaryKind::Pos:
          if (v.type() == Value::Type::Bool) return Value::integer(v.as_int());
          if (v.is_number()) return v;
          raise("TypeError", "bad operand type for unary +: '" + v.type_name() + "'");
        case UnaryKind::Invert:
          if (v.type() == Value::Type::Int || v.type() == Value::Type::Bool) return Value::integer(~v.as_int());
          raise("TypeError", "bad operand type for unary ~: '" + v.type_name() + "'");
      }
      return Value();
    }
    case ExprKind::BoolOp: {
      const auto& b = static_cast<const BoolOpExpr&>(e);
      Value v;
      for (const auto& item : b.values) {
        v = eval(*item, frame);
        if (v.truthy() != b.is_and) return v;
      }
      return v;
    }
    case ExprKind::Compare: {
      const auto& c = static_cast<const CompareExpr&>(e);
      Value left = eval(*c.left, frame);
      for (std::size_t i = 0; i < c.ops.size(); ++i) {
        Value right = eval(*c.comparators[i], frame);
        if (!compare(c.ops[i], left, right).as_bool()) return Value::boolean(false);
        left = std::move(right);
      }
      return Value::boolean(true);
    }
    case ExprKind::IfExp: {
      const auto& i = static_cast<const IfExpr&>(e);
      return eval(*i.test, frame).truthy() ? eval(*i.body, frame) : eval(*i.orelse, frame);
    }
    case ExprKind::Call:
      return call(static_cast<const CallExpr&>(e), frame);
    case ExprKind::Attribute: {
      const auto& a = static_cast<const AttributeExpr&>(e);
      return attribute(eval(*a.object, frame), a.attr);
    }
    case ExprKind::Subscript: {
      const auto& s = static_cast<const SubscriptExpr&>(e);
      Value obj = eval(*s.object, frame);
      if (s.index->kind == ExprKind::Slice) {
        const auto& sl = static_cast<const SliceExpr&>(*s.index);
        return slice(obj, opt(sl.lower, frame), opt(sl.upper, frame), opt(sl.step, frame));
      }
      return subscript(obj, eval(*s.index, frame));
    }
    case ExprKind::Slice:
      raise("SyntaxError", "slice outside subscript");
    case ExprKind::Lambda:
      return make_function(static_cast<const LambdaExpr&>(e).def, frame);
    case ExprKind::FString: {
      const auto& f = static_cast<const FStringExpr&>(e);
      std::string out = f.literals[0];
      for (std::size_t i = 0; i < f.exprs.size(); ++i) {
        Value v = eval(*f.exprs[i], frame);
        if (f.conversions[i] == 'r') v = Value::str(v.repr());
        out += f.specs[i].empty() ? v.to_string() : format_value(v, f.specs[i]);
        out += f.literals[i + 1];
      }
      return Value::str(std::move(out));
    }
  }
  return Value();
}

}  // namespace

Value Impl::call_function(const Function& fn, std::vector<Value>& args, KwArgs& kw) {
  const FunctionDef& def = *fn.def;
  if (depth >= limits.max_depth)
    throw ScriptError(ErrorKind::Recursion, "RecursionError", "maximum recursion depth exceeded", line);
  tick();
  auto frame = std::make_shared<Frame>();
  frame->slots.assign(def.num_slots, Value::undefined());
  frame->parent = fn.env;
  const std::size_t nparams = def.params.size();
  if (args.size() > nparams)
    raise("TypeError", def.name + "() takes " + std::to_string(nparams) + " positional arguments but " +
                           std::to_string(args.size()) + " were given");
  for (std::size_t i = 0; i < args.size(); ++i) frame->slots[i] = std::move(args[i]);
  for (auto& [name, value] : kw) {
    std::size_t i = 0;
    while (i < nparams && def.params[i].name != name) ++i;
    if (i == nparams) raise("TypeError", def.name + "() got an unexpected keyword argument '" + name + "'");
    if (!frame->slots[i].is_undefined())
      raise("TypeError", def.name + "() got multiple values for argument '" + name + "'");
    frame->slots[i] = std::move(value);
  }
  const std::size_t first_default = nparams - fn.defaults.size();
  for (std::size_t i = 0; i < nparams; ++i) {
    if (!frame->slots[i].is_undefined()) continue;
    if (i >= first_default) {
      frame->slots[i] = fn.defaults[i - first_default];
    } else {
      raise("TypeError", def.name + "() missing required positional argument: '" + def.params[i].name + "'");
    }
  }

  ++depth;
  struct DepthGuard {
    std::size_t& d;
    ~DepthGuard() { --d; }
  } guard{depth};
  Executor ex(*this);
  if (def.lambda_body) return ex.eval(*def.lambda_body, frame);
  return_value = Value();
  Flow f = ex.block(def.body, frame);
  Value result = f == Flow::Return ? std::move(return_value) : Value();
  return_value = Value();
  return result;
}

Value Impl::call_value(const Value& f, std::vector<Value> args, KwArgs kw) {
  switch (f.type()) {
    case Value::Type::Function:
      return call_function(object_as<Function>(f), args, kw);
    case Value::Type::Builtin: {
      const auto& b = object_as<Builtin>(f);
      if (b.exception_class) {
        std::string message;
        for (std::size_t i = 0; i < args.size(); ++i) message += (i ? ", " : "") + args[i].to_string();
        return make_exception(b.name, message);
      }
      tick();
      return b.fn(*this, args, kw);
    }
    case Value::Type::Method: {
      const auto& m = object_as<BoundMethod>(f);
      tick();
      return m.fn(*this, m.self, args, kw);
    }
    default:
      raise("TypeError", "'" + f.type_name() + "' object is not callable");
  }
}

// ---- Program / Interpreter ----

const std::string& Program::source() const { return ast_->source; }

bool Program::defines(std::string_view function_name) const {
  for (const auto& n : ast_->defined_functions)
    if (n == function_name) return true;
  return false;
}

std::shared_ptr<const Program> compile(std::string_view source) {
  auto p = std::shared_ptr<Program>(new Program());
  p->ast_ = parse_module(source);
  return p;
}

struct Interpreter::Impl : script::Impl {
  using script::Impl::Impl;
};

Interpreter::Interpreter(Limits limits) : limits_(limits), impl_(std::make_unique<Impl>(limits)) {}
Interpreter::~Interpreter() = default;

std::uint64_t Interpreter::last_steps() const { return impl_->steps; }

Value Interpreter::call(const Program& program, std::string_view function, std::vector<Value> args) {
  script::Impl& impl = *impl_;
  impl.limits = limits_;
  impl.steps = 0;
  impl.depth = 0;
  impl.line = 0;
  impl.start = std::chrono::steady_clock::now();
  impl.globals.clear();
  impl.captured.clear();
  impl.handling.clear();
  impl.return_value = Value();
  AllocBudget& budget = alloc_budget();
  const AllocBudget saved_budget = budget;
  budget.used = 0;
  budget.limit = limits_.max_allocations;

  const ModuleAst& ast = program.ast();
  auto module_frame = std::make_shared<Frame>();
  module_frame->slots.assign(ast.module_slots, Value::undefined());

  struct Cleanup {
    script::Impl& impl;
    std::shared_ptr<Frame>& module_frame;
    AllocBudget& budget;
    AllocBudget saved;
    ~Cleanup() {
      // Break closure <-> frame reference cycles.
      for (auto& f : impl.captured) {
        f->slots.clear();
        f->parent.reset();
      }
      impl.captured.clear();
      module_frame->slots.clear();
      impl.globals.clear();
      impl.handling.clear();
      impl.return_value = Value();
      budget = saved;
    }
  } cleanup{impl, module_frame, budget, saved_budget};

  try {
    impl.globals["__name__"] = Value::str("__sandbox__");
    Executor ex(impl);
    ex.block(ast.body, module_frame);
    auto it = impl.globals.find(std::string(function));
    if (it == impl.globals.end()) raise("NameError", "name '" + std::string(function) + "' is not defined");
    Value f = it->second;
    return impl.call_value(f, std::move(args));
  } catch (const ScriptError&) {
    throw;
  } catch (const std::bad_alloc&) {
    throw ScriptError(ErrorKind::Memory, "MemoryError", "out of memory", impl.line);
  } catch (const std::length_error&) {
    throw ScriptError(ErrorKind::Memory, "MemoryError", "container too large", impl.line);
  }
}

}  // namespace groundwork::script
