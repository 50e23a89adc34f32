#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "groundwork/script.hpp"

namespace groundwork::script {

enum class ExprKind : std::uint8_t {
  Const,
  Name,
  List,
  Tuple,
  Dict,
  Set,
  Comprehension,
  BinOp,
  Unary,
  BoolOp,
  Compare,
  IfExp,
  Call,
  Attribute,
  Subscript,
  Slice,
  Lambda,
  FString,
};

enum class BinOpKind : std::uint8_t { Add, Sub, Mul, Div, FloorDiv, Mod, Pow, BitAnd, BitOr, BitXor, LShift, RShift };
enum class UnaryKind : std::uint8_t { Neg, Pos, Not, Invert };
enum class CmpKind : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge, In, NotIn, Is, IsNot };

struct Expr {
  ExprKind kind;
  int line;
  Expr(ExprKind k, int l) : kind(k), line(l) {}
  virtual ~Expr() = default;
};
using ExprPtr = std::unique_ptr<Expr>;

struct ConstExpr : Expr {
  Value value;
  ConstExpr(Value v, int l) : Expr(ExprKind::Const, l), value(std::move(v)) {}
};

enum class Scope : std::uint8_t { Unresolved, Local, Free, Global };

struct NameExpr : Expr {
  std::string name;
  Scope scope = Scope::Unresolved;
  std::uint32_t slot = 0;
  std::uint32_t depth = 0;  // for Free: number of closure hops
  NameExpr(std::string n, int l) : Expr(ExprKind::Name, l), name(std::move(n)) {}
};

struct SeqExpr : Expr {  // List, Tuple, Set
  std::vector<ExprPtr> items;
  SeqExpr(ExprKind k, int l) : Expr(k, l) {}
};

struct DictExpr : Expr {
  std::vector<std::pair<ExprPtr, ExprPtr>> items;
  explicit DictExpr(int l) : Expr(ExprKind::Dict, l) {}
};

struct CompFor {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> conditions;
};

enum class CompKind : std::uint8_t { List, Set, Dict, Generator };

struct ComprehensionExpr : Expr {
  CompKind comp;
  ExprPtr element;  // value for dict comprehensions
  ExprPtr key;      // dict comprehensions only
  std::vector<CompFor> fors;
  ComprehensionExpr(CompKind c, int l) : Expr(ExprKind::Comprehension, l), comp(c) {}
};

struct BinOpExpr : Expr {
  BinOpKind op;
  ExprPtr left, right;
  BinOpExpr(BinOpKind o, ExprPtr a, ExprPtr b, int l)
      : Expr(ExprKind::BinOp, l), op(o), left(std::move(a)), right(std::move(b)) {}
};

struct UnaryExpr : Expr {
  UnaryKind op;
  ExprPtr operand;
  UnaryExpr(UnaryKind o, ExprPtr e, int l) : Expr(ExprKind::Unary, l), op(o), operand(std::move(e)) {}
};

struct BoolOpExpr : Expr {
  bool is_and;
  std::vector<ExprPtr> values;
  BoolOpExpr(bool a, int l) : Expr(ExprKind::BoolOp, l), is_and(a) {}
};

struct CompareExpr : Expr {
  ExprPtr left;
  std::vector<CmpKind> ops;
  std::vector<ExprPtr> comparators;
  explicit CompareExpr(int l) : Expr(ExprKind::Compare, l) {}
};

struct IfExpr : Expr {
  ExprPtr test, body, orelse;
  explicit IfExpr(int l) : Expr(ExprKind::IfExp, l) {}
};

struct Keyword {
  std::string name;
  ExprPtr value;
};

struct CallExpr : Expr {
  ExprPtr func;
  std::vector<ExprPtr> args;
  std::vector<Keyword> keywords;
  std::vector<bool> starred;  // parallel to args: *iterable
  explicit CallExpr(int l) : Expr(ExprKind::Call, l) {}
};

struct AttributeExpr : Expr {
  ExprPtr object;
  std::string attr;
  AttributeExpr(ExprPtr o, std::string a, int l) : Expr(ExprKind::Attribute, l), object(std::move(o)), attr(std::move(a)) {}
};

struct SubscriptExpr : Expr {
  ExprPtr object;
  ExprPtr index;  // may be SliceExpr
  SubscriptExpr(ExprPtr o, ExprPtr i, int l) : Expr(ExprKind::Subscript, l), object(std::move(o)), index(std::move(i)) {}
};

struct SliceExpr : Expr {
  ExprPtr lower, upper, step;  // each optional
  explicit SliceExpr(int l) : Expr(ExprKind::Slice, l) {}
};

struct FunctionDef;

struct LambdaExpr : Expr {
  std::shared_ptr<FunctionDef> def;
  explicit LambdaExpr(int l) : Expr(ExprKind::Lambda, l) {}
};

struct FStringExpr : Expr {
  // Alternating literal text and expressions; literal parts may be empty.
  std::vector<std::string> literals;  // size == exprs.size() + 1
  std::vector<ExprPtr> exprs;
  std::vector<char> conversions;  // 0, 'r' or 's'
  std::vector<std::string> specs;
  explicit FStringExpr(int l) : Expr(ExprKind::FString, l) {}
};

enum class StmtKind : std::uint8_t {
  Expr,
  Assign,
  AugAssign,
  If,
  While,
  For,
  Def,
  Return,
  Break,
  Continue,
  Pass,
  Import,
  Global,
  Del,
  Try,
  Raise,
  Assert,
};

struct Stmt {
  StmtKind kind;
  int line;
  Stmt(StmtKind k, int l) : kind(k), line(l) {}
  virtual ~Stmt() = default;
};
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct ExprStmt : Stmt {
  ExprPtr value;
  ExprStmt(ExprPtr v, int l) : Stmt(StmtKind::Expr, l), value(std::move(v)) {}
};

struct AssignStmt : Stmt {
  std::vector<ExprPtr> targets;  // a = b = value
  ExprPtr value;
  explicit AssignStmt(int l) : Stmt(StmtKind::Assign, l) {}
};

struct AugAssignStmt : Stmt {
  ExprPtr target;
  BinOpKind op;
  ExprPtr value;
  explicit AugAssignStmt(int l) : Stmt(StmtKind::AugAssign, l) {}
};

struct IfStmt : Stmt {
  ExprPtr test;
  Block body, orelse;
  explicit IfStmt(int l) : Stmt(StmtKind::If, l) {}
};

struct WhileStmt : Stmt {
  ExprPtr test;
  Block body, orelse;
  explicit WhileStmt(int l) : Stmt(StmtKind::While, l) {}
};

struct ForStmt : Stmt {
  ExprPtr target, iter;
  Block body, orelse;
  explicit ForStmt(int l) : Stmt(StmtKind::For, l) {}
};

struct Param {
  std::string name;
  ExprPtr default_value;
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  Block body;
  ExprPtr lambda_body;  // set for lambdas instead of body
  int line = 0;
  // Filled by the resolver.
  std::uint32_t num_slots = 0;
  std::vector<std::string> slot_names;
};

struct DefStmt : Stmt {
  std::shared_ptr<FunctionDef> def;
  ExprPtr target;  // NameExpr the function is bound to
  explicit DefStmt(int l) : Stmt(StmtKind::Def, l) {}
};

struct ReturnStmt : Stmt {
  ExprPtr value;  // optional
  explicit ReturnStmt(int l) : Stmt(StmtKind::Return, l) {}
};

struct SimpleStmt : Stmt {  // break, continue, pass
  SimpleStmt(StmtKind k, int l) : Stmt(k, l) {}
};

struct ImportStmt : Stmt {
  struct Item {
    std::string module;
    std::string member;  // empty for "import module"
    ExprPtr target;      // NameExpr bound
  };
  std::vector<Item> items;
  explicit ImportStmt(int l) : Stmt(StmtKind::Import, l) {}
};

struct GlobalStmt : Stmt {
  std::vector<std::string> names;
  explicit GlobalStmt(int l) : Stmt(StmtKind::Global, l) {}
};

struct DelStmt : Stmt {
  std::vector<ExprPtr> targets;
  explicit DelStmt(int l) : Stmt(StmtKind::Del, l) {}
};

struct ExceptHandler {
  std::vector<std::string> types;  // empty = bare except
  ExprPtr name;                    // optional NameExpr for "as"
  Block body;
};

struct TryStmt : Stmt {
  Block body;
  std::vector<ExceptHandler> handlers;
  Block orelse, finalbody;
  explicit TryStmt(int l) : Stmt(StmtKind::Try, l) {}
};

struct RaiseStmt : Stmt {
  ExprPtr exc;  // optional
  explicit RaiseStmt(int l) : Stmt(StmtKind::Raise, l) {}
};

struct AssertStmt : Stmt {
  ExprPtr test, msg;
  explicit AssertStmt(int l) : Stmt(StmtKind::Assert, l) {}
};

struct ModuleAst {
  std::string source;
  Block body;
  std::vector<std::string> defined_functions;
  std::uint32_t module_slots = 0;  // comprehension variables at module level
};

/// Parses and resolves; throws ScriptError(Syntax).
std::unique_ptr<ModuleAst> parse_module(std::string_view source);

}  // namespace groundwork::script
