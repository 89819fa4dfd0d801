#pragma once

// A compact Python AST: enough of the language for dataflow typing of
// function bodies. Every node carries a line/column span and byte offsets
// into the original source.

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tdgtype::py {

struct Span {
  int line = 0;     // 1-based
  int col = 0;      // 0-based
  int end_line = 0;
  int end_col = 0;
  std::size_t begin = 0;  // byte offsets, [begin, end)
  std::size_t end = 0;
};

enum class ExprKind {
  Name,
  Constant,
  BoolOp,     // op: and / or
  BinOp,      // op: Add Sub Mult Div Mod Pow LShift RShift BitOr BitXor BitAnd FloorDiv MatMult
  UnaryOp,    // op: Not UAdd USub Invert
  Compare,    // ops: Eq NotEq Lt LtE Gt GtE Is IsNot In NotIn
  Lambda,
  IfExp,      // items: body, test, orelse
  Dict,       // items: k0, v0, k1, v1 ...; a null key marks `**mapping`
  Set,
  List,
  Tuple,
  ListComp,   // items: elt
  SetComp,
  DictComp,   // items: key, value
  GeneratorExp,
  Await,
  Yield,
  YieldFrom,
  Call,       // items: func, args...; keywords
  Attribute,  // items: value; id: attr
  Subscript,  // items: value, index
  Slice,      // items: lower, upper, step (nullable)
  Starred,
  NamedExpr,  // items: target, value
  JoinedStr,  // f-string
};

enum class ConstKind { Int, Float, Complex, Str, Bytes, Bool, None, Ellipsis };

enum class Ctx { Load, Store, Del };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Keyword {
  std::optional<std::string> arg;  // nullopt for **kwargs
  ExprPtr value;
};

struct Comprehension {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> ifs;
  bool is_async = false;
};

struct Arguments;

struct Expr {
  ExprKind kind = ExprKind::Constant;
  Span span;
  std::string id;                 // Name id, Attribute attr, operator name
  ConstKind const_kind = ConstKind::None;
  std::string literal;            // source text of constants
  Ctx ctx = Ctx::Load;
  std::vector<ExprPtr> items;     // operands (may contain nulls for Slice/Dict)
  std::vector<std::string> ops;   // Compare operators
  std::vector<Keyword> keywords;  // Call keywords
  std::vector<Comprehension> generators;
  std::shared_ptr<Arguments> lambda_args;
};

enum class ArgKind { PositionalOnly, Normal, VarArgs, KeywordOnly, KwArgs };

struct Arg {
  std::string name;
  ArgKind kind = ArgKind::Normal;
  ExprPtr annotation;
  ExprPtr default_value;
  Span span;
  // Byte range of ": annotation" when present.
  std::size_t annotation_strip_begin = 0;
  std::size_t annotation_strip_end = 0;
};

struct Arguments {
  std::vector<Arg> args;
};

enum class StmtKind {
  FunctionDef,
  ClassDef,
  Return,
  Delete,
  Assign,      // targets..., value
  AugAssign,   // target, value; id: op
  AnnAssign,   // target, annotation, value?
  For,
  While,
  If,
  With,
  Raise,
  Try,
  Assert,
  Import,
  ImportFrom,
  Global,
  Nonlocal,
  ExprStmt,
  Pass,
  Break,
  Continue,
  Opaque,  // statement the parser could not handle inside a function body
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct ImportName {
  std::string name;                  // dotted module path or imported member
  std::optional<std::string> alias;  // `as` name
};

struct ExceptHandler {
  ExprPtr type;
  std::optional<std::string> name;
  Block body;
  Span span;
};

struct WithItem {
  ExprPtr context;
  ExprPtr target;
};

struct FunctionDef;
struct ClassDef;

struct Stmt {
  StmtKind kind = StmtKind::Pass;
  Span span;
  std::vector<ExprPtr> targets;  // Assign targets, For target, Delete targets
  ExprPtr value;                 // Assign/AugAssign/AnnAssign/Return/Expr value, For iter, test
  ExprPtr annotation;            // AnnAssign
  std::string op;                // AugAssign operator
  Block body;
  Block orelse;
  Block finalbody;
  std::vector<ExceptHandler> handlers;
  std::vector<WithItem> items;
  std::vector<ImportName> names;  // Import / ImportFrom / Global / Nonlocal
  std::string module;             // ImportFrom module (without leading dots)
  int level = 0;                  // ImportFrom relative level
  bool is_async = false;
  std::shared_ptr<FunctionDef> function;
  std::shared_ptr<ClassDef> klass;
  // AnnAssign: byte range of ": annotation"
  std::size_t annotation_strip_begin = 0;
  std::size_t annotation_strip_end = 0;
};

struct FunctionDef {
  std::string name;
  std::string qualified_name;
  Arguments args;
  ExprPtr returns;
  std::size_t returns_strip_begin = 0;  // byte range of " -> annotation"
  std::size_t returns_strip_end = 0;
  Block body;
  std::vector<ExprPtr> decorators;
  bool is_async = false;
  bool is_method = false;  // defined directly in a class body
  std::string enclosing_class;
  Span span;
};

struct ClassDef {
  std::string name;
  std::string qualified_name;
  std::vector<ExprPtr> bases;
  std::vector<Keyword> keywords;
  Block body;
  std::vector<ExprPtr> decorators;
  Span span;
};

}  // namespace tdgtype::py
