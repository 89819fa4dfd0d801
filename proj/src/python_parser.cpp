// Recursive-descent parser for the Python statement and expression grammar.
// Statements inside function bodies that fail to parse are kept as Opaque
// statements; failures elsewhere raise SyntaxError.

#include <algorithm>
#include <cctype>
#include <set>

#include "python_lexer.hpp"
#include "tdgtype/frontend.hpp"

namespace tdgtype {

using namespace py;

SyntaxError::SyntaxError(int line, int col, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ":" + std::to_string(col) + ": " +
                         message),
      line_(line),
      col_(col),
      message_(message) {}

namespace {

const std::set<std::string, std::less<>> kKeywords = {
    "False", "None",   "True",    "and",      "as",     "assert", "async", "await",
    "break", "class",  "continue", "def",     "del",    "elif",   "else",  "except",
    "finally", "for",  "from",    "global",   "if",     "import", "in",    "is",
    "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
    "while", "with",   "yield"};

const std::set<std::string, std::less<>> kAugOps = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                                     ">>=", "<<=", "&=", "|=", "^=", "@="};

std::string binop_name(std::string_view op) {
  if (op == "+") return "Add";
  if (op == "-") return "Sub";
  if (op == "*") return "Mult";
  if (op == "/") return "Div";
  if (op == "//") return "FloorDiv";
  if (op == "%") return "Mod";
  if (op == "**") return "Pow";
  if (op == "@") return "MatMult";
  if (op == "<<") return "LShift";
  if (op == ">>") return "RShift";
  if (op == "|") return "BitOr";
  if (op == "^") return "BitXor";
  if (op == "&") return "BitAnd";
  return "?";
}

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string path) : toks_(std::move(toks)) {
    module_.source_path = std::move(path);
  }

  ModuleAst run() {
    while (!at(TokKind::EndMarker)) {
      if (accept(TokKind::Newline)) continue;
      module_.body.push_back(statement());
    }
    return std::move(module_);
  }

 private:
  // --- token helpers ---------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek_tok(std::size_t n = 1) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  bool at(TokKind k) const { return cur().kind == k; }
  bool at_op(std::string_view op) const { return cur().kind == TokKind::Op && cur().text == op; }
  bool at_kw(std::string_view kw) const { return cur().kind == TokKind::Name && cur().text == kw; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(cur().line, cur().col, msg);
  }

  const Token& take() {
    const Token& t = toks_[pos_];
    last_ = pos_;
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  bool accept(TokKind k) {
    if (!at(k)) return false;
    take();
    return true;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    take();
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    take();
    return true;
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("expected '" + std::string(kw) + "'");
  }
  std::string expect_name() {
    if (!at(TokKind::Name) || kKeywords.count(cur().text)) fail("expected a name");
    return take().text;
  }

  Span start_span() const {
    Span s;
    s.line = cur().line;
    s.col = cur().col;
    s.begin = cur().begin;
    return s;
  }
  void finish(Span& s) const {
    const Token& t = toks_[last_];
    s.end_line = t.end_line;
    s.end_col = t.end_col;
    s.end = t.end;
  }

  ExprPtr make(ExprKind k, Span s) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    finish(s);
    e->span = s;
    return e;
  }

  // --- statements ------------------------------------------------------

  Block block() {
    Block out;
    expect_op(":");
    if (!accept(TokKind::Newline)) {
      simple_statements(out);
      return out;
    }
    if (!accept(TokKind::Indent)) fail("expected an indented block");
    while (!at(TokKind::Dedent) && !at(TokKind::EndMarker)) {
      if (accept(TokKind::Newline)) continue;
      if (function_depth_ > 0) {
        out.push_back(recovering_statement());
      } else {
        out.push_back(statement());
      }
    }
    accept(TokKind::Dedent);
    return out;
  }

  StmtPtr recovering_statement() {
    const std::size_t start = pos_;
    const auto saved_functions = module_.functions.size();
    const auto saved_classes = module_.classes.size();
    const auto saved_imports = module_.imports.size();
    try {
      return statement();
    } catch (const SyntaxError&) {
      pos_ = start;
      module_.functions.resize(saved_functions);
      module_.classes.resize(saved_classes);
      module_.imports.resize(saved_imports);
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Opaque;
      Span sp = start_span();
      skip_statement();
      finish(sp);
      s->span = sp;
      return s;
    }
  }

  void skip_statement() {
    while (!at(TokKind::Newline) && !at(TokKind::EndMarker) && !at(TokKind::Dedent)) take();
    accept(TokKind::Newline);
    if (at(TokKind::Indent)) {
      int depth = 0;
      do {
        if (at(TokKind::Indent)) ++depth;
        if (at(TokKind::Dedent)) --depth;
        take();
      } while (depth > 0 && !at(TokKind::EndMarker));
    }
  }

  StmtPtr statement() {
    if (at_op("@")) return decorated();
    if (at_kw("def")) return funcdef({}, false);
    if (at_kw("class")) return classdef({});
    if (at_kw("async")) {
      const Token& next = peek_tok();
      if (next.kind == TokKind::Name && next.text == "def") {
        take();
        return funcdef({}, true);
      }
      if (next.kind == TokKind::Name && (next.text == "for" || next.text == "with")) {
        take();
        auto s = next.text == "for" ? for_stmt() : with_stmt();
        s->is_async = true;
        return s;
      }
    }
    if (at_kw("if")) return if_stmt();
    if (at_kw("while")) return while_stmt();
    if (at_kw("for")) return for_stmt();
    if (at_kw("try")) return try_stmt();
    if (at_kw("with")) return with_stmt();
    Block tmp;
    simple_statements(tmp);
    if (tmp.size() == 1) return std::move(tmp.front());
    // Several `;`-separated statements: wrap them in an always-true If so the
    // caller still receives one statement.
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::If;
    s->span = tmp.front()->span;
    s->span.end = tmp.back()->span.end;
    s->span.end_line = tmp.back()->span.end_line;
    s->span.end_col = tmp.back()->span.end_col;
    auto test = std::make_unique<Expr>();
    test->kind = ExprKind::Constant;
    test->const_kind = ConstKind::Bool;
    test->literal = "True";
    test->span = s->span;
    s->value = std::move(test);
    s->body = std::move(tmp);
    s->op = "semicolon";
    return s;
  }

  StmtPtr decorated() {
    std::vector<ExprPtr> decorators;
    while (accept_op("@")) {
      decorators.push_back(namedexpr_test());
      if (!accept(TokKind::Newline)) fail("expected newline after decorator");
    }
    if (at_kw("def")) return funcdef(std::move(decorators), false);
    if (at_kw("async")) {
      take();
      return funcdef(std::move(decorators), true);
    }
    if (at_kw("class")) return classdef(std::move(decorators));
    fail("expected def or class after decorator");
  }

  std::string qualify(const std::string& name) const {
    if (scope_.empty()) return name;
    return scope_.back() + "." + name;
  }

  std::string unique_function_name(std::string qn) {
    auto& count = name_counts_[qn];
    ++count;
    if (count == 1) return qn;
    return qn + "#" + std::to_string(count);
  }

  StmtPtr funcdef(std::vector<ExprPtr> decorators, bool is_async) {
    Span sp = start_span();
    expect_kw("def");
    auto fn = std::make_shared<FunctionDef>();
    fn->name = expect_name();
    fn->qualified_name = unique_function_name(qualify(fn->name));
    fn->decorators = std::move(decorators);
    fn->is_async = is_async;
    fn->is_method = !class_stack_.empty() && class_scope_depth_.back() == scope_.size();
    if (fn->is_method) fn->enclosing_class = class_stack_.back();
    expect_op("(");
    fn->args = parameters(")", true);
    const Token& rparen = toks_[pos_];
    expect_op(")");
    if (at_op("->")) {
      fn->returns_strip_begin = rparen.end;
      take();
      fn->returns = test();
      fn->returns_strip_end = toks_[last_].end;
    }
    fn->span = sp;
    finish(fn->span);
    const auto index = module_.functions.size();
    module_.functions.push_back(fn);
    scope_.push_back(fn->qualified_name);
    ++function_depth_;
    try {
      fn->body = block();
    } catch (...) {
      --function_depth_;
      scope_.pop_back();
      throw;
    }
    --function_depth_;
    scope_.pop_back();
    (void)index;
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::FunctionDef;
    s->function = fn;
    finish(sp);
    s->span = sp;
    fn->span.end = sp.end;
    fn->span.end_line = sp.end_line;
    return s;
  }

  Arguments parameters(std::string_view closer, bool annotations) {
    Arguments out;
    bool kwonly = false;
    while (!at_op(closer)) {
      Arg a;
      a.span = start_span();
      if (accept_op("/")) {
        for (auto& prev : out.args) {
          if (prev.kind == ArgKind::Normal) prev.kind = ArgKind::PositionalOnly;
        }
        if (!accept_op(",")) break;
        continue;
      }
      if (accept_op("**")) {
        a.kind = ArgKind::KwArgs;
      } else if (accept_op("*")) {
        if (at_op(",") || at_op(closer)) {
          kwonly = true;
          if (!accept_op(",")) break;
          continue;
        }
        a.kind = ArgKind::VarArgs;
        kwonly = true;
      } else {
        a.kind = kwonly ? ArgKind::KeywordOnly : ArgKind::Normal;
      }
      a.name = expect_name();
      if (annotations && at_op(":")) {
        a.annotation_strip_begin = cur().begin;
        take();
        a.annotation = test();
        a.annotation_strip_end = toks_[last_].end;
      }
      if (accept_op("=")) a.default_value = test();
      finish(a.span);
      out.args.push_back(std::move(a));
      if (!accept_op(",")) break;
    }
    return out;
  }

  StmtPtr classdef(std::vector<ExprPtr> decorators) {
    Span sp = start_span();
    expect_kw("class");
    auto cls = std::make_shared<ClassDef>();
    cls->name = expect_name();
    cls->qualified_name = qualify(cls->name);
    cls->decorators = std::move(decorators);
    if (accept_op("(")) {
      while (!at_op(")")) {
        if (at(TokKind::Name) && peek_tok().kind == TokKind::Op && peek_tok().text == "=") {
          Keyword kw;
          kw.arg = take().text;
          take();
          kw.value = test();
          cls->keywords.push_back(std::move(kw));
        } else if (accept_op("**")) {
          Keyword kw;
          kw.value = test();
          cls->keywords.push_back(std::move(kw));
        } else {
          accept_op("*");
          cls->bases.push_back(test());
        }
        if (!accept_op(",")) break;
      }
      expect_op(")");
    }
    module_.classes.push_back(cls);
    scope_.push_back(cls->qualified_name);
    class_stack_.push_back(cls->qualified_name);
    class_scope_depth_.push_back(scope_.size());
    auto pop = [this] {
      scope_.pop_back();
      class_stack_.pop_back();
      class_scope_depth_.pop_back();
    };
    try {
      cls->body = block();
    } catch (...) {
      pop();
      throw;
    }
    pop();
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::ClassDef;
    s->klass = cls;
    finish(sp);
    s->span = sp;
    cls->span = sp;
    return s;
  }

  StmtPtr if_stmt() {
    Span sp = start_span();
    take();  // if / elif
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::If;
    s->value = namedexpr_test();
    s->body = block();
    if (at_kw("elif")) {
      s->orelse.push_back(if_stmt());
    } else if (accept_kw("else")) {
      s->orelse = block();
    }
    finish(sp);
    s->span = sp;
    return s;
  }

  StmtPtr while_stmt() {
    Span sp = start_span();
    expect_kw("while");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::While;
    s->value = namedexpr_test();
    s->body = block();
    if (accept_kw("else")) s->orelse = block();
    finish(sp);
    s->span = sp;
    return s;
  }

  StmtPtr for_stmt() {
    Span sp = start_span();
    expect_kw("for");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::For;
    auto target = exprlist();
    set_store(*target);
    s->targets.push_back(std::move(target));
    expect_kw("in");
    s->value = testlist_star();
    s->body = block();
    if (accept_kw("else")) s->orelse = block();
    finish(sp);
    s->span = sp;
    return s;
  }

  StmtPtr try_stmt() {
    Span sp = start_span();
    expect_kw("try");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Try;
    s->body = block();
    while (at_kw("except")) {
      ExceptHandler h;
      h.span = start_span();
      take();
      accept_op("*");
      if (!at_op(":")) {
        h.type = test();
        if (accept_op(",")) {
          // Python 2 style `except A, e:` is not valid Python 3.
          fail("invalid except clause");
        }
        if (accept_kw("as")) h.name = expect_name();
      }
      h.body = block();
      finish(h.span);
      s->handlers.push_back(std::move(h));
    }
    if (accept_kw("else")) s->orelse = block();
    if (accept_kw("finally")) s->finalbody = block();
    if (s->handlers.empty() && s->finalbody.empty()) fail("expected except or finally");
    finish(sp);
    s->span = sp;
    return s;
  }

  StmtPtr with_stmt() {
    Span sp = start_span();
    expect_kw("with");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::With;
    // Parenthesized item lists are parsed as a tuple expression when they
    // contain no `as`; otherwise as grouped items.
    bool grouped = false;
    if (at_op("(")) {
      std::size_t depth = 0;
      std::size_t p = pos_;
      bool has_as = false;
      for (; p < toks_.size(); ++p) {
        const Token& t = toks_[p];
        if (t.kind == TokKind::Op && (t.text == "(" || t.text == "[" || t.text == "{")) ++depth;
        if (t.kind == TokKind::Op && (t.text == ")" || t.text == "]" || t.text == "}")) {
          if (--depth == 0) break;
        }
        if (depth == 1 && t.kind == TokKind::Name && t.text == "as") has_as = true;
      }
      grouped = has_as && p + 1 < toks_.size() && toks_[p + 1].kind == TokKind::Op &&
                toks_[p + 1].text == ":";
    }
    if (grouped) take();
    while (true) {
      WithItem item;
      item.context = test();
      if (accept_kw("as")) {
        item.target = star_target_expr();
        set_store(*item.target);
      }
      s->items.push_back(std::move(item));
      if (!accept_op(",")) break;
      if (grouped && at_op(")")) break;
    }
    if (grouped) expect_op(")");
    s->body = block();
    finish(sp);
    s->span = sp;
    return s;
  }

  void simple_statements(Block& out) {
    while (true) {
      out.push_back(small_statement());
      if (!accept_op(";")) break;
      if (at(TokKind::Newline)) break;
    }
    if (!accept(TokKind::Newline) && !at(TokKind::EndMarker)) fail("invalid syntax");
  }

  StmtPtr simple(StmtKind k, Span sp) {
    auto s = std::make_unique<Stmt>();
    s->kind = k;
    finish(sp);
    s->span = sp;
    return s;
  }

  StmtPtr small_statement() {
    Span sp = start_span();
    if (accept_kw("pass")) return simple(StmtKind::Pass, sp);
    if (accept_kw("break")) return simple(StmtKind::Break, sp);
    if (accept_kw("continue")) return simple(StmtKind::Continue, sp);
    if (accept_kw("return")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Return;
      if (!at(TokKind::Newline) && !at_op(";") && !at(TokKind::EndMarker)) {
        s->value = testlist_star();
      }
      finish(sp);
      s->span = sp;
      return s;
    }
    if (accept_kw("raise")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Raise;
      if (!at(TokKind::Newline) && !at_op(";") && !at(TokKind::EndMarker)) {
        s->value = test();
        if (accept_kw("from")) s->targets.push_back(test());
      }
      finish(sp);
      s->span = sp;
      return s;
    }
    if (accept_kw("global") || accept_kw("nonlocal")) {
      auto s = std::make_unique<Stmt>();
      s->kind = toks_[last_].text == "global" ? StmtKind::Global : StmtKind::Nonlocal;
      do {
        s->names.push_back({expect_name(), std::nullopt});
      } while (accept_op(","));
      finish(sp);
      s->span = sp;
      return s;
    }
    if (accept_kw("del")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Delete;
      auto targets = exprlist();
      set_ctx(*targets, Ctx::Del);
      s->targets.push_back(std::move(targets));
      finish(sp);
      s->span = sp;
      return s;
    }
    if (accept_kw("assert")) {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Assert;
      s->value = test();
      if (accept_op(",")) s->targets.push_back(test());
      finish(sp);
      s->span = sp;
      return s;
    }
    if (at_kw("import")) return import_stmt();
    if (at_kw("from")) return from_import_stmt();
    return expr_statement();
  }

  std::string dotted_name() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  StmtPtr import_stmt() {
    Span sp = start_span();
    expect_kw("import");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Import;
    do {
      ImportName n;
      n.name = dotted_name();
      if (accept_kw("as")) n.alias = expect_name();
      ImportRecord rec;
      rec.module = n.name;
      rec.alias = n.alias;
      rec.line = sp.line;
      module_.imports.push_back(std::move(rec));
      s->names.push_back(std::move(n));
    } while (accept_op(","));
    finish(sp);
    s->span = sp;
    return s;
  }

  StmtPtr from_import_stmt() {
    Span sp = start_span();
    expect_kw("from");
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::ImportFrom;
    while (at_op(".") || at_op("...")) s->level += static_cast<int>(take().text.size());
    if (!at_kw("import")) s->module = dotted_name();
    expect_kw("import");
    ImportRecord rec;
    rec.module = s->module;
    rec.level = s->level;
    rec.line = sp.line;
    const bool paren = accept_op("(");
    if (accept_op("*")) {
      rec.names.push_back("*");
      rec.member_aliases.push_back(std::nullopt);
      s->names.push_back({"*", std::nullopt});
    } else {
      do {
        if (paren && at_op(")")) break;
        ImportName n;
        n.name = expect_name();
        if (accept_kw("as")) n.alias = expect_name();
        rec.names.push_back(n.name);
        rec.member_aliases.push_back(n.alias);
        s->names.push_back(std::move(n));
      } while (accept_op(","));
    }
    if (paren) expect_op(")");
    module_.imports.push_back(std::move(rec));
    finish(sp);
    s->span = sp;
    return s;
  }

  StmtPtr expr_statement() {
    Span sp = start_span();
    auto first = at_kw("yield") ? yield_expr() : testlist_star();
    auto s = std::make_unique<Stmt>();
    if (at_op(":")) {
      // annotated assignment
      s->kind = StmtKind::AnnAssign;
      s->annotation_strip_begin = cur().begin;
      take();
      s->annotation = test();
      s->annotation_strip_end = toks_[last_].end;
      set_store(*first);
      s->targets.push_back(std::move(first));
      if (accept_op("=")) s->value = at_kw("yield") ? yield_expr() : testlist_star();
    } else if (cur().kind == TokKind::Op && kAugOps.count(cur().text)) {
      s->kind = StmtKind::AugAssign;
      std::string op = take().text;
      op.pop_back();
      s->op = binop_name(op);
      set_store(*first);
      s->targets.push_back(std::move(first));
      s->value = at_kw("yield") ? yield_expr() : testlist_star();
    } else if (at_op("=")) {
      s->kind = StmtKind::Assign;
      std::vector<ExprPtr> chain;
      chain.push_back(std::move(first));
      while (accept_op("=")) chain.push_back(at_kw("yield") ? yield_expr() : testlist_star());
      s->value = std::move(chain.back());
      chain.pop_back();
      for (auto& t : chain) {
        set_store(*t);
        s->targets.push_back(std::move(t));
      }
    } else {
      s->kind = StmtKind::ExprStmt;
      s->value = std::move(first);
    }
    finish(sp);
    s->span = sp;
    return s;
  }

  void set_ctx(Expr& e, Ctx ctx) {
    e.ctx = ctx;
    if (e.kind == ExprKind::Tuple || e.kind == ExprKind::List || e.kind == ExprKind::Starred) {
      for (auto& item : e.items) {
        if (item) set_ctx(*item, ctx);
      }
    }
  }

  void set_store(Expr& e) {
    switch (e.kind) {
      case ExprKind::Name:
      case ExprKind::Attribute:
      case ExprKind::Subscript:
      case ExprKind::Tuple:
      case ExprKind::List:
      case ExprKind::Starred: break;
      default: throw SyntaxError(e.span.line, e.span.col, "cannot assign to expression");
    }
    set_ctx(e, Ctx::Store);
  }

  // --- expressions -----------------------------------------------------

  ExprPtr yield_expr() {
    Span sp = start_span();
    expect_kw("yield");
    if (accept_kw("from")) {
      auto e = test();
      auto y = make(ExprKind::YieldFrom, sp);
      y->items.push_back(std::move(e));
      return y;
    }
    ExprPtr value;
    if (!at_op(")") && !at(TokKind::Newline) && !at_op("=") && !at_op(";") &&
        !at(TokKind::EndMarker) && !at_op("]") && !at_op("}")) {
      value = testlist_star();
    }
    auto y = make(ExprKind::Yield, sp);
    y->items.push_back(std::move(value));
    return y;
  }

  // testlist_star_expr: tuple without parens when a comma is present
  ExprPtr testlist_star() {
    Span sp = start_span();
    auto first = star_or_namedexpr();
    if (!at_op(",")) return first;
    std::vector<ExprPtr> items;
    items.push_back(std::move(first));
    while (accept_op(",")) {
      if (ends_testlist()) break;
      items.push_back(star_or_namedexpr());
    }
    auto t = make(ExprKind::Tuple, sp);
    t->items = std::move(items);
    return t;
  }

  bool ends_testlist() const {
    return at(TokKind::Newline) || at_op("=") || at_op(")") || at_op(":") || at_op(";") ||
           at(TokKind::EndMarker) || at_op("]") || at_op("}") ||
           (cur().kind == TokKind::Op && kAugOps.count(cur().text)) || at_kw("in");
  }

  ExprPtr star_or_namedexpr() {
    if (at_op("*")) return star_expr();
    return namedexpr_test();
  }

  ExprPtr star_expr() {
    Span sp = start_span();
    expect_op("*");
    auto inner = expr();
    auto s = make(ExprKind::Starred, sp);
    s->items.push_back(std::move(inner));
    return s;
  }

  ExprPtr star_target_expr() {
    if (at_op("*")) return star_expr();
    return expr();
  }

  // exprlist: targets of for / del
  ExprPtr exprlist() {
    Span sp = start_span();
    auto first = star_target_expr();
    if (!at_op(",")) return first;
    std::vector<ExprPtr> items;
    items.push_back(std::move(first));
    while (accept_op(",")) {
      if (ends_testlist()) break;
      items.push_back(star_target_expr());
    }
    auto t = make(ExprKind::Tuple, sp);
    t->items = std::move(items);
    return t;
  }

  ExprPtr namedexpr_test() {
    if (at(TokKind::Name) && peek_tok().kind == TokKind::Op && peek_tok().text == ":=") {
      Span sp = start_span();
      auto target = atom();
      target->ctx = Ctx::Store;
      take();
      auto value = test();
      auto e = make(ExprKind::NamedExpr, sp);
      e->items.push_back(std::move(target));
      e->items.push_back(std::move(value));
      return e;
    }
    return test();
  }

  ExprPtr test() {
    if (at_kw("lambda")) return lambdef(true);
    Span sp = start_span();
    auto body = or_test();
    if (at_kw("if")) {
      // Do not swallow the `if` of a comprehension clause.
      take();
      auto cond = or_test();
      expect_kw("else");
      auto orelse = test();
      auto e = make(ExprKind::IfExp, sp);
      e->items.push_back(std::move(body));
      e->items.push_back(std::move(cond));
      e->items.push_back(std::move(orelse));
      return e;
    }
    return body;
  }

  ExprPtr test_nocond() {
    if (at_kw("lambda")) return lambdef(false);
    return or_test();
  }

  ExprPtr lambdef(bool allow_cond) {
    Span sp = start_span();
    expect_kw("lambda");
    auto args = std::make_shared<Arguments>(parameters(":", false));
    expect_op(":");
    auto body = allow_cond ? test() : test_nocond();
    auto e = make(ExprKind::Lambda, sp);
    e->lambda_args = std::move(args);
    e->items.push_back(std::move(body));
    return e;
  }

  ExprPtr or_test() {
    Span sp = start_span();
    auto first = and_test();
    if (!at_kw("or")) return first;
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::BoolOp;
    e->id = "Or";
    e->items.push_back(std::move(first));
    while (accept_kw("or")) e->items.push_back(and_test());
    finish(sp);
    e->span = sp;
    return e;
  }

  ExprPtr and_test() {
    Span sp = start_span();
    auto first = not_test();
    if (!at_kw("and")) return first;
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::BoolOp;
    e->id = "And";
    e->items.push_back(std::move(first));
    while (accept_kw("and")) e->items.push_back(not_test());
    finish(sp);
    e->span = sp;
    return e;
  }

  ExprPtr not_test() {
    if (at_kw("not")) {
      Span sp = start_span();
      take();
      auto operand = not_test();
      auto e = make(ExprKind::UnaryOp, sp);
      e->id = "Not";
      e->items.push_back(std::move(operand));
      return e;
    }
    return comparison();
  }

  std::optional<std::string> comp_op() {
    if (cur().kind == TokKind::Op) {
      const auto& t = cur().text;
      if (t == "<") return "Lt";
      if (t == ">") return "Gt";
      if (t == "==") return "Eq";
      if (t == ">=") return "GtE";
      if (t == "<=") return "LtE";
      if (t == "!=") return "NotEq";
      return std::nullopt;
    }
    if (at_kw("in")) return "In";
    if (at_kw("is")) return "Is";
    if (at_kw("not") && peek_tok().kind == TokKind::Name && peek_tok().text == "in") return "NotIn";
    return std::nullopt;
  }

  ExprPtr comparison() {
    Span sp = start_span();
    auto first = expr();
    auto op = comp_op();
    if (!op) return first;
    auto e = std::make_unique<Expr>();
    e->kind = ExprKind::Compare;
    e->items.push_back(std::move(first));
    while ((op = comp_op())) {
      take();
      if (*op == "NotIn") take();
      if (*op == "Is" && accept_kw("not")) *op = "IsNot";
      e->ops.push_back(*op);
      e->items.push_back(expr());
    }
    finish(sp);
    e->span = sp;
    return e;
  }

  ExprPtr binary_level(int level) {
    static const std::vector<std::vector<std::string_view>> kLevels = {
        {"|"}, {"^"}, {"&"}, {"<<", ">>"}, {"+", "-"}, {"*", "@", "/", "%", "//"}};
    if (level >= static_cast<int>(kLevels.size())) return factor();
    Span sp = start_span();
    auto left = binary_level(level + 1);
    while (cur().kind == TokKind::Op) {
      const auto& ops = kLevels[static_cast<std::size_t>(level)];
      if (std::find(ops.begin(), ops.end(), cur().text) == ops.end()) break;
      std::string op = take().text;
      auto right = binary_level(level + 1);
      auto e = make(ExprKind::BinOp, sp);
      e->id = binop_name(op);
      e->items.push_back(std::move(left));
      e->items.push_back(std::move(right));
      left = std::move(e);
    }
    return left;
  }

  ExprPtr expr() { return binary_level(0); }

  ExprPtr factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      Span sp = start_span();
      const std::string op = take().text;
      auto operand = factor();
      auto e = make(ExprKind::UnaryOp, sp);
      e->id = op == "+" ? "UAdd" : op == "-" ? "USub" : "Invert";
      e->items.push_back(std::move(operand));
      return e;
    }
    return power();
  }

  ExprPtr power() {
    Span sp = start_span();
    auto base = await_primary();
    if (accept_op("**")) {
      auto exp = factor();
      auto e = make(ExprKind::BinOp, sp);
      e->id = "Pow";
      e->items.push_back(std::move(base));
      e->items.push_back(std::move(exp));
      return e;
    }
    return base;
  }

  ExprPtr await_primary() {
    if (at_kw("await")) {
      Span sp = start_span();
      take();
      auto inner = primary();
      auto e = make(ExprKind::Await, sp);
      e->items.push_back(std::move(inner));
      return e;
    }
    return primary();
  }

  ExprPtr primary() {
    Span sp = start_span();
    auto e = atom();
    while (true) {
      if (accept_op("(")) {
        auto call = std::make_unique<Expr>();
        call->kind = ExprKind::Call;
        call->items.push_back(std::move(e));
        arglist(*call);
        expect_op(")");
        finish(sp);
        call->span = sp;
        e = std::move(call);
      } else if (accept_op("[")) {
        auto index = subscript_list();
        expect_op("]");
        auto sub = make(ExprKind::Subscript, sp);
        sub->items.push_back(std::move(e));
        sub->items.push_back(std::move(index));
        e = std::move(sub);
      } else if (accept_op(".")) {
        std::string attr = expect_name();
        auto a = make(ExprKind::Attribute, sp);
        a->id = std::move(attr);
        a->items.push_back(std::move(e));
        e = std::move(a);
      } else {
        break;
      }
    }
    return e;
  }

  void arglist(Expr& call) {
    while (!at_op(")")) {
      if (accept_op("**")) {
        Keyword kw;
        kw.value = test();
        call.keywords.push_back(std::move(kw));
      } else if (at_op("*")) {
        call.items.push_back(star_expr());
      } else if (at(TokKind::Name) && peek_tok().kind == TokKind::Op && peek_tok().text == "=") {
        Keyword kw;
        kw.arg = take().text;
        take();
        kw.value = test();
        call.keywords.push_back(std::move(kw));
      } else {
        Span sp = start_span();
        auto value = namedexpr_test();
        if (at_kw("for") || at_kw("async")) {
          auto gen = make(ExprKind::GeneratorExp, sp);
          gen->items.push_back(std::move(value));
          comp_for(*gen);
          finish(sp);
          gen->span = sp;
          value = std::move(gen);
        }
        call.items.push_back(std::move(value));
      }
      if (!accept_op(",")) break;
    }
  }

  ExprPtr subscript_list() {
    Span sp = start_span();
    auto first = subscript();
    if (!at_op(",")) return first;
    auto t = std::make_unique<Expr>();
    t->kind = ExprKind::Tuple;
    t->items.push_back(std::move(first));
    while (accept_op(",")) {
      if (at_op("]")) break;
      t->items.push_back(subscript());
    }
    finish(sp);
    t->span = sp;
    return t;
  }

  ExprPtr subscript() {
    Span sp = start_span();
    ExprPtr lower;
    if (!at_op(":")) {
      if (at_op("*")) return star_expr();
      lower = namedexpr_test();
      if (!at_op(":")) return lower;
    }
    take();  // ':'
    ExprPtr upper;
    ExprPtr step;
    if (!at_op("]") && !at_op(",") && !at_op(":")) upper = test();
    if (accept_op(":")) {
      if (!at_op("]") && !at_op(",")) step = test();
    }
    auto s = make(ExprKind::Slice, sp);
    s->items.push_back(std::move(lower));
    s->items.push_back(std::move(upper));
    s->items.push_back(std::move(step));
    return s;
  }

  void comp_for(Expr& e) {
    while (at_kw("for") || at_kw("async")) {
      Comprehension c;
      if (accept_kw("async")) c.is_async = true;
      expect_kw("for");
      c.target = exprlist();
      set_store(*c.target);
      expect_kw("in");
      c.iter = or_test();
      while (at_kw("if")) {
        take();
        c.ifs.push_back(test_nocond());
      }
      e.generators.push_back(std::move(c));
    }
  }

  ExprPtr constant(ConstKind k, Span sp, std::string literal) {
    auto e = make(ExprKind::Constant, sp);
    e->const_kind = k;
    e->literal = std::move(literal);
    return e;
  }

  ExprPtr atom() {
    Span sp = start_span();
    const Token& t = cur();
    switch (t.kind) {
      case TokKind::Name: {
        if (t.text == "None") {
          take();
          return constant(ConstKind::None, sp, "None");
        }
        if (t.text == "True" || t.text == "False") {
          std::string lit = take().text;
          return constant(ConstKind::Bool, sp, lit);
        }
        if (kKeywords.count(t.text)) fail("invalid syntax");
        auto e = std::make_unique<Expr>();
        e->kind = ExprKind::Name;
        e->id = take().text;
        finish(sp);
        e->span = sp;
        return e;
      }
      case TokKind::Number: {
        std::string lit = take().text;
        ConstKind k = ConstKind::Int;
        const bool hex_like = lit.size() > 1 && lit[0] == '0' &&
                              std::string_view("xXoObB").find(lit[1]) != std::string_view::npos;
        if (!lit.empty() && (lit.back() == 'j' || lit.back() == 'J')) {
          k = ConstKind::Complex;
        } else if (!hex_like && lit.find_first_of(".eE") != std::string::npos) {
          k = ConstKind::Float;
        }
        return constant(k, sp, lit);
      }
      case TokKind::String: {
        std::string lit;
        bool is_bytes = false;
        bool is_fstring = false;
        while (at(TokKind::String)) {
          const std::string& s = cur().text;
          const auto q = s.find_first_of("'\"");
          for (std::size_t i = 0; i < q; ++i) {
            const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[i])));
            if (c == 'b') is_bytes = true;
            if (c == 'f') is_fstring = true;
          }
          if (!lit.empty()) lit += " ";
          lit += take().text;
        }
        if (is_fstring) {
          auto e = make(ExprKind::JoinedStr, sp);
          e->literal = std::move(lit);
          return e;
        }
        return constant(is_bytes ? ConstKind::Bytes : ConstKind::Str, sp, lit);
      }
      case TokKind::Op: break;
      default: fail("invalid syntax");
    }
    if (accept_op("...")) return constant(ConstKind::Ellipsis, sp, "...");
    if (accept_op("(")) {
      if (accept_op(")")) return make(ExprKind::Tuple, sp);
      if (at_kw("yield")) {
        auto y = yield_expr();
        expect_op(")");
        return y;
      }
      auto first = star_or_namedexpr();
      if (at_kw("for") || at_kw("async")) {
        auto gen = std::make_unique<Expr>();
        gen->kind = ExprKind::GeneratorExp;
        gen->items.push_back(std::move(first));
        comp_for(*gen);
        expect_op(")");
        finish(sp);
        gen->span = sp;
        return gen;
      }
      if (accept_op(")")) {
        // Parenthesized expression keeps its inner span.
        return first;
      }
      auto tup = std::make_unique<Expr>();
      tup->kind = ExprKind::Tuple;
      tup->items.push_back(std::move(first));
      while (accept_op(",")) {
        if (at_op(")")) break;
        tup->items.push_back(star_or_namedexpr());
      }
      expect_op(")");
      finish(sp);
      tup->span = sp;
      return tup;
    }
    if (accept_op("[")) {
      auto list = std::make_unique<Expr>();
      list->kind = ExprKind::List;
      if (!at_op("]")) {
        auto first = star_or_namedexpr();
        if (at_kw("for") || at_kw("async")) {
          list->kind = ExprKind::ListComp;
          list->items.push_back(std::move(first));
          comp_for(*list);
        } else {
          list->items.push_back(std::move(first));
          while (accept_op(",")) {
            if (at_op("]")) break;
            list->items.push_back(star_or_namedexpr());
          }
        }
      }
      expect_op("]");
      finish(sp);
      list->span = sp;
      return list;
    }
    if (accept_op("{")) {
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Dict;
      if (!at_op("}")) dict_or_set(*e);
      expect_op("}");
      finish(sp);
      e->span = sp;
      return e;
    }
    fail("invalid syntax");
  }

  void dict_or_set(Expr& e) {
    auto entry = [&](bool first) {
      if (accept_op("**")) {
        if (!first && e.kind != ExprKind::Dict) fail("invalid set display");
        e.items.push_back(nullptr);
        e.items.push_back(expr());
        return;
      }
      if (at_op("*")) {
        if (!first && e.kind != ExprKind::Set) fail("invalid dict display");
        e.kind = ExprKind::Set;
        e.items.push_back(star_expr());
        return;
      }
      auto k = namedexpr_test();
      if (accept_op(":")) {
        if (!first && e.kind != ExprKind::Dict) fail("invalid set display");
        e.items.push_back(std::move(k));
        e.items.push_back(test());
      } else {
        if (!first && e.kind != ExprKind::Set) fail("invalid dict display");
        e.kind = ExprKind::Set;
        e.items.push_back(std::move(k));
      }
    };
    entry(true);
    if (at_kw("for") || at_kw("async")) {
      e.kind = e.kind == ExprKind::Dict ? ExprKind::DictComp : ExprKind::SetComp;
      comp_for(e);
      return;
    }
    while (accept_op(",")) {
      if (at_op("}")) break;
      entry(false);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t last_ = 0;
  ModuleAst module_;
  std::vector<std::string> scope_;
  std::vector<std::string> class_stack_;
  std::vector<std::size_t> class_scope_depth_;
  std::map<std::string, int> name_counts_;
  int function_depth_ = 0;
};

}  // namespace

ModuleAst parse_module(std::string_view source, std::string path) {
  Parser p(py::tokenize(source), std::move(path));
  ModuleAst m = p.run();
  // Module-level named tuples: `Point = namedtuple(...)` / `NamedTuple(...)`.
  for (const auto& s : m.body) {
    if (s->kind != StmtKind::Assign || !s->value || s->value->kind != ExprKind::Call) continue;
    const Expr& callee = *s->value->items.front();
    std::string fname = callee.kind == ExprKind::Name        ? callee.id
                        : callee.kind == ExprKind::Attribute ? callee.id
                                                             : "";
    if (fname != "namedtuple" && fname != "NamedTuple") continue;
    for (const auto& t : s->targets) {
      if (t->kind == ExprKind::Name) m.namedtuples.push_back(t->id);
    }
  }
  return m;
}

const FunctionDef* ModuleAst::find_function(std::string_view qualified_name) const {
  for (const auto& f : functions) {
    if (f->qualified_name == qualified_name) return f.get();
  }
  return nullptr;
}

const ClassDef* ModuleAst::find_class(std::string_view name) const {
  for (const auto& c : classes) {
    if (c->qualified_name == name || c->name == name) return c.get();
  }
  return nullptr;
}

}  // namespace tdgtype
