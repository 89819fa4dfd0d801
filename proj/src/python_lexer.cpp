#include "python_lexer.hpp"

#include <array>
#include <cctype>

#include "tdgtype/frontend.hpp"

namespace tdgtype::py {

namespace {

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool is_string_prefix(std::string_view s) {
  if (s.size() > 2) return false;
  for (char c : s) {
    switch (std::tolower(static_cast<unsigned char>(c))) {
      case 'r':
      case 'b':
      case 'u':
      case 'f': break;
      default: return false;
    }
  }
  return true;
}

constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "@",  "=",
    "+",   "-",   "*",   "/",   "%",   "&",  "|",  "^",  "~",  "<",  ">"};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_indentation()) continue;
      }
      if (pos_ >= src_.size()) break;
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance();
        continue;
      }
      if (c == '\\') {
        std::size_t p = pos_ + 1;
        if (p < src_.size() && src_[p] == '\r') ++p;
        if (p < src_.size() && src_[p] == '\n') {
          advance();
          if (src_[pos_] == '\r') advance();
          newline_advance();
          continue;
        }
        fail("unexpected character after line continuation");
      }
      if (c == '\n' || c == '\r') {
        if (depth_ == 0 && !out_.empty() && out_.back().kind != TokKind::Newline) {
          emit_simple(TokKind::Newline, "\n", pos_, pos_ + 1);
        }
        if (c == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') advance();
        newline_advance();
        at_line_start_ = true;
        continue;
      }
      lex_token();
    }
    if (!out_.empty() && out_.back().kind != TokKind::Newline) {
      emit_simple(TokKind::Newline, "", pos_, pos_);
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit_simple(TokKind::Dedent, "", pos_, pos_);
    }
    emit_simple(TokKind::EndMarker, "", pos_, pos_);
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(line_, col_, msg); }

  void advance() {
    ++pos_;
    ++col_;
  }

  void newline_advance() {
    ++pos_;
    ++line_;
    col_ = 0;
  }

  // Returns false when the line was blank/comment-only and consumed.
  bool handle_indentation() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      width = src_[p] == '\t' ? (width / 8 + 1) * 8 : width + 1;
      ++p;
    }
    if (p >= src_.size()) {
      col_ += static_cast<int>(p - pos_);
      pos_ = p;
      return false;
    }
    const char c = src_[p];
    if (c == '#' || c == '\n' || c == '\r') {
      col_ += static_cast<int>(p - pos_);
      pos_ = p;
      while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance();
      if (pos_ < src_.size()) {
        if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') advance();
        newline_advance();
      }
      return false;
    }
    col_ += static_cast<int>(p - pos_);
    pos_ = p;
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit_simple(TokKind::Indent, "", pos_, pos_);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit_simple(TokKind::Dedent, "", pos_, pos_);
      }
      if (width != indents_.back()) fail("unindent does not match any outer indentation level");
    }
    return true;
  }

  void emit_simple(TokKind kind, std::string text, std::size_t begin, std::size_t end) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line_;
    t.col = col_;
    t.end_line = line_;
    t.end_col = col_;
    t.begin = begin;
    t.end = end;
    out_.push_back(std::move(t));
  }

  void lex_token() {
    const std::size_t start = pos_;
    const int start_line = line_;
    const int start_col = col_;
    const auto c = static_cast<unsigned char>(src_[pos_]);
    TokKind kind;
    if (is_ident_start(c)) {
      while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) {
        advance();
      }
      if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') &&
          is_string_prefix(src_.substr(start, pos_ - start))) {
        lex_string_body();
        kind = TokKind::String;
      } else {
        kind = TokKind::Name;
      }
    } else if (std::isdigit(c) ||
               (c == '.' && pos_ + 1 < src_.size() &&
                std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      lex_number();
      kind = TokKind::Number;
    } else if (c == '\'' || c == '"') {
      lex_string_body();
      kind = TokKind::String;
    } else {
      std::string_view rest = src_.substr(pos_);
      std::string_view match;
      for (auto op : kOperators) {
        if (rest.substr(0, op.size()) == op) {
          match = op;
          break;
        }
      }
      if (match.empty()) {
        if (c == '!') fail("invalid syntax");
        fail(std::string("unexpected character '") + static_cast<char>(c) + "'");
      }
      for (std::size_t i = 0; i < match.size(); ++i) advance();
      if (match == "(" || match == "[" || match == "{") ++depth_;
      if ((match == ")" || match == "]" || match == "}") && depth_ > 0) --depth_;
      kind = TokKind::Op;
    }
    Token t;
    t.kind = kind;
    t.text = std::string(src_.substr(start, pos_ - start));
    t.line = start_line;
    t.col = start_col;
    t.end_line = line_;
    t.end_col = col_;
    t.begin = start;
    t.end = pos_;
    out_.push_back(std::move(t));
  }

  void lex_number() {
    const bool hex_like = src_[pos_] == '0' && pos_ + 1 < src_.size() &&
                          std::string_view("xXoObB").find(src_[pos_ + 1]) != std::string_view::npos;
    while (pos_ < src_.size()) {
      const auto c = static_cast<unsigned char>(src_[pos_]);
      if (std::isalnum(c) || c == '_' || c == '.') {
        const bool exponent = !hex_like && (c == 'e' || c == 'E');
        advance();
        if (exponent && pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      } else {
        break;
      }
    }
  }

  void lex_string_body() {
    const char quote = src_[pos_];
    const bool triple = src_.substr(pos_, 3) == std::string(3, quote);
    const int open_line = line_;
    const int open_col = col_;
    for (int i = 0; i < (triple ? 3 : 1); ++i) advance();
    while (true) {
      if (pos_ >= src_.size()) throw SyntaxError(open_line, open_col, "unterminated string literal");
      const char c = src_[pos_];
      if (c == '\\') {
        advance();
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\n') {
            newline_advance();
          } else {
            advance();
          }
        }
        continue;
      }
      if (c == '\n') {
        if (!triple) throw SyntaxError(open_line, open_col, "unterminated string literal");
        newline_advance();
        continue;
      }
      if (c == quote) {
        if (!triple) {
          advance();
          return;
        }
        if (src_.substr(pos_, 3) == std::string(3, quote)) {
          advance();
          advance();
          advance();
          return;
        }
      }
      advance();
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 0;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_;
  std::vector<Token> out_;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

}  // namespace tdgtype::py
