#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tdgtype::py {

enum class TokKind { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
  TokKind kind = TokKind::EndMarker;
  std::string text;
  int line = 0;
  int col = 0;
  int end_line = 0;
  int end_col = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Splits Python source into tokens with INDENT/DEDENT bookkeeping. Newlines
// inside brackets and after a backslash continuation are dropped.
// Throws SyntaxError on unterminated strings or inconsistent dedents.
std::vector<Token> tokenize(std::string_view source);

}  // namespace tdgtype::py
