#pragma once

#include <string>
#include <string_view>

#include "homesentry/errors.hpp"
#include "homesentry/logic/ast.hpp"

namespace homesentry::logic {

class ParseError : public DataError {
 public:
  ParseError(int line, int col, const std::string& msg)
      : DataError("line " + std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

// Parses a rule program:
//   #const name = int.
//   fact(a; b, c).                        pooled arguments expand per alternative
//   head(X) :- body(X), X >= l, not q(X).
//   %@ requirement id=ADEV2 diagnosis="DDoS/Botnet" ...
//   :- constraint_body.
//   { choice(S) : cond(S) } = 1 :- body.  parsed, inert
// '%' starts a comment except the '%@' annotation form above. Rejects unsafe
// rules, programs with a negation cycle, duplicate requirement ids, and
// references to undefined #const names.
Program parse_program(std::string_view text);

Program parse_program_file(const std::string& path);

}  // namespace homesentry::logic
