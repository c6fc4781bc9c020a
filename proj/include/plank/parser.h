#ifndef PLANK_PARSER_H
#define PLANK_PARSER_H

#include <string>
#include <string_view>
#include <vector>

#include "plank/ast.h"
#include "plank/result.h"

namespace plank {

struct ParseError {
  SourceSpan span;
  std::string message;
  std::vector<std::string> expected;
};

// Parses a whole script. Both the Unicode (→ ⟨ ⟩ ¬) and ASCII (-> < > ~)
// spellings are accepted. After an error the parser resumes at the next
// top-level `;`, so one call reports every broken declaration.
Result<Script, ParseError> parse_script(std::string_view text, const std::string& file = "<script>");

Result<Term, ParseError> parse_term(std::string_view text, const std::string& file = "<term>");

Result<Sort, ParseError> parse_sort(std::string_view text, const std::string& file = "<sort>");

// "FILE:LINE:COL: error: MESSAGE"
std::string format_parse_error(const ParseError& e);

enum class Spelling { Ascii, Unicode };

std::string render(const Sort& s, Spelling spelling = Spelling::Ascii);
std::string render(const Form& f, Spelling spelling = Spelling::Ascii);
std::string render(const Term& t, Spelling spelling = Spelling::Ascii);
std::string render(const Declaration& d, Spelling spelling = Spelling::Ascii);
// One declaration per line.
std::string render(const Script& s, Spelling spelling = Spelling::Ascii);

}  // namespace plank

#endif  // PLANK_PARSER_H
