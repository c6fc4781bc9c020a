#include "plank/parser.h"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <optional>

namespace plank {

namespace {

enum class Tok {
  Upper,
  Lower,
  Meta,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Comma,
  Semi,
  Colon,
  Arrow,
  LAngle,
  RAngle,
  Not,
  End,
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Upper: return "constructor identifier";
    case Tok::Lower: return "variable identifier";
    case Tok::Meta: return "meta-variable";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Semi: return "';'";
    case Tok::Colon: return "':'";
    case Tok::Arrow: return "'->'";
    case Tok::LAngle: return "'<'";
    case Tok::RAngle: return "'>'";
    case Tok::Not: return "'~'";
    case Tok::End: return "end of input";
  }
  return "token";
}

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

bool is_tail(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  Lexer(std::string_view text, const std::string& file) : text_(text), file_(file) {}

  std::vector<Token> run(std::vector<ParseError>& errors) {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      if (at_end()) break;
      const int line = line_, col = col_;
      const char c = text_[pos_];
      auto single = [&](Tok kind, size_t bytes) {
        std::string spelled(text_.substr(pos_, bytes));
        advance(bytes);
        out.push_back({kind, std::move(spelled), span(line, col)});
      };
      if (std::isupper(static_cast<unsigned char>(c)) || std::islower(static_cast<unsigned char>(c))) {
        const size_t start = pos_;
        while (!at_end() && is_tail(text_[pos_])) advance(1);
        const Tok kind = std::isupper(static_cast<unsigned char>(c)) ? Tok::Upper : Tok::Lower;
        out.push_back({kind, std::string(text_.substr(start, pos_ - start)), span(line, col)});
      } else if (c == '#' && pos_ + 1 < text_.size() &&
                 std::isalpha(static_cast<unsigned char>(text_[pos_ + 1]))) {
        const size_t start = pos_;
        advance(1);
        while (!at_end() && is_tail(text_[pos_])) advance(1);
        out.push_back({Tok::Meta, std::string(text_.substr(start, pos_ - start)), span(line, col)});
      } else if (c == '(') {
        single(Tok::LParen, 1);
      } else if (c == ')') {
        single(Tok::RParen, 1);
      } else if (c == '[') {
        single(Tok::LBracket, 1);
      } else if (c == ']') {
        single(Tok::RBracket, 1);
      } else if (c == '{') {
        single(Tok::LBrace, 1);
      } else if (c == '}') {
        single(Tok::RBrace, 1);
      } else if (c == ',') {
        single(Tok::Comma, 1);
      } else if (c == ';') {
        single(Tok::Semi, 1);
      } else if (c == ':') {
        single(Tok::Colon, 1);
      } else if (c == '<') {
        single(Tok::LAngle, 1);
      } else if (c == '>') {
        single(Tok::RAngle, 1);
      } else if (c == '~') {
        single(Tok::Not, 1);
      } else if (looking_at("->")) {
        single(Tok::Arrow, 2);
      } else if (looking_at("→")) {
        single(Tok::Arrow, 3);
      } else if (looking_at("⟨")) {
        single(Tok::LAngle, 3);
      } else if (looking_at("⟩")) {
        single(Tok::RAngle, 3);
      } else if (looking_at("¬")) {
        single(Tok::Not, 2);
      } else {
        const size_t start = pos_;
        advance(1);
        while (!at_end() && (static_cast<unsigned char>(text_[pos_]) & 0xC0) == 0x80) advance(1);
        errors.push_back({span(line, col),
                          fmt::format("unexpected character '{}'", text_.substr(start, pos_ - start)),
                          {}});
      }
    }
    SourceSpan end{file_, line_, col_, line_, col_};
    out.push_back({Tok::End, "", end});
    return out;
  }

 private:
  std::string_view text_;
  const std::string& file_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  int last_line_ = 1;
  int last_col_ = 1;

  bool at_end() const { return pos_ >= text_.size(); }
  bool looking_at(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  void advance(size_t bytes) {
    for (size_t i = 0; i < bytes && !at_end(); ++i) {
      const unsigned char c = static_cast<unsigned char>(text_[pos_++]);
      if ((c & 0xC0) == 0x80) continue;
      last_line_ = line_;
      last_col_ = col_;
      if (c == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void skip_space() {
    while (!at_end()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        advance(1);
      } else if (looking_at("//")) {
        while (!at_end() && text_[pos_] != '\n') advance(1);
      } else {
        break;
      }
    }
  }

  SourceSpan span(int line, int col) const { return SourceSpan{file_, line, col, last_line_, last_col_}; }
};

SourceSpan join(const SourceSpan& a, const SourceSpan& b) {
  return SourceSpan{a.file, a.start_line, a.start_col, b.end_line, b.end_col};
}

class Parser {
 public:
  Parser(std::string_view text, const std::string& file) : file_(file) {
    toks_ = Lexer(text, file).run(errors_);
  }

  Result<Script, ParseError> script() {
    Script s;
    while (peek().kind != Tok::End) {
      try {
        s.declarations.push_back(declaration());
      } catch (const Failure&) {
        recover();
      }
    }
    if (!errors_.empty()) return std::move(errors_);
    return s;
  }

  template <typename T, typename F>
  Result<T, ParseError> whole(F&& f) {
    std::optional<T> out;
    try {
      out = f();
      expect(Tok::End, "end of input");
    } catch (const Failure&) {
    }
    if (!errors_.empty()) return std::move(errors_);
    return std::move(*out);
  }

  Term term() {
    const Token& first = peek();
    if (first.kind == Tok::Upper) {
      Token head = take();
      std::vector<Piece> args;
      if (accept(Tok::LParen) && !accept(Tok::RParen)) {
        do {
          args.push_back(piece());
        } while (accept(Tok::Comma));
        expect(Tok::RParen, "',' or ')'");
      }
      return Term::construction(head.text, std::move(args), join(head.span, prev_end()));
    }
    if (first.kind == Tok::Lower) {
      Token v = take();
      return Term::var(v.text, v.span);
    }
    if (first.kind == Tok::Meta) {
      Token m = take();
      auto args = meta_args();
      return Term::meta(m.text, std::move(args), join(m.span, prev_end()));
    }
    fail(first, "expected a term", {describe(Tok::Upper), describe(Tok::Lower), describe(Tok::Meta)});
  }

  Sort sort() {
    const Token& first = peek();
    if (first.kind == Tok::Upper) {
      Token name = take();
      std::vector<Sort> args;
      if (accept(Tok::LAngle) && !accept(Tok::RAngle)) {
        do {
          args.push_back(sort());
        } while (accept(Tok::Comma));
        expect(Tok::RAngle, "',' or '>'");
      }
      return Sort::cons(name.text, std::move(args));
    }
    if (first.kind == Tok::Lower) return Sort::var(take().text);
    fail(first, "expected a sort", {describe(Tok::Upper), describe(Tok::Lower)});
  }

 private:
  struct Failure {};

  std::string file_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::vector<ParseError> errors_;

  const Token& peek() const { return toks_[pos_]; }
  const SourceSpan& prev_end() const { return toks_[pos_ == 0 ? 0 : pos_ - 1].span; }

  Token take() {
    Token t = toks_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }

  bool accept(Tok kind) {
    if (peek().kind != kind) return false;
    take();
    return true;
  }

  Token expect(Tok kind, const char* what) {
    if (peek().kind != kind) fail(peek(), fmt::format("expected {}", what), {describe(kind)});
    return take();
  }

  [[noreturn]] void fail(const Token& at, std::string message, std::vector<std::string> expected) {
    if (at.kind == Tok::End)
      message += ", found end of input";
    else
      message += fmt::format(", found '{}'", at.text);
    errors_.push_back({at.span, std::move(message), std::move(expected)});
    throw Failure{};
  }

  // Skips to just past the next `;` outside any environment braces opened
  // after the point of failure. Only braces can legitimately hold a `;`.
  void recover() {
    int depth = 0;
    while (peek().kind != Tok::End) {
      const Tok k = take().kind;
      if (k == Tok::LBrace) ++depth;
      if (k == Tok::RBrace && depth > 0) --depth;
      if (k == Tok::Semi && depth == 0) return;
    }
  }

  Declaration declaration() {
    const SourceSpan start = peek().span;
    Sort s = sort();
    const Token& kw = peek();
    if (kw.kind == Tok::Lower && (kw.text == "data" || kw.text == "scheme")) {
      const bool is_data = take().text == "data";
      Token name = expect(Tok::Upper, "constructor name");
      std::vector<Form> forms;
      if (accept(Tok::LParen) && !accept(Tok::RParen)) {
        do {
          forms.push_back(form());
        } while (accept(Tok::Comma));
        expect(Tok::RParen, "',' or ')'");
      }
      expect(Tok::Semi, "';'");
      const SourceSpan span = join(start, prev_end());
      if (is_data) return DataDecl{std::move(s), name.text, std::move(forms), span};
      return SchemeDecl{std::move(s), name.text, std::move(forms), span};
    }
    if (kw.kind == Tok::Lower && kw.text == "variable") {
      take();
      expect(Tok::Semi, "';'");
      return VariableDecl{std::move(s), join(start, prev_end())};
    }
    if (kw.kind == Tok::Lower && kw.text == "rule") {
      take();
      Term lhs = term();
      expect(Tok::Arrow, "'->'");
      Term rhs = term();
      expect(Tok::Semi, "';'");
      return RuleDecl{std::move(s), std::move(lhs), std::move(rhs), join(start, prev_end())};
    }
    fail(kw, "expected declaration keyword", {"'data'", "'scheme'", "'variable'", "'rule'"});
  }

  Form form() {
    if (accept(Tok::LBracket)) {
      std::vector<Sort> binders;
      if (!accept(Tok::RBracket)) {
        do {
          binders.push_back(sort());
        } while (accept(Tok::Comma));
        expect(Tok::RBracket, "',' or ']'");
      }
      return ScopeForm{std::move(binders), sort()};
    }
    if (accept(Tok::LBrace)) {
      Sort key = sort();
      expect(Tok::Colon, "':'");
      Sort value = sort();
      expect(Tok::RBrace, "'}'");
      return AssocForm{std::move(key), std::move(value)};
    }
    return ScopeForm{{}, sort()};
  }

  std::vector<Term> meta_args() {
    std::vector<Term> args;
    if (accept(Tok::LParen) && !accept(Tok::RParen)) {
      do {
        args.push_back(term());
      } while (accept(Tok::Comma));
      expect(Tok::RParen, "',' or ')'");
    }
    return args;
  }

  Piece piece() {
    if (peek().kind == Tok::LBracket) {
      take();
      std::vector<std::string> binders;
      if (!accept(Tok::RBracket)) {
        do {
          Token b = expect(Tok::Lower, "binder variable");
          if (std::find(binders.begin(), binders.end(), b.text) != binders.end()) {
            errors_.push_back({b.span, fmt::format("duplicate binder '{}'", b.text), {}});
            throw Failure{};
          }
          binders.push_back(b.text);
        } while (accept(Tok::Comma));
        expect(Tok::RBracket, "',' or ']'");
      }
      return ScopePiece{std::move(binders), term()};
    }
    if (accept(Tok::LBrace)) {
      AssocPiece p;
      if (accept(Tok::RBrace)) return p;
      do {
        p.entries.push_back(association());
      } while (accept(Tok::Comma) || accept(Tok::Semi));
      expect(Tok::RBrace, "',', ';' or '}'");
      return p;
    }
    return plain(term());
  }

  Association association() {
    const Token& first = peek();
    if (first.kind == Tok::Lower) {
      Token key = take();
      expect(Tok::Colon, "':'");
      Term value = term();
      return MapEntry{key.text, std::move(value), join(key.span, prev_end())};
    }
    if (first.kind == Tok::Not) {
      Token neg = take();
      Token key = expect(Tok::Lower, "key variable");
      expect(Tok::Colon, "':'");
      return NotKey{key.text, join(neg.span, prev_end())};
    }
    if (first.kind == Tok::Meta) {
      Token m = take();
      auto args = meta_args();
      return CatchAll{m.text, std::move(args), join(m.span, prev_end())};
    }
    fail(first, "expected an association",
         {describe(Tok::Lower), describe(Tok::Not), describe(Tok::Meta)});
  }
};

}  // namespace

Result<Script, ParseError> parse_script(std::string_view text, const std::string& file) {
  return Parser(text, file).script();
}

Result<Term, ParseError> parse_term(std::string_view text, const std::string& file) {
  Parser p(text, file);
  return p.whole<Term>([&] { return p.term(); });
}

Result<Sort, ParseError> parse_sort(std::string_view text, const std::string& file) {
  Parser p(text, file);
  return p.whole<Sort>([&] { return p.sort(); });
}

std::string format_parse_error(const ParseError& e) {
  return fmt::format("{}:{}:{}: error: {}", e.span.file, e.span.start_line, e.span.start_col,
                     e.message);
}

}  // namespace plank
