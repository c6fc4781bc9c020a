#ifndef PLANK_AST_H
#define PLANK_AST_H

#include <compare>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace plank {

// Position of a node in its source text. Lines and columns are 1-based;
// columns count code points. A default-constructed span means "unknown".
struct SourceSpan {
  std::string file;
  int start_line = 0;
  int start_col = 0;
  int end_line = 0;
  int end_col = 0;

  bool known() const { return start_line > 0; }
  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class IdentKind { Constructor, Variable, MetaVariable };

// Identifier terminals. The category is a function of the spelling:
// `Lam` is a constructor, `x` a variable, `#M` a meta-variable.
class Ident {
 public:
  static std::optional<IdentKind> classify(std::string_view text);
  // Throws std::invalid_argument if `text` is not a well-formed identifier.
  explicit Ident(std::string text);

  IdentKind kind() const { return kind_; }
  const std::string& text() const { return text_; }

  friend bool operator==(const Ident&, const Ident&) = default;
  friend auto operator<=>(const Ident&, const Ident&) = default;

 private:
  IdentKind kind_;
  std::string text_;
};

// S ::= s<S...> | a
struct Sort {
  enum class Kind { Cons, Var };

  Kind kind = Kind::Cons;
  std::string name;
  std::vector<Sort> args;

  static Sort cons(std::string name, std::vector<Sort> args = {}) {
    return Sort{Kind::Cons, std::move(name), std::move(args)};
  }
  static Sort var(std::string name) { return Sort{Kind::Var, std::move(name), {}}; }

  bool is_var() const { return kind == Kind::Var; }

  friend bool operator==(const Sort&, const Sort&) = default;
  friend auto operator<=>(const Sort&, const Sort&) = default;
};

// [S...]S. A plain argument is a scope form with no binders.
struct ScopeForm {
  std::vector<Sort> binder_sorts;
  Sort body;
  friend bool operator==(const ScopeForm&, const ScopeForm&) = default;
};

// {S:S}
struct AssocForm {
  Sort key;
  Sort value;
  friend bool operator==(const AssocForm&, const AssocForm&) = default;
};

using Form = std::variant<ScopeForm, AssocForm>;

struct TermNode;
struct Piece;
struct Construction;
struct VarRef;
struct MetaApp;

// Immutable, cheaply copyable handle to a term node. Sharing is safe across
// threads since nodes are never mutated after construction.
class Term {
 public:
  static Term construction(std::string head, std::vector<Piece> args,
                           SourceSpan span = {});
  static Term var(std::string name, SourceSpan span = {});
  static Term meta(std::string name, std::vector<Term> args = {},
                   SourceSpan span = {});

  bool is_construction() const;
  bool is_var() const;
  bool is_meta() const;

  const Construction& as_construction() const;
  const VarRef& as_var() const;
  const MetaApp& as_meta() const;

  const SourceSpan& span() const;

  // Pointer identity; use alpha_equal for semantic comparison.
  bool same_node(const Term& other) const { return node_ == other.node_; }

 private:
  explicit Term(std::shared_ptr<const TermNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const TermNode> node_;
};

struct ScopePiece {
  std::vector<std::string> binders;
  Term body;
};

// v : T
struct MapEntry {
  std::string key;
  Term value;
  SourceSpan span;
};

// ~v:
struct NotKey {
  std::string key;
  SourceSpan span;
};

// m(T...) standing for the remaining associations.
struct CatchAll {
  std::string meta;
  std::vector<Term> args;
  SourceSpan span;
};

using Association = std::variant<MapEntry, NotKey, CatchAll>;

struct AssocPiece {
  std::vector<Association> entries;
};

struct Piece {
  std::variant<ScopePiece, AssocPiece> value;

  Piece(ScopePiece p) : value(std::move(p)) {}  // NOLINT(runtime/explicit)
  Piece(AssocPiece p) : value(std::move(p)) {}  // NOLINT(runtime/explicit)

  bool is_scope() const { return std::holds_alternative<ScopePiece>(value); }
  const ScopePiece& scope() const { return std::get<ScopePiece>(value); }
  const AssocPiece& assoc() const { return std::get<AssocPiece>(value); }
};

// Shorthand for an argument with no binders.
inline Piece plain(Term t) { return ScopePiece{{}, std::move(t)}; }

struct Construction {
  std::string head;
  std::vector<Piece> args;
};

struct VarRef {
  std::string name;
};

struct MetaApp {
  std::string meta;
  std::vector<Term> args;
};

struct TermNode {
  std::variant<Construction, VarRef, MetaApp> value;
  SourceSpan span;
};

struct DataDecl {
  Sort sort;
  std::string name;
  std::vector<Form> forms;
  SourceSpan span;
};

struct SchemeDecl {
  Sort sort;
  std::string name;
  std::vector<Form> forms;
  SourceSpan span;
};

struct VariableDecl {
  Sort sort;
  SourceSpan span;
};

struct RuleDecl {
  Sort sort;
  Term lhs;
  Term rhs;
  SourceSpan span;
};

using Declaration = std::variant<DataDecl, SchemeDecl, VariableDecl, RuleDecl>;

const SourceSpan& span_of(const Declaration& d);

struct Script {
  std::vector<Declaration> declarations;

  std::vector<const RuleDecl*> rules() const;
};

using VarSet = std::set<std::string>;

// Equality up to consistent renaming of bound variables. Association pieces
// are finite maps, so their entries compare without regard to order.
bool alpha_equal(const Term& a, const Term& b);
bool alpha_equal(const Script& a, const Script& b);

// Variables not bound by an enclosing scope. Association keys count.
VarSet free_vars(const Term& t);

// Every variable occurrence, free or bound, outside association pieces.
// Binder positions are not occurrences.
VarSet non_assoc_vars(const Term& t);

// Every variable name mentioned anywhere, including binders and keys.
VarSet all_vars(const Term& t);

// `hint` if unused, otherwise hint followed by the least positive integer
// that avoids `avoid`.
std::string fresh_var(const std::string& hint, const VarSet& avoid);

// Meta-variables occurring in a term (including catch-alls).
std::set<std::string> meta_vars(const Term& t);

}  // namespace plank

#endif  // PLANK_AST_H
