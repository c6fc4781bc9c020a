#ifndef PLANK_ENGINE_H
#define PLANK_ENGINE_H

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plank/ast.h"
#include "plank/env.h"
#include "plank/parser.h"

namespace plank {

// Raised when contraction meets something a checked rule cannot produce;
// it signals an engine bug rather than a user error.
class EngineError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// params ↦ body
struct Abstraction {
  std::vector<std::string> params;
  Term body;
};

using Environment = std::vector<std::pair<std::string, Term>>;

// Associations captured by a catch-all meta-variable. `params` are the
// subject binders it was applied to in the pattern.
struct AssocBinding {
  std::vector<std::string> params;
  Environment entries;
};

// Result of a successful match.
struct Valuation {
  std::map<std::string, Abstraction> meta;
  std::map<std::string, AssocBinding> assoc;
  std::map<std::string, std::string> var;  // syntactic pattern variable -> subject variable
};

// Higher-order pattern matching. A meta-application m(w...) matches any
// subterm whose locally bound variables are among w...; pattern variables of
// syntactic sorts match subject variables. Subject binders are never renamed
// unless they shadow one another.
std::optional<Valuation> match_term(const Term& pattern, const Term& subject);

// Matches pattern associations against a ground environment, extending
// `partial`. Keys resolve through partial.var; unresolved keys stand for
// themselves.
std::optional<Valuation> match_assoc(const std::vector<Association>& pattern, const Environment& subject,
                                     const Valuation& partial);

// Simultaneous capture-avoiding substitution. An association key is only
// replaced when its replacement is a variable.
Term substitute(const Term& body, const std::map<std::string, Term>& binding);

// Instantiates a contraction. Variables free in `rhs` and not bound by the
// valuation are given names fresh for `avoid`. Later association entries
// override earlier ones with the same key. Throws EngineError when a
// meta-variable of `rhs` is missing from `val`.
Term contract(const Term& rhs, const Valuation& val, const VarSet& avoid);

inline constexpr size_t kDefaultFuel = 10000;

struct RewriteStep {
  // Argument indices from the root; inside an association piece the piece
  // index is followed by the entry index.
  std::vector<size_t> position;
  size_t rule_index;
  Valuation valuation;
};

enum class NormalizeStatus { NormalForm, FuelExhausted };

struct NormalizeResult {
  Term term;
  std::vector<RewriteStep> steps;
  NormalizeStatus status;
};

// Leftmost-outermost rewriting with rules tried in declaration order.
class Rewriter {
 public:
  Rewriter(GlobalEnv gamma, std::vector<RuleDecl> rules);
  // Uses the script's rules in order; the script is assumed to be checked.
  Rewriter(GlobalEnv gamma, const Script& script);

  const GlobalEnv& gamma() const { return gamma_; }
  const std::vector<RuleDecl>& rules() const { return rules_; }

  // Contracts the first redex, or returns nullopt at a normal form.
  std::optional<std::pair<Term, RewriteStep>> step(const Term& t) const;

  // `on_step`, when given, sees every step with the term it produced.
  template <typename OnStep>
  NormalizeResult normalize(const Term& t, size_t fuel, OnStep&& on_step) const {
    NormalizeResult out{t, {}, NormalizeStatus::NormalForm};
    for (;;) {
      auto next = step(out.term);
      if (!next) return out;
      if (out.steps.size() >= fuel) {
        out.status = NormalizeStatus::FuelExhausted;
        return out;
      }
      out.term = std::move(next->first);
      out.steps.push_back(std::move(next->second));
      on_step(out.steps.back(), out.term);
    }
  }

  NormalizeResult normalize(const Term& t, size_t fuel = kDefaultFuel) const {
    return normalize(t, fuel, [](const RewriteStep&, const Term&) {});
  }

 private:
  std::optional<std::pair<Term, RewriteStep>> search(const Term& t, std::vector<size_t>& path,
                                                     const VarSet& avoid) const;

  GlobalEnv gamma_;
  std::vector<RuleDecl> rules_;
};

std::string format_position(const std::vector<size_t>& position);

// "step N at POSITION by rule INDEX (SORT rule LHS -> RHS)" and, on the next
// line, the term after the step.
std::string format_step(size_t number, const RewriteStep& step, const RuleDecl& rule, const Term& result,
                        Spelling spelling = Spelling::Ascii);

}  // namespace plank

#endif  // PLANK_ENGINE_H
