#ifndef PLANK_TESTS_SUPPORT_H
#define PLANK_TESTS_SUPPORT_H

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "plank/ast.h"
#include "plank/checker.h"
#include "plank/engine.h"
#include "plank/parser.h"

namespace plank::testing {

std::string corpus_path(const std::string& name);
std::string slurp(const std::string& path);

// The tag named by a mutation file's `// expect: TAG` first line.
std::string expected_tag(const std::string& text);

// Parse or throw std::runtime_error with the diagnostics.
Script script(const std::string& text);
Term term(const std::string& text);

struct Loaded {
  Script script;
  CheckedScript checked;
  Rewriter rewriter() const { return Rewriter(checked.gamma, script); }
};
Loaded load_corpus(const std::string& name);

// Closed-form canonical text: bound variables become binder depths, free
// variables keep their names, environments are sorted. Two terms are
// alpha-equivalent iff their canonical strings are equal.
std::string de_bruijn(const Term& t);

// Substitution by brute force: first give every binder of `t` a globally new
// name, then replace free occurrences without any capture check.
Term naive_substitute(const Term& t, const std::map<std::string, Term>& sigma);

// Every term of depth <= `depth` over Lam([L]L), Ap(L,L) and variables
// `vars` (also used as binder names).
std::vector<Term> lambda_terms(int depth, const std::vector<std::string>& vars = {"x", "y"});

// Subterm at a RewriteStep position.
Term subterm_at(const Term& t, const std::vector<size_t>& position);

// A pattern with negated keys dropped, so it can be instantiated as an rhs.
Term without_not_keys(const Term& pattern);

// Random ground terms over ex2.plank's signature: Lam/Ap data, Eval/Apply
// schemes, free variables a/b/c and environments keyed by them. The result
// is not guaranteed to be well-sorted.
Term random_ex2_term(std::mt19937& rng, int depth);

// Random syntax trees for round-tripping through render/parse.
Term random_ast(std::mt19937& rng, int depth);
Script random_script(std::mt19937& rng);

// Brute-force derivation search for the sorting judgments. Γ is found by
// enumerating rank maps; each rule's Δ by enumerating variable sorts and
// meta-forms over a fixed sort universe.
class DerivationOracle {
 public:
  explicit DerivationOracle(std::vector<Sort> universe);
  bool derivable(const Script& script);
  size_t rule_cache_size() const { return cache_.size(); }

 private:
  std::vector<Sort> universe_;
  std::map<std::string, bool> cache_;
};

// The declaration pool behind the exhaustive oracle comparison.
const std::vector<std::string>& oracle_declaration_pool();

struct PropertyReport {
  size_t cases = 0;
  size_t violations = 0;
  size_t accepted = 0;  // cases a checker accepted, where that is meaningful
  std::string first_failure;

  bool ok() const { return cases > 0 && violations == 0; }
  void fail(std::string what) {
    if (violations++ == 0) first_failure = std::move(what);
  }
};

// Generates `count` well-sorted ground terms over ex2.plank's signature and
// rewrites each for up to `steps_per_term` steps. Every intermediate term
// must re-check at the starting sort (into `reduction`), and every step's
// valuation must rebuild its redex from the rule's pattern (into `replay`).
void subject_reduction(size_t count, unsigned seed, size_t steps_per_term, PropertyReport& reduction,
                       PropertyReport& replay);

// Match-replay on ex1.plank's patterns against every lambda term of depth <= 4.
PropertyReport lambda_replay();

PropertyReport round_trip(size_t count, unsigned seed);

// Every substitution b[x := r] for b, r lambda terms of depth <= 3 and
// x in {x, y}, plus the swap {x := y, y := x} on every b.
PropertyReport capture_avoidance();

// Scripts of up to `max_decls` declarations drawn from the pool, all of
// them when `stride` is 1, else every stride-th one.
PropertyReport checker_oracle(size_t max_decls, size_t stride);

}  // namespace plank::testing

#endif  // PLANK_TESTS_SUPPORT_H
