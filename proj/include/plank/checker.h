#ifndef PLANK_CHECKER_H
#define PLANK_CHECKER_H

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "plank/ast.h"
#include "plank/env.h"
#include "plank/result.h"

namespace plank {

// Where a term fragment sits inside a rule.
enum class TermContext {
  Pat,    // outermost pattern (rule left-hand side)
  InPat,  // inside a pattern
  Con,    // contraction, except substitution arguments
  Sub,    // argument of a meta-application in a contraction
};

const char* to_string(TermContext tc);

struct CheckError {
  std::string rule;       // sorting rule tag, e.g. "SMP-Meta"
  std::string condition;  // the specific side condition, e.g. "SMP-Meta-distinct"
  SourceSpan span;
  std::string message;
};

// The tags a CheckError::rule may carry.
const std::set<std::string>& rule_tags();

// "FILE:LINE:COL: error[TAG]: MESSAGE"
std::string format_check_error(const CheckError& e);

struct CheckState {
  const GlobalEnv* gamma = nullptr;
  RuleEnv delta;
  VarSet nonassoc;  // keys of associations must come from here
  TermContext tc = TermContext::Con;
  std::vector<std::string> bound;  // innermost last
};

struct CheckedScript {
  GlobalEnv gamma;
  std::vector<RuleEnv> rule_envs;  // one per rule, in declaration order
};

Result<CheckedScript, CheckError> check_script(const Script& script);

std::vector<CheckError> check_declaration(const GlobalEnv& gamma, const Declaration& d);

std::optional<CheckError> check_sort(const GlobalEnv& gamma, const Sort& s, const SourceSpan& span = {});

std::vector<CheckError> check_term(const CheckState& st, const Term& t, const Sort& expected);

std::vector<CheckError> check_piece(const CheckState& st, const Piece& p, const Form& form);

std::vector<CheckError> check_association(const CheckState& st, const Association& a,
                                          const Sort& key_sort, const Sort& value_sort);

// Sort of a construction as declared, or nullopt for variables, meta
// applications and undeclared heads.
std::optional<Sort> declared_sort(const GlobalEnv& gamma, const Term& t);

// Checks a term built by a user rather than by a rule: contraction context,
// free-variable sorts inferred from position, and every variable of the term
// admissible as an association key.
std::vector<CheckError> check_ground_term(const GlobalEnv& gamma, const Term& t, const Sort& sort);

}  // namespace plank

#endif  // PLANK_CHECKER_H
