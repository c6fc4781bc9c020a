#ifndef PLANK_ENV_H
#define PLANK_ENV_H

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "plank/ast.h"
#include "plank/result.h"

namespace plank {

// Result sort and argument shapes of a declared constructor.
struct ConSignature {
  Sort result;
  std::vector<Form> forms;
  friend bool operator==(const ConSignature&, const ConSignature&) = default;
};

// The global sort environment of a script.
struct GlobalEnv {
  std::map<std::string, size_t> rank;          // sort name -> arity
  std::set<std::string> hasvar;                // sorts with a `variable` declaration
  std::map<std::string, ConSignature> con;     // constructor -> signature
  std::set<std::string> fun;                   // constructors declared `scheme`

  const ConSignature* lookup(const std::string& name) const;
  bool is_scheme(const std::string& name) const { return fun.count(name) > 0; }
  // True when `s` is an applied sort whose name allows variables.
  bool allows_variables(const Sort& s) const { return !s.is_var() && hasvar.count(s.name) > 0; }
  // True when some non-scheme constructor produces the sort named `sort_name`.
  bool has_data_constructors(const std::string& sort_name) const;

  friend bool operator==(const GlobalEnv&, const GlobalEnv&) = default;
};

// S...=>S for ordinary meta-variables, S...=>{S:S} for association catch-alls.
struct MetaForm {
  std::vector<Sort> arg_sorts;
  std::variant<Sort, AssocForm> result;

  bool is_assoc() const { return std::holds_alternative<AssocForm>(result); }
  const Sort& term_sort() const { return std::get<Sort>(result); }
  const AssocForm& assoc_form() const { return std::get<AssocForm>(result); }

  friend bool operator==(const MetaForm&, const MetaForm&) = default;
};

// Per-rule sorts of variables and meta-variables.
struct RuleEnv {
  std::map<std::string, Sort> var;
  std::map<std::string, MetaForm> meta;

  friend bool operator==(const RuleEnv&, const RuleEnv&) = default;
};

enum class EnvErrorKind {
  DuplicateConstructor,
  RankMismatch,
  NonVariableSortParameter,
  MetaFormConflict,
  UnboundMetaOnRhs,
  UnresolvedVariableSort,
};

const char* to_string(EnvErrorKind kind);

struct EnvError {
  EnvErrorKind kind;
  std::string rule;  // sorting rule whose side condition fails, e.g. "SD-Data"
  SourceSpan span;
  std::string message;
  std::optional<size_t> declaration;  // index into the script, when known
};

// Assembles the environment and reports every problem found on the way. The
// environment is usable even when errors are present: the first declaration
// of a name fixes its signature, and every `scheme` declaration adds its
// name to `fun`.
struct GlobalEnvBuild {
  GlobalEnv env;
  std::vector<EnvError> errors;
};
GlobalEnvBuild assemble_global_env(const Script& script);

Result<GlobalEnv, EnvError> build_global_env(const Script& script);

// Infers the rule environment by one top-down pass over the pattern followed
// by one over the contraction. Binder sorts come from the enclosing
// constructor's forms, free pattern variables from their position, and each
// meta-variable's form from its first pattern occurrence.
struct RuleEnvBuild {
  RuleEnv env;
  std::vector<EnvError> errors;
};
RuleEnvBuild infer_rule_env_partial(const GlobalEnv& gamma, const RuleDecl& rule);

Result<RuleEnv, EnvError> infer_rule_env(const GlobalEnv& gamma, const RuleDecl& rule);

// Sorts for the free variables of a term that is to be checked in contraction
// context at `sort` (e.g. a term handed to the normalizer). Meta-variables
// are reported as UnboundMetaOnRhs.
RuleEnvBuild infer_term_env(const GlobalEnv& gamma, const Term& term, const Sort& sort);

using SortSubst = std::map<std::string, Sort>;

// One-way matching of a declared sort (whose variables are instantiable)
// against a target sort (whose variables are rigid).
std::optional<SortSubst> match_sort(const Sort& pattern, const Sort& target);
Sort apply_subst(const SortSubst& subst, const Sort& s);
Form apply_subst(const SortSubst& subst, const Form& f);

// Argument forms of `sig` when the construction is expected at `expected`;
// nullopt when the result sort cannot be instantiated to it.
std::optional<std::vector<Form>> instantiate(const ConSignature& sig, const Sort& expected);

// Every sort mentioned by a declaration, in textual order.
std::vector<Sort> sorts_of(const Declaration& d);

}  // namespace plank

#endif  // PLANK_ENV_H
