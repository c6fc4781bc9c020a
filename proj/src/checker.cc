#include "plank/checker.h"

#include <fmt/format.h>

#include <algorithm>

#include "plank/parser.h"

namespace plank {

const char* to_string(TermContext tc) {
  switch (tc) {
    case TermContext::Pat: return "Pat";
    case TermContext::InPat: return "InPat";
    case TermContext::Con: return "Con";
    case TermContext::Sub: return "Sub";
  }
  return "?";
}

const std::set<std::string>& rule_tags() {
  static const std::set<std::string> tags = {
      "SH",       "SD-Data",  "SD-Fun",   "SD-Var",   "SD-Rule",  "SS-Cons",  "SS-Var",   "SMP-Fun",
      "SMP-Data", "SMP-Meta", "SMP-Var",  "SMC-Cons", "SMC-Meta", "SMC-Var",  "SMS-Cons", "SMS-Meta",
      "SMS-Var",  "SP-Bind",  "SP-Assoc", "SA-Map",   "SAP-Not",  "SAP-All",  "SAC-All"};
  return tags;
}

std::string format_check_error(const CheckError& e) {
  return fmt::format("{}:{}:{}: error[{}]: {}", e.span.file.empty() ? "<input>" : e.span.file,
                     e.span.start_line, e.span.start_col, e.rule, e.message);
}

namespace {

using Errors = std::vector<CheckError>;

CheckError error(std::string rule, std::string condition, const SourceSpan& span, std::string message) {
  return CheckError{std::move(rule), std::move(condition), span, std::move(message)};
}

void append(Errors& into, Errors&& more) {
  into.insert(into.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
}

bool is_bound(const CheckState& st, const std::string& v) {
  return std::find(st.bound.begin(), st.bound.end(), v) != st.bound.end();
}

const Sort* var_sort(const CheckState& st, const std::string& v) {
  auto it = st.delta.var.find(v);
  return it == st.delta.var.end() ? nullptr : &it->second;
}

CheckState with_context(const CheckState& st, TermContext tc) {
  CheckState out = st;
  out.tc = tc;
  return out;
}

// Shared side conditions of SMP-Var and SMC-Var. Variables bound by an
// enclosing scope only need the right sort; free ones must be syntactic.
Errors variable_occurrence(const CheckState& st, const std::string& name, const Sort& expected,
                           const SourceSpan& span, const std::string& rule) {
  const Sort* s = var_sort(st, name);
  if (!s)
    return {error(rule, rule + "-unsorted", span, fmt::format("cannot determine the sort of variable '{}'", name))};
  if (*s != expected)
    return {error(rule, rule + "-sort", span,
                  fmt::format("variable '{}' has sort {} but {} is expected", name, render(*s), render(expected)))};
  if (!is_bound(st, name) && !st.gamma->allows_variables(expected))
    return {error(rule, rule + "-hasvar", span,
                  fmt::format("free variable '{}' needs a 'variable' declaration for sort {}", name,
                              render(expected)))};
  return {};
}

// SMP-Meta and SAP-All: pattern meta-application arguments are bound
// variables of the declared sorts.
Errors pattern_meta_args(const CheckState& st, const std::vector<Term>& args, const std::vector<Sort>& sorts,
                         const std::string& meta, const SourceSpan& span, const std::string& rule,
                         bool require_distinct) {
  if (args.size() != sorts.size())
    return {error(rule, rule + "-arity", span,
                  fmt::format("'{}' takes {} argument(s) but is given {}", meta, sorts.size(), args.size()))};
  Errors errs;
  std::set<std::string> seen;
  for (size_t i = 0; i < args.size(); ++i) {
    const Term& a = args[i];
    if (!a.is_var()) {
      errs.push_back(error(rule, rule + "-bound", a.span(),
                           fmt::format("pattern argument of '{}' must be a bound variable", meta)));
      continue;
    }
    const std::string& w = a.as_var().name;
    if (!is_bound(st, w)) {
      errs.push_back(error(rule, rule + "-bound", a.span(),
                           fmt::format("'{}' in '{}' is not bound by an enclosing scope", w, meta)));
      continue;
    }
    const Sort* s = var_sort(st, w);
    if (!s || *s != sorts[i])
      errs.push_back(error(rule, rule + "-sort", a.span(),
                           fmt::format("argument '{}' of '{}' must have sort {}", w, meta, render(sorts[i]))));
    if (require_distinct && !seen.insert(w).second)
      errs.push_back(error(rule, rule + "-distinct", a.span(),
                           fmt::format("bound variable '{}' is repeated in '{}'", w, meta)));
  }
  return errs;
}

// s<a, b, ...> with distinct sort variables a, b, ...
bool applied_to_variables(const Sort& s) {
  if (s.is_var()) return false;
  std::set<std::string> seen;
  for (const auto& a : s.args)
    if (!a.is_var() || !seen.insert(a.name).second) return false;
  return true;
}

Errors construction(const CheckState& st, const Term& t, const Sort& expected, const std::string& rule,
                    TermContext piece_context) {
  const auto& c = t.as_construction();
  const ConSignature* sig = st.gamma->lookup(c.head);
  if (!sig) return {error(rule, rule + "-undeclared", t.span(), fmt::format("undeclared constructor '{}'", c.head))};
  auto forms = instantiate(*sig, expected);
  if (!forms)
    return {error(rule, rule + "-sort", t.span(),
                  fmt::format("'{}' constructs {} but {} is expected", c.head, render(sig->result), render(expected)))};
  if (forms->size() != c.args.size())
    return {error(rule, rule + "-arity", t.span(),
                  fmt::format("'{}' takes {} argument(s) but is given {}", c.head, forms->size(), c.args.size()))};
  Errors errs;
  const CheckState inner = with_context(st, piece_context);
  for (size_t i = 0; i < forms->size(); ++i) append(errs, check_piece(inner, c.args[i], (*forms)[i]));
  return errs;
}

Errors pattern_term(const CheckState& st, const Term& t, const Sort& expected) {
  if (!t.is_construction() || !st.gamma->is_scheme(t.as_construction().head))
    return {error("SMP-Fun", "SMP-Fun-scheme", t.span(), "a rule pattern must be headed by a scheme constructor")};
  return construction(st, t, expected, "SMP-Fun", TermContext::InPat);
}

Errors inner_pattern_term(const CheckState& st, const Term& t, const Sort& expected) {
  if (t.is_var()) return variable_occurrence(st, t.as_var().name, expected, t.span(), "SMP-Var");
  if (t.is_construction()) {
    const auto& head = t.as_construction().head;
    // Scheme symbols may act as the constructors of a sort that has no data
    // constructors of its own; anywhere else they are not patterns.
    if (st.gamma->is_scheme(head) && !expected.is_var() && st.gamma->has_data_constructors(expected.name))
      return {error("SMP-Data", "SMP-Data-scheme", t.span(),
                    fmt::format("scheme constructor '{}' cannot occur inside a pattern", head))};
    return construction(st, t, expected, "SMP-Data", TermContext::InPat);
  }
  const auto& m = t.as_meta();
  auto it = st.delta.meta.find(m.meta);
  if (it == st.delta.meta.end())
    return {error("SMP-Meta", "SMP-Meta-form", t.span(), fmt::format("no meta-form for '{}'", m.meta))};
  const MetaForm& mf = it->second;
  if (mf.is_assoc() || mf.term_sort() != expected)
    return {error("SMP-Meta", "SMP-Meta-form", t.span(),
                  fmt::format("'{}' does not produce a term of sort {}", m.meta, render(expected)))};
  return pattern_meta_args(st, m.args, mf.arg_sorts, m.meta, t.span(), "SMP-Meta", true);
}

Errors contraction_term(const CheckState& st, const Term& t, const Sort& expected) {
  if (t.is_var()) return variable_occurrence(st, t.as_var().name, expected, t.span(), "SMC-Var");
  if (t.is_construction()) return construction(st, t, expected, "SMC-Cons", TermContext::Con);
  const auto& m = t.as_meta();
  auto it = st.delta.meta.find(m.meta);
  if (it == st.delta.meta.end())
    return {error("SMC-Meta", "SMC-Meta-UnboundMetaOnRhs", t.span(),
                  fmt::format("meta-variable '{}' does not occur in the pattern", m.meta))};
  const MetaForm& mf = it->second;
  if (mf.is_assoc() || mf.term_sort() != expected)
    return {error("SMC-Meta", "SMC-Meta-form", t.span(),
                  fmt::format("'{}' does not produce a term of sort {}", m.meta, render(expected)))};
  if (mf.arg_sorts.size() != m.args.size())
    return {error("SMC-Meta", "SMC-Meta-arity", t.span(),
                  fmt::format("'{}' takes {} argument(s) but is given {}", m.meta, mf.arg_sorts.size(),
                              m.args.size()))};
  Errors errs;
  const CheckState sub = with_context(st, TermContext::Sub);
  for (size_t i = 0; i < m.args.size(); ++i) append(errs, check_term(sub, m.args[i], mf.arg_sorts[i]));
  return errs;
}

Errors substitution_term(const CheckState& st, const Term& t, const Sort& expected) {
  if (t.is_var()) {
    const std::string& w = t.as_var().name;
    const Sort* s = var_sort(st, w);
    if (!s || *s != expected)
      return {error("SMS-Var", "SMS-Var-sort", t.span(),
                    fmt::format("substituted variable '{}' must have sort {}", w, render(expected)))};
    return {};
  }
  if (st.gamma->allows_variables(expected)) {
    const bool cons = t.is_construction();
    return {error(cons ? "SMS-Cons" : "SMS-Meta", cons ? "SMS-Cons-hasvar" : "SMS-Meta-hasvar", t.span(),
                  fmt::format("only a variable may be substituted at sort {}, which has a 'variable' declaration",
                              render(expected)))};
  }
  return contraction_term(with_context(st, TermContext::Con), t, expected);
}

Errors check_rule(const GlobalEnv& gamma, const RuleDecl& r, RuleEnv* env_out) {
  auto inferred = infer_rule_env_partial(gamma, r);
  Errors errs;
  CheckState lhs{&gamma, inferred.env, non_assoc_vars(r.lhs), TermContext::Pat, {}};
  append(errs, check_term(lhs, r.lhs, r.sort));
  CheckState rhs{&gamma, inferred.env, non_assoc_vars(r.rhs), TermContext::Con, {}};
  append(errs, check_term(rhs, r.rhs, r.sort));
  // The structural checks re-detect every inference failure at its
  // occurrence; these only surface if they somehow did not.
  if (errs.empty())
    for (const auto& e : inferred.errors)
      errs.push_back(error(e.rule, std::string("SD-Rule-") + to_string(e.kind), e.span, e.message));
  if (env_out) *env_out = std::move(inferred.env);
  return errs;
}

}  // namespace

std::optional<CheckError> check_sort(const GlobalEnv& gamma, const Sort& s, const SourceSpan& span) {
  if (s.is_var()) return std::nullopt;
  auto it = gamma.rank.find(s.name);
  if (it == gamma.rank.end())
    return error("SS-Cons", "SS-Cons-rank", span, fmt::format("sort '{}' has no rank", s.name));
  if (it->second != s.args.size())
    return error("SS-Cons", "SS-Cons-rank", span,
                 fmt::format("sort '{}' has rank {} but is applied to {} argument(s)", s.name, it->second,
                             s.args.size()));
  for (const auto& a : s.args)
    if (auto e = check_sort(gamma, a, span)) return e;
  return std::nullopt;
}

std::vector<CheckError> check_term(const CheckState& st, const Term& t, const Sort& expected) {
  switch (st.tc) {
    case TermContext::Pat: return pattern_term(st, t, expected);
    case TermContext::InPat: return inner_pattern_term(st, t, expected);
    case TermContext::Con: return contraction_term(st, t, expected);
    case TermContext::Sub: return substitution_term(st, t, expected);
  }
  return {};
}

std::vector<CheckError> check_piece(const CheckState& st, const Piece& p, const Form& form) {
  if (p.is_scope()) {
    const auto& sp = p.scope();
    const auto* f = std::get_if<ScopeForm>(&form);
    if (!f) return {error("SP-Assoc", "SP-Assoc-shape", sp.body.span(), "an association list is expected here")};
    if (f->binder_sorts.size() != sp.binders.size())
      return {error("SP-Bind", "SP-Bind-BinderArityMismatch", sp.body.span(),
                    fmt::format("expected {} binder(s) but found {}", f->binder_sorts.size(), sp.binders.size()))};
    CheckState inner = st;
    for (size_t i = 0; i < sp.binders.size(); ++i) {
      const std::string& w = sp.binders[i];
      // A shadowed outer binder is no longer reachable by name.
      inner.bound.erase(std::remove(inner.bound.begin(), inner.bound.end(), w), inner.bound.end());
      inner.bound.push_back(w);
      inner.delta.var[w] = f->binder_sorts[i];
    }
    return check_term(inner, sp.body, f->body);
  }
  const auto& entries = p.assoc().entries;
  const auto* f = std::get_if<AssocForm>(&form);
  if (!f) {
    SourceSpan span = entries.empty() ? SourceSpan{} : std::visit([](const auto& a) { return a.span; }, entries[0]);
    return {error("SP-Bind", "SP-Bind-shape", span, "a term is expected here, not an association list")};
  }
  Errors errs;
  size_t catch_alls = 0;
  for (const auto& a : entries) {
    if (const auto* c = std::get_if<CatchAll>(&a); c && st.tc == TermContext::InPat && ++catch_alls > 1)
      errs.push_back(error("SAP-All", "SAP-All-MultipleCatchAll", c->span,
                           "a pattern association list may contain at most one catch-all"));
    append(errs, check_association(st, a, f->key, f->value));
  }
  return errs;
}

std::vector<CheckError> check_association(const CheckState& st, const Association& a, const Sort& key_sort,
                                          const Sort& value_sort) {
  const bool in_pattern = st.tc == TermContext::InPat;
  const std::string var_rule = in_pattern ? "SMP-Var" : "SMC-Var";
  if (const auto* m = std::get_if<MapEntry>(&a)) {
    Errors errs;
    if (!st.nonassoc.count(m->key))
      errs.push_back(error("SA-Map", "SA-Map-KeyNotElsewhere", m->span,
                           fmt::format("key '{}' must also occur outside association lists", m->key)));
    append(errs, variable_occurrence(st, m->key, key_sort, m->span, var_rule));
    CheckState inner = st;
    for (const auto& v : non_assoc_vars(m->value)) inner.nonassoc.insert(v);
    append(errs, check_term(inner, m->value, value_sort));
    return errs;
  }
  if (const auto* n = std::get_if<NotKey>(&a)) {
    if (!in_pattern)
      return {error("SAP-Not", "SAP-Not-NotKeyInContraction", n->span,
                    "a negated key may only occur in a pattern")};
    return variable_occurrence(st, n->key, key_sort, n->span, var_rule);
  }
  const auto& c = std::get<CatchAll>(a);
  const std::string rule = in_pattern ? "SAP-All" : "SAC-All";
  auto it = st.delta.meta.find(c.meta);
  if (it == st.delta.meta.end()) {
    if (in_pattern) return {error(rule, rule + "-form", c.span, fmt::format("no meta-form for '{}'", c.meta))};
    return {error(rule, rule + "-UnboundMetaOnRhs", c.span,
                  fmt::format("meta-variable '{}' does not occur in the pattern", c.meta))};
  }
  const MetaForm& mf = it->second;
  if (!mf.is_assoc() || mf.assoc_form() != AssocForm{key_sort, value_sort})
    return {error(rule, rule + "-form", c.span,
                  fmt::format("'{}' does not stand for associations {{{}:{}}}", c.meta, render(key_sort),
                              render(value_sort)))};
  if (in_pattern) return pattern_meta_args(st, c.args, mf.arg_sorts, c.meta, c.span, rule, false);
  if (mf.arg_sorts.size() != c.args.size())
    return {error(rule, rule + "-arity", c.span,
                  fmt::format("'{}' takes {} argument(s) but is given {}", c.meta, mf.arg_sorts.size(),
                              c.args.size()))};
  Errors errs;
  const CheckState sub = with_context(st, TermContext::Sub);
  for (size_t i = 0; i < c.args.size(); ++i) append(errs, check_term(sub, c.args[i], mf.arg_sorts[i]));
  return errs;
}

std::vector<CheckError> check_declaration(const GlobalEnv& gamma, const Declaration& d) {
  Errors errs;
  const SourceSpan& span = span_of(d);
  std::visit(
      [&](const auto& decl) {
        using T = std::decay_t<decltype(decl)>;
        if (auto e = check_sort(gamma, decl.sort, span)) errs.push_back(*e);
        if constexpr (std::is_same_v<T, DataDecl> || std::is_same_v<T, SchemeDecl>) {
          for (const auto& f : decl.forms) {
            std::vector<Sort> sorts;
            if (const auto* a = std::get_if<AssocForm>(&f)) {
              sorts = {a->key, a->value};
            } else {
              sorts = std::get<ScopeForm>(f).binder_sorts;
              sorts.push_back(std::get<ScopeForm>(f).body);
            }
            for (const auto& s : sorts)
              if (auto e = check_sort(gamma, s, span)) errs.push_back(*e);
          }
          constexpr bool data = std::is_same_v<T, DataDecl>;
          const std::string rule = data ? "SD-Data" : "SD-Fun";
          const ConSignature* sig = gamma.lookup(decl.name);
          if (!sig || *sig != ConSignature{decl.sort, decl.forms})
            errs.push_back(error(rule, rule + "-con", span,
                                 fmt::format("'{}' disagrees with its recorded signature", decl.name)));
          if (data && gamma.is_scheme(decl.name))
            errs.push_back(error(rule, "SD-Data-fun", span,
                                 fmt::format("data constructor '{}' is also declared as a scheme", decl.name)));
          if (!data && !gamma.is_scheme(decl.name))
            errs.push_back(error(rule, "SD-Fun-fun", span,
                                 fmt::format("scheme constructor '{}' is not recorded as a scheme", decl.name)));
          if constexpr (data) {
            if (!applied_to_variables(decl.sort))
              errs.push_back(error("SD-Data", "SD-Data-NonVariableSortParameter", span,
                                   fmt::format("data sort {} must be a sort name applied to distinct sort variables",
                                               render(decl.sort))));
          }
        } else if constexpr (std::is_same_v<T, VariableDecl>) {
          if (decl.sort.is_var() || !gamma.hasvar.count(decl.sort.name))
            errs.push_back(error("SD-Var", "SD-Var-hasvar", span,
                                 fmt::format("{} cannot be recorded as a sort with variables", render(decl.sort))));
          else if (!applied_to_variables(decl.sort))
            errs.push_back(error("SD-Var", "SD-Var-NonVariableSortParameter", span,
                                 fmt::format("variable sort {} must be a sort name applied to distinct sort variables",
                                             render(decl.sort))));
        } else {
          append(errs, check_rule(gamma, decl, nullptr));
        }
      },
      d);
  return errs;
}

Result<CheckedScript, CheckError> check_script(const Script& script) {
  auto assembled = assemble_global_env(script);
  CheckedScript out{std::move(assembled.env), {}};
  Errors errs;
  for (size_t i = 0; i < script.declarations.size(); ++i) {
    const auto& d = script.declarations[i];
    Errors local;
    if (const auto* r = std::get_if<RuleDecl>(&d)) {
      if (auto e = check_sort(out.gamma, r->sort, r->span)) local.push_back(*e);
      RuleEnv env;
      append(local, check_rule(out.gamma, *r, &env));
      out.rule_envs.push_back(std::move(env));
    } else {
      local = check_declaration(out.gamma, d);
    }
    // Duplicate declarations of one kind with equal signatures pass the
    // per-declaration check, so the assembler's report is the only signal.
    if (local.empty())
      for (const auto& e : assembled.errors)
        if (e.declaration == i && e.kind == EnvErrorKind::DuplicateConstructor)
          local.push_back(error(e.rule, e.rule + "-duplicate", e.span, e.message));
    append(errs, std::move(local));
  }
  if (!errs.empty()) return errs;
  return out;
}

std::optional<Sort> declared_sort(const GlobalEnv& gamma, const Term& t) {
  if (!t.is_construction()) return std::nullopt;
  const ConSignature* sig = gamma.lookup(t.as_construction().head);
  if (!sig) return std::nullopt;
  return sig->result;
}

std::vector<CheckError> check_ground_term(const GlobalEnv& gamma, const Term& t, const Sort& sort) {
  auto inferred = infer_term_env(gamma, t, sort);
  CheckState st{&gamma, std::move(inferred.env), all_vars(t), TermContext::Con, {}};
  return check_term(st, t, sort);
}

}  // namespace plank
