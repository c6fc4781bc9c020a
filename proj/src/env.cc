#include "plank/env.h"

#include <fmt/format.h>

#include <algorithm>

#include "plank/parser.h"

namespace plank {

const char* to_string(EnvErrorKind kind) {
  switch (kind) {
    case EnvErrorKind::DuplicateConstructor: return "DuplicateConstructor";
    case EnvErrorKind::RankMismatch: return "RankMismatch";
    case EnvErrorKind::NonVariableSortParameter: return "NonVariableSortParameter";
    case EnvErrorKind::MetaFormConflict: return "MetaFormConflict";
    case EnvErrorKind::UnboundMetaOnRhs: return "UnboundMetaOnRhs";
    case EnvErrorKind::UnresolvedVariableSort: return "UnresolvedVariableSort";
  }
  return "EnvError";
}

const ConSignature* GlobalEnv::lookup(const std::string& name) const {
  auto it = con.find(name);
  return it == con.end() ? nullptr : &it->second;
}

bool GlobalEnv::has_data_constructors(const std::string& sort_name) const {
  for (const auto& [name, sig] : con)
    if (!fun.count(name) && !sig.result.is_var() && sig.result.name == sort_name) return true;
  return false;
}

// Sort substitution ---------------------------------------------------------

namespace {

bool match_into(const Sort& pattern, const Sort& target, SortSubst& subst) {
  if (pattern.is_var()) {
    auto [it, inserted] = subst.emplace(pattern.name, target);
    return inserted || it->second == target;
  }
  if (target.is_var() || pattern.name != target.name || pattern.args.size() != target.args.size())
    return false;
  for (size_t i = 0; i < pattern.args.size(); ++i)
    if (!match_into(pattern.args[i], target.args[i], subst)) return false;
  return true;
}

void collect_sorts(const Sort& s, std::vector<Sort>& out) {
  out.push_back(s);
  for (const auto& a : s.args) collect_sorts(a, out);
}

void collect_form_sorts(const Form& f, std::vector<Sort>& out) {
  if (const auto* a = std::get_if<AssocForm>(&f)) {
    collect_sorts(a->key, out);
    collect_sorts(a->value, out);
    return;
  }
  const auto& s = std::get<ScopeForm>(f);
  for (const auto& b : s.binder_sorts) collect_sorts(b, out);
  collect_sorts(s.body, out);
}

}  // namespace

std::optional<SortSubst> match_sort(const Sort& pattern, const Sort& target) {
  SortSubst subst;
  if (!match_into(pattern, target, subst)) return std::nullopt;
  return subst;
}

Sort apply_subst(const SortSubst& subst, const Sort& s) {
  if (s.is_var()) {
    auto it = subst.find(s.name);
    return it == subst.end() ? s : it->second;
  }
  Sort out = Sort::cons(s.name);
  for (const auto& a : s.args) out.args.push_back(apply_subst(subst, a));
  return out;
}

Form apply_subst(const SortSubst& subst, const Form& f) {
  if (const auto* a = std::get_if<AssocForm>(&f))
    return AssocForm{apply_subst(subst, a->key), apply_subst(subst, a->value)};
  const auto& s = std::get<ScopeForm>(f);
  ScopeForm out{{}, apply_subst(subst, s.body)};
  for (const auto& b : s.binder_sorts) out.binder_sorts.push_back(apply_subst(subst, b));
  return out;
}

std::optional<std::vector<Form>> instantiate(const ConSignature& sig, const Sort& expected) {
  auto subst = match_sort(sig.result, expected);
  if (!subst) return std::nullopt;
  std::vector<Form> forms;
  forms.reserve(sig.forms.size());
  for (const auto& f : sig.forms) forms.push_back(apply_subst(*subst, f));
  return forms;
}

std::vector<Sort> sorts_of(const Declaration& d) {
  std::vector<Sort> out;
  std::visit(
      [&](const auto& decl) {
        using T = std::decay_t<decltype(decl)>;
        collect_sorts(decl.sort, out);
        if constexpr (std::is_same_v<T, DataDecl> || std::is_same_v<T, SchemeDecl>)
          for (const auto& f : decl.forms) collect_form_sorts(f, out);
      },
      d);
  return out;
}

// Global environment --------------------------------------------------------

namespace {

bool is_parameterized_by_variables(const Sort& s) {
  if (s.is_var()) return false;
  std::set<std::string> seen;
  for (const auto& a : s.args)
    if (!a.is_var() || !seen.insert(a.name).second) return false;
  return true;
}

template <typename Decl>
void add_constructor(const Decl& decl, bool scheme, size_t index, GlobalEnvBuild& build,
                     std::map<std::string, bool>& declared_as_scheme) {
  if (scheme) build.env.fun.insert(decl.name);
  auto [prior, inserted] = declared_as_scheme.emplace(decl.name, scheme);
  if (inserted) {
    build.env.con.emplace(decl.name, ConSignature{decl.sort, decl.forms});
    return;
  }
  // A name declared both ways is caught by the data declaration's own check
  // (its name is in fun), so only same-kind repeats are reported here.
  if (prior->second != scheme) return;
  build.errors.push_back({EnvErrorKind::DuplicateConstructor, scheme ? "SD-Fun" : "SD-Data", decl.span,
                          fmt::format("constructor '{}' is declared more than once", decl.name),
                          index});
}

}  // namespace

GlobalEnvBuild assemble_global_env(const Script& script) {
  GlobalEnvBuild build;
  std::map<std::string, bool> declared_as_scheme;
  for (size_t index = 0; index < script.declarations.size(); ++index) {
    const auto& d = script.declarations[index];
    for (const auto& s : sorts_of(d)) {
      if (s.is_var()) continue;
      auto [it, inserted] = build.env.rank.emplace(s.name, s.args.size());
      if (!inserted && it->second != s.args.size())
        build.errors.push_back({EnvErrorKind::RankMismatch, "SS-Cons", span_of(d),
                                fmt::format("sort '{}' has rank {} but is used with {} argument(s)",
                                            s.name, it->second, s.args.size()),
                                index});
    }
    if (const auto* data = std::get_if<DataDecl>(&d)) {
      if (!is_parameterized_by_variables(data->sort))
        build.errors.push_back(
            {EnvErrorKind::NonVariableSortParameter, "SD-Data", data->span,
             fmt::format("data sort '{}' must be a sort name applied to distinct sort variables",
                         render(data->sort)),
             index});
      add_constructor(*data, false, index, build, declared_as_scheme);
    } else if (const auto* scheme = std::get_if<SchemeDecl>(&d)) {
      add_constructor(*scheme, true, index, build, declared_as_scheme);
    } else if (const auto* var = std::get_if<VariableDecl>(&d)) {
      if (!var->sort.is_var()) build.env.hasvar.insert(var->sort.name);
    }
  }
  return build;
}

Result<GlobalEnv, EnvError> build_global_env(const Script& script) {
  auto build = assemble_global_env(script);
  if (!build.errors.empty()) return std::move(build.errors);
  return std::move(build.env);
}

// Rule environment ----------------------------------------------------------

namespace {

class RuleEnvInferrer {
 public:
  explicit RuleEnvInferrer(const GlobalEnv& gamma) : gamma_(gamma) {}

  RuleEnvBuild rule(const RuleDecl& r) {
    pattern(r.lhs, r.sort);
    contraction(r.rhs, r.sort);
    for (const Term* side : {&r.lhs, &r.rhs}) unresolved(*side);
    return finish();
  }

  RuleEnvBuild ground(const Term& t, const Sort& sort) {
    contraction(t, sort);
    unresolved(t);
    return finish();
  }

 private:
  using Scope = std::vector<std::pair<std::string, Sort>>;

  const GlobalEnv& gamma_;
  RuleEnvBuild out_;
  Scope scope_;
  std::map<std::string, Sort> binder_sorts_;
  std::set<std::string> reported_;

  RuleEnvBuild finish() {
    for (auto& [name, sort] : binder_sorts_) out_.env.var.emplace(name, sort);
    return std::move(out_);
  }

  const Sort* bound_sort(const std::string& name) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->first == name) return &it->second;
    return nullptr;
  }

  void free_var(const std::string& name, const Sort& sort) {
    if (!bound_sort(name)) out_.env.var.emplace(name, sort);
  }

  void unresolved(const Term& t) {
    for (const auto& v : free_vars(t)) {
      if (out_.env.var.count(v) || !reported_.insert("var:" + v).second) continue;
      out_.errors.push_back({EnvErrorKind::UnresolvedVariableSort, "SD-Rule", t.span(),
                             fmt::format("cannot determine the sort of variable '{}'", v), std::nullopt});
    }
  }

  void record_meta(const std::string& meta, MetaForm form, const SourceSpan& span) {
    auto [it, inserted] = out_.env.meta.emplace(meta, form);
    if (inserted || it->second == form) return;
    out_.errors.push_back({EnvErrorKind::MetaFormConflict, "SD-Rule", span,
                           fmt::format("meta-variable '{}' is used with inconsistent forms", meta), std::nullopt});
  }

  // Sorts of pattern meta-application arguments; nullopt unless every
  // argument is a bound variable.
  std::optional<std::vector<Sort>> binder_arg_sorts(const std::vector<Term>& args) const {
    std::vector<Sort> sorts;
    for (const auto& a : args) {
      if (!a.is_var()) return std::nullopt;
      const Sort* s = bound_sort(a.as_var().name);
      if (!s) return std::nullopt;
      sorts.push_back(*s);
    }
    return sorts;
  }

  const MetaForm* known_meta(const std::string& meta, const SourceSpan& span) {
    auto it = out_.env.meta.find(meta);
    if (it != out_.env.meta.end()) return &it->second;
    if (reported_.insert("meta:" + meta).second)
      out_.errors.push_back({EnvErrorKind::UnboundMetaOnRhs, "SD-Rule", span,
                             fmt::format("meta-variable '{}' does not occur in the pattern", meta), std::nullopt});
    return nullptr;
  }

  template <typename F>
  void construction(const Term& t, const Sort& expected, F&& sub) {
    const auto& c = t.as_construction();
    const ConSignature* sig = gamma_.lookup(c.head);
    if (!sig) return;
    auto forms = instantiate(*sig, expected);
    if (!forms || forms->size() != c.args.size()) return;
    for (size_t i = 0; i < forms->size(); ++i) piece(c.args[i], (*forms)[i], sub);
  }

  template <typename F>
  void piece(const Piece& p, const Form& form, F&& sub) {
    if (p.is_scope()) {
      const auto* f = std::get_if<ScopeForm>(&form);
      const auto& s = p.scope();
      if (!f || f->binder_sorts.size() != s.binders.size()) return;
      const size_t mark = scope_.size();
      for (size_t i = 0; i < s.binders.size(); ++i) {
        scope_.emplace_back(s.binders[i], f->binder_sorts[i]);
        binder_sorts_.emplace(s.binders[i], f->binder_sorts[i]);
      }
      sub(s.body, f->body);
      scope_.resize(mark);
      return;
    }
    const auto* f = std::get_if<AssocForm>(&form);
    if (!f) return;
    for (const auto& a : p.assoc().entries) sub_association(a, *f, sub);
  }

  template <typename F>
  void sub_association(const Association& a, const AssocForm& f, F&& sub) {
    if (const auto* m = std::get_if<MapEntry>(&a)) {
      free_var(m->key, f.key);
      sub(m->value, f.value);
    } else if (const auto* n = std::get_if<NotKey>(&a)) {
      free_var(n->key, f.key);
    } else {
      catch_all(std::get<CatchAll>(a), f, sub);
    }
  }

  template <typename F>
  void catch_all(const CatchAll& c, const AssocForm& f, F&& sub) {
    if (in_pattern_) {
      if (auto sorts = binder_arg_sorts(c.args)) record_meta(c.meta, MetaForm{*sorts, f}, c.span);
      return;
    }
    const MetaForm* mf = known_meta(c.meta, c.span);
    if (!mf || mf->arg_sorts.size() != c.args.size()) return;
    for (size_t i = 0; i < c.args.size(); ++i) sub(c.args[i], mf->arg_sorts[i]);
  }

  bool in_pattern_ = false;

  void pattern(const Term& t, const Sort& expected) {
    in_pattern_ = true;
    auto sub = [this](const Term& x, const Sort& s) { pattern(x, s); };
    if (t.is_construction()) {
      construction(t, expected, sub);
    } else if (t.is_var()) {
      free_var(t.as_var().name, expected);
    } else {
      const auto& m = t.as_meta();
      if (auto sorts = binder_arg_sorts(m.args)) record_meta(m.meta, MetaForm{*sorts, expected}, t.span());
    }
  }

  void contraction(const Term& t, const Sort& expected) {
    in_pattern_ = false;
    auto sub = [this](const Term& x, const Sort& s) { contraction(x, s); };
    if (t.is_construction()) {
      construction(t, expected, sub);
    } else if (t.is_var()) {
      free_var(t.as_var().name, expected);
    } else {
      const auto& m = t.as_meta();
      const MetaForm* mf = known_meta(m.meta, t.span());
      if (!mf || mf->arg_sorts.size() != m.args.size()) return;
      const std::vector<Sort> arg_sorts = mf->arg_sorts;
      for (size_t i = 0; i < m.args.size(); ++i) contraction(m.args[i], arg_sorts[i]);
    }
  }
};

}  // namespace

RuleEnvBuild infer_rule_env_partial(const GlobalEnv& gamma, const RuleDecl& rule) {
  return RuleEnvInferrer(gamma).rule(rule);
}

Result<RuleEnv, EnvError> infer_rule_env(const GlobalEnv& gamma, const RuleDecl& rule) {
  auto build = infer_rule_env_partial(gamma, rule);
  if (!build.errors.empty()) return std::move(build.errors);
  return std::move(build.env);
}

RuleEnvBuild infer_term_env(const GlobalEnv& gamma, const Term& term, const Sort& sort) {
  return RuleEnvInferrer(gamma).ground(term, sort);
}

}  // namespace plank
