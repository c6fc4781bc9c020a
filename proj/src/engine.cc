#include "plank/engine.h"

#include <fmt/format.h>

#include <algorithm>

namespace plank {

namespace {

using Subst = std::map<std::string, Term>;

struct Deferred {
  const AssocPiece* pattern;
  const AssocPiece* subject;
  std::vector<std::pair<std::string, std::string>> corr;
};

class Matcher {
 public:
  Matcher(Valuation seed, VarSet avoid) : val_(std::move(seed)), avoid_(std::move(avoid)) {}

  // Matches one term and then the association pieces found inside it. An
  // association is only matched after everything outside it, so that its
  // keys are already resolved.
  bool unit(const Term& p, const Term& s) {
    std::vector<Deferred> later;
    if (!term(p, s, later)) return false;
    auto saved = corr_;
    for (auto& d : later) {
      corr_ = std::move(d.corr);
      if (!assoc(d.pattern->entries, *d.subject)) {
        corr_ = saved;
        return false;
      }
    }
    corr_ = saved;
    return true;
  }

  bool assoc(const std::vector<Association>& pattern, const AssocPiece& subject) {
    Environment env;
    for (const auto& a : subject.entries) {
      const auto* e = std::get_if<MapEntry>(&a);
      if (!e) return false;
      env.emplace_back(e->key, e->value);
    }
    return environment(pattern, env);
  }

  bool environment(const std::vector<Association>& pattern, const Environment& env) {
    std::vector<bool> used(env.size(), false);
    auto find = [&](const std::string& k) -> std::optional<size_t> {
      for (size_t i = 0; i < env.size(); ++i)
        if (env[i].first == k) return i;
      return std::nullopt;
    };
    for (const auto& a : pattern) {
      if (const auto* e = std::get_if<MapEntry>(&a)) {
        auto i = find(resolve(e->key));
        if (!i || used[*i]) return false;
        used[*i] = true;
        if (!unit(e->value, env[*i].second)) return false;
      } else if (const auto* n = std::get_if<NotKey>(&a)) {
        if (find(resolve(n->key))) return false;
      }
    }
    bool rest_taken = false;
    for (const auto& a : pattern) {
      const auto* c = std::get_if<CatchAll>(&a);
      if (!c) continue;
      Environment rest;
      if (!rest_taken)
        for (size_t i = 0; i < env.size(); ++i)
          if (!used[i]) rest.push_back(env[i]);
      rest_taken = true;
      if (!catch_all(*c, std::move(rest))) return false;
    }
    if (!rest_taken)
      for (bool u : used)
        if (!u) return false;
    return true;
  }

  Valuation take() { return std::move(val_); }

 private:
  std::string resolve(const std::string& w) const {
    if (auto c = counterpart(w)) return *c;
    auto it = val_.var.find(w);
    return it == val_.var.end() ? w : it->second;
  }

  std::optional<std::string> counterpart(const std::string& w) const {
    for (auto it = corr_.rbegin(); it != corr_.rend(); ++it)
      if (it->first == w) return it->second;
    return std::nullopt;
  }

  bool subject_bound(const std::string& y) const {
    return std::any_of(corr_.begin(), corr_.end(), [&](const auto& c) { return c.second == y; });
  }

  // Subject binders the meta-variable may see.
  std::optional<std::vector<std::string>> params_of(const std::vector<Term>& args) const {
    std::vector<std::string> out;
    for (const auto& a : args) {
      if (!a.is_var()) return std::nullopt;
      auto c = counterpart(a.as_var().name);
      if (!c) return std::nullopt;
      out.push_back(*c);
    }
    return out;
  }

  bool only_visible(const VarSet& fv, const std::vector<std::string>& params) const {
    for (const auto& v : fv)
      if (subject_bound(v) && std::find(params.begin(), params.end(), v) == params.end()) return false;
    return true;
  }

  bool term(const Term& p, const Term& s, std::vector<Deferred>& later) {
    if (p.is_meta()) return meta(p.as_meta(), s);
    if (p.is_var()) {
      if (!s.is_var()) return false;
      const std::string& w = p.as_var().name;
      const std::string& y = s.as_var().name;
      if (auto c = counterpart(w)) return *c == y;
      if (subject_bound(y)) return false;
      auto [it, fresh] = val_.var.emplace(w, y);
      return fresh || it->second == y;
    }
    if (!s.is_construction()) return false;
    const auto& pc = p.as_construction();
    const auto& sc = s.as_construction();
    if (pc.head != sc.head || pc.args.size() != sc.args.size()) return false;
    for (size_t i = 0; i < pc.args.size(); ++i) {
      const Piece& pp = pc.args[i];
      const Piece& sp = sc.args[i];
      if (pp.is_scope() != sp.is_scope()) return false;
      if (!pp.is_scope()) {
        later.push_back(Deferred{&pp.assoc(), &sp.assoc(), corr_});
        continue;
      }
      if (!scope(pp.scope(), sp.scope(), later)) return false;
    }
    return true;
  }

  bool scope(const ScopePiece& pp, const ScopePiece& sp, std::vector<Deferred>& later) {
    if (pp.binders.size() != sp.binders.size()) return false;
    Term body = sp.body;
    Subst rename;
    std::vector<std::string> names;
    for (const auto& y : sp.binders) {
      std::string n = y;
      // A binder that shadows an enclosing one gets a new name so that
      // counterparts stay unambiguous.
      if (subject_bound(y) || std::count(sp.binders.begin(), sp.binders.end(), y) > 1) {
        n = fresh_var(y, avoid_);
        rename.insert_or_assign(y, Term::var(n));
      }
      avoid_.insert(n);
      names.push_back(n);
    }
    if (!rename.empty()) body = substitute(body, rename);
    size_t depth = corr_.size();
    for (size_t j = 0; j < names.size(); ++j) corr_.emplace_back(pp.binders[j], names[j]);
    bool ok = term(pp.body, body, later);
    corr_.resize(depth);
    return ok;
  }

  bool meta(const MetaApp& m, const Term& s) {
    auto params = params_of(m.args);
    if (!params || !only_visible(free_vars(s), *params)) return false;
    auto it = val_.meta.find(m.meta);
    if (it == val_.meta.end()) {
      val_.meta.emplace(m.meta, Abstraction{*params, s});
      return true;
    }
    const Abstraction& old = it->second;
    if (old.params.size() != params->size()) return false;
    Subst sub;
    for (size_t i = 0; i < params->size(); ++i) sub.emplace(old.params[i], Term::var((*params)[i]));
    return alpha_equal(substitute(old.body, sub), s);
  }

  bool catch_all(const CatchAll& c, Environment rest) {
    auto params = params_of(c.args);
    if (!params) return false;
    for (const auto& [k, v] : rest) {
      VarSet fv = free_vars(v);
      fv.insert(k);
      if (!only_visible(fv, *params)) return false;
    }
    auto it = val_.assoc.find(c.meta);
    if (it == val_.assoc.end()) {
      val_.assoc.emplace(c.meta, AssocBinding{*params, std::move(rest)});
      return true;
    }
    const AssocBinding& old = it->second;
    if (old.params.size() != params->size() || old.entries.size() != rest.size()) return false;
    Subst sub;
    for (size_t i = 0; i < params->size(); ++i) sub.emplace(old.params[i], Term::var((*params)[i]));
    for (size_t i = 0; i < rest.size(); ++i) {
      auto k = sub.find(old.entries[i].first);
      const std::string& key = k == sub.end() ? old.entries[i].first : k->second.as_var().name;
      if (key != rest[i].first || !alpha_equal(substitute(old.entries[i].second, sub), rest[i].second))
        return false;
    }
    return true;
  }

  Valuation val_;
  VarSet avoid_;
  std::vector<std::pair<std::string, std::string>> corr_;  // pattern binder -> subject binder
};

VarSet free_vars_of(const Subst& s, const VarSet& relevant) {
  VarSet out;
  for (const auto& [k, v] : s)
    if (relevant.count(k)) {
      auto fv = free_vars(v);
      out.insert(fv.begin(), fv.end());
    }
  return out;
}

Term subst(const Term& t, const Subst& sigma);

Piece subst_piece(const Piece& p, const Subst& sigma) {
  if (!p.is_scope()) {
    AssocPiece out;
    for (const auto& a : p.assoc().entries) {
      if (const auto* e = std::get_if<MapEntry>(&a)) {
        std::string key = e->key;
        auto it = sigma.find(key);
        if (it != sigma.end() && it->second.is_var()) key = it->second.as_var().name;
        out.entries.push_back(MapEntry{key, subst(e->value, sigma), e->span});
      } else if (const auto* n = std::get_if<NotKey>(&a)) {
        std::string key = n->key;
        auto it = sigma.find(key);
        if (it != sigma.end() && it->second.is_var()) key = it->second.as_var().name;
        out.entries.push_back(NotKey{key, n->span});
      } else {
        const auto& c = std::get<CatchAll>(a);
        std::vector<Term> args;
        for (const auto& x : c.args) args.push_back(subst(x, sigma));
        out.entries.push_back(CatchAll{c.meta, std::move(args), c.span});
      }
    }
    return out;
  }
  const ScopePiece& sp = p.scope();
  if (sp.binders.empty()) return plain(subst(sp.body, sigma));
  Subst inner = sigma;
  for (const auto& b : sp.binders) inner.erase(b);
  if (inner.empty()) return p;
  VarSet body_fv = free_vars(sp.body);
  VarSet incoming = free_vars_of(inner, body_fv);
  VarSet avoid = incoming;
  for (const auto& v : all_vars(sp.body)) avoid.insert(v);
  for (const auto& b : sp.binders) avoid.insert(b);
  for (const auto& [k, v] : inner) avoid.insert(k);
  std::vector<std::string> binders;
  for (const auto& b : sp.binders) {
    if (incoming.count(b)) {
      std::string n = fresh_var(b, avoid);
      avoid.insert(n);
      inner.insert_or_assign(b, Term::var(n));
      binders.push_back(n);
    } else {
      binders.push_back(b);
    }
  }
  return ScopePiece{std::move(binders), subst(sp.body, inner)};
}

Term subst(const Term& t, const Subst& sigma) {
  if (sigma.empty()) return t;
  if (t.is_var()) {
    auto it = sigma.find(t.as_var().name);
    return it == sigma.end() ? t : it->second;
  }
  if (t.is_meta()) {
    const auto& m = t.as_meta();
    std::vector<Term> args;
    for (const auto& a : m.args) args.push_back(subst(a, sigma));
    return Term::meta(m.meta, std::move(args), t.span());
  }
  const auto& c = t.as_construction();
  std::vector<Piece> pieces;
  for (const auto& p : c.args) pieces.push_back(subst_piece(p, sigma));
  return Term::construction(c.head, std::move(pieces), t.span());
}

void binder_names(const Term& t, VarSet& out) {
  if (t.is_meta()) {
    for (const auto& a : t.as_meta().args) binder_names(a, out);
    return;
  }
  if (!t.is_construction()) return;
  for (const auto& p : t.as_construction().args) {
    if (p.is_scope()) {
      out.insert(p.scope().binders.begin(), p.scope().binders.end());
      binder_names(p.scope().body, out);
      continue;
    }
    for (const auto& a : p.assoc().entries) {
      if (const auto* e = std::get_if<MapEntry>(&a)) binder_names(e->value, out);
      if (const auto* c = std::get_if<CatchAll>(&a))
        for (const auto& x : c->args) binder_names(x, out);
    }
  }
}

void upsert(Environment& env, std::string key, Term value) {
  for (auto& e : env)
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  env.emplace_back(std::move(key), std::move(value));
}

class Contractor {
 public:
  Contractor(const Valuation& val, const VarSet& avoid, const Term& rhs) : val_(val), avoid_(avoid) {
    auto add = [&](const Term& t, const std::vector<std::string>& params) {
      for (const auto& v : free_vars(t))
        if (std::find(params.begin(), params.end(), v) == params.end()) capture_.insert(v);
      for (const auto& v : all_vars(t)) avoid_.insert(v);
    };
    for (const auto& [m, a] : val.meta) add(a.body, a.params);
    for (const auto& [m, b] : val.assoc)
      for (const auto& [k, v] : b.entries) {
        if (std::find(b.params.begin(), b.params.end(), k) == b.params.end()) capture_.insert(k);
        avoid_.insert(k);
        add(v, b.params);
      }
    for (const auto& [w, y] : val.var) {
      capture_.insert(y);
      avoid_.insert(y);
    }
    binder_names(rhs, avoid_);
  }

  Term term(const Term& t) {
    if (t.is_var()) return Term::var(variable(t.as_var().name));
    if (t.is_meta()) {
      const auto& m = t.as_meta();
      auto it = val_.meta.find(m.meta);
      if (it == val_.meta.end()) throw EngineError(fmt::format("no binding for meta-variable '{}'", m.meta));
      const Abstraction& abs = it->second;
      if (abs.params.size() != m.args.size())
        throw EngineError(fmt::format("'{}' is applied to the wrong number of arguments", m.meta));
      Subst sigma;
      for (size_t i = 0; i < m.args.size(); ++i) sigma.insert_or_assign(abs.params[i], term(m.args[i]));
      return subst(abs.body, sigma);
    }
    const auto& c = t.as_construction();
    std::vector<Piece> pieces;
    for (const auto& p : c.args) pieces.push_back(p.is_scope() ? scope(p.scope()) : Piece(assoc(p.assoc())));
    return Term::construction(c.head, std::move(pieces), t.span());
  }

 private:
  std::string variable(const std::string& w) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (it->first == w) return it->second;
    if (auto it = val_.var.find(w); it != val_.var.end()) return it->second;
    auto [it, inserted] = fresh_.emplace(w, std::string());
    if (inserted) {
      it->second = fresh_var(w, avoid_);
      avoid_.insert(it->second);
      capture_.insert(it->second);
    }
    return it->second;
  }

  Piece scope(const ScopePiece& sp) {
    size_t depth = scopes_.size();
    std::vector<std::string> names;
    for (const auto& b : sp.binders) {
      std::string n = b;
      if (capture_.count(b)) {
        VarSet taken = capture_;
        taken.insert(avoid_.begin(), avoid_.end());
        n = fresh_var(b, taken);
        avoid_.insert(n);
      }
      names.push_back(n);
      scopes_.emplace_back(b, n);
    }
    Term body = term(sp.body);
    scopes_.resize(depth);
    return ScopePiece{std::move(names), std::move(body)};
  }

  AssocPiece assoc(const AssocPiece& ap) {
    Environment env;
    for (const auto& a : ap.entries) {
      if (const auto* e = std::get_if<MapEntry>(&a)) {
        std::string key = variable(e->key);
        upsert(env, std::move(key), term(e->value));
      } else if (const auto* c = std::get_if<CatchAll>(&a)) {
        auto it = val_.assoc.find(c->meta);
        if (it == val_.assoc.end())
          throw EngineError(fmt::format("no binding for catch-all '{}'", c->meta));
        const AssocBinding& b = it->second;
        if (b.params.size() != c->args.size())
          throw EngineError(fmt::format("'{}' is applied to the wrong number of arguments", c->meta));
        Subst sigma;
        for (size_t i = 0; i < c->args.size(); ++i) sigma.insert_or_assign(b.params[i], term(c->args[i]));
        for (const auto& [k, v] : b.entries) {
          auto s = sigma.find(k);
          std::string key = (s != sigma.end() && s->second.is_var()) ? s->second.as_var().name : k;
          upsert(env, std::move(key), subst(v, sigma));
        }
      } else {
        throw EngineError("a negated key cannot be contracted");
      }
    }
    AssocPiece out;
    for (auto& [k, v] : env) out.entries.push_back(MapEntry{k, std::move(v), {}});
    return out;
  }

  const Valuation& val_;
  VarSet avoid_;    // names a fresh variable must not take
  VarSet capture_;  // names free in instantiated material
  std::map<std::string, std::string> fresh_;
  std::vector<std::pair<std::string, std::string>> scopes_;
};

}  // namespace

std::optional<Valuation> match_term(const Term& pattern, const Term& subject) {
  Matcher m({}, all_vars(subject));
  if (!m.unit(pattern, subject)) return std::nullopt;
  return m.take();
}

std::optional<Valuation> match_assoc(const std::vector<Association>& pattern, const Environment& subject,
                                     const Valuation& partial) {
  VarSet avoid;
  for (const auto& [k, v] : subject) {
    avoid.insert(k);
    for (const auto& n : all_vars(v)) avoid.insert(n);
  }
  Matcher m(partial, std::move(avoid));
  if (!m.environment(pattern, subject)) return std::nullopt;
  return m.take();
}

Term substitute(const Term& body, const std::map<std::string, Term>& binding) { return subst(body, binding); }

Term contract(const Term& rhs, const Valuation& val, const VarSet& avoid) {
  return Contractor(val, avoid, rhs).term(rhs);
}

Rewriter::Rewriter(GlobalEnv gamma, std::vector<RuleDecl> rules)
    : gamma_(std::move(gamma)), rules_(std::move(rules)) {}

Rewriter::Rewriter(GlobalEnv gamma, const Script& script) : gamma_(std::move(gamma)) {
  for (const RuleDecl* r : script.rules()) rules_.push_back(*r);
}

std::optional<std::pair<Term, RewriteStep>> Rewriter::step(const Term& t) const {
  std::vector<size_t> path;
  return search(t, path, all_vars(t));
}

std::optional<std::pair<Term, RewriteStep>> Rewriter::search(const Term& t, std::vector<size_t>& path,
                                                             const VarSet& avoid) const {
  if (!t.is_construction()) return std::nullopt;
  const auto& c = t.as_construction();
  if (gamma_.is_scheme(c.head)) {
    for (size_t r = 0; r < rules_.size(); ++r) {
      const Term& lhs = rules_[r].lhs;
      if (!lhs.is_construction() || lhs.as_construction().head != c.head) continue;
      auto val = match_term(lhs, t);
      if (!val) continue;
      Term out = contract(rules_[r].rhs, *val, avoid);
      return std::make_pair(std::move(out), RewriteStep{path, r, std::move(*val)});
    }
  }
  for (size_t i = 0; i < c.args.size(); ++i) {
    const Piece& p = c.args[i];
    path.push_back(i);
    if (p.is_scope()) {
      if (auto hit = search(p.scope().body, path, avoid)) {
        std::vector<Piece> pieces = c.args;
        pieces[i] = ScopePiece{p.scope().binders, std::move(hit->first)};
        return std::make_pair(Term::construction(c.head, std::move(pieces), t.span()), std::move(hit->second));
      }
    } else {
      const auto& entries = p.assoc().entries;
      for (size_t j = 0; j < entries.size(); ++j) {
        const auto* e = std::get_if<MapEntry>(&entries[j]);
        if (!e) continue;
        path.push_back(j);
        if (auto hit = search(e->value, path, avoid)) {
          AssocPiece ap = p.assoc();
          ap.entries[j] = MapEntry{e->key, std::move(hit->first), e->span};
          std::vector<Piece> pieces = c.args;
          pieces[i] = std::move(ap);
          return std::make_pair(Term::construction(c.head, std::move(pieces), t.span()), std::move(hit->second));
        }
        path.pop_back();
      }
    }
    path.pop_back();
  }
  return std::nullopt;
}

std::string format_position(const std::vector<size_t>& position) {
  return fmt::format("[{}]", fmt::join(position, ","));
}

std::string format_step(size_t number, const RewriteStep& step, const RuleDecl& rule, const Term& result,
                        Spelling spelling) {
  std::string decl = render(Declaration(rule), spelling);
  if (!decl.empty() && decl.back() == ';') decl.pop_back();
  return fmt::format("step {} at {} by rule {} ({})\n{}", number, format_position(step.position), step.rule_index,
                     decl, render(result, spelling));
}

}  // namespace plank
