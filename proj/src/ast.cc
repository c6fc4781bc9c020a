#include "plank/ast.h"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace plank {

namespace {

bool is_ident_tail(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

bool all_tail(std::string_view s) { return std::all_of(s.begin(), s.end(), is_ident_tail); }

}  // namespace

std::optional<IdentKind> Ident::classify(std::string_view text) {
  if (text.empty()) return std::nullopt;
  const unsigned char first = static_cast<unsigned char>(text.front());
  if (first == '#') {
    if (text.size() < 2 || !std::isalpha(static_cast<unsigned char>(text[1])) ||
        !all_tail(text.substr(1)))
      return std::nullopt;
    return IdentKind::MetaVariable;
  }
  if (!all_tail(text)) return std::nullopt;
  if (std::isupper(first)) return IdentKind::Constructor;
  if (std::islower(first)) return IdentKind::Variable;
  return std::nullopt;
}

Ident::Ident(std::string text) : kind_(IdentKind::Variable), text_(std::move(text)) {
  auto kind = classify(text_);
  if (!kind) throw std::invalid_argument("malformed identifier '" + text_ + "'");
  kind_ = *kind;
}

Term Term::construction(std::string head, std::vector<Piece> args, SourceSpan span) {
  return Term(std::make_shared<const TermNode>(
      TermNode{Construction{std::move(head), std::move(args)}, std::move(span)}));
}

Term Term::var(std::string name, SourceSpan span) {
  return Term(
      std::make_shared<const TermNode>(TermNode{VarRef{std::move(name)}, std::move(span)}));
}

Term Term::meta(std::string name, std::vector<Term> args, SourceSpan span) {
  return Term(std::make_shared<const TermNode>(
      TermNode{MetaApp{std::move(name), std::move(args)}, std::move(span)}));
}

bool Term::is_construction() const { return std::holds_alternative<Construction>(node_->value); }
bool Term::is_var() const { return std::holds_alternative<VarRef>(node_->value); }
bool Term::is_meta() const { return std::holds_alternative<MetaApp>(node_->value); }

const Construction& Term::as_construction() const { return std::get<Construction>(node_->value); }
const VarRef& Term::as_var() const { return std::get<VarRef>(node_->value); }
const MetaApp& Term::as_meta() const { return std::get<MetaApp>(node_->value); }
const SourceSpan& Term::span() const { return node_->span; }

const SourceSpan& span_of(const Declaration& d) {
  return std::visit([](const auto& decl) -> const SourceSpan& { return decl.span; }, d);
}

std::vector<const RuleDecl*> Script::rules() const {
  std::vector<const RuleDecl*> out;
  for (const auto& d : declarations)
    if (const auto* r = std::get_if<RuleDecl>(&d)) out.push_back(r);
  return out;
}

// Alpha-equivalence -------------------------------------------------------

namespace {

// Bound names on each side map to the binding depth at which they were
// introduced; innermost binding wins.
class AlphaComparer {
 public:
  bool terms(const Term& a, const Term& b) {
    if (a.is_var() && b.is_var()) return vars(a.as_var().name, b.as_var().name);
    if (a.is_meta() && b.is_meta()) {
      const auto& ma = a.as_meta();
      const auto& mb = b.as_meta();
      return ma.meta == mb.meta && term_lists(ma.args, mb.args);
    }
    if (a.is_construction() && b.is_construction()) {
      const auto& ca = a.as_construction();
      const auto& cb = b.as_construction();
      if (ca.head != cb.head || ca.args.size() != cb.args.size()) return false;
      for (size_t i = 0; i < ca.args.size(); ++i)
        if (!pieces(ca.args[i], cb.args[i])) return false;
      return true;
    }
    return false;
  }

 private:
  std::vector<std::pair<std::string, int>> left_, right_;
  int depth_ = 0;

  static std::optional<int> level(const std::vector<std::pair<std::string, int>>& env,
                                  const std::string& name) {
    for (auto it = env.rbegin(); it != env.rend(); ++it)
      if (it->first == name) return it->second;
    return std::nullopt;
  }

  bool vars(const std::string& a, const std::string& b) const {
    auto la = level(left_, a);
    auto lb = level(right_, b);
    if (la || lb) return la == lb;
    return a == b;
  }

  bool term_lists(const std::vector<Term>& a, const std::vector<Term>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
      if (!terms(a[i], b[i])) return false;
    return true;
  }

  bool pieces(const Piece& a, const Piece& b) {
    if (a.is_scope() != b.is_scope()) return false;
    if (a.is_scope()) {
      const auto& sa = a.scope();
      const auto& sb = b.scope();
      if (sa.binders.size() != sb.binders.size()) return false;
      const size_t mark_l = left_.size();
      const size_t mark_r = right_.size();
      for (size_t i = 0; i < sa.binders.size(); ++i) {
        ++depth_;
        left_.emplace_back(sa.binders[i], depth_);
        right_.emplace_back(sb.binders[i], depth_);
      }
      const bool eq = terms(sa.body, sb.body);
      depth_ -= static_cast<int>(sa.binders.size());
      left_.resize(mark_l);
      right_.resize(mark_r);
      return eq;
    }
    const auto& ea = a.assoc().entries;
    const auto& eb = b.assoc().entries;
    if (ea.size() != eb.size()) return false;
    std::vector<bool> used(eb.size(), false);
    for (const auto& x : ea) {
      bool found = false;
      for (size_t j = 0; j < eb.size() && !found; ++j) {
        if (!used[j] && associations(x, eb[j])) {
          used[j] = true;
          found = true;
        }
      }
      if (!found) return false;
    }
    return true;
  }

  bool associations(const Association& a, const Association& b) {
    if (a.index() != b.index()) return false;
    if (const auto* ma = std::get_if<MapEntry>(&a)) {
      const auto& mb = std::get<MapEntry>(b);
      return vars(ma->key, mb.key) && terms(ma->value, mb.value);
    }
    if (const auto* na = std::get_if<NotKey>(&a)) return vars(na->key, std::get<NotKey>(b).key);
    const auto& ca = std::get<CatchAll>(a);
    const auto& cb = std::get<CatchAll>(b);
    return ca.meta == cb.meta && term_lists(ca.args, cb.args);
  }
};

template <typename F>
void walk_terms_in(const Association& a, F&& f) {
  if (const auto* m = std::get_if<MapEntry>(&a)) f(m->value);
  if (const auto* c = std::get_if<CatchAll>(&a))
    for (const auto& t : c->args) f(t);
}

void collect_free(const Term& t, VarSet& bound, VarSet& out);

void collect_free_key(const std::string& key, const VarSet& bound, VarSet& out) {
  if (!bound.count(key)) out.insert(key);
}

void collect_free(const Term& t, VarSet& bound, VarSet& out) {
  if (t.is_var()) {
    collect_free_key(t.as_var().name, bound, out);
    return;
  }
  if (t.is_meta()) {
    for (const auto& a : t.as_meta().args) collect_free(a, bound, out);
    return;
  }
  for (const auto& p : t.as_construction().args) {
    if (p.is_scope()) {
      const auto& sp = p.scope();
      VarSet inner = bound;
      inner.insert(sp.binders.begin(), sp.binders.end());
      collect_free(sp.body, inner, out);
      continue;
    }
    for (const auto& a : p.assoc().entries) {
      if (const auto* m = std::get_if<MapEntry>(&a)) collect_free_key(m->key, bound, out);
      if (const auto* n = std::get_if<NotKey>(&a)) collect_free_key(n->key, bound, out);
      walk_terms_in(a, [&](const Term& sub) { collect_free(sub, bound, out); });
    }
  }
}

void collect_non_assoc(const Term& t, VarSet& out) {
  if (t.is_var()) {
    out.insert(t.as_var().name);
  } else if (t.is_meta()) {
    for (const auto& a : t.as_meta().args) collect_non_assoc(a, out);
  } else {
    for (const auto& p : t.as_construction().args)
      if (p.is_scope()) collect_non_assoc(p.scope().body, out);
  }
}

void collect_all(const Term& t, VarSet& out) {
  if (t.is_var()) {
    out.insert(t.as_var().name);
  } else if (t.is_meta()) {
    for (const auto& a : t.as_meta().args) collect_all(a, out);
  } else {
    for (const auto& p : t.as_construction().args) {
      if (p.is_scope()) {
        out.insert(p.scope().binders.begin(), p.scope().binders.end());
        collect_all(p.scope().body, out);
        continue;
      }
      for (const auto& a : p.assoc().entries) {
        if (const auto* m = std::get_if<MapEntry>(&a)) out.insert(m->key);
        if (const auto* n = std::get_if<NotKey>(&a)) out.insert(n->key);
        walk_terms_in(a, [&](const Term& sub) { collect_all(sub, out); });
      }
    }
  }
}

void collect_metas(const Term& t, std::set<std::string>& out) {
  if (t.is_var()) return;
  if (t.is_meta()) {
    out.insert(t.as_meta().meta);
    for (const auto& a : t.as_meta().args) collect_metas(a, out);
    return;
  }
  for (const auto& p : t.as_construction().args) {
    if (p.is_scope()) {
      collect_metas(p.scope().body, out);
      continue;
    }
    for (const auto& a : p.assoc().entries) {
      if (const auto* c = std::get_if<CatchAll>(&a)) out.insert(c->meta);
      walk_terms_in(a, [&](const Term& sub) { collect_metas(sub, out); });
    }
  }
}

}  // namespace

bool alpha_equal(const Term& a, const Term& b) { return AlphaComparer{}.terms(a, b); }

bool alpha_equal(const Script& a, const Script& b) {
  if (a.declarations.size() != b.declarations.size()) return false;
  for (size_t i = 0; i < a.declarations.size(); ++i) {
    const auto& da = a.declarations[i];
    const auto& db = b.declarations[i];
    if (da.index() != db.index()) return false;
    const bool eq = std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(db);
          if constexpr (std::is_same_v<T, RuleDecl>) {
            return x.sort == y.sort && alpha_equal(x.lhs, y.lhs) && alpha_equal(x.rhs, y.rhs);
          } else if constexpr (std::is_same_v<T, VariableDecl>) {
            return x.sort == y.sort;
          } else {
            return x.sort == y.sort && x.name == y.name && x.forms == y.forms;
          }
        },
        da);
    if (!eq) return false;
  }
  return true;
}

VarSet free_vars(const Term& t) {
  VarSet bound, out;
  collect_free(t, bound, out);
  return out;
}

VarSet non_assoc_vars(const Term& t) {
  VarSet out;
  collect_non_assoc(t, out);
  return out;
}

VarSet all_vars(const Term& t) {
  VarSet out;
  collect_all(t, out);
  return out;
}

std::string fresh_var(const std::string& hint, const VarSet& avoid) {
  if (!avoid.count(hint)) return hint;
  for (size_t n = 1;; ++n) {
    std::string candidate = hint + std::to_string(n);
    if (!avoid.count(candidate)) return candidate;
  }
}

std::set<std::string> meta_vars(const Term& t) {
  std::set<std::string> out;
  collect_metas(t, out);
  return out;
}

}  // namespace plank
