#include "support.h"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace plank::testing {

std::string corpus_path(const std::string& name) { return std::string(PLANK_CORPUS_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string expected_tag(const std::string& text) {
  const std::string marker = "// expect: ";
  if (text.rfind(marker, 0) != 0) throw std::runtime_error("mutation file without expect line");
  return text.substr(marker.size(), text.find('\n') - marker.size());
}

namespace {

template <typename T>
T must(Result<T, ParseError> r) {
  if (r) return std::move(r).value();
  std::string msg;
  for (const auto& e : r.errors()) msg += format_parse_error(e) + "\n";
  throw std::runtime_error(msg);
}

}  // namespace

Script script(const std::string& text) { return must(parse_script(text)); }
Term term(const std::string& text) { return must(parse_term(text)); }

Loaded load_corpus(const std::string& name) {
  std::string path = corpus_path(name);
  Script s = must(parse_script(slurp(path), path));
  auto checked = check_script(s);
  if (!checked) {
    std::string msg;
    for (const auto& e : checked.errors()) msg += format_check_error(e) + "\n";
    throw std::runtime_error(msg);
  }
  return Loaded{std::move(s), std::move(checked).value()};
}

// ---------------------------------------------------------------------------
// Canonical strings

namespace {

std::string db_name(const std::string& v, const std::vector<std::string>& stack) {
  for (size_t i = stack.size(); i-- > 0;)
    if (stack[i] == v) return fmt::format("^{}", stack.size() - 1 - i);
  return v;
}

std::string db(const Term& t, std::vector<std::string>& stack) {
  if (t.is_var()) return db_name(t.as_var().name, stack);
  if (t.is_meta()) {
    std::vector<std::string> args;
    for (const auto& a : t.as_meta().args) args.push_back(db(a, stack));
    return fmt::format("{}({})", t.as_meta().meta, fmt::join(args, ","));
  }
  const auto& c = t.as_construction();
  std::vector<std::string> pieces;
  for (const auto& p : c.args) {
    if (p.is_scope()) {
      const auto& sp = p.scope();
      for (const auto& b : sp.binders) stack.push_back(b);
      pieces.push_back(fmt::format("[{}]{}", sp.binders.size(), db(sp.body, stack)));
      stack.resize(stack.size() - sp.binders.size());
      continue;
    }
    std::vector<std::string> entries;
    for (const auto& a : p.assoc().entries) {
      if (const auto* e = std::get_if<MapEntry>(&a)) {
        entries.push_back(db_name(e->key, stack) + ":" + db(e->value, stack));
      } else if (const auto* n = std::get_if<NotKey>(&a)) {
        entries.push_back("~" + db_name(n->key, stack));
      } else {
        const auto& ca = std::get<CatchAll>(a);
        std::vector<std::string> args;
        for (const auto& x : ca.args) args.push_back(db(x, stack));
        entries.push_back(fmt::format("{}({})", ca.meta, fmt::join(args, ",")));
      }
    }
    std::sort(entries.begin(), entries.end());
    pieces.push_back(fmt::format("{{{}}}", fmt::join(entries, ",")));
  }
  return fmt::format("{}({})", c.head, fmt::join(pieces, ","));
}

void names_in(const Term& t, std::set<std::string>& out) {
  if (t.is_var()) {
    out.insert(t.as_var().name);
    return;
  }
  if (t.is_meta()) {
    for (const auto& a : t.as_meta().args) names_in(a, out);
    return;
  }
  for (const auto& p : t.as_construction().args) {
    if (p.is_scope()) {
      out.insert(p.scope().binders.begin(), p.scope().binders.end());
      names_in(p.scope().body, out);
      continue;
    }
    for (const auto& a : p.assoc().entries) {
      if (const auto* e = std::get_if<MapEntry>(&a)) {
        out.insert(e->key);
        names_in(e->value, out);
      } else if (const auto* n = std::get_if<NotKey>(&a)) {
        out.insert(n->key);
      } else {
        for (const auto& x : std::get<CatchAll>(a).args) names_in(x, out);
      }
    }
  }
}

struct NaiveSubst {
  const std::map<std::string, Term>& sigma;
  std::set<std::string> taken;
  int counter = 0;
  std::vector<std::pair<std::string, std::string>> scope;  // old -> new

  std::string fresh() {
    for (;;) {
      std::string n = fmt::format("q{}", counter++);
      if (!taken.count(n)) return n;
    }
  }

  const std::string* renamed(const std::string& v) const {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it)
      if (it->first == v) return &it->second;
    return nullptr;
  }

  std::string key(const std::string& k) const {
    if (const auto* r = renamed(k)) return *r;
    auto it = sigma.find(k);
    if (it != sigma.end() && it->second.is_var()) return it->second.as_var().name;
    return k;
  }

  Term run(const Term& t) {
    if (t.is_var()) {
      const std::string& v = t.as_var().name;
      if (const auto* r = renamed(v)) return Term::var(*r);
      auto it = sigma.find(v);
      return it == sigma.end() ? t : it->second;
    }
    if (t.is_meta()) {
      std::vector<Term> args;
      for (const auto& a : t.as_meta().args) args.push_back(run(a));
      return Term::meta(t.as_meta().meta, std::move(args));
    }
    std::vector<Piece> pieces;
    for (const auto& p : t.as_construction().args) {
      if (p.is_scope()) {
        std::vector<std::string> binders;
        size_t depth = scope.size();
        for (const auto& b : p.scope().binders) {
          binders.push_back(fresh());
          scope.emplace_back(b, binders.back());
        }
        Term body = run(p.scope().body);
        scope.resize(depth);
        pieces.push_back(ScopePiece{std::move(binders), std::move(body)});
        continue;
      }
      AssocPiece out;
      for (const auto& a : p.assoc().entries) {
        if (const auto* e = std::get_if<MapEntry>(&a)) {
          out.entries.push_back(MapEntry{key(e->key), run(e->value), {}});
        } else if (const auto* n = std::get_if<NotKey>(&a)) {
          out.entries.push_back(NotKey{key(n->key), {}});
        } else {
          const auto& c = std::get<CatchAll>(a);
          std::vector<Term> args;
          for (const auto& x : c.args) args.push_back(run(x));
          out.entries.push_back(CatchAll{c.meta, std::move(args), {}});
        }
      }
      pieces.push_back(std::move(out));
    }
    return Term::construction(t.as_construction().head, std::move(pieces));
  }
};

}  // namespace

std::string de_bruijn(const Term& t) {
  std::vector<std::string> stack;
  return db(t, stack);
}

Term naive_substitute(const Term& t, const std::map<std::string, Term>& sigma) {
  NaiveSubst n{sigma, {}, 0, {}};
  names_in(t, n.taken);
  for (const auto& [k, v] : sigma) {
    n.taken.insert(k);
    names_in(v, n.taken);
  }
  return n.run(t);
}

std::vector<Term> lambda_terms(int depth, const std::vector<std::string>& vars) {
  std::vector<Term> out;
  for (const auto& v : vars) out.push_back(Term::var(v));
  if (depth <= 1) return out;
  std::vector<Term> smaller = lambda_terms(depth - 1, vars);
  for (const auto& b : vars)
    for (const auto& body : smaller) out.push_back(Term::construction("Lam", {ScopePiece{{b}, body}}));
  for (const auto& f : smaller)
    for (const auto& a : smaller) out.push_back(Term::construction("Ap", {plain(f), plain(a)}));
  return out;
}

Term subterm_at(const Term& t, const std::vector<size_t>& position) {
  Term cur = t;
  for (size_t i = 0; i < position.size(); ++i) {
    const Piece& p = cur.as_construction().args.at(position[i]);
    if (p.is_scope()) {
      cur = p.scope().body;
    } else {
      cur = std::get<MapEntry>(p.assoc().entries.at(position.at(++i))).value;
    }
  }
  return cur;
}

Term without_not_keys(const Term& pattern) {
  if (pattern.is_var()) return pattern;
  if (pattern.is_meta()) {
    std::vector<Term> args;
    for (const auto& a : pattern.as_meta().args) args.push_back(without_not_keys(a));
    return Term::meta(pattern.as_meta().meta, std::move(args));
  }
  std::vector<Piece> pieces;
  for (const auto& p : pattern.as_construction().args) {
    if (p.is_scope()) {
      pieces.push_back(ScopePiece{p.scope().binders, without_not_keys(p.scope().body)});
      continue;
    }
    AssocPiece out;
    for (const auto& a : p.assoc().entries) {
      if (const auto* e = std::get_if<MapEntry>(&a))
        out.entries.push_back(MapEntry{e->key, without_not_keys(e->value), e->span});
      else if (std::holds_alternative<CatchAll>(a))
        out.entries.push_back(a);
    }
    pieces.push_back(std::move(out));
  }
  return Term::construction(pattern.as_construction().head, std::move(pieces));
}

// ---------------------------------------------------------------------------
// Generators

namespace {

size_t pick(std::mt19937& rng, size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); }

template <typename T>
const T& choose(std::mt19937& rng, const std::vector<T>& xs) {
  return xs[pick(rng, xs.size())];
}

AssocPiece random_env(std::mt19937& rng, int depth) {
  static const std::vector<std::string> keys = {"a", "b", "c"};
  AssocPiece env;
  std::vector<std::string> ks = keys;
  std::shuffle(ks.begin(), ks.end(), rng);
  size_t n = pick(rng, 3);
  for (size_t i = 0; i < n; ++i) env.entries.push_back(MapEntry{ks[i], random_ex2_term(rng, depth - 1), {}});
  return env;
}

}  // namespace

Term random_ex2_term(std::mt19937& rng, int depth) {
  static const std::vector<std::string> free = {"a", "b", "c"};
  static const std::vector<std::string> binders = {"x", "y", "a"};
  if (depth <= 0) {
    if (pick(rng, 3) == 0) {
      const std::string& b = choose(rng, binders);
      return Term::construction("Lam", {ScopePiece{{b}, Term::var(pick(rng, 2) ? b : choose(rng, free))}});
    }
    return Term::var(choose(rng, free));
  }
  switch (pick(rng, 6)) {
    case 0:
      return Term::var(choose(rng, free));
    case 1: {
      const std::string& b = choose(rng, binders);
      return Term::construction("Lam", {ScopePiece{{b}, random_ex2_term(rng, depth - 1)}});
    }
    case 2:
      return Term::construction("Ap", {plain(random_ex2_term(rng, depth - 1)), plain(random_ex2_term(rng, depth - 1))});
    case 3:
    case 4:
      return Term::construction("Eval", {plain(random_ex2_term(rng, depth - 1)), random_env(rng, depth)});
    default:
      return Term::construction("Apply", {plain(random_ex2_term(rng, depth - 1)),
                                          plain(random_ex2_term(rng, depth - 1)), random_env(rng, depth)});
  }
}

Term random_ast(std::mt19937& rng, int depth) {
  static const std::vector<std::string> heads = {"A", "Bee", "C2", "D_x"};
  static const std::vector<std::string> vars = {"x", "y", "z", "w1", "v_2"};
  static const std::vector<std::string> metas = {"#M", "#N", "#env", "#B1"};
  size_t kind = depth <= 0 ? pick(rng, 2) : pick(rng, 5);
  if (kind == 0) return Term::var(choose(rng, vars));
  if (kind == 1) {
    std::vector<Term> args;
    if (depth > 0)
      for (size_t n = pick(rng, 3); n > 0; --n) args.push_back(random_ast(rng, depth - 1));
    return Term::meta(choose(rng, metas), std::move(args));
  }
  std::vector<Piece> pieces;
  for (size_t n = pick(rng, 4); n > 0; --n) {
    if (pick(rng, 4) == 0) {
      AssocPiece ap;
      for (size_t m = pick(rng, 4); m > 0; --m) {
        switch (pick(rng, 3)) {
          case 0:
            ap.entries.push_back(MapEntry{choose(rng, vars), random_ast(rng, depth - 1), {}});
            break;
          case 1:
            ap.entries.push_back(NotKey{choose(rng, vars), {}});
            break;
          default: {
            std::vector<Term> args;
            for (size_t k = pick(rng, 3); k > 0; --k) args.push_back(random_ast(rng, depth - 1));
            ap.entries.push_back(CatchAll{choose(rng, metas), std::move(args), {}});
          }
        }
      }
      pieces.push_back(std::move(ap));
      continue;
    }
    std::vector<std::string> binders = vars;
    std::shuffle(binders.begin(), binders.end(), rng);
    binders.resize(pick(rng, 3));
    pieces.push_back(ScopePiece{std::move(binders), random_ast(rng, depth - 1)});
  }
  return Term::construction(choose(rng, heads), std::move(pieces));
}

namespace {

Sort random_sort(std::mt19937& rng, int depth) {
  static const std::vector<std::string> names = {"L", "M", "Pair"};
  static const std::vector<std::string> tyvars = {"a", "b"};
  if (depth > 0 && pick(rng, 4) == 0) return Sort::var(choose(rng, tyvars));
  std::vector<Sort> args;
  if (depth > 0)
    for (size_t n = pick(rng, 3); n > 0; --n) args.push_back(random_sort(rng, depth - 1));
  return Sort::cons(choose(rng, names), std::move(args));
}

Form random_form(std::mt19937& rng) {
  if (pick(rng, 4) == 0) return AssocForm{random_sort(rng, 1), random_sort(rng, 1)};
  std::vector<Sort> binders;
  for (size_t n = pick(rng, 3); n > 0; --n) binders.push_back(random_sort(rng, 1));
  return ScopeForm{std::move(binders), random_sort(rng, 1)};
}

}  // namespace

Script random_script(std::mt19937& rng) {
  static const std::vector<std::string> cons = {"Lam", "Ap", "Eval", "K"};
  Script s;
  for (size_t n = pick(rng, 5); n > 0; --n) {
    std::vector<Form> forms;
    switch (pick(rng, 4)) {
      case 0:
        for (size_t k = pick(rng, 3); k > 0; --k) forms.push_back(random_form(rng));
        s.declarations.push_back(DataDecl{random_sort(rng, 1), choose(rng, cons), std::move(forms), {}});
        break;
      case 1:
        for (size_t k = pick(rng, 3); k > 0; --k) forms.push_back(random_form(rng));
        s.declarations.push_back(SchemeDecl{random_sort(rng, 1), choose(rng, cons), std::move(forms), {}});
        break;
      case 2:
        s.declarations.push_back(VariableDecl{random_sort(rng, 1), {}});
        break;
      default:
        s.declarations.push_back(RuleDecl{random_sort(rng, 1), random_ast(rng, 3), random_ast(rng, 3), {}});
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Derivation oracle
//
// The judgments below are written directly from the sorting rules, with a
// candidate Γ and Δ supplied from outside; nothing is inferred. Where the
// rules leave room, the policies of the checker are mirrored:
//   - a variable bound by an enclosing scope needs no `variable` declaration;
//   - a scheme construction may sit inside a pattern when its sort has no
//     data constructors;
//   - contraction meta-variables must occur in the pattern;
//   - one catch-all per pattern association;
//   - every constructor name is declared once per kind; Γ_con takes the
//     first declaration, Γ_fun every scheme name, Γ_hasvar every
//     `variable` sort name;
//   - every sort written in a declaration must be well-formed.

namespace {

enum class Ctx { Pat, InPat, Con, Sub };

struct OMeta {
  std::vector<Sort> args;
  bool assoc = false;
  Sort result;
  Sort key;
  Sort value;
};

struct OGamma {
  std::map<std::string, size_t> rank;
  std::set<std::string> hasvar;
  std::map<std::string, std::pair<Sort, std::vector<Form>>> con;
  std::set<std::string> fun;
};

struct ODelta {
  std::map<std::string, Sort> var;
  std::map<std::string, OMeta> meta;
};

bool wf(const OGamma& g, const Sort& s) {
  if (s.is_var()) return true;
  auto it = g.rank.find(s.name);
  if (it == g.rank.end() || it->second != s.args.size()) return false;
  return std::all_of(s.args.begin(), s.args.end(), [&](const Sort& a) { return wf(g, a); });
}

bool has_data(const OGamma& g, const Sort& s) {
  for (const auto& [name, sig] : g.con)
    if (!g.fun.count(name) && !sig.first.is_var() && !s.is_var() && sig.first.name == s.name) return true;
  return false;
}

void oracle_nonassoc(const Term& t, std::set<std::string>& out) {
  if (t.is_var()) {
    out.insert(t.as_var().name);
  } else if (t.is_meta()) {
    for (const auto& a : t.as_meta().args) oracle_nonassoc(a, out);
  } else {
    for (const auto& p : t.as_construction().args)
      if (p.is_scope()) oracle_nonassoc(p.scope().body, out);
  }
}

std::set<std::string> nonassoc(const Term& t) {
  std::set<std::string> out;
  oracle_nonassoc(t, out);
  return out;
}

struct Judge {
  const OGamma& g;

  bool in(const std::vector<std::string>& vs, const std::string& v) const {
    return std::find(vs.begin(), vs.end(), v) != vs.end();
  }

  bool var_rule(const ODelta& d, const std::vector<std::string>& vs, const std::string& w, const Sort& s) const {
    auto it = d.var.find(w);
    if (it == d.var.end() || it->second != s) return false;
    if (in(vs, w)) return true;
    return !s.is_var() && g.hasvar.count(s.name);
  }

  const std::vector<Form>* con_at(const std::string& c, const Sort& s) const {
    auto it = g.con.find(c);
    if (it == g.con.end() || it->second.first != s) return nullptr;
    return &it->second.second;
  }

  bool pieces(const ODelta& d, const std::set<std::string>& V, Ctx tc, const std::vector<std::string>& vs,
              const std::vector<Piece>& ps, const std::vector<Form>& fs) const {
    if (ps.size() != fs.size()) return false;
    for (size_t i = 0; i < ps.size(); ++i)
      if (!piece(d, V, tc, vs, ps[i], fs[i])) return false;
    return true;
  }

  bool term(const ODelta& d, const std::set<std::string>& V, Ctx tc, const std::vector<std::string>& vs,
            const Term& t, const Sort& s) const {
    switch (tc) {
      case Ctx::Pat: {
        if (!t.is_construction() || !g.fun.count(t.as_construction().head)) return false;
        const auto* fs = con_at(t.as_construction().head, s);
        return fs && pieces(d, V, Ctx::InPat, vs, t.as_construction().args, *fs);
      }
      case Ctx::InPat: {
        if (t.is_construction()) {
          const auto& c = t.as_construction();
          if (g.fun.count(c.head) && has_data(g, s)) return false;
          const auto* fs = con_at(c.head, s);
          return fs && pieces(d, V, Ctx::InPat, vs, c.args, *fs);
        }
        if (t.is_var()) return var_rule(d, vs, t.as_var().name, s);
        const auto& m = t.as_meta();
        auto it = d.meta.find(m.meta);
        if (it == d.meta.end() || it->second.assoc || it->second.result != s) return false;
        return pattern_args(d, vs, m.args, it->second.args, true);
      }
      case Ctx::Con: {
        if (t.is_construction()) {
          const auto* fs = con_at(t.as_construction().head, s);
          return fs && pieces(d, V, Ctx::Con, vs, t.as_construction().args, *fs);
        }
        if (t.is_var()) return var_rule(d, vs, t.as_var().name, s);
        const auto& m = t.as_meta();
        auto it = d.meta.find(m.meta);
        if (it == d.meta.end() || it->second.assoc || it->second.result != s) return false;
        return sub_args(d, V, vs, m.args, it->second.args);
      }
      case Ctx::Sub: {
        if (t.is_var()) {
          auto it = d.var.find(t.as_var().name);
          return it != d.var.end() && it->second == s;
        }
        if (!s.is_var() && g.hasvar.count(s.name)) return false;
        return term(d, V, Ctx::Con, vs, t, s);
      }
    }
    return false;
  }

  bool pattern_args(const ODelta& d, const std::vector<std::string>& vs, const std::vector<Term>& args,
                    const std::vector<Sort>& sorts, bool distinct) const {
    if (args.size() != sorts.size()) return false;
    std::set<std::string> seen;
    for (size_t i = 0; i < args.size(); ++i) {
      if (!args[i].is_var()) return false;
      const std::string& w = args[i].as_var().name;
      if (!in(vs, w)) return false;
      auto it = d.var.find(w);
      if (it == d.var.end() || it->second != sorts[i]) return false;
      if (distinct && !seen.insert(w).second) return false;
    }
    return true;
  }

  bool sub_args(const ODelta& d, const std::set<std::string>& V, const std::vector<std::string>& vs,
                const std::vector<Term>& args, const std::vector<Sort>& sorts) const {
    if (args.size() != sorts.size()) return false;
    for (size_t i = 0; i < args.size(); ++i)
      if (!term(d, V, Ctx::Sub, vs, args[i], sorts[i])) return false;
    return true;
  }

  bool piece(const ODelta& d, const std::set<std::string>& V, Ctx tc, const std::vector<std::string>& vs,
             const Piece& p, const Form& f) const {
    if (p.is_scope()) {
      const auto* sf = std::get_if<ScopeForm>(&f);
      if (!sf || sf->binder_sorts.size() != p.scope().binders.size()) return false;
      ODelta inner = d;
      std::vector<std::string> vs2 = vs;
      for (size_t i = 0; i < sf->binder_sorts.size(); ++i) {
        inner.var.insert_or_assign(p.scope().binders[i], sf->binder_sorts[i]);
        vs2.push_back(p.scope().binders[i]);
      }
      return term(inner, V, tc, vs2, p.scope().body, sf->body);
    }
    const auto* af = std::get_if<AssocForm>(&f);
    if (!af) return false;
    size_t catch_alls = 0;
    for (const auto& a : p.assoc().entries) {
      if (std::holds_alternative<CatchAll>(a)) ++catch_alls;
      if (!association(d, V, tc, vs, a, *af)) return false;
    }
    return tc != Ctx::InPat || catch_alls <= 1;
  }

  bool association(const ODelta& d, const std::set<std::string>& V, Ctx tc, const std::vector<std::string>& vs,
                   const Association& a, const AssocForm& f) const {
    if (const auto* e = std::get_if<MapEntry>(&a)) {
      if (!term(d, V, tc, vs, Term::var(e->key), f.key) || !V.count(e->key)) return false;
      std::set<std::string> V2 = V;
      for (const auto& v : nonassoc(e->value)) V2.insert(v);
      return term(d, V2, tc, vs, e->value, f.value);
    }
    if (const auto* n = std::get_if<NotKey>(&a)) {
      return tc == Ctx::InPat && term(d, V, tc, vs, Term::var(n->key), f.key);
    }
    const auto& c = std::get<CatchAll>(a);
    auto it = d.meta.find(c.meta);
    if (it == d.meta.end() || !it->second.assoc || it->second.key != f.key || it->second.value != f.value)
      return false;
    if (tc == Ctx::InPat) return pattern_args(d, vs, c.args, it->second.args, false);
    return sub_args(d, V, vs, c.args, it->second.args);
  }
};

void collect_rule(const Term& t, std::set<std::string>& free, std::vector<std::string>& bound,
                  std::vector<std::pair<std::string, size_t>>& metas) {
  auto note_meta = [&](const std::string& m, size_t arity) {
    for (const auto& [n, k] : metas)
      if (n == m) return;
    metas.emplace_back(m, arity);
  };
  if (t.is_var()) {
    if (std::find(bound.begin(), bound.end(), t.as_var().name) == bound.end()) free.insert(t.as_var().name);
    return;
  }
  if (t.is_meta()) {
    note_meta(t.as_meta().meta, t.as_meta().args.size());
    for (const auto& a : t.as_meta().args) collect_rule(a, free, bound, metas);
    return;
  }
  for (const auto& p : t.as_construction().args) {
    if (p.is_scope()) {
      size_t depth = bound.size();
      bound.insert(bound.end(), p.scope().binders.begin(), p.scope().binders.end());
      collect_rule(p.scope().body, free, bound, metas);
      bound.resize(depth);
      continue;
    }
    for (const auto& a : p.assoc().entries) {
      if (const auto* e = std::get_if<MapEntry>(&a)) {
        if (std::find(bound.begin(), bound.end(), e->key) == bound.end()) free.insert(e->key);
        collect_rule(e->value, free, bound, metas);
      } else if (const auto* n = std::get_if<NotKey>(&a)) {
        if (std::find(bound.begin(), bound.end(), n->key) == bound.end()) free.insert(n->key);
      } else {
        const auto& c = std::get<CatchAll>(a);
        note_meta(c.meta, c.args.size());
        for (const auto& x : c.args) collect_rule(x, free, bound, metas);
      }
    }
  }
}

std::vector<std::vector<Sort>> tuples(const std::vector<Sort>& universe, size_t n) {
  std::vector<std::vector<Sort>> out = {{}};
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::vector<Sort>> next;
    for (const auto& t : out)
      for (const auto& s : universe) {
        auto u = t;
        u.push_back(s);
        next.push_back(std::move(u));
      }
    out = std::move(next);
  }
  return out;
}

std::vector<OMeta> meta_forms(const std::vector<Sort>& universe, size_t arity) {
  std::vector<OMeta> out;
  for (const auto& args : tuples(universe, arity)) {
    for (const auto& r : universe) out.push_back(OMeta{args, false, r, {}, {}});
    for (const auto& k : universe)
      for (const auto& v : universe) out.push_back(OMeta{args, true, {}, k, v});
  }
  return out;
}

// ∃Δ for one rule under a fixed Γ.
bool rule_derivable(const OGamma& g, const RuleDecl& r, const std::vector<Sort>& universe) {
  std::set<std::string> free;
  std::vector<std::string> bound;
  std::vector<std::pair<std::string, size_t>> lhs_metas, all_metas;
  {
    std::set<std::string> ignored;
    collect_rule(r.lhs, ignored, bound, lhs_metas);
  }
  collect_rule(r.lhs, free, bound, all_metas);
  collect_rule(r.rhs, free, bound, all_metas);
  for (const auto& [m, k] : all_metas) {
    bool seen = std::any_of(lhs_metas.begin(), lhs_metas.end(), [&](const auto& p) { return p.first == m; });
    if (!seen) return false;
  }
  std::vector<std::string> vars(free.begin(), free.end());
  std::vector<std::vector<OMeta>> forms;
  for (const auto& [m, k] : lhs_metas) forms.push_back(meta_forms(universe, k));

  const std::set<std::string> V1 = nonassoc(r.lhs);
  const std::set<std::string> V2 = nonassoc(r.rhs);
  Judge judge{g};

  auto var_assignments = tuples(universe, vars.size());
  std::vector<size_t> idx(forms.size(), 0);
  for (;;) {
    ODelta d;
    for (size_t i = 0; i < lhs_metas.size(); ++i) d.meta.emplace(lhs_metas[i].first, forms[i][idx[i]]);
    for (const auto& assignment : var_assignments) {
      for (size_t i = 0; i < vars.size(); ++i) d.var.insert_or_assign(vars[i], assignment[i]);
      if (judge.term(d, V1, Ctx::Pat, {}, r.lhs, r.sort) && judge.term(d, V2, Ctx::Con, {}, r.rhs, r.sort))
        return true;
    }
    size_t i = 0;
    while (i < idx.size() && ++idx[i] == forms[i].size()) idx[i++] = 0;
    if (i == idx.size()) return false;
  }
}

void sorts_in(const Sort& s, std::set<std::string>& names) {
  if (s.is_var()) return;
  names.insert(s.name);
  for (const auto& a : s.args) sorts_in(a, names);
}

std::vector<Sort> declared_sorts(const Declaration& d) {
  std::vector<Sort> out;
  std::visit(
      [&](const auto& decl) {
        out.push_back(decl.sort);
        using T = std::decay_t<decltype(decl)>;
        if constexpr (std::is_same_v<T, DataDecl> || std::is_same_v<T, SchemeDecl>) {
          for (const auto& f : decl.forms) {
            if (const auto* a = std::get_if<AssocForm>(&f)) {
              out.push_back(a->key);
              out.push_back(a->value);
            } else {
              const auto& sf = std::get<ScopeForm>(f);
              out.insert(out.end(), sf.binder_sorts.begin(), sf.binder_sorts.end());
              out.push_back(sf.body);
            }
          }
        }
      },
      d);
  return out;
}

bool variable_params(const Sort& s) {
  if (s.is_var()) return false;
  std::set<std::string> seen;
  for (const auto& a : s.args)
    if (!a.is_var() || !seen.insert(a.name).second) return false;
  return true;
}

std::string gamma_key(const OGamma& g) {
  std::string k;
  for (const auto& [n, r] : g.rank) k += fmt::format("{}/{};", n, r);
  k += "|";
  for (const auto& h : g.hasvar) k += h + ";";
  k += "|";
  for (const auto& [n, sig] : g.con) {
    k += n + ":" + render(sig.first);
    for (const auto& f : sig.second) k += "," + render(f);
    k += ";";
  }
  k += "|";
  for (const auto& f : g.fun) k += f + ";";
  return k;
}

}  // namespace

DerivationOracle::DerivationOracle(std::vector<Sort> universe) : universe_(std::move(universe)) {}

bool DerivationOracle::derivable(const Script& script) {
  OGamma base;
  std::set<std::string> data_names, scheme_names;
  std::set<std::string> sort_names;
  for (const auto& d : script.declarations) {
    for (const auto& s : declared_sorts(d)) sorts_in(s, sort_names);
    if (const auto* dd = std::get_if<DataDecl>(&d)) {
      if (!data_names.insert(dd->name).second) return false;
      base.con.emplace(dd->name, std::make_pair(dd->sort, dd->forms));
    } else if (const auto* sd = std::get_if<SchemeDecl>(&d)) {
      if (!scheme_names.insert(sd->name).second) return false;
      base.con.emplace(sd->name, std::make_pair(sd->sort, sd->forms));
      base.fun.insert(sd->name);
    } else if (const auto* vd = std::get_if<VariableDecl>(&d)) {
      if (!vd->sort.is_var()) base.hasvar.insert(vd->sort.name);
    }
  }

  // SH: look for a rank map under which every declaration derives.
  std::vector<std::string> names(sort_names.begin(), sort_names.end());
  std::vector<size_t> ranks(names.size(), 0);
  constexpr size_t kMaxRank = 2;
  for (;;) {
    OGamma g = base;
    for (size_t i = 0; i < names.size(); ++i) g.rank[names[i]] = ranks[i];
    bool all = true;
    for (const auto& d : script.declarations) {
      for (const auto& s : declared_sorts(d)) all = all && wf(g, s);
      if (!all) break;
      if (const auto* dd = std::get_if<DataDecl>(&d)) {
        auto it = g.con.find(dd->name);
        all = variable_params(dd->sort) && it->second.first == dd->sort && it->second.second == dd->forms &&
              !g.fun.count(dd->name);
      } else if (const auto* sd = std::get_if<SchemeDecl>(&d)) {
        auto it = g.con.find(sd->name);
        all = it->second.first == sd->sort && it->second.second == sd->forms && g.fun.count(sd->name);
      } else if (const auto* vd = std::get_if<VariableDecl>(&d)) {
        all = variable_params(vd->sort) && g.hasvar.count(vd->sort.name);
      } else {
        const auto& r = std::get<RuleDecl>(d);
        std::string key = gamma_key(g) + "#" + render(Declaration(r));
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, rule_derivable(g, r, universe_)).first;
        all = it->second;
      }
      if (!all) break;
    }
    if (all) return true;
    size_t i = 0;
    while (i < ranks.size() && ++ranks[i] > kMaxRank) ranks[i++] = 0;
    if (i == ranks.size()) return false;
  }
}

const std::vector<std::string>& oracle_declaration_pool() {
  // Each rule needs at most two of the other declarations to be accepted,
  // so scripts of three declarations reach every checker condition.
  static const std::vector<std::string> pool = {
      "L data Lam([L]L);",
      "L variable;",
      "L scheme F(L);",
      "L scheme Ev(L, {L:L});",
      "M scheme G(L);",
      "L<L> variable;",
      "M data F(L);",
      "L rule F(#A) -> #A;",
      "L rule F(#A) -> #Q;",
      "M rule G(#A) -> #A;",
      "L rule F(x) -> x;",
      "L rule F(Lam([x]#B(x, x))) -> Lam([y]#B(y, y));",
      "L rule F(Lam([x]#B(x))) -> #B(Lam([y]y));",
      "L rule F(#A) -> F(z);",
      "L rule F(F(#A)) -> #A;",
      "L rule Ev(x, {#e; x : #V}) -> #V;",
      "L rule Ev(#A, {~x:, #e}) -> #A;",
      "L rule Ev(#A, {#e}) -> Ev(#A, {#e; ~y:});",
      "L rule Ev(#A, {#e, #f}) -> #A;",
      "L rule F(#A) -> Lam(#A);",
      "L rule Lam([x]#A) -> #A;",
  };
  return pool;
}

}  // namespace plank::testing

namespace plank::testing {

namespace {

bool replays(const RuleDecl& rule, const Valuation& val, const Term& redex) {
  try {
    Term rebuilt = contract(without_not_keys(rule.lhs), val, all_vars(redex));
    return alpha_equal(rebuilt, redex);
  } catch (const EngineError&) {
    return false;
  }
}

}  // namespace

void subject_reduction(size_t count, unsigned seed, size_t steps_per_term, PropertyReport& reduction,
                       PropertyReport& replay) {
  static const Loaded ex2 = load_corpus("ex2.plank");
  const GlobalEnv& gamma = ex2.checked.gamma;
  Rewriter rw = ex2.rewriter();
  std::mt19937 rng(seed);
  size_t accepted = 0;
  while (accepted < count) {
    Term t = random_ex2_term(rng, 1 + static_cast<int>(rng() % 4));
    auto sort = declared_sort(gamma, t);
    if (!sort || !check_ground_term(gamma, t, *sort).empty()) continue;
    ++accepted;
    Term cur = t;
    for (size_t i = 0; i < steps_per_term; ++i) {
      auto next = rw.step(cur);
      if (!next) break;
      ++reduction.cases;
      ++replay.cases;
      const RewriteStep& step = next->second;
      if (!replays(rw.rules()[step.rule_index], step.valuation, subterm_at(cur, step.position)))
        replay.fail(render(cur) + " at " + format_position(step.position));
      cur = next->first;
      auto errs = check_ground_term(gamma, cur, *sort);
      if (!errs.empty()) {
        reduction.fail(render(t) + " reached " + render(cur) + ": " + format_check_error(errs.front()));
        break;
      }
    }
  }
}

PropertyReport lambda_replay() {
  static const Loaded ex1 = load_corpus("ex1.plank");
  PropertyReport report;
  for (const auto& t : lambda_terms(4)) {
    for (const RuleDecl* r : ex1.script.rules()) {
      auto v = match_term(r->lhs, t);
      if (!v) continue;
      ++report.cases;
      if (!replays(*r, *v, t)) report.fail(render(t) + " against " + render(r->lhs));
    }
  }
  return report;
}

PropertyReport round_trip(size_t count, unsigned seed) {
  PropertyReport report;
  std::mt19937 rng(seed);
  for (size_t i = 0; i < count; ++i) {
    Term t = random_ast(rng, 4);
    ++report.cases;
    for (Spelling sp : {Spelling::Ascii, Spelling::Unicode}) {
      auto back = parse_term(render(t, sp));
      if (!back || !alpha_equal(back.value(), t)) {
        report.fail(render(t, sp));
        break;
      }
    }
  }
  return report;
}

PropertyReport capture_avoidance() {
  PropertyReport report;
  auto terms = lambda_terms(3);
  auto check = [&](const Term& b, const std::map<std::string, Term>& sigma) {
    ++report.cases;
    Term got = substitute(b, sigma);
    if (de_bruijn(got) != de_bruijn(naive_substitute(b, sigma))) {
      report.fail(render(b) + " gave " + render(got));
      return;
    }
    VarSet allowed = free_vars(b);
    for (const auto& [x, r] : sigma) allowed.erase(x);
    for (const auto& [x, r] : sigma)
      if (free_vars(b).count(x))
        for (const auto& v : free_vars(r)) allowed.insert(v);
    for (const auto& v : free_vars(got))
      if (!allowed.count(v)) report.fail(render(b) + " leaked " + v);
  };
  for (const auto& b : terms) {
    for (const auto& r : terms)
      for (const char* x : {"x", "y"}) check(b, {{x, r}});
    check(b, {{"x", Term::var("y")}, {"y", Term::var("x")}});
  }
  return report;
}

PropertyReport checker_oracle(size_t max_decls, size_t stride) {
  const auto& pool_text = oracle_declaration_pool();
  std::vector<Declaration> pool;
  for (const auto& text : pool_text) pool.push_back(script(text).declarations.at(0));
  DerivationOracle oracle({Sort::cons("L"), Sort::cons("M")});
  PropertyReport report;
  size_t index = 0;
  std::vector<size_t> pick;
  auto visit = [&](auto&& self) -> void {
    if (index++ % stride == 0) {
      Script s;
      for (size_t i : pick) s.declarations.push_back(pool[i]);
      ++report.cases;
      bool checker = check_script(s).ok();
      bool derivable = oracle.derivable(s);
      report.accepted += checker;
      if (checker != derivable)
        report.fail(fmt::format("checker {} oracle {}: {}", checker, derivable, render(s)));
    }
    if (pick.size() == max_decls) return;
    for (size_t i = 0; i < pool.size(); ++i) {
      pick.push_back(i);
      self(self);
      pick.pop_back();
    }
  };
  visit(visit);
  return report;
}

}  // namespace plank::testing
