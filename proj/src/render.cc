#include "plank/parser.h"

namespace plank {

namespace {

struct Printer {
  Spelling spelling;
  std::string out;

  bool unicode() const { return spelling == Spelling::Unicode; }

  template <typename T, typename F>
  void list(const std::vector<T>& xs, F&& each) {
    for (size_t i = 0; i < xs.size(); ++i) {
      if (i) out += ", ";
      each(xs[i]);
    }
  }

  void sort(const Sort& s) {
    out += s.name;
    if (s.is_var() || s.args.empty()) return;
    out += unicode() ? "⟨" : "<";
    list(s.args, [&](const Sort& a) { sort(a); });
    out += unicode() ? "⟩" : ">";
  }

  void form(const Form& f) {
    if (const auto* a = std::get_if<AssocForm>(&f)) {
      out += "{";
      sort(a->key);
      out += ":";
      sort(a->value);
      out += "}";
      return;
    }
    const auto& s = std::get<ScopeForm>(f);
    if (!s.binder_sorts.empty()) {
      out += "[";
      list(s.binder_sorts, [&](const Sort& b) { sort(b); });
      out += "]";
    }
    sort(s.body);
  }

  void term(const Term& t) {
    if (t.is_var()) {
      out += t.as_var().name;
    } else if (t.is_meta()) {
      const auto& m = t.as_meta();
      out += m.meta;
      if (!m.args.empty()) {
        out += "(";
        list(m.args, [&](const Term& a) { term(a); });
        out += ")";
      }
    } else {
      const auto& c = t.as_construction();
      out += c.head;
      out += "(";
      list(c.args, [&](const Piece& p) { piece(p); });
      out += ")";
    }
  }

  void piece(const Piece& p) {
    if (p.is_scope()) {
      const auto& s = p.scope();
      if (!s.binders.empty()) {
        out += "[";
        list(s.binders, [&](const std::string& b) { out += b; });
        out += "]";
      }
      term(s.body);
      return;
    }
    out += "{";
    list(p.assoc().entries, [&](const Association& a) { association(a); });
    out += "}";
  }

  void association(const Association& a) {
    if (const auto* m = std::get_if<MapEntry>(&a)) {
      out += m->key;
      out += " : ";
      term(m->value);
    } else if (const auto* n = std::get_if<NotKey>(&a)) {
      out += unicode() ? "¬" : "~";
      out += n->key;
      out += ":";
    } else {
      const auto& c = std::get<CatchAll>(a);
      out += c.meta;
      if (!c.args.empty()) {
        out += "(";
        list(c.args, [&](const Term& t) { term(t); });
        out += ")";
      }
    }
  }

  void declaration(const Declaration& d) {
    std::visit(
        [&](const auto& decl) {
          using T = std::decay_t<decltype(decl)>;
          sort(decl.sort);
          if constexpr (std::is_same_v<T, VariableDecl>) {
            out += " variable;";
          } else if constexpr (std::is_same_v<T, RuleDecl>) {
            out += " rule ";
            term(decl.lhs);
            out += unicode() ? " → " : " -> ";
            term(decl.rhs);
            out += ";";
          } else {
            out += std::is_same_v<T, DataDecl> ? " data " : " scheme ";
            out += decl.name;
            out += "(";
            list(decl.forms, [&](const Form& f) { form(f); });
            out += ");";
          }
        },
        d);
  }
};

}  // namespace

std::string render(const Sort& s, Spelling spelling) {
  Printer p{spelling, {}};
  p.sort(s);
  return p.out;
}

std::string render(const Form& f, Spelling spelling) {
  Printer p{spelling, {}};
  p.form(f);
  return p.out;
}

std::string render(const Term& t, Spelling spelling) {
  Printer p{spelling, {}};
  p.term(t);
  return p.out;
}

std::string render(const Declaration& d, Spelling spelling) {
  Printer p{spelling, {}};
  p.declaration(d);
  return p.out;
}

std::string render(const Script& s, Spelling spelling) {
  Printer p{spelling, {}};
  for (const auto& d : s.declarations) {
    p.declaration(d);
    p.out += "\n";
  }
  return p.out;
}

}  // namespace plank
