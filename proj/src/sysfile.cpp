#include "ddnoether/sysfile.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace ddn {

namespace {

struct Span {
  std::size_t at;  // absolute byte offset
  std::string_view text;
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

Span trim(Span s) {
  while (!s.text.empty() && is_space(s.text.front())) {
    s.text.remove_prefix(1);
    ++s.at;
  }
  while (!s.text.empty() && is_space(s.text.back())) s.text.remove_suffix(1);
  return s;
}

std::vector<Span> split_spans(Span s, char sep) {
  std::vector<Span> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.text.size(); ++i) {
    char c = s.text[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (c == sep && depth == 0) {
      out.push_back(trim(Span{s.at + start, s.text.substr(start, i - start)}));
      start = i + 1;
    }
  }
  out.push_back(trim(Span{s.at + start, s.text.substr(start)}));
  return out;
}

// Position of `word` as a standalone token outside brackets.
std::optional<std::size_t> find_word(std::string_view text, std::string_view word) {
  int depth = 0;
  for (std::size_t i = 0; i + word.size() <= text.size(); ++i) {
    char c = text[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (depth != 0 || text.substr(i, word.size()) != word) continue;
    bool left = i == 0 || is_space(text[i - 1]);
    bool right = i + word.size() == text.size() || is_space(text[i + word.size()]);
    if (left && right) return i;
  }
  return std::nullopt;
}

[[noreturn]] void fail(const std::string& msg, std::size_t at) { throw ParseError(msg, at); }

Expr parse_at(Span s, const Context& ctx) {
  if (s.text.empty()) fail("missing expression", s.at);
  try {
    return parse(s.text, ctx);
  } catch (const ParseError& e) {
    fail(e.message(), s.at + e.offset());
  } catch (const Error& e) {
    fail(e.what(), s.at);
  }
}

JetAtom parse_atom(Span s, const Context& ctx) {
  Expr e = parse_at(s, ctx);
  const Kernel* k = e.as_kernel();
  if (!k || k->kind != KernelKind::Jet || k->ns != Namespace::Dependent) fail("expected a jet atom", s.at);
  return k->atom();
}

// `key = value` with the value span.
std::pair<std::string, Span> key_value(Span s) {
  auto eq = s.text.find('=');
  if (eq == std::string_view::npos) fail("expected 'key = value'", s.at);
  Span key = trim(Span{s.at, s.text.substr(0, eq)});
  Span val = trim(Span{s.at + eq + 1, s.text.substr(eq + 1)});
  return {std::string(key.text), val};
}

ExprTuple parse_list(Span s, const Context& ctx) {
  ExprTuple out;
  for (const Span& part : split_spans(s, ',')) out.push_back(parse_at(part, ctx));
  return out;
}

std::string render_list(const ExprTuple& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += render(v[i]);
  }
  return s;
}

template <class T>
const T* find_named(const std::vector<Named<T>>& v, const std::string& name) {
  for (const auto& n : v)
    if (n.name == name) return &n.value;
  return nullptr;
}

class FileParser {
 public:
  explicit FileParser(std::string_view text) : text_(text) {}

  SystemFile run() {
    std::size_t pos = 0;
    bool header = false;
    while (pos <= text_.size()) {
      std::size_t end = text_.find('\n', pos);
      if (end == std::string_view::npos) end = text_.size();
      Span line{pos, text_.substr(pos, end - pos)};
      if (auto hash = line.text.find('#'); hash != std::string_view::npos) line.text = line.text.substr(0, hash);
      line = trim(line);
      ++line_no_;
      if (!line.text.empty()) {
        if (!header) {
          if (line.text != "ddnoether/1") fail("expected header 'ddnoether/1'", line.at);
          header = true;
        } else {
          directive(line);
        }
      }
      if (end == text_.size()) break;
      pos = end + 1;
    }
    if (!header) fail("expected header 'ddnoether/1'", 0);
    finish_declarations(text_.size());
    return std::move(f_);
  }

 private:
  void directive(Span line) {
    std::size_t sp = 0;
    while (sp < line.text.size() && !is_space(line.text[sp])) ++sp;
    std::string kw(line.text.substr(0, sp));
    Span rest = trim(Span{line.at + sp, line.text.substr(sp)});
    if (kw == "continuous" || kw == "discrete" || kw == "dependent" || kw == "auxiliary" || kw == "parameter" ||
        kw == "function") {
      if (declared_) fail("declarations must precede directives", line.at);
      declaration(kw, rest);
      return;
    }
    if (kw == "check") {
      finish_declarations(line.at);
      std::string text;
      for (const Span& w : words(rest)) {
        if (!text.empty()) text += ' ';
        text += w.text;
      }
      if (text.empty()) fail("empty check", line.at);
      f_.checks.push_back(Check{line_no_, text});
      return;
    }
    auto colon = rest.text.find(':');
    if (colon == std::string_view::npos) fail("expected 'NAME:' after " + kw, rest.at);
    Span name = trim(Span{rest.at, rest.text.substr(0, colon)});
    Span body = trim(Span{rest.at + colon + 1, rest.text.substr(colon + 1)});
    if (kw == "solve") {
      finish_declarations(line.at);
      solve(name, body);
      return;
    }
    if (!valid_name(name.text)) fail("invalid name '" + std::string(name.text) + "'", name.at);
    std::string n(name.text);
    if (!names_.insert(n).second) fail("duplicate name '" + n + "'", name.at);
    finish_declarations(line.at);
    if (kw == "equation")
      equation(n, body);
    else if (kw == "lagrangian")
      f_.lagrangians.push_back({n, parse_at(body, f_.ctx)});
    else if (kw == "field")
      field(n, body);
    else if (kw == "charfield")
      charfield(n, body);
    else if (kw == "sub")
      f_.subs.push_back({n, sub(body)});
    else if (kw == "cl")
      law(n, body);
    else
      fail("unknown directive '" + kw + "'", line.at);
  }

  static bool valid_name(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
  }

  std::vector<Span> words(Span s) {
    std::vector<Span> out;
    std::size_t i = 0;
    while (i < s.text.size()) {
      while (i < s.text.size() && is_space(s.text[i])) ++i;
      std::size_t start = i;
      while (i < s.text.size() && !is_space(s.text[i])) ++i;
      if (i > start) out.push_back(Span{s.at + start, s.text.substr(start, i - start)});
    }
    return out;
  }

  void declaration(const std::string& kw, Span rest) {
    Context& c = f_.ctx;
    if (kw == "function") {
      auto open = rest.text.find('(');
      if (open == std::string_view::npos || rest.text.back() != ')') fail("expected 'function NAME(args)'", rest.at);
      FunctionDecl fd;
      fd.name = std::string(trim(Span{rest.at, rest.text.substr(0, open)}).text);
      if (!valid_name(fd.name)) fail("invalid name '" + fd.name + "'", rest.at);
      Span args{rest.at + open + 1, rest.text.substr(open + 1, rest.text.size() - open - 2)};
      for (const Span& a : split_spans(args, ',')) {
        if (a.text.empty()) continue;
        std::string arg(a.text);
        if (!c.continuous_index(arg) && !c.discrete_index(arg))
          fail("function argument '" + arg + "' is not an independent variable", a.at);
        fd.signature.push_back(arg);
      }
      c.functions.push_back(fd);
      return;
    }
    std::vector<Span> ws = words(rest);
    if (ws.empty()) fail("expected a name after " + kw, rest.at);
    if (kw == "parameter") {
      if (ws.size() > 2 || (ws.size() == 2 && ws[1].text != "positive"))
        fail("expected 'parameter NAME [positive]'", rest.at);
      if (!valid_name(ws[0].text)) fail("invalid name", ws[0].at);
      c.parameters.push_back(Parameter{std::string(ws[0].text), ws.size() == 2});
      return;
    }
    for (const Span& w : ws) {
      if (!valid_name(w.text)) fail("invalid name '" + std::string(w.text) + "'", w.at);
      std::string n(w.text);
      if (kw == "continuous") c.continuous.push_back(n);
      if (kw == "discrete") c.discrete.push_back(n);
      if (kw == "dependent") c.dependent.push_back(n);
      if (kw == "auxiliary") c.auxiliary.push_back(n);
    }
  }

  void finish_declarations(std::size_t at) {
    if (declared_) return;
    declared_ = true;
    try {
      f_.ctx.validate();
      f_.ctx.ensure_auxiliary();
      f_.ctx.validate();
    } catch (const Error& e) {
      fail(e.what(), at);
    }
  }

  void equation(const std::string& name, Span body) {
    Span lhs = body;
    std::optional<Span> lead;
    if (auto w = find_word(body.text, "lead")) {
      lhs = trim(Span{body.at, body.text.substr(0, *w)});
      lead = trim(Span{body.at + *w + 4, body.text.substr(*w + 4)});
    }
    int index = static_cast<int>(f_.system.equations.size());
    f_.equation_names.push_back(name);
    f_.system.equations.push_back(parse_at(lhs, f_.ctx));
    if (lead) solved_form(index, *lead);
  }

  void solve(Span name, Span body) {
    int index = -1;
    for (std::size_t i = 0; i < f_.equation_names.size(); ++i)
      if (f_.equation_names[i] == name.text) index = static_cast<int>(i);
    if (index < 0) fail("unknown equation '" + std::string(name.text) + "'", name.at);
    solved_form(index, body);
  }

  void solved_form(int index, Span body) {
    auto eq = body.text.find('=');
    if (eq == std::string_view::npos) fail("expected 'ATOM = rhs'", body.at);
    JetAtom a = parse_atom(trim(Span{body.at, body.text.substr(0, eq)}), f_.ctx);
    Expr rhs = parse_at(trim(Span{body.at + eq + 1, body.text.substr(eq + 1)}), f_.ctx);
    try {
      f_.system.solved_forms.push_back(make_solved_form(a, rhs, index, f_.ctx));
    } catch (const Error& e) {
      fail(e.what(), body.at);
    }
  }

  void field(const std::string& name, Span body) {
    VectorField X;
    X.xi.assign(static_cast<std::size_t>(f_.ctx.p1()), Expr());
    X.phi.assign(static_cast<std::size_t>(f_.ctx.q()), Expr());
    for (const Span& part : split_spans(body, ';')) {
      if (part.text.empty()) continue;
      auto [key, val] = key_value(part);
      ExprTuple list = parse_list(val, f_.ctx);
      ExprTuple* target = key == "xi" ? &X.xi : key == "phi" ? &X.phi : nullptr;
      if (!target) fail("unknown field component '" + key + "'", part.at);
      if (list.size() != target->size()) fail(key + " arity mismatch", val.at);
      *target = list;
    }
    X.kind = classify(X);
    f_.fields.push_back({name, X});
  }

  void charfield(const std::string& name, Span body) {
    EvolutionaryField X;
    X.Q.assign(static_cast<std::size_t>(f_.ctx.q()), Expr());
    for (const Span& part : split_spans(body, ';')) {
      if (part.text.empty()) continue;
      auto [key, val] = key_value(part);
      ExprTuple list = parse_list(val, f_.ctx);
      if (key == "Q") {
        if (list.size() != X.Q.size()) fail("Q arity mismatch", val.at);
        X.Q = list;
      } else if (key == "Qaux") {
        if (static_cast<int>(list.size()) != f_.ctx.q()) fail("Qaux arity mismatch", val.at);
        X.Q_aux = list;
      } else {
        fail("unknown charfield component '" + key + "'", part.at);
      }
    }
    f_.charfields.push_back({name, X});
  }

  Substitution sub(Span body) {
    Substitution s;
    s.f.assign(static_cast<std::size_t>(f_.ctx.q()), Expr());
    std::vector<bool> seen(s.f.size(), false);
    for (const Span& part : split_spans(body, ';')) {
      if (part.text.empty()) continue;
      auto [key, val] = key_value(part);
      auto i = f_.ctx.auxiliary_index(key);
      if (!i) fail("'" + key + "' is not an auxiliary variable", part.at);
      s.f[static_cast<std::size_t>(*i)] = parse_at(val, f_.ctx);
      seen[static_cast<std::size_t>(*i)] = true;
      if (!jet_atoms(s.f[static_cast<std::size_t>(*i)], Namespace::Auxiliary).empty())
        fail("substitution binding contains auxiliary atoms", val.at);
    }
    for (bool b : seen)
      if (!b) fail("substitution must bind every auxiliary variable", body.at);
    return s;
  }

  void law(const std::string& name, Span body) {
    ConservationLaw cl;
    cl.P = zero_pair(f_.ctx);
    for (const Span& part : split_spans(body, ';')) {
      if (part.text.empty()) continue;
      auto [key, val] = key_value(part);
      ExprTuple list = parse_list(val, f_.ctx);
      if (key == "P1") {
        if (list.size() != cl.P.p1.size()) fail("P1 arity mismatch", val.at);
        cl.P.p1 = list;
      } else if (key == "P2") {
        if (list.size() != cl.P.p2.size()) fail("P2 arity mismatch", val.at);
        cl.P.p2 = list;
      } else if (key == "Q") {
        cl.Q = list;
      } else {
        fail("unknown law component '" + key + "'", part.at);
      }
    }
    f_.laws.push_back({name, cl});
  }

  std::string_view text_;
  SystemFile f_;
  std::set<std::string> names_;
  bool declared_ = false;
  std::size_t line_no_ = 0;
};

}  // namespace

std::vector<std::string> split_top(std::string_view text, char sep) {
  std::vector<std::string> out;
  for (const Span& s : split_spans(Span{0, text}, sep)) out.emplace_back(s.text);
  return out;
}

const Expr& SystemFile::lagrangian(const std::string& name) const {
  if (const Expr* e = find_named(lagrangians, name)) return *e;
  throw Error("unknown lagrangian '" + name + "'");
}

const VectorField* SystemFile::field(const std::string& name) const { return find_named(fields, name); }

const EvolutionaryField* SystemFile::charfield(const std::string& name) const { return find_named(charfields, name); }

EvolutionaryField SystemFile::evolutionary(const std::string& name) const {
  if (const EvolutionaryField* y = charfield(name)) return *y;
  if (const VectorField* x = field(name)) return to_evolutionary(*x, ctx);
  throw Error("unknown field '" + name + "'");
}

const Substitution& SystemFile::sub(const std::string& name) const {
  if (const Substitution* s = find_named(subs, name)) return *s;
  throw Error("unknown substitution '" + name + "'");
}

const ConservationLaw& SystemFile::law(const std::string& name) const {
  if (const ConservationLaw* l = find_named(laws, name)) return *l;
  throw Error("unknown conservation law '" + name + "'");
}

SystemFile parse_system_file(std::string_view text) { return FileParser(text).run(); }

SystemFile load_system_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_system_file(ss.str());
}

Substitution parse_substitution(std::string_view text, const Context& ctx) {
  std::string src = "ddnoether/1\n";
  for (const auto& n : ctx.continuous) src += "continuous " + n + "\n";
  for (const auto& n : ctx.discrete) src += "discrete " + n + "\n";
  for (const auto& n : ctx.dependent) src += "dependent " + n + "\n";
  for (const auto& n : ctx.auxiliary) src += "auxiliary " + n + "\n";
  for (const auto& p : ctx.parameters) src += "parameter " + p.name + (p.positive ? " positive" : "") + "\n";
  for (const auto& f : ctx.functions) {
    src += "function " + f.name + "(";
    for (std::size_t i = 0; i < f.signature.size(); ++i) src += (i ? ", " : "") + f.signature[i];
    src += ")\n";
  }
  src += "sub S: ";
  std::size_t base = src.size();
  src += text;
  try {
    return parse_system_file(src).subs.at(0).value;
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.offset() >= base ? e.offset() - base : 0);
  }
}

std::string render_system_file(const SystemFile& f) {
  const Context& c = f.ctx;
  std::ostringstream o;
  o << "ddnoether/1\n";
  auto names = [&](const char* kw, const std::vector<std::string>& v) {
    if (v.empty()) return;
    o << kw;
    for (const auto& n : v) o << ' ' << n;
    o << '\n';
  };
  names("continuous", c.continuous);
  names("discrete", c.discrete);
  names("dependent", c.dependent);
  names("auxiliary", c.auxiliary);
  for (const auto& p : c.parameters) o << "parameter " << p.name << (p.positive ? " positive" : "") << '\n';
  for (const auto& fd : c.functions) {
    o << "function " << fd.name << '(';
    for (std::size_t i = 0; i < fd.signature.size(); ++i) o << (i ? ", " : "") << fd.signature[i];
    o << ")\n";
  }
  std::vector<bool> used(f.system.solved_forms.size(), false);
  for (std::size_t i = 0; i < f.system.equations.size(); ++i) {
    o << "equation " << f.equation_names[i] << ": " << render(f.system.equations[i]);
    for (std::size_t k = 0; k < f.system.solved_forms.size(); ++k) {
      const SolvedForm& sf = f.system.solved_forms[k];
      if (sf.equation != static_cast<int>(i)) continue;
      o << " lead " << render(c.jet(sf.lead)) << " = " << render(sf.rhs);
      used[k] = true;
      break;
    }
    o << '\n';
  }
  for (std::size_t k = 0; k < f.system.solved_forms.size(); ++k) {
    if (used[k]) continue;
    const SolvedForm& sf = f.system.solved_forms[k];
    o << "solve " << f.equation_names[static_cast<std::size_t>(sf.equation)] << ": " << render(c.jet(sf.lead))
      << " = " << render(sf.rhs) << '\n';
  }
  for (const auto& l : f.lagrangians) o << "lagrangian " << l.name << ": " << render(l.value) << '\n';
  for (const auto& x : f.fields) {
    o << "field " << x.name << ": ";
    if (!x.value.xi.empty()) o << "xi = " << render_list(x.value.xi) << "; ";
    o << "phi = " << render_list(x.value.phi) << '\n';
  }
  for (const auto& y : f.charfields) {
    o << "charfield " << y.name << ": Q = " << render_list(y.value.Q);
    if (!y.value.Q_aux.empty()) o << "; Qaux = " << render_list(y.value.Q_aux);
    o << '\n';
  }
  for (const auto& s : f.subs) {
    o << "sub " << s.name << ": ";
    for (std::size_t i = 0; i < s.value.f.size(); ++i)
      o << (i ? "; " : "") << c.auxiliary[i] << " = " << render(s.value.f[i]);
    o << '\n';
  }
  for (const auto& l : f.laws) {
    std::vector<std::string> parts;
    if (!l.value.P.p1.empty()) parts.push_back("P1 = " + render_list(l.value.P.p1));
    if (!l.value.P.p2.empty()) parts.push_back("P2 = " + render_list(l.value.P.p2));
    if (!l.value.Q.empty()) parts.push_back("Q = " + render_list(l.value.Q));
    o << "cl " << l.name << ":";
    for (std::size_t i = 0; i < parts.size(); ++i) o << (i ? "; " : " ") << parts[i];
    o << '\n';
  }
  for (const auto& ch : f.checks) o << "check " << ch.text << '\n';
  return o.str();
}

}  // namespace ddn
