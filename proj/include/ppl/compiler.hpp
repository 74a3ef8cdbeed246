#ifndef PPL_COMPILER_HPP
#define PPL_COMPILER_HPP

#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ppl/ir.hpp"
#include "ppl/primitives.hpp"
#include "ppl/reader.hpp"

namespace ppl {

class CompileError : public std::runtime_error {
 public:
  CompileError(const std::string& what, SourcePos pos)
      : std::runtime_error(pos.line ? std::to_string(pos.line) + ":" + std::to_string(pos.column) +
                                          ": " + what
                                    : what),
        pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

using LibraryTable = std::map<std::string, Value, std::less<>>;

/// Name resolution context shared by one compilation.
struct CompileEnv {
  const PrimitiveTable* primitives = &ppl::primitives();
  std::set<std::string, std::less<>> primitive_namespaces{"Math", "clojure.core", "clojure.math"};
  const LibraryTable* library = nullptr;
  const ir::GlobalTable* globals = nullptr;
  std::int64_t fresh_start = 0;
};

/// Lexical scope at a compilation point. Generated names never capture
/// user symbols and vice versa.
struct Scope {
  struct Entry {
    std::string name;
    bool generated;
  };
  struct Recur {
    std::size_t index;  // entry holding the loop function
    std::size_t arity;
  };

  std::vector<Entry> entries;
  std::optional<Recur> recur;

  static Scope of(std::initializer_list<std::string> names) {
    Scope s;
    for (const auto& n : names) s.entries.push_back({n, false});
    return s;
  }

  std::size_t size() const { return entries.size(); }

  Scope bind(std::string name, bool generated) const {
    Scope s = *this;
    s.entries.push_back({std::move(name), generated});
    return s;
  }
  Scope bind(const ir::Pattern& p, bool generated) const {
    std::vector<std::string> names;
    p.names(names);
    Scope s = *this;
    for (auto& n : names) s.entries.push_back({std::move(n), generated});
    return s;
  }

  std::optional<std::size_t> depth_of(std::string_view name, bool generated) const {
    for (std::size_t i = entries.size(); i-- > 0;) {
      if (entries[i].generated == generated && entries[i].name == name) return entries.size() - 1 - i;
    }
    return std::nullopt;
  }
};

/// Continuation argument of the compiler: a value node compiled for a scope
/// of `depth` entries.
struct ContRef {
  ir::NodePtr node;
  std::size_t depth;

  /// Continuation bound to a name visible in `s`.
  static ContRef local(const std::string& name, const Scope& s) {
    auto d = s.depth_of(name, false);
    if (!d) d = s.depth_of(name, true);
    if (!d) throw CompileError("continuation " + name + " is not in scope", {});
    return {ir::make(ir::Local{name, *d}), s.size()};
  }
  /// Continuation given as foreign code (printing only).
  static ContRef splice(Form f, const Scope& s) { return {ir::make(ir::Splice{std::move(f)}), s.size()}; }
};

namespace detail {

inline const std::set<std::string, std::less<>>& special_forms() {
  static const std::set<std::string, std::less<>> s{
      "quote", "if",    "when",  "cond",   "case",    "let",   "and",   "or",      "do",
      "fn",    "loop",  "recur", "apply",  "sample",  "observe", "mem", "store", "retrieve"};
  return s;
}

inline const std::set<std::string, std::less<>>& top_level_forms() {
  static const std::set<std::string, std::less<>> s{"def", "defm", "defn", "defquery", "ns"};
  return s;
}

inline const std::set<std::string, std::less<>>& unsupported_forms() {
  static const std::set<std::string, std::less<>> s{
      "letfn",    "try",      "catch",    "finally",   "throw",    "for",        "doseq",
      "dotimes",  "while",    "->",       "->>",       "as->",     "cond->",     "cond->>",
      "some->",   "some->>",  "binding",  "set!",      "new",      ".",          "var",
      "if-let",   "when-let", "if-some",  "when-some", "if-not",   "when-not",   "when-first",
      "condp",    "doto",     "lazy-seq", "delay",     "future",   "fn*",        "let*",
      "loop*",    "case*",    "declare",  "defmacro",  "defonce",  "defrecord",  "deftype",
      "reify",    "proxy",    "locking",  "monitor-enter", "monitor-exit", "with-meta", "defstruct"};
  return s;
}

}  // namespace detail

/// Compiles forms of the query language to continuation-passing IR.
class Compiler {
 public:
  explicit Compiler(CompileEnv env = {}) : env_(std::move(env)), counter_(env_.fresh_start) {}

  const CompileEnv& env() const { return env_; }
  std::int64_t counter() const { return counter_; }

  std::string fresh(std::string_view prefix) { return std::string(prefix) + std::to_string(++counter_); }

  /// CPS translation of `form`; the result calls `k` once per execution path.
  ir::NodePtr cps_of_expression(const Form& form, const ContRef& k, const Scope& s) {
    return cps(form, k, s);
  }

  /// Translation of an `(fn name? [params] body...)` form into a function
  /// taking a continuation and the state before its own parameters.
  ir::NodePtr fn_cps(const Form& form, const Scope& s, std::string display = "") {
    const auto& items = form.items();
    std::size_t i = 1;
    std::string self;
    if (i < items.size() && items[i].is(Form::Kind::Symbol)) self = items[i++].text();
    if (i >= items.size() || !items[i].is(Form::Kind::Vector)) {
      if (i < items.size() && items[i].is(Form::Kind::List)) {
        fail(form, "multi-arity fn is not supported");
      }
      fail(form, "fn requires a parameter vector");
    }
    ir::Pattern params = parse_params(items[i]);
    std::vector<Form> body(items.begin() + static_cast<std::ptrdiff_t>(i) + 1, items.end());
    return make_lambda(self, std::move(params), body, s, display.empty() ? self : display);
  }

  ir::NodePtr cps_of_if(const Form& cond, const Form& then, const Form* otherwise, const ContRef& k,
                        const Scope& s) {
    return named(k, s, [&](const ContRef& k2, const Scope& s2) {
      auto build = [&](ir::NodePtr c, const Scope& s3) {
        ir::NodePtr e = otherwise ? cps(*otherwise, k2, s3) : ir::make(ir::ContCall{at(k2, s3), nil_node()});
        return ir::make(ir::If{std::move(c), thunk(cps(then, k2, s3)), thunk(std::move(e))});
      };
      return with_value(cond, s2, build);
    });
  }

  /// `(mem f)` as a value node.
  ir::NodePtr mem_cps(const Form& fn_form, const Scope& s) { return mem_node(value_of(fn_form, s)); }

  /// Pure translation of a simple form (see is_simple).
  ir::NodePtr value_of(const Form& form, const Scope& s) {
    using K = Form::Kind;
    switch (form.kind) {
      case K::Symbol:
        return resolve(form, s);
      case K::Quoted:
        return constant(to_value(form.items()[0]));
      case K::Vector:
        return construct(ir::Construct::Kind::Vector, form.items(), s);
      case K::Map:
        return construct(ir::Construct::Kind::Map, form.items(), s);
      case K::Set:
        return construct(ir::Construct::Kind::Set, form.items(), s);
      case K::List:
        break;
      default:
        return constant(to_value(form));
    }
    const auto& items = form.items();
    if (items.empty()) return constant(make_list({}));
    const Form& head = items[0];
    if (head.is(Form::Kind::Symbol)) {
      const std::string& name = head.text();
      if (name == "quote") {
        if (items.size() != 2) fail(form, "quote takes exactly one argument");
        return constant(to_value(items[1]));
      }
      if (name == "fn") return fn_cps(form, s);
      if (name == "mem") return mem_node(value_of(items[1], s));
      if (name == "retrieve") return ir::make(ir::Retrieve{values(items, 1, s)});
      if (name == "apply") {
        FnPtr fn = primitive_named(items[1], s);
        return ir::make(ir::PrimApply{fn, items[1].text(), values(items, 2, s)});
      }
      if (FnPtr fn = primitive_named(head, s)) {
        return ir::make(ir::PrimCall{fn, name, values(items, 1, s)});
      }
    }
    fail(form, "internal error: form is not simple");
  }

  /// True when `form` has no checkpoints, no calls of compiled functions
  /// and no control flow, so it can be evaluated directly.
  bool is_simple(const Form& form, const Scope& s) const {
    using K = Form::Kind;
    switch (form.kind) {
      case K::Vector:
      case K::Map:
      case K::Set:
        return all_simple(form.items(), 0, s);
      case K::List:
        break;
      default:
        return true;
    }
    const auto& items = form.items();
    if (items.empty()) return true;
    const Form& head = items[0];
    if (!head.is(Form::Kind::Symbol)) return false;
    const std::string& name = head.text();
    if (name == "quote" || name == "fn") return true;
    if (name == "mem") return items.size() == 2 && is_simple(items[1], s);
    if (name == "retrieve") return items.size() >= 2 && all_simple(items, 1, s);
    if (name == "apply") {
      return items.size() >= 3 && items[1].is(Form::Kind::Symbol) && primitive_named(items[1], s) &&
             all_simple(items, 2, s);
    }
    if (detail::special_forms().count(name)) return false;
    return primitive_named(head, s) && all_simple(items, 1, s);
  }

  /// Primitive denoted by `sym` in scope `s`, or null when the symbol is
  /// bound lexically, defined by the program, or not a primitive.
  FnPtr primitive_named(const Form& sym, const Scope& s) const {
    if (!sym.is(Form::Kind::Symbol)) return nullptr;
    const std::string& name = sym.text();
    if (s.depth_of(name, false)) return nullptr;
    auto slash = name.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < name.size()) {
      if (!env_.primitive_namespaces.count(std::string_view(name).substr(0, slash))) return nullptr;
      return lookup_primitive(name.substr(slash + 1));
    }
    if (env_.globals && env_.globals->find(name)) return nullptr;
    if (env_.library && env_.library->count(name)) return nullptr;
    return lookup_primitive(name);
  }

  ir::Pattern parse_pattern(const Form& f) const {
    if (f.is(Form::Kind::Symbol)) {
      const std::string& n = f.text();
      if (n == "&") fail(f, "misplaced &");
      if (n.find('/') != std::string::npos && n != "/") fail(f, "cannot bind qualified name " + n);
      return ir::Pattern::bind(n);
    }
    if (f.is(Form::Kind::Vector)) {
      ir::Pattern p;
      const auto& items = f.items();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].is_symbol("&")) {
          if (i + 2 != items.size()) fail(items[i], "& must be followed by exactly one binding");
          p.rest = std::make_shared<const ir::Pattern>(parse_pattern(items[i + 1]));
          break;
        }
        if (items[i].is(Form::Kind::Keyword)) fail(items[i], "unsupported destructuring option :" + items[i].text());
        p.items.push_back(parse_pattern(items[i]));
      }
      return p;
    }
    if (f.is(Form::Kind::Map)) fail(f, "map destructuring is not supported");
    fail(f, "invalid binding form " + to_string(f));
  }

  /// Parameter vector of a function; names must be distinct (except `_`).
  ir::Pattern parse_params(const Form& f) const {
    ir::Pattern p = parse_pattern(f);
    std::vector<std::string> names;
    p.names(names);
    std::set<std::string> seen;
    for (const auto& n : names) {
      if (n != "_" && !seen.insert(n).second) fail(f, "duplicate parameter name " + n);
    }
    return p;
  }

  /// Function taking (cont, state, params...) whose body is `body`.
  ir::NodePtr make_lambda(const std::string& self, ir::Pattern params, const std::vector<Form>& body,
                          const Scope& s, std::string display) {
    Scope inner = s;
    inner.recur.reset();
    if (!self.empty()) inner = inner.bind(self, false);
    std::string c = fresh("C");
    inner = inner.bind(c, true).bind(params, false);
    ContRef k{local(c, inner), inner.size()};
    ir::NodePtr b = thunk(cps_do(body, 0, k, inner));
    return ir::make(ir::Lambda{self, c, std::move(params), std::move(b), std::move(display)});
  }

  /// Query entry point: a function of (cont, state, input).
  ir::NodePtr make_query(const Form* param, const std::vector<Form>& body, const Scope& s,
                         std::string display) {
    if (param) {
      ir::Pattern p;
      p.items.push_back(parse_params(*param));
      return make_lambda("", std::move(p), body, s, std::move(display));
    }
    // The input is bound to a generated name the body cannot see.
    Scope inner = s;
    inner.recur.reset();
    std::string c = fresh("C");
    std::string ignored = fresh("V");
    ir::Pattern p;
    p.items.push_back(ir::Pattern::bind(ignored));
    inner = inner.bind(c, true).bind(ignored, true);
    ContRef k{local(c, inner), inner.size()};
    ir::NodePtr b = thunk(cps_do(body, 0, k, inner));
    return ir::make(ir::Lambda{"", c, std::move(p), std::move(b), std::move(display)});
  }

 private:
  using Build = std::function<ir::NodePtr(std::vector<ir::NodePtr>, const Scope&)>;
  using Pending = std::variant<const Form*, std::string>;

  [[noreturn]] static void fail(const Form& at, const std::string& msg) { throw CompileError(msg, at.pos); }

  FnPtr lookup_primitive(std::string_view name) const {
    auto it = env_.primitives->find(name);
    return it == env_.primitives->end() ? nullptr : it->second;
  }

  bool all_simple(const std::vector<Form>& items, std::size_t from, const Scope& s) const {
    for (std::size_t i = from; i < items.size(); ++i) {
      if (!is_simple(items[i], s)) return false;
    }
    return true;
  }

  static ir::NodePtr constant(Value v, std::string label = "") {
    return ir::make(ir::Const{std::move(v), std::move(label)});
  }
  static ir::NodePtr nil_node() {
    static const ir::NodePtr n = constant(Value());
    return n;
  }

  static ir::NodePtr local(const std::string& generated, const Scope& s) {
    auto d = s.depth_of(generated, true);
    if (!d) throw CompileError("internal error: " + generated + " is not in scope", {});
    return ir::make(ir::Local{generated, *d});
  }

  /// `k` as seen from scope `s`, which extends the scope `k` was compiled for.
  static ir::NodePtr at(const ContRef& k, const Scope& s) {
    std::size_t delta = s.size() - k.depth;
    if (delta == 0 || k.node->get_if<ir::Splice>()) return k.node;
    if (auto l = k.node->get_if<ir::Local>()) return ir::make(ir::Local{l->name, l->depth + delta});
    return ir::make(ir::Shift{delta, k.node});
  }

  static ir::NodePtr thunk(ir::NodePtr body) { return ir::make(ir::ThunkNode{std::move(body)}); }

  /// Steps that would invoke a continuation directly are deferred so the
  /// trampoline, not the host stack, carries the next call.
  static bool needs_thunk(const ir::NodePtr& step) {
    if (step->get_if<ir::ContCall>() || step->get_if<ir::StoreNode>()) return true;
    if (auto let = step->get_if<ir::Let>()) return needs_thunk(let->body);
    return false;
  }

  static ir::NodePtr cont_lambda(ir::Pattern param, ir::NodePtr body) {
    if (needs_thunk(body)) body = thunk(std::move(body));
    return ir::make(ir::ContLambda{std::move(param), std::move(body)});
  }

  ir::NodePtr mem_node(ir::NodePtr fn) {
    return ir::make(ir::Mem{std::move(fn), fresh("M"), fresh("mem"), fresh("C"), fresh("P"), fresh("V")});
  }

  ir::NodePtr resolve(const Form& sym, const Scope& s) {
    const std::string& name = sym.text();
    if (auto d = s.depth_of(name, false)) return ir::make(ir::Local{name, *d});
    auto slash = name.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < name.size()) {
      std::string ns = name.substr(0, slash), member = name.substr(slash + 1);
      if (!env_.primitive_namespaces.count(ns)) fail(sym, "unknown namespace " + ns);
      if (member == "PI") return constant(std::numbers::pi, name);
      if (member == "E") return constant(std::numbers::e, name);
      if (FnPtr fn = lookup_primitive(member)) return constant(fn, name);
      fail(sym, "unable to resolve symbol: " + name);
    }
    if (env_.globals) {
      if (auto slot = env_.globals->find(name)) return ir::make(ir::Global{name, env_.globals, *slot});
    }
    if (env_.library) {
      auto it = env_.library->find(name);
      if (it != env_.library->end()) return constant(it->second, name);
    }
    if (FnPtr fn = lookup_primitive(name)) return constant(fn, name);
    if (detail::special_forms().count(name)) fail(sym, "cannot take the value of special form " + name);
    fail(sym, "unable to resolve symbol: " + name);
  }

  ir::NodePtr construct(ir::Construct::Kind kind, const std::vector<Form>& items, const Scope& s) {
    return ir::make(ir::Construct{kind, values(items, 0, s)});
  }

  std::vector<ir::NodePtr> values(const std::vector<Form>& items, std::size_t from, const Scope& s) {
    std::vector<ir::NodePtr> out;
    for (std::size_t i = from; i < items.size(); ++i) out.push_back(value_of(items[i], s));
    return out;
  }

  /// Binds the continuation to a fresh name unless it already is a name,
  /// so code that calls it from several branches contains it once.
  template <class F>
  ir::NodePtr named(const ContRef& k, const Scope& s, F f) {
    if (k.node->get_if<ir::Local>()) return f(k, s);
    std::string name = fresh("C");
    Scope inner = s.bind(name, true);
    ir::NodePtr body = f(ContRef{local(name, inner), inner.size()}, inner);
    return ir::make(ir::Let{ir::Pattern::bind(name), at(k, s), std::move(body)});
  }

  /// Computes `form` and passes its value node to `build`, binding it
  /// through a continuation when the form is not simple.
  template <class F>
  ir::NodePtr with_value(const Form& form, const Scope& s, F build) {
    if (is_simple(form, s)) return build(value_of(form, s), s);
    std::string v = fresh("V");
    Scope inner = s.bind(v, true);
    ir::NodePtr body = build(local(v, inner), inner);
    return cps(form, ContRef{cont_lambda(ir::Pattern::bind(v), std::move(body)), s.size()}, s);
  }

  /// Left-to-right evaluation of `forms`; `build` receives their values.
  ir::NodePtr elist(const std::vector<const Form*>& forms, const Scope& s, const Build& build) {
    return elist_from(forms, 0, s, {}, build);
  }

  ir::NodePtr elist_from(const std::vector<const Form*>& forms, std::size_t i, const Scope& s,
                         std::vector<Pending> pending, const Build& build) {
    if (i == forms.size()) {
      std::vector<ir::NodePtr> vals;
      for (const auto& p : pending) {
        if (auto f = std::get_if<const Form*>(&p)) {
          vals.push_back(value_of(**f, s));
        } else {
          vals.push_back(local(std::get<std::string>(p), s));
        }
      }
      return build(std::move(vals), s);
    }
    if (is_simple(*forms[i], s)) {
      pending.emplace_back(forms[i]);
      return elist_from(forms, i + 1, s, std::move(pending), build);
    }
    std::string v = fresh("V");
    Scope inner = s.bind(v, true);
    pending.emplace_back(v);
    ir::NodePtr body = elist_from(forms, i + 1, inner, std::move(pending), build);
    return cps(*forms[i], ContRef{cont_lambda(ir::Pattern::bind(v), std::move(body)), s.size()}, s);
  }

  static std::vector<const Form*> ptrs(const std::vector<Form>& items, std::size_t from) {
    std::vector<const Form*> out;
    for (std::size_t i = from; i < items.size(); ++i) out.push_back(&items[i]);
    return out;
  }

  ir::NodePtr cps(const Form& form, const ContRef& k, const Scope& s) {
    if (is_simple(form, s)) return ir::make(ir::ContCall{at(k, s), value_of(form, s)});
    if (form.is(Form::Kind::Vector) || form.is(Form::Kind::Map) || form.is(Form::Kind::Set)) {
      auto kind = form.is(Form::Kind::Vector) ? ir::Construct::Kind::Vector
                  : form.is(Form::Kind::Map)  ? ir::Construct::Kind::Map
                                              : ir::Construct::Kind::Set;
      return elist(ptrs(form.items(), 0), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
        return ir::make(ir::ContCall{at(k, s2), ir::make(ir::Construct{kind, std::move(vals)})});
      });
    }
    const auto& items = form.items();
    const Form& head = items[0];
    if (head.is(Form::Kind::Symbol)) {
      const std::string& name = head.text();
      if (detail::special_forms().count(name)) return cps_special(form, name, k, s);
      if (detail::top_level_forms().count(name)) fail(form, name + " is only allowed at top level");
      if (detail::unsupported_forms().count(name) && !s.depth_of(name, false)) {
        fail(form, "unsupported form: " + name);
      }
      if (FnPtr fn = primitive_named(head, s)) {
        return elist(ptrs(items, 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
          return ir::make(ir::ContCall{at(k, s2), ir::make(ir::PrimCall{fn, name, std::move(vals)})});
        });
      }
    }
    return elist(ptrs(items, 0), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
      ir::NodePtr fn = vals.front();
      vals.erase(vals.begin());
      return ir::make(ir::Call{std::move(fn), at(k, s2), std::move(vals)});
    });
  }

  static void expect_size(const Form& form, std::size_t lo, std::size_t hi, const std::string& what) {
    std::size_t n = form.items().size() - 1;
    if (n < lo || n > hi) fail(form, "wrong number of arguments to " + what);
  }

  ir::NodePtr cps_special(const Form& form, const std::string& name, const ContRef& k, const Scope& s) {
    const auto& items = form.items();
    if (name == "if") {
      expect_size(form, 2, 3, "if");
      return cps_of_if(items[1], items[2], items.size() == 4 ? &items[3] : nullptr, k, s);
    }
    if (name == "when") {
      expect_size(form, 1, SIZE_MAX, "when");
      std::vector<Form> body{Form::symbol("do", form.pos)};
      body.insert(body.end(), items.begin() + 2, items.end());
      return cps_of_if(items[1], Form::list(std::move(body), form.pos), nullptr, k, s);
    }
    if (name == "cond") return cps(expand_cond(form, 1), k, s);
    if (name == "case") return cps_case(form, k, s);
    if (name == "let") return cps_let(form, k, s);
    if (name == "and" || name == "or") return cps_and_or(form, name == "and", k, s);
    if (name == "do") return cps_do(items, 1, k, s);
    if (name == "loop") return cps_loop(form, k, s);
    if (name == "recur") return cps_recur(form, k, s);
    if (name == "apply") return cps_apply(form, k, s);
    if (name == "sample") return cps_sample(form, k, s);
    if (name == "observe") return cps_observe(form, k, s);
    if (name == "mem") {
      expect_size(form, 1, 1, "mem");
      return elist(ptrs(items, 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
        return ir::make(ir::ContCall{at(k, s2), mem_node(vals[0])});
      });
    }
    if (name == "store") {
      expect_size(form, 2, SIZE_MAX, "store");
      return elist(ptrs(items, 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
        ir::NodePtr v = vals.back();
        vals.pop_back();
        return ir::make(ir::StoreNode{std::move(vals), std::move(v), at(k, s2)});
      });
    }
    if (name == "retrieve") {
      expect_size(form, 1, SIZE_MAX, "retrieve");
      return elist(ptrs(items, 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
        return ir::make(ir::ContCall{at(k, s2), ir::make(ir::Retrieve{std::move(vals)})});
      });
    }
    if (name == "quote") fail(form, "quote takes exactly one argument");
    fail(form, "malformed " + name + " form");
  }

  Form expand_cond(const Form& form, std::size_t from) const {
    const auto& items = form.items();
    if ((items.size() - 1) % 2) fail(form, "cond requires an even number of forms");
    if (from >= items.size()) return Form::nil(form.pos);
    return Form::list({Form::symbol("if", form.pos), items[from], items[from + 1], expand_cond(form, from + 2)},
                      form.pos);
  }

  ir::NodePtr cps_case(const Form& form, const ContRef& k, const Scope& s) {
    const auto& items = form.items();
    expect_size(form, 1, SIZE_MAX, "case");
    std::size_t n = items.size() - 2;
    const Form* dflt = n % 2 ? &items.back() : nullptr;
    SetData seen;
    std::vector<std::pair<std::vector<Value>, const Form*>> clauses;
    for (std::size_t i = 2; i + 1 < items.size(); i += 2) {
      const Form& test = items[i];
      std::vector<Value> tests;
      if (test.is(Form::Kind::List)) {
        for (const auto& t : test.items()) tests.push_back(to_value(t));
      } else if (test.is(Form::Kind::Quoted)) {
        tests.push_back(to_value(test.items()[0]));
      } else {
        tests.push_back(to_value(test));
      }
      for (const auto& t : tests) {
        if (!seen.insert(t).second) fail(test, "duplicate case test constant: " + to_string(t));
      }
      clauses.emplace_back(std::move(tests), &items[i + 1]);
    }
    return named(k, s, [&](const ContRef& k2, const Scope& s2) {
      return with_value(items[1], s2, [&](ir::NodePtr key, const Scope& s3) {
        ir::Case c{std::move(key), {}, nullptr};
        for (std::size_t j = 0; j < clauses.size(); ++j) {
          c.clauses.push_back({clauses[j].first, items[2 + 2 * j], thunk(cps(*clauses[j].second, k2, s3))});
        }
        if (dflt) c.otherwise = thunk(cps(*dflt, k2, s3));
        return ir::make(std::move(c));
      });
    });
  }

  ir::NodePtr cps_and_or(const Form& form, bool is_and, const ContRef& k, const Scope& s) {
    const auto& items = form.items();
    if (items.size() == 1) return ir::make(ir::ContCall{at(k, s), constant(is_and ? Value(true) : Value())});
    if (items.size() == 2) return cps(items[1], k, s);
    std::vector<Form> rest{items[0]};
    rest.insert(rest.end(), items.begin() + 2, items.end());
    Form rest_form = Form::list(std::move(rest), form.pos);
    return named(k, s, [&](const ContRef& k2, const Scope& s2) {
      std::string v = fresh("V");
      Scope s3 = s2.bind(v, true);
      ir::NodePtr pass = thunk(ir::make(ir::ContCall{at(k2, s3), local(v, s3)}));
      ir::NodePtr more = thunk(cps(rest_form, k2, s3));
      ir::NodePtr test = ir::make(ir::If{local(v, s3), is_and ? more : pass, is_and ? pass : more});
      if (is_simple(items[1], s2)) {
        return ir::make(ir::Let{ir::Pattern::bind(v), value_of(items[1], s2), std::move(test)});
      }
      return cps(items[1], ContRef{cont_lambda(ir::Pattern::bind(v), std::move(test)), s2.size()}, s2);
    });
  }

  ir::NodePtr cps_do(const std::vector<Form>& forms, std::size_t from, const ContRef& k, const Scope& s) {
    if (from >= forms.size()) return ir::make(ir::ContCall{at(k, s), nil_node()});
    if (from + 1 == forms.size()) return cps(forms[from], k, s);
    const Form& f = forms[from];
    if (is_simple(f, s)) {
      ir::NodePtr v = value_of(f, s);
      if (v->get_if<ir::Const>() || v->get_if<ir::Local>() || v->get_if<ir::Global>() ||
          v->get_if<ir::Lambda>()) {
        return cps_do(forms, from + 1, k, s);
      }
      std::string name = fresh("V");
      return ir::make(ir::Let{ir::Pattern::bind(name), std::move(v),
                              cps_do(forms, from + 1, k, s.bind(name, true))});
    }
    std::string name = fresh("V");
    ir::NodePtr rest = cps_do(forms, from + 1, k, s.bind(name, true));
    return cps(f, ContRef{cont_lambda(ir::Pattern::bind(name), std::move(rest)), s.size()}, s);
  }

  struct Binding {
    ir::Pattern pattern;
    bool generated;
    const Form* form;   // value form, or
    std::string ref;    // a generated name already in scope
  };

  template <class F>
  ir::NodePtr cps_bindings(const std::vector<Binding>& bs, std::size_t i, const Scope& s, F finish) {
    if (i == bs.size()) return finish(s);
    const Binding& b = bs[i];
    Scope inner = s.bind(b.pattern, b.generated);
    if (!b.form || is_simple(*b.form, s)) {
      ir::NodePtr v = b.form ? value_of(*b.form, s) : local(b.ref, s);
      return ir::make(ir::Let{b.pattern, std::move(v), cps_bindings(bs, i + 1, inner, finish)});
    }
    ir::NodePtr body = cps_bindings(bs, i + 1, inner, finish);
    return cps(*b.form, ContRef{cont_lambda(b.pattern, std::move(body)), s.size()}, s);
  }

  const std::vector<Form>& binding_vector(const Form& form, const char* what) const {
    const auto& items = form.items();
    if (items.size() < 2 || !items[1].is(Form::Kind::Vector)) {
      fail(form, std::string(what) + " requires a binding vector");
    }
    const auto& bv = items[1].items();
    if (bv.size() % 2) fail(items[1], std::string(what) + " requires an even number of forms in binding vector");
    return bv;
  }

  ir::NodePtr cps_let(const Form& form, const ContRef& k, const Scope& s) {
    const auto& bv = binding_vector(form, "let");
    std::vector<Binding> bs;
    for (std::size_t i = 0; i < bv.size(); i += 2) bs.push_back({parse_pattern(bv[i]), false, &bv[i + 1], {}});
    const auto& items = form.items();
    return cps_bindings(bs, 0, s, [&](const Scope& s2) { return cps_do(items, 2, k, s2); });
  }

  // (loop [p e ...] body) runs as an immediately invoked function that
  // `recur` calls again. Initial values bind sequentially like `let`.
  ir::NodePtr cps_loop(const Form& form, const ContRef& k, const Scope& s) {
    const auto& bv = binding_vector(form, "loop");
    std::vector<Binding> bs;
    ir::Pattern params;
    std::vector<std::string> temps;
    for (std::size_t i = 0; i < bv.size(); i += 2) {
      ir::Pattern p = parse_pattern(bv[i]);
      std::string t = fresh("V");
      temps.push_back(t);
      bs.push_back({ir::Pattern::bind(t), true, &bv[i + 1], {}});
      bs.push_back({p, false, nullptr, t});
      params.items.push_back(std::move(p));
    }
    const auto& items = form.items();
    return cps_bindings(bs, 0, s, [&](const Scope& s2) {
      std::string self = fresh("loop");
      std::string c = fresh("C");
      Scope inner = s2.bind(self, true);
      inner.recur = Scope::Recur{inner.size() - 1, params.items.size()};
      inner = inner.bind(c, true).bind(params, false);
      ContRef body_k{local(c, inner), inner.size()};
      ir::NodePtr body = thunk(cps_do(items, 2, body_k, inner));
      ir::NodePtr fn = ir::make(ir::Lambda{self, c, params, std::move(body), "loop"});
      std::vector<ir::NodePtr> args;
      for (const auto& t : temps) args.push_back(local(t, s2));
      return ir::make(ir::Call{std::move(fn), at(k, s2), std::move(args)});
    });
  }

  ir::NodePtr cps_recur(const Form& form, const ContRef& k, const Scope& s) {
    if (!s.recur) fail(form, "recur outside loop");
    std::size_t n = form.items().size() - 1;
    if (n != s.recur->arity) {
      fail(form, "recur expects " + std::to_string(s.recur->arity) + " arguments, got " + std::to_string(n));
    }
    Scope::Recur target = *s.recur;
    // In tail position the continuation is still the loop's own one, which
    // sits right after the loop function in scope.
    auto l = k.node->get_if<ir::Local>();
    if (!l || k.depth - 1 - l->depth != target.index + 1) {
      fail(form, "recur must be in tail position of its loop");
    }
    return elist(ptrs(form.items(), 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
      const auto& e = s2.entries[target.index];
      ir::NodePtr fn = ir::make(ir::Local{e.name, s2.size() - 1 - target.index});
      return ir::make(ir::Call{std::move(fn), at(k, s2), std::move(vals)});
    });
  }

  ir::NodePtr cps_apply(const Form& form, const ContRef& k, const Scope& s) {
    expect_size(form, 2, SIZE_MAX, "apply");
    const auto& items = form.items();
    if (FnPtr fn = primitive_named(items[1], s)) {
      return elist(ptrs(items, 2), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
        return ir::make(ir::ContCall{at(k, s2), ir::make(ir::PrimApply{fn, items[1].text(), std::move(vals)})});
      });
    }
    return elist(ptrs(items, 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
      ir::NodePtr fn = vals.front();
      vals.erase(vals.begin());
      return ir::make(ir::Apply{std::move(fn), at(k, s2), std::move(vals)});
    });
  }

  ir::NodePtr cps_sample(const Form& form, const ContRef& k, const Scope& s) {
    expect_size(form, 1, 2, "sample");
    Value auto_id = Symbol{fresh("S")};
    bool has_id = form.items().size() == 3;
    return elist(ptrs(form.items(), 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
      ir::NodePtr id = has_id ? vals[0] : nullptr;
      return ir::make(ir::SampleNode{std::move(id), auto_id, vals.back(), at(k, s2)});
    });
  }

  ir::NodePtr cps_observe(const Form& form, const ContRef& k, const Scope& s) {
    expect_size(form, 2, 3, "observe");
    Value auto_id = Symbol{fresh("O")};
    bool has_id = form.items().size() == 4;
    return elist(ptrs(form.items(), 1), s, [&](std::vector<ir::NodePtr> vals, const Scope& s2) {
      std::size_t o = has_id ? 1 : 0;
      ir::NodePtr id = has_id ? vals[0] : nullptr;
      return ir::make(ir::ObserveNode{std::move(id), auto_id, vals[o], vals[o + 1], at(k, s2)});
    });
  }

  CompileEnv env_;
  std::int64_t counter_;
};

}  // namespace ppl

#endif  // PPL_COMPILER_HPP
