#ifndef PPL_IR_HPP
#define PPL_IR_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ppl/reader.hpp"
#include "ppl/value.hpp"

// Intermediate representation produced by the CPS compiler.
//
// Value nodes compute a Value without side effects on the trampoline;
// step nodes produce a Step. Locals are addressed by depth into a linked
// environment, so every node is only meaningful in the scope it was
// compiled for. The printer renders nodes as Clojure-like forms.

namespace ppl::ir {

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Binding target: a name, or a vector pattern with an optional `& rest`.
struct Pattern {
  std::string name;
  std::vector<Pattern> items;
  std::shared_ptr<const Pattern> rest;

  static Pattern bind(std::string n) { return Pattern{std::move(n), {}, nullptr}; }
  bool is_binding() const { return !name.empty(); }

  /// Bound names in the order their frames are pushed.
  void names(std::vector<std::string>& out) const {
    if (is_binding()) {
      out.push_back(name);
      return;
    }
    for (const auto& p : items) p.names(out);
    if (rest) rest->names(out);
  }
};

/// Storage for module-level definitions. Slots are allocated before any
/// definition is compiled, so definitions may refer to each other.
struct GlobalTable {
  std::vector<std::string> names;
  std::vector<std::optional<Value>> values;
  std::map<std::string, std::size_t, std::less<>> index;

  std::size_t declare(const std::string& name) {
    auto [it, inserted] = index.emplace(name, names.size());
    if (inserted) {
      names.push_back(name);
      values.emplace_back();
    }
    return it->second;
  }
  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

// Value nodes.
struct Const {
  Value value;
  std::string label;  // printed instead of the value when set
};
struct Local {
  std::string name;
  std::size_t depth;
};
struct Global {
  std::string name;
  const GlobalTable* table;
  std::size_t slot;
};
struct PrimCall {
  FnPtr fn;
  std::string name;
  std::vector<NodePtr> args;
};
struct PrimApply {
  FnPtr fn;
  std::string name;
  std::vector<NodePtr> args;  // last one is spread
};
struct Construct {
  enum class Kind { Vector, Map, Set } kind;
  std::vector<NodePtr> args;
};
struct Lambda {
  std::string self;  // bound to the function itself inside the body when set
  std::string cont;
  Pattern params;
  NodePtr body;
  std::string display;
};
struct ContLambda {
  Pattern param;
  NodePtr body;
};
struct Mem {
  NodePtr fn;
  std::string id, self, cont, args, value;  // names used only for printing
};
struct Retrieve {
  std::vector<NodePtr> keys;
};
/// Foreign code embedded for printing; cannot be executed.
struct Splice {
  Form form;
};
/// Evaluates `inner` in the environment `by` frames further out.
struct Shift {
  std::size_t by;
  NodePtr inner;
};

// Step nodes.
struct ContCall {
  NodePtr cont;
  NodePtr value;
};
struct ThunkNode {
  NodePtr body;
};
struct Call {
  NodePtr fn;
  NodePtr cont;
  std::vector<NodePtr> args;
};
struct Apply {
  NodePtr fn;
  NodePtr cont;
  std::vector<NodePtr> args;  // last one is spread
};
struct If {
  NodePtr cond;
  NodePtr then;
  NodePtr otherwise;
};
struct CaseClause {
  std::vector<Value> tests;
  Form label;
  NodePtr body;
};
struct Case {
  NodePtr key;
  std::vector<CaseClause> clauses;
  NodePtr otherwise;  // may be null
};
struct Let {
  Pattern pattern;
  NodePtr value;
  NodePtr body;
};
struct SampleNode {
  NodePtr id;  // null when the address is generated
  Value auto_id;
  NodePtr dist;
  NodePtr cont;
};
struct ObserveNode {
  NodePtr id;
  Value auto_id;
  NodePtr dist;
  NodePtr value;
  NodePtr cont;
};
struct StoreNode {
  std::vector<NodePtr> keys;
  NodePtr value;
  NodePtr cont;
};

struct Node {
  using Rep = std::variant<Const, Local, Global, PrimCall, PrimApply, Construct, Lambda, ContLambda,
                           Mem, Retrieve, Splice, Shift, ContCall, ThunkNode, Call, Apply, If, Case,
                           Let, SampleNode, ObserveNode, StoreNode>;
  Rep rep;

  bool is_value() const { return rep.index() <= 11; }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&rep);
  }
};

template <class T>
NodePtr make(T payload) {
  return std::make_shared<const Node>(Node{std::move(payload)});
}

/// Number of nodes in the tree rooted at `n`.
inline std::size_t node_count(const NodePtr& n) {
  if (!n) return 0;
  auto all = [](const std::vector<NodePtr>& xs) {
    std::size_t c = 0;
    for (const auto& x : xs) c += node_count(x);
    return c;
  };
  struct Counter {
    decltype(all)& each;
    std::size_t operator()(const Const&) const { return 0; }
    std::size_t operator()(const Local&) const { return 0; }
    std::size_t operator()(const Global&) const { return 0; }
    std::size_t operator()(const PrimCall& x) const { return each(x.args); }
    std::size_t operator()(const PrimApply& x) const { return each(x.args); }
    std::size_t operator()(const Construct& x) const { return each(x.args); }
    std::size_t operator()(const Lambda& x) const { return node_count(x.body); }
    std::size_t operator()(const ContLambda& x) const { return node_count(x.body); }
    std::size_t operator()(const Mem& x) const { return node_count(x.fn); }
    std::size_t operator()(const Retrieve& x) const { return each(x.keys); }
    std::size_t operator()(const Splice& x) const {
      std::size_t c = 0;
      std::vector<const Form*> todo{&x.form};
      while (!todo.empty()) {
        const Form* f = todo.back();
        todo.pop_back();
        ++c;
        if (f->is_compound()) {
          for (const auto& i : f->items()) todo.push_back(&i);
        }
      }
      return c - 1;
    }
    std::size_t operator()(const Shift& x) const { return node_count(x.inner) - 1; }
    std::size_t operator()(const ContCall& x) const { return node_count(x.cont) + node_count(x.value); }
    std::size_t operator()(const ThunkNode& x) const { return node_count(x.body); }
    std::size_t operator()(const Call& x) const {
      return node_count(x.fn) + node_count(x.cont) + each(x.args);
    }
    std::size_t operator()(const Apply& x) const {
      return node_count(x.fn) + node_count(x.cont) + each(x.args);
    }
    std::size_t operator()(const If& x) const {
      return node_count(x.cond) + node_count(x.then) + node_count(x.otherwise);
    }
    std::size_t operator()(const Case& x) const {
      std::size_t c = node_count(x.key) + node_count(x.otherwise);
      for (const auto& cl : x.clauses) c += node_count(cl.body);
      return c;
    }
    std::size_t operator()(const Let& x) const { return node_count(x.value) + node_count(x.body); }
    std::size_t operator()(const SampleNode& x) const {
      return node_count(x.id) + node_count(x.dist) + node_count(x.cont);
    }
    std::size_t operator()(const ObserveNode& x) const {
      return node_count(x.id) + node_count(x.dist) + node_count(x.value) + node_count(x.cont);
    }
    std::size_t operator()(const StoreNode& x) const {
      return each(x.keys) + node_count(x.value) + node_count(x.cont);
    }
  };
  return 1 + std::visit(Counter{all}, n->rep);
}

std::string print(const NodePtr& n);

namespace detail {

inline std::string print_pattern(const Pattern& p) {
  if (p.is_binding()) return p.name;
  std::string out = "[";
  for (std::size_t i = 0; i < p.items.size(); ++i) {
    if (i) out += ' ';
    out += print_pattern(p.items[i]);
  }
  if (p.rest) out += std::string(p.items.empty() ? "" : " ") + "& " + print_pattern(*p.rest);
  return out + "]";
}

inline std::string print_params(const Pattern& p) {
  std::string s = print_pattern(p);
  return s.substr(1, s.size() - 2);
}

inline std::string print_const(const Const& c) {
  if (!c.label.empty()) return c.label;
  const Value& v = c.value;
  if (v.is<Symbol>() || v.is<List>() || v.is<Vector>() || v.is<Map>() || v.is<Set>()) {
    return "'" + to_string(v);
  }
  return to_string(v);
}

inline std::string join(const std::vector<NodePtr>& xs) {
  std::string out;
  for (const auto& x : xs) out += " " + print(x);
  return out;
}

struct Printer {
  std::string operator()(const Const& x) const { return print_const(x); }
  std::string operator()(const Local& x) const { return x.name; }
  std::string operator()(const Global& x) const { return x.name; }
  std::string operator()(const PrimCall& x) const { return "(" + x.name + join(x.args) + ")"; }
  std::string operator()(const PrimApply& x) const {
    return "(apply " + x.name + join(x.args) + ")";
  }
  std::string operator()(const Construct& x) const {
    switch (x.kind) {
      case Construct::Kind::Vector:
        return "(vector" + join(x.args) + ")";
      case Construct::Kind::Map: {
        std::string out = "(hash-map";
        for (std::size_t i = 0; i < x.args.size(); ++i) {
          out += (i && i % 2 == 0 ? ", " : " ") + print(x.args[i]);
        }
        return out + ")";
      }
      case Construct::Kind::Set:
        return "(set (list" + join(x.args) + "))";
    }
    return "";
  }
  std::string operator()(const Lambda& x) const {
    std::string params = print_params(x.params);
    return "(fn " + (x.self.empty() ? "" : x.self + " ") + "[" + x.cont + " $state" +
           (params.empty() ? "" : " " + params) + "] " + print(x.body) + ")";
  }
  std::string operator()(const ContLambda& x) const {
    return "(fn [" + print_pattern(x.param) + " $state] " + print(x.body) + ")";
  }
  std::string operator()(const Mem& x) const {
    const std::string &M = x.id, &C = x.cont, &P = x.args, &V = x.value;
    return "(let [" + M + " (gensym \"M\")] (fn " + x.self + " [" + C + " $state & " + P +
           "] (if (in-mem? $state " + M + " " + P + ") (fn [] (" + C + " (get-mem $state " + M +
           " " + P + ") $state)) (apply " + print(x.fn) + " (fn [" + V + " $state] (fn [] (" + C +
           " " + V + " (set-mem $state " + M + " " + P + " " + V + ")))) $state " + P + "))))";
  }
  std::string operator()(const Retrieve& x) const { return "(retrieve $state" + join(x.keys) + ")"; }
  std::string operator()(const Splice& x) const { return to_string(x.form); }
  std::string operator()(const Shift& x) const { return print(x.inner); }
  std::string operator()(const ContCall& x) const {
    return "(" + print(x.cont) + " " + print(x.value) + " $state)";
  }
  std::string operator()(const ThunkNode& x) const { return "(fn [] " + print(x.body) + ")"; }
  std::string operator()(const Call& x) const {
    return "(" + print(x.fn) + " " + print(x.cont) + " $state" + join(x.args) + ")";
  }
  std::string operator()(const Apply& x) const {
    return "(apply " + print(x.fn) + " " + print(x.cont) + " $state" + join(x.args) + ")";
  }
  std::string operator()(const If& x) const {
    return "(if " + print(x.cond) + " " + print(x.then) + " " + print(x.otherwise) + ")";
  }
  std::string operator()(const Case& x) const {
    std::string out = "(case " + print(x.key);
    for (const auto& c : x.clauses) out += " " + to_string(c.label) + " " + print(c.body);
    if (x.otherwise) out += " " + print(x.otherwise);
    return out + ")";
  }
  std::string operator()(const Let& x) const {
    return "(let [" + print_pattern(x.pattern) + " " + print(x.value) + "] " + print(x.body) + ")";
  }
  std::string operator()(const SampleNode& x) const {
    return "(->sample " + (x.id ? print(x.id) + " " : "") + print(x.dist) + " " + print(x.cont) +
           " $state)";
  }
  std::string operator()(const ObserveNode& x) const {
    return "(->observe " + (x.id ? print(x.id) + " " : "") + print(x.dist) + " " +
           print(x.value) + " " + print(x.cont) + " $state)";
  }
  std::string operator()(const StoreNode& x) const {
    std::string v = print(x.value);
    return "(" + print(x.cont) + " " + v + " (store $state" + join(x.keys) + " " + v + "))";
  }
};

inline void pretty(const Form& f, std::size_t indent, std::size_t width, std::string& out) {
  std::string flat = to_string(f);
  if (indent + flat.size() <= width || !f.is_compound() || f.is(Form::Kind::Quoted) ||
      f.items().size() < 2) {
    out += flat;
    return;
  }
  const char* open = "(";
  const char* close = ")";
  if (f.is(Form::Kind::Vector)) open = "[", close = "]";
  if (f.is(Form::Kind::Map)) open = "{", close = "}";
  if (f.is(Form::Kind::Set)) open = "#{", close = "}";
  const auto& items = f.items();
  out += open;
  std::size_t inner = indent + std::string(open).size();
  // Keep the head and the first short argument on the opening line.
  std::size_t start = 1;
  if (f.is(Form::Kind::List) && items[0].is(Form::Kind::Symbol)) {
    out += items[0].text();
    inner = indent + 2;
    const std::string& head = items[0].text();
    bool binder = head == "fn" || head == "let" || head == "if" || head == "case";
    if (binder && items.size() > 2) {
      std::size_t col = indent + 1 + head.size() + 1;
      out += ' ';
      // (fn name [params] ...) keeps the name too
      if (head == "fn" && items[1].is(Form::Kind::Symbol) && items.size() > 3) {
        out += items[1].text() + " ";
        col += items[1].text().size() + 1;
        start = 2;
      }
      pretty(items[start], col, width, out);
      ++start;
    }
  } else {
    pretty(items[0], inner, width, out);
  }
  for (std::size_t i = start; i < items.size(); ++i) {
    out += "\n" + std::string(inner, ' ');
    pretty(items[i], inner, width, out);
  }
  out += close;
}

}  // namespace detail

inline std::string print(const NodePtr& n) {
  if (!n) return "nil";
  return std::visit(detail::Printer{}, n->rep);
}

/// Multi-line layout of printed IR (or any form text) within `width` columns.
inline std::string pretty(const std::string& text, std::size_t width = 100) {
  try {
    Form f = read_form(text);
    std::string out;
    detail::pretty(f, 0, width, out);
    return out;
  } catch (const ReadError&) {
    return text;
  }
}

}  // namespace ppl::ir

#endif  // PPL_IR_HPP
