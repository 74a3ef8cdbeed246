#ifndef PPL_VALUE_HPP
#define PPL_VALUE_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ppl {

/// Raised when evaluating query code fails at runtime.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Value;
class Distribution;
class RandomProcess;
class Function;
class Continuation;
struct State;
struct Step;
struct ValueLess;

struct Nil {};
struct Symbol {
  std::string name;
};
/// Namespaced keywords (`::mem`) keep the extra colon in `name`.
struct Keyword {
  std::string name;
};

using Items = std::vector<Value>;
using MapData = std::map<Value, Value, ValueLess>;
using SetData = std::set<Value, ValueLess>;

/// A list shares its backing storage; `rest` only moves the offset.
struct List {
  std::shared_ptr<const Items> items;
  std::size_t offset = 0;
};
struct Vector {
  std::shared_ptr<const Items> items;
};
struct Map {
  std::shared_ptr<const MapData> data;
};
struct Set {
  std::shared_ptr<const SetData> data;
};

using DistPtr = std::shared_ptr<const Distribution>;
using ProcPtr = std::shared_ptr<const RandomProcess>;
using FnPtr = std::shared_ptr<const Function>;
using ContPtr = std::shared_ptr<const Continuation>;

/// Dynamically typed runtime value of query code. Immutable; copies share
/// compound storage.
class Value {
 public:
  using Rep = std::variant<Nil, bool, std::int64_t, double, std::string, Symbol,
                           Keyword, List, Vector, Map, Set, DistPtr, ProcPtr,
                           FnPtr, ContPtr>;

  Value() = default;
  Value(Nil) {}
  Value(bool b) : rep_(b) {}
  Value(int i) : rep_(std::int64_t{i}) {}
  Value(std::int64_t i) : rep_(i) {}
  Value(double d) : rep_(d) {}
  Value(std::string s) : rep_(std::move(s)) {}
  Value(const char* s) : rep_(std::string(s)) {}
  Value(Symbol s) : rep_(std::move(s)) {}
  Value(Keyword k) : rep_(std::move(k)) {}
  Value(List l) : rep_(std::move(l)) {}
  Value(Vector v) : rep_(std::move(v)) {}
  Value(Map m) : rep_(std::move(m)) {}
  Value(Set s) : rep_(std::move(s)) {}
  Value(DistPtr d) : rep_(std::move(d)) {}
  Value(ProcPtr p) : rep_(std::move(p)) {}
  Value(FnPtr f) : rep_(std::move(f)) {}
  Value(ContPtr c) : rep_(std::move(c)) {}

  const Rep& rep() const { return rep_; }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(rep_);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(rep_);
  }
  template <class T>
  const T* get_if() const {
    return std::get_if<T>(&rep_);
  }

  bool is_nil() const { return is<Nil>(); }
  bool truthy() const {
    if (is_nil()) return false;
    if (auto b = get_if<bool>()) return *b;
    return true;
  }
  bool is_number() const { return is<std::int64_t>() || is<double>(); }
  bool is_sequential() const { return is<List>() || is<Vector>(); }

  double to_double(const char* who = "number") const;
  std::string type_name() const;

 private:
  Rep rep_;
};

/// Callable query-level function. Every function can be invoked in CPS form;
/// primitives additionally support direct application.
class Function {
 public:
  virtual ~Function() = default;
  virtual const std::string& name() const = 0;
  virtual bool is_primitive() const { return false; }
  virtual Value apply_direct(const Items& args) const;
  virtual Step call(ContPtr cont, const State& state, Items args) const = 0;
};

/// A continuation receives the computed value and the threaded state and
/// returns the next step for the trampoline.
class Continuation {
 public:
  virtual ~Continuation() = default;
  virtual Step invoke(Value value, State state) const = 0;
};

int compare(const Value& a, const Value& b);

/// Total order consistent with structural equality.
struct ValueLess {
  bool operator()(const Value& a, const Value& b) const { return compare(a, b) < 0; }
};

inline bool operator==(const Value& a, const Value& b) { return compare(a, b) == 0; }
inline bool operator!=(const Value& a, const Value& b) { return !(a == b); }

inline Value make_vector(Items items) {
  return Vector{std::make_shared<const Items>(std::move(items))};
}
inline Value make_list(Items items) {
  return List{std::make_shared<const Items>(std::move(items)), 0};
}
inline Value make_map(MapData data) {
  return Map{std::make_shared<const MapData>(std::move(data))};
}
inline Value make_set(SetData data) {
  return Set{std::make_shared<const SetData>(std::move(data))};
}
inline Value sym(std::string name) { return Symbol{std::move(name)}; }
inline Value kw(std::string name) { return Keyword{std::move(name)}; }

// Provided by distribution.hpp.
int compare_distributions(const Distribution& a, const Distribution& b);
int compare_processes(const RandomProcess& a, const RandomProcess& b);
std::string describe(const Distribution& d);
std::string describe(const RandomProcess& p);

inline double Value::to_double(const char* who) const {
  if (auto i = get_if<std::int64_t>()) return static_cast<double>(*i);
  if (auto d = get_if<double>()) return *d;
  throw EvalError(std::string(who) + ": expected a number, got " + type_name());
}

inline std::string Value::type_name() const {
  static const char* const names[] = {"nil",     "boolean", "integer", "real",
                                      "string",  "symbol",  "keyword", "list",
                                      "vector",  "map",     "set",     "distribution",
                                      "process", "function", "continuation"};
  return names[rep_.index()];
}

inline Value Function::apply_direct(const Items&) const {
  throw EvalError("function " + name() + " cannot be applied outside CPS code");
}

namespace detail {

inline int rank(const Value& v) {
  switch (v.rep().index()) {
    case 7:
    case 8:
      return 7;  // lists and vectors compare as sequences
    default:
      return static_cast<int>(v.rep().index());
  }
}

template <class T>
int three_way(const T& a, const T& b) {
  return a < b ? -1 : (b < a ? 1 : 0);
}

inline int compare_reals(double a, double b) {
  bool na = std::isnan(a), nb = std::isnan(b);
  if (na || nb) return na == nb ? 0 : (na ? 1 : -1);
  return three_way(a, b);
}

inline const Value* seq_begin(const Value& v, std::size_t& n) {
  if (auto l = v.get_if<List>()) {
    if (!l->items) return n = 0, nullptr;
    n = l->items->size() - l->offset;
    return l->items->data() + l->offset;
  }
  const auto& vec = v.as<Vector>();
  if (!vec.items) return n = 0, nullptr;
  n = vec.items->size();
  return vec.items->data();
}

template <class It>
int compare_ranges(It a, It ae, It b, It be) {
  for (; a != ae && b != be; ++a, ++b) {
    if (int c = compare(*a, *b)) return c;
  }
  return (a == ae) == (b == be) ? 0 : (a == ae ? -1 : 1);
}

}  // namespace detail

inline int compare(const Value& a, const Value& b) {
  int ra = detail::rank(a), rb = detail::rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  using detail::three_way;
  switch (ra) {
    case 0:
      return 0;
    case 1:
      return three_way(a.as<bool>(), b.as<bool>());
    case 2:
      return three_way(a.as<std::int64_t>(), b.as<std::int64_t>());
    case 3:
      return detail::compare_reals(a.as<double>(), b.as<double>());
    case 4:
      return a.as<std::string>().compare(b.as<std::string>());
    case 5:
      return a.as<Symbol>().name.compare(b.as<Symbol>().name);
    case 6:
      return a.as<Keyword>().name.compare(b.as<Keyword>().name);
    case 7: {
      std::size_t na = 0, nb = 0;
      const Value* pa = detail::seq_begin(a, na);
      const Value* pb = detail::seq_begin(b, nb);
      return detail::compare_ranges(pa, pa + na, pb, pb + nb);
    }
    case 9: {
      const auto& ma = *a.as<Map>().data;
      const auto& mb = *b.as<Map>().data;
      auto ia = ma.begin(), ib = mb.begin();
      for (; ia != ma.end() && ib != mb.end(); ++ia, ++ib) {
        if (int c = compare(ia->first, ib->first)) return c;
        if (int c = compare(ia->second, ib->second)) return c;
      }
      return (ia == ma.end()) == (ib == mb.end()) ? 0 : (ia == ma.end() ? -1 : 1);
    }
    case 10: {
      const auto& sa = *a.as<Set>().data;
      const auto& sb = *b.as<Set>().data;
      return detail::compare_ranges(sa.begin(), sa.end(), sb.begin(), sb.end());
    }
    case 11:
      return compare_distributions(*a.as<DistPtr>(), *b.as<DistPtr>());
    case 12:
      return compare_processes(*a.as<ProcPtr>(), *b.as<ProcPtr>());
    case 13:
      return three_way(a.as<FnPtr>().get(), b.as<FnPtr>().get());
    default:
      return three_way(a.as<ContPtr>().get(), b.as<ContPtr>().get());
  }
}

/// Elements of a sequential, map (as [k v] vectors), set, string or nil.
inline Items seq_items(const Value& v) {
  if (v.is_sequential()) {
    std::size_t n = 0;
    const Value* p = detail::seq_begin(v, n);
    return Items(p, p + n);
  }
  if (v.is_nil()) return {};
  if (auto m = v.get_if<Map>()) {
    Items out;
    for (const auto& [k, x] : *m->data) out.push_back(make_vector({k, x}));
    return out;
  }
  if (auto s = v.get_if<Set>()) return Items(s->data->begin(), s->data->end());
  if (auto s = v.get_if<std::string>()) {
    Items out;
    for (char c : *s) out.emplace_back(std::string(1, c));
    return out;
  }
  throw EvalError("don't know how to create a sequence from " + v.type_name());
}

inline std::size_t seq_size(const Value& v) {
  if (v.is_sequential()) {
    std::size_t n = 0;
    detail::seq_begin(v, n);
    return n;
  }
  if (auto m = v.get_if<Map>()) return m->data->size();
  if (auto s = v.get_if<Set>()) return s->data->size();
  if (auto s = v.get_if<std::string>()) return s->size();
  if (v.is_nil()) return 0;
  throw EvalError("count not supported on " + v.type_name());
}

/// Shortest round-tripping decimal form; always contains '.' or an exponent.
inline std::string format_real(double d) {
  if (std::isnan(d)) return "##NaN";
  if (std::isinf(d)) return d > 0 ? "##Inf" : "##-Inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, end);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline std::string escape_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

/// Printed in reader syntax where one exists.
inline std::string to_string(const Value& v) {
  struct Printer {
    std::string operator()(Nil) const { return "nil"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return format_real(d); }
    std::string operator()(const std::string& s) const { return escape_string(s); }
    std::string operator()(const Symbol& s) const { return s.name; }
    std::string operator()(const Keyword& k) const { return ":" + k.name; }
    std::string join(const Items& items, const char* open, const char* close) const {
      std::string out = open;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ' ';
        out += to_string(items[i]);
      }
      return out + close;
    }
    std::string operator()(const List& l) const { return join(seq_items(Value(l)), "(", ")"); }
    std::string operator()(const Vector& v) const { return join(seq_items(Value(v)), "[", "]"); }
    std::string operator()(const Map& m) const {
      std::string out = "{";
      bool first = true;
      for (const auto& [k, x] : *m.data) {
        if (!first) out += ", ";
        first = false;
        out += to_string(k) + " " + to_string(x);
      }
      return out + "}";
    }
    std::string operator()(const Set& s) const {
      return join(Items(s.data->begin(), s.data->end()), "#{", "}");
    }
    std::string operator()(const DistPtr& d) const { return describe(*d); }
    std::string operator()(const ProcPtr& p) const { return describe(*p); }
    std::string operator()(const FnPtr& f) const { return "#<fn " + f->name() + ">"; }
    std::string operator()(const ContPtr&) const { return "#<continuation>"; }
  };
  return std::visit(Printer{}, v.rep());
}

}  // namespace ppl

#include "ppl/distribution.hpp"

#endif  // PPL_VALUE_HPP
