#ifndef PPL_PRIMITIVES_HPP
#define PPL_PRIMITIVES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>

#include "ppl/distribution.hpp"
#include "ppl/step.hpp"
#include "ppl/value.hpp"

namespace ppl {

using PrimitiveTable = std::map<std::string, FnPtr, std::less<>>;

namespace prim {

inline void arity(const Items& args, std::size_t lo, std::size_t hi, const char* name) {
  if (args.size() < lo || args.size() > hi) {
    throw EvalError("wrong number of args (" + std::to_string(args.size()) + ") passed to " + name);
  }
}

inline bool is_int(const Value& v) { return v.is<std::int64_t>(); }
inline std::int64_t as_int(const Value& v, const char* who) {
  if (auto i = v.get_if<std::int64_t>()) return *i;
  throw EvalError(std::string(who) + ": expected an integer, got " + v.type_name());
}

inline void check_number(const Value& v, const char* who) {
  if (!v.is_number()) throw EvalError(std::string(who) + ": expected a number, got " + v.type_name());
}

inline Value add2(const Value& a, const Value& b) {
  check_number(a, "+");
  check_number(b, "+");
  if (is_int(a) && is_int(b)) {
    std::int64_t r;
    if (__builtin_add_overflow(a.as<std::int64_t>(), b.as<std::int64_t>(), &r)) {
      throw EvalError("+: integer overflow");
    }
    return r;
  }
  return a.to_double() + b.to_double();
}
inline Value sub2(const Value& a, const Value& b) {
  check_number(a, "-");
  check_number(b, "-");
  if (is_int(a) && is_int(b)) {
    std::int64_t r;
    if (__builtin_sub_overflow(a.as<std::int64_t>(), b.as<std::int64_t>(), &r)) {
      throw EvalError("-: integer overflow");
    }
    return r;
  }
  return a.to_double() - b.to_double();
}
inline Value mul2(const Value& a, const Value& b) {
  check_number(a, "*");
  check_number(b, "*");
  if (is_int(a) && is_int(b)) {
    std::int64_t r;
    if (__builtin_mul_overflow(a.as<std::int64_t>(), b.as<std::int64_t>(), &r)) {
      throw EvalError("*: integer overflow");
    }
    return r;
  }
  return a.to_double() * b.to_double();
}
/// Integer division stays integral when exact.
inline Value div2(const Value& a, const Value& b) {
  check_number(a, "/");
  check_number(b, "/");
  if (is_int(a) && is_int(b)) {
    auto x = a.as<std::int64_t>(), y = b.as<std::int64_t>();
    if (y == 0) throw EvalError("/: divide by zero");
    if (x % y == 0) return x / y;
    return static_cast<double>(x) / static_cast<double>(y);
  }
  return a.to_double() / b.to_double();
}

inline int num_compare(const Value& a, const Value& b, const char* who) {
  check_number(a, who);
  check_number(b, who);
  if (is_int(a) && is_int(b)) {
    auto x = a.as<std::int64_t>(), y = b.as<std::int64_t>();
    return x < y ? -1 : (y < x ? 1 : 0);
  }
  double x = a.to_double(), y = b.to_double();
  if (std::isnan(x) || std::isnan(y)) return 2;  // unordered
  return x < y ? -1 : (y < x ? 1 : 0);
}

template <class Pred>
Value chain_compare(const Items& args, const char* who, Pred pred) {
  arity(args, 1, SIZE_MAX, who);
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    int c = num_compare(args[i], args[i + 1], who);
    if (c == 2 || !pred(c)) return false;
  }
  check_number(args.back(), who);
  return true;
}

inline Value seq_or_nil(Items items) {
  if (items.empty()) return Value();
  return make_list(std::move(items));
}

inline Value rest_of(const Value& v) {
  if (auto l = v.get_if<List>()) {
    if (!l->items || l->offset >= l->items->size()) return make_list({});
    return List{l->items, l->offset + 1};
  }
  if (auto vec = v.get_if<Vector>()) {
    if (!vec->items || vec->items->empty()) return make_list({});
    return List{vec->items, 1};
  }
  Items items = seq_items(v);
  if (!items.empty()) items.erase(items.begin());
  return make_list(std::move(items));
}

inline Value first_of(const Value& v) {
  if (v.is_sequential()) {
    std::size_t n = 0;
    const Value* p = detail::seq_begin(v, n);
    return n ? p[0] : Value();
  }
  Items items = seq_items(v);
  return items.empty() ? Value() : items.front();
}

inline Value nth_of(const Value& coll, const Value& index, const Value* dflt) {
  auto i = as_int(index, "nth");
  if (coll.is_sequential()) {
    std::size_t n = 0;
    const Value* p = detail::seq_begin(coll, n);
    if (i >= 0 && static_cast<std::size_t>(i) < n) return p[i];
  } else {
    Items items = seq_items(coll);
    if (i >= 0 && static_cast<std::size_t>(i) < items.size()) return items[static_cast<std::size_t>(i)];
  }
  if (dflt) return *dflt;
  throw EvalError("nth: index " + std::to_string(i) + " out of bounds");
}

inline Value get_in_coll(const Value& coll, const Value& key, const Value& dflt) {
  if (auto m = coll.get_if<Map>()) {
    auto it = m->data->find(key);
    return it == m->data->end() ? dflt : it->second;
  }
  if (auto s = coll.get_if<Set>()) return s->data->count(key) ? key : dflt;
  if (auto v = coll.get_if<Vector>()) {
    auto i = key.get_if<std::int64_t>();
    if (i && *i >= 0 && static_cast<std::size_t>(*i) < v->items->size()) {
      return (*v->items)[static_cast<std::size_t>(*i)];
    }
  }
  return dflt;
}

inline Value conj_one(const Value& coll, const Value& x) {
  if (coll.is_nil()) return make_list({x});
  if (auto v = coll.get_if<Vector>()) {
    Items items = *v->items;
    items.push_back(x);
    return make_vector(std::move(items));
  }
  if (coll.is<List>()) {
    Items items = seq_items(coll);
    items.insert(items.begin(), x);
    return make_list(std::move(items));
  }
  if (auto s = coll.get_if<Set>()) {
    SetData data = *s->data;
    data.insert(x);
    return make_set(std::move(data));
  }
  if (auto m = coll.get_if<Map>()) {
    Items kv = seq_items(x);
    if (!x.is<Vector>() || kv.size() != 2) throw EvalError("conj: map entries must be [key value] vectors");
    MapData data = *m->data;
    data[kv[0]] = kv[1];
    return make_map(std::move(data));
  }
  throw EvalError("conj: cannot add to " + coll.type_name());
}

inline Value assoc_one(const Value& coll, const Value& k, const Value& v) {
  if (coll.is_nil() || coll.is<Map>()) {
    MapData data = coll.is_nil() ? MapData{} : *coll.as<Map>().data;
    data[k] = v;
    return make_map(std::move(data));
  }
  if (auto vec = coll.get_if<Vector>()) {
    auto i = as_int(k, "assoc");
    Items items = *vec->items;
    if (i < 0 || static_cast<std::size_t>(i) > items.size()) throw EvalError("assoc: index out of bounds");
    if (static_cast<std::size_t>(i) == items.size()) {
      items.push_back(v);
    } else {
      items[static_cast<std::size_t>(i)] = v;
    }
    return make_vector(std::move(items));
  }
  throw EvalError("assoc: cannot associate into " + coll.type_name());
}

inline double real_arg(const Items& args, std::size_t i, const char* who) {
  return args.at(i).to_double(who);
}

inline std::string str_of(const Value& v) {
  if (v.is_nil()) return "";
  if (auto s = v.get_if<std::string>()) return *s;
  return to_string(v);
}

inline std::vector<std::pair<Value, double>> categorical_entries(const Items& args) {
  auto is_pair = [](const Value& v) { return v.is_sequential() && seq_size(v) == 2; };
  Items pairs;
  if (args.size() == 1 && !args[0].is_nil()) {
    Items items = seq_items(args[0]);
    bool all_pairs = !items.empty() && std::all_of(items.begin(), items.end(), is_pair);
    pairs = all_pairs ? items : args;
  } else {
    pairs = args;
  }
  std::vector<std::pair<Value, double>> entries;
  for (const Value& p : pairs) {
    if (!is_pair(p)) throw EvalError("categorical: expected [value weight] pairs, got " + to_string(p));
    Items kv = seq_items(p);
    entries.emplace_back(kv[0], kv[1].to_double("categorical weight"));
  }
  return entries;
}

inline double mean_of(const Items& xs, const char* who) {
  if (xs.empty()) throw EvalError(std::string(who) + ": empty input");
  double total = 0;
  for (const Value& x : xs) total += x.to_double(who);
  return total / static_cast<double>(xs.size());
}

}  // namespace prim

/// Registry of host functions callable directly from query code.
///
/// Higher-order functions are deliberately absent: they need CPS versions
/// (see builtin_library()).
inline const PrimitiveTable& primitives() {
  static const PrimitiveTable table = [] {
    using namespace prim;
    PrimitiveTable t;
    auto def = [&t](const char* name, PrimitiveFunction::Impl impl) {
      t.emplace(name, std::make_shared<const PrimitiveFunction>(name, std::move(impl)));
    };
    auto def_math1 = [&def](const char* name, double (*f)(double)) {
      def(name, [name, f](const Items& a) -> Value {
        arity(a, 1, 1, name);
        return f(a[0].to_double(name));
      });
    };
    auto def_pred = [&def](const char* name, std::function<bool(const Value&)> p) {
      def(name, [name, p](const Items& a) -> Value {
        arity(a, 1, 1, name);
        return p(a[0]);
      });
    };

    // Arithmetic.
    def("+", [](const Items& a) -> Value {
      Value acc = std::int64_t{0};
      for (const auto& x : a) acc = add2(acc, x);
      return acc;
    });
    def("*", [](const Items& a) -> Value {
      Value acc = std::int64_t{1};
      for (const auto& x : a) acc = mul2(acc, x);
      return acc;
    });
    def("-", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "-");
      if (a.size() == 1) return sub2(std::int64_t{0}, a[0]);
      Value acc = a[0];
      for (std::size_t i = 1; i < a.size(); ++i) acc = sub2(acc, a[i]);
      return acc;
    });
    def("/", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "/");
      if (a.size() == 1) return div2(std::int64_t{1}, a[0]);
      Value acc = a[0];
      for (std::size_t i = 1; i < a.size(); ++i) acc = div2(acc, a[i]);
      return acc;
    });
    def("inc", [](const Items& a) -> Value {
      arity(a, 1, 1, "inc");
      return add2(a[0], std::int64_t{1});
    });
    def("dec", [](const Items& a) -> Value {
      arity(a, 1, 1, "dec");
      return sub2(a[0], std::int64_t{1});
    });
    def("quot", [](const Items& a) -> Value {
      arity(a, 2, 2, "quot");
      if (is_int(a[0]) && is_int(a[1])) {
        if (a[1].as<std::int64_t>() == 0) throw EvalError("quot: divide by zero");
        return a[0].as<std::int64_t>() / a[1].as<std::int64_t>();
      }
      return std::trunc(a[0].to_double("quot") / a[1].to_double("quot"));
    });
    def("rem", [](const Items& a) -> Value {
      arity(a, 2, 2, "rem");
      if (is_int(a[0]) && is_int(a[1])) {
        if (a[1].as<std::int64_t>() == 0) throw EvalError("rem: divide by zero");
        return a[0].as<std::int64_t>() % a[1].as<std::int64_t>();
      }
      return std::fmod(a[0].to_double("rem"), a[1].to_double("rem"));
    });
    def("mod", [](const Items& a) -> Value {
      arity(a, 2, 2, "mod");
      if (is_int(a[0]) && is_int(a[1])) {
        auto x = a[0].as<std::int64_t>(), y = a[1].as<std::int64_t>();
        if (y == 0) throw EvalError("mod: divide by zero");
        auto r = x % y;
        return (r != 0 && ((r < 0) != (y < 0))) ? r + y : r;
      }
      double x = a[0].to_double("mod"), y = a[1].to_double("mod");
      return x - y * std::floor(x / y);
    });
    def("max", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "max");
      Value best = a[0];
      for (const auto& x : a) {
        if (num_compare(x, best, "max") == 1) best = x;
      }
      return best;
    });
    def("min", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "min");
      Value best = a[0];
      for (const auto& x : a) {
        if (num_compare(x, best, "min") == -1) best = x;
      }
      return best;
    });
    def("abs", [](const Items& a) -> Value {
      arity(a, 1, 1, "abs");
      if (is_int(a[0])) return std::abs(a[0].as<std::int64_t>());
      return std::fabs(a[0].to_double("abs"));
    });

    // Comparison and logic.
    def("=", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "=");
      for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        if (a[i] != a[i + 1]) return false;
      }
      return true;
    });
    def("not=", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "not=");
      for (std::size_t i = 0; i + 1 < a.size(); ++i) {
        if (a[i] != a[i + 1]) return true;
      }
      return false;
    });
    def("==", [](const Items& a) { return chain_compare(a, "==", [](int c) { return c == 0; }); });
    def("<", [](const Items& a) { return chain_compare(a, "<", [](int c) { return c < 0; }); });
    def(">", [](const Items& a) { return chain_compare(a, ">", [](int c) { return c > 0; }); });
    def("<=", [](const Items& a) { return chain_compare(a, "<=", [](int c) { return c <= 0; }); });
    def(">=", [](const Items& a) { return chain_compare(a, ">=", [](int c) { return c >= 0; }); });
    def("not", [](const Items& a) -> Value {
      arity(a, 1, 1, "not");
      return !a[0].truthy();
    });
    def("identity", [](const Items& a) -> Value {
      arity(a, 1, 1, "identity");
      return a[0];
    });

    def_pred("nil?", [](const Value& v) { return v.is_nil(); });
    def_pred("some?", [](const Value& v) { return !v.is_nil(); });
    def_pred("true?", [](const Value& v) { return v.is<bool>() && v.as<bool>(); });
    def_pred("false?", [](const Value& v) { return v.is<bool>() && !v.as<bool>(); });
    def_pred("number?", [](const Value& v) { return v.is_number(); });
    def_pred("integer?", [](const Value& v) { return v.is<std::int64_t>(); });
    def_pred("float?", [](const Value& v) { return v.is<double>(); });
    def_pred("boolean?", [](const Value& v) { return v.is<bool>(); });
    def_pred("string?", [](const Value& v) { return v.is<std::string>(); });
    def_pred("symbol?", [](const Value& v) { return v.is<Symbol>(); });
    def_pred("keyword?", [](const Value& v) { return v.is<Keyword>(); });
    def_pred("vector?", [](const Value& v) { return v.is<Vector>(); });
    def_pred("list?", [](const Value& v) { return v.is<List>(); });
    def_pred("seq?", [](const Value& v) { return v.is<List>(); });
    def_pred("sequential?", [](const Value& v) { return v.is_sequential(); });
    def_pred("map?", [](const Value& v) { return v.is<Map>(); });
    def_pred("set?", [](const Value& v) { return v.is<Set>(); });
    def_pred("coll?", [](const Value& v) {
      return v.is_sequential() || v.is<Map>() || v.is<Set>();
    });
    def_pred("fn?", [](const Value& v) { return v.is<FnPtr>(); });
    def_pred("distribution?", [](const Value& v) { return v.is<DistPtr>(); });
    def_pred("empty?", [](const Value& v) { return seq_size(v) == 0; });
    def_pred("zero?", [](const Value& v) { return num_compare(v, std::int64_t{0}, "zero?") == 0; });
    def_pred("pos?", [](const Value& v) { return num_compare(v, std::int64_t{0}, "pos?") == 1; });
    def_pred("neg?", [](const Value& v) { return num_compare(v, std::int64_t{0}, "neg?") == -1; });
    def_pred("even?", [](const Value& v) { return as_int(v, "even?") % 2 == 0; });
    def_pred("odd?", [](const Value& v) { return as_int(v, "odd?") % 2 != 0; });

    // Math.
    def_math1("exp", [](double x) { return std::exp(x); });
    def_math1("log", [](double x) { return std::log(x); });
    def_math1("log10", [](double x) { return std::log10(x); });
    def_math1("log1p", [](double x) { return std::log1p(x); });
    def_math1("sqrt", [](double x) { return std::sqrt(x); });
    def_math1("cbrt", [](double x) { return std::cbrt(x); });
    def_math1("sin", [](double x) { return std::sin(x); });
    def_math1("cos", [](double x) { return std::cos(x); });
    def_math1("tan", [](double x) { return std::tan(x); });
    def_math1("asin", [](double x) { return std::asin(x); });
    def_math1("acos", [](double x) { return std::acos(x); });
    def_math1("atan", [](double x) { return std::atan(x); });
    def_math1("sinh", [](double x) { return std::sinh(x); });
    def_math1("cosh", [](double x) { return std::cosh(x); });
    def_math1("tanh", [](double x) { return std::tanh(x); });
    def_math1("floor", [](double x) { return std::floor(x); });
    def_math1("ceil", [](double x) { return std::ceil(x); });
    def_math1("rint", [](double x) { return std::nearbyint(x); });
    def_math1("signum", [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : x); });
    def("round", [](const Items& a) -> Value {
      arity(a, 1, 1, "round");
      double x = a[0].to_double("round");
      if (!std::isfinite(x)) throw EvalError("round: argument is not finite");
      return static_cast<std::int64_t>(std::floor(x + 0.5));
    });
    def("pow", [](const Items& a) -> Value {
      arity(a, 2, 2, "pow");
      return std::pow(a[0].to_double("pow"), a[1].to_double("pow"));
    });
    def("atan2", [](const Items& a) -> Value {
      arity(a, 2, 2, "atan2");
      return std::atan2(a[0].to_double("atan2"), a[1].to_double("atan2"));
    });
    def("double", [](const Items& a) -> Value {
      arity(a, 1, 1, "double");
      return a[0].to_double("double");
    });
    def("int", [](const Items& a) -> Value {
      arity(a, 1, 1, "int");
      if (is_int(a[0])) return a[0];
      double x = a[0].to_double("int");
      if (!std::isfinite(x)) throw EvalError("int: argument is not finite");
      return static_cast<std::int64_t>(std::trunc(x));
    });

    // Sequences and collections.
    def("first", [](const Items& a) -> Value {
      arity(a, 1, 1, "first");
      return first_of(a[0]);
    });
    def("second", [](const Items& a) -> Value {
      arity(a, 1, 1, "second");
      return first_of(rest_of(a[0]));
    });
    def("last", [](const Items& a) -> Value {
      arity(a, 1, 1, "last");
      Items items = seq_items(a[0]);
      return items.empty() ? Value() : items.back();
    });
    def("rest", [](const Items& a) -> Value {
      arity(a, 1, 1, "rest");
      return rest_of(a[0]);
    });
    def("next", [](const Items& a) -> Value {
      arity(a, 1, 1, "next");
      Value r = rest_of(a[0]);
      return seq_size(r) ? r : Value();
    });
    def("butlast", [](const Items& a) -> Value {
      arity(a, 1, 1, "butlast");
      Items items = seq_items(a[0]);
      if (!items.empty()) items.pop_back();
      return seq_or_nil(std::move(items));
    });
    def("nth", [](const Items& a) -> Value {
      arity(a, 2, 3, "nth");
      return nth_of(a[0], a[1], a.size() == 3 ? &a[2] : nullptr);
    });
    def("count", [](const Items& a) -> Value {
      arity(a, 1, 1, "count");
      return static_cast<std::int64_t>(seq_size(a[0]));
    });
    def("seq", [](const Items& a) -> Value {
      arity(a, 1, 1, "seq");
      if (a[0].is<List>()) return seq_size(a[0]) ? a[0] : Value();
      if (auto v = a[0].get_if<Vector>()) return v->items->empty() ? Value() : Value(List{v->items, 0});
      return seq_or_nil(seq_items(a[0]));
    });
    def("not-empty", [](const Items& a) -> Value {
      arity(a, 1, 1, "not-empty");
      return seq_size(a[0]) ? a[0] : Value();
    });
    def("empty", [](const Items& a) -> Value {
      arity(a, 1, 1, "empty");
      if (a[0].is<Vector>()) return make_vector({});
      if (a[0].is<Map>()) return make_map({});
      if (a[0].is<Set>()) return make_set({});
      if (a[0].is<List>()) return make_list({});
      return Value();
    });
    def("cons", [](const Items& a) -> Value {
      arity(a, 2, 2, "cons");
      Items items = seq_items(a[1]);
      items.insert(items.begin(), a[0]);
      return make_list(std::move(items));
    });
    def("conj", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "conj");
      Value acc = a[0];
      if (auto v = acc.get_if<Vector>(); v && a.size() > 1) {
        Items items = *v->items;
        items.insert(items.end(), a.begin() + 1, a.end());
        return make_vector(std::move(items));
      }
      for (std::size_t i = 1; i < a.size(); ++i) acc = conj_one(acc, a[i]);
      return acc;
    });
    def("concat", [](const Items& a) -> Value {
      Items out;
      for (const auto& x : a) {
        Items items = seq_items(x);
        out.insert(out.end(), items.begin(), items.end());
      }
      return make_list(std::move(out));
    });
    def("into", [](const Items& a) -> Value {
      arity(a, 2, 2, "into");
      Value acc = a[0];
      for (const auto& x : seq_items(a[1])) acc = conj_one(acc, x);
      return acc;
    });
    def("list", [](const Items& a) -> Value { return make_list(a); });
    def("vector", [](const Items& a) -> Value { return make_vector(a); });
    def("vec", [](const Items& a) -> Value {
      arity(a, 1, 1, "vec");
      return make_vector(seq_items(a[0]));
    });
    def("hash-map", [](const Items& a) -> Value {
      if (a.size() % 2) throw EvalError("hash-map: odd number of arguments");
      MapData data;
      for (std::size_t i = 0; i < a.size(); i += 2) data[a[i]] = a[i + 1];
      return make_map(std::move(data));
    });
    def("set", [](const Items& a) -> Value {
      arity(a, 1, 1, "set");
      Items items = seq_items(a[0]);
      return make_set(SetData(items.begin(), items.end()));
    });
    def("hash-set", [](const Items& a) -> Value { return make_set(SetData(a.begin(), a.end())); });
    def("get", [](const Items& a) -> Value {
      arity(a, 2, 3, "get");
      return get_in_coll(a[0], a[1], a.size() == 3 ? a[2] : Value());
    });
    def("get-in", [](const Items& a) -> Value {
      arity(a, 2, 3, "get-in");
      Value node = a[0];
      for (const auto& k : seq_items(a[1])) {
        node = get_in_coll(node, k, Value());
        if (node.is_nil()) return a.size() == 3 ? a[2] : Value();
      }
      return node;
    });
    def("assoc", [](const Items& a) -> Value {
      if (a.size() < 3 || a.size() % 2 == 0) throw EvalError("assoc: expected a collection and key/value pairs");
      Value acc = a[0];
      for (std::size_t i = 1; i < a.size(); i += 2) acc = assoc_one(acc, a[i], a[i + 1]);
      return acc;
    });
    def("dissoc", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "dissoc");
      if (a[0].is_nil()) return Value();
      if (!a[0].is<Map>()) throw EvalError("dissoc: expected a map");
      MapData data = *a[0].as<Map>().data;
      for (std::size_t i = 1; i < a.size(); ++i) data.erase(a[i]);
      return make_map(std::move(data));
    });
    def("merge", [](const Items& a) -> Value {
      MapData data;
      for (const auto& m : a) {
        if (m.is_nil()) continue;
        if (!m.is<Map>()) throw EvalError("merge: expected maps");
        for (const auto& [k, v] : *m.as<Map>().data) data[k] = v;
      }
      return make_map(std::move(data));
    });
    def("contains?", [](const Items& a) -> Value {
      arity(a, 2, 2, "contains?");
      if (auto m = a[0].get_if<Map>()) return m->data->count(a[1]) > 0;
      if (auto s = a[0].get_if<Set>()) return s->data->count(a[1]) > 0;
      if (auto v = a[0].get_if<Vector>()) {
        auto i = a[1].get_if<std::int64_t>();
        return i && *i >= 0 && static_cast<std::size_t>(*i) < v->items->size();
      }
      return false;
    });
    def("keys", [](const Items& a) -> Value {
      arity(a, 1, 1, "keys");
      if (a[0].is_nil()) return Value();
      Items out;
      for (const auto& [k, v] : *a[0].as<Map>().data) out.push_back(k);
      return seq_or_nil(std::move(out));
    });
    def("vals", [](const Items& a) -> Value {
      arity(a, 1, 1, "vals");
      if (a[0].is_nil()) return Value();
      Items out;
      for (const auto& [k, v] : *a[0].as<Map>().data) out.push_back(v);
      return seq_or_nil(std::move(out));
    });
    def("zipmap", [](const Items& a) -> Value {
      arity(a, 2, 2, "zipmap");
      Items ks = seq_items(a[0]), vs = seq_items(a[1]);
      MapData data;
      for (std::size_t i = 0; i < std::min(ks.size(), vs.size()); ++i) data[ks[i]] = vs[i];
      return make_map(std::move(data));
    });
    def("take", [](const Items& a) -> Value {
      arity(a, 2, 2, "take");
      Items items = seq_items(a[1]);
      auto n = std::max<std::int64_t>(0, as_int(a[0], "take"));
      if (static_cast<std::size_t>(n) < items.size()) items.resize(static_cast<std::size_t>(n));
      return make_list(std::move(items));
    });
    def("drop", [](const Items& a) -> Value {
      arity(a, 2, 2, "drop");
      Items items = seq_items(a[1]);
      auto n = std::max<std::int64_t>(0, as_int(a[0], "drop"));
      items.erase(items.begin(), items.begin() + std::min<std::size_t>(items.size(), static_cast<std::size_t>(n)));
      return make_list(std::move(items));
    });
    def("reverse", [](const Items& a) -> Value {
      arity(a, 1, 1, "reverse");
      Items items = seq_items(a[0]);
      std::reverse(items.begin(), items.end());
      return make_list(std::move(items));
    });
    def("sort", [](const Items& a) -> Value {
      arity(a, 1, 1, "sort");
      Items items = seq_items(a[0]);
      std::stable_sort(items.begin(), items.end(), [](const Value& x, const Value& y) {
        if (x.is_number() && y.is_number()) return num_compare(x, y, "sort") == -1;
        return compare(x, y) < 0;
      });
      return make_list(std::move(items));
    });
    def("distinct", [](const Items& a) -> Value {
      arity(a, 1, 1, "distinct");
      SetData seen;
      Items out;
      for (const auto& x : seq_items(a[0])) {
        if (seen.insert(x).second) out.push_back(x);
      }
      return make_list(std::move(out));
    });
    def("range", [](const Items& a) -> Value {
      arity(a, 1, 3, "range");
      std::int64_t lo = 0, hi, step = 1;
      if (a.size() == 1) {
        hi = as_int(a[0], "range");
      } else {
        lo = as_int(a[0], "range");
        hi = as_int(a[1], "range");
        if (a.size() == 3) step = as_int(a[2], "range");
      }
      if (step == 0) throw EvalError("range: step must be non-zero");
      Items out;
      for (std::int64_t i = lo; step > 0 ? i < hi : i > hi; i += step) out.emplace_back(i);
      return make_list(std::move(out));
    });
    def("repeat", [](const Items& a) -> Value {
      arity(a, 2, 2, "repeat");
      auto n = std::max<std::int64_t>(0, as_int(a[0], "repeat"));
      return make_list(Items(static_cast<std::size_t>(n), a[1]));
    });
    def("peek", [](const Items& a) -> Value {
      arity(a, 1, 1, "peek");
      if (auto v = a[0].get_if<Vector>()) return v->items->empty() ? Value() : v->items->back();
      return first_of(a[0]);
    });
    def("pop", [](const Items& a) -> Value {
      arity(a, 1, 1, "pop");
      if (auto v = a[0].get_if<Vector>()) {
        if (v->items->empty()) throw EvalError("pop: empty vector");
        Items items = *v->items;
        items.pop_back();
        return make_vector(std::move(items));
      }
      return rest_of(a[0]);
    });
    def("subvec", [](const Items& a) -> Value {
      arity(a, 2, 3, "subvec");
      Items items = seq_items(a[0]);
      auto lo = as_int(a[1], "subvec");
      auto hi = a.size() == 3 ? as_int(a[2], "subvec") : static_cast<std::int64_t>(items.size());
      if (lo < 0 || hi < lo || static_cast<std::size_t>(hi) > items.size()) {
        throw EvalError("subvec: index out of bounds");
      }
      return make_vector(Items(items.begin() + lo, items.begin() + hi));
    });
    def("frequencies", [](const Items& a) -> Value {
      arity(a, 1, 1, "frequencies");
      MapData data;
      for (const auto& x : seq_items(a[0])) {
        auto it = data.find(x);
        data[x] = it == data.end() ? Value(std::int64_t{1}) : add2(it->second, std::int64_t{1});
      }
      return make_map(std::move(data));
    });
    def("sum", [](const Items& a) -> Value {
      arity(a, 1, 1, "sum");
      Value acc = std::int64_t{0};
      for (const auto& x : seq_items(a[0])) acc = add2(acc, x);
      return acc;
    });
    def("str", [](const Items& a) -> Value {
      std::string out;
      for (const auto& x : a) out += str_of(x);
      return out;
    });
    def("keyword", [](const Items& a) -> Value {
      arity(a, 1, 1, "keyword");
      if (auto k = a[0].get_if<Keyword>()) return *k;
      return Keyword{str_of(a[0])};
    });
    def("symbol", [](const Items& a) -> Value {
      arity(a, 1, 1, "symbol");
      if (auto s = a[0].get_if<Symbol>()) return *s;
      return Symbol{str_of(a[0])};
    });
    def("name", [](const Items& a) -> Value {
      arity(a, 1, 1, "name");
      if (auto k = a[0].get_if<Keyword>()) return k->name;
      if (auto s = a[0].get_if<Symbol>()) return s->name;
      if (auto s = a[0].get_if<std::string>()) return *s;
      throw EvalError("name: expected a string, symbol or keyword");
    });

    // Distributions and random processes.
    def("normal", [](const Items& a) -> Value {
      arity(a, 2, 2, "normal");
      return Distribution::normal(real_arg(a, 0, "normal"), real_arg(a, 1, "normal"));
    });
    def("gamma", [](const Items& a) -> Value {
      arity(a, 2, 2, "gamma");
      return Distribution::gamma(real_arg(a, 0, "gamma"), real_arg(a, 1, "gamma"));
    });
    def("beta", [](const Items& a) -> Value {
      arity(a, 2, 2, "beta");
      return Distribution::beta(real_arg(a, 0, "beta"), real_arg(a, 1, "beta"));
    });
    def("flip", [](const Items& a) -> Value {
      arity(a, 1, 1, "flip");
      return Distribution::flip(real_arg(a, 0, "flip"));
    });
    def("bernoulli", [](const Items& a) -> Value {
      arity(a, 1, 1, "bernoulli");
      return Distribution::bernoulli(real_arg(a, 0, "bernoulli"));
    });
    def("categorical", [](const Items& a) -> Value {
      arity(a, 1, SIZE_MAX, "categorical");
      return Distribution::categorical(categorical_entries(a));
    });
    def("discrete", [](const Items& a) -> Value {
      arity(a, 1, 1, "discrete");
      std::vector<double> w;
      for (const auto& x : seq_items(a[0])) w.push_back(x.to_double("discrete"));
      return Distribution::discrete(std::move(w));
    });
    def("uniform-discrete", [](const Items& a) -> Value {
      arity(a, 2, 2, "uniform-discrete");
      return Distribution::uniform_discrete(as_int(a[0], "uniform-discrete"),
                                            as_int(a[1], "uniform-discrete"));
    });
    def("uniform-continuous", [](const Items& a) -> Value {
      arity(a, 2, 2, "uniform-continuous");
      return Distribution::uniform_continuous(real_arg(a, 0, "uniform-continuous"),
                                              real_arg(a, 1, "uniform-continuous"));
    });
    def("observe*", [](const Items& a) -> Value {
      arity(a, 2, 2, "observe*");
      auto d = a[0].get_if<DistPtr>();
      if (!d) throw EvalError("observe*: expected a distribution");
      return (*d)->log_prob(a[1]);
    });
    def("beta-bernoulli", [](const Items& a) -> Value {
      arity(a, 2, 2, "beta-bernoulli");
      return RandomProcess::beta_bernoulli(real_arg(a, 0, "beta-bernoulli"),
                                           real_arg(a, 1, "beta-bernoulli"));
    });
    def("produce", [](const Items& a) -> Value {
      arity(a, 1, 1, "produce");
      auto p = a[0].get_if<ProcPtr>();
      if (!p) throw EvalError("produce: expected a random process");
      return (*p)->produce();
    });
    def("absorb", [](const Items& a) -> Value {
      arity(a, 2, 2, "absorb");
      auto p = a[0].get_if<ProcPtr>();
      if (!p) throw EvalError("absorb: expected a random process");
      return (*p)->absorb(a[1]);
    });

    // Summary statistics over sequences of numbers (population std).
    def("mean", [](const Items& a) -> Value {
      arity(a, 1, 1, "mean");
      return mean_of(seq_items(a[0]), "mean");
    });
    def("std", [](const Items& a) -> Value {
      arity(a, 1, 1, "std");
      Items xs = seq_items(a[0]);
      double m = mean_of(xs, "std");
      double ss = 0;
      for (const auto& x : xs) ss += (x.to_double() - m) * (x.to_double() - m);
      return std::sqrt(ss / static_cast<double>(xs.size()));
    });

    // Used by the CPS library to report misuse.
    def("arity-error*", [](const Items& a) -> Value {
      throw EvalError("wrong number of args passed to " + (a.empty() ? std::string("fn") : str_of(a[0])));
    });
    return t;
  }();
  return table;
}

inline FnPtr find_primitive(std::string_view name) {
  const auto& table = primitives();
  auto it = table.find(name);
  return it == table.end() ? nullptr : it->second;
}

}  // namespace ppl

#endif  // PPL_PRIMITIVES_HPP
