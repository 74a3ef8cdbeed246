#ifndef PPL_STATE_HPP
#define PPL_STATE_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <tuple>

#include "ppl/value.hpp"

namespace ppl {

/// Memoization key: the identifier of a memoized function and an argument list.
struct MemKey {
  std::int64_t id;
  Items args;

  friend bool operator<(const MemKey& a, const MemKey& b) {
    if (a.id != b.id) return a.id < b.id;
    return detail::compare_ranges(a.args.begin(), a.args.end(), b.args.begin(), b.args.end()) < 0;
  }
};

using MemTable = std::map<MemKey, Value>;
using Extras = std::map<std::string, Value>;

/// Inference state threaded through every continuation. Immutable: the
/// accessors below return updated copies and never touch the argument.
///
/// `store` is a (possibly nested) map addressed by key paths; retrieving an
/// absent path yields nil. Algorithm-specific entries live in `extras`.
struct State {
  double log_weight = 0.0;
  Value result;
  std::shared_ptr<const MemTable> mem = std::make_shared<const MemTable>();
  Value store = make_map({});
  std::shared_ptr<const Extras> extras = std::make_shared<const Extras>();

  friend bool operator==(const State& a, const State& b) {
    auto same_weight = a.log_weight == b.log_weight ||
                       (std::isnan(a.log_weight) && std::isnan(b.log_weight));
    return same_weight && a.result == b.result && *a.mem == *b.mem && a.store == b.store &&
           *a.extras == *b.extras;
  }
};

inline bool operator==(const MemKey& a, const MemKey& b) { return !(a < b) && !(b < a); }

inline State initial_state() { return State{}; }

inline State add_log_weight(State s, double delta) {
  s.log_weight += delta;
  return s;
}

inline State set_log_weight(State s, double w) {
  s.log_weight = w;
  return s;
}

inline State set_result(State s, Value v) {
  s.result = std::move(v);
  return s;
}

inline bool in_mem(const State& s, std::int64_t id, const Items& args) {
  return s.mem->count(MemKey{id, args}) > 0;
}

inline const Value& get_mem(const State& s, std::int64_t id, const Items& args) {
  auto it = s.mem->find(MemKey{id, args});
  if (it == s.mem->end()) throw EvalError("get-mem: no memoized value");
  return it->second;
}

inline State set_mem(State s, std::int64_t id, Items args, Value v) {
  auto table = std::make_shared<MemTable>(*s.mem);
  (*table)[MemKey{id, std::move(args)}] = std::move(v);
  s.mem = std::move(table);
  return s;
}

namespace detail {

inline Value assoc_in(const Value& node, const Value* key, const Value* end, const Value& v) {
  if (key == end) return v;
  MapData data;
  if (auto m = node.get_if<Map>()) {
    data = *m->data;
  } else if (!node.is_nil()) {
    throw EvalError("store: cannot nest under a " + node.type_name() + " value");
  }
  auto it = data.find(*key);
  Value child = it == data.end() ? Value() : it->second;
  data[*key] = assoc_in(child, key + 1, end, v);
  return make_map(std::move(data));
}

}  // namespace detail

/// Stores `v` under the key path `keys` (nested maps).
inline State store_value(State s, const Items& keys, const Value& v) {
  if (keys.empty()) throw EvalError("store: at least one key is required");
  s.store = detail::assoc_in(s.store, keys.data(), keys.data() + keys.size(), v);
  return s;
}

inline Value retrieve_value(const State& s, const Items& keys) {
  Value node = s.store;
  for (const Value& k : keys) {
    auto m = node.get_if<Map>();
    if (!m) return Value();
    auto it = m->data->find(k);
    if (it == m->data->end()) return Value();
    node = it->second;
  }
  return node;
}

inline Value get_extra(const State& s, const std::string& key) {
  auto it = s.extras->find(key);
  return it == s.extras->end() ? Value() : it->second;
}

inline State set_extra(State s, const std::string& key, Value v) {
  auto extras = std::make_shared<Extras>(*s.extras);
  (*extras)[key] = std::move(v);
  s.extras = std::move(extras);
  return s;
}

}  // namespace ppl

#endif  // PPL_STATE_HPP
