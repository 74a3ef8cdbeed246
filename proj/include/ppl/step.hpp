#ifndef PPL_STEP_HPP
#define PPL_STEP_HPP

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>

#include "ppl/state.hpp"
#include "ppl/value.hpp"

namespace ppl {

class ThunkBody {
 public:
  virtual ~ThunkBody() = default;
  virtual Step force() const = 0;
};

/// Parameterless deferred computation returned in place of a tail call.
struct Thunk {
  std::shared_ptr<const ThunkBody> body;
  Step force() const;
};

/// Checkpoint: a random draw requested by the program.
struct SampleCP {
  Value id;
  DistPtr dist;
  ContPtr cont;
  State state;
};

/// Checkpoint: conditioning of `value` on `dist`.
struct ObserveCP {
  Value id;
  DistPtr dist;
  Value value;
  ContPtr cont;
  State state;
};

/// Terminal checkpoint carrying the final state (with its result set).
struct ResultCP {
  State state;
};

/// What running code hands back to the trampoline.
struct Step {
  std::variant<Thunk, SampleCP, ObserveCP, ResultCP> node;

  Step(Thunk t) : node(std::move(t)) {}
  Step(SampleCP c) : node(std::move(c)) {}
  Step(ObserveCP c) : node(std::move(c)) {}
  Step(ResultCP c) : node(std::move(c)) {}

  bool is_thunk() const { return node.index() == 0; }
};

namespace detail {

template <class F>
class LambdaThunk final : public ThunkBody {
 public:
  explicit LambdaThunk(F f) : f_(std::move(f)) {}
  Step force() const override { return f_(); }

 private:
  F f_;
};

template <class F>
class LambdaContinuation final : public Continuation {
 public:
  explicit LambdaContinuation(F f) : f_(std::move(f)) {}
  Step invoke(Value v, State s) const override { return f_(std::move(v), std::move(s)); }

 private:
  F f_;
};

}  // namespace detail

template <class F>
Thunk make_thunk(F f) {
  return Thunk{std::make_shared<const detail::LambdaThunk<F>>(std::move(f))};
}

/// Wraps a native callable (Value, State) -> Step as a continuation.
template <class F>
ContPtr make_continuation(F f) {
  return std::make_shared<const detail::LambdaContinuation<F>>(std::move(f));
}

/// Thunk that, when forced, calls `cont` with (value, state).
inline Thunk continue_with(ContPtr cont, Value value, State state) {
  return make_thunk([cont = std::move(cont), value = std::move(value),
                     state = std::move(state)]() { return cont->invoke(value, state); });
}

/// Continuation that ends a run: stores the value as the result.
inline ContPtr result_continuation() {
  static const ContPtr k = make_continuation(
      [](Value v, State s) -> Step { return ResultCP{set_result(std::move(s), std::move(v))}; });
  return k;
}

/// Host-stack instrumentation for the trampoline contract: the evaluator
/// records its nesting depth so tests can assert that it stays bounded.
namespace diag {

struct DepthCounters {
  int current = 0;
  int max = 0;
};

inline DepthCounters& depth_counters() {
  thread_local DepthCounters counters;
  return counters;
}

inline void reset_max_depth() { depth_counters() = {}; }
inline int max_depth() { return depth_counters().max; }

class DepthGuard {
 public:
  DepthGuard() {
    auto& c = depth_counters();
    if (++c.current > c.max) c.max = c.current;
  }
  ~DepthGuard() { --depth_counters().current; }
  DepthGuard(const DepthGuard&) = delete;
  DepthGuard& operator=(const DepthGuard&) = delete;
};

}  // namespace diag

inline Step Thunk::force() const {
  diag::DepthGuard guard;
  return body->force();
}

/// Host function called directly with evaluated arguments.
class PrimitiveFunction final : public Function {
 public:
  using Impl = std::function<Value(const Items&)>;

  PrimitiveFunction(std::string name, Impl impl) : name_(std::move(name)), impl_(std::move(impl)) {}

  const std::string& name() const override { return name_; }
  bool is_primitive() const override { return true; }
  Value apply_direct(const Items& args) const override { return impl_(args); }
  Step call(ContPtr cont, const State& state, Items args) const override {
    return continue_with(std::move(cont), impl_(args), state);
  }

 private:
  std::string name_;
  Impl impl_;
};

/// CPS function implemented natively.
class NativeCpsFunction final : public Function {
 public:
  using Impl = std::function<Step(ContPtr, const State&, Items)>;

  NativeCpsFunction(std::string name, Impl impl) : name_(std::move(name)), impl_(std::move(impl)) {}

  const std::string& name() const override { return name_; }
  Step call(ContPtr cont, const State& state, Items args) const override {
    return impl_(std::move(cont), state, std::move(args));
  }

 private:
  std::string name_;
  Impl impl_;
};

/// Calls `f` as a function of query code. Keywords, maps, sets and vectors
/// are callable as lookups the way they are in Clojure.
inline Step call_value(const Value& f, ContPtr cont, const State& state, Items args) {
  if (auto fn = f.get_if<FnPtr>()) return (*fn)->call(std::move(cont), state, std::move(args));
  if (args.empty() || args.size() > 2) {
    throw EvalError("wrong number of args (" + std::to_string(args.size()) + ") passed to " +
                    to_string(f));
  }
  auto lookup = [](const Value& coll, const Value& key, const Value& dflt) -> Value {
    if (auto m = coll.get_if<Map>()) {
      auto it = m->data->find(key);
      return it == m->data->end() ? dflt : it->second;
    }
    if (auto s = coll.get_if<Set>()) return s->data->count(key) ? key : dflt;
    return dflt;
  };
  Value dflt = args.size() == 2 ? args[1] : Value();
  if (f.is<Keyword>()) return continue_with(std::move(cont), lookup(args[0], f, dflt), state);
  if (f.is<Map>() || f.is<Set>()) {
    return continue_with(std::move(cont), lookup(f, args[0], dflt), state);
  }
  if (auto v = f.get_if<Vector>()) {
    auto i = args.size() == 1 ? args[0].get_if<std::int64_t>() : nullptr;
    if (!i || *i < 0 || static_cast<std::size_t>(*i) >= v->items->size()) {
      throw EvalError("vector index out of range");
    }
    return continue_with(std::move(cont), (*v->items)[static_cast<std::size_t>(*i)], state);
  }
  throw EvalError(f.type_name() + " " + to_string(f) + " is not callable");
}

}  // namespace ppl

#endif  // PPL_STEP_HPP
