#ifndef PPL_EVAL_HPP
#define PPL_EVAL_HPP

#include <atomic>
#include <memory>
#include <string>

#include "ppl/ir.hpp"
#include "ppl/state.hpp"
#include "ppl/step.hpp"

namespace ppl::eval {

struct Frame;
using Env = std::shared_ptr<const Frame>;

struct Frame {
  Value value;
  Env parent;
};

inline Env push(Env env, Value v) {
  return std::make_shared<const Frame>(Frame{std::move(v), std::move(env)});
}

inline const Env& drop(const Env& env, std::size_t n) {
  const Env* e = &env;
  while (n--) e = &(*e)->parent;
  return *e;
}

inline const Value& lookup(const Env& env, std::size_t depth) { return drop(env, depth)->value; }

inline Value eval_value(const ir::NodePtr& node, const Env& env, const State& state);
inline Step eval_step(const ir::NodePtr& node, const Env& env, const State& state);

inline Env bind_pattern(const ir::Pattern& p, const Value& v, Env env) {
  if (p.is_binding()) return push(std::move(env), v);
  const Value* items = nullptr;
  std::size_t n = 0;
  Items copy;
  if (v.is_sequential()) {
    items = detail::seq_begin(v, n);
  } else {
    copy = seq_items(v);
    items = copy.data();
    n = copy.size();
  }
  for (std::size_t i = 0; i < p.items.size(); ++i) {
    env = bind_pattern(p.items[i], i < n ? items[i] : Value(), std::move(env));
  }
  if (p.rest) {
    Value rest;
    if (n > p.items.size()) {
      if (auto l = v.get_if<List>()) {
        rest = List{l->items, l->offset + p.items.size()};
      } else if (auto vec = v.get_if<Vector>()) {
        rest = List{vec->items, p.items.size()};
      } else {
        rest = make_list(Items(copy.begin() + static_cast<std::ptrdiff_t>(p.items.size()), copy.end()));
      }
    }
    env = bind_pattern(*p.rest, rest, std::move(env));
  }
  return env;
}

/// Binds an argument list to a parameter pattern, checking arity.
inline Env bind_args(const ir::Pattern& p, Items args, Env env, const std::string& who) {
  std::size_t fixed = p.items.size();
  if (args.size() < fixed || (!p.rest && args.size() > fixed)) {
    throw EvalError("wrong number of args (" + std::to_string(args.size()) + ") passed to " + who);
  }
  for (std::size_t i = 0; i < fixed; ++i) env = bind_pattern(p.items[i], args[i], std::move(env));
  if (p.rest) {
    Value rest;
    if (args.size() > fixed) {
      args.erase(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(fixed));
      rest = make_list(std::move(args));
    }
    env = bind_pattern(*p.rest, rest, std::move(env));
  }
  return env;
}

/// Compiled query-level function.
class Closure final : public Function, public std::enable_shared_from_this<Closure> {
 public:
  Closure(ir::NodePtr node, Env env) : node_(std::move(node)), env_(std::move(env)) {
    name_ = lambda().display.empty() ? "fn" : lambda().display;
  }

  const std::string& name() const override { return name_; }

  Step call(ContPtr cont, const State& state, Items args) const override {
    const ir::Lambda& lam = lambda();
    Env env = env_;
    if (!lam.self.empty()) env = push(std::move(env), FnPtr(shared_from_this()));
    env = push(std::move(env), std::move(cont));
    env = bind_args(lam.params, std::move(args), std::move(env), name_);
    return eval_step(lam.body, env, state);
  }

 private:
  const ir::Lambda& lambda() const { return std::get<ir::Lambda>(node_->rep); }

  ir::NodePtr node_;
  Env env_;
  std::string name_;
};

class IrContinuation final : public Continuation {
 public:
  IrContinuation(ir::NodePtr node, Env env) : node_(std::move(node)), env_(std::move(env)) {}

  Step invoke(Value value, State state) const override {
    const auto& k = std::get<ir::ContLambda>(node_->rep);
    return eval_step(k.body, bind_pattern(k.param, value, env_), state);
  }

 private:
  ir::NodePtr node_;
  Env env_;
};

inline std::int64_t next_mem_id() {
  static std::atomic<std::int64_t> counter{0};
  return ++counter;
}

/// Function memoized through the mem table of the threaded state.
class MemFunction final : public Function {
 public:
  MemFunction(FnPtr inner, std::int64_t id)
      : inner_(std::move(inner)), id_(id), name_("mem " + inner_->name()) {}

  const std::string& name() const override { return name_; }
  std::int64_t id() const { return id_; }

  Step call(ContPtr cont, const State& state, Items args) const override {
    if (in_mem(state, id_, args)) return continue_with(std::move(cont), get_mem(state, id_, args), state);
    auto store = make_continuation([cont, id = id_, args](Value v, State s) -> Step {
      State next = set_mem(std::move(s), id, args, v);
      return continue_with(cont, std::move(v), std::move(next));
    });
    return inner_->call(std::move(store), state, std::move(args));
  }

 private:
  FnPtr inner_;
  std::int64_t id_;
  std::string name_;
};

namespace detail {

inline Items eval_all(const std::vector<ir::NodePtr>& nodes, const Env& env, const State& state) {
  Items out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(eval_value(n, env, state));
  return out;
}

inline Items spread(Items args, const char* who) {
  if (args.empty()) throw EvalError(std::string(who) + ": missing argument list");
  Value last = std::move(args.back());
  args.pop_back();
  Items tail = seq_items(last);
  args.insert(args.end(), tail.begin(), tail.end());
  return args;
}

inline ContPtr as_cont(const Value& v) {
  if (auto k = v.get_if<ContPtr>()) return *k;
  throw EvalError("expected a continuation, got " + v.type_name());
}

inline DistPtr as_dist(const Value& v, const char* who) {
  if (auto d = v.get_if<DistPtr>()) return *d;
  throw EvalError(std::string(who) + ": expected a distribution, got " + v.type_name() + " " +
                  to_string(v));
}

}  // namespace detail

inline Value eval_value(const ir::NodePtr& node, const Env& env, const State& state) {
  diag::DepthGuard guard;
  using namespace ir;
  const Node::Rep& rep = node->rep;
  switch (rep.index()) {
    case 0:
      return std::get<Const>(rep).value;
    case 1:
      return lookup(env, std::get<Local>(rep).depth);
    case 2: {
      const auto& g = std::get<Global>(rep);
      const auto& v = g.table->values[g.slot];
      if (!v) throw EvalError("global " + g.name + " is used before it is defined");
      return *v;
    }
    case 3: {
      const auto& p = std::get<PrimCall>(rep);
      return p.fn->apply_direct(detail::eval_all(p.args, env, state));
    }
    case 4: {
      const auto& p = std::get<PrimApply>(rep);
      return p.fn->apply_direct(detail::spread(detail::eval_all(p.args, env, state), "apply"));
    }
    case 5: {
      const auto& c = std::get<Construct>(rep);
      Items items = detail::eval_all(c.args, env, state);
      switch (c.kind) {
        case Construct::Kind::Vector:
          return make_vector(std::move(items));
        case Construct::Kind::Set:
          return make_set(SetData(items.begin(), items.end()));
        case Construct::Kind::Map: {
          MapData data;
          for (std::size_t i = 0; i + 1 < items.size(); i += 2) data[items[i]] = items[i + 1];
          return make_map(std::move(data));
        }
      }
      return Value();
    }
    case 6:
      return FnPtr(std::make_shared<const Closure>(node, env));
    case 7:
      return ContPtr(std::make_shared<const IrContinuation>(node, env));
    case 8: {
      Value f = eval_value(std::get<Mem>(rep).fn, env, state);
      auto fn = f.get_if<FnPtr>();
      if (!fn) throw EvalError("mem: expected a function, got " + f.type_name());
      return FnPtr(std::make_shared<const MemFunction>(*fn, next_mem_id()));
    }
    case 9:
      return retrieve_value(state, detail::eval_all(std::get<Retrieve>(rep).keys, env, state));
    case 10:
      throw EvalError("spliced code cannot be evaluated: " + to_string(std::get<Splice>(rep).form));
    case 11: {
      const auto& s = std::get<Shift>(rep);
      return eval_value(s.inner, drop(env, s.by), state);
    }
    default:
      throw EvalError("internal error: step node in value position");
  }
}

inline Step eval_step(const ir::NodePtr& node, const Env& env, const State& state) {
  diag::DepthGuard guard;
  using namespace ir;
  const Node::Rep& rep = node->rep;
  if (auto x = std::get_if<ContCall>(&rep)) {
    ContPtr k = detail::as_cont(eval_value(x->cont, env, state));
    return k->invoke(eval_value(x->value, env, state), state);
  }
  if (auto x = std::get_if<ThunkNode>(&rep)) {
    return make_thunk([body = x->body, env, state]() { return eval_step(body, env, state); });
  }
  if (auto x = std::get_if<Call>(&rep)) {
    Value f = eval_value(x->fn, env, state);
    ContPtr k = detail::as_cont(eval_value(x->cont, env, state));
    return call_value(f, std::move(k), state, detail::eval_all(x->args, env, state));
  }
  if (auto x = std::get_if<Apply>(&rep)) {
    Value f = eval_value(x->fn, env, state);
    ContPtr k = detail::as_cont(eval_value(x->cont, env, state));
    return call_value(f, std::move(k), state,
                      detail::spread(detail::eval_all(x->args, env, state), "apply"));
  }
  if (auto x = std::get_if<If>(&rep)) {
    return eval_step(eval_value(x->cond, env, state).truthy() ? x->then : x->otherwise, env, state);
  }
  if (auto x = std::get_if<Case>(&rep)) {
    Value key = eval_value(x->key, env, state);
    for (const auto& clause : x->clauses) {
      for (const auto& t : clause.tests) {
        if (t == key) return eval_step(clause.body, env, state);
      }
    }
    if (!x->otherwise) throw EvalError("no matching clause: " + to_string(key));
    return eval_step(x->otherwise, env, state);
  }
  if (auto x = std::get_if<Let>(&rep)) {
    return eval_step(x->body, bind_pattern(x->pattern, eval_value(x->value, env, state), env), state);
  }
  if (auto x = std::get_if<SampleNode>(&rep)) {
    Value id = x->id ? eval_value(x->id, env, state) : x->auto_id;
    DistPtr d = detail::as_dist(eval_value(x->dist, env, state), "sample");
    return SampleCP{std::move(id), std::move(d), detail::as_cont(eval_value(x->cont, env, state)), state};
  }
  if (auto x = std::get_if<ObserveNode>(&rep)) {
    Value id = x->id ? eval_value(x->id, env, state) : x->auto_id;
    DistPtr d = detail::as_dist(eval_value(x->dist, env, state), "observe");
    Value v = eval_value(x->value, env, state);
    return ObserveCP{std::move(id), std::move(d), std::move(v),
                     detail::as_cont(eval_value(x->cont, env, state)), state};
  }
  if (auto x = std::get_if<StoreNode>(&rep)) {
    Items keys = detail::eval_all(x->keys, env, state);
    Value v = eval_value(x->value, env, state);
    ContPtr k = detail::as_cont(eval_value(x->cont, env, state));
    return k->invoke(v, store_value(state, keys, v));
  }
  throw EvalError("internal error: value node in step position");
}

}  // namespace ppl::eval

#endif  // PPL_EVAL_HPP
