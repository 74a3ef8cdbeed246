#ifndef PPL_INFERENCE_HPP
#define PPL_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "ppl/library.hpp"
#include "ppl/module.hpp"
#include "ppl/rng.hpp"
#include "ppl/stat.hpp"
#include "ppl/state.hpp"
#include "ppl/step.hpp"

namespace ppl {

/// Runtime address of a checkpoint occurrence: [identifier index].
struct Address {
  Value id;
  std::int64_t index = 0;

  friend bool operator<(const Address& a, const Address& b) {
    int c = compare(a.id, b.id);
    return c != 0 ? c < 0 : a.index < b.index;
  }
  friend bool operator==(const Address& a, const Address& b) {
    return a.id == b.id && a.index == b.index;
  }
};

inline std::string to_string(const Address& a) {
  return "[" + to_string(a.id) + " " + std::to_string(a.index) + "]";
}

/// Assigns addresses to checkpoint occurrences within one run. When a run
/// of consecutive visits to the same identifier is interrupted, its counter
/// is rounded up to a multiple of `padding`, so insertions and deletions
/// elsewhere leave the indices of other blocks unchanged.
class AddressCursor {
 public:
  explicit AddressCursor(std::int64_t padding = 16) : padding_(padding) {
    if (padding < 1) throw EvalError("padding must be positive");
  }

  Address next(const Value& id) {
    std::int64_t& count = counters_[id];
    if (!last_ || *last_ != id) count = (count + padding_ - 1) / padding_ * padding_;
    Address a{id, count++};
    last_ = id;
    return a;
  }

  std::int64_t padding() const { return padding_; }

 private:
  std::int64_t padding_;
  std::map<Value, std::int64_t, ValueLess> counters_;
  std::optional<Value> last_;
};

inline Address checkpoint_id(const SampleCP& cp, AddressCursor& cursor) { return cursor.next(cp.id); }
inline Address checkpoint_id(const ObserveCP& cp, AddressCursor& cursor) { return cursor.next(cp.id); }

/// Runtime failure of query code, tagged with the source and, when known,
/// the address of the last checkpoint reached.
class RuntimeError : public EvalError {
 public:
  RuntimeError(const std::string& source, const std::string& msg, const std::optional<Address>& at)
      : EvalError(source + ": " + msg + (at ? " (after checkpoint " + to_string(*at) + ")" : "")) {}
};

/// Decides how a run continues at each checkpoint.
class Handler {
 public:
  virtual ~Handler() = default;
  virtual Step on_sample(const SampleCP& cp) = 0;
  virtual Step on_observe(const ObserveCP& cp) = 0;
  virtual std::optional<Address> last_address() const { return std::nullopt; }
};

/// Draws from the prior at sample sites and accumulates observe
/// log-probabilities in the state.
class DefaultHandler : public Handler {
 public:
  explicit DefaultHandler(Rng& rng, std::int64_t padding = 16) : rng_(rng), cursor_(padding) {}

  Step on_sample(const SampleCP& cp) override {
    last_ = checkpoint_id(cp, cursor_);
    return continue_with(cp.cont, cp.dist->sample(rng_), cp.state);
  }
  Step on_observe(const ObserveCP& cp) override {
    last_ = checkpoint_id(cp, cursor_);
    return continue_with(cp.cont, Value(), add_log_weight(cp.state, cp.dist->log_prob(cp.value)));
  }
  std::optional<Address> last_address() const override { return last_; }

 protected:
  Rng& rng_;
  AddressCursor cursor_;
  std::optional<Address> last_;
};

namespace detail {

template <class F>
auto tag_errors(const std::string& source, const Handler& h, F f) {
  try {
    return f();
  } catch (const RuntimeError&) {
    throw;
  } catch (const EvalError& e) {
    throw RuntimeError(source, e.what(), h.last_address());
  }
}

}  // namespace detail

/// Runs `step` on the trampoline until the program finishes.
inline State run_steps(Handler& handler, Step step) {
  for (;;) {
    switch (step.node.index()) {
      case 0: {
        Step next = std::get<Thunk>(step.node).force();
        step = std::move(next);
        break;
      }
      case 1: {
        Step next = handler.on_sample(std::get<SampleCP>(step.node));
        step = std::move(next);
        break;
      }
      case 2: {
        Step next = handler.on_observe(std::get<ObserveCP>(step.node));
        step = std::move(next);
        break;
      }
      default:
        return std::get<ResultCP>(step.node).state;
    }
  }
}

/// Executes `program` on `value` under `handler`; returns the final state.
inline State exec(Handler& handler, const Program& program, const Value& value,
                  const State& state = initial_state()) {
  return detail::tag_errors(program.source_name(), handler,
                            [&] { return run_steps(handler, program.start(value, state)); });
}

using stat::log_sum_exp;

inline double log_mean_exp(const std::vector<double>& xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  return log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

struct InferenceOptions {
  std::size_t particles = 100;
  std::uint64_t seed = 42;
  std::int64_t padding = 16;
  std::size_t threads = 1;  // SMC worker threads; output does not depend on it
};

/// Parses keyword-style option pairs: [:particles 100 :seed 7 ...].
inline InferenceOptions parse_options(const Items& kv) {
  if (kv.size() % 2) throw EvalError("options must be keyword/value pairs");
  InferenceOptions o;
  for (std::size_t i = 0; i < kv.size(); i += 2) {
    auto key = kv[i].get_if<Keyword>();
    if (!key) throw EvalError("option names must be keywords, got " + to_string(kv[i]));
    auto n = kv[i + 1].get_if<std::int64_t>();
    if (!n) throw EvalError("option :" + key->name + " must be an integer");
    if (key->name == "seed") {
      o.seed = static_cast<std::uint64_t>(*n);
      continue;
    }
    if (*n < 1) throw EvalError("option :" + key->name + " must be positive");
    if (key->name == "particles" || key->name == "number-of-particles") {
      o.particles = static_cast<std::size_t>(*n);
    } else if (key->name == "padding") {
      o.padding = *n;
    } else if (key->name == "threads") {
      o.threads = static_cast<std::size_t>(*n);
    } else {
      throw EvalError("unknown option :" + key->name);
    }
  }
  return o;
}

/// Demand-driven sequence of states produced by an inference algorithm.
class StateSequence {
 public:
  virtual ~StateSequence() = default;
  virtual State next() = 0;

  std::vector<State> take(std::size_t n) {
    std::vector<State> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next());
    return out;
  }
  void drop(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) next();
  }

  /// Program executions started so far.
  std::size_t executions() const { return executions_; }

 protected:
  std::size_t executions_ = 0;
};

/// Independent runs from the prior, weighted by their observes.
class ImportanceSequence final : public StateSequence {
 public:
  ImportanceSequence(Program program, Value value, InferenceOptions opts)
      : program_(std::move(program)), value_(std::move(value)), opts_(opts), rng_(opts.seed) {}

  State next() override {
    Rng rng = rng_.split();
    DefaultHandler h(rng, opts_.padding);
    ++executions_;
    return exec(h, program_, value_);
  }

 private:
  Program program_;
  Value value_;
  InferenceOptions opts_;
  Rng rng_;
};

// ---- Lightweight Metropolis-Hastings -------------------------------------

struct TraceEntry {
  Value value;
  DistPtr dist;
  double log_prob;
};
using TraceDb = std::map<Address, TraceEntry>;

/// One complete run of the program as seen by LMH.
struct LmhTrace {
  TraceDb db;
  State state;        // final state; log_weight holds the observe total
  double fresh_lp = 0;  // log-probability of values drawn rather than reused
  std::set<Address> reused;

  double log_joint() const {
    double lp = state.log_weight;
    for (const auto& [a, e] : db) lp += e.log_prob;
    return lp;
  }
};

/// Sample handler that reuses values of a previous trace where possible.
class LmhHandler final : public DefaultHandler {
 public:
  LmhHandler(Rng& rng, std::int64_t padding, const TraceDb* old, std::optional<Address> target)
      : DefaultHandler(rng, padding), old_(old), target_(std::move(target)) {}

  Step on_sample(const SampleCP& cp) override {
    Address a = checkpoint_id(cp, cursor_);
    last_ = a;
    if (old_ && !(target_ && a == *target_)) {
      auto it = old_->find(a);
      if (it != old_->end()) {
        double lp = cp.dist->log_prob(it->second.value);
        if (lp > -std::numeric_limits<double>::infinity()) {
          trace_.db[a] = {it->second.value, cp.dist, lp};
          trace_.reused.insert(a);
          return continue_with(cp.cont, it->second.value, cp.state);
        }
      }
    }
    Value v = cp.dist->sample(rng_);
    double lp = cp.dist->log_prob(v);
    trace_.db[a] = {v, cp.dist, lp};
    trace_.fresh_lp += lp;
    return continue_with(cp.cont, std::move(v), cp.state);
  }

  LmhTrace finish(State s) {
    trace_.state = std::move(s);
    return std::move(trace_);
  }

 private:
  const TraceDb* old_;
  std::optional<Address> target_;
  LmhTrace trace_;
};

inline LmhTrace lmh_run(const Program& program, const Value& value, Rng& rng, std::int64_t padding,
                        const TraceDb* old, std::optional<Address> target) {
  LmhHandler h(rng, padding, old, std::move(target));
  State s = exec(h, program, value);
  return h.finish(std::move(s));
}

struct LmhStepResult {
  LmhTrace trace;
  bool accepted;
};

/// One Metropolis-Hastings transition: resample one address uniformly,
/// rerun from the start reusing the rest of the trace, accept or reject.
///
/// The acceptance log-ratio is
///   (W' - W) + log|db| - log|db'| + R - F
/// where W is the log joint of a trace (sample and observe terms), F sums
/// the log-probabilities of freshly drawn values in the proposal and R those
/// of the old values the proposal did not reuse.
inline LmhStepResult lmh_step(const LmhTrace& current, const Program& program, const Value& value,
                              Rng& rng, std::int64_t padding = 16) {
  if (current.db.empty()) return {current, false};
  auto pick = current.db.begin();
  std::advance(pick, static_cast<std::ptrdiff_t>(rng.below(current.db.size())));
  LmhTrace proposal = lmh_run(program, value, rng, padding, &current.db, pick->first);

  double stale = 0;
  for (const auto& [a, e] : current.db) {
    if (!proposal.reused.count(a)) stale += e.log_prob;
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  double w_new = proposal.log_joint(), w_old = current.log_joint();
  double log_alpha;
  if (w_new == ninf || std::isnan(w_new)) {
    log_alpha = ninf;
  } else if (w_old == ninf) {
    log_alpha = 0;
  } else {
    log_alpha = (w_new - w_old) + std::log(static_cast<double>(current.db.size())) -
                std::log(static_cast<double>(proposal.db.size())) + stale - proposal.fresh_lp;
  }
  double u = rng.uniform();
  if (log_alpha >= 0 || std::log(u) < log_alpha) return {std::move(proposal), true};
  return {current, false};
}

/// Markov chain of states; every element has log-weight 0.
class LmhSequence final : public StateSequence {
 public:
  LmhSequence(Program program, Value value, InferenceOptions opts)
      : program_(std::move(program)), value_(std::move(value)), opts_(opts), rng_(opts.seed) {}

  State next() override {
    ++executions_;
    if (!current_) {
      current_ = lmh_run(program_, value_, rng_, opts_.padding, nullptr, std::nullopt);
    } else if (!current_->db.empty()) {
      auto r = lmh_step(*current_, program_, value_, rng_, opts_.padding);
      if (r.accepted) ++accepted_;
      current_ = std::move(r.trace);
    }
    return set_log_weight(current_->state, 0.0);
  }

  std::size_t accepted() const { return accepted_; }

 private:
  Program program_;
  Value value_;
  InferenceOptions opts_;
  Rng rng_;
  std::optional<LmhTrace> current_;
  std::size_t accepted_ = 0;
};

// ---- Sequential Monte Carlo ----------------------------------------------

struct Particle {
  Step pending;
  ContPtr resume;  // continuation of the observe the particle waits at
  Rng rng;
  AddressCursor cursor;
  std::optional<Address> last;
  int observes = 0;
  bool done = false;
  State state;  // at the barrier or at the end
};

namespace detail {

/// Sample handler for one particle; observes stop the particle.
class ParticleHandler final : public Handler {
 public:
  explicit ParticleHandler(Particle& p) : p_(p) {}
  Step on_sample(const SampleCP& cp) override {
    p_.last = checkpoint_id(cp, p_.cursor);
    return continue_with(cp.cont, cp.dist->sample(p_.rng), cp.state);
  }
  Step on_observe(const ObserveCP&) override { throw EvalError("internal error: unexpected observe"); }
  std::optional<Address> last_address() const override { return p_.last; }

 private:
  Particle& p_;
};

/// Runs the particle to its next observe (weighting it) or to the end.
inline void advance(Particle& p, const std::string& source) {
  ParticleHandler h(p);
  tag_errors(source, h, [&] {
    Step step = std::move(p.pending);
    for (;;) {
      if (auto t = std::get_if<Thunk>(&step.node)) {
        Step next = t->force();
        step = std::move(next);
      } else if (auto s = std::get_if<SampleCP>(&step.node)) {
        Step next = h.on_sample(*s);
        step = std::move(next);
      } else if (auto o = std::get_if<ObserveCP>(&step.node)) {
        p.last = checkpoint_id(*o, p.cursor);
        ++p.observes;
        p.state = add_log_weight(o->state, o->dist->log_prob(o->value));
        p.resume = o->cont;
        return 0;
      } else {
        p.state = std::get<ResultCP>(step.node).state;
        p.done = true;
        p.pending = std::move(step);
        return 0;
      }
    }
  });
}

inline void advance_all(std::vector<Particle>& ps, const std::string& source, std::size_t threads) {
  threads = std::max<std::size_t>(1, std::min(threads, ps.size()));
  if (threads == 1) {
    for (auto& p : ps) advance(p, source);
    return;
  }
  std::vector<std::exception_ptr> errors(ps.size());
  std::vector<std::thread> pool;
  std::size_t chunk = (ps.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    std::size_t lo = t * chunk, hi = std::min(ps.size(), lo + chunk);
    pool.emplace_back([&, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) {
        try {
          advance(ps[i], source);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// Systematic resampling: indices of the particles that survive, given
/// log-weights and one uniform draw in [0, 1).
inline std::vector<std::size_t> systematic_resample(const std::vector<double>& log_weights, double u) {
  std::size_t n = log_weights.size();
  double total = log_sum_exp(log_weights);
  std::vector<std::size_t> out;
  out.reserve(n);
  double cum = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += std::exp(log_weights[i] - total);
    double bound = i + 1 == n ? static_cast<double>(n) : cum * static_cast<double>(n);
    while (j < n && (static_cast<double>(j) + u) < bound) {
      out.push_back(i);
      ++j;
    }
  }
  return out;
}

/// One SMC sweep with `n` particles. Returns the final states; their
/// log-weights (and the "log-evidence" extra) hold the estimate of the log
/// marginal likelihood.
inline std::vector<State> smc_run(const Program& program, const Value& value, std::size_t n, Rng& rng,
                                  std::int64_t padding = 16, std::size_t threads = 1) {
  if (n == 0) throw EvalError("smc: number of particles must be positive");
  std::vector<Particle> ps;
  ps.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Particle p{program.start(value), nullptr, rng.split(), AddressCursor(padding), std::nullopt, 0, false, State{}};
    ps.push_back(std::move(p));
  }
  for (;;) {
    detail::advance_all(ps, program.source_name(), threads);
    std::size_t done = 0;
    for (const auto& p : ps) done += p.done ? 1 : 0;
    if (done == n) break;
    if (done != 0) {
      const Particle& waiting = *std::find_if(ps.begin(), ps.end(), [](const Particle& p) { return !p.done; });
      throw RuntimeError(program.source_name(),
                         "smc: particles reached different numbers of observes; divergent observe " +
                             to_string(*waiting.last),
                         std::nullopt);
    }
    std::vector<double> w;
    for (const auto& p : ps) w.push_back(p.state.log_weight);
    double evidence = log_mean_exp(w);
    if (!(evidence > -std::numeric_limits<double>::infinity())) {
      throw RuntimeError(program.source_name(),
                         "smc: all particles have zero weight at observe " + to_string(*ps.front().last),
                         std::nullopt);
    }
    auto picks = systematic_resample(w, rng.uniform());
    std::vector<Particle> next;
    next.reserve(n);
    std::vector<bool> used(n, false);
    for (std::size_t i : picks) {
      Particle child = ps[i];
      if (used[i]) child.rng = rng.split();
      used[i] = true;
      child.state = set_extra(set_log_weight(child.state, evidence), "log-evidence", evidence);
      child.pending = continue_with(child.resume, Value(), child.state);
      next.push_back(std::move(child));
    }
    ps = std::move(next);
  }
  std::vector<State> out;
  out.reserve(n);
  for (auto& p : ps) {
    State s = p.state;
    if (get_extra(s, "log-evidence").is_nil()) s = set_extra(s, "log-evidence", s.log_weight);
    out.push_back(std::move(s));
  }
  return out;
}

/// SMC states, one sweep of `particles` states at a time.
class SmcSequence final : public StateSequence {
 public:
  SmcSequence(Program program, Value value, InferenceOptions opts)
      : program_(std::move(program)), value_(std::move(value)), opts_(opts), rng_(opts.seed) {}

  State next() override {
    if (buffer_.empty()) {
      executions_ += opts_.particles;
      auto states = smc_run(program_, value_, opts_.particles, rng_, opts_.padding, opts_.threads);
      buffer_.assign(states.begin(), states.end());
    }
    State s = std::move(buffer_.front());
    buffer_.pop_front();
    return s;
  }

 private:
  Program program_;
  Value value_;
  InferenceOptions opts_;
  Rng rng_;
  std::deque<State> buffer_;
};

/// Lazy inference over `program`. Algorithms: importance, lmh, smc.
inline std::unique_ptr<StateSequence> infer(std::string_view algorithm, const Program& program,
                                            const Value& value = Value(), const InferenceOptions& opts = {}) {
  if (!algorithm.empty() && algorithm.front() == ':') algorithm.remove_prefix(1);
  if (algorithm == "importance") return std::make_unique<ImportanceSequence>(program, value, opts);
  if (algorithm == "lmh") return std::make_unique<LmhSequence>(program, value, opts);
  if (algorithm == "smc") return std::make_unique<SmcSequence>(program, value, opts);
  throw EvalError("unknown inference algorithm " + std::string(algorithm));
}

/// infer with keyword-style options, e.g. {:particles 100 :seed 1}.
inline std::unique_ptr<StateSequence> doquery(std::string_view algorithm, const Program& program,
                                              const Value& value, const Items& options = {}) {
  return infer(algorithm, program, value, parse_options(options));
}

}  // namespace ppl

#endif  // PPL_INFERENCE_HPP
