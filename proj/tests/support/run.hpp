#ifndef PPL_TESTS_RUN_HPP
#define PPL_TESTS_RUN_HPP

#include <string>
#include <vector>

#include "ppl/ppl.hpp"

namespace testing_support {

/// Compiles `src` and runs its only query once under the default handler.
inline ppl::State run_once(const std::string& src, const ppl::Value& input = {}, std::uint64_t seed = 1) {
  auto mod = ppl::load_module(src, "<test>");
  ppl::Rng rng(seed);
  ppl::DefaultHandler h(rng);
  return ppl::exec(h, mod->only_query(), input, ppl::initial_state());
}

inline ppl::Value result_of(const std::string& src, const ppl::Value& input = {}) { return run_once(src, input).result; }

inline ppl::Value read_value(const std::string& text) { return ppl::to_value(ppl::read_form(text)); }

/// Default handler that also records every checkpoint it sees.
class RecordingHandler : public ppl::DefaultHandler {
 public:
  using DefaultHandler::DefaultHandler;

  ppl::Step on_sample(const ppl::SampleCP& cp) override {
    samples.push_back(cp.id);
    return DefaultHandler::on_sample(cp);
  }
  ppl::Step on_observe(const ppl::ObserveCP& cp) override {
    observes.push_back(cp.id);
    return DefaultHandler::on_observe(cp);
  }

  std::vector<ppl::Value> samples;
  std::vector<ppl::Value> observes;
};

}  // namespace testing_support

#endif  // PPL_TESTS_RUN_HPP
