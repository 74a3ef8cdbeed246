#ifndef PPL_MODULE_HPP
#define PPL_MODULE_HPP

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ppl/compiler.hpp"
#include "ppl/eval.hpp"
#include "ppl/reader.hpp"

namespace ppl {

class Module;

/// A compiled query: a CPS function of (cont, state, input).
class Program {
 public:
  Program(std::shared_ptr<const Module> module, std::string name, FnPtr entry, ir::NodePtr ir)
      : module_(std::move(module)), name_(std::move(name)), entry_(std::move(entry)), ir_(std::move(ir)) {}

  const std::string& name() const { return name_; }
  const std::string& source_name() const;
  const ir::NodePtr& ir() const { return ir_; }
  const FnPtr& entry() const { return entry_; }

  /// First step of a run on `input`.
  Step start(const Value& input = Value(), const State& state = initial_state(),
             ContPtr k = result_continuation()) const {
    return entry_->call(std::move(k), state, {input});
  }

 private:
  std::shared_ptr<const Module> module_;
  std::string name_;
  FnPtr entry_;
  ir::NodePtr ir_;
};

struct Definition {
  enum class Kind { Def, Function, Query };
  Kind kind;
  std::string name;
  ir::NodePtr ir;
};

/// Definitions and queries of one source file.
class Module : public std::enable_shared_from_this<Module> {
 public:
  const std::string& source_name() const { return source_name_; }
  const std::vector<Definition>& definitions() const { return definitions_; }

  std::vector<std::string> query_names() const {
    std::vector<std::string> out;
    for (const auto& d : definitions_) {
      if (d.kind == Definition::Kind::Query) out.push_back(d.name);
    }
    return out;
  }

  bool has_query(std::string_view name) const { return queries_.count(std::string(name)) > 0; }

  Program query(const std::string& name) const {
    auto it = queries_.find(name);
    if (it == queries_.end()) throw CompileError("no query named " + name + " in " + source_name_, {});
    return Program(shared_from_this(), name, it->second.first, it->second.second);
  }

  /// The module's query when it defines exactly one.
  Program only_query() const {
    auto names = query_names();
    if (names.size() != 1) {
      throw CompileError(source_name_ + " defines " + std::to_string(names.size()) +
                             " queries; choose one by name", {});
    }
    return query(names.front());
  }

  std::optional<Value> global(std::string_view name) const {
    auto slot = globals_->find(name);
    if (!slot) return std::nullopt;
    return globals_->values[*slot];
  }

  std::string dump_ir(std::size_t width = 100) const {
    std::string out;
    for (const auto& d : definitions_) {
      const char* kw = d.kind == Definition::Kind::Def        ? "def"
                       : d.kind == Definition::Kind::Function ? "defm"
                                                              : "defquery";
      out += ";; " + std::string(kw) + " " + d.name + "\n" + ir::pretty(ir::print(d.ir), width) + "\n";
    }
    return out;
  }

 private:
  friend std::shared_ptr<const Module> load_module_with(std::string_view, std::string, CompileEnv);

  std::string source_name_;
  std::vector<Definition> definitions_;
  std::unique_ptr<ir::GlobalTable> globals_ = std::make_unique<ir::GlobalTable>();
  std::map<std::string, std::pair<FnPtr, ir::NodePtr>> queries_;
};

inline const std::string& Program::source_name() const { return module_->source_name(); }

namespace detail {

[[noreturn]] inline void fail_at(const Form& f, const std::string& msg) { throw CompileError(msg, f.pos); }

inline const std::string& definition_name(const Form& form) {
  const auto& items = form.items();
  if (items.size() < 2 || !items[1].is(Form::Kind::Symbol)) {
    fail_at(form, items[0].text() + " requires a name");
  }
  return items[1].text();
}

/// Runs a load-time computation to completion; checkpoints are not allowed.
inline Value run_at_load(const FnPtr& fn, const std::string& what) {
  Step step = fn->call(result_continuation(), initial_state(), {});
  for (;;) {
    if (auto t = std::get_if<Thunk>(&step.node)) {
      step = t->force();
    } else if (auto r = std::get_if<ResultCP>(&step.node)) {
      return r->state.result;
    } else {
      throw EvalError(what + ": sample and observe are only allowed inside a query");
    }
  }
}

}  // namespace detail

/// Reads and compiles `text`. Supported top-level forms are `def`,
/// `defm`/`defn`, `defquery` and `ns` (ignored). Without any `defquery`,
/// the remaining top-level expressions form a query named "main".
inline std::shared_ptr<const Module> load_module_with(std::string_view text, std::string source_name,
                                                      CompileEnv env) {
  std::vector<Form> forms = read_forms(text);
  auto mod = std::make_shared<Module>();
  mod->source_name_ = std::move(source_name);
  ir::GlobalTable& globals = *mod->globals_;

  std::vector<const Form*> bare;
  bool any_query = false;
  std::set<std::string> query_names;
  for (const auto& f : forms) {
    std::string head = f.is(Form::Kind::List) && !f.items().empty() && f.items()[0].is(Form::Kind::Symbol)
                           ? f.items()[0].text()
                           : "";
    if (head == "ns") continue;
    if (head == "def" || head == "defm" || head == "defn") {
      const std::string& name = detail::definition_name(f);
      if (globals.find(name)) detail::fail_at(f, "duplicate definition of " + name);
      globals.declare(name);
    } else if (head == "defquery") {
      const std::string& name = detail::definition_name(f);
      if (!query_names.insert(name).second) detail::fail_at(f, "duplicate query " + name);
      any_query = true;
    } else {
      bare.push_back(&f);
    }
  }
  if (any_query && !bare.empty()) {
    detail::fail_at(*bare.front(), "top-level expression outside any definition");
  }

  env.globals = &globals;
  Compiler compiler(env);
  Scope top;

  for (const auto& f : forms) {
    if (!f.is(Form::Kind::List) || f.items().empty() || !f.items()[0].is(Form::Kind::Symbol)) continue;
    const auto& items = f.items();
    const std::string& head = items[0].text();
    if (head == "def") {
      const std::string& name = detail::definition_name(f);
      std::size_t n = items.size();
      if (n != 3 && !(n == 4 && items[2].is(Form::Kind::Str))) detail::fail_at(f, "malformed def " + name);
      ir::NodePtr lam = compiler.make_lambda("", ir::Pattern{}, {items.back()}, top, name);
      FnPtr fn = eval::eval_value(lam, nullptr, initial_state()).as<FnPtr>();
      globals.values[*globals.find(name)] = detail::run_at_load(fn, "def " + name);
      mod->definitions_.push_back({Definition::Kind::Def, name, lam});
    } else if (head == "defm" || head == "defn") {
      const std::string& name = detail::definition_name(f);
      std::size_t i = 2;
      if (i + 1 < items.size() && items[i].is(Form::Kind::Str)) ++i;
      if (i + 1 < items.size() && items[i].is(Form::Kind::Map)) ++i;
      if (i >= items.size() || !items[i].is(Form::Kind::Vector)) {
        detail::fail_at(f, head + " " + name + " requires a parameter vector (multi-arity is not supported)");
      }
      std::vector<Form> body(items.begin() + static_cast<std::ptrdiff_t>(i) + 1, items.end());
      ir::NodePtr lam = compiler.make_lambda("", compiler.parse_params(items[i]), body, top, name);
      globals.values[*globals.find(name)] = eval::eval_value(lam, nullptr, initial_state());
      mod->definitions_.push_back({Definition::Kind::Function, name, lam});
    } else if (head == "defquery") {
      const std::string& name = detail::definition_name(f);
      std::size_t i = 2;
      auto more_after = [&](std::size_t j) { return j + 1 < items.size(); };
      if (more_after(i) && items[i].is(Form::Kind::Str)) ++i;
      const Form* param = nullptr;
      if (more_after(i) && (items[i].is(Form::Kind::Symbol) || items[i].is(Form::Kind::Vector))) {
        param = &items[i++];
      }
      if (more_after(i) && items[i].is(Form::Kind::Str)) ++i;
      if (i >= items.size()) detail::fail_at(f, "defquery " + name + " has no body");
      std::vector<Form> body(items.begin() + static_cast<std::ptrdiff_t>(i), items.end());
      ir::NodePtr lam = compiler.make_query(param, body, top, name);
      FnPtr fn = eval::eval_value(lam, nullptr, initial_state()).as<FnPtr>();
      mod->queries_[name] = {fn, lam};
      mod->definitions_.push_back({Definition::Kind::Query, name, lam});
    }
  }

  if (!any_query && !bare.empty()) {
    std::vector<Form> body;
    for (const Form* f : bare) body.push_back(*f);
    ir::NodePtr lam = compiler.make_query(nullptr, body, top, "main");
    FnPtr fn = eval::eval_value(lam, nullptr, initial_state()).as<FnPtr>();
    mod->queries_["main"] = {fn, lam};
    mod->definitions_.push_back({Definition::Kind::Query, "main", lam});
  }
  return mod;
}

}  // namespace ppl

#endif  // PPL_MODULE_HPP
