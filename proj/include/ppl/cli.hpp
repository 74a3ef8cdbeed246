#ifndef PPL_CLI_HPP
#define PPL_CLI_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ppl/ppl.hpp"

namespace ppl::cli {

enum ExitCode : int { kOk = 0, kCompileError = 1, kRuntimeError = 2, kBadFlags = 3 };

enum class OutputFormat { Jsonl, Csv };

struct RunConfig {
  std::string program_path;
  std::string query_name;
  std::string algorithm = "importance";
  std::size_t samples = 1000;
  std::size_t burn = 0;
  std::size_t particles = 100;
  std::uint64_t seed = 42;
  std::int64_t padding = 16;
  OutputFormat output = OutputFormat::Jsonl;
  std::string initial_value;
};

inline nlohmann::json real_to_json(double d) {
  if (std::isfinite(d)) return d;
  if (std::isnan(d)) return "nan";
  return d > 0 ? "inf" : "-inf";
}

inline std::string key_string(const Value& k) {
  if (auto s = k.get_if<std::string>()) return *s;
  if (auto s = k.get_if<Symbol>()) return "'" + s->name;
  return to_string(k);
}

/// Maps and vectors become objects and arrays; symbols and keywords become
/// strings with a ' or : prefix.
inline nlohmann::json to_json(const Value& v) {
  using nlohmann::json;
  return std::visit(
      [&](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Nil>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::int64_t> ||
                             std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, double>) {
          return real_to_json(x);
        } else if constexpr (std::is_same_v<T, Symbol>) {
          return "'" + x.name;
        } else if constexpr (std::is_same_v<T, Keyword>) {
          return ":" + x.name;
        } else if constexpr (std::is_same_v<T, List> || std::is_same_v<T, Vector>) {
          json arr = json::array();
          for (const auto& item : seq_items(v)) arr.push_back(to_json(item));
          return arr;
        } else if constexpr (std::is_same_v<T, Set>) {
          json arr = json::array();
          for (const auto& item : *x.data) arr.push_back(to_json(item));
          return arr;
        } else if constexpr (std::is_same_v<T, Map>) {
          json obj = json::object();
          for (const auto& [k, val] : *x.data) obj[key_string(k)] = to_json(val);
          return obj;
        } else {
          return to_string(v);
        }
      },
      v.rep());
}

inline std::optional<double> numeric(const Value& v) {
  if (auto b = v.get_if<bool>()) return *b ? 1.0 : 0.0;
  if (v.is_number()) return v.to_double();
  return std::nullopt;
}

/// Weighted means of every map key whose values are numeric or boolean in
/// all samples; a scalar result is reported under "result".
inline nlohmann::json summary_means(const std::vector<stat::WeightedSample>& samples) {
  nlohmann::json means = nlohmann::json::object();
  if (samples.empty()) return means;
  auto mean_of = [&](auto&& get) -> std::optional<double> {
    for (const auto& s : samples) {
      if (!get(s.result)) return std::nullopt;
    }
    return stat::weighted_mean(samples, [&](const Value& r) { return *get(r); });
  };
  const Value& first = samples.front().result;
  if (auto m = first.get_if<Map>()) {
    for (const auto& [key, unused] : *m->data) {
      (void)unused;
      auto get = [&key = key](const Value& r) -> std::optional<double> {
        auto rm = r.get_if<Map>();
        if (!rm) return std::nullopt;
        auto it = rm->data->find(key);
        if (it == rm->data->end()) return std::nullopt;
        return numeric(it->second);
      };
      if (auto mean = mean_of(get)) means[key_string(key)] = real_to_json(*mean);
    }
  } else if (auto mean = mean_of([](const Value& r) { return numeric(r); })) {
    means["result"] = real_to_json(*mean);
  }
  return means;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_log_weight(double w) {
  if (std::isnan(w)) return "nan";
  if (std::isinf(w)) return w > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", w);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BadFlags : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::shared_ptr<const Module> load_program_file(const std::string& path) {
  return load_module(read_file(path), path);
}

inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::shared_ptr<const Module> mod;
  Value input;
  try {
    mod = load_program_file(cfg.program_path);
  } catch (const std::exception& e) {
    err << cfg.program_path << ":" << e.what() << "\n";
    return kCompileError;
  }
  try {
    if (!cfg.initial_value.empty()) {
      auto forms = read_forms(cfg.initial_value);
      if (forms.size() != 1) throw BadFlags("must be exactly one form");
      input = to_value(forms.front());
    }
  } catch (const std::exception& e) {
    err << "error: --value: " << e.what() << "\n";
    return kBadFlags;
  }

  std::optional<Program> program;
  try {
    program = cfg.query_name.empty() ? mod->only_query() : mod->query(cfg.query_name);
  } catch (const CompileError& e) {
    err << "error: " << e.what() << "\n";
    return kBadFlags;
  }

  InferenceOptions opts;
  opts.particles = cfg.particles;
  opts.seed = cfg.seed;
  opts.padding = cfg.padding;

  std::vector<stat::WeightedSample> kept;
  try {
    auto seq = infer(cfg.algorithm, *program, input, opts);
    seq->drop(cfg.burn);
    if (cfg.output == OutputFormat::Csv) out << "index,log-weight,result\r\n";
    for (std::size_t i = 0; i < cfg.samples; ++i) {
      State s = seq->next();
      kept.push_back({s.result, s.log_weight});
      if (cfg.output == OutputFormat::Jsonl) {
        nlohmann::json rec = {{"type", "sample"}, {"index", i}};
        rec["log-weight"] = std::isfinite(s.log_weight) ? nlohmann::json(s.log_weight) : nlohmann::json(nullptr);
        rec["result"] = to_json(s.result);
        out << rec.dump() << "\n";
      } else {
        out << i << "," << format_log_weight(s.log_weight) << "," << csv_field(to_string(s.result)) << "\r\n";
      }
    }
  } catch (const std::exception& e) {
    out.flush();
    err << e.what() << "\n";
    return kRuntimeError;
  }

  nlohmann::json summary = {{"type", "summary"}, {"n", kept.size()}};
  try {
    summary["ess"] = stat::ess(stat::log_weights_of(kept));
    summary["means"] = summary_means(kept);
  } catch (const stat::StatError& e) {
    err << "warning: " << e.what() << "\n";
    summary["ess"] = 0.0;
    summary["means"] = nlohmann::json::object();
  }
  (cfg.output == OutputFormat::Jsonl ? out : err) << summary.dump() << "\n";
  return kOk;
}

inline int check(const std::string& path, bool dump_ir, std::ostream& out, std::ostream& err) {
  try {
    auto mod = load_program_file(path);
    if (dump_ir) out << mod->dump_ir();
    return kOk;
  } catch (const std::exception& e) {
    err << path << ":" << e.what() << "\n";
    return kCompileError;
  }
}

/// Entry point shared by the `ppl` binary and the tests.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Compile and run probabilistic queries"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string output = "jsonl";
  auto* run_cmd = app.add_subcommand("run", "run inference on a query file");
  run_cmd->add_option("file", cfg.program_path, "query source file")->required();
  run_cmd->add_option("--algorithm", cfg.algorithm)
      ->check(CLI::IsMember({"importance", "lmh", "smc"}))
      ->capture_default_str();
  run_cmd->add_option("--samples", cfg.samples, "states to emit after burn-in")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--burn", cfg.burn, "states to drop first")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--particles", cfg.particles, "smc particle count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--seed", cfg.seed)->capture_default_str();
  run_cmd->add_option("--padding", cfg.padding, "address padding")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--output", output)->check(CLI::IsMember({"jsonl", "csv"}))->capture_default_str();
  run_cmd->add_option("--query", cfg.query_name, "query name when the file defines several");
  run_cmd->add_option("--value", cfg.initial_value, "query argument as source text");

  std::string check_path;
  bool dump_ir = false;
  auto* check_cmd = app.add_subcommand("check", "parse and compile only");
  check_cmd->add_option("file", check_path, "query source file")->required();
  check_cmd->add_flag("--dump-ir", dump_ir, "print the compiled IR");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kBadFlags;
  }

  if (check_cmd->parsed()) return check(check_path, dump_ir, out, err);
  cfg.output = output == "csv" ? OutputFormat::Csv : OutputFormat::Jsonl;
  return run(cfg, out, err);
}

}  // namespace ppl::cli

#endif  // PPL_CLI_HPP
