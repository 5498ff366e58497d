#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atvmc/controller.hpp"
#include "atvmc/engine.hpp"
#include "atvmc/errors.hpp"
#include "atvmc/ground_state.hpp"
#include "atvmc/solver.hpp"

namespace atvmc {

namespace detail {

inline std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

struct IniEntry {
  std::string value;
  int line = 0;
};

}  // namespace detail

/// Strict key = value sections. Unknown keys are rejected downstream against
/// the experiment schema; diagnostics carry file:line anchors.
class IniDocument {
 public:
  static IniDocument parse_file(const std::filesystem::path& path) {
    std::ifstream stream(path);
    if (!stream) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buffer;
    buffer << stream.rdbuf();
    return parse_string(buffer.str(), path.string());
  }

  static IniDocument parse_string(const std::string& text, const std::string& name) {
    IniDocument doc;
    doc.name_ = name;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    std::string section;
    while (std::getline(stream, line)) {
      ++line_no;
      const std::string trimmed = detail::trim(line);
      if (trimmed.empty() || trimmed[0] == '#' || trimmed[0] == ';') continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']' || trimmed.size() < 3) {
          throw ConfigError(doc.where(line_no) + ": malformed section header '" + trimmed +
                            "'");
        }
        section = detail::trim(trimmed.substr(1, trimmed.size() - 2));
        doc.sections_[section];
        continue;
      }
      const auto equals = trimmed.find('=');
      if (equals == std::string::npos) {
        throw ConfigError(doc.where(line_no) + ": expected 'key = value', got '" + trimmed +
                          "'");
      }
      if (section.empty()) {
        throw ConfigError(doc.where(line_no) + ": key outside of any [section]");
      }
      const std::string key = detail::trim(trimmed.substr(0, equals));
      const std::string value = detail::trim(trimmed.substr(equals + 1));
      if (key.empty()) throw ConfigError(doc.where(line_no) + ": empty key");
      auto& entries = doc.sections_[section];
      if (entries.count(key)) {
        throw ConfigError(doc.where(line_no) + ": duplicate key '" + section + "." + key +
                          "'");
      }
      entries[key] = detail::IniEntry{value, line_no};
    }
    return doc;
  }

  /// Applies a 'section.key=value' command-line override.
  void apply_override(const std::string& assignment) {
    const auto equals = assignment.find('=');
    if (equals == std::string::npos) {
      throw ConfigError("override '" + assignment + "' must look like section.key=value");
    }
    const std::string path = detail::trim(assignment.substr(0, equals));
    const std::string value = detail::trim(assignment.substr(equals + 1));
    const auto dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= path.size()) {
      throw ConfigError("override '" + assignment + "' must look like section.key=value");
    }
    sections_[path.substr(0, dot)][path.substr(dot + 1)] = detail::IniEntry{value, 0};
  }

  const std::map<std::string, std::map<std::string, detail::IniEntry>>& sections() const {
    return sections_;
  }

  std::string where(int line) const {
    return name_ + ":" + std::to_string(line == 0 ? 1 : line);
  }

  const std::string& name() const { return name_; }

 private:
  std::string name_ = "<config>";
  std::map<std::string, std::map<std::string, detail::IniEntry>> sections_;
};

/// Fully resolved experiment description; every knob of every module, with
/// defaults matching the documented method parameters.
struct ExperimentConfig {
  // model
  int n = 0;
  double coupling_j = 1.0;
  double g1 = 0.0;
  double g2 = 0.0;
  // ansatz
  std::string ansatz_kind;  // jastrow | rbm
  int density = 3;
  // estimator
  std::string estimator_mode = "exact-sum";  // exact-sum | metropolis
  long samples = 70000;
  long burn = 100;
  int chains = 8;
  std::uint64_t seed = 12345;
  int enumeration_cap = 14;
  // solver
  SolverPolicy solver;
  // integrator
  IntegratorConfig integrator;
  // adaptive
  AdaptivePolicy adaptive;
  // ground state
  SrConfig sr;
  // run
  double t_total = 1.0;
  long record_every = 1;
  std::string checkpoint;  // defaults to <output.directory>/ground_state.ckpt
  // oracle
  int oracle_cap = 14;
  // output
  std::string output_directory = "out";
  std::string output_format = "tsv";

  static ExperimentConfig from_document(const IniDocument& doc);

  static ExperimentConfig from_file(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {}) {
    IniDocument doc = IniDocument::parse_file(path);
    for (const auto& item : overrides) doc.apply_override(item);
    return from_document(doc);
  }

  static ExperimentConfig from_string(const std::string& text,
                                      const std::vector<std::string>& overrides = {},
                                      const std::string& name = "<config>") {
    IniDocument doc = IniDocument::parse_string(text, name);
    for (const auto& item : overrides) doc.apply_override(item);
    return from_document(doc);
  }

  std::filesystem::path checkpoint_path() const {
    if (!checkpoint.empty()) return checkpoint;
    return std::filesystem::path(output_directory) / "ground_state.ckpt";
  }

  TfiHamiltonian hamiltonian_initial() const {
    return TfiHamiltonian::with_field_ratio(n, g1, coupling_j);
  }
  TfiHamiltonian hamiltonian_quench() const {
    return TfiHamiltonian::with_field_ratio(n, g2, coupling_j);
  }

  void validate() const {
    if (n < 2) throw ConfigError("model.n must be >= 2");
    if (coupling_j == 0.0) throw ConfigError("model.j must be nonzero");
    if (ansatz_kind != "jastrow" && ansatz_kind != "rbm") {
      throw ConfigError("ansatz.kind must be 'jastrow' or 'rbm'");
    }
    if (ansatz_kind == "rbm" && density < 1) throw ConfigError("ansatz.density must be >= 1");
    if (estimator_mode != "exact-sum" && estimator_mode != "metropolis") {
      throw ConfigError("estimator.mode must be 'exact-sum' or 'metropolis'");
    }
    if (estimator_mode == "exact-sum" && n > enumeration_cap) {
      throw ConfigError("estimator.mode = exact-sum needs model.n <= estimator.cap (" +
                        std::to_string(enumeration_cap) + ")");
    }
    if (samples <= 0) throw ConfigError("estimator.samples must be positive");
    if (burn < 0) throw ConfigError("estimator.burn must be >= 0");
    if (chains < 1) throw ConfigError("estimator.chains must be >= 1");
    if (!(t_total >= 0.0)) throw ConfigError("run.t_total must be >= 0");
    if (record_every < 1) throw ConfigError("run.record_every must be >= 1");
    if (oracle_cap < 2) throw ConfigError("oracle.cap must be >= 2");
    if (output_format != "tsv") throw ConfigError("output.format: only 'tsv' is supported");
    solver.validate();
    integrator.validate();
    adaptive.validate();
    sr.validate();
  }

  /// Canonical serialization of the resolved configuration; identical
  /// configurations hash identically regardless of formatting.
  std::string canonical_text() const;

  std::string hash() const {
    const std::string text = canonical_text();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
    return buffer;
  }
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const IniDocument& doc) : doc_(doc) {}

  bool has(const std::string& section, const std::string& key) {
    mark_seen(section, key);
    const auto sec = doc_.sections().find(section);
    if (sec == doc_.sections().end()) return false;
    return sec->second.count(key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    mark_seen(section, key);
    const auto sec = doc_.sections().find(section);
    if (sec == doc_.sections().end()) return fallback;
    const auto entry = sec->second.find(key);
    if (entry == sec->second.end()) return fallback;
    return entry->second.value;
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    const std::string text = get_string(section, key, "");
    if (text.empty()) return fallback;
    try {
      std::size_t consumed = 0;
      const double value = std::stod(text, &consumed);
      if (consumed != text.size()) throw std::invalid_argument(text);
      return value;
    } catch (const std::exception&) {
      throw ConfigError(anchor(section, key) + ": expected a number, got '" + text + "'");
    }
  }

  long get_long(const std::string& section, const std::string& key, long fallback) {
    const std::string text = get_string(section, key, "");
    if (text.empty()) return fallback;
    try {
      std::size_t consumed = 0;
      const long value = std::stol(text, &consumed);
      if (consumed != text.size()) throw std::invalid_argument(text);
      return value;
    } catch (const std::exception&) {
      throw ConfigError(anchor(section, key) + ": expected an integer, got '" + text + "'");
    }
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) {
    const std::string text = get_string(section, key, "");
    if (text.empty()) return fallback;
    try {
      std::size_t consumed = 0;
      const unsigned long long value = std::stoull(text, &consumed);
      if (consumed != text.size()) throw std::invalid_argument(text);
      return value;
    } catch (const std::exception&) {
      throw ConfigError(anchor(section, key) + ": expected an unsigned integer, got '" +
                        text + "'");
    }
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) {
    const std::string text = get_string(section, key, "");
    if (text.empty()) return fallback;
    if (text == "true") return true;
    if (text == "false") return false;
    throw ConfigError(anchor(section, key) + ": expected 'true' or 'false', got '" + text +
                      "'");
  }

  /// Every key present in the document must have been consumed.
  void reject_unknown() const {
    for (const auto& [section, entries] : doc_.sections()) {
      for (const auto& [key, entry] : entries) {
        if (!seen_.count(section + "." + key)) {
          throw ConfigError(doc_.where(entry.line) + ": unknown key '" + section + "." + key +
                            "'");
        }
      }
    }
  }

 private:
  void mark_seen(const std::string& section, const std::string& key) {
    seen_.insert(section + "." + key);
  }

  std::string anchor(const std::string& section, const std::string& key) const {
    const auto sec = doc_.sections().find(section);
    if (sec != doc_.sections().end()) {
      const auto entry = sec->second.find(key);
      if (entry != sec->second.end()) return doc_.where(entry->second.line);
    }
    return doc_.where(0);
  }

  const IniDocument& doc_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline ExperimentConfig ExperimentConfig::from_document(const IniDocument& doc) {
  detail::ConfigReader reader(doc);
  ExperimentConfig config;

  if (!reader.has("model", "n")) throw ConfigError(doc.name() + ": missing key 'model.n'");
  if (!reader.has("model", "g1")) throw ConfigError(doc.name() + ": missing key 'model.g1'");
  if (!reader.has("model", "g2")) throw ConfigError(doc.name() + ": missing key 'model.g2'");
  if (!reader.has("ansatz", "kind")) {
    throw ConfigError(doc.name() + ": missing key 'ansatz.kind'");
  }
  config.n = static_cast<int>(reader.get_long("model", "n", 0));
  config.coupling_j = reader.get_double("model", "j", 1.0);
  config.g1 = reader.get_double("model", "g1", 0.0);
  config.g2 = reader.get_double("model", "g2", 0.0);

  config.ansatz_kind = reader.get_string("ansatz", "kind", "");
  config.density = static_cast<int>(reader.get_long("ansatz", "density", 3));

  config.estimator_mode = reader.get_string("estimator", "mode", "exact-sum");
  config.samples = reader.get_long("estimator", "samples", 70000);
  config.burn = reader.get_long("estimator", "burn", 100);
  config.chains = static_cast<int>(reader.get_long("estimator", "chains", 8));
  config.seed = reader.get_u64("estimator", "seed", 12345);
  config.enumeration_cap = static_cast<int>(reader.get_long("estimator", "cap", 14));

  const std::string solver_kind = reader.get_string("solver", "kind", "pseudoinverse");
  if (solver_kind == "pseudoinverse") {
    config.solver.kind = SolverPolicy::Kind::Pseudoinverse;
  } else if (solver_kind == "snr") {
    config.solver.kind = SolverPolicy::Kind::Snr;
  } else {
    throw ConfigError("solver.kind must be 'pseudoinverse' or 'snr'");
  }
  config.solver.pinv_rtol = reader.get_double("solver", "pinv_rtol", 1e-7);
  config.solver.snr_threshold = reader.get_double("solver", "snr_threshold", 4.0);
  config.solver.diagonal_shift = reader.get_double("solver", "diagonal_shift", 0.0);

  const std::string integrator_kind = reader.get_string("integrator", "kind", "heun");
  if (integrator_kind == "euler") {
    config.integrator.kind = IntegratorConfig::Kind::Euler;
  } else if (integrator_kind == "heun") {
    config.integrator.kind = IntegratorConfig::Kind::Heun;
  } else {
    throw ConfigError("integrator.kind must be 'euler' or 'heun'");
  }
  config.integrator.dt = reader.get_double("integrator", "dt", 1e-3);
  config.integrator.adaptive = reader.get_bool("integrator", "adaptive", false);
  config.integrator.tol_step = reader.get_double("integrator", "tol_step", 1e-6);
  config.integrator.dt_min = reader.get_double("integrator", "dt_min", 1e-9);
  config.integrator.dt_max = reader.get_double("integrator", "dt_max", 1e-1);
  config.integrator.growth_factor = reader.get_double("integrator", "growth", 1.3);

  config.adaptive.enabled = reader.get_bool("adaptive", "enabled", false);
  const std::string lambda_mode = reader.get_string("adaptive", "lambda_mode", "fraction");
  if (lambda_mode == "fraction") {
    config.adaptive.lambda_mode = AdaptivePolicy::LambdaMode::Fraction;
  } else if (lambda_mode == "absolute") {
    config.adaptive.lambda_mode = AdaptivePolicy::LambdaMode::Absolute;
  } else {
    throw ConfigError("adaptive.lambda_mode must be 'fraction' or 'absolute'");
  }
  config.adaptive.lambda_value = reader.get_double("adaptive", "lambda_value", 1e-2);
  config.adaptive.eta_sig_sq = reader.get_double("adaptive", "eta_sig_sq", 0.0);
  config.adaptive.collective_updates = reader.get_bool("adaptive", "collective", true);
  config.adaptive.binary_search_refinement =
      reader.get_bool("adaptive", "binary_search", true);
  const std::string importance_mode =
      reader.get_string("adaptive", "importance_mode", "approximate");
  if (importance_mode == "exact") {
    config.adaptive.importance_mode = AdaptivePolicy::ImportanceMode::Exact;
  } else if (importance_mode == "approximate") {
    config.adaptive.importance_mode = AdaptivePolicy::ImportanceMode::Approximate;
  } else {
    throw ConfigError("adaptive.importance_mode must be 'exact' or 'approximate'");
  }

  config.sr.learning_rate = reader.get_double("ground_state", "learning_rate", 0.02);
  config.sr.iterations = static_cast<int>(reader.get_long("ground_state", "iterations", 2000));
  config.sr.shift_initial = reader.get_double("ground_state", "shift_initial", 1e-3);
  config.sr.shift_floor = reader.get_double("ground_state", "shift_floor", 1e-5);
  config.sr.shift_decay = reader.get_double("ground_state", "shift_decay", 0.9);
  config.sr.shift_decay_every =
      static_cast<int>(reader.get_long("ground_state", "shift_decay_every", 100));
  config.sr.convergence_rtol =
      reader.get_double("ground_state", "convergence_rtol", 1e-8);
  config.sr.convergence_window =
      static_cast<int>(reader.get_long("ground_state", "convergence_window", 50));
  config.sr.stall_window =
      static_cast<int>(reader.get_long("ground_state", "stall_window", 500));
  config.sr.init_scale = reader.get_double("ground_state", "init_scale", 1e-2);

  config.t_total = reader.get_double("run", "t_total", 1.0);
  config.record_every = reader.get_long("run", "record_every", 1);
  config.checkpoint = reader.get_string("run", "checkpoint", "");

  config.oracle_cap = static_cast<int>(reader.get_long("oracle", "cap", 14));

  config.output_directory = reader.get_string("output", "directory", "out");
  config.output_format = reader.get_string("output", "format", "tsv");

  reader.reject_unknown();
  // One seed drives everything, including ground-state initialization.
  config.sr.seed = config.seed;
  config.validate();
  return config;
}

inline std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  auto fmt = [](double v) {
    char buffer[40];
    const auto end = std::to_chars(buffer, buffer + sizeof(buffer), v);
    return std::string(buffer, end.ptr);
  };
  out << "model.n=" << n << "\nmodel.j=" << fmt(coupling_j) << "\nmodel.g1=" << fmt(g1)
      << "\nmodel.g2=" << fmt(g2) << "\nansatz.kind=" << ansatz_kind
      << "\nansatz.density=" << (ansatz_kind == "rbm" ? density : 0)
      << "\nestimator.mode=" << estimator_mode << "\nestimator.samples=" << samples
      << "\nestimator.burn=" << burn << "\nestimator.chains=" << chains
      << "\nestimator.seed=" << seed << "\nestimator.cap=" << enumeration_cap
      << "\nsolver.kind=" << (solver.kind == SolverPolicy::Kind::Snr ? "snr" : "pseudoinverse")
      << "\nsolver.pinv_rtol=" << fmt(solver.pinv_rtol)
      << "\nsolver.snr_threshold=" << fmt(solver.snr_threshold)
      << "\nsolver.diagonal_shift=" << fmt(solver.diagonal_shift) << "\nintegrator.kind="
      << (integrator.kind == IntegratorConfig::Kind::Euler ? "euler" : "heun")
      << "\nintegrator.dt=" << fmt(integrator.dt)
      << "\nintegrator.adaptive=" << (integrator.adaptive ? "true" : "false")
      << "\nintegrator.tol_step=" << fmt(integrator.tol_step)
      << "\nintegrator.dt_min=" << fmt(integrator.dt_min)
      << "\nintegrator.dt_max=" << fmt(integrator.dt_max)
      << "\nintegrator.growth=" << fmt(integrator.growth_factor)
      << "\nadaptive.enabled=" << (adaptive.enabled ? "true" : "false")
      << "\nadaptive.lambda_mode="
      << (adaptive.lambda_mode == AdaptivePolicy::LambdaMode::Fraction ? "fraction"
                                                                       : "absolute")
      << "\nadaptive.lambda_value=" << fmt(adaptive.lambda_value)
      << "\nadaptive.eta_sig_sq=" << fmt(adaptive.eta_sig_sq)
      << "\nadaptive.collective=" << (adaptive.collective_updates ? "true" : "false")
      << "\nadaptive.binary_search=" << (adaptive.binary_search_refinement ? "true" : "false")
      << "\nadaptive.importance_mode="
      << (adaptive.importance_mode == AdaptivePolicy::ImportanceMode::Exact ? "exact"
                                                                            : "approximate")
      << "\nground_state.learning_rate=" << fmt(sr.learning_rate)
      << "\nground_state.iterations=" << sr.iterations
      << "\nground_state.shift_initial=" << fmt(sr.shift_initial)
      << "\nground_state.shift_floor=" << fmt(sr.shift_floor)
      << "\nground_state.shift_decay=" << fmt(sr.shift_decay)
      << "\nground_state.shift_decay_every=" << sr.shift_decay_every
      << "\nground_state.convergence_rtol=" << fmt(sr.convergence_rtol)
      << "\nground_state.convergence_window=" << sr.convergence_window
      << "\nground_state.stall_window=" << sr.stall_window
      << "\nground_state.init_scale=" << fmt(sr.init_scale) << "\nrun.t_total=" << fmt(t_total)
      << "\nrun.record_every=" << record_every << "\nrun.checkpoint=" << checkpoint
      << "\noracle.cap=" << oracle_cap << "\noutput.directory=" << output_directory
      << "\noutput.format=" << output_format << "\n";
  return out.str();
}

}  // namespace atvmc
