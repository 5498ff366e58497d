#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "atvmc/ansatz.hpp"
#include "atvmc/controller.hpp"
#include "atvmc/errors.hpp"
#include "atvmc/parameters.hpp"
#include "atvmc/types.hpp"

namespace atvmc {

inline constexpr int kTrajectorySchemaMajor = 1;
inline constexpr int kTrajectorySchemaMinor = 0;

/// One output row per accepted step.
struct TrajectoryRecord {
  long step = 0;
  double time = 0.0;
  double sigma_x = 0.0;
  double energy_re = 0.0;
  double energy_im = 0.0;
  double energy_variance = 0.0;
  double epsilon_sq = 0.0;
  double epsilon_sq_raw = 0.0;
  double fs_epsilon_sq = 0.0;
  double lambda_sq = 0.0;
  int active_count = 0;
  double cumulative_bound = 0.0;
  double dt_used = 0.0;
  int solver_rank = 0;
  double discarded_mass = 0.0;
  std::string event_summary = "-";
};

namespace io {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double value) {
  char buffer[40];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

inline double parse_double(const std::string& text, const std::string& where) {
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw ConfigError(where + ": malformed number '" + text + "'");
  }
  return value;
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, delim)) out.push_back(field);
  return out;
}

}  // namespace io

inline const char* kTrajectoryColumns =
    "step\ttime\tsigma_x\tenergy_re\tenergy_im\tenergy_var\teps_sq\teps_sq_raw\tfs_eps_sq"
    "\tlambda_sq\tactive_count\tbound\tdt\trank\tdiscarded_mass\tevents";

/// Tab-separated trajectory file with '#'-prefixed metadata, flushed per
/// record so an aborted run leaves a readable prefix.
class TrajectoryWriter {
 public:
  TrajectoryWriter() = default;

  void open(const std::filesystem::path& path, const std::string& config_hash,
            std::uint64_t seed) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    stream_.open(path, std::ios::out | std::ios::trunc);
    if (!stream_) throw ConfigError("cannot open trajectory file " + path.string());
    stream_ << "# atvmc-trajectory v" << kTrajectorySchemaMajor << "."
            << kTrajectorySchemaMinor << "\n";
    stream_ << "# config-hash " << config_hash << "\n";
    stream_ << "# seed " << seed << "\n";
    stream_ << "# columns " << kTrajectoryColumns << "\n";
    stream_.flush();
  }

  bool is_open() const { return stream_.is_open(); }

  void write(const TrajectoryRecord& r) {
    stream_ << r.step << '\t' << io::format_double(r.time) << '\t'
            << io::format_double(r.sigma_x) << '\t' << io::format_double(r.energy_re) << '\t'
            << io::format_double(r.energy_im) << '\t'
            << io::format_double(r.energy_variance) << '\t'
            << io::format_double(r.epsilon_sq) << '\t'
            << io::format_double(r.epsilon_sq_raw) << '\t'
            << io::format_double(r.fs_epsilon_sq) << '\t'
            << io::format_double(r.lambda_sq) << '\t' << r.active_count << '\t'
            << io::format_double(r.cumulative_bound) << '\t' << io::format_double(r.dt_used)
            << '\t' << r.solver_rank << '\t' << io::format_double(r.discarded_mass) << '\t'
            << r.event_summary << '\n';
    stream_.flush();
  }

  /// Terminal error record for aborted runs; the data prefix stays valid.
  void write_error(const std::string& message) {
    stream_ << "# error " << message << "\n";
    stream_.flush();
  }

  void close() { stream_.close(); }

 private:
  std::ofstream stream_;
};

struct TrajectoryFile {
  std::map<std::string, std::string> metadata;
  std::vector<TrajectoryRecord> records;
  std::string error;  // terminal error record, if any
};

inline TrajectoryFile read_trajectory(const std::filesystem::path& path) {
  std::ifstream stream(path);
  if (!stream) throw ConfigError("cannot read trajectory file " + path.string());
  TrajectoryFile out;
  std::string line;
  int line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key;
      meta >> key;
      std::string value;
      std::getline(meta, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      if (key == "error") {
        out.error = value;
      } else {
        out.metadata[key] = value;
      }
      if (key == "atvmc-trajectory") {
        if (value.size() < 2 || value[0] != 'v') {
          throw ConfigError(where + ": malformed schema version");
        }
        const int major = std::stoi(value.substr(1));
        if (major != kTrajectorySchemaMajor) {
          throw ConfigError(where + ": unsupported trajectory schema major version " +
                            std::to_string(major));
        }
      }
      continue;
    }
    const auto fields = io::split(line, '\t');
    if (fields.size() != 16) {
      throw ConfigError(where + ": expected 16 columns, got " +
                        std::to_string(fields.size()));
    }
    TrajectoryRecord r;
    r.step = std::stol(fields[0]);
    r.time = io::parse_double(fields[1], where);
    r.sigma_x = io::parse_double(fields[2], where);
    r.energy_re = io::parse_double(fields[3], where);
    r.energy_im = io::parse_double(fields[4], where);
    r.energy_variance = io::parse_double(fields[5], where);
    r.epsilon_sq = io::parse_double(fields[6], where);
    r.epsilon_sq_raw = io::parse_double(fields[7], where);
    r.fs_epsilon_sq = io::parse_double(fields[8], where);
    r.lambda_sq = io::parse_double(fields[9], where);
    r.active_count = std::stoi(fields[10]);
    r.cumulative_bound = io::parse_double(fields[11], where);
    r.dt_used = io::parse_double(fields[12], where);
    r.solver_rank = std::stoi(fields[13]);
    r.discarded_mass = io::parse_double(fields[14], where);
    r.event_summary = fields[15];
    out.records.push_back(std::move(r));
  }
  if (out.metadata.find("atvmc-trajectory") == out.metadata.end()) {
    throw ConfigError(path.string() + ": missing trajectory schema header");
  }
  return out;
}

/// Structured controller-event log: one row per event.
class EventWriter {
 public:
  void open(const std::filesystem::path& path, const std::string& config_hash,
            std::uint64_t seed) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    stream_.open(path, std::ios::out | std::ios::trunc);
    if (!stream_) throw ConfigError("cannot open event file " + path.string());
    stream_ << "# atvmc-events v" << kTrajectorySchemaMajor << "." << kTrajectorySchemaMinor
            << "\n";
    stream_ << "# config-hash " << config_hash << "\n";
    stream_ << "# seed " << seed << "\n";
    stream_ << "# columns step\ttime\taction\tindices\tdelta_eps_sq\teps_before\teps_after"
               "\tnote\n";
    stream_.flush();
  }

  bool is_open() const { return stream_.is_open(); }

  void write(long step, double time, const ControllerEvent& event) {
    stream_ << step << '\t' << io::format_double(time) << '\t' << to_string(event.action)
            << '\t' << join_ints(event.indices) << '\t' << join_doubles(event.delta_values)
            << '\t' << io::format_double(event.eps_sq_before) << '\t'
            << io::format_double(event.eps_sq_after) << '\t'
            << (event.note.empty() ? "-" : event.note) << '\n';
    stream_.flush();
  }

  void close() { stream_.close(); }

 private:
  static std::string join_ints(const std::vector<int>& values) {
    if (values.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out += ';';
      out += std::to_string(values[i]);
    }
    return out;
  }
  static std::string join_doubles(const std::vector<double>& values) {
    if (values.empty()) return "-";
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out += ';';
      out += io::format_double(values[i]);
    }
    return out;
  }

  std::ofstream stream_;
};

// ---------------------------------------------------------------------------
// Parameter checkpoints
// ---------------------------------------------------------------------------

struct Checkpoint {
  std::string ansatz_kind;
  int sites = 0;
  int density = 0;  // 0 for ansaetze without a hidden density
  std::uint64_t seed = 0;
  double g = 0.0;
  Complex energy{0.0, 0.0};
  double variance = 0.0;
  std::vector<std::string> labels;
  VectorXc values;
};

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream stream(path, std::ios::out | std::ios::trunc);
  if (!stream) throw ConfigError("cannot open checkpoint file " + path.string());
  stream << "# atvmc-checkpoint v1.0\n";
  stream << "# ansatz " << ckpt.ansatz_kind << "\n";
  stream << "# sites " << ckpt.sites << "\n";
  stream << "# density " << ckpt.density << "\n";
  stream << "# seed " << ckpt.seed << "\n";
  stream << "# g " << io::format_double(ckpt.g) << "\n";
  stream << "# energy " << io::format_double(ckpt.energy.real()) << " "
         << io::format_double(ckpt.energy.imag()) << "\n";
  stream << "# variance " << io::format_double(ckpt.variance) << "\n";
  stream << "# count " << ckpt.values.size() << "\n";
  for (Eigen::Index k = 0; k < ckpt.values.size(); ++k) {
    stream << ckpt.labels[k] << '\t' << io::format_double(ckpt.values[k].real()) << '\t'
           << io::format_double(ckpt.values[k].imag()) << '\n';
  }
  stream.flush();
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream stream(path);
  if (!stream) throw ConfigError("cannot read checkpoint file " + path.string());
  Checkpoint ckpt;
  std::string line;
  int line_no = 0;
  long expected = -1;
  while (std::getline(stream, line)) {
    ++line_no;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string key;
      meta >> key;
      if (key == "ansatz") meta >> ckpt.ansatz_kind;
      else if (key == "sites") meta >> ckpt.sites;
      else if (key == "density") meta >> ckpt.density;
      else if (key == "seed") meta >> ckpt.seed;
      else if (key == "g") { std::string v; meta >> v; ckpt.g = io::parse_double(v, where); }
      else if (key == "energy") {
        std::string re, im;
        meta >> re >> im;
        ckpt.energy = Complex(io::parse_double(re, where), io::parse_double(im, where));
      } else if (key == "variance") {
        std::string v;
        meta >> v;
        ckpt.variance = io::parse_double(v, where);
      } else if (key == "count") {
        meta >> expected;
      }
      continue;
    }
    const auto fields = io::split(line, '\t');
    if (fields.size() != 3) throw ConfigError(where + ": expected 'label re im'");
    ckpt.labels.push_back(fields[0]);
    ckpt.values.conservativeResize(ckpt.values.size() + 1);
    ckpt.values[ckpt.values.size() - 1] =
        Complex(io::parse_double(fields[1], where), io::parse_double(fields[2], where));
  }
  if (expected >= 0 && expected != ckpt.values.size()) {
    throw ConfigError(path.string() + ": checkpoint record count mismatch");
  }
  return ckpt;
}

/// Cross-checks a checkpoint against the ansatz it is about to initialize.
inline ParameterState checkpoint_to_state(const Checkpoint& ckpt, const Ansatz& ansatz) {
  if (ckpt.ansatz_kind != ansatz.kind() || ckpt.sites != ansatz.sites() ||
      ckpt.values.size() != ansatz.parameter_count()) {
    throw ConfigError("checkpoint does not match the configured ansatz (" +
                      ckpt.ansatz_kind + ", N=" + std::to_string(ckpt.sites) + ", P=" +
                      std::to_string(ckpt.values.size()) + ")");
  }
  const auto expected_labels = ansatz.parameter_labels();
  for (int k = 0; k < ansatz.parameter_count(); ++k) {
    if (ckpt.labels[k] != expected_labels[k]) {
      throw ConfigError("checkpoint label mismatch at index " + std::to_string(k) + ": '" +
                        ckpt.labels[k] + "' vs '" + expected_labels[k] + "'");
    }
  }
  ParameterState state = ansatz.make_parameter_state();
  state.values = ckpt.values;
  return state;
}

}  // namespace atvmc
