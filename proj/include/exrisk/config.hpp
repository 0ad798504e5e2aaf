#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "exrisk/errors.hpp"
#include "exrisk/experiment.hpp"
#include "exrisk/problem.hpp"
#include "exrisk/text.hpp"

namespace exrisk {

// Flat sectioned key-value config format:
//
//   # comment
//   [problem]
//   target.breakpoints = 0 0.5 1     # optional for a single piece
//   target.piece.0     = 0.1 1.0     # coefficients, ascending powers
//   target.piece.1     = 0.6
//   noise.family       = constant    # constant | piecewise_constant | polynomial
//   noise.values       = 1.0
//   noise.breakpoints  = ...         # piecewise_constant only
//   noise.shape        = rademacher  # rademacher | uniform
//   density.family     = uniform     # uniform | piecewise_constant | polynomial
//   density.values     = ...
//   density.breakpoints= ...
//   bound_a            = 4.0         # optional; defaults to the tight envelope
//
//   [model]
//   degree               = 0         # 0..4
//   partition            = equal     # equal | explicit
//   partition.breakpoints= 0 0.25 1  # explicit only
//
//   [experiment]
//   grid    = 4096:64 16384:128      # n:D pairs
//   trials  = 500
//   regime  = mid                    # mid | small
//   a_minus = 0.1
//   a_plus  = 3.0
//   alpha   = 0.01
//   seed    = 1
//   threads = 0                      # 0 = all hardware threads

namespace detail_config {

struct Entry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

struct RawConfig {
  std::map<std::string, Entry> entries;  // key "section.key"

  const Entry* find(const std::string& key) const {
    const auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }
};

inline RawConfig parse_raw(std::string_view text) {
  RawConfig raw;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                           : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_no) + ": malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "problem" && section != "model" && section != "experiment") {
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown section [" +
                          section + "]");
      }
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key outside a section");
    }
    const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
    const std::string value = std::string(trim(line.substr(eq + 1)));
    if (!raw.entries.emplace(key, Entry{value, line_no}).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key " + key);
    }
  }
  return raw;
}

inline std::vector<double> parse_doubles(const Entry& e, const std::string& key) {
  std::vector<double> out;
  for (const std::string& tok : split_tokens(e.value)) {
    double v = 0.0;
    if (!parse_double(tok, v)) {
      throw ConfigError("config line " + std::to_string(e.line) + ": " + key +
                        ": cannot parse number '" + tok + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw ConfigError("config line " + std::to_string(e.line) + ": " + key + ": empty value");
  }
  return out;
}

inline double get_scalar(const RawConfig& raw, const std::string& key, double fallback) {
  const Entry* e = raw.find(key);
  if (!e) return fallback;
  const auto values = parse_doubles(*e, key);
  if (values.size() != 1) {
    throw ConfigError("config line " + std::to_string(e->line) + ": " + key +
                      ": expected a single number");
  }
  return values[0];
}

inline std::string get_word(const RawConfig& raw, const std::string& key,
                            const std::string& fallback) {
  const Entry* e = raw.find(key);
  if (!e) return fallback;
  const auto toks = split_tokens(e->value);
  if (toks.size() != 1) {
    throw ConfigError("config line " + std::to_string(e->line) + ": " + key +
                      ": expected a single word");
  }
  return toks[0];
}

}  // namespace detail_config

inline ExperimentConfig parse_config_text(std::string_view text) {
  using detail_config::RawConfig;
  const RawConfig raw = detail_config::parse_raw(text);

  // --- target ---
  std::vector<std::vector<double>> pieces;
  for (std::size_t k = 0;; ++k) {
    const auto* e = raw.find("problem.target.piece." + std::to_string(k));
    if (!e) break;
    pieces.push_back(detail_config::parse_doubles(*e, "target.piece." + std::to_string(k)));
  }
  PiecewisePolynomial target;
  if (!pieces.empty()) {
    std::vector<double> breaks{0.0, 1.0};
    if (const auto* e = raw.find("problem.target.breakpoints")) {
      breaks = detail_config::parse_doubles(*e, "target.breakpoints");
    } else if (pieces.size() > 1) {
      throw ConfigError("config: target.breakpoints required for a multi-piece target");
    }
    target = PiecewisePolynomial(std::move(breaks), std::move(pieces));
  } else if (raw.find("problem.target.breakpoints")) {
    throw ConfigError("config: target.breakpoints given but no target.piece.K coefficients");
  }

  // --- noise level ---
  const std::string noise_family = detail_config::get_word(raw, "problem.noise.family", "constant");
  std::vector<double> noise_values{1.0};
  if (const auto* e = raw.find("problem.noise.values")) {
    noise_values = detail_config::parse_doubles(*e, "noise.values");
  }
  NoiseLevel noise = NoiseLevel::constant(1.0);
  if (noise_family == "constant") {
    if (noise_values.size() != 1) throw ConfigError("config: constant noise takes one value");
    noise = NoiseLevel::constant(noise_values[0]);
  } else if (noise_family == "piecewise_constant") {
    const auto* e = raw.find("problem.noise.breakpoints");
    if (!e) throw ConfigError("config: noise.breakpoints required for piecewise_constant noise");
    noise = NoiseLevel::piecewise_constant(detail_config::parse_doubles(*e, "noise.breakpoints"),
                                           std::move(noise_values));
  } else if (noise_family == "polynomial") {
    noise = NoiseLevel::polynomial(std::move(noise_values));
  } else {
    throw ConfigError("config: unknown noise.family '" + noise_family + "'");
  }

  const std::string shape_name = detail_config::get_word(raw, "problem.noise.shape", "rademacher");
  NoiseShape shape = NoiseShape::kRademacher;
  if (shape_name == "uniform") shape = NoiseShape::kUniform;
  else if (shape_name != "rademacher") {
    throw ConfigError("config: unknown noise.shape '" + shape_name + "'");
  }

  // --- design density ---
  const std::string density_family =
      detail_config::get_word(raw, "problem.density.family", "uniform");
  DesignDensity density = DesignDensity::uniform();
  if (density_family == "uniform") {
    // nothing to read
  } else if (density_family == "piecewise_constant") {
    const auto* eb = raw.find("problem.density.breakpoints");
    const auto* ev = raw.find("problem.density.values");
    if (!eb || !ev) {
      throw ConfigError("config: density.breakpoints and density.values required for "
                        "piecewise_constant density");
    }
    density = DesignDensity::piecewise_constant(
        detail_config::parse_doubles(*eb, "density.breakpoints"),
        detail_config::parse_doubles(*ev, "density.values"));
  } else if (density_family == "polynomial") {
    const auto* ev = raw.find("problem.density.values");
    if (!ev) throw ConfigError("config: density.values required for polynomial density");
    density = DesignDensity::polynomial(detail_config::parse_doubles(*ev, "density.values"));
  } else {
    throw ConfigError("config: unknown density.family '" + density_family + "'");
  }

  const double tight_envelope =
      target.sup_norm() + noise.max_value() * noise_support_radius(shape);
  const double bound_a =
      detail_config::get_scalar(raw, "problem.bound_a", std::max(tight_envelope, 1e-12));

  ExperimentConfig config{RegressionProblem(std::move(target), std::move(noise),
                                            std::move(density), shape, bound_a)};

  // --- model ---
  config.degree = static_cast<int>(detail_config::get_scalar(raw, "model.degree", 0.0));
  const std::string partition_kind = detail_config::get_word(raw, "model.partition", "equal");
  if (partition_kind == "explicit") {
    const auto* e = raw.find("model.partition.breakpoints");
    if (!e) throw ConfigError("config: partition.breakpoints required for explicit partition");
    config.equal_width = false;
    config.partition_breakpoints = detail_config::parse_doubles(*e, "partition.breakpoints");
  } else if (partition_kind != "equal") {
    throw ConfigError("config: unknown partition kind '" + partition_kind + "'");
  }

  // --- experiment ---
  const auto* grid_entry = raw.find("experiment.grid");
  if (!grid_entry) throw ConfigError("config: experiment.grid is required");
  for (const std::string& tok : split_tokens(grid_entry->value)) {
    const std::size_t colon = tok.find(':');
    std::uint64_t n = 0, dim = 0;
    if (colon == std::string::npos || !parse_u64(tok.substr(0, colon), n) ||
        !parse_u64(tok.substr(colon + 1), dim)) {
      throw ConfigError("config line " + std::to_string(grid_entry->line) +
                        ": grid entries must be n:D pairs, got '" + tok + "'");
    }
    config.grid.push_back({static_cast<std::size_t>(n), static_cast<std::size_t>(dim)});
  }
  config.trials =
      static_cast<std::size_t>(detail_config::get_scalar(raw, "experiment.trials", 100.0));
  const std::string regime = detail_config::get_word(raw, "experiment.regime", "mid");
  if (regime == "small") config.regime = Regime::kSmall;
  else if (regime != "mid") throw ConfigError("config: unknown regime '" + regime + "'");
  config.a_minus = detail_config::get_scalar(raw, "experiment.a_minus", 0.1);
  config.a_plus = detail_config::get_scalar(raw, "experiment.a_plus", 3.0);
  config.alpha = detail_config::get_scalar(raw, "experiment.alpha", 0.01);
  if (const auto* e = raw.find("experiment.seed")) {
    std::uint64_t seed = 0;
    const auto toks = split_tokens(e->value);
    if (toks.size() != 1 || !parse_u64(toks[0], seed)) {
      throw ConfigError("config line " + std::to_string(e->line) + ": seed must be an unsigned integer");
    }
    config.seed = seed;
  }
  config.threads = static_cast<int>(detail_config::get_scalar(raw, "experiment.threads", 0.0));

  for (const auto& [key, entry] : raw.entries) {
    if (!entry.used) {
      throw ConfigError("config line " + std::to_string(entry.line) + ": unknown key '" + key + "'");
    }
  }

  validate_experiment_config(config);
  return config;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

namespace detail_config {

inline void write_list(std::string& out, const std::string& key,
                       std::span<const double> values) {
  out += key;
  out += " =";
  for (double v : values) {
    out += ' ';
    out += format_g17(v);
  }
  out += '\n';
}

}  // namespace detail_config

// Canonical serialization; parse_config_text(serialize_config(c)) rebuilds an
// equivalent config.
inline std::string serialize_config(const ExperimentConfig& config) {
  using detail_config::write_list;
  const RegressionProblem& p = config.problem;
  std::string out;
  out += "[problem]\n";
  write_list(out, "target.breakpoints", p.target().breakpoints());
  for (std::size_t k = 0; k < p.target().piece_count(); ++k) {
    write_list(out, "target.piece." + std::to_string(k), p.target().piece(k));
  }
  const NoiseLevel& noise = p.noise_level();
  const std::string noise_family =
      noise.family() == FunctionFamily::kConstant ? "constant" : family_name(noise.family());
  out += "noise.family = " + noise_family + "\n";
  if (noise.family() == FunctionFamily::kPiecewiseConstant) {
    write_list(out, "noise.breakpoints", noise.breakpoints());
  }
  write_list(out, "noise.values", noise.values());
  out += "noise.shape = " + noise_shape_name(p.noise_shape()) + "\n";
  const DesignDensity& density = p.design_density();
  out += "density.family = " + family_name(density.family()) + "\n";
  if (density.family() == FunctionFamily::kPiecewiseConstant) {
    write_list(out, "density.breakpoints", density.breakpoints());
    write_list(out, "density.values", density.values());
  } else if (density.family() == FunctionFamily::kPolynomial) {
    write_list(out, "density.values", density.values());
  }
  out += "bound_a = " + format_g17(p.bound_a()) + "\n";
  out += "\n[model]\n";
  out += "degree = " + std::to_string(config.degree) + "\n";
  out += std::string("partition = ") + (config.equal_width ? "equal" : "explicit") + "\n";
  if (!config.equal_width) {
    write_list(out, "partition.breakpoints", config.partition_breakpoints);
  }
  out += "\n[experiment]\n";
  out += "grid =";
  for (const ExperimentCell& cell : config.grid) {
    out += ' ' + std::to_string(cell.n) + ':' + std::to_string(cell.dim);
  }
  out += '\n';
  out += "trials = " + std::to_string(config.trials) + "\n";
  out += std::string("regime = ") + (config.regime == Regime::kMid ? "mid" : "small") + "\n";
  out += "a_minus = " + format_g17(config.a_minus) + "\n";
  out += "a_plus = " + format_g17(config.a_plus) + "\n";
  out += "alpha = " + format_g17(config.alpha) + "\n";
  out += "seed = " + std::to_string(config.seed) + "\n";
  out += "threads = " + std::to_string(config.threads) + "\n";
  return out;
}

}  // namespace exrisk
