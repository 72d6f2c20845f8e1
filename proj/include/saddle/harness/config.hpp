#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "saddle/gad.hpp"
#include "saddle/imf.hpp"
#include "saddle/potentials.hpp"

/**
 * \file config.hpp
 *
 * @brief Experiment configuration: JSON in, validated structs out.
 *
 * Every object level rejects unknown keys, so a typo in a tolerance name is
 * an error rather than a silently ignored default. See README.md for the
 * full schema.
 */

namespace saddle::harness {

enum class Method { imf, gad, newton };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

/// Where the runs start.
struct StartSpec {
  enum class Kind { points, circle, perturbed_minimum };
  Kind kind = Kind::points;

  std::vector<Vector> points;        ///< Kind::points

  // Kind::circle: count points at distance radius from center (geodesic
  // distance when the run is on the sphere).
  Vector center;
  double radius = 0.0;
  int count = 1;
  std::uint64_t seed = 0;

  // Kind::perturbed_minimum: relax from `from` (default: the potential's own
  // starting geometry), then add N(0, sigma^2) noise to the last `tail`
  // coordinates (all of them when tail == 0). count and seed as above.
  std::optional<Vector> from;
  double sigma = 0.0;
  int tail = 0;
  double relax_tol = 1e-10;
};

struct GADConfig {
  GADParams params;
  double dt = 1e-2;
  int max_steps = 10000;
  double tol = 1e-10;
  int record_every = 1;
  /// Initial direction; the min-mode at the start when absent.
  std::optional<Vector> direction;
};

struct NewtonConfig {
  double tol = 1e-10;
  int max_iters = 200;
  double max_step = 10.0;
};

/// Domain-of-attraction grid over [lo.x, hi.x] x [lo.y, hi.y].
struct DoaSpec {
  Eigen::Vector2d lo{-1.5, -1.5};
  Eigen::Vector2d hi{1.5, 2.0};
  int n = 50;
  int budget = 200;
};

enum class TableFormat { csv, json, markdown };

std::string to_string(TableFormat f);
TableFormat table_format_from_string(const std::string& s);

struct OutputSpec {
  std::filesystem::path dir;          ///< empty: nothing is written
  std::vector<TableFormat> formats{TableFormat::csv};
  bool xyz = false;                   ///< final geometries (Morse island only)
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string problem;
  nlohmann::json problem_params = nlohmann::json::object();
  Method method = Method::imf;
  IMFConfig imf;
  GADConfig gad;
  NewtonConfig newton;
  StartSpec start;
  /// Use the potential's known stationary points of the target index as
  /// error references (unless explicit references are given in imf).
  bool known_references = true;
  std::optional<DoaSpec> doa;
  OutputSpec output;
  int threads = 0;                    ///< 0: hardware concurrency
  std::vector<std::string> column_labels;   ///< optional table headers, one per run

  void validate() const;
};

/// Parse and validate; ContractError names the offending key.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Inverse of parse_config (round-trips through parse_config).
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Concrete start points for cfg.start on potential p.
std::vector<Vector> generate_starts(const ExperimentConfig& cfg, const Potential& p);

}  // namespace saddle::harness
