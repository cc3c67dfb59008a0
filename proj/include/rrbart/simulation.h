#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rrbart/config.h"
#include "rrbart/data.h"

namespace rrbart {

enum class MissingnessPreset { y20_overall40, y40_overall60 };

std::string to_string(MissingnessPreset p);
MissingnessPreset parse_preset(const std::string& s);
double preset_outcome_rate(MissingnessPreset p);
double preset_overall_rate(MissingnessPreset p);

// X7..X10 = intercept + loading * (sum of two standardized upstream
// predictors) + N(0, 1) noise.
struct GeneratorConfig {
  std::array<double, 4> intercepts{1.0, 1.0, 0.0, -1.0};
  double loading = 0.4;
  bool gamma_rate = true;  // X6 ~ Gamma(4, rate 6); false reads 6 as the scale

  void write(Config& c, const std::string& prefix) const;
  static GeneratorConfig read(const Config& c, const std::string& prefix);
};

struct ScenarioSpec {
  std::size_t n = 1000;
  std::size_t n_noise = 40;
  MissingnessPreset preset = MissingnessPreset::y40_overall60;
  std::uint64_t seed = 0;
  GeneratorConfig generator;

  void validate() const;
  std::string name() const;
  Config to_config() const;
  static ScenarioSpec from_config(const Config& c);
  bool operator==(const ScenarioSpec& o) const {
    return n == o.n && n_noise == o.n_noise && preset == o.preset && seed == o.seed &&
           generator.intercepts == o.generator.intercepts && generator.loading == o.generator.loading &&
           generator.gamma_rate == o.generator.gamma_rate;
  }
};

// 24-scenario grid (4 sizes x {10, 20, 40} noise x 2 presets) followed by the
// two no-noise scenarios at n = 1000.
std::vector<ScenarioSpec> scenario_presets();

// Column names X1..X10, N1..N<n_noise>, Y; the first half of the noise
// predictors are N(0, 1), the rest Bernoulli(0.5).
std::vector<ColumnMeta> scenario_schema(std::size_t n_noise);

// Logistic outcome model on X1..X10.
double outcome_linear_predictor(std::span<const double> x);
double outcome_probability(std::span<const double> x);

struct GeneratedData {
  DataMatrix data;
  std::vector<double> true_probability;
  std::vector<std::size_t> useful;  // column indices of X1..X10
};

GeneratedData generate_complete(const ScenarioSpec& spec);

struct AmputationPattern {
  std::size_t target = 0;
  std::vector<double> weights;  // one per column; zero = unused
  double proportion = 0.0;      // expected missing fraction of the target
  double strength = 1.5;        // slope on the standardized weighted-sum score

  void validate(const DataMatrix& dm) const;
};

// Right-tail logistic missingness probabilities for one pattern:
// inv_logit(strength * z + shift), z the standardized weighted-sum score, with
// the shift solved by bisection so the mean probability equals proportion.
std::vector<double> missing_probabilities(const DataMatrix& dm, const AmputationPattern& pattern);

DataMatrix ampute(const DataMatrix& dm, std::span<const AmputationPattern> patterns, std::uint64_t seed);

// Preset patterns for a scenario matrix: Y at the preset outcome rate and
// X7..X10 at a common rate solved so that the expected fraction of rows with
// any missing cell equals the preset overall rate. Drivers are X1..X6.
std::vector<AmputationPattern> preset_patterns(const DataMatrix& dm, MissingnessPreset preset);

// Expected fraction of rows with at least one missing cell, assuming
// independent draws per pattern.
double expected_incomplete_rows(const DataMatrix& dm, std::span<const AmputationPattern> patterns);

// Drivers used by the presets for each target, as column names.
std::vector<std::string> preset_drivers(const std::string& target);

}  // namespace rrbart
