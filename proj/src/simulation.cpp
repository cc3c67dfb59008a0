#include "rrbart/simulation.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "rrbart/error.h"
#include "rrbart/random.h"
#include "rrbart/stats.h"

namespace rrbart {

std::string to_string(MissingnessPreset p) {
  return p == MissingnessPreset::y20_overall40 ? "Y20_overall40" : "Y40_overall60";
}

MissingnessPreset parse_preset(const std::string& s) {
  if (s == "Y20_overall40") return MissingnessPreset::y20_overall40;
  if (s == "Y40_overall60") return MissingnessPreset::y40_overall60;
  throw ConfigError("unknown missingness preset: " + s);
}

double preset_outcome_rate(MissingnessPreset p) { return p == MissingnessPreset::y20_overall40 ? 0.20 : 0.40; }
double preset_overall_rate(MissingnessPreset p) { return p == MissingnessPreset::y20_overall40 ? 0.40 : 0.60; }

void GeneratorConfig::write(Config& c, const std::string& prefix) const {
  std::string v;
  for (std::size_t i = 0; i < intercepts.size(); ++i) v += (i ? ", " : "") + format_double(intercepts[i]);
  c.set(prefix + "intercepts", v);
  c.set(prefix + "loading", format_double(loading));
  c.set(prefix + "gamma_rate", gamma_rate ? "true" : "false");
}

GeneratorConfig GeneratorConfig::read(const Config& c, const std::string& prefix) {
  GeneratorConfig g;
  auto ic = c.get_doubles(prefix + "intercepts", {g.intercepts.begin(), g.intercepts.end()});
  if (ic.size() != 4) throw ConfigError("generator intercepts need 4 values");
  std::copy(ic.begin(), ic.end(), g.intercepts.begin());
  g.loading = c.get_double(prefix + "loading", g.loading);
  g.gamma_rate = c.get_bool(prefix + "gamma_rate", g.gamma_rate);
  return g;
}

void ScenarioSpec::validate() const {
  if (n < 20) throw ConfigError("scenario needs n >= 20");
  if (n_noise % 2 != 0) throw ConfigError("noise predictor count must be even");
}

std::string ScenarioSpec::name() const {
  return "n" + std::to_string(n) + "_noise" + std::to_string(n_noise) + "_" + to_string(preset);
}

Config ScenarioSpec::to_config() const {
  Config c;
  c.set("scenario.n", std::to_string(n));
  c.set("scenario.n_noise", std::to_string(n_noise));
  c.set("scenario.preset", to_string(preset));
  c.set("scenario.seed", std::to_string(seed));
  generator.write(c, "generator.");
  return c;
}

ScenarioSpec ScenarioSpec::from_config(const Config& c) {
  ScenarioSpec s;
  s.n = static_cast<std::size_t>(c.get_int("scenario.n", static_cast<std::int64_t>(s.n)));
  s.n_noise = static_cast<std::size_t>(c.get_int("scenario.n_noise", static_cast<std::int64_t>(s.n_noise)));
  s.preset = parse_preset(c.get_string("scenario.preset", to_string(s.preset)));
  s.seed = c.get_u64("scenario.seed", s.seed);
  s.generator = GeneratorConfig::read(c, "generator.");
  s.validate();
  return s;
}

std::vector<ScenarioSpec> scenario_presets() {
  std::vector<ScenarioSpec> out;
  for (auto preset : {MissingnessPreset::y20_overall40, MissingnessPreset::y40_overall60})
    for (std::size_t n : {300, 650, 1000, 5000})
      for (std::size_t noise : {10, 20, 40}) {
        ScenarioSpec s;
        s.n = n;
        s.n_noise = noise;
        s.preset = preset;
        out.push_back(s);
      }
  for (auto preset : {MissingnessPreset::y20_overall40, MissingnessPreset::y40_overall60}) {
    ScenarioSpec s;
    s.n = 1000;
    s.n_noise = 0;
    s.preset = preset;
    out.push_back(s);
  }
  return out;
}

std::vector<ColumnMeta> scenario_schema(std::size_t n_noise) {
  std::vector<ColumnMeta> cols;
  for (int j = 1; j <= 10; ++j)
    cols.push_back({"X" + std::to_string(j), j <= 2 ? ColumnKind::binary : ColumnKind::continuous, ColumnRole::predictor});
  for (std::size_t j = 1; j <= n_noise; ++j)
    cols.push_back({"N" + std::to_string(j), j <= n_noise / 2 ? ColumnKind::continuous : ColumnKind::binary,
                    ColumnRole::predictor});
  cols.push_back({"Y", ColumnKind::binary, ColumnRole::outcome});
  return cols;
}

double outcome_linear_predictor(std::span<const double> x) {
  if (x.size() < 10) throw DataError("outcome model needs X1..X10");
  const double pi = 3.14159265358979323846;
  auto x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3], x5 = x[4], x6 = x[5], x7 = x[6], x8 = x[7], x9 = x[8], x10 = x[9];
  return -2.7 + 1.8 * x1 + 0.5 * x2 + 1.1 * x3 - 0.4 * std::exp(x5) - 0.4 * (x6 - 3.5) * (x6 - 3.5) +
         0.3 * (x7 - 1) * (x7 - 1) * (x7 - 1) + 1.1 * x8 - 1.1 * x10 + 5.0 * std::sin(0.1 * pi * x4 * x9) -
         0.4 * x5 * x10 * x10 + 0.4 * x3 * x3 * x8;
}

double outcome_probability(std::span<const double> x) { return inv_logit(outcome_linear_predictor(x)); }

GeneratedData generate_complete(const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n, k = 10 + spec.n_noise + 1;
  const auto& g = spec.generator;
  Rng rng(derive_seed(spec.seed, 0x6E6));
  std::vector<double> v(n * k);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return v[j * n + i]; };
  const double gamma_scale = g.gamma_rate ? 1.0 / 6.0 : 6.0;
  const double x6_mean = 4.0 * gamma_scale, x6_sd = 2.0 * gamma_scale;
  const double sd78 = std::sqrt(2.0 * g.loading * g.loading + 1.0);
  GeneratedData out;
  out.true_probability.resize(n);
  std::array<double, 10> x{};
  for (std::size_t i = 0; i < n; ++i) {
    x[0] = rng.bernoulli(0.5);
    x[1] = rng.bernoulli(0.5);
    x[2] = rng.normal();
    x[3] = rng.normal();
    x[4] = rng.normal();
    x[5] = rng.gamma(4.0, gamma_scale);
    double z6 = (x[5] - x6_mean) / x6_sd;
    x[6] = g.intercepts[0] + g.loading * (x[2] + x[3]) + rng.normal();
    x[7] = g.intercepts[1] + g.loading * (x[4] + z6) + rng.normal();
    double z7 = (x[6] - g.intercepts[0]) / sd78;
    double z8 = (x[7] - g.intercepts[1]) / sd78;
    x[8] = g.intercepts[2] + g.loading * (x[2] + z7) + rng.normal();
    x[9] = g.intercepts[3] + g.loading * (x[3] + z8) + rng.normal();
    for (std::size_t j = 0; j < 10; ++j) at(i, j) = x[j];
    for (std::size_t j = 0; j < spec.n_noise; ++j)
      at(i, 10 + j) = j < spec.n_noise / 2 ? rng.normal() : static_cast<double>(rng.bernoulli(0.5));
    double p = outcome_probability(x);
    out.true_probability[i] = p;
    at(i, k - 1) = rng.bernoulli(p);
  }
  out.data = DataMatrix(scenario_schema(spec.n_noise), n, std::move(v));
  for (std::size_t j = 0; j < 10; ++j) out.useful.push_back(j);
  return out;
}

void AmputationPattern::validate(const DataMatrix& dm) const {
  if (target >= dm.cols()) throw ConfigError("amputation target out of range");
  if (weights.size() != dm.cols()) throw ConfigError("amputation weights need one entry per column");
  if (!(proportion > 0.0 && proportion < 1.0)) throw ConfigError("amputation proportion must lie strictly in (0, 1)");
  if (!(strength > 0.0)) throw ConfigError("amputation strength must be positive");
  bool any = false;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (weights[j] == 0.0) continue;
    any = true;
    if (j == target) throw ConfigError("amputation drivers must exclude the target");
    if (dm.column_has_missing(j)) throw DataError("amputation driver '" + dm.column(j).name + "' has missing values");
  }
  if (!any) throw ConfigError("amputation pattern needs at least one nonzero weight");
}

std::vector<double> missing_probabilities(const DataMatrix& dm, const AmputationPattern& pattern) {
  pattern.validate(dm);
  const std::size_t n = dm.rows();
  std::vector<double> z(n, 0.0);
  for (std::size_t j = 0; j < dm.cols(); ++j) {
    if (pattern.weights[j] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) z[i] += pattern.weights[j] * dm.value(i, j);
  }
  double mu = mean(z), sd = std::sqrt(sample_variance(z));
  for (auto& v : z) v = sd > 0 ? (v - mu) / sd : 0.0;
  auto mean_prob = [&](double shift) {
    double s = 0.0;
    for (double v : z) s += inv_logit(pattern.strength * v + shift);
    return s / static_cast<double>(n);
  };
  double lo = -60.0, hi = 60.0;
  while (hi - lo > 1e-6) {
    double mid = 0.5 * (lo + hi);
    (mean_prob(mid) < pattern.proportion ? lo : hi) = mid;
  }
  const double shift = 0.5 * (lo + hi);
  if (std::abs(mean_prob(shift) - pattern.proportion) > 1e-3)
    throw DataError("missing proportion " + format_double(pattern.proportion) + " is unattainable");
  for (auto& v : z) v = inv_logit(pattern.strength * v + shift);
  return z;
}

DataMatrix ampute(const DataMatrix& dm, std::span<const AmputationPattern> patterns, std::uint64_t seed) {
  const std::size_t n = dm.rows();
  std::vector<std::uint8_t> mask = dm.mask();
  for (std::size_t t = 0; t < patterns.size(); ++t) {
    const auto& p = patterns[t];
    if (dm.column_has_missing(p.target))
      throw DataError("amputation target '" + dm.column(p.target).name + "' already has missing values");
    auto prob = missing_probabilities(dm, p);
    Rng rng(derive_seed(seed, t));
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(prob[i])) mask[p.target * n + i] = 0;
  }
  return dm.with_mask(std::move(mask));
}

double expected_incomplete_rows(const DataMatrix& dm, std::span<const AmputationPattern> patterns) {
  const std::size_t n = dm.rows();
  std::vector<double> keep(n, 1.0);
  for (const auto& p : patterns) {
    auto prob = missing_probabilities(dm, p);
    for (std::size_t i = 0; i < n; ++i) keep[i] *= 1.0 - prob[i];
  }
  double s = 0.0;
  for (double k : keep) s += 1.0 - k;
  return s / static_cast<double>(n);
}

std::vector<std::string> preset_drivers(const std::string& target) {
  static const std::map<std::string, std::vector<std::string>> drivers{
      {"X7", {"X1", "X5"}}, {"X8", {"X2", "X3"}}, {"X9", {"X4", "X6"}}, {"X10", {"X1", "X6"}}, {"Y", {"X1", "X2", "X5"}}};
  auto it = drivers.find(target);
  if (it == drivers.end()) throw ConfigError("no preset drivers for " + target);
  return it->second;
}

std::vector<AmputationPattern> preset_patterns(const DataMatrix& dm, MissingnessPreset preset) {
  auto make = [&](const std::string& target, double prop) {
    AmputationPattern p;
    p.target = dm.index_of(target);
    p.weights.assign(dm.cols(), 0.0);
    for (const auto& d : preset_drivers(target)) p.weights[dm.index_of(d)] = 1.0;
    p.proportion = prop;
    return p;
  };
  const double y_rate = preset_outcome_rate(preset), overall = preset_overall_rate(preset);
  std::vector<AmputationPattern> patterns{make("Y", y_rate)};
  for (const char* t : {"X7", "X8", "X9", "X10"}) patterns.push_back(make(t, 0.5));

  auto with_rate = [&](double q) {
    for (std::size_t t = 1; t < patterns.size(); ++t) patterns[t].proportion = q;
    return expected_incomplete_rows(dm, patterns);
  };
  double lo = 1e-4, hi = overall;
  if (with_rate(lo) > overall) throw DataError("outcome missingness alone exceeds the overall target");
  while (hi - lo > 1e-6) {
    double mid = 0.5 * (lo + hi);
    (with_rate(mid) < overall ? lo : hi) = mid;
  }
  with_rate(0.5 * (lo + hi));
  return patterns;
}

}  // namespace rrbart
