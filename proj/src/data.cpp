#include "rrbart/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "rrbart/error.h"
#include "rrbart/stats.h"

namespace rrbart {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::binary: return "binary";
    case ColumnKind::count: return "count";
  }
  return "continuous";
}

std::string to_string(ColumnRole role) { return role == ColumnRole::outcome ? "outcome" : "predictor"; }

ColumnKind parse_kind(const std::string& s) {
  if (s == "continuous") return ColumnKind::continuous;
  if (s == "binary") return ColumnKind::binary;
  if (s == "count") return ColumnKind::count;
  throw DataError("unknown column kind '" + s + "'");
}

ColumnRole parse_role(const std::string& s) {
  if (s == "predictor") return ColumnRole::predictor;
  if (s == "outcome") return ColumnRole::outcome;
  throw DataError("unknown column role '" + s + "'");
}

// ---------------------------------------------------------------------------
// FeatureMatrix

FeatureMatrix::FeatureMatrix(std::size_t n_rows, std::size_t n_cols)
    : n_rows_(n_rows), n_cols_(n_cols), data_(n_rows * n_cols, 0.0) {}

bool FeatureMatrix::has_missing() const {
  return std::any_of(data_.begin(), data_.end(), [](double v) { return std::isnan(v); });
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
  FeatureMatrix out(rows.size(), n_cols_);
  for (std::size_t j = 0; j < n_cols_; ++j) {
    auto src = col(j);
    auto dst = out.col(j);
    for (std::size_t r = 0; r < rows.size(); ++r) dst[r] = src[rows[r]];
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_cols(std::span<const std::size_t> cols) const {
  FeatureMatrix out(n_rows_, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) std::ranges::copy(col(cols[c]), out.col(c).begin());
  return out;
}

// ---------------------------------------------------------------------------
// DataMatrix

DataMatrix::DataMatrix(std::vector<ColumnMeta> columns, std::size_t n_rows, std::vector<double> values,
                       std::vector<std::uint8_t> mask)
    : columns_(std::move(columns)), n_rows_(n_rows), values_(std::move(values)), mask_(std::move(mask)) {
  validate();
}

DataMatrix::DataMatrix(std::vector<ColumnMeta> columns, std::size_t n_rows, std::vector<double> values)
    : columns_(std::move(columns)), n_rows_(n_rows), values_(std::move(values)) {
  mask_.assign(values_.size(), 1);
  validate();
}

void DataMatrix::validate() {
  const std::size_t k = columns_.size();
  if (n_rows_ < 1) throw DataError("data matrix needs at least one row");
  if (k < 2) throw DataError("data matrix needs at least two columns");
  if (values_.size() != n_rows_ * k || mask_.size() != n_rows_ * k)
    throw DataError("data matrix storage does not match its shape");

  std::set<std::string> names;
  std::size_t n_outcome = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (!names.insert(columns_[j].name).second) throw DataError("duplicate column name '" + columns_[j].name + "'");
    if (columns_[j].role == ColumnRole::outcome) {
      ++n_outcome;
      outcome_ = j;
      if (columns_[j].kind != ColumnKind::binary)
        throw DataError("outcome column '" + columns_[j].name + "' must be binary");
    }
  }
  if (n_outcome != 1) throw DataError("exactly one outcome column is required");

  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < n_rows_; ++i) {
      std::size_t c = j * n_rows_ + i;
      if (!mask_[c]) {
        values_[c] = 0.0;
        continue;
      }
      double v = values_[c];
      if (!std::isfinite(v))
        throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column '" + columns_[j].name + "'");
      if (columns_[j].kind == ColumnKind::binary && v != 0.0 && v != 1.0)
        throw DataError("binary column '" + columns_[j].name + "' has value " + format_double(v) + " at row " +
                        std::to_string(i + 1));
    }
  }
}

double DataMatrix::value(std::size_t i, std::size_t j) const {
  if (!observed(i, j))
    throw std::logic_error("read of missing cell (" + std::to_string(i) + ", " + columns_[j].name + ")");
  return values_[j * n_rows_ + i];
}

std::optional<double> DataMatrix::get(std::size_t i, std::size_t j) const {
  if (!observed(i, j)) return std::nullopt;
  return values_[j * n_rows_ + i];
}

std::vector<std::size_t> DataMatrix::predictor_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].role == ColumnRole::predictor) out.push_back(j);
  return out;
}

std::size_t DataMatrix::index_of(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].name == name) return j;
  throw DataError("unknown column '" + name + "'");
}

bool DataMatrix::has_missing() const {
  return std::any_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m == 0; });
}

bool DataMatrix::column_has_missing(std::size_t j) const { return observed_count(j) < n_rows_; }

bool DataMatrix::row_complete(std::size_t i) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (!observed(i, j)) return false;
  return true;
}

std::size_t DataMatrix::observed_count(std::size_t j) const {
  auto b = mask_.begin() + static_cast<std::ptrdiff_t>(j * n_rows_);
  return static_cast<std::size_t>(std::count(b, b + static_cast<std::ptrdiff_t>(n_rows_), 1));
}

DataMatrix DataMatrix::select_rows(std::span<const std::size_t> rows) const {
  const std::size_t k = columns_.size();
  std::vector<double> v(rows.size() * k);
  std::vector<std::uint8_t> m(rows.size() * k);
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t r = 0; r < rows.size(); ++r) {
      v[j * rows.size() + r] = values_[j * n_rows_ + rows[r]];
      m[j * rows.size() + r] = mask_[j * n_rows_ + rows[r]];
    }
  return DataMatrix(columns_, rows.size(), std::move(v), std::move(m));
}

DataMatrix DataMatrix::select_columns(std::span<const std::size_t> cols) const {
  std::vector<ColumnMeta> metas;
  std::vector<double> v;
  std::vector<std::uint8_t> m;
  for (std::size_t c : cols) {
    metas.push_back(columns_[c]);
    v.insert(v.end(), values_.begin() + static_cast<std::ptrdiff_t>(c * n_rows_),
             values_.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_rows_));
    m.insert(m.end(), mask_.begin() + static_cast<std::ptrdiff_t>(c * n_rows_),
             mask_.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_rows_));
  }
  return DataMatrix(std::move(metas), n_rows_, std::move(v), std::move(m));
}

std::vector<std::size_t> DataMatrix::complete_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_rows_; ++i)
    if (row_complete(i)) out.push_back(i);
  return out;
}

DataMatrix DataMatrix::with_mask(std::vector<std::uint8_t> mask) const {
  return DataMatrix(columns_, n_rows_, values_, std::move(mask));
}

DataMatrix DataMatrix::completed(std::vector<double> values) const {
  return DataMatrix(columns_, n_rows_, std::move(values));
}

FeatureMatrix DataMatrix::features(std::span<const std::size_t> cols) const {
  FeatureMatrix out(n_rows_, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    auto dst = out.col(c);
    for (std::size_t i = 0; i < n_rows_; ++i) dst[i] = observed(i, cols[c]) ? values_[cols[c] * n_rows_ + i] : kNaN;
  }
  return out;
}

std::vector<double> DataMatrix::column_values(std::size_t j) const {
  std::vector<double> out(n_rows_);
  for (std::size_t i = 0; i < n_rows_; ++i) out[i] = observed(i, j) ? values_[j * n_rows_ + i] : kNaN;
  return out;
}

bool DataMatrix::operator==(const DataMatrix& other) const {
  return columns_ == other.columns_ && n_rows_ == other.n_rows_ && mask_ == other.mask_ && values_ == other.values_;
}

// ---------------------------------------------------------------------------
// Schema and CSV

std::vector<ColumnMeta> parse_schema(const std::string& text) {
  std::vector<ColumnMeta> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("schema line " + std::to_string(line_no) + ": expected 'name = kind, role'");
    ColumnMeta meta;
    meta.name = trim(line.substr(0, eq));
    auto parts = split(line.substr(eq + 1), ',');
    if (meta.name.empty() || parts.size() != 2)
      throw DataError("schema line " + std::to_string(line_no) + ": expected 'name = kind, role'");
    meta.kind = parse_kind(parts[0]);
    meta.role = parse_role(parts[1]);
    out.push_back(std::move(meta));
  }
  return out;
}

std::vector<ColumnMeta> load_schema(const std::string& path) { return parse_schema(read_file(path)); }

void write_schema(const std::string& path, const std::vector<ColumnMeta>& columns) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& c : columns) out << c.name << " = " << to_string(c.kind) << ", " << to_string(c.role) << "\n";
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

DataMatrix parse_csv(const std::string& text, const std::vector<ColumnMeta>& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty CSV: header row is mandatory");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  auto header = split(line, ',');

  std::unordered_map<std::string, std::size_t> schema_pos;
  for (std::size_t s = 0; s < schema.size(); ++s) schema_pos[schema[s].name] = s;
  std::vector<ColumnMeta> columns;
  for (const auto& name : header) {
    auto it = schema_pos.find(name);
    if (it == schema_pos.end()) throw DataError("schema error: unknown column '" + name + "'");
    columns.push_back(schema[it->second]);
  }
  if (columns.size() != schema.size()) throw DataError("schema error: header does not list every schema column");

  const std::size_t k = columns.size();
  std::vector<std::vector<double>> cols(k);
  std::vector<std::vector<std::uint8_t>> masks(k);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    auto cells = split(line, ',');
    if (cells.size() != k)
      throw DataError("row " + std::to_string(row) + ": expected " + std::to_string(k) + " fields, got " +
                      std::to_string(cells.size()));
    for (std::size_t j = 0; j < k; ++j) {
      const std::string& cell = cells[j];
      if (cell.empty() || cell == "NA") {
        cols[j].push_back(0.0);
        masks[j].push_back(0);
        continue;
      }
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw DataError("parse error at row " + std::to_string(row) + ", column '" + columns[j].name + "': '" + cell +
                        "'");
      if (columns[j].kind == ColumnKind::binary && v != 0.0 && v != 1.0)
        throw DataError("domain error at row " + std::to_string(row) + ", column '" + columns[j].name +
                        "': binary value expected, got '" + cell + "'");
      cols[j].push_back(v);
      masks[j].push_back(1);
    }
  }
  std::vector<double> values;
  std::vector<std::uint8_t> mask;
  values.reserve(row * k);
  mask.reserve(row * k);
  for (std::size_t j = 0; j < k; ++j) {
    values.insert(values.end(), cols[j].begin(), cols[j].end());
    mask.insert(mask.end(), masks[j].begin(), masks[j].end());
  }
  return DataMatrix(std::move(columns), row, std::move(values), std::move(mask));
}

DataMatrix load_csv(const std::string& path, const std::vector<ColumnMeta>& schema) {
  return parse_csv(read_file(path), schema);
}

std::string format_csv(const DataMatrix& dm) {
  std::string out;
  for (std::size_t j = 0; j < dm.cols(); ++j) {
    if (j) out += ',';
    out += dm.column(j).name;
  }
  out += '\n';
  for (std::size_t i = 0; i < dm.rows(); ++i) {
    for (std::size_t j = 0; j < dm.cols(); ++j) {
      if (j) out += ',';
      out += dm.observed(i, j) ? format_double(dm.value(i, j)) : "NA";
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const DataMatrix& dm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << format_csv(dm);
}

// ---------------------------------------------------------------------------
// Diagnostics

MissingnessSummary missingness_summary(const DataMatrix& dm) {
  MissingnessSummary s;
  const double n = static_cast<double>(dm.rows());
  std::size_t missing_cells = 0;
  for (std::size_t j = 0; j < dm.cols(); ++j) {
    std::size_t miss = dm.rows() - dm.observed_count(j);
    missing_cells += miss;
    s.column_missing.push_back(static_cast<double>(miss) / n);
  }
  s.cell_missing = static_cast<double>(missing_cells) / (n * static_cast<double>(dm.cols()));
  for (std::size_t i = 0; i < dm.rows(); ++i)
    if (dm.row_complete(i)) ++s.complete_cases;
  s.incomplete_row_fraction = 1.0 - static_cast<double>(s.complete_cases) / n;
  return s;
}

std::vector<double> pearson_correlations(const DataMatrix& dm) {
  const std::size_t k = dm.cols();
  std::vector<double> r(k * k, kNaN);
  for (std::size_t a = 0; a < k; ++a) {
    r[a * k + a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      std::size_t cnt = 0;
      for (std::size_t i = 0; i < dm.rows(); ++i) {
        if (!dm.observed(i, a) || !dm.observed(i, b)) continue;
        double x = dm.value(i, a), y = dm.value(i, b);
        sa += x;
        sb += y;
        ++cnt;
      }
      if (cnt < 2) continue;
      double ma = sa / static_cast<double>(cnt), mb = sb / static_cast<double>(cnt);
      for (std::size_t i = 0; i < dm.rows(); ++i) {
        if (!dm.observed(i, a) || !dm.observed(i, b)) continue;
        double x = dm.value(i, a) - ma, y = dm.value(i, b) - mb;
        saa += x * x;
        sbb += y * y;
        sab += x * y;
      }
      if (saa <= 0.0 || sbb <= 0.0) continue;
      double c = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
      r[a * k + b] = r[b * k + a] = c;
    }
  }
  return r;
}

double mar_strength_auc(const DataMatrix& dm, std::size_t target, std::span<const std::size_t> drivers) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dm.rows(); ++i) {
    bool ok = std::all_of(drivers.begin(), drivers.end(), [&](std::size_t d) { return dm.observed(i, d); });
    if (ok) rows.push_back(i);
  }
  const std::size_t p = drivers.size() + 1;
  std::vector<int> label(rows.size());
  std::size_t n_missing = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    label[r] = dm.observed(rows[r], target) ? 0 : 1;
    n_missing += static_cast<std::size_t>(label[r]);
  }
  if (n_missing == 0 || n_missing == rows.size())
    throw DataError("MAR strength undefined: '" + dm.column(target).name + "' is fully observed or fully missing");

  Eigen::MatrixXd x(rows.size(), p);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    x(r, 0) = 1.0;
    for (std::size_t d = 0; d < drivers.size(); ++d) x(r, d + 1) = dm.value(rows[r], drivers[d]);
  }
  Eigen::VectorXd yv(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) yv(r) = label[r];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int iter = 0; iter < 25; ++iter) {
    Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd mu(rows.size()), w(rows.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu(i) = inv_logit(eta(i));
      w(i) = std::max(mu(i) * (1.0 - mu(i)), 1e-10);
    }
    Eigen::MatrixXd xtwx = x.transpose() * w.asDiagonal() * x;
    xtwx.diagonal().array() += 1e-8;
    Eigen::VectorXd step = xtwx.ldlt().solve(x.transpose() * (yv - mu));
    if (!step.allFinite()) break;
    beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-10) break;
  }
  Eigen::VectorXd score = x * beta;
  std::vector<double> s(score.data(), score.data() + score.size());
  return rank_auc(s, label);
}

}  // namespace rrbart
