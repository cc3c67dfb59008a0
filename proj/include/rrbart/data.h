#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rrbart {

enum class ColumnKind { continuous, binary, count };
enum class ColumnRole { predictor, outcome };

std::string to_string(ColumnKind kind);
std::string to_string(ColumnRole role);
ColumnKind parse_kind(const std::string& s);
ColumnRole parse_role(const std::string& s);

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  ColumnRole role = ColumnRole::predictor;

  bool operator==(const ColumnMeta&) const = default;
};

// Dense column-major numeric matrix; missing cells are NaN. This is the form
// every model-fitting routine consumes, so masked cells of a DataMatrix are
// never seen by a model as numbers.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_rows, std::size_t n_cols);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return n_cols_; }

  double at(std::size_t i, std::size_t j) const { return data_[j * n_rows_ + i]; }
  double& at(std::size_t i, std::size_t j) { return data_[j * n_rows_ + i]; }

  std::span<const double> col(std::size_t j) const { return {data_.data() + j * n_rows_, n_rows_}; }
  std::span<double> col(std::size_t j) { return {data_.data() + j * n_rows_, n_rows_}; }

  bool has_missing() const;
  FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
  FeatureMatrix select_cols(std::span<const std::size_t> cols) const;

 private:
  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<double> data_;
};

// n x K table with an explicit observed-cell mask. Immutable after
// construction; all transformations return new matrices.
class DataMatrix {
 public:
  DataMatrix() = default;

  // values and mask are column-major, size n * K. Masked-out values are
  // ignored (normalized to 0). Throws DataError on invariant violations.
  DataMatrix(std::vector<ColumnMeta> columns, std::size_t n_rows, std::vector<double> values,
             std::vector<std::uint8_t> mask);

  // Fully observed matrix.
  DataMatrix(std::vector<ColumnMeta> columns, std::size_t n_rows, std::vector<double> values);

  std::size_t rows() const { return n_rows_; }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<ColumnMeta>& columns() const { return columns_; }
  const ColumnMeta& column(std::size_t j) const { return columns_[j]; }

  bool observed(std::size_t i, std::size_t j) const { return mask_[j * n_rows_ + i] != 0; }
  // Value of an observed cell. Reading a missing cell is a logic error.
  double value(std::size_t i, std::size_t j) const;
  // Value or nullopt.
  std::optional<double> get(std::size_t i, std::size_t j) const;

  std::size_t outcome_index() const { return outcome_; }
  std::vector<std::size_t> predictor_indices() const;
  std::size_t index_of(const std::string& name) const;

  bool has_missing() const;
  bool column_has_missing(std::size_t j) const;
  bool row_complete(std::size_t i) const;
  std::size_t observed_count(std::size_t j) const;

  DataMatrix select_rows(std::span<const std::size_t> rows) const;
  DataMatrix select_columns(std::span<const std::size_t> cols) const;
  std::vector<std::size_t> complete_rows() const;

  // Copy with a different mask; cells newly marked missing drop their value.
  DataMatrix with_mask(std::vector<std::uint8_t> mask) const;
  // Copy with every cell observed, taking values from a full column-major array.
  DataMatrix completed(std::vector<double> values) const;

  // Column-major NaN-coded copy of the given columns.
  FeatureMatrix features(std::span<const std::size_t> cols) const;
  // Observed values of column j as a dense vector (NaN at missing cells).
  std::vector<double> column_values(std::size_t j) const;

  const std::vector<std::uint8_t>& mask() const { return mask_; }
  const std::vector<double>& raw_values() const { return values_; }

  bool operator==(const DataMatrix& other) const;

 private:
  void validate();

  std::vector<ColumnMeta> columns_;
  std::size_t n_rows_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
  std::size_t outcome_ = 0;
};

struct MissingnessSummary {
  std::vector<double> column_missing;  // per column, in [0, 1]
  double cell_missing = 0.0;           // over all n * K cells
  std::size_t complete_cases = 0;
  double incomplete_row_fraction = 0.0;  // rows with any missing cell
};

// Schema file: one "name = kind, role" line per column; '#' starts a comment.
std::vector<ColumnMeta> load_schema(const std::string& path);
std::vector<ColumnMeta> parse_schema(const std::string& text);
void write_schema(const std::string& path, const std::vector<ColumnMeta>& columns);

// CSV with a mandatory header; empty cells and the token NA are missing.
DataMatrix load_csv(const std::string& path, const std::vector<ColumnMeta>& schema);
DataMatrix parse_csv(const std::string& text, const std::vector<ColumnMeta>& schema);
std::string format_csv(const DataMatrix& dm);
void write_csv(const std::string& path, const DataMatrix& dm);

// Shortest text that parses back to the same double.
std::string format_double(double v);

MissingnessSummary missingness_summary(const DataMatrix& dm);

// Pairwise-complete Pearson correlations, K x K row-major. Pairs with fewer
// than two complete rows, or zero variance, are NaN.
std::vector<double> pearson_correlations(const DataMatrix& dm);

// AUC of a main-effects logistic score (IRLS, at most 25 iterations) for the
// missingness indicator of target on the drivers.
double mar_strength_auc(const DataMatrix& dm, std::size_t target, std::span<const std::size_t> drivers);

}  // namespace rrbart
