#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace bnpirt {

/// One observed (person, item, score) cell, indices 0-based and dense.
struct Observation {
  int person = 0;
  int item = 0;
  int score = 0;
};

/// A person-level covariate; std::nullopt marks a missing value.
struct CovariateColumn {
  std::string name;
  std::vector<std::optional<double>> values;  // one per person
};

struct ItemResponseData {
  int n_persons = 0;
  int n_items = 0;
  std::vector<Observation> observations;
  std::vector<int> category_counts;  // m_i, highest admissible score per item
  std::vector<std::string> person_ids;
  std::vector<std::string> item_ids;
  std::vector<CovariateColumn> person_covariates;
  std::optional<std::vector<int>> dimension_map;  // d_i in 1..D per item
  std::vector<std::string> warnings;

  /// Throws DataError when an invariant is violated (score above m_i,
  /// duplicate cell, index out of range, ...).
  void validate() const;
  int max_categories() const;
  int n_dimensions() const;
};

enum class ColumnRole { kIntercept, kAbility, kDifficulty, kCovariate, kMissingIndicator };

struct ColumnLabel {
  ColumnRole role = ColumnRole::kIntercept;
  int person = -1;
  int item = -1;
  int category = 0;   // > 0 for item-by-category columns
  int dimension = 0;  // > 0 for multidimensional ability columns
  std::string name;   // display text

  bool operator==(const ColumnLabel&) const = default;
};

struct DesignRow {
  int person = 0;
  int item = 0;
  int response = 0;  // binary u
  int score = 0;     // raw u'
};

/// Binary responses and their design vectors. Rows of `x` are the x_pi; the
/// first column is the intercept.
struct ObservationDesign {
  std::vector<DesignRow> rows;
  std::vector<ColumnLabel> column_labels;
  Eigen::SparseMatrix<double, Eigen::RowMajor> x;
  std::vector<std::string> warnings;

  int dimension() const { return static_cast<int>(column_labels.size()); }
  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  Eigen::VectorXd row_vector(std::size_t k) const;
  std::optional<int> find_column(const std::string& name) const;
};

enum class ModelKind { kDichotomous, kPolytomous, kMultidimensional };

ModelKind parse_model_kind(const std::string& text);
std::string to_string(ModelKind kind);

/// Base design: (1, 1(p=1..N), -1(i=1..I)). Requires every m_i <= 1.
ObservationDesign build_dichotomous(const ItemResponseData& data);

/// Item-by-category indicators 1(i)1(u'=u) with response u = 1(u' > 0).
ObservationDesign build_polytomous(const ItemResponseData& data);

/// Person-by-dimension ability block; the item block follows the
/// dichotomous builder for binary data and the polytomous one otherwise.
ObservationDesign build_multidimensional(const ItemResponseData& data);

/// Appends the person covariates as the last columns, with a missing-value
/// indicator after each covariate that has gaps.
ObservationDesign append_covariates(const ObservationDesign& design, const ItemResponseData& data);

ObservationDesign build_design(const ItemResponseData& data, ModelKind kind);

ItemResponseData ingest_csv(const std::filesystem::path& responses,
                            const std::optional<std::filesystem::path>& covariates = std::nullopt,
                            const std::optional<std::filesystem::path>& dimensions = std::nullopt);

}  // namespace bnpirt
