#include "bnpirt/design.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "bnpirt/errors.hpp"

namespace bnpirt {

void ItemResponseData::validate() const {
  if (n_persons <= 0 || n_items <= 0) throw DataError("data must have at least one person and one item");
  if (static_cast<int>(category_counts.size()) != n_items)
    throw DataError("category_counts must have one entry per item");
  std::set<std::pair<int, int>> seen;
  for (const auto& obs : observations) {
    if (obs.person < 0 || obs.person >= n_persons || obs.item < 0 || obs.item >= n_items)
      throw DataError("observation index out of range");
    if (obs.score < 0 || obs.score > category_counts[obs.item])
      throw DataError("score " + std::to_string(obs.score) + " outside 0.." +
                      std::to_string(category_counts[obs.item]) + " for item " +
                      std::to_string(obs.item + 1));
    if (!seen.emplace(obs.person, obs.item).second)
      throw DataError("duplicate observation for person " + std::to_string(obs.person + 1) + ", item " +
                      std::to_string(obs.item + 1));
  }
  for (const auto& cov : person_covariates) {
    if (static_cast<int>(cov.values.size()) != n_persons)
      throw DataError("covariate '" + cov.name + "' must have one value per person");
  }
  if (dimension_map) {
    if (static_cast<int>(dimension_map->size()) != n_items)
      throw DataError("dimension map must assign every item");
    for (int d : *dimension_map)
      if (d < 1) throw DataError("item dimensions must be positive");
  }
}

int ItemResponseData::max_categories() const {
  return category_counts.empty() ? 0 : *std::max_element(category_counts.begin(), category_counts.end());
}

int ItemResponseData::n_dimensions() const {
  if (!dimension_map || dimension_map->empty()) return 1;
  return *std::max_element(dimension_map->begin(), dimension_map->end());
}

Eigen::VectorXd ObservationDesign::row_vector(std::size_t k) const {
  return Eigen::VectorXd(x.row(static_cast<Eigen::Index>(k)).transpose());
}

std::optional<int> ObservationDesign::find_column(const std::string& name) const {
  for (std::size_t c = 0; c < column_labels.size(); ++c)
    if (column_labels[c].name == name) return static_cast<int>(c);
  return std::nullopt;
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "dichotomous") return ModelKind::kDichotomous;
  if (text == "polytomous") return ModelKind::kPolytomous;
  if (text == "multidimensional") return ModelKind::kMultidimensional;
  throw std::invalid_argument("unknown model kind '" + text + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kDichotomous: return "dichotomous";
    case ModelKind::kPolytomous: return "polytomous";
    case ModelKind::kMultidimensional: return "multidimensional";
  }
  return "unknown";
}

namespace {

using Triplet = Eigen::Triplet<double>;

enum class ItemBlock { kSignedItem, kItemCategory };

ColumnLabel intercept_label() { return {ColumnRole::kIntercept, -1, -1, 0, 0, "(Intercept)"}; }

void add_person_block(const ItemResponseData& data, int n_dims, std::vector<ColumnLabel>& labels) {
  for (int d = 1; d <= n_dims; ++d) {
    for (int p = 0; p < data.n_persons; ++p) {
      ColumnLabel label{ColumnRole::kAbility, p, -1, 0, 0, ""};
      if (n_dims > 1 || data.dimension_map) {
        label.dimension = d;
        label.name = "theta[" + data.person_ids[p] + "|d" + std::to_string(d) + "]";
      } else {
        label.name = "theta[" + data.person_ids[p] + "]";
      }
      labels.push_back(std::move(label));
    }
  }
}

void add_item_block(const ItemResponseData& data, ItemBlock block, std::vector<ColumnLabel>& labels) {
  if (block == ItemBlock::kSignedItem) {
    for (int i = 0; i < data.n_items; ++i)
      labels.push_back({ColumnRole::kDifficulty, -1, i, 0, 0, "b[" + data.item_ids[i] + "]"});
    return;
  }
  const int m_star = data.max_categories();
  for (int u = 1; u <= m_star; ++u)
    for (int i = 0; i < data.n_items; ++i)
      labels.push_back({ColumnRole::kDifficulty, -1, i, u, 0,
                        "b[" + data.item_ids[i] + "|" + std::to_string(u) + "]"});
}

ObservationDesign assemble(const ItemResponseData& data, ItemBlock block, bool multidimensional) {
  data.validate();
  const int n_dims = multidimensional ? data.n_dimensions() : 1;
  ObservationDesign design;
  design.column_labels.push_back(intercept_label());
  add_person_block(data, n_dims, design.column_labels);
  const int item_offset = 1 + data.n_persons * n_dims;
  add_item_block(data, block, design.column_labels);

  std::vector<Triplet> triplets;
  triplets.reserve(data.observations.size() * 3);
  design.rows.reserve(data.observations.size());
  for (std::size_t k = 0; k < data.observations.size(); ++k) {
    const auto& obs = data.observations[k];
    const auto row = static_cast<int>(k);
    const int response = obs.score > 0 ? 1 : 0;
    design.rows.push_back({obs.person, obs.item, response, obs.score});
    triplets.emplace_back(row, 0, 1.0);
    const int d = multidimensional ? (*data.dimension_map)[obs.item] : 1;
    triplets.emplace_back(row, 1 + (d - 1) * data.n_persons + obs.person, 1.0);
    if (block == ItemBlock::kSignedItem) {
      triplets.emplace_back(row, item_offset + obs.item, -1.0);
    } else if (obs.score > 0) {
      triplets.emplace_back(row, item_offset + (obs.score - 1) * data.n_items + obs.item, 1.0);
    }
  }
  design.x.resize(static_cast<Eigen::Index>(design.rows.size()), design.dimension());
  design.x.setFromTriplets(triplets.begin(), triplets.end());
  design.x.makeCompressed();
  return design;
}

}  // namespace

ObservationDesign build_dichotomous(const ItemResponseData& data) {
  for (int i = 0; i < data.n_items; ++i)
    if (data.category_counts[i] > 1)
      throw WrongBuilderError("item " + data.item_ids[i] + " has " + std::to_string(data.category_counts[i] + 1) +
                              " score categories; use build_polytomous");
  return assemble(data, ItemBlock::kSignedItem, false);
}

ObservationDesign build_polytomous(const ItemResponseData& data) {
  return assemble(data, ItemBlock::kItemCategory, false);
}

ObservationDesign build_multidimensional(const ItemResponseData& data) {
  if (!data.dimension_map) throw DataError("multidimensional design requires an item dimension map");
  const int n_dims = data.n_dimensions();
  if (n_dims > data.n_items) throw DataError("more dimensions than items");
  const bool binary = data.max_categories() <= 1;
  return assemble(data, binary ? ItemBlock::kSignedItem : ItemBlock::kItemCategory, true);
}

ObservationDesign append_covariates(const ObservationDesign& design, const ItemResponseData& data) {
  if (data.person_covariates.empty()) return design;
  ObservationDesign out = design;

  // Column values per person after imputation and scaling.
  std::vector<std::vector<double>> columns;
  for (const auto& cov : data.person_covariates) {
    std::vector<double> observed;
    for (const auto& v : cov.values)
      if (v) observed.push_back(*v);
    if (observed.empty()) throw DataError("covariate '" + cov.name + "' has no observed values");
    const bool binary = std::all_of(observed.begin(), observed.end(), [](double v) { return v == 0.0 || v == 1.0; });
    const bool has_missing = observed.size() < cov.values.size();

    double fill;
    if (binary) {
      const auto ones = std::count(observed.begin(), observed.end(), 1.0);
      fill = 2 * ones > static_cast<long>(observed.size()) ? 1.0 : 0.0;  // mode, ties to 0
    } else {
      std::vector<double> sorted = observed;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      fill = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }

    double center = 0.0, scale = 1.0;
    if (!binary) {
      const double mean = std::accumulate(observed.begin(), observed.end(), 0.0) / observed.size();
      double ss = 0.0;
      for (double v : observed) ss += (v - mean) * (v - mean);
      const double sd = observed.size() > 1 ? std::sqrt(ss / (observed.size() - 1)) : 0.0;
      if (sd > 0.0) {
        center = mean;
        scale = sd;
      } else {
        out.warnings.push_back("covariate '" + cov.name + "' has zero variance; left unstandardized");
      }
    }

    std::vector<double> values(cov.values.size());
    std::vector<double> missing(cov.values.size(), 0.0);
    for (std::size_t p = 0; p < cov.values.size(); ++p) {
      const double raw = cov.values[p] ? *cov.values[p] : fill;
      values[p] = (raw - center) / scale;
      if (!cov.values[p]) missing[p] = 1.0;
    }
    out.column_labels.push_back({ColumnRole::kCovariate, -1, -1, 0, 0, cov.name});
    columns.push_back(std::move(values));
    if (has_missing) {
      out.column_labels.push_back({ColumnRole::kMissingIndicator, -1, -1, 0, 0, "Miss:" + cov.name});
      columns.push_back(std::move(missing));
    }
  }

  const int old_dim = design.dimension();
  std::vector<Triplet> triplets;
  triplets.reserve(design.x.nonZeros() + design.size() * columns.size());
  for (int r = 0; r < design.x.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(design.x, r); it; ++it)
      triplets.emplace_back(r, static_cast<int>(it.col()), it.value());
  for (std::size_t k = 0; k < design.rows.size(); ++k) {
    const int p = design.rows[k].person;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const double v = columns[c][p];
      if (v != 0.0) triplets.emplace_back(static_cast<int>(k), old_dim + static_cast<int>(c), v);
    }
  }
  out.x.resize(static_cast<Eigen::Index>(design.size()), out.dimension());
  out.x.setFromTriplets(triplets.begin(), triplets.end());
  out.x.makeCompressed();
  return out;
}

ObservationDesign build_design(const ItemResponseData& data, ModelKind kind) {
  ObservationDesign design;
  switch (kind) {
    case ModelKind::kDichotomous: design = build_dichotomous(data); break;
    case ModelKind::kPolytomous: design = build_polytomous(data); break;
    case ModelKind::kMultidimensional: design = build_multidimensional(data); break;
  }
  return append_covariates(design, data);
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

struct CsvFile {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line, fields)
};

CsvFile read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  CsvFile csv{path.string(), {}, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (csv.header.empty()) {
      csv.header = split_fields(line);
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() != csv.header.size())
      throw ParseError(csv.path, line_no,
                       "expected " + std::to_string(csv.header.size()) + " fields, found " + std::to_string(fields.size()));
    csv.rows.emplace_back(line_no, std::move(fields));
  }
  if (csv.header.empty()) throw DataError(csv.path + ": missing header");
  return csv;
}

long long parse_integer(const CsvFile& csv, std::size_t line, const std::string& field, const char* what) {
  long long value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw ParseError(csv.path, line, std::string("invalid ") + what + " '" + field + "'");
  return value;
}

double parse_real(const CsvFile& csv, std::size_t line, const std::string& field, const std::string& what) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw ParseError(csv.path, line, "invalid value '" + field + "' for " + what);
  return value;
}

void expect_header(const CsvFile& csv, const std::vector<std::string>& expected) {
  if (csv.header.size() < expected.size())
    throw ParseError(csv.path, 1, "header must start with " + expected.front());
  for (std::size_t k = 0; k < expected.size(); ++k)
    if (csv.header[k] != expected[k])
      throw ParseError(csv.path, 1, "expected header column '" + expected[k] + "', found '" + csv.header[k] + "'");
}

}  // namespace

ItemResponseData ingest_csv(const std::filesystem::path& responses,
                            const std::optional<std::filesystem::path>& covariates,
                            const std::optional<std::filesystem::path>& dimensions) {
  const CsvFile csv = read_csv(responses);
  expect_header(csv, {"person", "item", "score"});
  if (csv.header.size() != 3) throw ParseError(csv.path, 1, "responses file must have exactly person,item,score");

  struct Raw {
    long long person, item, score;
    std::size_t line;
  };
  std::vector<Raw> raw;
  raw.reserve(csv.rows.size());
  std::set<long long> persons, items;
  for (const auto& [line, f] : csv.rows) {
    Raw r{parse_integer(csv, line, f[0], "person"), parse_integer(csv, line, f[1], "item"),
          parse_integer(csv, line, f[2], "score"), line};
    if (r.score < 0) throw ParseError(csv.path, line, "negative score");
    persons.insert(r.person);
    items.insert(r.item);
    raw.push_back(r);
  }
  if (raw.empty()) throw DataError(csv.path + ": no observations");

  ItemResponseData data;
  std::map<long long, int> person_index, item_index;
  for (long long id : persons) {
    person_index[id] = data.n_persons++;
    data.person_ids.push_back(std::to_string(id));
  }
  for (long long id : items) {
    item_index[id] = data.n_items++;
    data.item_ids.push_back(std::to_string(id));
  }
  data.category_counts.assign(data.n_items, 0);
  std::map<std::pair<int, int>, std::size_t> first_line;
  for (const auto& r : raw) {
    const Observation obs{person_index[r.person], item_index[r.item], static_cast<int>(r.score)};
    const auto [it, inserted] = first_line.emplace(std::make_pair(obs.person, obs.item), r.line);
    if (!inserted)
      throw DataError(csv.path + ":" + std::to_string(r.line) + ": duplicate cell (person " +
                      std::to_string(r.person) + ", item " + std::to_string(r.item) + "), first seen on line " +
                      std::to_string(it->second));
    data.category_counts[obs.item] = std::max(data.category_counts[obs.item], obs.score);
    data.observations.push_back(obs);
  }

  if (covariates) {
    const CsvFile cov = read_csv(*covariates);
    expect_header(cov, {"person"});
    if (cov.header.size() < 2) throw ParseError(cov.path, 1, "covariates file has no covariate columns");
    for (std::size_t c = 1; c < cov.header.size(); ++c)
      data.person_covariates.push_back({cov.header[c], std::vector<std::optional<double>>(data.n_persons)});
    std::set<int> covered;
    for (const auto& [line, f] : cov.rows) {
      const long long id = parse_integer(cov, line, f[0], "person");
      const auto it = person_index.find(id);
      if (it == person_index.end()) {
        data.warnings.push_back("covariates for unknown person " + std::to_string(id) + " ignored");
        continue;
      }
      if (!covered.insert(it->second).second)
        throw DataError(cov.path + ":" + std::to_string(line) + ": duplicate covariate row for person " +
                        std::to_string(id));
      for (std::size_t c = 1; c < f.size(); ++c)
        if (!f[c].empty()) data.person_covariates[c - 1].values[it->second] = parse_real(cov, line, f[c], cov.header[c]);
    }
  }

  if (dimensions) {
    const CsvFile dim = read_csv(*dimensions);
    expect_header(dim, {"item", "dimension"});
    std::vector<int> map(data.n_items, 0);
    for (const auto& [line, f] : dim.rows) {
      const long long id = parse_integer(dim, line, f[0], "item");
      const long long d = parse_integer(dim, line, f[1], "dimension");
      if (d < 1) throw ParseError(dim.path, line, "dimension must be >= 1");
      const auto it = item_index.find(id);
      if (it == item_index.end()) continue;
      map[it->second] = static_cast<int>(d);
    }
    for (int i = 0; i < data.n_items; ++i)
      if (map[i] == 0) throw DataError(dim.path + ": item " + data.item_ids[i] + " has no dimension");
    data.dimension_map = std::move(map);
  }

  data.validate();
  return data;
}

}  // namespace bnpirt
