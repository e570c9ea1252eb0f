#include "disdf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "disdf/errors.hpp"
#include "disdf/random.hpp"

namespace disdf {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    cells.emplace_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    return std::nullopt;
  }
  return value;
}

struct RawTable {
  std::vector<std::string> header;
  // Each row remembers its 1-based line number for diagnostics.
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

RawTable read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  RawTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    table.rows.emplace_back(line_no, split_row(line));
  }
  if (in.bad()) fail(ErrorCode::kIo, "read error on '" + path.string() + "'");
  return table;
}

std::size_t resolve_column(const LabelColumn& column,
                           const std::vector<std::string>& header,
                           std::size_t width, const std::string& file) {
  if (const auto* index = std::get_if<std::size_t>(&column)) {
    if (*index >= width) {
      fail(ErrorCode::kInvalidArgument,
           file + ": label column " + std::to_string(*index) +
               " out of range (table has " + std::to_string(width) +
               " columns)");
    }
    return *index;
  }
  const auto& name = std::get<std::string>(column);
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    fail(ErrorCode::kInvalidArgument,
         file + ": no column named '" + name + "'" +
             (header.empty() ? " (file has no header row)" : ""));
  }
  return static_cast<std::size_t>(it - header.begin());
}

// Header iff the first row has a non-numeric cell outside `skip_column`.
// When the label column is given by name the first row is a header by
// definition.
void detect_header(RawTable& table, const std::optional<LabelColumn>& column) {
  if (table.rows.empty()) return;
  const auto& first = table.rows.front().second;
  bool header = column && std::holds_alternative<std::string>(*column);
  if (!header) {
    std::optional<std::size_t> skip;
    if (column) skip = std::get<std::size_t>(*column);
    for (std::size_t c = 0; c < first.size(); ++c) {
      if (skip && *skip == c) continue;
      if (!parse_number(first[c])) {
        header = true;
        break;
      }
    }
  }
  if (header) {
    table.header = first;
    table.rows.erase(table.rows.begin());
  }
}

void check_width(const RawTable& table, std::size_t width,
                 const std::string& file) {
  for (const auto& [line_no, cells] : table.rows) {
    if (cells.size() != width) {
      fail(ErrorCode::kRaggedRow,
           file + ": row at line " + std::to_string(line_no) + " has " +
               std::to_string(cells.size()) + " columns, expected " +
               std::to_string(width));
    }
  }
}

double parse_feature(const std::string& cell, std::size_t line_no,
                     std::size_t column, const std::string& file) {
  const auto value = parse_number(cell);
  if (!value || !std::isfinite(*value)) {
    fail(ErrorCode::kNonNumeric,
         file + ": line " + std::to_string(line_no) + ", column " +
             std::to_string(column) + ": '" + cell +
             "' is not a finite number");
  }
  return *value;
}

}  // namespace

void validate(const Dataset& ds) {
  if (ds.features.rows() != ds.labels.size()) {
    fail(ErrorCode::kInvalidArgument, "feature rows != label count");
  }
  if (ds.num_classes < 2) {
    fail(ErrorCode::kSingleClass, "dataset needs at least 2 classes");
  }
  for (int y : ds.labels) {
    if (y < 0 || y >= ds.num_classes) {
      fail(ErrorCode::kInvalidArgument,
           "label " + std::to_string(y) + " outside 0.." +
               std::to_string(ds.num_classes - 1));
    }
  }
  for (double v : ds.features.data()) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::kNonNumeric, "non-finite feature value");
    }
  }
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> rows) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  out.features = Matrix(rows.size(), ds.feature_dim());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = ds.features.row(rows[i]);
    std::copy(src.begin(), src.end(), out.features.row(i).begin());
    out.labels.push_back(ds.labels[rows[i]]);
  }
  return out;
}

LabelColumn parse_label_column(const std::string& text) {
  std::size_t index = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), index);
  if (ec == std::errc() && ptr == text.data() + text.size() && !text.empty()) {
    return index;
  }
  return text;
}

Dataset load_csv(const std::filesystem::path& path,
                 const std::optional<LabelColumn>& label_column) {
  const std::string file = path.string();
  RawTable table = read_rows(path);
  if (table.rows.empty()) {
    fail(ErrorCode::kSingleClass, file + ": no data rows (need >= 2 classes)");
  }
  const std::size_t width = table.rows.front().second.size();
  if (width < 2) {
    fail(ErrorCode::kInvalidArgument,
         file + ": need at least one feature column and a label column");
  }
  const LabelColumn column = label_column.value_or(width - 1);
  if (const auto* idx = std::get_if<std::size_t>(&column); idx && *idx >= width) {
    resolve_column(column, {}, width, file);
  }
  detect_header(table, column);
  const std::size_t label_col = resolve_column(column, table.header, width, file);
  check_width(table, width, file);

  Dataset ds;
  ds.features = Matrix(table.rows.size(), width - 1);
  ds.labels.reserve(table.rows.size());
  std::unordered_map<std::string, int> codes;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& [line_no, cells] = table.rows[r];
    std::size_t f = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_col) continue;
      ds.features(r, f++) = parse_feature(cells[c], line_no, c, file);
    }
    const std::string& label = cells[label_col];
    if (label.empty()) {
      fail(ErrorCode::kNonNumeric, file + ": line " + std::to_string(line_no) +
                                       ": empty label");
    }
    auto [it, inserted] = codes.try_emplace(label, ds.num_classes);
    if (inserted) {
      ++ds.num_classes;
      ds.class_names.push_back(label);
    }
    ds.labels.push_back(it->second);
  }
  if (ds.num_classes < 2) {
    fail(ErrorCode::kSingleClass,
         file + ": only one distinct label ('" + ds.class_names.front() + "')");
  }
  return ds;
}

Matrix load_feature_csv(const std::filesystem::path& path,
                        const std::optional<LabelColumn>& drop_column) {
  const std::string file = path.string();
  RawTable table = read_rows(path);
  if (table.rows.empty()) return {};
  const std::size_t width = table.rows.front().second.size();
  if (drop_column) {
    if (const auto* idx = std::get_if<std::size_t>(&*drop_column);
        idx && *idx >= width) {
      resolve_column(*drop_column, {}, width, file);
    }
  }
  detect_header(table, drop_column);
  std::optional<std::size_t> skip;
  if (drop_column) skip = resolve_column(*drop_column, table.header, width, file);
  check_width(table, width, file);

  const std::size_t dim = width - (skip ? 1 : 0);
  Matrix out(table.rows.size(), dim);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& [line_no, cells] = table.rows[r];
    std::size_t f = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (skip && *skip == c) continue;
      out(r, f++) = parse_feature(cells[c], line_no, c, file);
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, std::size_t n_train,
                                  std::size_t n_test, std::uint64_t seed,
                                  bool stratified) {
  const std::size_t n = ds.size();
  if (n_train + n_test > n) {
    fail(ErrorCode::kInvalidArgument,
         "split: n_train + n_test = " + std::to_string(n_train + n_test) +
             " exceeds dataset size " + std::to_string(n));
  }
  Rng rng(derive_seed(seed, {0x5117}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  if (!stratified) {
    train.assign(order.begin(), order.begin() + n_train);
    test.assign(order.begin() + n_train, order.begin() + n_train + n_test);
  } else {
    // Largest-remainder quotas per class, applied first to train then to
    // test over what remains of each class.
    const auto C = static_cast<std::size_t>(ds.num_classes);
    std::vector<std::vector<std::size_t>> by_class(C);
    for (std::size_t i : order) by_class[ds.labels[i]].push_back(i);

    auto quotas = [&](std::size_t total, const std::vector<std::size_t>& avail) {
      const std::size_t pool = std::accumulate(avail.begin(), avail.end(), std::size_t{0});
      std::vector<std::size_t> q(C, 0);
      std::vector<std::pair<double, std::size_t>> rem;
      std::size_t given = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const double exact =
            pool == 0 ? 0.0 : static_cast<double>(total) * avail[c] / pool;
        q[c] = std::min(avail[c], static_cast<std::size_t>(exact));
        given += q[c];
        rem.emplace_back(exact - static_cast<double>(q[c]), c);
      }
      std::stable_sort(rem.begin(), rem.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t k = 0; given < total; k = (k + 1) % C) {
        const std::size_t c = rem[k].second;
        if (q[c] < avail[c]) {
          ++q[c];
          ++given;
        }
      }
      return q;
    };

    std::vector<std::size_t> avail(C);
    for (std::size_t c = 0; c < C; ++c) avail[c] = by_class[c].size();
    const auto q_train = quotas(n_train, avail);
    for (std::size_t c = 0; c < C; ++c) avail[c] -= q_train[c];
    const auto q_test = quotas(n_test, avail);
    for (std::size_t c = 0; c < C; ++c) {
      const auto& members = by_class[c];
      train.insert(train.end(), members.begin(), members.begin() + q_train[c]);
      test.insert(test.end(), members.begin() + q_train[c],
                  members.begin() + q_train[c] + q_test[c]);
    }
    std::shuffle(train.begin(), train.end(), rng);
    std::shuffle(test.begin(), test.end(), rng);
  }
  return {subset(ds, train), subset(ds, test)};
}

std::vector<Fold> kfold_indices(std::size_t n, std::size_t folds,
                                std::uint64_t seed) {
  if (folds < 2 || folds > n) {
    fail(ErrorCode::kInvalidArgument,
         "kfold: need 2 <= folds <= n (folds=" + std::to_string(folds) +
             ", n=" + std::to_string(n) + ")");
  }
  Rng rng(derive_seed(seed, {0xf01d}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Fold> out(folds);
  const std::size_t base = n / folds;
  const std::size_t extra = n % folds;
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    out[f].holdout.assign(order.begin() + start, order.begin() + start + len);
    out[f].train.reserve(n - len);
    out[f].train.insert(out[f].train.end(), order.begin(), order.begin() + start);
    out[f].train.insert(out[f].train.end(), order.begin() + start + len, order.end());
    start += len;
  }
  return out;
}

}  // namespace disdf
