#include "dsvgp/harness/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace dsvgp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

NonNumericCell::NonNumericCell(std::size_t row, std::size_t col, const std::string& detail)
    : Error("non-numeric cell at row " + std::to_string(row) + ", column " +
            std::to_string(col) + ": '" + detail + "'"),
      row_(row),
      col_(col) {}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  Table t;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      for (const std::string& h : split_line(line)) t.header.push_back(trim(h));
      have_header = true;
      continue;
    }
    ++row_no;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw Error("row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                  " cells, header has " + std::to_string(t.header.size()));
    }
    std::vector<double> vals(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = trim(cells[c]);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw NonNumericCell(row_no, c + 1, cell);
      }
      vals[c] = v;
    }
    rows.push_back(std::move(vals));
  }
  if (!have_header) throw EmptyFile("'" + path + "' is empty");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      t.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  if (static_cast<Eigen::Index>(header.size()) != values.cols()) {
    throw DimensionMismatch("CSV header and value columns differ");
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out << (c ? "," : "") << format_double(values(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  const Table t = read_csv(path);
  const auto it = std::find(t.header.begin(), t.header.end(), label_column);
  if (it == t.header.end()) throw MissingColumn("no column named '" + label_column + "' in '" + path + "'");
  const auto label = static_cast<Eigen::Index>(it - t.header.begin());
  if (t.values.rows() == 0) throw EmptyFile("'" + path + "' has a header but no rows");
  Dataset d;
  d.y = t.values.col(label);
  d.x.resize(t.values.rows(), t.values.cols() - 1);
  Eigen::Index out_col = 0;
  for (Eigen::Index c = 0; c < t.values.cols(); ++c) {
    if (c == label) continue;
    d.x.col(out_col++) = t.values.col(c);
  }
  return d;
}

void save_csv(const std::string& path, const Dataset& data, const std::string& label_column,
              const std::vector<std::string>& feature_names) {
  std::vector<std::string> header;
  for (Eigen::Index c = 0; c < data.dim(); ++c) {
    header.push_back(static_cast<std::size_t>(c) < feature_names.size()
                         ? feature_names[static_cast<std::size_t>(c)]
                         : "x" + std::to_string(c));
  }
  header.push_back(label_column);
  Matrix values(data.size(), data.dim() + 1);
  values << data.x, data.y;
  write_csv(path, header, values);
}

StreamOrder stream_order_from_string(const std::string& name) {
  if (name == "sorted" || name == "sorted_by_dim") return StreamOrder::SortedByDim;
  if (name == "as_is") return StreamOrder::AsIs;
  if (name == "shuffled") return StreamOrder::Shuffled;
  throw InvalidArgument("unknown stream order '" + name + "'");
}

std::vector<Eigen::Index> seeded_permutation(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 gen(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(gen() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

std::vector<StreamBatch> make_stream(const Dataset& data, const StreamStrategy& strategy,
                                     int num_batches) {
  if (num_batches < 1) throw InvalidArgument("num_batches must be at least 1");
  const Eigen::Index n = data.size();
  if (num_batches > n) throw InvalidArgument("more batches than data rows");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  switch (strategy.order) {
    case StreamOrder::SortedByDim: {
      if (strategy.sort_dim < 0 || strategy.sort_dim >= data.dim()) {
        throw InvalidArgument("sort dimension out of range");
      }
      const Eigen::Index k = strategy.sort_dim;
      std::stable_sort(order.begin(), order.end(),
                       [&](Eigen::Index a, Eigen::Index b) { return data.x(a, k) < data.x(b, k); });
      break;
    }
    case StreamOrder::AsIs:
      break;
    case StreamOrder::Shuffled:
      order = seeded_permutation(n, strategy.seed);
      break;
  }

  std::vector<StreamBatch> out;
  const Eigen::Index base = n / num_batches;
  const Eigen::Index extra = n % num_batches;
  Eigen::Index start = 0;
  for (int b = 0; b < num_batches; ++b) {
    const Eigen::Index len = base + (b < extra ? 1 : 0);
    std::vector<Eigen::Index> rows(order.begin() + start, order.begin() + start + len);
    out.push_back(StreamBatch{data.subset(rows), b});
    start += len;
  }
  return out;
}

std::pair<Dataset, Dataset> holdout_split(const Dataset& data, double fraction,
                                          std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("holdout fraction must lie in [0, 1)");
  const Eigen::Index n = data.size();
  const auto n_test = static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n)));
  const std::vector<Eigen::Index> perm = seeded_permutation(n, seed);
  std::vector<Eigen::Index> train(perm.begin(), perm.end() - n_test);
  std::vector<Eigen::Index> test(perm.end() - n_test, perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {data.subset(train), data.subset(test)};
}

Standardization Standardization::fit(const PointSet& x) {
  if (x.rows() == 0) throw InvalidArgument("cannot standardize an empty set");
  Standardization s;
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean[c]).square().mean();
    s.scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

PointSet Standardization::apply(const PointSet& x) const {
  if (!active()) return x;
  if (x.cols() != mean.size()) throw DimensionMismatch("standardization dimension differs");
  PointSet out = x;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    out.col(c) = (x.col(c).array() - mean[c]) / scale[c];
  }
  return out;
}

void to_signed_labels(Dataset& data) {
  for (Eigen::Index i = 0; i < data.size(); ++i) data.y[i] = to_signed_label(data.y[i]);
}

}  // namespace dsvgp
