#pragma once

#include "dsvgp/dual_core.hpp"
#include "dsvgp/errors.hpp"
#include "dsvgp/sequential.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dsvgp {

class MissingColumn : public Error {
 public:
  using Error::Error;
};

class NonNumericCell : public Error {
 public:
  NonNumericCell(std::size_t row, std::size_t col, const std::string& detail);
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class EmptyFile : public Error {
 public:
  using Error::Error;
};

struct Table {
  std::vector<std::string> header;
  Matrix values;
};

/// Header row required; every cell must parse as a finite number. Rows and
/// columns in errors are 1-based, data rows counted after the header.
Table read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);

/// Features are every column except label_column, in file order.
Dataset load_csv(const std::string& path, const std::string& label_column);
void save_csv(const std::string& path, const Dataset& data, const std::string& label_column = "y",
              const std::vector<std::string>& feature_names = {});

enum class StreamOrder { SortedByDim, AsIs, Shuffled };

struct StreamStrategy {
  StreamOrder order = StreamOrder::SortedByDim;
  Eigen::Index sort_dim = 0;
  std::uint64_t seed = 0;
};

StreamOrder stream_order_from_string(const std::string& name);

/// Chunks of n / num_batches rows; the remainder goes one row each to the
/// leading chunks, so 10 rows in 3 batches give sizes 4, 3, 3.
std::vector<StreamBatch> make_stream(const Dataset& data, const StreamStrategy& strategy,
                                     int num_batches);

/// Seeded permutation of 0..n-1.
std::vector<Eigen::Index> seeded_permutation(Eigen::Index n, std::uint64_t seed);

/// Holds out the last round(fraction * n) rows of a seeded shuffle.
std::pair<Dataset, Dataset> holdout_split(const Dataset& data, double fraction,
                                          std::uint64_t seed);

struct Standardization {
  Vector mean;
  Vector scale;

  bool active() const { return mean.size() > 0; }
  static Standardization fit(const PointSet& x);
  PointSet apply(const PointSet& x) const;
};

/// Maps {0,1} labels to {-1,+1} in place.
void to_signed_labels(Dataset& data);

}  // namespace dsvgp
