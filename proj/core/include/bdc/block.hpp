#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bdc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Non-overlapping contiguous partition of the coordinates [0, d) into n blocks.
///
/// Block i occupies [offset(i), offset(i) + dim(i)). Selection matrices are never
/// materialized; every block operation is an (offset, length) slice.
class BlockPartition {
 public:
  explicit BlockPartition(std::vector<Index> block_dims);

  std::size_t n_blocks() const { return dims_.size(); }
  Index total_dim() const { return offsets_.back(); }
  Index dim(std::size_t i) const;
  Index offset(std::size_t i) const;
  const std::vector<Index>& dims() const { return dims_; }
  const std::vector<Index>& offsets() const { return offsets_; }

  bool operator==(const BlockPartition& other) const { return dims_ == other.dims_; }

 private:
  std::vector<Index> dims_;
  std::vector<Index> offsets_;  // n + 1 entries, offsets_[n] == d
};

using PartitionPtr = std::shared_ptr<const BlockPartition>;

PartitionPtr make_partition(std::vector<Index> block_dims);

/// A point theta in R^d together with the partition that gives it block structure.
class BlockVector {
 public:
  BlockVector(PartitionPtr partition, Vector data);
  /// Zero vector on the given partition.
  explicit BlockVector(PartitionPtr partition);

  const BlockPartition& partition() const { return *partition_; }
  const PartitionPtr& partition_ptr() const { return partition_; }
  const Vector& data() const { return data_; }
  Vector& mutable_data() { return data_; }

  auto block(std::size_t i) const { return data_.segment(partition_->offset(i), partition_->dim(i)); }
  auto block(std::size_t i) { return data_.segment(partition_->offset(i), partition_->dim(i)); }

 private:
  PartitionPtr partition_;
  Vector data_;
};

Vector extract_block(const BlockVector& v, std::size_t i);
BlockVector embed_block(const PartitionPtr& partition, std::size_t i, const Vector& x);
BlockVector complement(const BlockVector& v, std::size_t i);
BlockVector replace_block(const BlockVector& v, std::size_t i, const Vector& x);

/// One CSV row, comma separated, 17 significant digits.
std::string to_csv_row(const Vector& v);
Vector from_csv_row(const std::string& row);

}  // namespace bdc
