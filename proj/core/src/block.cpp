#include "bdc/block.hpp"

#include <sstream>

#include "bdc/csv.hpp"
#include "bdc/error.hpp"

namespace bdc {

BlockPartition::BlockPartition(std::vector<Index> block_dims) : dims_(std::move(block_dims)) {
  if (dims_.empty()) throw UsageError("BlockPartition: at least one block is required");
  offsets_.reserve(dims_.size() + 1);
  offsets_.push_back(0);
  for (Index d : dims_) {
    if (d < 1) throw UsageError("BlockPartition: every block dimension must be >= 1");
    offsets_.push_back(offsets_.back() + d);
  }
}

Index BlockPartition::dim(std::size_t i) const {
  if (i >= dims_.size()) {
    throw UsageError("block index " + std::to_string(i) + " out of range (n=" +
                     std::to_string(dims_.size()) + ")");
  }
  return dims_[i];
}

Index BlockPartition::offset(std::size_t i) const {
  if (i >= dims_.size()) {
    throw UsageError("block index " + std::to_string(i) + " out of range (n=" +
                     std::to_string(dims_.size()) + ")");
  }
  return offsets_[i];
}

PartitionPtr make_partition(std::vector<Index> block_dims) {
  return std::make_shared<const BlockPartition>(std::move(block_dims));
}

BlockVector::BlockVector(PartitionPtr partition, Vector data)
    : partition_(std::move(partition)), data_(std::move(data)) {
  if (!partition_) throw UsageError("BlockVector: null partition");
  if (data_.size() != partition_->total_dim()) {
    throw UsageError("BlockVector: data length " + std::to_string(data_.size()) +
                     " does not match partition dimension " +
                     std::to_string(partition_->total_dim()));
  }
}

BlockVector::BlockVector(PartitionPtr partition)
    : BlockVector(partition, Vector::Zero(partition ? partition->total_dim() : 0)) {}

Vector extract_block(const BlockVector& v, std::size_t i) { return v.block(i); }

BlockVector embed_block(const PartitionPtr& partition, std::size_t i, const Vector& x) {
  if (x.size() != partition->dim(i)) {
    throw UsageError("embed_block: expected length " + std::to_string(partition->dim(i)) +
                     ", got " + std::to_string(x.size()));
  }
  BlockVector out(partition);
  out.block(i) = x;
  return out;
}

BlockVector complement(const BlockVector& v, std::size_t i) {
  BlockVector out = v;
  out.block(i).setZero();
  return out;
}

BlockVector replace_block(const BlockVector& v, std::size_t i, const Vector& x) {
  if (x.size() != v.partition().dim(i)) {
    throw UsageError("replace_block: expected length " + std::to_string(v.partition().dim(i)) +
                     ", got " + std::to_string(x.size()));
  }
  BlockVector out = v;
  out.block(i) = x;
  return out;
}

std::string to_csv_row(const Vector& v) {
  std::string out;
  for (Index k = 0; k < v.size(); ++k) {
    if (k) out += ',';
    out += format_double(v[k]);
  }
  return out;
}

Vector from_csv_row(const std::string& row) {
  std::vector<double> values;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty() || cell == "\r") continue;
    values.push_back(std::stod(cell));
  }
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace bdc
