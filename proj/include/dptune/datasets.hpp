#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dptune/random.hpp"
#include "dptune/types.hpp"

namespace dptune {

/// In-memory classification dataset. Features are scaled to [0, 1];
/// sample_ids carry the row's identity in the originating dataset so
/// subsets stay traceable.
struct Dataset {
  MatXd features;                        ///< n x d
  VecXi labels;                          ///< n, in [0, num_classes)
  std::vector<std::int64_t> sample_ids;  ///< stable ids, length n
  std::string name;
  int num_classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
};

/// Per-sample inclusion counts for one training set; index i is row i of
/// the train dataset.
struct VisitCounter {
  std::vector<std::uint64_t> counts;

  explicit VisitCounter(std::size_t n = 0) : counts(n, 0) {}
  std::uint64_t total() const;
  void merge(const VisitCounter& other);
};

/// Increment each listed row by its multiplicity in the batch.
void record_visits(VisitCounter& counter, std::span<const Eigen::Index> batch_rows);

/// MNIST IDX pair: big-endian headers, magic 0x00000803 (images) and
/// 0x00000801 (labels); pixels scaled by 1/255 and flattened.
Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path);

/// CIFAR-10 binary batches: 3073-byte records (label + 3072 pixels),
/// concatenated in the given order, pixels scaled by 1/255.
Dataset load_cifar10_bin(const std::vector<std::filesystem::path>& batch_paths);

/// Gaussian class blobs with means `separation` apart along random
/// orthonormal directions, min-max rescaled into [0, 1]. Labels are
/// balanced within +-1. Requires d >= classes.
Dataset synthetic(int n, int d, int classes, double separation,
                  std::uint64_t seed);

/// Disjoint, seeded, class-stratified train/validation split; per-class
/// counts proportional to the parent within +-1, sample_ids preserved.
std::pair<Dataset, Dataset> subset(const Dataset& parent, int n_train,
                                   int n_valid, std::uint64_t seed);

}  // namespace dptune
