#include "dptune/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "dptune/errors.hpp"

namespace dptune {

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarRecordBytes = 3073;

/// Proportional allocation of `total` across group sizes, largest
/// remainder; ties broken by lower group index. Never exceeds `avail`.
std::vector<int> allocate_proportional(const std::vector<int>& group_sizes,
                                       const std::vector<int>& avail,
                                       int total) {
  const double n = std::accumulate(group_sizes.begin(), group_sizes.end(), 0.0);
  const std::size_t g = group_sizes.size();
  std::vector<int> alloc(g, 0);
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t c = 0; c < g; ++c) {
    const double share = total * group_sizes[c] / n;
    alloc[c] = std::min(static_cast<int>(std::floor(share)), avail[c]);
    assigned += alloc[c];
    remainders.emplace_back(share - std::floor(share), c);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  while (assigned < total) {
    bool progressed = false;
    for (const auto& [frac, c] : remainders) {
      if (assigned == total) break;
      if (alloc[c] < avail[c]) {
        ++alloc[c];
        ++assigned;
        progressed = true;
      }
    }
    if (!progressed)
      throw DataError("subset: insufficient samples for requested split");
  }
  return alloc;
}

}  // namespace

std::uint64_t VisitCounter::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void VisitCounter::merge(const VisitCounter& other) {
  if (other.counts.size() != counts.size())
    throw std::invalid_argument("VisitCounter::merge: size mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

void record_visits(VisitCounter& counter,
                   std::span<const Eigen::Index> batch_rows) {
  for (const Eigen::Index r : batch_rows) {
    if (r < 0 || static_cast<std::size_t>(r) >= counter.counts.size())
      throw std::out_of_range("record_visits: sample id out of range");
    ++counter.counts[static_cast<std::size_t>(r)];
  }
}

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  if (img.size() < 16) throw DataError("idx images: truncated header");
  if (read_be32(img, 0) != kIdxImagesMagic)
    throw DataError("idx images: bad magic");
  const std::size_t count = read_be32(img, 4);
  const std::size_t rows = read_be32(img, 8);
  const std::size_t cols = read_be32(img, 12);
  const std::size_t d = rows * cols;
  if (img.size() != 16 + count * d) throw DataError("idx images: truncated file");

  const auto lab = read_file(labels_path);
  if (lab.size() < 8) throw DataError("idx labels: truncated header");
  if (read_be32(lab, 0) != kIdxLabelsMagic)
    throw DataError("idx labels: bad magic");
  const std::size_t label_count = read_be32(lab, 4);
  if (lab.size() != 8 + label_count) throw DataError("idx labels: truncated file");
  if (label_count != count)
    throw DataError("idx: image/label count mismatch");

  Dataset ds;
  ds.name = "mnist";
  ds.num_classes = 10;
  ds.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(d));
  ds.labels.resize(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          img[16 + i * d + j] / 255.0;
    const unsigned char label = lab[8 + i];
    if (label > 9) throw DataError("idx labels: label byte out of range");
    ds.labels[static_cast<Eigen::Index>(i)] = label;
  }
  ds.sample_ids.resize(count);
  std::iota(ds.sample_ids.begin(), ds.sample_ids.end(), 0);
  return ds;
}

Dataset load_cifar10_bin(const std::vector<std::filesystem::path>& batch_paths) {
  if (batch_paths.empty()) throw DataError("cifar10: no batch files given");
  std::vector<unsigned char> all;
  for (const auto& p : batch_paths) {
    const auto bytes = read_file(p);
    if (bytes.size() % kCifarRecordBytes != 0)
      throw DataError("cifar10: file length not a multiple of 3073: " + p.string());
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  const std::size_t count = all.size() / kCifarRecordBytes;
  if (count == 0) throw DataError("cifar10: no records");

  Dataset ds;
  ds.name = "cifar10";
  ds.num_classes = 10;
  ds.features.resize(static_cast<Eigen::Index>(count), 3072);
  ds.labels.resize(static_cast<Eigen::Index>(count));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t off = i * kCifarRecordBytes;
    const unsigned char label = all[off];
    if (label > 9) throw DataError("cifar10: label byte out of range");
    ds.labels[static_cast<Eigen::Index>(i)] = label;
    for (std::size_t j = 0; j < 3072; ++j)
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          all[off + 1 + j] / 255.0;
  }
  ds.sample_ids.resize(count);
  std::iota(ds.sample_ids.begin(), ds.sample_ids.end(), 0);
  return ds;
}

Dataset synthetic(int n, int d, int classes, double separation,
                  std::uint64_t seed) {
  if (classes < 2 || n < classes)
    throw std::invalid_argument("synthetic: need n >= classes >= 2");
  if (d < classes)
    throw std::invalid_argument("synthetic: need d >= classes for orthogonal class directions");
  if (!(separation >= 0.0))
    throw std::invalid_argument("synthetic: separation must be >= 0");

  Rng rng(seed);
  // Orthonormal class directions via Gram-Schmidt on Gaussian draws.
  MatXd dirs(classes, d);
  for (int c = 0; c < classes; ++c) {
    VecXd v(d);
    for (int j = 0; j < d; ++j) v[j] = gaussian(rng);
    for (int p = 0; p < c; ++p) v -= dirs.row(p).dot(v) * dirs.row(p).transpose();
    dirs.row(c) = v.normalized();
  }
  // Pairwise mean distance equals `separation` for orthonormal directions.
  const MatXd means = (separation / std::numbers::sqrt2) * dirs;

  Dataset ds;
  ds.name = "synthetic";
  ds.num_classes = classes;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int label = i % classes;
    ds.labels[i] = label;
    for (int j = 0; j < d; ++j)
      ds.features(i, j) = means(label, j) + gaussian(rng);
  }
  const double lo = ds.features.minCoeff();
  const double hi = ds.features.maxCoeff();
  ds.features = (ds.features.array() - lo) / (hi - lo);
  ds.sample_ids.resize(static_cast<std::size_t>(n));
  std::iota(ds.sample_ids.begin(), ds.sample_ids.end(), 0);
  return ds;
}

std::pair<Dataset, Dataset> subset(const Dataset& parent, int n_train,
                                   int n_valid, std::uint64_t seed) {
  if (n_train < 0 || n_valid < 0 ||
      n_train + n_valid > static_cast<int>(parent.size()))
    throw DataError("subset: insufficient samples for requested split");

  Rng rng(seed);
  std::vector<std::vector<Eigen::Index>> groups(parent.num_classes);
  for (Eigen::Index i = 0; i < parent.size(); ++i)
    groups[static_cast<std::size_t>(parent.labels[i])].push_back(i);

  std::vector<int> sizes, avail;
  for (auto& g : groups) {
    shuffle(std::span<Eigen::Index>(g), rng);
    sizes.push_back(static_cast<int>(g.size()));
    avail.push_back(static_cast<int>(g.size()));
  }

  const auto train_alloc = allocate_proportional(sizes, avail, n_train);
  for (std::size_t c = 0; c < avail.size(); ++c) avail[c] -= train_alloc[c];
  const auto valid_alloc = allocate_proportional(sizes, avail, n_valid);

  const auto gather = [&](const std::vector<int>& alloc,
                          const std::vector<int>& skip) {
    std::vector<Eigen::Index> rows;
    for (std::size_t c = 0; c < groups.size(); ++c)
      for (int i = 0; i < alloc[c]; ++i)
        rows.push_back(groups[c][static_cast<std::size_t>(skip[c] + i)]);
    shuffle(std::span<Eigen::Index>(rows), rng);
    Dataset out;
    out.name = parent.name;
    out.num_classes = parent.num_classes;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), parent.dim());
    out.labels.resize(static_cast<Eigen::Index>(rows.size()));
    out.sample_ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) = parent.features.row(rows[i]);
      out.labels[static_cast<Eigen::Index>(i)] = parent.labels[rows[i]];
      out.sample_ids.push_back(parent.sample_ids[static_cast<std::size_t>(rows[i])]);
    }
    return out;
  };

  const std::vector<int> zero(groups.size(), 0);
  Dataset train = gather(train_alloc, zero);
  Dataset valid = gather(valid_alloc, train_alloc);
  return {std::move(train), std::move(valid)};
}

}  // namespace dptune
