#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dptune/random.hpp"

namespace dptune {

/// One candidate point in the two-dimensional search space.
struct HyperParams {
  double sigma = 0.0;  ///< noise multiplier, > 0
  double eta = 0.0;    ///< learning rate, > 0

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

enum class Scale { Linear, Logarithmic };

/// A bounded, quantized axis of the search space. The lattice lives in the
/// dimension's scale domain: point k is lo + k*step for Linear and
/// exp(log(lo) + k*step) for Logarithmic, k = 0..size-1.
class Dimension {
 public:
  Dimension(std::string name, double lo, double hi, double step,
            Scale scale = Scale::Linear);

  const std::string& name() const { return name_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double step() const { return step_; }
  Scale scale() const { return scale_; }

  std::int64_t lattice_size() const { return size_; }

  /// Value of lattice point k (clamped into [lo, hi] against rounding).
  double value_at(std::int64_t k) const;

  /// Index of the lattice point nearest to raw; midpoints resolve toward lo.
  std::int64_t nearest_index(double raw) const;

  double quantize(double raw) const { return value_at(nearest_index(raw)); }

  /// Scale-domain coordinate (identity for Linear, natural log otherwise).
  double to_scale(double value) const;
  double from_scale(double t) const;
  double scale_lo() const { return t_lo_; }
  double scale_hi() const { return t_hi_; }
  double scale_width() const { return t_hi_ - t_lo_; }

  /// Nearest lattice index for a scale-domain coordinate.
  std::int64_t nearest_index_scale(double t) const;

 private:
  std::string name_;
  double lo_, hi_, step_;
  Scale scale_;
  double t_lo_, t_hi_;
  std::int64_t size_;
};

/// The (sigma, eta) search lattice. Dimension order is fixed: sigma, eta.
class SearchSpace {
 public:
  SearchSpace(Dimension sigma, Dimension eta);

  const Dimension& sigma() const { return dims_[0]; }
  const Dimension& eta() const { return dims_[1]; }
  const std::vector<Dimension>& dims() const { return dims_; }

  std::uint64_t cardinality() const;

 private:
  std::vector<Dimension> dims_;
};

/// Independent uniform draw over each dimension's lattice points.
HyperParams sample_uniform(const SearchSpace& space, Rng& rng);

/// Snap each field to the nearest lattice point (ties toward lo).
HyperParams quantize(const SearchSpace& space, const HyperParams& raw);

/// Gaussian perturbation with std strength*(scale-domain width) per
/// dimension, then quantize-and-clamp back onto the lattice.
HyperParams mutate(const SearchSpace& space, const HyperParams& point,
                   double strength, Rng& rng);

/// Indices of `count` equally spaced points of an n-point lattice,
/// strictly increasing, always including index 0 (and n-1 when count > 1).
std::vector<std::int64_t> lattice_subsample_indices(std::int64_t n,
                                                    std::int64_t count);

/// Cartesian product of equally spaced lattice subsets, sigma-major order.
std::vector<HyperParams> enumerate_grid(
    const SearchSpace& space, const std::array<std::int64_t, 2>& per_dim);

/// True when both fields coincide bit-exactly with a lattice point.
bool on_lattice(const SearchSpace& space, const HyperParams& point);

/// Scale-domain coordinates mapped to [0,1] per dimension (surrogate input).
std::array<double, 2> normalized(const SearchSpace& space,
                                 const HyperParams& point);

}  // namespace dptune
