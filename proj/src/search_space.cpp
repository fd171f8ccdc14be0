#include "dptune/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dptune {

namespace {
// Guard against (hi-lo)/step landing just below an integer; a range meant
// to hold k+1 points must not silently lose its endpoint.
constexpr double kLatticeSlack = 1e-9;
}  // namespace

Dimension::Dimension(std::string name, double lo, double hi, double step,
                     Scale scale)
    : name_(std::move(name)), lo_(lo), hi_(hi), step_(step), scale_(scale) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && std::isfinite(step)))
    throw std::invalid_argument("dimension '" + name_ + "': bounds and step must be finite");
  if (!(lo < hi))
    throw std::invalid_argument("dimension '" + name_ + "': lo must be < hi");
  if (!(step > 0.0))
    throw std::invalid_argument("dimension '" + name_ + "': step must be > 0");
  if (!(lo > 0.0))
    throw std::invalid_argument("dimension '" + name_ + "': lo must be > 0");
  t_lo_ = to_scale(lo_);
  t_hi_ = to_scale(hi_);
  size_ = static_cast<std::int64_t>(
              std::floor((t_hi_ - t_lo_) / step_ + kLatticeSlack)) + 1;
}

double Dimension::to_scale(double value) const {
  return scale_ == Scale::Logarithmic ? std::log(value) : value;
}

double Dimension::from_scale(double t) const {
  return scale_ == Scale::Logarithmic ? std::exp(t) : t;
}

double Dimension::value_at(std::int64_t k) const {
  if (k < 0 || k >= size_)
    throw std::out_of_range("dimension '" + name_ + "': lattice index out of range");
  const double v = from_scale(t_lo_ + static_cast<double>(k) * step_);
  return std::min(std::max(v, lo_), hi_);
}

std::int64_t Dimension::nearest_index_scale(double t) const {
  const double kf = (t - t_lo_) / step_;
  const double base = std::floor(kf);
  const double frac = kf - base;
  std::int64_t k = static_cast<std::int64_t>(base) + (frac > 0.5 ? 1 : 0);
  return std::clamp<std::int64_t>(k, 0, size_ - 1);
}

std::int64_t Dimension::nearest_index(double raw) const {
  return nearest_index_scale(to_scale(raw));
}

SearchSpace::SearchSpace(Dimension sigma, Dimension eta) {
  dims_.push_back(std::move(sigma));
  dims_.push_back(std::move(eta));
  if (dims_[0].name() == dims_[1].name())
    throw std::invalid_argument("search space dimensions must have unique names");
}

std::uint64_t SearchSpace::cardinality() const {
  std::uint64_t n = 1;
  for (const auto& d : dims_) n *= static_cast<std::uint64_t>(d.lattice_size());
  return n;
}

HyperParams sample_uniform(const SearchSpace& space, Rng& rng) {
  HyperParams out;
  const auto draw = [&rng](const Dimension& d) {
    return d.value_at(static_cast<std::int64_t>(
        uniform_index(rng, static_cast<std::uint64_t>(d.lattice_size()))));
  };
  out.sigma = draw(space.sigma());
  out.eta = draw(space.eta());
  return out;
}

HyperParams quantize(const SearchSpace& space, const HyperParams& raw) {
  if (!(std::isfinite(raw.sigma) && std::isfinite(raw.eta)))
    throw std::invalid_argument("quantize: point must be finite");
  return {space.sigma().quantize(raw.sigma), space.eta().quantize(raw.eta)};
}

HyperParams mutate(const SearchSpace& space, const HyperParams& point,
                   double strength, Rng& rng) {
  if (!(strength >= 0.0 && strength <= 1.0))
    throw std::invalid_argument("mutate: strength must be in [0, 1]");
  const auto perturb = [&](const Dimension& d, double value) {
    const double t =
        d.to_scale(value) + gaussian(rng) * strength * d.scale_width();
    return d.value_at(d.nearest_index_scale(t));
  };
  HyperParams out;
  out.sigma = perturb(space.sigma(), point.sigma);
  out.eta = perturb(space.eta(), point.eta);
  return out;
}

std::vector<std::int64_t> lattice_subsample_indices(std::int64_t n,
                                                    std::int64_t count) {
  if (count < 1 || count > n)
    throw std::invalid_argument("subsample count must be in [1, lattice size]");
  std::vector<std::int64_t> idx(count);
  if (count == 1) return idx;  // {0}
  for (std::int64_t i = 0; i < count; ++i) {
    idx[i] = static_cast<std::int64_t>(std::llround(
        static_cast<double>(i) * static_cast<double>(n - 1) /
        static_cast<double>(count - 1)));
  }
  return idx;
}

std::vector<HyperParams> enumerate_grid(
    const SearchSpace& space, const std::array<std::int64_t, 2>& per_dim) {
  const auto si = lattice_subsample_indices(space.sigma().lattice_size(), per_dim[0]);
  const auto ei = lattice_subsample_indices(space.eta().lattice_size(), per_dim[1]);
  std::vector<HyperParams> grid;
  grid.reserve(static_cast<std::size_t>(per_dim[0] * per_dim[1]));
  for (const std::int64_t ks : si)
    for (const std::int64_t ke : ei)
      grid.push_back({space.sigma().value_at(ks), space.eta().value_at(ke)});
  return grid;
}

bool on_lattice(const SearchSpace& space, const HyperParams& point) {
  const auto check = [](const Dimension& d, double v) {
    return std::isfinite(v) && v == d.value_at(d.nearest_index(v));
  };
  return check(space.sigma(), point.sigma) && check(space.eta(), point.eta);
}

std::array<double, 2> normalized(const SearchSpace& space,
                                 const HyperParams& point) {
  const auto coord = [](const Dimension& d, double v) {
    return (d.to_scale(v) - d.scale_lo()) / d.scale_width();
  };
  return {coord(space.sigma(), point.sigma), coord(space.eta(), point.eta)};
}

}  // namespace dptune
