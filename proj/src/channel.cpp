#include "xlc/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xlc {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

void ArrayGeometry::validate() const {
  if (antennas < 2) throw std::invalid_argument("ArrayGeometry: need at least 2 antennas");
  if (!(wavelength > 0.0)) throw std::invalid_argument("ArrayGeometry: wavelength must be positive");
  if (!(spacing > 0.0)) throw std::invalid_argument("ArrayGeometry: spacing must be positive");
}

void HybridChannelSpec::validate() const {
  geometry.validate();
  if (total_paths < 1) throw std::invalid_argument("HybridChannelSpec: need at least one path");
  if (far_paths < 0 || far_paths > total_paths)
    throw std::invalid_argument("HybridChannelSpec: far_paths must lie in [0, total_paths]");
  if (!(power_gain > 0.0)) throw std::invalid_argument("HybridChannelSpec: power_gain must be positive");
  if (far_paths < total_paths) {
    // Near-field ranges only matter when near-field paths exist.
    if (!(distance_min > 0.0) || !(distance_max >= distance_min))
      throw std::invalid_argument("HybridChannelSpec: need 0 < distance_min <= distance_max");
  }
}

Cvec far_steering(double angle, const ArrayGeometry& g) {
  g.validate();
  const int m = g.antennas;
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const double k = 2.0 * kPi * g.spacing / g.wavelength * std::sin(angle);
  Cvec a(m);
  for (int i = 0; i < m; ++i) {
    double phase = -k * i;  // element i sits (i) pitches from the reference element
    a[i] = std::polar(scale, phase);
  }
  return a;
}

Cvec near_steering(double angle, double distance, const ArrayGeometry& g) {
  g.validate();
  if (!(distance > 0.0)) throw std::invalid_argument("near_steering: distance must be positive");
  const int m = g.antennas;
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  const double d = g.spacing;
  const double k = 2.0 * kPi / g.wavelength;
  const double s = std::sin(angle);
  Cvec a(m);
  for (int i = 0; i < m; ++i) {
    // Element offset from the array center, in pitches: symmetric around 0.
    double delta = (2.0 * (i + 1) - m - 1) / 2.0;
    // Exact propagation distance from the scatterer to element i.
    double ri = std::sqrt(distance * distance + delta * delta * d * d - 2.0 * distance * delta * d * s);
    a[i] = std::polar(scale, -k * (ri - distance));
  }
  return a;
}

double rayleigh_distance(const ArrayGeometry& g) {
  g.validate();
  const double half = g.wavelength / 2.0;
  if (std::abs(g.spacing - half) > 1e-12 * half)
    throw std::invalid_argument(
        "rayleigh_distance: spacing is " + std::to_string(g.spacing) +
        " m but this model assumes half-wavelength pitch (" + std::to_string(half) + " m)");
  return 0.5 * static_cast<double>(g.antennas) * g.antennas * g.wavelength;
}

std::vector<PathParams> sample_paths(const HybridChannelSpec& spec, Pcg32& rng) {
  spec.validate();
  std::vector<PathParams> paths(spec.total_paths);
  for (int l = 0; l < spec.total_paths; ++l) {
    PathParams& p = paths[l];
    p.near_field = l >= spec.far_paths;
    p.angle = rng.uniform(-kPi / 2.0, kPi / 2.0);
    if (p.near_field) p.distance = rng.uniform(spec.distance_min, spec.distance_max);
    p.gain = rng.cnormal(spec.power_gain);
  }
  return paths;
}

Cvec gen_channel(const std::vector<PathParams>& paths, const ArrayGeometry& g) {
  g.validate();
  if (paths.empty()) throw std::invalid_argument("gen_channel: no paths");
  Cvec h(g.antennas, {0.0, 0.0});
  for (const PathParams& p : paths) {
    Cvec a = p.near_field ? near_steering(p.angle, p.distance, g) : far_steering(p.angle, g);
    for (int i = 0; i < g.antennas; ++i) h[i] += p.gain * a[i];
  }
  const double scale = std::sqrt(static_cast<double>(g.antennas) / paths.size());
  for (auto& x : h) x *= scale;
  return h;
}

Eigen::MatrixXcd assemble_multiuser(const std::vector<Cvec>& users) {
  if (users.empty()) throw std::invalid_argument("assemble_multiuser: no users");
  const size_t m = users[0].size();
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(users.size()));
  for (size_t k = 0; k < users.size(); ++k) {
    if (users[k].size() != m)
      throw std::invalid_argument("assemble_multiuser: user channels differ in length");
    for (size_t i = 0; i < m; ++i) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = users[k][i];
  }
  return out;
}

}  // namespace xlc
