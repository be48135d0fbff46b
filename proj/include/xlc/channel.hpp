// Uplink channel synthesis for a uniform linear array.
//
// Scatterers beyond the Rayleigh distance contribute planar wavefronts
// (steering depends on angle only); closer ones contribute spherical
// wavefronts (steering depends on angle and range). A hybrid-field channel
// mixes both kinds of path.

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "xlc/rng.hpp"

namespace xlc {

using Cvec = std::vector<std::complex<double>>;

struct ArrayGeometry {
  int antennas = 256;        // element count M
  double wavelength = 0.01;  // carrier wavelength, meters
  double spacing = 0.005;    // element pitch d, meters

  // Standard half-wavelength array.
  static ArrayGeometry half_wavelength(int antennas, double wavelength) {
    return ArrayGeometry{antennas, wavelength, wavelength / 2.0};
  }

  void validate() const;
};

struct PathParams {
  double angle = 0.0;     // arrival angle, radians in (-pi/2, pi/2)
  double distance = 0.0;  // scatterer range in meters; meaningful when near_field
  bool near_field = false;
  std::complex<double> gain{0.0, 0.0};
};

struct HybridChannelSpec {
  ArrayGeometry geometry;
  int total_paths = 6;        // L
  int far_paths = 1;          // L0 of them are far-field, the rest near-field
  double power_gain = 1.0;    // E|gain|^2 per path
  double distance_min = 10.0; // near-field range window, meters
  double distance_max = 80.0;

  void validate() const;
};

// Plane-wave steering vector, unit norm.
Cvec far_steering(double angle, const ArrayGeometry& g);

// Spherical-wave steering vector, unit norm. distance is measured from the
// array center to the scatterer.
Cvec near_steering(double angle, double distance, const ArrayGeometry& g);

// Near/far boundary 2 A^2 / wavelength for aperture A = (M-1) d. Only
// half-wavelength arrays are accepted so the familiar M^2 lambda / 2 form
// holds; anything else throws.
double rayleigh_distance(const ArrayGeometry& g);

// Draw the per-path parameters for one channel realization: the first
// far_paths paths are far-field, the rest near-field with ranges uniform in
// [distance_min, distance_max]. Angles are uniform in (-pi/2, pi/2); gains
// are CN(0, power_gain). Draw order per path is angle, range (near-field
// only), then gain -- fixed, because generated datasets depend on it.
std::vector<PathParams> sample_paths(const HybridChannelSpec& spec, Pcg32& rng);

// h = sqrt(M / L) * sum_l gain_l * steering_l.
Cvec gen_channel(const std::vector<PathParams>& paths, const ArrayGeometry& g);

// Stack per-user channels as columns of an M x K matrix.
Eigen::MatrixXcd assemble_multiuser(const std::vector<Cvec>& users);

}  // namespace xlc
