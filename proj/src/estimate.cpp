#include "xlc/estimate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace xlc {

Observation observe(const Cvec& h, double power, double noise_power, Pcg32& rng) {
  if (h.empty()) throw std::invalid_argument("observe: empty channel");
  if (!(power > 0.0)) throw std::invalid_argument("observe: power must be positive");
  if (noise_power < 0.0) throw std::invalid_argument("observe: noise_power must be >= 0");
  Observation obs;
  obs.power = power;
  obs.noise_power = noise_power;
  obs.y.resize(h.size());
  const double sp = std::sqrt(power);
  for (size_t i = 0; i < h.size(); ++i) {
    std::complex<double> z = noise_power > 0.0 ? rng.cnormal(noise_power) : std::complex<double>{0.0, 0.0};
    obs.y[i] = sp * h[i] + z;
  }
  return obs;
}

Cvec ls_estimate(const Observation& obs) {
  Cvec out(obs.y.size());
  const double inv = 1.0 / std::sqrt(obs.power);
  for (size_t i = 0; i < out.size(); ++i) out[i] = obs.y[i] * inv;
  return out;
}

namespace {
constexpr int kCovBlock = 256;
}

CovarianceAccumulator::CovarianceAccumulator(int m) {
  if (m < 1) throw std::invalid_argument("CovarianceAccumulator: dimension must be positive");
  sum_ = Eigen::MatrixXcd::Zero(m, m);
  block_.resize(m, kCovBlock);
}

void CovarianceAccumulator::add(const Cvec& h) {
  if (static_cast<Eigen::Index>(h.size()) != sum_.rows())
    throw std::invalid_argument("CovarianceAccumulator: channel length mismatch");
  for (Eigen::Index i = 0; i < sum_.rows(); ++i) block_(i, pending_) = h[static_cast<size_t>(i)];
  if (++pending_ == kCovBlock) flush();
  ++count_;
}

void CovarianceAccumulator::flush() {
  if (pending_ == 0) return;
  auto b = block_.leftCols(pending_);
  sum_.noalias() += b * b.adjoint();
  pending_ = 0;
}

Eigen::MatrixXcd CovarianceAccumulator::finish() {
  if (count_ == 0) throw std::logic_error("CovarianceAccumulator: no samples");
  flush();
  return sum_ / static_cast<double>(count_);
}

Eigen::MatrixXcd empirical_covariance(const std::vector<Cvec>& channels) {
  if (channels.empty()) throw std::invalid_argument("empirical_covariance: no samples");
  CovarianceAccumulator acc(static_cast<int>(channels[0].size()));
  for (const Cvec& h : channels) acc.add(h);
  return acc.finish();
}

LmmseFilter::LmmseFilter(const Eigen::MatrixXcd& covariance, double power, double noise_power) {
  if (covariance.rows() != covariance.cols())
    throw std::invalid_argument("LmmseFilter: covariance must be square");
  if (!(power > 0.0)) throw std::invalid_argument("LmmseFilter: power must be positive");
  if (noise_power < 0.0) throw std::invalid_argument("LmmseFilter: noise_power must be >= 0");
  const Eigen::Index m = covariance.rows();
  Eigen::MatrixXcd a = covariance;
  a.diagonal().array() += noise_power / power;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(a);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    // Empirical covariances from few samples can be numerically indefinite;
    // a hair of diagonal loading restores a usable factorization.
    double load = 1e-12 * std::max(1.0, std::abs(a.trace().real()) / static_cast<double>(m));
    a.diagonal().array() += load;
    ldlt.compute(a);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("LmmseFilter: covariance system could not be factorized");
  }
  // W = R A^-1 computed as (A^-1 R^H)^H; A and R are Hermitian.
  w_ = ldlt.solve(covariance.adjoint()).adjoint();
}

Cvec LmmseFilter::apply(const Cvec& h_ls) const {
  if (static_cast<Eigen::Index>(h_ls.size()) != w_.cols())
    throw std::invalid_argument("LmmseFilter: estimate length mismatch");
  Eigen::Map<const Eigen::VectorXcd> x(h_ls.data(), static_cast<Eigen::Index>(h_ls.size()));
  Eigen::VectorXcd y = w_ * x;
  return Cvec(y.data(), y.data() + y.size());
}

Cvec lmmse_estimate(const Observation& obs, const Eigen::MatrixXcd& covariance) {
  LmmseFilter f(covariance, obs.power, obs.noise_power);
  return f.apply(ls_estimate(obs));
}

Grid reshape_to_grid(const Cvec& h, int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("reshape_to_grid: dims must be positive");
  if (h.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("reshape_to_grid: " + std::to_string(h.size()) +
                                " entries do not fill " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  Grid g(rows, cols);
  for (size_t m = 0; m < h.size(); ++m) {
    g.v[2 * m] = h[m].real();
    g.v[2 * m + 1] = h[m].imag();
  }
  return g;
}

Cvec grid_to_vector(const Grid& g) {
  Cvec h(static_cast<size_t>(g.rows) * g.cols);
  for (size_t m = 0; m < h.size(); ++m) h[m] = {g.v[2 * m], g.v[2 * m + 1]};
  return h;
}

Grid32 grid_to_f32(const Grid& g) {
  Grid32 out(g.rows, g.cols);
  for (size_t i = 0; i < g.v.size(); ++i) out.v[i] = static_cast<float>(g.v[i]);
  return out;
}

std::pair<int, int> default_grid_dims(int m) {
  if (m < 1) throw std::invalid_argument("default_grid_dims: need a positive antenna count");
  // Largest divisor <= sqrt(m) gives the most-square pair.
  int best = 1;
  for (int r = 1; static_cast<long long>(r) * r <= m; ++r)
    if (m % r == 0) best = r;
  if (best == 1 && m > 3)
    throw std::invalid_argument("default_grid_dims: " + std::to_string(m) +
                                " antennas only factor as 1x" + std::to_string(m) +
                                "; pick explicit grid dims or pad the array to a composite size");
  return {best, m / best};
}

template <typename A, typename B>
double nmse(const GridT<A>& truth, const GridT<B>& estimate) {
  if (truth.rows != estimate.rows || truth.cols != estimate.cols)
    throw std::invalid_argument("nmse: shape mismatch");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < truth.v.size(); ++i) {
    double t = static_cast<double>(truth.v[i]);
    double e = static_cast<double>(estimate.v[i]) - t;
    num += e * e;
    den += t * t;
  }
  if (den == 0.0) throw std::invalid_argument("nmse: reference grid has zero energy");
  return num / den;
}

template double nmse(const GridT<double>&, const GridT<double>&);
template double nmse(const GridT<float>&, const GridT<float>&);
template double nmse(const GridT<double>&, const GridT<float>&);
template double nmse(const GridT<float>&, const GridT<double>&);

double nmse_db(double nmse_linear) {
  if (!(nmse_linear > 0.0)) throw std::invalid_argument("nmse_db: need a positive value");
  return 10.0 * std::log10(nmse_linear);
}

double snr_to_power(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

}  // namespace xlc
