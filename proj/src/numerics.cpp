#include "cdfrc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cdfrc::numerics {

namespace {

double max_abs(const CMat& a) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) m = std::max(m, std::abs(a(i, j)));
  return m;
}

}  // namespace

bool is_hermitian(const CMat& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(max_abs(a), 1e-300);
  double dev = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      dev = std::max(dev, std::abs(a(i, j) - std::conj(a(j, i))));
  return dev <= tol * scale;
}

void require_hermitian(const CMat& a, const char* who, double tol) {
  if (!is_hermitian(a, tol))
    throw std::invalid_argument(std::string(who) + ": matrix is not Hermitian within tolerance");
}

HermitianEig hermitian_eig(const CMat& a) {
  require_hermitian(a, "hermitian_eig");
  Eigen::SelfAdjointEigenSolver<CMat> es((a + a.adjoint()) * 0.5);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eig: eigensolver failed to converge");
  const Eigen::Index n = a.rows();
  HermitianEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  // Eigen returns ascending order; flip to descending.
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return out;
}

double regularized_lower_gamma(int shape, double x) {
  if (shape < 1) throw std::invalid_argument("regularized_lower_gamma: shape must be >= 1");
  if (x < 0.0) throw std::invalid_argument("regularized_lower_gamma: x must be nonnegative");
  if (x == 0.0) return 0.0;
  // Q(shape, x) = sum_{k<shape} exp(-x) x^k / k!  (Poisson cdf at shape-1).
  // Direct recurrence when exp(-x) is representable; log-space otherwise.
  double q;
  if (x < 700.0) {
    double term = std::exp(-x);
    double sum = term;
    for (int k = 1; k < shape; ++k) {
      term *= x / static_cast<double>(k);
      sum += term;
    }
    q = sum;
  } else {
    // log-sum-exp over k = 0..shape-1 anchored at the largest term
    const int kmax = shape - 1;
    double lg = 0.0;  // log(x^k/k!) running
    double peak = -x;
    std::vector<double> logs(static_cast<size_t>(shape));
    logs[0] = -x;
    for (int k = 1; k <= kmax; ++k) {
      lg += std::log(x) - std::log(static_cast<double>(k));
      logs[static_cast<size_t>(k)] = -x + lg;
      peak = std::max(peak, logs[static_cast<size_t>(k)]);
    }
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - peak);
    q = std::exp(peak) * acc;
  }
  double p = 1.0 - q;
  return std::clamp(p, 0.0, 1.0);
}

ErlangMixture::ErlangMixture(std::vector<double> scales_in, int shape_in)
    : scales(std::move(scales_in)), shape(shape_in) {
  if (shape < 1) throw std::invalid_argument("ErlangMixture: shape must be >= 1");
  if (scales.empty()) throw std::invalid_argument("ErlangMixture: at least one scale required");
  for (double s : scales)
    if (!(s > 0.0)) throw std::invalid_argument("ErlangMixture: scales must be positive");
}

namespace {

struct MixGroup {
  double scale = 0.0;  // beta_g
  long shape = 0;      // m_g (total multiplicity)
};

// Merge scales whose relative gap is below 1e-6 into one higher-shape group.
std::vector<MixGroup> merge_groups(const ErlangMixture& mix) {
  std::vector<double> s = mix.scales;
  std::sort(s.begin(), s.end());
  std::vector<MixGroup> groups;
  size_t i = 0;
  while (i < s.size()) {
    size_t j = i + 1;
    double acc = s[i];
    while (j < s.size() && (s[j] - s[j - 1]) < 1e-6 * s[j]) {
      acc += s[j];
      ++j;
    }
    const auto count = static_cast<long>(j - i);
    groups.push_back({acc / static_cast<double>(count), count * static_cast<long>(mix.shape)});
    i = j;
  }
  return groups;
}

// Series evaluation with a common base scale (smallest), nonnegative weights.
// Returns -1 when the term cap is reached before the error bound is met.
double series_cdf(const std::vector<MixGroup>& groups, double x, long max_terms) {
  const double beta1 = std::min_element(groups.begin(), groups.end(), [](auto& a, auto& b) {
                         return a.scale < b.scale;
                       })->scale;
  long rho = 0;
  double log_c = 0.0;
  for (const auto& g : groups) {
    rho += g.shape;
    log_c += static_cast<double>(g.shape) * std::log(beta1 / g.scale);
  }
  const double c0 = std::exp(log_c);
  const double y = x / beta1;

  // gamma_k = sum_g m_g (1 - beta1/beta_g)^k / k ; delta via convolution recurrence
  std::vector<double> ratio_pow(groups.size(), 1.0);
  std::vector<double> delta;
  delta.reserve(1024);
  delta.push_back(1.0);

  // P(rho + k, y) walked downward in k
  double p = regularized_lower_gamma(static_cast<int>(rho), y);
  // pois(rho-1; y): weight that links successive shapes
  double lpois = -y + static_cast<double>(rho - 1) * std::log(std::max(y, 1e-300)) -
                 std::lgamma(static_cast<double>(rho));
  double pois = std::exp(lpois);

  std::vector<double> gamma_seq;
  gamma_seq.reserve(1024);

  double cdf = 0.0;
  double weight_used = 0.0;
  for (long k = 0;; ++k) {
    const double wk = c0 * delta[static_cast<size_t>(k)];
    cdf += wk * p;
    weight_used += wk;
    const double w_rem = std::max(0.0, 1.0 - weight_used);
    if (w_rem * p <= 1e-13) break;  // tail of mixture weights can add at most w_rem * p
    if (k + 1 >= max_terms) return -1.0;

    // advance P(rho+k, y) -> P(rho+k+1, y)
    pois *= y / static_cast<double>(rho + k);
    // pois now equals pois(rho+k; y); P(rho+k+1) = P(rho+k) - pois(rho+k; y)
    p = std::max(0.0, p - pois);

    // gamma_{k+1} and delta_{k+1}
    double gk = 0.0;
    for (size_t g = 0; g < groups.size(); ++g) {
      ratio_pow[g] *= 1.0 - beta1 / groups[g].scale;
      gk += static_cast<double>(groups[g].shape) * ratio_pow[g];
    }
    gk /= static_cast<double>(k + 1);
    gamma_seq.push_back(gk);  // gamma_{k+1}
    double dnext = 0.0;
    for (long i = 1; i <= k + 1; ++i)
      dnext += static_cast<double>(i) * gamma_seq[static_cast<size_t>(i - 1)] *
               delta[static_cast<size_t>(k + 1 - i)];
    dnext /= static_cast<double>(k + 1);
    delta.push_back(dnext);
  }
  return std::clamp(cdf, 0.0, 1.0);
}

// Gil-Pelaez inversion, last-resort path for extreme scale spreads.
double gil_pelaez_cdf(const std::vector<MixGroup>& groups, double x) {
  // integrand h(u) = Im[phi(u) exp(-i u x)] / u, F = 1/2 - (1/pi) * integral_0^inf h
  auto integrand = [&](double u) -> double {
    if (u <= 0.0) {
      double mean = 0.0;
      for (const auto& g : groups) mean += g.scale * static_cast<double>(g.shape);
      return mean - x;  // limit as u -> 0
    }
    Complex phi = 1.0;
    for (const auto& g : groups) {
      const Complex base = Complex(1.0, -g.scale * u);
      phi *= std::pow(base, -static_cast<double>(g.shape));
    }
    const Complex v = phi * std::exp(Complex(0.0, -u * x));
    return v.imag() / u;
  };
  // upper limit from |phi| decay
  double total_shape = 0.0;
  double beta_max = 0.0;
  for (const auto& g : groups) {
    total_shape += static_cast<double>(g.shape);
    beta_max = std::max(beta_max, g.scale);
  }
  double upper = 1.0 / beta_max;
  while (upper < 1e18) {
    double logmag = 0.0;
    for (const auto& g : groups)
      logmag -= 0.5 * static_cast<double>(g.shape) * std::log1p(g.scale * g.scale * upper * upper);
    if (logmag < std::log(1e-13 * upper)) break;
    upper *= 2.0;
  }
  // fixed-order Gauss-Legendre panels sized to the oscillation of exp(-iux)
  static const double gl_x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                 -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                 0.7966664774136267,  0.9602898564975363};
  static const double gl_w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                 0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
  const double osc = std::max({x, beta_max * total_shape, 1e-9});
  const double panel = (kPi / 4.0) / osc * beta_max * std::max(1.0, beta_max) /
                       std::max(beta_max, 1e-300);  // ~ pi/(4 osc)
  const double h = std::min(panel, upper / 16.0);
  double acc = 0.0;
  long panels = static_cast<long>(std::ceil(upper / h));
  panels = std::min(panels, 2000000L);
  const double step = upper / static_cast<double>(panels);
  for (long p = 0; p < panels; ++p) {
    const double a = step * static_cast<double>(p);
    const double b = a + step;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += gl_w[i] * integrand(mid + half * gl_x[i]);
    acc += s * half;
  }
  return std::clamp(0.5 - acc / kPi, 0.0, 1.0);
}

}  // namespace

double erlang_mixture_cdf(const ErlangMixture& mix, double x) {
  if (x < 0.0) throw std::invalid_argument("erlang_mixture_cdf: x must be nonnegative");
  if (x == 0.0) return 0.0;
  auto groups = merge_groups(mix);
  if (groups.size() == 1) {
    return regularized_lower_gamma(static_cast<int>(groups[0].shape), x / groups[0].scale);
  }
  double v = series_cdf(groups, x, 30000);
  if (v >= 0.0) return v;
  // prune components that contribute negligibly to the sum's mean, then retry
  double mean = 0.0;
  for (const auto& g : groups) mean += g.scale * static_cast<double>(g.shape);
  std::vector<MixGroup> pruned;
  for (const auto& g : groups)
    if (g.scale * static_cast<double>(g.shape) > 1e-10 * mean) pruned.push_back(g);
  if (pruned.size() == 1)
    return regularized_lower_gamma(static_cast<int>(pruned[0].shape), x / pruned[0].scale);
  if (pruned.size() < groups.size()) {
    v = series_cdf(pruned, x, 30000);
    if (v >= 0.0) return v;
  }
  return gil_pelaez_cdf(pruned, x);
}

CMat psd_floor(const CMat& a, double floor) {
  require_hermitian(a, "psd_floor");
  HermitianEig eig = hermitian_eig(a);
  bool touched = false;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) < floor) {
      eig.values(i) = floor;
      touched = true;
    }
  }
  if (!touched) return (a + a.adjoint()) * 0.5;
  return eig.vectors * eig.values.asDiagonal() * eig.vectors.adjoint();
}

CMat hermitian_sqrt(const CMat& a) {
  HermitianEig eig = hermitian_eig(a);
  RVec roots = eig.values.cwiseMax(0.0).cwiseSqrt();
  return eig.vectors * roots.asDiagonal() * eig.vectors.adjoint();
}

}  // namespace cdfrc::numerics
