#include "pots/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pots/core.hpp"

namespace pots {

using boost::math::quadrature::gauss_kronrod;

std::string_view to_string(KernelKind k) { return k == KernelKind::Gaussian ? "gaussian" : "epanechnikov"; }

KernelKind parse_kernel(std::string_view name) {
  if (name == "gaussian") return KernelKind::Gaussian;
  if (name == "epanechnikov") return KernelKind::Epanechnikov;
  throw ConfigError("kernel", "unknown kernel '" + std::string(name) + "'");
}

namespace {

double raw_kernel(KernelKind kind, double u) {
  if (kind == KernelKind::Gaussian) return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
}

template <typename F>
double integrate(KernelKind kind, F f) {
  if (kind == KernelKind::Gaussian) {
    const double inf = std::numeric_limits<double>::infinity();
    return gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-14);
  }
  return gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 15, 1e-14);
}

}  // namespace

double kernel_moment(KernelKind kind, int j) {
  return integrate(kind, [&](double u) { return std::pow(u, j) * raw_kernel(kind, u); });
}

double kernel_convolution(KernelKind kind, double x) {
  return integrate(kind, [&](double u) { return raw_kernel(kind, u) * raw_kernel(kind, u + x); });
}

KernelSpec KernelSpec::make(KernelKind kind, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("bandwidth", "must be positive and finite");
  KernelSpec k;
  k.kind = kind;
  k.h = h;
  if (kind == KernelKind::Gaussian) {
    k.kappa2 = 1.0;
    k.b = 1.0 / (2.0 * std::sqrt(std::numbers::pi));
  } else {
    k.kappa2 = 0.2;
    k.b = 0.6;
  }
  k.kappa0_check = kernel_moment(kind, 0);
  k.kappa1_check = kernel_moment(kind, 1);
  if (std::abs(k.kappa0_check - 1.0) > 1e-8 || std::abs(k.kappa1_check) > 1e-8)
    throw NumericalError("kernel moments failed the quadrature check");
  return k;
}

double KernelSpec::k(double u) const { return raw_kernel(kind, u); }

double KernelSpec::kstar(double x) const {
  if (kind == KernelKind::Gaussian) return std::exp(-0.25 * x * x) / (2.0 * std::sqrt(std::numbers::pi));
  const double a = std::abs(x);
  if (a >= 2.0) return 0.0;
  return 3.0 / 160.0 * std::pow(2.0 - a, 3) * (a * a + 6.0 * a + 4.0);
}

}  // namespace pots
