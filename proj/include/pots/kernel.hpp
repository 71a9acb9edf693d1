#pragma once

#include <string>
#include <string_view>

namespace pots {

enum class KernelKind { Gaussian, Epanechnikov };

std::string_view to_string(KernelKind k);
KernelKind parse_kernel(std::string_view name);

/// Second-order kernel with bandwidth. kappa2 = int u^2 k, b = int k^2.
struct KernelSpec {
  KernelKind kind = KernelKind::Gaussian;
  double kappa2 = 1.0;
  double b = 0.0;
  double h = 1.0;
  double kappa0_check = 0.0;  // quadrature of int k
  double kappa1_check = 0.0;  // quadrature of int u k

  /// Throws ConfigError for h <= 0 and NumericalError when the quadrature
  /// moments miss 1 and 0 by more than 1e-8.
  static KernelSpec make(KernelKind kind, double h);

  double k(double u) const;
  double kh(double x) const { return k(x / h) / h; }
  /// k*(x) = int k(u) k(u + x) du
  double kstar(double x) const;
};

/// Numerical int u^j k(u) du.
double kernel_moment(KernelKind kind, int j);
/// Numerical int k(u) k(u + x) du.
double kernel_convolution(KernelKind kind, double x);

}  // namespace pots
