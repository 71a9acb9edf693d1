#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace pots {

/// Pairwise summation in a fixed split order; the result does not depend on
/// how the values were produced, only on their order.
inline double pairwise_sum(const double* x, Eigen::Index n) {
  if (n <= 8) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const Eigen::Index half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

template <typename Derived>
double pairwise_sum(const Eigen::DenseBase<Derived>& v) {
  const Eigen::VectorXd tmp = v.derived().template cast<double>();
  return pairwise_sum(tmp.data(), tmp.size());
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename Derived>
double mean(const Eigen::DenseBase<Derived>& v) {
  return v.size() == 0 ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

/// Variance with divisor n (population form).
template <typename Derived>
double variance_n(const Eigen::DenseBase<Derived>& v) {
  if (v.size() == 0) return 0.0;
  const double m = mean(v);
  const Eigen::VectorXd d = (v.derived().array() - m).square().matrix();
  return pairwise_sum(d) / static_cast<double>(v.size());
}

/// Sample variance, divisor n - 1.
template <typename Derived>
double variance(const Eigen::DenseBase<Derived>& v) {
  if (v.size() < 2) return 0.0;
  return variance_n(v) * static_cast<double>(v.size()) / static_cast<double>(v.size() - 1);
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline constexpr double z975 = 1.959963984540054;

/// Kolmogorov-Smirnov distance between the empirical law of `x` and N(0,1).
inline double ks_distance(std::vector<double> x) {
  if (x.empty()) return 0.0;
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = normal_cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

/// Bartlett-weighted long-run sum  sum_{|j|<=lag} (1 - |j|/(lag+1)) sum_t s_t s_{t-j}.
inline double newey_west_sum(const Eigen::VectorXd& s, int lag) {
  const Eigen::Index n = s.size();
  double total = s.squaredNorm();
  for (int j = 1; j <= lag && j < n; ++j) {
    const double w = 1.0 - static_cast<double>(j) / (lag + 1.0);
    total += 2.0 * w * s.tail(n - j).dot(s.head(n - j));
  }
  return std::max(total, 0.0);
}

struct OlsFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd se;  // HC0
};

inline OlsFit ols_hc0(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd XtX = X.transpose() * X;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(XtX);
  OlsFit fit;
  fit.coef = ldlt.solve(X.transpose() * y);
  const Eigen::VectorXd e = y - X * fit.coef;
  const Eigen::MatrixXd meat = X.transpose() * e.array().square().matrix().asDiagonal() * X;
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));
  fit.se = (inv * meat * inv).diagonal().cwiseMax(0.0).cwiseSqrt();
  return fit;
}

inline double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd da = a.array() - mean(a);
  const Eigen::VectorXd db = b.array() - mean(b);
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

}  // namespace pots
