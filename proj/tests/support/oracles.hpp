#pragma once

// Independent reference implementations used only by tests. They trade speed
// for transparency: textbook formulas, long double, no shared code with src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

// Ranks by counting: rank = 1 + #less + (#equal - 1) / 2.
inline std::vector<long double> ranks(const std::vector<double>& v) {
  std::vector<long double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    long double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) less += 1;
      if (w == v[i]) equal += 1;
    }
    r[i] = 1 + less + (equal - 1) / 2;
  }
  return r;
}

inline long double pearson(const std::vector<long double>& x, const std::vector<long double>& y) {
  const long double n = static_cast<long double>(x.size());
  long double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Without ties: 1 - 6 sum d^2 / (n (n^2 - 1)).
inline long double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  long double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const long double n = static_cast<long double>(x.size());
  return 1 - 6 * d2 / (n * (n * n - 1));
}

inline long double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

struct Anova {
  long double ssb = 0, ssw = 0, f = 0;
  std::size_t dfb = 0, dfw = 0;
};

// Sums of squares from raw sums: SST = sum x^2 - (sum x)^2 / N, SSB = sum T_g^2 / n_g - (sum x)^2 / N.
inline Anova anova(const std::vector<std::vector<double>>& groups) {
  long double total = 0, total_sq = 0, between = 0;
  std::size_t n = 0, k = 0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    ++k;
    long double t = 0;
    for (double v : g) {
      t += v;
      total_sq += static_cast<long double>(v) * v;
    }
    total += t;
    between += t * t / static_cast<long double>(g.size());
    n += g.size();
  }
  Anova a;
  const long double correction = total * total / static_cast<long double>(n);
  a.ssb = between - correction;
  a.ssw = (total_sq - correction) - a.ssb;
  a.dfb = k - 1;
  a.dfw = n - k;
  a.f = (a.ssb / a.dfb) / (a.ssw / a.dfw);
  return a;
}

// Solves (X'X) b = X'y by Gauss-Jordan with partial pivoting in long double.
inline std::vector<long double> normal_equations(const std::vector<std::vector<double>>& x,
                                                 const std::vector<double>& y) {
  const std::size_t n = x.size(), p = x[0].size();
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t r = 0; r < n; ++r) a[i][j] += static_cast<long double>(x[r][i]) * x[r][j];
    }
    for (std::size_t r = 0; r < n; ++r) a[i][p] += static_cast<long double>(x[r][i]) * y[r];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= p; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<long double> b(p);
  for (std::size_t i = 0; i < p; ++i) b[i] = a[i][p] / a[i][i];
  return b;
}

// Inverse of X'X by the same elimination, for standard errors.
inline std::vector<std::vector<long double>> xtx_inverse(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size(), p = x[0].size();
  std::vector<std::vector<long double>> a(p, std::vector<long double>(2 * p, 0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t r = 0; r < n; ++r) a[i][j] += static_cast<long double>(x[r][i]) * x[r][j];
    }
    a[i][p + i] = 1;
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    const long double d = a[c][c];
    for (auto& v : a[c]) v /= d;
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = a[r][c];
      for (std::size_t j = 0; j < 2 * p; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<std::vector<long double>> inv(p, std::vector<long double>(p));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) inv[i][j] = a[i][p + j];
  }
  return inv;
}

// Student t density integrated by composite Simpson from 0 to |x|.
inline double t_cdf(double x, double df) {
  const auto density = [df](long double t) {
    const long double c = std::exp(std::lgamma((df + 1) / 2.0L) - std::lgamma(df / 2.0L)) /
                          std::sqrt(df * 3.14159265358979323846264338327950288L);
    return c * std::pow(1 + t * t / df, -(df + 1) / 2.0L);
  };
  const long double a = std::fabs(x);
  const int m = 20000;
  const long double h = a / m;
  long double s = density(0) + density(a);
  for (int i = 1; i < m; ++i) s += density(i * h) * (i % 2 ? 4 : 2);
  const long double half = s * h / 3;
  return static_cast<double>(x >= 0 ? 0.5L + half : 0.5L - half);
}

// Binomial-sum form of I_x(a, b) for integer a, b.
inline double incomplete_beta_integer(int a, int b, double x) {
  const int n = a + b - 1;
  long double sum = 0;
  for (int j = a; j <= n; ++j) {
    const long double logc = std::lgamma(n + 1.0L) - std::lgamma(j + 1.0L) - std::lgamma(n - j + 1.0L);
    sum += std::exp(logc + j * std::log(static_cast<long double>(x)) + (n - j) * std::log1p(-static_cast<long double>(x)));
  }
  return static_cast<double>(sum);
}

// P(range of k standard normals / sqrt(chi2_df / df) <= q) by simulation.
inline double studentized_range_mc(double q, int k, int df, std::uint64_t replicates, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::chi_squared_distribution<double> chi(df);
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < replicates; ++r) {
    double lo = z(gen), hi = lo;
    for (int i = 1; i < k; ++i) {
      const double v = z(gen);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double s = std::sqrt(chi(gen) / df);
    hits += (hi - lo) / s <= q ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(replicates);
}

}  // namespace oracle
