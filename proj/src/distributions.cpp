#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "sqem/error.hpp"
#include "sqem/numerics.hpp"

namespace sqem::numerics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw NumericalError("incomplete_beta: continued fraction did not converge");
}

// 20-point Gauss-Legendre rule on [-1, 1] (positive half; symmetric).
constexpr double kGlNodes[10] = {
    0.0765265211334973337546404, 0.2277858511416450780804962, 0.3737060887154195606725482,
    0.5108670019508270980043641, 0.6360536807265150254528367, 0.7463319064601507926143051,
    0.8391169718222188233945291, 0.9122344282513259058677524, 0.9639719272779137912676661,
    0.9931285991850949247861224};
constexpr double kGlWeights[10] = {
    0.1527533871307258506980843, 0.1491729864726037467878287, 0.1420961093183820513292983,
    0.1316886384491766268984945, 0.1181945319615184173123774, 0.1019301198172404350367501,
    0.0832767415767047487247581, 0.0626720483341090635695065, 0.0406014298003869413310400,
    0.0176140071391521183118620};

template <typename F>
double gauss_legendre_composite(F&& f, double lo, double hi, int panels) {
  const double width = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    const double half = 0.5 * width;
    double sum = 0.0;
    for (int i = 0; i < 10; ++i) {
      sum += kGlWeights[i] * (f(mid - half * kGlNodes[i]) + f(mid + half * kGlNodes[i]));
    }
    total += sum * half;
  }
  return total;
}

// Panel count doubles until successive estimates agree to `tol`.
template <typename F>
double integrate_doubling(F&& f, double lo, double hi, int initial_panels, double tol) {
  constexpr int kMaxPanels = 1 << 12;
  int panels = initial_panels;
  double previous = gauss_legendre_composite(f, lo, hi, panels);
  while (panels < kMaxPanels) {
    panels *= 2;
    const double current = gauss_legendre_composite(f, lo, hi, panels);
    if (std::fabs(current - previous) < tol) return current;
    previous = current;
  }
  return previous;
}

// P(range of k iid standard normals <= w).
double normal_range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  const auto integrand = [w, k](double z) {
    const double inside = normal_cdf(z) - normal_cdf(z - w);
    return normal_pdf(z) * std::pow(inside, k - 1);
  };
  const double value = k * integrate_doubling(integrand, -8.5, 8.5, 4, 1e-9);
  return std::min(1.0, std::max(0.0, value));
}

}  // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) {
  if (std::isnan(x)) return x;
  return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("normal_quantile: p outside [0, 1]");
  if (p == 0.0) return -kInf;
  if (p == 1.0) return kInf;
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_cdf(double x, double df) {
  if (!(df >= 1.0)) throw ConfigError("t_cdf: df must be >= 1, got " + std::to_string(df));
  if (std::isnan(x)) return x;
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  if (x == 0.0) return 0.5;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + x * x));
  return x > 0.0 ? 1.0 - tail : tail;
}

double f_cdf(double x, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) throw ConfigError("f_cdf: degrees of freedom must be positive");
  if (!(x >= 0.0)) throw ConfigError("f_cdf: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x == kInf) return 1.0;
  return incomplete_beta(0.5 * df1, 0.5 * df2, df1 * x / (df1 * x + df2));
}

double studentized_range_cdf(double q, int k, double df) {
  if (k < 2) throw ConfigError("studentized_range_cdf: k must be >= 2");
  if (!(df >= 1.0)) throw ConfigError("studentized_range_cdf: df must be >= 1");
  if (!(q >= 0.0)) throw ConfigError("studentized_range_cdf: q must be nonnegative");
  if (q == 0.0) return 0.0;
  if (q == kInf) return 1.0;

  // s = sqrt(chi2_df / df); integrate its density against the infinite-df range CDF.
  const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) -
                          (0.5 * df - 1.0) * std::log(2.0);
  const auto integrand = [&](double s) {
    const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    return std::exp(log_density) * normal_range_cdf(q * s, k);
  };
  const double spread = 9.0 / std::sqrt(df);
  const double lo = std::max(0.0, 1.0 - spread);
  const double hi = 1.0 + spread;
  const double value = integrate_doubling(integrand, lo, hi, 2, 1e-7);
  return std::min(1.0, std::max(0.0, value));
}

}  // namespace sqem::numerics
