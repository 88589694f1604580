#include "rradam/landscapes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rradam {

std::string_view to_string(LandscapeKind kind) {
  switch (kind) {
    case LandscapeKind::ZhangCounterexample: return "ZhangCounterexample";
    case LandscapeKind::LowerBound: return "LowerBound";
    case LandscapeKind::QuadraticSum: return "QuadraticSum";
    case LandscapeKind::Custom: return "Custom";
  }
  return "Custom";
}

LandscapeKind landscape_kind_from_string(std::string_view name) {
  for (auto k : {LandscapeKind::ZhangCounterexample, LandscapeKind::LowerBound,
                 LandscapeKind::QuadraticSum, LandscapeKind::Custom}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown landscape kind '" + std::string(name) + "'");
}

namespace lowerbound {

double f1(double x, double L0, double L1) {
  const double b = 1.0 / L1;
  if (x >= b) return L0 * std::exp(L1 * x - 1.0) / (L1 * L1);
  if (x <= -b) return L0 * std::exp(-L1 * x - 1.0) / (L1 * L1);
  return 0.5 * L0 * x * x + L0 / (2.0 * L1 * L1);
}

double f1_prime(double x, double L0, double L1) {
  const double b = 1.0 / L1;
  if (x >= b) return L0 * std::exp(L1 * x - 1.0) / L1;
  if (x <= -b) return -L0 * std::exp(-L1 * x - 1.0) / L1;
  return L0 * x;
}

double f1_second(double x, double L0, double L1) {
  // Both one-sided values equal L0 at |x| = 1/L1.
  const double b = 1.0 / L1;
  if (std::abs(x) >= b) return L0 * std::exp(L1 * std::abs(x) - 1.0);
  return L0;
}

double f2(double y, double epsilon) {
  if (y >= 1.0) return epsilon * (y - 1.0) + 0.5 * epsilon;
  if (y <= -1.0) return -epsilon * (y + 1.0) + 0.5 * epsilon;
  return 0.5 * epsilon * y * y;
}

double f2_prime(double y, double epsilon) {
  if (y >= 1.0) return epsilon;
  if (y <= -1.0) return -epsilon;
  return epsilon * y;
}

double f2_second(double y, double epsilon) {
  // max of the one-sided values at the kinks y = +-1
  return std::abs(y) <= 1.0 ? epsilon : 0.0;
}

}  // namespace lowerbound

namespace {

constexpr std::size_t kZhangComponents = 10;
constexpr double kZhangCenter = 10.0 / 9.0;

}  // namespace

FiniteSumObjective FiniteSumObjective::zhang_counterexample(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("scale must be positive and finite");
  FiniteSumObjective obj;
  obj.n_ = kZhangComponents;
  obj.d_ = 1;
  obj.kind_ = LandscapeKind::ZhangCounterexample;
  obj.scale_ = scale;
  obj.params_ = std::make_shared<const LandscapeParams>(ZhangParams{});
  // mean of the components is x^2/100 - 1/90
  obj.known_min_ = -scale / 90.0;
  return obj;
}

FiniteSumObjective FiniteSumObjective::lower_bound(const LowerBoundParams& params, std::size_t n,
                                                   double scale) {
  if (!(params.L0 > 0.0) || !(params.L1 > 0.0) || !(params.epsilon > 0.0))
    throw DomainError("LowerBound needs L0, L1, epsilon > 0");
  if (n == 0) throw DomainError("component count must be positive");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("scale must be positive and finite");
  FiniteSumObjective obj;
  obj.n_ = n;
  obj.d_ = 2;
  obj.kind_ = LandscapeKind::LowerBound;
  obj.scale_ = scale;
  obj.params_ = std::make_shared<const LandscapeParams>(params);
  obj.known_min_ = scale * lowerbound::f1_min(params.L0, params.L1);
  // identical components: (1/n) sum ||grad f_i||^2 = ||grad f||^2
  obj.known_D0_D1_ = std::pair{0.0, 1.0};
  if (params.epsilon <= params.L0) obj.known_L0_L1_ = std::pair{scale * params.L0, params.L1};
  return obj;
}

FiniteSumObjective FiniteSumObjective::quadratic_sum(std::vector<double> curvatures,
                                                     std::vector<Vec> centers, double scale) {
  if (curvatures.empty()) throw DomainError("QuadraticSum needs at least one component");
  if (curvatures.size() != centers.size())
    throw DomainError("QuadraticSum: curvatures and centers differ in length");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("scale must be positive and finite");
  const std::size_t d = centers.front().size();
  if (d == 0) throw DomainError("QuadraticSum: dimension must be positive");
  for (const auto& c : centers) {
    if (c.size() != d) throw DomainError("QuadraticSum: centers have inconsistent dimension");
    if (!all_finite(c)) throw DomainError("QuadraticSum: non-finite center");
  }
  if (!all_finite(curvatures)) throw DomainError("QuadraticSum: non-finite curvature");

  FiniteSumObjective obj;
  obj.n_ = curvatures.size();
  obj.d_ = d;
  obj.kind_ = LandscapeKind::QuadraticSum;
  obj.scale_ = scale;

  const bool convex = std::all_of(curvatures.begin(), curvatures.end(), [](double a) { return a >= 0.0; });
  double a_sum = 0.0;
  for (double a : curvatures) a_sum += a;
  if (convex && a_sum > 0.0) {
    // minimizer is the curvature-weighted mean of the centers
    Vec wstar(d, 0.0);
    for (std::size_t j = 0; j < obj.n_; ++j)
      for (std::size_t l = 0; l < d; ++l) wstar[l] += curvatures[j] * centers[j][l] / a_sum;
    double fmin = 0.0;
    for (std::size_t j = 0; j < obj.n_; ++j) {
      double r2 = 0.0;
      for (std::size_t l = 0; l < d; ++l) r2 += (wstar[l] - centers[j][l]) * (wstar[l] - centers[j][l]);
      fmin += 0.5 * curvatures[j] * r2;
    }
    obj.known_min_ = scale * fmin / static_cast<double>(obj.n_);
  }
  double a_max = 0.0;
  for (double a : curvatures) a_max = std::max(a_max, std::abs(a));
  obj.known_L0_L1_ = std::pair{scale * a_max, 0.0};
  const bool equal = std::all_of(curvatures.begin(), curvatures.end(),
                                 [&](double a) { return a == curvatures.front(); });
  if (equal && curvatures.front() > 0.0) {
    // grad f_i = a (w - c_i): the component spread around grad f is a^2 Var(c), independent of w
    Vec mean(d, 0.0);
    for (const auto& c : centers)
      for (std::size_t l = 0; l < d; ++l) mean[l] += c[l] / static_cast<double>(obj.n_);
    double spread = 0.0;
    for (const auto& c : centers)
      for (std::size_t l = 0; l < d; ++l) spread += (c[l] - mean[l]) * (c[l] - mean[l]);
    spread /= static_cast<double>(obj.n_);
    const double a = scale * curvatures.front();
    obj.known_D0_D1_ = std::pair{a * a * spread, 1.0};
  }

  obj.params_ = std::make_shared<const LandscapeParams>(
      QuadraticSumParams{std::move(curvatures), std::move(centers)});
  return obj;
}

FiniteSumObjective FiniteSumObjective::custom(std::size_t n, std::size_t d, CustomComponents components) {
  if (n == 0 || d == 0) throw DomainError("Custom objective needs n, d >= 1");
  if (!components.value || !components.grad) throw DomainError("Custom objective needs value and grad");
  FiniteSumObjective obj;
  obj.n_ = n;
  obj.d_ = d;
  obj.kind_ = LandscapeKind::Custom;
  obj.params_ = std::make_shared<const LandscapeParams>(std::move(components));
  return obj;
}

FiniteSumObjective FiniteSumObjective::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("scale factor must be positive and finite");
  FiniteSumObjective out = *this;
  out.scale_ = scale_ * c;
  if (out.known_min_) *out.known_min_ *= c;
  if (out.known_D0_D1_) out.known_D0_D1_->first *= c * c;
  if (out.known_L0_L1_) out.known_L0_L1_->first *= c;
  return out;
}

void FiniteSumObjective::check_point(std::span<const double> w) const {
  if (w.size() != d_)
    throw DomainError("point has dimension " + std::to_string(w.size()) + ", expected " +
                      std::to_string(d_));
  if (!all_finite(w)) throw DomainError("non-finite point");
}

void FiniteSumObjective::check_index(std::size_t j) const {
  if (j >= n_)
    throw DomainError("component index " + std::to_string(j) + " out of range [0, " +
                      std::to_string(n_) + ")");
}

double FiniteSumObjective::component_value(std::size_t j, std::span<const double> w) const {
  check_index(j);
  check_point(w);
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ZhangParams>) {
          const double x = w[0];
          const double raw = j == 0 ? (x - 1.0) * (x - 1.0)
                                    : -0.1 * (x - kZhangCenter) * (x - kZhangCenter);
          return scale_ * raw;
        } else if constexpr (std::is_same_v<P, LowerBoundParams>) {
          return scale_ * (lowerbound::f1(w[0], p.L0, p.L1) + lowerbound::f2(w[1], p.epsilon));
        } else if constexpr (std::is_same_v<P, QuadraticSumParams>) {
          double r2 = 0.0;
          for (std::size_t l = 0; l < d_; ++l) {
            const double r = w[l] - p.centers[j][l];
            r2 += r * r;
          }
          return scale_ * 0.5 * p.curvatures[j] * r2;
        } else {
          return scale_ * p.value(j, w);
        }
      },
      *params_);
}

void FiniteSumObjective::unscaled_component_grad(std::size_t j, std::span<const double> w,
                                                 std::span<double> out) const {
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ZhangParams>) {
          out[0] = j == 0 ? 2.0 * (w[0] - 1.0) : -0.2 * (w[0] - kZhangCenter);
        } else if constexpr (std::is_same_v<P, LowerBoundParams>) {
          out[0] = lowerbound::f1_prime(w[0], p.L0, p.L1);
          out[1] = lowerbound::f2_prime(w[1], p.epsilon);
        } else if constexpr (std::is_same_v<P, QuadraticSumParams>) {
          for (std::size_t l = 0; l < d_; ++l) out[l] = p.curvatures[j] * (w[l] - p.centers[j][l]);
        } else {
          p.grad(j, w, out);
        }
      },
      *params_);
}

void FiniteSumObjective::component_grad(std::size_t j, std::span<const double> w,
                                        std::span<double> out) const {
  check_index(j);
  check_point(w);
  if (out.size() != d_) throw DomainError("gradient buffer has wrong dimension");
  unscaled_component_grad(j, w, out);
  if (scale_ != 1.0)
    for (double& g : out) g *= scale_;
}

Vec FiniteSumObjective::component_grad(std::size_t j, std::span<const double> w) const {
  Vec g(d_);
  component_grad(j, w, g);
  return g;
}

double FiniteSumObjective::value(std::span<const double> w) const {
  check_point(w);
  double s = 0.0;
  for (std::size_t j = 0; j < n_; ++j) s += component_value(j, w);
  return s / static_cast<double>(n_);
}

void FiniteSumObjective::full_grad(std::span<const double> w, std::span<double> out) const {
  check_point(w);
  if (out.size() != d_) throw DomainError("gradient buffer has wrong dimension");
  std::fill(out.begin(), out.end(), 0.0);
  Vec g(d_);
  for (std::size_t j = 0; j < n_; ++j) {
    unscaled_component_grad(j, w, g);
    for (std::size_t l = 0; l < d_; ++l) out[l] += g[l];
  }
  const double c = scale_ / static_cast<double>(n_);
  for (double& x : out) x *= c;
}

Vec FiniteSumObjective::full_grad(std::span<const double> w) const {
  Vec g(d_);
  full_grad(w, g);
  return g;
}

std::optional<double> FiniteSumObjective::analytic_smoothness(std::span<const double> w) const {
  check_point(w);
  return std::visit(
      [&](const auto& p) -> std::optional<double> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ZhangParams>) {
          // (1/10)(2 - 9 * 0.2)
          return scale_ * 0.02;
        } else if constexpr (std::is_same_v<P, LowerBoundParams>) {
          const double hx = lowerbound::f1_second(w[0], p.L0, p.L1);
          const double hy = lowerbound::f2_second(w[1], p.epsilon);
          return scale_ * std::max(hx, hy);
        } else if constexpr (std::is_same_v<P, QuadraticSumParams>) {
          double a = 0.0;
          for (double c : p.curvatures) a += c;
          return scale_ * std::abs(a / static_cast<double>(n_));
        } else {
          if (!p.curvature) return std::nullopt;
          return scale_ * p.curvature(w);
        }
      },
      *params_);
}

LowerBoundSetup make_lowerbound(double L0, double L1, double T, double M, double f_bar) {
  Thm2Construction c = theorem2_construction(L0, L1, T, M, f_bar);
  auto obj = FiniteSumObjective::lower_bound(LowerBoundParams{L0, L1, c.epsilon});
  Vec w0{c.x0, c.y0};
  return LowerBoundSetup{std::move(obj), std::move(w0), c};
}

}  // namespace rradam
