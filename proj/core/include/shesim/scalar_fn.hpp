#ifndef SHESIM_SCALAR_FN_HPP
#define SHESIM_SCALAR_FN_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace shesim {

// Lipschitz scalar nonlinearity for the Nemytskii operators. Custom tables
// interpolate linearly and clamp outside the table range (keeps the global
// Lipschitz constant equal to the max interior slope).
class ScalarFn {
public:
  enum class Kind { zero, linear, scaled_sine, table };

  static ScalarFn zero() { return ScalarFn(Kind::zero, 0.0, 0.0); }
  static ScalarFn identity() { return linear(1.0, 0.0); }
  static ScalarFn constant(double b) { return linear(0.0, b); }
  static ScalarFn linear(double a, double b) { return ScalarFn(Kind::linear, a, b); }
  static ScalarFn scaled_sine(double a) { return ScalarFn(Kind::scaled_sine, a, 0.0); }
  // a*sin(x) + b; b != 0 keeps the function multiplicative but near-constant
  static ScalarFn sine_offset(double a, double b) { return ScalarFn(Kind::scaled_sine, a, b); }
  static ScalarFn table(std::vector<double> xs, std::vector<double> ys);

  Kind kind() const { return kind_; }
  double slope() const { return a_; }
  double offset() const { return b_; }
  const std::vector<double>& table_x() const { return xs_; }
  const std::vector<double>& table_y() const { return ys_; }

  bool is_zero() const { return kind_ == Kind::zero || (kind_ == Kind::linear && a_ == 0.0 && b_ == 0.0) || (kind_ == Kind::scaled_sine && a_ == 0.0 && b_ == 0.0); }
  bool is_constant() const {
    return kind_ == Kind::zero || (kind_ == Kind::linear && a_ == 0.0) ||
           (kind_ == Kind::scaled_sine && a_ == 0.0);
  }

  double operator()(double x) const {
    switch (kind_) {
      case Kind::zero: return 0.0;
      case Kind::linear: return a_ * x + b_;
      case Kind::scaled_sine: return a_ * std::sin(x) + b_;
      case Kind::table: {
        if (x <= xs_.front()) return ys_.front();
        if (x >= xs_.back()) return ys_.back();
        const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs_.begin());
        const double t = (x - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
        return ys_[i - 1] + t * (ys_[i] - ys_[i - 1]);
      }
    }
    return 0.0;
  }

  double lipschitz_constant() const {
    switch (kind_) {
      case Kind::zero: return 0.0;
      case Kind::linear: return std::abs(a_);
      case Kind::scaled_sine: return std::abs(a_);
      case Kind::table: {
        double m = 0.0;
        for (std::size_t i = 1; i < xs_.size(); ++i)
          m = std::max(m, std::abs((ys_[i] - ys_[i - 1]) / (xs_[i] - xs_[i - 1])));
        return m;
      }
    }
    return 0.0;
  }

private:
  ScalarFn(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<double> xs_, ys_;
};

inline ScalarFn ScalarFn::table(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("ScalarFn::table: need matching x/y with at least two knots");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (xs[i] <= xs[i - 1])
      throw std::invalid_argument("ScalarFn::table: x knots must be strictly increasing");
  ScalarFn f(Kind::table, 0.0, 0.0);
  f.xs_ = std::move(xs);
  f.ys_ = std::move(ys);
  return f;
}

} // namespace shesim

#endif
