#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fastswitch/error.hpp"

namespace fastswitch {

/// Nondecreasing, strictly positive conversion rate x -> rate(x) on [0, inf).
///
/// Five forms are supported:
///   affine    slope*x + intercept
///   scaled    outer * base(inner*x)
///   step      low for x <= threshold, high otherwise (discontinuous)
///   table     piecewise-linear through sorted breakpoints, flat outside
///   composed  base(coeff * x/(1-x)), defined on [0, cap) only
///
/// Objects are immutable values; nested forms share their base.
class ConversionRate {
 public:
  struct Affine {
    double slope = 0.0;
    double intercept = 1.0;
  };
  struct Scaled {
    double outer = 1.0;
    double inner = 1.0;
    std::shared_ptr<const ConversionRate> base;
  };
  struct Step {
    double low = 1.0;
    double high = 1.0;
    double threshold = 1.0;
  };
  struct Table {
    std::vector<double> x;
    std::vector<double> y;
  };
  struct Composed {
    double coeff = 1.0;
    double cap = 0.999;
    std::shared_ptr<const ConversionRate> base;
  };
  using Form = std::variant<Affine, Scaled, Step, Table, Composed>;

  ConversionRate() : form_(Affine{0.0, 1.0}) {}
  explicit ConversionRate(Form form) : form_(std::move(form)) {}

  static ConversionRate affine(double slope, double intercept) {
    return ConversionRate(Affine{slope, intercept});
  }
  static ConversionRate constant(double c) { return affine(0.0, c); }
  static ConversionRate scaled(double outer, double inner, ConversionRate base) {
    return ConversionRate(
        Scaled{outer, inner, std::make_shared<const ConversionRate>(std::move(base))});
  }
  static ConversionRate step(double low, double high, double threshold) {
    return ConversionRate(Step{low, high, threshold});
  }
  static ConversionRate table(std::vector<double> x, std::vector<double> y) {
    return ConversionRate(Table{std::move(x), std::move(y)});
  }
  static ConversionRate composed(double coeff, ConversionRate base, double cap = 0.999) {
    return ConversionRate(
        Composed{coeff, cap, std::make_shared<const ConversionRate>(std::move(base))});
  }

  const Form& form() const noexcept { return form_; }

  double value(double x) const {
    return std::visit([x](const auto& f) { return eval(f, x); }, form_);
  }

  double derivative(double x) const {
    return std::visit([x](const auto& f) { return deriv(f, x); }, form_);
  }

  double operator()(double x) const { return value(x); }

  /// Positive lower bound over [0, x_max]; the rate is nondecreasing so it is rate(0).
  double lower_bound(double /*x_max*/ = 0.0) const { return value(0.0); }

  /// Locations of jump discontinuities, ascending.
  std::vector<double> jumps() const {
    std::vector<double> out;
    std::visit(
        [&out](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Step>) {
            out.push_back(f.threshold);
          } else if constexpr (std::is_same_v<T, Scaled>) {
            if (f.inner > 0.0)
              for (double j : f.base->jumps()) out.push_back(j / f.inner);
          } else if constexpr (std::is_same_v<T, Composed>) {
            for (double j : f.base->jumps())
              if (j >= 0.0) out.push_back(j / (f.coeff + j));
          }
        },
        form_);
    std::sort(out.begin(), out.end());
    return out;
  }

  bool continuous() const { return jumps().empty(); }

  /// True when some jump lies within `tol` of x.
  bool near_jump(double x, double tol) const {
    for (double j : jumps())
      if (std::abs(x - j) <= tol) return true;
    return false;
  }

  /// Continuity and bounded derivative; the step form is the one admitted violation.
  bool satisfies_h1() const { return continuous(); }

  /// Coefficients when the rate is exactly affine (directly or as a scaled affine).
  std::optional<Affine> as_affine() const {
    if (const auto* a = std::get_if<Affine>(&form_)) return *a;
    if (const auto* s = std::get_if<Scaled>(&form_)) {
      if (auto b = s->base->as_affine())
        return Affine{s->outer * s->inner * b->slope, s->outer * b->intercept};
    }
    return std::nullopt;
  }

  /// Throws ValidationError listing every violated constraint.
  void validate(const std::string& name = "rate") const {
    std::vector<std::string> issues;
    collect_issues(name, issues);
    if (!issues.empty()) {
      std::string msg = "invalid conversion rate:";
      for (const auto& i : issues) msg += "\n  " + i;
      throw ValidationError(msg);
    }
  }

  void collect_issues(const std::string& name, std::vector<std::string>& issues) const {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          auto bad = [&](bool cond, const std::string& what) {
            if (!(cond)) issues.push_back(name + ": " + what);
          };
          if constexpr (std::is_same_v<T, Affine>) {
            bad(std::isfinite(f.slope) && f.slope >= 0.0, "affine slope must be >= 0");
            bad(std::isfinite(f.intercept) && f.intercept > 0.0, "affine intercept must be > 0");
          } else if constexpr (std::is_same_v<T, Scaled>) {
            bad(f.outer > 0.0, "scaled outer factor must be > 0");
            bad(f.inner >= 0.0, "scaled inner factor must be >= 0");
            bad(f.base != nullptr, "scaled base missing");
            if (f.base) f.base->collect_issues(name + ".base", issues);
          } else if constexpr (std::is_same_v<T, Step>) {
            bad(f.low > 0.0, "step low must be > 0");
            bad(f.high > 0.0, "step high must be > 0");
            bad(f.high >= f.low, "step high must be >= low");
            bad(f.threshold > 0.0, "step threshold must be > 0");
          } else if constexpr (std::is_same_v<T, Table>) {
            bad(f.x.size() >= 2, "table needs at least two breakpoints");
            bad(f.x.size() == f.y.size(), "table x and y lengths differ");
            if (f.x.size() == f.y.size() && f.x.size() >= 2) {
              bad(f.x.front() >= 0.0, "table breakpoints must be >= 0");
              for (std::size_t i = 1; i < f.x.size(); ++i) {
                bad(f.x[i] > f.x[i - 1], "table breakpoints must be strictly increasing");
                bad(f.y[i] >= f.y[i - 1], "table values must be nondecreasing");
              }
              bad(f.y.front() > 0.0, "table values must be > 0");
            }
          } else if constexpr (std::is_same_v<T, Composed>) {
            bad(f.coeff > 0.0, "composed coefficient must be > 0");
            bad(f.cap > 0.0 && f.cap < 1.0, "composed cap must lie in (0,1)");
            bad(f.base != nullptr, "composed base missing");
            if (f.base) f.base->collect_issues(name + ".base", issues);
          }
        },
        form_);
  }

  std::string describe() const {
    std::ostringstream os;
    std::visit(
        [&os](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, Affine>) {
            os << "affine(" << f.slope << "*x+" << f.intercept << ")";
          } else if constexpr (std::is_same_v<T, Scaled>) {
            os << f.outer << "*[" << f.base->describe() << "](" << f.inner << "*x)";
          } else if constexpr (std::is_same_v<T, Step>) {
            os << "step(" << f.low << "|" << f.high << "@" << f.threshold << ")";
          } else if constexpr (std::is_same_v<T, Table>) {
            os << "table(" << f.x.size() << " points)";
          } else {
            os << "[" << f.base->describe() << "](" << f.coeff << "*x/(1-x)), x<" << f.cap;
          }
        },
        form_);
    return os.str();
  }

  friend bool operator==(const ConversionRate& l, const ConversionRate& r) {
    if (l.form_.index() != r.form_.index()) return false;
    return std::visit(
        [&r](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          const auto& b = std::get<T>(r.form_);
          if constexpr (std::is_same_v<T, Affine>) {
            return a.slope == b.slope && a.intercept == b.intercept;
          } else if constexpr (std::is_same_v<T, Scaled>) {
            return a.outer == b.outer && a.inner == b.inner && *a.base == *b.base;
          } else if constexpr (std::is_same_v<T, Step>) {
            return a.low == b.low && a.high == b.high && a.threshold == b.threshold;
          } else if constexpr (std::is_same_v<T, Table>) {
            return a.x == b.x && a.y == b.y;
          } else {
            return a.coeff == b.coeff && a.cap == b.cap && *a.base == *b.base;
          }
        },
        l.form_);
  }

 private:
  static double eval(const Affine& f, double x) { return f.slope * x + f.intercept; }
  static double eval(const Scaled& f, double x) { return f.outer * f.base->value(f.inner * x); }
  static double eval(const Step& f, double x) { return x <= f.threshold ? f.low : f.high; }
  static double eval(const Table& f, double x) {
    if (x <= f.x.front()) return f.y.front();
    if (x >= f.x.back()) return f.y.back();
    const auto it = std::upper_bound(f.x.begin(), f.x.end(), x);
    const auto i = static_cast<std::size_t>(it - f.x.begin());
    const double w = (x - f.x[i - 1]) / (f.x[i] - f.x[i - 1]);
    return f.y[i - 1] + w * (f.y[i] - f.y[i - 1]);
  }
  static double eval(const Composed& f, double x) {
    check_cap(f, x);
    return f.base->value(f.coeff * x / (1.0 - x));
  }

  static double deriv(const Affine& f, double) { return f.slope; }
  static double deriv(const Scaled& f, double x) {
    return f.outer * f.inner * f.base->derivative(f.inner * x);
  }
  static double deriv(const Step&, double) { return 0.0; }
  static double deriv(const Table& f, double x) {
    if (x < f.x.front() || x >= f.x.back()) return 0.0;
    const auto it = std::upper_bound(f.x.begin(), f.x.end(), x);
    const auto i = static_cast<std::size_t>(it - f.x.begin());
    return (f.y[i] - f.y[i - 1]) / (f.x[i] - f.x[i - 1]);
  }
  static double deriv(const Composed& f, double x) {
    check_cap(f, x);
    const double s = 1.0 - x;
    return f.base->derivative(f.coeff * x / s) * f.coeff / (s * s);
  }

  static void check_cap(const Composed& f, double x) {
    if (!(x < f.cap)) {
      std::ostringstream os;
      os << "composed rate evaluated at x=" << x << " beyond cap " << f.cap;
      throw DomainError(os.str());
    }
  }

  Form form_;
};

}  // namespace fastswitch
