#pragma once

// Declarative, non-negative intensity functions of time.
//
// Every form is serializable and carries analytic lower/upper bounds, so
// sup/inf over t can be computed without sampling. The sinusoidal forms have
// period one; compositions keep period one only under integer time scaling.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace ergobound {

class TimeFunction;

namespace detail {

struct ConstantForm {
  double value;
};
struct SinusoidForm {  // offset + amplitude * sin(2 pi t)
  double offset;
  double amplitude;
};
struct CosinusoidForm {  // offset + amplitude * cos(2 pi t)
  double offset;
  double amplitude;
};
struct PiecewiseForm {  // value[k] on [start[k], start[k+1]) within [0,1), periodic
  std::vector<double> starts;
  std::vector<double> values;
};
struct ComposeForm {  // scale * inner(time_scale * t + shift)
  double scale;
  double time_scale;
  double shift;
  std::shared_ptr<const TimeFunction> inner;
};
struct SumForm {
  std::vector<TimeFunction> terms;
};
struct ProductForm {
  std::vector<TimeFunction> factors;
};

using Form = std::variant<ConstantForm, SinusoidForm, CosinusoidForm, PiecewiseForm,
                          ComposeForm, SumForm, ProductForm>;

inline double frac(double t) { return t - std::floor(t); }

inline bool is_integer(double x) { return std::floor(x) == x; }

}  // namespace detail

class TimeFunction {
 public:
  TimeFunction() : TimeFunction(constant(0.0)) {}

  static TimeFunction constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c))
      throw std::invalid_argument("constant intensity must be finite and non-negative");
    return TimeFunction(detail::ConstantForm{c});
  }

  static TimeFunction sinusoid(double offset, double amplitude) {
    check_harmonic(offset, amplitude, "sinusoid");
    return TimeFunction(detail::SinusoidForm{offset, amplitude});
  }

  static TimeFunction cosinusoid(double offset, double amplitude) {
    check_harmonic(offset, amplitude, "cosinusoid");
    return TimeFunction(detail::CosinusoidForm{offset, amplitude});
  }

  static TimeFunction piecewise(std::vector<double> starts, std::vector<double> values) {
    if (starts.empty() || starts.size() != values.size())
      throw std::invalid_argument("piecewise: starts and values must be non-empty and equal length");
    if (starts.front() != 0.0)
      throw std::invalid_argument("piecewise: first piece must start at 0");
    for (std::size_t k = 0; k < starts.size(); ++k) {
      if (!(starts[k] >= 0.0 && starts[k] < 1.0))
        throw std::invalid_argument("piecewise: starts must lie in [0,1)");
      if (k > 0 && !(starts[k] > starts[k - 1]))
        throw std::invalid_argument("piecewise: starts must be strictly increasing");
      if (!(values[k] >= 0.0) || !std::isfinite(values[k]))
        throw std::invalid_argument("piecewise: values must be finite and non-negative");
    }
    return TimeFunction(detail::PiecewiseForm{std::move(starts), std::move(values)});
  }

  static TimeFunction compose(TimeFunction inner, double scale, double time_scale = 1.0,
                              double shift = 0.0) {
    if (!(scale >= 0.0) || !std::isfinite(scale))
      throw std::invalid_argument("compose: scale must be finite and non-negative");
    if (!(time_scale > 0.0) || !std::isfinite(time_scale))
      throw std::invalid_argument("compose: time_scale must be positive");
    if (!std::isfinite(shift)) throw std::invalid_argument("compose: shift must be finite");
    return TimeFunction(detail::ComposeForm{
        scale, time_scale, shift, std::make_shared<const TimeFunction>(std::move(inner))});
  }

  static TimeFunction sum(std::vector<TimeFunction> terms) {
    if (terms.empty()) throw std::invalid_argument("sum: needs at least one term");
    return TimeFunction(detail::SumForm{std::move(terms)});
  }

  static TimeFunction product(std::vector<TimeFunction> factors) {
    if (factors.empty()) throw std::invalid_argument("product: needs at least one factor");
    return TimeFunction(detail::ProductForm{std::move(factors)});
  }

  double operator()(double t) const {
    return std::visit([t](const auto& f) { return eval(f, t); }, *form_);
  }

  /// Upper bound on sup_{t>=0} f(t); exact for the primitive forms.
  double sup() const {
    return std::visit([](const auto& f) { return sup_of(f); }, *form_);
  }

  /// Lower bound on inf_{t>=0} f(t); exact for the primitive forms.
  double inf() const {
    return std::visit([](const auto& f) { return inf_of(f); }, *form_);
  }

  bool is_constant() const {
    return std::visit([](const auto& f) { return constant_of(f); }, *form_);
  }

  bool is_periodic() const {
    return std::visit([](const auto& f) { return periodic_of(f); }, *form_);
  }

  nlohmann::json to_json() const {
    return std::visit([](const auto& f) { return json_of(f); }, *form_);
  }

  static TimeFunction from_json(const nlohmann::json& j);

  const detail::Form& form() const { return *form_; }

 private:
  explicit TimeFunction(detail::Form form)
      : form_(std::make_shared<const detail::Form>(std::move(form))) {}

  static void check_harmonic(double offset, double amplitude, const char* name) {
    if (!std::isfinite(offset) || !std::isfinite(amplitude))
      throw std::invalid_argument(std::string(name) + ": parameters must be finite");
    if (offset - std::abs(amplitude) < 0.0)
      throw std::invalid_argument(std::string(name) +
                                  ": offset < |amplitude| makes the intensity negative");
  }

  static double eval(const detail::ConstantForm& f, double) { return f.value; }
  static double eval(const detail::SinusoidForm& f, double t) {
    return f.offset + f.amplitude * std::sin(2.0 * std::numbers::pi * detail::frac(t));
  }
  static double eval(const detail::CosinusoidForm& f, double t) {
    return f.offset + f.amplitude * std::cos(2.0 * std::numbers::pi * detail::frac(t));
  }
  static double eval(const detail::PiecewiseForm& f, double t) {
    const double u = detail::frac(t);
    std::size_t k = f.starts.size() - 1;
    while (k > 0 && f.starts[k] > u) --k;
    return f.values[k];
  }
  static double eval(const detail::ComposeForm& f, double t) {
    return f.scale * (*f.inner)(f.time_scale * t + f.shift);
  }
  static double eval(const detail::SumForm& f, double t) {
    double s = 0.0;
    for (const auto& g : f.terms) s += g(t);
    return s;
  }
  static double eval(const detail::ProductForm& f, double t) {
    double p = 1.0;
    for (const auto& g : f.factors) p *= g(t);
    return p;
  }

  static double sup_of(const detail::ConstantForm& f) { return f.value; }
  static double sup_of(const detail::SinusoidForm& f) { return f.offset + std::abs(f.amplitude); }
  static double sup_of(const detail::CosinusoidForm& f) { return f.offset + std::abs(f.amplitude); }
  static double sup_of(const detail::PiecewiseForm& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, v);
    return m;
  }
  static double sup_of(const detail::ComposeForm& f) { return f.scale * f.inner->sup(); }
  static double sup_of(const detail::SumForm& f) {
    double s = 0.0;
    for (const auto& g : f.terms) s += g.sup();
    return s;
  }
  static double sup_of(const detail::ProductForm& f) {
    double p = 1.0;
    for (const auto& g : f.factors) p *= g.sup();
    return p;
  }

  static double inf_of(const detail::ConstantForm& f) { return f.value; }
  static double inf_of(const detail::SinusoidForm& f) { return f.offset - std::abs(f.amplitude); }
  static double inf_of(const detail::CosinusoidForm& f) { return f.offset - std::abs(f.amplitude); }
  static double inf_of(const detail::PiecewiseForm& f) {
    double m = f.values.front();
    for (double v : f.values) m = std::min(m, v);
    return m;
  }
  static double inf_of(const detail::ComposeForm& f) { return f.scale * f.inner->inf(); }
  static double inf_of(const detail::SumForm& f) {
    double s = 0.0;
    for (const auto& g : f.terms) s += g.inf();
    return s;
  }
  static double inf_of(const detail::ProductForm& f) {
    double p = 1.0;
    for (const auto& g : f.factors) p *= g.inf();
    return p;
  }

  static bool constant_of(const detail::ConstantForm&) { return true; }
  static bool constant_of(const detail::SinusoidForm& f) { return f.amplitude == 0.0; }
  static bool constant_of(const detail::CosinusoidForm& f) { return f.amplitude == 0.0; }
  static bool constant_of(const detail::PiecewiseForm& f) {
    for (double v : f.values)
      if (v != f.values.front()) return false;
    return true;
  }
  static bool constant_of(const detail::ComposeForm& f) {
    return f.scale == 0.0 || f.inner->is_constant();
  }
  static bool constant_of(const detail::SumForm& f) {
    for (const auto& g : f.terms)
      if (!g.is_constant()) return false;
    return true;
  }
  static bool constant_of(const detail::ProductForm& f) {
    for (const auto& g : f.factors)
      if (g.sup() == 0.0) return true;
    for (const auto& g : f.factors)
      if (!g.is_constant()) return false;
    return true;
  }

  static bool periodic_of(const detail::ConstantForm&) { return true; }
  static bool periodic_of(const detail::SinusoidForm&) { return true; }
  static bool periodic_of(const detail::CosinusoidForm&) { return true; }
  static bool periodic_of(const detail::PiecewiseForm&) { return true; }
  static bool periodic_of(const detail::ComposeForm& f) {
    if (constant_of(f)) return true;
    return detail::is_integer(f.time_scale) && f.inner->is_periodic();
  }
  static bool periodic_of(const detail::SumForm& f) {
    for (const auto& g : f.terms)
      if (!g.is_periodic()) return false;
    return true;
  }
  static bool periodic_of(const detail::ProductForm& f) {
    if (constant_of(f)) return true;
    for (const auto& g : f.factors)
      if (!g.is_periodic()) return false;
    return true;
  }

  static nlohmann::json json_of(const detail::ConstantForm& f) {
    return {{"form", "constant"}, {"value", f.value}};
  }
  static nlohmann::json json_of(const detail::SinusoidForm& f) {
    return {{"form", "sinusoid"}, {"offset", f.offset}, {"amplitude", f.amplitude}};
  }
  static nlohmann::json json_of(const detail::CosinusoidForm& f) {
    return {{"form", "cosinusoid"}, {"offset", f.offset}, {"amplitude", f.amplitude}};
  }
  static nlohmann::json json_of(const detail::PiecewiseForm& f) {
    return {{"form", "piecewise"}, {"starts", f.starts}, {"values", f.values}};
  }
  static nlohmann::json json_of(const detail::ComposeForm& f) {
    return {{"form", "compose"},
            {"scale", f.scale},
            {"time_scale", f.time_scale},
            {"shift", f.shift},
            {"of", f.inner->to_json()}};
  }
  static nlohmann::json json_of(const detail::SumForm& f) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& g : f.terms) terms.push_back(g.to_json());
    return {{"form", "sum"}, {"terms", terms}};
  }
  static nlohmann::json json_of(const detail::ProductForm& f) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& g : f.factors) factors.push_back(g.to_json());
    return {{"form", "product"}, {"factors", factors}};
  }

  std::shared_ptr<const detail::Form> form_;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) throw std::invalid_argument("time function must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : required)
      if (it.key() == k) known = true;
    for (const char* k : optional)
      if (it.key() == k) known = true;
    if (!known) throw std::invalid_argument("unknown time-function field: " + it.key());
  }
  for (const char* k : required)
    if (!j.contains(k)) throw std::invalid_argument(std::string("missing time-function field: ") + k);
}

}  // namespace detail

inline TimeFunction TimeFunction::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("form") || !j.at("form").is_string())
    throw std::invalid_argument("time function needs a string 'form'");
  const std::string form = j.at("form");
  if (form == "constant") {
    detail::require_keys(j, {"form", "value"});
    return constant(j.at("value").get<double>());
  }
  if (form == "sinusoid" || form == "cosinusoid") {
    detail::require_keys(j, {"form", "offset", "amplitude"});
    const double a = j.at("offset").get<double>();
    const double b = j.at("amplitude").get<double>();
    return form == "sinusoid" ? sinusoid(a, b) : cosinusoid(a, b);
  }
  if (form == "piecewise") {
    detail::require_keys(j, {"form", "starts", "values"});
    return piecewise(j.at("starts").get<std::vector<double>>(),
                     j.at("values").get<std::vector<double>>());
  }
  if (form == "compose") {
    detail::require_keys(j, {"form", "scale", "of"}, {"time_scale", "shift"});
    return compose(from_json(j.at("of")), j.at("scale").get<double>(),
                   j.value("time_scale", 1.0), j.value("shift", 0.0));
  }
  if (form == "sum" || form == "product") {
    const char* key = form == "sum" ? "terms" : "factors";
    detail::require_keys(j, {"form", key});
    std::vector<TimeFunction> parts;
    for (const auto& e : j.at(key)) parts.push_back(from_json(e));
    return form == "sum" ? sum(std::move(parts)) : product(std::move(parts));
  }
  throw std::invalid_argument("unknown time-function form: " + form);
}

}  // namespace ergobound
