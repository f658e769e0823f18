#include "smdp/scale.hpp"

#include <sstream>

#include "smdp/errors.hpp"

namespace smdp {

double lil_scale(double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 0.1)) {
    throw DomainError("log log(1/eps) needs 0 < eps < 1/10");
  }
  return 1.0 / std::sqrt(2.0 * std::log(std::log(1.0 / epsilon)));
}

double lil_normalisation(double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < 0.1)) {
    throw DomainError("log log(1/eps) needs 0 < eps < 1/10");
  }
  return std::sqrt(2.0 * epsilon * std::log(std::log(1.0 / epsilon)));
}

double loglog_bound(double epsilon, double rate) {
  if (!(epsilon > 0.0) || !(epsilon < 1.0 / std::exp(1.0))) {
    throw DomainError("bound needs log log(1/eps) > 0");
  }
  return std::exp(-2.0 * rate * std::log(std::log(1.0 / epsilon)));
}

DeviationScale::DeviationScale(ScaleMode mode, double epsilon, double a)
    : mode_(mode), epsilon_(epsilon), a_(a) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ScaleError("need 0 < eps < 1");
  if (!(a > 0.0 && a < 1.0)) throw ScaleError("need 0 < a(eps) < 1");
  if (!(epsilon / (a * a) < 1.0)) throw ScaleError("need eps / a(eps)^2 < 1");
}

DeviationScale DeviationScale::lil(double epsilon) {
  if (!(epsilon > 0.0) || !(epsilon < kLilEpsilonMax)) {
    std::ostringstream msg;
    msg << "iterated-logarithm scaling needs 0 < eps < 10^(-sqrt 10) ~ " << kLilEpsilonMax
        << ", got " << epsilon;
    throw ScaleError(msg.str());
  }
  return DeviationScale(ScaleMode::lil, epsilon, lil_scale(epsilon));
}

DeviationScale DeviationScale::generic(double epsilon, double a) {
  return DeviationScale(ScaleMode::generic, epsilon, a);
}

DeviationScale DeviationScale::power(double epsilon, double exponent) {
  if (!(exponent > 0.0 && exponent < 0.5)) {
    throw ScaleError("a(eps) = eps^p needs 0 < p < 1/2");
  }
  return DeviationScale(ScaleMode::generic, epsilon, std::pow(epsilon, exponent));
}

std::string DeviationScale::describe() const {
  std::ostringstream out;
  out << (mode_ == ScaleMode::lil ? "lil" : "generic") << "(eps=" << epsilon_ << ", a=" << a_
      << ")";
  return out.str();
}

}  // namespace smdp
