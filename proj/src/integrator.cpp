#include "nhrkmk/integrator.hpp"

#include <string>

namespace nhrkmk {

std::string_view to_string(Closure closure)
{
  switch (closure) {
    case Closure::Concatenation:
      return "concat";
    case Closure::ZeroFirst:
      return "zero-first";
    case Closure::WeightedZeroSum:
      return "weighted-zero";
  }
  return "?";
}

Closure parse_closure(std::string_view name)
{
  if (name == "concat") return Closure::Concatenation;
  if (name == "zero-first") return Closure::ZeroFirst;
  if (name == "weighted-zero") return Closure::WeightedZeroSum;
  throw InvalidConfig("unknown closure '" + std::string(name) +
                      "' (expected concat|zero-first|weighted-zero)");
}

std::string_view to_string(JacobianMode mode)
{
  return mode == JacobianMode::Analytic ? "analytic" : "fd";
}

JacobianMode parse_jacobian(std::string_view name)
{
  if (name == "analytic") return JacobianMode::Analytic;
  if (name == "fd" || name == "finite-difference") return JacobianMode::FiniteDifference;
  throw InvalidConfig("unknown jacobian mode '" + std::string(name) + "' (expected analytic|fd)");
}

}  // namespace nhrkmk
