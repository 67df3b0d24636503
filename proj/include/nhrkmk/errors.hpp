#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace nhrkmk {

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NonSkewInput : public Error
{
public:
  using Error::Error;
};

/// Raised when a group element lies outside the chart of the chosen retraction.
/// Inside an integrator step this means the step size is too large.
class OutOfInjectivityDomain : public Error
{
public:
  using Error::Error;
};

using RetractionDomainExceeded = OutOfInjectivityDomain;

class UnsupportedStageCount : public Error
{
public:
  using Error::Error;
};

/// The trajectory reached the attractor or its antipode.
class NearSingularPotential : public Error
{
public:
  using Error::Error;
};

class NewtonDivergence : public Error
{
public:
  NewtonDivergence(const std::string& what, double residual, int iterations)
      : Error(what + " (residual " + format_residual(residual) + " after " +
              std::to_string(iterations) + " iterations)"),
        residual_(residual), iterations_(iterations)
  {
  }

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  static std::string format_residual(double r)
  {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", r);
    return buf;
  }

  double residual_;
  int iterations_;
};

class ToleranceNotReached : public Error
{
public:
  using Error::Error;
};

class InvalidConfig : public Error
{
public:
  using Error::Error;
};

}  // namespace nhrkmk
