#include "nhrkmk/tableau.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nhrkmk/errors.hpp"

namespace nhrkmk {

ButcherTableau lobatto(int stages)
{
  ButcherTableau t;
  t.stages = stages;
  t.a.resize(stages, stages);
  t.b.resize(stages);
  t.c.resize(stages);
  switch (stages) {
    case 2:
      t.a << 0.0, 0.0,
             0.5, 0.5;
      t.b << 0.5, 0.5;
      t.c << 0.0, 1.0;
      break;
    case 3:
      t.a << 0.0, 0.0, 0.0,
             5.0 / 24, 1.0 / 3, -1.0 / 24,
             1.0 / 6, 2.0 / 3, 1.0 / 6;
      t.b << 1.0 / 6, 2.0 / 3, 1.0 / 6;
      t.c << 0.0, 0.5, 1.0;
      break;
    case 4: {
      const double r5 = std::sqrt(5.0);
      t.a << 0.0, 0.0, 0.0, 0.0,
             (11 + r5) / 120, (25 - r5) / 120, (25 - 13 * r5) / 120, (-1 + r5) / 120,
             (11 - r5) / 120, (25 + 13 * r5) / 120, (25 + r5) / 120, (-1 - r5) / 120,
             1.0 / 12, 5.0 / 12, 5.0 / 12, 1.0 / 12;
      t.b << 1.0 / 12, 5.0 / 12, 5.0 / 12, 1.0 / 12;
      t.c << 0.0, (5 - r5) / 10, (5 + r5) / 10, 1.0;
      break;
    }
    default:
      throw UnsupportedStageCount("lobatto: stage count " + std::to_string(stages) +
                                  " not in {2, 3, 4}");
  }
  return t;
}

std::vector<TableauViolation> validate(const ButcherTableau& t)
{
  constexpr double tol = 1e-14;
  std::vector<TableauViolation> out;
  const auto report = [&out](TableauCondition cond, int row, double residual) {
    std::ostringstream msg;
    if (row >= 0) msg << "row " << row + 1 << ": ";
    msg << "residual " << residual;
    out.push_back({cond, msg.str()});
  };

  const int s = t.stages;
  if (s < 1 || t.a.rows() != s || t.a.cols() != s || t.b.size() != s || t.c.size() != s) {
    out.push_back({TableauCondition::Shape, "inconsistent dimensions"});
    return out;
  }

  if (const double r = std::abs(t.b.sum() - 1.0); r > tol) {
    report(TableauCondition::WeightSum, -1, r);
  }
  for (int i = 0; i < s; ++i) {
    if (const double r = std::abs(t.a.row(i).sum() - t.c(i)); r > tol) {
      report(TableauCondition::RowSum, i, r);
    }
  }
  if (const double r = t.a.row(0).cwiseAbs().maxCoeff(); r > 0.0) {
    report(TableauCondition::FirstRowZero, 0, r);
  }
  if (const double r = (t.a.row(s - 1).transpose() - t.b).cwiseAbs().maxCoeff(); r > 0.0) {
    report(TableauCondition::StiffAccuracy, s - 1, r);
  }
  if (std::abs(t.c(0)) > 0.0 || std::abs(t.c(s - 1) - 1.0) > tol) {
    report(TableauCondition::EndpointNodes, -1, std::max(std::abs(t.c(0)), std::abs(t.c(s - 1) - 1.0)));
  }
  if (t.b.minCoeff() <= 0.0) {
    report(TableauCondition::PositiveWeights, -1, t.b.minCoeff());
  }
  for (int q = 1; q <= s - 1; ++q) {
    for (int i = 0; i < s; ++i) {
      double lhs = 0.0;
      for (int j = 0; j < s; ++j) lhs += t.a(i, j) * std::pow(t.c(j), q - 1);
      if (const double r = std::abs(lhs - std::pow(t.c(i), q) / q); r > tol) {
        report(TableauCondition::StageOrder, i, r);
      }
    }
  }
  for (int q = 1; q <= 2 * s - 2; ++q) {
    double lhs = 0.0;
    for (int j = 0; j < s; ++j) lhs += t.b(j) * std::pow(t.c(j), q - 1);
    if (const double r = std::abs(lhs - 1.0 / q); r > tol) {
      report(TableauCondition::QuadratureOrder, -1, r);
    }
  }
  return out;
}

}  // namespace nhrkmk
