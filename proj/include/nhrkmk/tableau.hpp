#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace nhrkmk {

/// Runge-Kutta coefficients (a, b, c) with s stages.
struct ButcherTableau
{
  int stages = 0;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

/// Lobatto IIIA tableau with s in {2, 3, 4} (orders 2, 4, 6).
/// Throws UnsupportedStageCount otherwise.
ButcherTableau lobatto(int stages);

enum class TableauCondition
{
  Shape,            // a is s x s, b and c have s entries
  WeightSum,        // sum_j b_j = 1
  RowSum,           // sum_j a_ij = c_i
  FirstRowZero,     // a_1j = 0
  StiffAccuracy,    // a_sj = b_j
  EndpointNodes,    // c_1 = 0, c_s = 1
  PositiveWeights,  // b_i > 0 (the momentum equations divide by b_i)
  StageOrder,       // sum_j a_ij c_j^(q-1) = c_i^q / q, q = 1..s-1
  QuadratureOrder,  // sum_j b_j c_j^(q-1) = 1/q, q = 1..2s-2
};

struct TableauViolation
{
  TableauCondition condition;
  std::string detail;
};

/// Every violated structural or order condition, checked to 1e-14. Empty means valid.
std::vector<TableauViolation> validate(const ButcherTableau& t);

}  // namespace nhrkmk
