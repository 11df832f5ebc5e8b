#pragma once

#include "lgmreg/geom3d.hpp"

namespace lgmreg {

/// M = U diag(S) V^T with S sorted descending and U, V orthogonal
/// (either may have determinant -1).
struct Svd3 {
  Mat3 U;
  Vec3 S;
  Mat3 V;
};

/// One-sided (Hestenes) Jacobi SVD of a 3x3 matrix. Column pairs of M V are
/// rotated until their mutual inner products fall below 1e-14 of the product
/// of their norms, which diagonalizes M^T M without forming it.
Svd3 svd3(const Mat3& M);

}  // namespace lgmreg
