#pragma once

#include <vector>

namespace nlsg::eig {

// Dense symmetric eigendecomposition: Householder reduction to tridiagonal
// followed by implicit QL with shifts. On return `a` holds orthonormal
// eigenvectors column-wise (a[i*n+j] = component i of vector j) and
// `values` the eigenvalues in ascending order.
void symmetric_eigen(int n, std::vector<double>& a,
                     std::vector<double>& values);

// Eigenvalues and optional vectors of a symmetric tridiagonal matrix.
// `z` must be the identity (or an accumulated basis) of size n*n when
// vectors are wanted, empty otherwise.
void tridiag_ql(std::vector<double>& diag, std::vector<double>& off,
                std::vector<double>& z, int n);

} // namespace nlsg::eig
