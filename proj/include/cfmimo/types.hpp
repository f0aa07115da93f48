// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cfmimo {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using CMatrixXd = CMatrix<double>;
using CVectorXd = CVector<double>;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

enum class CombinerKind { MR, MMSE };

std::string to_string(CombinerKind kind);
CombinerKind combiner_from_string(const std::string& name);

/// Thrown when AP antennas cannot be placed inside the area at the requested spacing.
class InfeasibleGeometry : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveDistance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class MalformedDataset : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TauTooSmall : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TooManyUEs : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EmptyInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace cfmimo
