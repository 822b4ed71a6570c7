#ifndef HEOMFCS_TYPES_HPP
#define HEOMFCS_TYPES_HPP

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace heomfcs {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

constexpr Complex im_unit{0.0, 1.0};

// Error taxonomy maps onto process exit codes (see tools/):
//   config_error -> 2, validation_error -> 3, numerical_error -> 4,
//   convergence_error -> 5.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace heomfcs

#endif
