#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace smm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct DimensionMismatch : std::invalid_argument {
    explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct NotPSD : std::invalid_argument {
    double min_eigenvalue;
    explicit NotPSD(const std::string& what, double min_eig = 0.0)
        : std::invalid_argument(what), min_eigenvalue(min_eig) {}
};

struct NoClosedForm : std::invalid_argument {
    explicit NoClosedForm(const std::string& what) : std::invalid_argument(what) {}
};

struct SingularSolve : std::runtime_error {
    explicit SingularSolve(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateLabels : std::invalid_argument {
    explicit DegenerateLabels(const std::string& what) : std::invalid_argument(what) {}
};

struct NegativeSquaredDistance : std::runtime_error {
    explicit NegativeSquaredDistance(const std::string& what) : std::runtime_error(what) {}
};

struct UnsupportedKernel : std::invalid_argument {
    explicit UnsupportedKernel(const std::string& what) : std::invalid_argument(what) {}
};

struct GramNotPSD : std::runtime_error {
    explicit GramNotPSD(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::invalid_argument {
    explicit ParseError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace smm
