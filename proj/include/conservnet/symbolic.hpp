#pragma once

#include <string>
#include <vector>

#include "conservnet/dataset.hpp"
#include "conservnet/net.hpp"

namespace conservnet {

// All monomials of total degree in [1, degree] over x1..xd, graded
// lexicographic name order; the constant is absorbed into the regression
// intercept.
std::pair<Eigen::MatrixXd, std::vector<std::string>> poly_features(
    const Eigen::MatrixXd& states, int degree);

// Closed-form ridge solution of (X^T X + lambda I) beta = X^T y with an
// unpenalized intercept via centering. Features are standardized internally so
// lambda penalizes evenly across mixed variable ranges; returned coefficients
// are un-standardized. coefficients[0] is the intercept.
Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                          double lambda);

struct SymbolicTerm {
    std::string name;
    double coefficient = 0.0;
    bool survives = false;  // |c| >= threshold * max|c|
};

struct SymbolicReport {
    std::vector<SymbolicTerm> terms;  // full coefficient table, intercept excluded
    double intercept = 0.0;
    int degree = 2;
    double lambda = 1e-4;
    double threshold = 0.05;
    double r2 = 0.0;
    std::string formula;  // surviving terms only

    std::string to_json() const;
};

// Ridge regression of the model outputs on polynomial features of the dataset
// states; coefficients below threshold*max|c| are dropped from the sparse
// formula but kept in the table.
SymbolicReport extract(const MlpParams& model, const GroupedDataset& ds, int degree = 2,
                       double lambda = 1e-4, double threshold = 0.05);

}  // namespace conservnet
