#pragma once

#include <string>
#include <vector>

namespace bdsde {

enum class BasisKind { global_poly, piecewise_linear };

struct RegressionSpec {
    BasisKind basis = BasisKind::global_poly;
    int degree = 3; // total degree of the global polynomial basis
    int bins = 8;   // cells of the piecewise-linear basis (d = 1 only)
    double ridge = 1e-8;
};

// One fitted cross-sectional conditional expectation x -> E[target | X = x].
// Inputs are standardized per coordinate before the basis is applied.
struct RegressionField {
    BasisKind basis = BasisKind::global_poly;
    int d = 1, width = 1;
    std::vector<int> powers;   // global_poly: n_basis × d exponents, graded order
    std::vector<double> knots; // piecewise_linear: in standardized coordinates
    std::vector<double> mu, sd;
    std::vector<double> coef; // n_basis × width
    bool degenerate = false;  // point-supported sample: constant fit
    bool ridged = false;      // normal matrix was near-singular

    int n_basis() const;
    void eval(const double* x, double* out) const;
    double eval1(const double* x) const;
    void eval_many(int M, const double* x, double* out) const;
};

// Least-squares fit of targets (M × width) on basis functions of x (M × d).
// Accumulation and solve are deterministic for any thread count. A
// near-singular normal matrix falls back to a stronger ridge and records a
// warning; a point-supported cloud degenerates to the sample mean.
RegressionField fit_regression(const RegressionSpec& spec, int d, int width, int M,
                               const double* x, const double* targets,
                               std::vector<std::string>* warnings = nullptr);

} // namespace bdsde
