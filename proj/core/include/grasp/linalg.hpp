#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "grasp/error.hpp"

namespace grasp::linalg {

// Dense row-major matrix of 64-bit reals. The single carrier for weights,
// gradients, and accumulated updates. Constructors reject non-finite
// entries; in-place element writes are the caller's responsibility.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);  // zero-filled
    Matrix(int rows, int cols, std::vector<double> values);

    static Matrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double operator()(int r, int c) const { return data_[idx(r, c)]; }
    double& operator()(int r, int c) { return data_[idx(r, c)]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double scale);

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

private:
    std::size_t idx(int r, int c) const {
        return static_cast<std::size_t>(r) * cols_ + c;
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double scale, Matrix m);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
Matrix hadamard(const Matrix& a, const Matrix& b);

// Euclidean-unit vector. `normalized` rescales its input; `checked` accepts
// data already unit to 1e-12 relative; `unchecked` skips validation and
// exists so tests can build invariant-violating fixtures.
class UnitVector {
public:
    static UnitVector normalized(std::vector<double> values);
    static UnitVector checked(std::vector<double> values);
    static UnitVector unchecked(std::vector<double> values);

    static UnitVector basis(int dim, int index);

    int dim() const { return static_cast<int>(data_.size()); }
    double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }
    std::span<const double> data() const { return data_; }

    double dot(const UnitVector& other) const;

private:
    explicit UnitVector(std::vector<double> values) : data_(std::move(values)) {}
    std::vector<double> data_;
};

// (u, sigma, v) with sigma >= 0 and the sign fixed so the first nonzero
// entry of u is positive (v flips together with u, so u sigma v^T is
// unchanged). Makes repeated decompositions bitwise comparable.
struct SvdTriple {
    UnitVector u;
    UnitVector v;
    double sigma = 0.0;
};

double frobenius_norm(const Matrix& m);
double inner_product(const Matrix& a, const Matrix& b);

std::vector<double> matvec(const Matrix& m, std::span<const double> x);
std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x);

Matrix outer(const UnitVector& u, const UnitVector& v);
// m += scale * u v^T without materializing the outer product.
void add_scaled_outer(Matrix& m, double scale, const UnitVector& u, const UnitVector& v);

// Dominant singular triple by alternating power iteration from a fixed
// deterministic start (normalized all-ones), so probes are reproducible
// across runs. Throws DegenerateInputError on the zero matrix and
// ConvergenceError (carrying the last iterate and residual) when max_iter
// is exhausted; a near-degenerate sigma_1 ~ sigma_2 spectrum is reported
// through the latter, never special-cased.
SvdTriple top1_svd(const Matrix& m, double tol = 1e-13, int max_iter = 5000);

// Full decomposition by one-sided Jacobi rotations, descending sigma.
// Small-instance verification oracle: max(rows, cols) <= 64.
std::vector<SvdTriple> full_svd_oracle(const Matrix& m);

// Dense LU solve with partial pivoting for the small Gram systems of the
// projector. Throws RankDeficiencyError on singular input.
std::vector<double> solve_linear(Matrix a, std::vector<double> rhs);

}  // namespace grasp::linalg
