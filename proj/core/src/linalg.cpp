#include "grasp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace grasp::linalg {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ParameterError(std::string(what) + ": non-finite entry");
        }
    }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch (" +
                             std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()) + "x" +
                             std::to_string(b.cols()) + ")");
    }
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return std::sqrt(s);
}

void scale_in_place(std::span<double> v, double c) {
    for (double& x : v) {
        x *= c;
    }
}

// Flip (u, v) together so the first nonzero entry of u is positive.
void apply_sign_convention(std::vector<double>& u, std::vector<double>& v) {
    for (double x : u) {
        if (x != 0.0) {
            if (x < 0.0) {
                for (double& e : u) e = -e;
                for (double& e : v) e = -e;
            }
            return;
        }
    }
}

}  // namespace

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0) {
        throw ParameterError("Matrix: dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (rows <= 0 || cols <= 0) {
        throw ParameterError("Matrix: dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(rows) * cols) {
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " != rows*cols " +
                             std::to_string(static_cast<std::size_t>(rows) * cols));
    }
    require_finite(data_, "Matrix");
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] += other.data_[i];
    }
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        data_[i] -= other.data_[i];
    }
    return *this;
}

Matrix& Matrix::operator*=(double scale) {
    for (double& x : data_) {
        x *= scale;
    }
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) {
    a += b;
    return a;
}

Matrix operator-(Matrix a, const Matrix& b) {
    a -= b;
    return a;
}

Matrix operator*(double scale, Matrix m) {
    m *= scale;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) +
                             " vs " + std::to_string(b.rows()));
    }
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            out(j, i) = m(i, j);
        }
    }
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    auto d = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] *= bd[i];
    }
    return out;
}

UnitVector UnitVector::normalized(std::vector<double> values) {
    require_finite(values, "UnitVector");
    const double n = norm2(values);
    if (n == 0.0) {
        throw DegenerateInputError("UnitVector: cannot normalize the zero vector");
    }
    scale_in_place(values, 1.0 / n);
    return UnitVector(std::move(values));
}

UnitVector UnitVector::checked(std::vector<double> values) {
    require_finite(values, "UnitVector");
    const double n = norm2(values);
    if (std::abs(n - 1.0) > 1e-12) {
        throw ParameterError("UnitVector: norm " + std::to_string(n) +
                             " not unit within 1e-12");
    }
    return UnitVector(std::move(values));
}

UnitVector UnitVector::unchecked(std::vector<double> values) {
    return UnitVector(std::move(values));
}

UnitVector UnitVector::basis(int dim, int index) {
    if (dim <= 0 || index < 0 || index >= dim) {
        throw ParameterError("UnitVector::basis: index out of range");
    }
    std::vector<double> v(static_cast<std::size_t>(dim), 0.0);
    v[static_cast<std::size_t>(index)] = 1.0;
    return UnitVector(std::move(v));
}

double UnitVector::dot(const UnitVector& other) const {
    if (dim() != other.dim()) {
        throw DimensionError("UnitVector::dot: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        s += data_[i] * other.data_[i];
    }
    return s;
}

double frobenius_norm(const Matrix& m) {
    return norm2(m.data());
}

double inner_product(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "inner_product");
    auto ad = a.data();
    auto bd = b.data();
    double s = 0.0;
    for (std::size_t i = 0; i < ad.size(); ++i) {
        s += ad[i] * bd[i];
    }
    return s;
}

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.cols()) {
        throw DimensionError("matvec: vector length " + std::to_string(x.size()) +
                             " vs cols " + std::to_string(m.cols()));
    }
    std::vector<double> out(static_cast<std::size_t>(m.rows()), 0.0);
    for (int i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols(); ++j) {
            s += m(i, j) * x[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.rows()) {
        throw DimensionError("matvec_transposed: vector length " +
                             std::to_string(x.size()) + " vs rows " +
                             std::to_string(m.rows()));
    }
    std::vector<double> out(static_cast<std::size_t>(m.cols()), 0.0);
    for (int i = 0; i < m.rows(); ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        if (xi == 0.0) continue;
        for (int j = 0; j < m.cols(); ++j) {
            out[static_cast<std::size_t>(j)] += m(i, j) * xi;
        }
    }
    return out;
}

Matrix outer(const UnitVector& u, const UnitVector& v) {
    Matrix m(u.dim(), v.dim());
    for (int i = 0; i < u.dim(); ++i) {
        for (int j = 0; j < v.dim(); ++j) {
            m(i, j) = u[i] * v[j];
        }
    }
    return m;
}

void add_scaled_outer(Matrix& m, double scale, const UnitVector& u, const UnitVector& v) {
    if (m.rows() != u.dim() || m.cols() != v.dim()) {
        throw DimensionError("add_scaled_outer: shape mismatch");
    }
    for (int i = 0; i < m.rows(); ++i) {
        const double su = scale * u[i];
        if (su == 0.0) continue;
        for (int j = 0; j < m.cols(); ++j) {
            m(i, j) += su * v[j];
        }
    }
    return;
}

SvdTriple top1_svd(const Matrix& m, double tol, int max_iter) {
    if (m.empty()) {
        throw ParameterError("top1_svd: empty matrix");
    }
    if (tol <= 0.0) {
        throw ParameterError("top1_svd: tol must be positive");
    }
    if (max_iter < 1) {
        throw ParameterError("top1_svd: max_iter must be >= 1");
    }
    if (frobenius_norm(m) == 0.0) {
        throw DegenerateInputError("top1_svd: zero matrix has no dominant direction");
    }

    const int d_out = m.rows();
    const int d_in = m.cols();

    // Deterministic start: normalized all-ones. If that lands in the null
    // space of m^T, fall back to basis vectors in order.
    std::vector<double> u(static_cast<std::size_t>(d_out),
                          1.0 / std::sqrt(static_cast<double>(d_out)));
    {
        auto w = matvec_transposed(m, u);
        int fallback = 0;
        while (norm2(w) == 0.0 && fallback < d_out) {
            std::fill(u.begin(), u.end(), 0.0);
            u[static_cast<std::size_t>(fallback)] = 1.0;
            w = matvec_transposed(m, u);
            ++fallback;
        }
        if (norm2(w) == 0.0) {
            throw DegenerateInputError("top1_svd: no usable start vector");
        }
    }

    std::vector<double> v(static_cast<std::size_t>(d_in), 0.0);
    double sigma = 0.0;
    double residual = 0.0;

    for (int it = 0; it < max_iter; ++it) {
        v = matvec_transposed(m, u);
        const double vn = norm2(v);
        if (vn == 0.0) {
            throw ConvergenceError("top1_svd: iterate fell into the null space", u, v,
                                   sigma, 1.0);
        }
        scale_in_place(v, 1.0 / vn);

        auto z = matvec(m, v);
        sigma = norm2(z);
        if (sigma == 0.0) {
            throw ConvergenceError("top1_svd: iterate fell into the null space", u, v,
                                   sigma, 1.0);
        }
        scale_in_place(z, 1.0 / sigma);

        // Residual || m v / sigma - u || against the previous left vector.
        residual = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = z[i] - u[i];
            residual += d * d;
        }
        residual = std::sqrt(residual);
        u = std::move(z);

        if (residual <= tol) {
            apply_sign_convention(u, v);
            return SvdTriple{UnitVector::unchecked(std::move(u)),
                             UnitVector::unchecked(std::move(v)), sigma};
        }
    }

    throw ConvergenceError("top1_svd: no convergence after " + std::to_string(max_iter) +
                               " iterations (residual " + std::to_string(residual) + ")",
                           u, v, sigma, residual);
}

namespace {

constexpr int kOracleMaxDim = 64;
constexpr double kJacobiEps = 1e-15;
constexpr int kJacobiMaxSweeps = 100;

}  // namespace

std::vector<SvdTriple> full_svd_oracle(const Matrix& m) {
    if (m.empty()) {
        throw ParameterError("full_svd_oracle: empty matrix");
    }
    if (std::max(m.rows(), m.cols()) > kOracleMaxDim) {
        throw SizeError("full_svd_oracle: max dimension " +
                        std::to_string(std::max(m.rows(), m.cols())) + " exceeds " +
                        std::to_string(kOracleMaxDim));
    }

    // One-sided Jacobi orthogonalizes the columns; run on m or m^T so the
    // working matrix is tall.
    const bool transposed = m.rows() < m.cols();
    Matrix a = transposed ? transpose(m) : m;
    const int n = a.cols();
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (int i = 0; i < a.rows(); ++i) {
                    app += a(i, p) * a(i, p);
                    aqq += a(i, q) * a(i, q);
                    apq += a(i, p) * a(i, q);
                }
                if (std::abs(apq) <= kJacobiEps * std::sqrt(app * aqq)) {
                    continue;
                }
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < a.rows(); ++i) {
                    const double aip = a(i, p);
                    const double aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
        if (!rotated) {
            break;
        }
    }

    struct Column {
        double sigma;
        std::vector<double> left;
        std::vector<double> right;
    };
    std::vector<Column> cols;
    cols.reserve(static_cast<std::size_t>(n));

    const double scale = frobenius_norm(m);
    for (int k = 0; k < n; ++k) {
        Column col;
        col.left.resize(static_cast<std::size_t>(a.rows()));
        col.right.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < a.rows(); ++i) {
            col.left[static_cast<std::size_t>(i)] = a(i, k);
        }
        for (int i = 0; i < n; ++i) {
            col.right[static_cast<std::size_t>(i)] = v(i, k);
        }
        col.sigma = norm2(col.left);
        if (col.sigma > scale * 1e-300 && col.sigma > 0.0) {
            scale_in_place(col.left, 1.0 / col.sigma);
        }
        cols.push_back(std::move(col));
    }

    std::stable_sort(cols.begin(), cols.end(),
                     [](const Column& x, const Column& y) { return x.sigma > y.sigma; });

    // Columns with sigma ~ 0 carry no usable left direction; complete them
    // to an orthonormal set from basis vectors (deterministically).
    const double tiny = (scale > 0.0 ? scale : 1.0) * 1e-14;
    for (auto& col : cols) {
        if (col.sigma > tiny) {
            continue;
        }
        for (int basis = 0; basis < a.rows(); ++basis) {
            std::vector<double> cand(static_cast<std::size_t>(a.rows()), 0.0);
            cand[static_cast<std::size_t>(basis)] = 1.0;
            for (const auto& other : cols) {
                if (&other == &col || norm2(other.left) < 0.5) {
                    continue;
                }
                double proj = 0.0;
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    proj += cand[i] * other.left[i];
                }
                for (std::size_t i = 0; i < cand.size(); ++i) {
                    cand[i] -= proj * other.left[i];
                }
            }
            const double cn = norm2(cand);
            if (cn > 1e-6) {
                scale_in_place(cand, 1.0 / cn);
                col.left = std::move(cand);
                break;
            }
        }
    }

    std::vector<SvdTriple> out;
    out.reserve(cols.size());
    for (auto& col : cols) {
        std::vector<double> uu = transposed ? std::move(col.right) : std::move(col.left);
        std::vector<double> vv = transposed ? std::move(col.left) : std::move(col.right);
        apply_sign_convention(uu, vv);
        out.push_back(SvdTriple{UnitVector::unchecked(std::move(uu)),
                                UnitVector::unchecked(std::move(vv)),
                                col.sigma < 0.0 ? 0.0 : col.sigma});
    }
    return out;
}

std::vector<double> solve_linear(Matrix a, std::vector<double> rhs) {
    const int n = a.rows();
    if (a.cols() != n) {
        throw DimensionError("solve_linear: matrix must be square");
    }
    if (static_cast<int>(rhs.size()) != n) {
        throw DimensionError("solve_linear: rhs length mismatch");
    }

    double max_entry = 0.0;
    for (double x : a.data()) {
        max_entry = std::max(max_entry, std::abs(x));
    }
    const double pivot_floor = std::max(max_entry, 1.0) * 1e-13;

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);

    for (int k = 0; k < n; ++k) {
        int pivot = k;
        for (int i = k + 1; i < n; ++i) {
            if (std::abs(a(i, k)) > std::abs(a(pivot, k))) {
                pivot = i;
            }
        }
        if (std::abs(a(pivot, k)) < pivot_floor) {
            throw RankDeficiencyError("solve_linear: singular system at column " +
                                          std::to_string(k),
                                      k, k);
        }
        if (pivot != k) {
            for (int j = 0; j < n; ++j) {
                std::swap(a(k, j), a(pivot, j));
            }
            std::swap(rhs[static_cast<std::size_t>(k)], rhs[static_cast<std::size_t>(pivot)]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            if (f == 0.0) continue;
            a(i, k) = 0.0;
            for (int j = k + 1; j < n; ++j) {
                a(i, j) -= f * a(k, j);
            }
            rhs[static_cast<std::size_t>(i)] -= f * rhs[static_cast<std::size_t>(k)];
        }
    }

    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = rhs[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) {
            s -= a(i, j) * x[static_cast<std::size_t>(j)];
        }
        x[static_cast<std::size_t>(i)] = s / a(i, i);
    }
    return x;
}

}  // namespace grasp::linalg
