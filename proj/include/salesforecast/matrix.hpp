#ifndef SALESFORECAST_MATRIX_HPP
#define SALESFORECAST_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace salesforecast {

/**
 * Dense row-major matrix of 64-bit floats. Small and unclever on purpose:
 * every tensor in the network fits comfortably in L2.
 */
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const std::string& what) {
    if (m.rows() != rows || m.cols() != cols)
        throw std::invalid_argument(what + ": expected " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                    "x" + std::to_string(m.cols()));
}

// y = M * x
inline void matvec(const Matrix& m, const double* x, double* y) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* mr = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) acc += mr[c] * x[c];
        y[r] = acc;
    }
}

// y += M^T * g  (accumulating transpose-matvec, used in backprop)
inline void matvec_transpose_add(const Matrix& m, const double* g, double* y) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* mr = m.row(r);
        const double gr = g[r];
        for (std::size_t c = 0; c < m.cols(); ++c) y[c] += mr[c] * gr;
    }
}

// M += g ⊗ x (rank-one update, used to accumulate weight gradients)
inline void outer_add(Matrix& m, const double* g, const double* x) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double* mr = m.row(r);
        const double gr = g[r];
        for (std::size_t c = 0; c < m.cols(); ++c) mr[c] += gr * x[c];
    }
}

} // namespace salesforecast

#endif
