#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lazygnn {

// Dense row-major matrix. Carrier for node features, logits and gradients.
template <class T>
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(size_t rows, size_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }

    T& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }
    const T& operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }

    T* row(size_t i) { return data_.data() + i * cols_; }
    const T* row(size_t i) const { return data_.data() + i * cols_; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(T value) { data_.assign(data_.size(), value); }

private:
    size_t rows_, cols_;
    std::vector<T> data_;
};

template <class T>
void check_same_shape(const Matrix<T>& a, const Matrix<T>& b, const char* what) {
    if (!a.same_shape(b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

template <class T>
T frobenius_norm(const Matrix<T>& m) {
    T acc = 0;
    for (T v : m.data()) acc += v * v;
    return std::sqrt(acc);
}

template <class T>
T frobenius_distance(const Matrix<T>& a, const Matrix<T>& b) {
    check_same_shape(a, b, "frobenius_distance");
    T acc = 0;
    for (size_t i = 0; i < a.data().size(); ++i) {
        T d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// out = a*x + b*y, elementwise over equal-shaped matrices.
template <class T>
Matrix<T> linear_combination(T a, const Matrix<T>& x, T b, const Matrix<T>& y) {
    check_same_shape(x, y, "linear_combination");
    Matrix<T> out(x.rows(), x.cols());
    for (size_t i = 0; i < x.data().size(); ++i) out.data()[i] = a * x.data()[i] + b * y.data()[i];
    return out;
}

// Plain dense product, used by the MLP layers (rows x inner) * (inner x cols).
template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix<T> out(a.rows(), b.cols());
    for (size_t i = 0; i < a.rows(); ++i) {
        for (size_t k = 0; k < a.cols(); ++k) {
            const T aik = a(i, k);
            const T* brow = b.row(k);
            T* orow = out.row(i);
            for (size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

// a^T * b where a is (n x r), b is (n x c); result (r x c).
template <class T>
Matrix<T> matmul_at_b(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("matmul_at_b: row count mismatch");
    Matrix<T> out(a.cols(), b.cols());
    for (size_t n = 0; n < a.rows(); ++n) {
        const T* arow = a.row(n);
        const T* brow = b.row(n);
        for (size_t i = 0; i < a.cols(); ++i) {
            T* orow = out.row(i);
            const T ai = arow[i];
            for (size_t j = 0; j < b.cols(); ++j) orow[j] += ai * brow[j];
        }
    }
    return out;
}

// a * b^T where a is (n x c), b is (m x c); result (n x m).
template <class T>
Matrix<T> matmul_a_bt(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols() != b.cols()) throw std::invalid_argument("matmul_a_bt: column count mismatch");
    Matrix<T> out(a.rows(), b.rows());
    for (size_t i = 0; i < a.rows(); ++i) {
        const T* arow = a.row(i);
        for (size_t j = 0; j < b.rows(); ++j) {
            const T* brow = b.row(j);
            T acc = 0;
            for (size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
            out(i, j) = acc;
        }
    }
    return out;
}

}  // namespace lazygnn
