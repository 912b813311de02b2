#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace deltagnn {

// Row-major dense matrix.
template <typename T>
struct Matrix {
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(int64_t r, int64_t c, T fill = T{})
        : rows(r), cols(c), data(static_cast<size_t>(r * c), fill) {}

    T* row(int64_t i) { return data.data() + static_cast<size_t>(i * cols); }
    const T* row(int64_t i) const { return data.data() + static_cast<size_t>(i * cols); }
    std::span<T> row_span(int64_t i) { return {row(i), static_cast<size_t>(cols)}; }
    std::span<const T> row_span(int64_t i) const { return {row(i), static_cast<size_t>(cols)}; }

    T& operator()(int64_t i, int64_t j) { return data[static_cast<size_t>(i * cols + j)]; }
    const T& operator()(int64_t i, int64_t j) const { return data[static_cast<size_t>(i * cols + j)]; }

    void resize(int64_t r, int64_t c, T fill = T{}) {
        rows = r;
        cols = c;
        data.assign(static_cast<size_t>(r * c), fill);
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

using MatrixD = Matrix<double>;
using MatrixF = Matrix<float>;

template <typename To, typename From>
Matrix<To> convert(const Matrix<From>& m) {
    Matrix<To> out(m.rows, m.cols);
    for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = static_cast<To>(m.data[i]);
    return out;
}

}  // namespace deltagnn
