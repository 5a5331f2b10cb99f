#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "hyperspec/errors.hpp"

namespace hyperspec {

// Shape of a tensor value. All computations treat data as flat row-major
// vectors; dims is bookkeeping (mostly rank-1 in practice).
struct TensorShape {
    std::vector<std::size_t> dims;

    TensorShape() = default;
    TensorShape(std::initializer_list<std::size_t> d) : dims(d) {}
    explicit TensorShape(std::vector<std::size_t> d) : dims(std::move(d)) {}

    static TensorShape vector(std::size_t n) { return TensorShape{{n}}; }

    std::size_t element_count() const {
        if (dims.empty()) return 0;
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return n;
    }

    bool valid() const {
        if (dims.empty()) return false;
        for (std::size_t d : dims) {
            if (d < 1) return false;
        }
        return true;
    }

    bool operator==(const TensorShape& o) const { return dims == o.dims; }
    bool operator!=(const TensorShape& o) const { return !(*this == o); }
};

// A concrete tensor value: shape plus flat row-major data.
struct Value {
    TensorShape shape;
    std::vector<double> data;

    Value() = default;
    Value(TensorShape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (shape.element_count() != data.size())
            throw ShapeError("Value: data length does not match shape element count");
    }

    static Value vector(std::vector<double> d) {
        TensorShape s = TensorShape::vector(d.size());
        return Value(std::move(s), std::move(d));
    }

    static Value scalar(double x) { return vector({x}); }

    static Value zeros(std::size_t n) { return vector(std::vector<double>(n, 0.0)); }

    std::size_t size() const { return data.size(); }
    double operator[](std::size_t i) const { return data[i]; }
    double& operator[](std::size_t i) { return data[i]; }

    bool all_finite() const {
        for (double x : data) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }
};

// Dense row-major matrix used for affine node weights.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;  // rows*cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> v) : rows(r), cols(c), a(std::move(v)) {
        if (a.size() != rows * cols) throw ShapeError("Matrix: data length mismatch");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    static Matrix scaled_identity(std::size_t n, double s) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = s;
        return m;
    }

    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
};

// Axis-aligned box given by elementwise lower/upper bounds. Used both for
// network input domains and for verifier search regions.
struct Hyperrectangle {
    Value lower;
    Value upper;

    Hyperrectangle() = default;
    Hyperrectangle(Value lo, Value hi) : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.shape != upper.shape)
            throw ShapeError("Hyperrectangle: lower/upper shape mismatch");
        if (!lower.all_finite() || !upper.all_finite())
            throw ShapeError("Hyperrectangle: bounds must be finite");
        for (std::size_t i = 0; i < lower.size(); ++i) {
            if (lower[i] > upper[i])
                throw ShapeError("Hyperrectangle: lower exceeds upper at coordinate " +
                                 std::to_string(i));
        }
    }

    static Hyperrectangle cube(std::size_t n, double lo, double hi) {
        return Hyperrectangle(Value::vector(std::vector<double>(n, lo)),
                              Value::vector(std::vector<double>(n, hi)));
    }

    std::size_t dim() const { return lower.size(); }

    bool contains(const Value& p, double slack = 0.0) const {
        if (p.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i) {
            if (p[i] < lower[i] - slack || p[i] > upper[i] + slack) return false;
        }
        return true;
    }

    double width(std::size_t i) const { return upper[i] - lower[i]; }

    // Concatenation of two boxes (product of the underlying sets).
    static Hyperrectangle concat(const Hyperrectangle& a, const Hyperrectangle& b) {
        std::vector<double> lo = a.lower.data;
        lo.insert(lo.end(), b.lower.data.begin(), b.lower.data.end());
        std::vector<double> hi = a.upper.data;
        hi.insert(hi.end(), b.upper.data.begin(), b.upper.data.end());
        return Hyperrectangle(Value::vector(std::move(lo)), Value::vector(std::move(hi)));
    }
};

}  // namespace hyperspec
