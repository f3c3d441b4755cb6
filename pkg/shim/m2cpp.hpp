// Runtime support the emitted dialect compiles against: column vector and
// matrix types named vec/uvec/mat, elementwise arithmetic with scalar
// broadcast (including scalar-over-vector division), diff, scalar
// assignment producing a length-1 value, and the m2cpp helpers length()
// (max-dimension semantics) and span<uvec>(lo, hi).
//
// Semantics mirror the toolkit's numeric core on IEEE doubles: identical
// operations in identical order for the corpus programs. `uword` is signed
// on purpose: subscript arithmetic such as `n_rows-2` must go below zero
// to express the empty selection instead of wrapping.
#pragma once

#include <cstddef>
#include <cstdlib>
#include <cstdio>
#include <vector>

using uword = long long;

struct uvec {
    std::vector<uword> data;
    uword n_rows = 0;

    uvec() = default;

    void assign(std::vector<uword> values) {
        data = std::move(values);
        n_rows = static_cast<uword>(data.size());
    }
};

struct vec {
    std::vector<double> data;
    uword n_rows = 0;

    vec() = default;
    explicit vec(std::size_t n, double fill = 0.0)
        : data(n, fill), n_rows(static_cast<uword>(n)) {}

    void assign(std::vector<double> values) {
        data = std::move(values);
        n_rows = static_cast<uword>(data.size());
    }

    // scalar assignment produces a length-1 vector
    vec& operator=(double s) {
        data.assign(1, s);
        n_rows = 1;
        return *this;
    }

    double operator()(uword i) const { return data[static_cast<std::size_t>(i)]; }
    double& operator()(uword i) { return data[static_cast<std::size_t>(i)]; }

    // gather by index list (the lowered form of range subscripts)
    vec operator()(const uvec& sel) const {
        vec out;
        out.data.reserve(sel.data.size());
        for (uword i : sel.data) {
            out.data.push_back(data[static_cast<std::size_t>(i)]);
        }
        out.n_rows = static_cast<uword>(out.data.size());
        return out;
    }
};

// Column-major matrix; the corpus only moves n x 1 columns through mat
// slots, so storage is a flat column sequence.
struct mat {
    std::vector<double> data;
    uword n_rows = 0;
    uword n_cols = 0;

    mat() = default;

    void assign_column(std::vector<double> values) {
        data = std::move(values);
        n_rows = static_cast<uword>(data.size());
        n_cols = data.empty() ? 0 : 1;
    }

    mat& operator=(double s) {
        data.assign(1, s);
        n_rows = 1;
        n_cols = 1;
        return *this;
    }

    mat& operator=(const vec& v) {
        data = v.data;
        n_rows = v.n_rows;
        n_cols = data.empty() ? 0 : 1;
        return *this;
    }
};

namespace m2cpp_detail {

[[noreturn]] inline void shape_abort(std::size_t a, std::size_t b) {
    std::fprintf(stderr, "m2cpp: shape mismatch (%zu vs %zu)\n", a, b);
    std::abort();
}

template <typename Op>
inline vec zip(const vec& a, const vec& b, Op op) {
    vec out;
    const std::size_t na = a.data.size();
    const std::size_t nb = b.data.size();
    if (na == nb) {
        out.data.reserve(na);
        for (std::size_t i = 0; i < na; ++i) out.data.push_back(op(a.data[i], b.data[i]));
    } else if (na == 1) {
        out.data.reserve(nb);
        for (std::size_t i = 0; i < nb; ++i) out.data.push_back(op(a.data[0], b.data[i]));
    } else if (nb == 1) {
        out.data.reserve(na);
        for (std::size_t i = 0; i < na; ++i) out.data.push_back(op(a.data[i], b.data[0]));
    } else {
        shape_abort(na, nb);
    }
    out.n_rows = static_cast<uword>(out.data.size());
    return out;
}

template <typename Op>
inline vec map_left(double s, const vec& v, Op op) {
    vec out;
    out.data.reserve(v.data.size());
    for (double x : v.data) out.data.push_back(op(s, x));
    out.n_rows = static_cast<uword>(out.data.size());
    return out;
}

template <typename Op>
inline vec map_right(const vec& v, double s, Op op) {
    vec out;
    out.data.reserve(v.data.size());
    for (double x : v.data) out.data.push_back(op(x, s));
    out.n_rows = static_cast<uword>(out.data.size());
    return out;
}

struct add { double operator()(double a, double b) const { return a + b; } };
struct sub { double operator()(double a, double b) const { return a - b; } };
struct mul { double operator()(double a, double b) const { return a * b; } };
struct dvd { double operator()(double a, double b) const { return a / b; } };

}  // namespace m2cpp_detail

inline vec operator+(const vec& a, const vec& b) { return m2cpp_detail::zip(a, b, m2cpp_detail::add{}); }
inline vec operator-(const vec& a, const vec& b) { return m2cpp_detail::zip(a, b, m2cpp_detail::sub{}); }
inline vec operator*(const vec& a, const vec& b) { return m2cpp_detail::zip(a, b, m2cpp_detail::mul{}); }
inline vec operator/(const vec& a, const vec& b) { return m2cpp_detail::zip(a, b, m2cpp_detail::dvd{}); }

inline vec operator+(const vec& v, double s) { return m2cpp_detail::map_right(v, s, m2cpp_detail::add{}); }
inline vec operator+(double s, const vec& v) { return m2cpp_detail::map_left(s, v, m2cpp_detail::add{}); }
inline vec operator-(const vec& v, double s) { return m2cpp_detail::map_right(v, s, m2cpp_detail::sub{}); }
inline vec operator-(double s, const vec& v) { return m2cpp_detail::map_left(s, v, m2cpp_detail::sub{}); }
inline vec operator*(const vec& v, double s) { return m2cpp_detail::map_right(v, s, m2cpp_detail::mul{}); }
inline vec operator*(double s, const vec& v) { return m2cpp_detail::map_left(s, v, m2cpp_detail::mul{}); }
inline vec operator/(const vec& v, double s) { return m2cpp_detail::map_right(v, s, m2cpp_detail::dvd{}); }
// scalar over vector divides the scalar by each element
inline vec operator/(double s, const vec& v) { return m2cpp_detail::map_left(s, v, m2cpp_detail::dvd{}); }

inline vec operator-(const vec& v) { return m2cpp_detail::map_left(0.0, v, m2cpp_detail::sub{}); }

// consecutive differences, length max(n-1, 0)
inline vec diff(const vec& v) {
    vec out;
    if (v.data.size() > 1) {
        out.data.reserve(v.data.size() - 1);
        for (std::size_t i = 0; i + 1 < v.data.size(); ++i) {
            out.data.push_back(v.data[i + 1] - v.data[i]);
        }
    }
    out.n_rows = static_cast<uword>(out.data.size());
    return out;
}

namespace m2cpp {

inline uword length(const vec& v) { return v.n_rows; }
inline uword length(const uvec& v) { return v.n_rows; }
inline uword length(const mat& m) { return m.n_rows > m.n_cols ? m.n_rows : m.n_cols; }

// inclusive index run lo..hi; hi < lo is the empty selection
template <typename T>
inline T span(uword lo, uword hi) {
    T out;
    if (hi >= lo) {
        out.data.reserve(static_cast<std::size_t>(hi - lo + 1));
        for (uword i = lo; i <= hi; ++i) out.data.push_back(i);
    }
    out.n_rows = static_cast<uword>(out.data.size());
    return out;
}

}  // namespace m2cpp

// Precompiled QRS detector with the dialect's out-parameter signature;
// peak indices are 0-based. Defined in pan_tompkin.cpp.
void pan_tompkin(mat& sig, int fs, mat& qrs_amp_raw, vec& qrs_i_raw, int& delay);
