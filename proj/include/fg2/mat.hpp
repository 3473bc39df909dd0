#pragma once

// Row-major dense matrix and named-tensor containers shared by all modules.
// float is the training precision, double the verification precision; the
// numeric modules are templated on the scalar so the same code runs in both.

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fg2/rng.hpp"

namespace fg2 {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown on malformed inputs / files; the CLI maps it to exit code 2.
struct DataError : Error {
    using Error::Error;
};

template <typename T>
struct Mat {
    size_t rows = 0, cols = 0;
    std::vector<T> v;

    Mat() = default;
    Mat(size_t r, size_t c, T fill = T(0)) : rows(r), cols(c), v(r * c, fill) {}

    T& operator()(size_t i, size_t j) { return v[i * cols + j]; }
    const T& operator()(size_t i, size_t j) const { return v[i * cols + j]; }

    T* row(size_t i) { return v.data() + i * cols; }
    const T* row(size_t i) const { return v.data() + i * cols; }
    std::span<T> row_span(size_t i) { return {row(i), cols}; }
    std::span<const T> row_span(size_t i) const { return {row(i), cols}; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
    size_t size() const { return v.size(); }
    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    template <typename U>
    Mat<U> cast() const {
        Mat<U> out(rows, cols);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }

    static Mat normal(size_t r, size_t c, Rng& rng, T sigma = T(1)) {
        Mat m(r, c);
        for (auto& x : m.v) x = static_cast<T>(rng.normal() * double(sigma));
        return m;
    }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

template <typename T>
struct Tensor {
    std::vector<size_t> dims;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> d) : dims(std::move(d)) {
        size_t n = 1;
        for (size_t x : dims) n *= x;
        v.assign(n, T(0));
    }

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }
};

// Flat list of named parameter tensors. Order is fixed at construction and
// shared by gradients, Adam moments, and checkpoints.
template <typename T>
struct ParamSet {
    std::vector<std::string> names;
    std::vector<Tensor<T>> tensors;

    size_t count() const { return tensors.size(); }

    size_t add(std::string name, std::vector<size_t> dims) {
        names.push_back(std::move(name));
        tensors.emplace_back(std::move(dims));
        return tensors.size() - 1;
    }

    int find(std::string_view name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return int(i);
        return -1;
    }

    Tensor<T>& at(std::string_view name) {
        int i = find(name);
        if (i < 0) throw Error("no parameter named " + std::string(name));
        return tensors[size_t(i)];
    }
    const Tensor<T>& at(std::string_view name) const {
        int i = find(name);
        if (i < 0) throw Error("no parameter named " + std::string(name));
        return tensors[size_t(i)];
    }

    // Zero-filled clone with identical names/shapes (gradient buffers).
    ParamSet zeros_like() const {
        ParamSet p;
        p.names = names;
        p.tensors.reserve(tensors.size());
        for (const auto& t : tensors) p.tensors.emplace_back(t.dims);
        return p;
    }

    size_t total_size() const {
        size_t n = 0;
        for (const auto& t : tensors) n += t.size();
        return n;
    }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> p;
        p.names = names;
        p.tensors.reserve(tensors.size());
        for (const auto& t : tensors) {
            Tensor<U> u(t.dims);
            for (size_t i = 0; i < t.v.size(); ++i) u.v[i] = static_cast<U>(t.v[i]);
            p.tensors.push_back(std::move(u));
        }
        return p;
    }
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw DataError(msg);
}

} // namespace fg2
