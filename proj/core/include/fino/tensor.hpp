#pragma once

#include <cstddef>
#include <cstdlib>
#include <initializer_list>
#include <memory>
#include <new>
#include <numeric>
#include <string>
#include <vector>

#include "fino/errors.hpp"
#include "fino/rng.hpp"

namespace fino {

// 64-byte aligned storage keeps SIMD kernels on the same code path across
// allocations, which bitwise reproducibility relies on.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}
    T* allocate(size_t n) {
        if (n == 0) return nullptr;
        void* p = std::aligned_alloc(64, ((n * sizeof(T) + 63) / 64) * 64);
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, size_t) { std::free(p); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

// Dense row-major n-d array. Scalar type is a template parameter: the
// production network runs in float, gradient-check tests instantiate double.
template <class T>
class TensorT {
public:
    TensorT() = default;
    explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(count(shape_), T(0));
    }
    TensorT(std::initializer_list<int> shape) : TensorT(std::vector<int>(shape)) {}

    static size_t count(const std::vector<int>& shape) {
        size_t n = 1;
        for (int d : shape) {
            if (d < 0) throw ShapeError("negative tensor dimension");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](size_t i) { return data_[i]; }
    const T& operator[](size_t i) const { return data_[i]; }

    T& at2(int i, int j) { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    const T& at2(int i, int j) const { return data_[static_cast<size_t>(i) * shape_[1] + j]; }
    T& at3(int i, int j, int k) {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    const T& at3(int i, int j, int k) const {
        return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
    }
    T& at4(int i, int j, int k, int l) {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }
    const T& at4(int i, int j, int k, int l) const {
        return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T(0)); }

    TensorT reshaped(std::vector<int> shape) const {
        if (count(shape) != size()) throw ShapeError("reshape element count mismatch");
        TensorT out;
        out.shape_ = std::move(shape);
        out.data_ = data_;
        return out;
    }

    static TensorT uniform(std::vector<int> shape, T lo, T hi, Rng& rng) {
        TensorT t(std::move(shape));
        for (auto& v : t.data_) v = static_cast<T>(rng.uniform(lo, hi));
        return t;
    }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    static std::string shape_str(const std::vector<int>& s) {
        std::string out = "[";
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(s[i]);
        }
        return out + "]";
    }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> out(shape_);
        for (size_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    template <class U>
    friend class TensorT;
    std::vector<int> shape_;
    std::vector<T, AlignedAllocator<T>> data_;
};

using Tensor = TensorT<float>;

}  // namespace fino
