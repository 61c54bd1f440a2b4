#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vnl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense 4-D array in (n, c, h, w) order, row-major.
template <typename T>
class Tensor4 {
public:
    Tensor4() = default;
    Tensor4(int n, int c, int h, int w, T fill = T(0))
        : n_(n), c_(c), h_(h), w_(w),
          data_(static_cast<std::size_t>(n) * c * h * w, fill)
    {
        if (n < 0 || c < 0 || h < 0 || w < 0)
            throw Error("Tensor4: negative dimension");
    }

    int n() const { return n_; }
    int c() const { return c_; }
    int h() const { return h_; }
    int w() const { return w_; }
    std::size_t size() const { return data_.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(h_) * w_; }

    std::size_t index(int i, int ch, int y, int x) const
    {
        return ((static_cast<std::size_t>(i) * c_ + ch) * h_ + y) * w_ + x;
    }
    T& operator()(int i, int ch, int y, int x) { return data_[index(i, ch, y, x)]; }
    const T& operator()(int i, int ch, int y, int x) const { return data_[index(i, ch, y, x)]; }

    T* plane(int i, int ch) { return data_.data() + index(i, ch, 0, 0); }
    const T* plane(int i, int ch) const { return data_.data() + index(i, ch, 0, 0); }

    std::span<T> data() { return data_; }
    std::span<const T> data() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }

    bool same_shape(const Tensor4& o) const
    {
        return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }
    std::string shape_string() const
    {
        return std::to_string(n_) + "x" + std::to_string(c_) + "x" +
               std::to_string(h_) + "x" + std::to_string(w_);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Tensor4&) const = default;

private:
    int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
    std::vector<T> data_;
};

}  // namespace vnl
