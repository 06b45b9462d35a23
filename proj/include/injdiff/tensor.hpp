#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace injdiff {

// Dense float32 tensor, row-major. Rank up to 4; shape [N,C,H,W] by
// convention for feature maps, [T,C] for token matrices, [H,T,T] for
// attention stacks.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign((size_t)numel_of(shape), 0.0f);
    }
    Tensor(std::initializer_list<int> s) : Tensor(std::vector<int>(s)) {}

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("negative tensor dim");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return (int64_t)data.size(); }
    int rank() const { return (int)shape.size(); }
    int dim(int i) const { return shape.at((size_t)i); }

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }

    float& at(int64_t i) { return data[(size_t)i]; }
    float at(int64_t i) const { return data[(size_t)i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }

    std::string shape_str() const;
};

Tensor transpose2d(const Tensor& m);  // [R,C] -> [C,R]

// max |a-b| over all elements; throws on shape mismatch
float max_abs_diff(const Tensor& a, const Tensor& b);

void check_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace injdiff
