#pragma once

#include <cstdint>
#include <vector>

namespace horizon {

// Row-major float32 tensor, value semantics, no views. Just enough arithmetic
// for a tiny transformer; anything fancier is out of scope on purpose.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<float> data_);

    static Tensor zeros(const std::vector<int>& shape);
    static Tensor full(const std::vector<int>& shape, float value);

    int64_t numel() const;
    bool empty() const { return data.empty(); }

    // 2-D accessors; most of the model lives in [rows x cols] land.
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }
    float& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    float at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
};

// Throws if any element is non-finite; every op in this module calls it on
// its result so NaN/Inf cannot propagate silently.
void require_finite(const Tensor& t, const char* where);

// Standard matrix product, [m x k] * [k x n] -> [m x n]. Accumulates in double.
Tensor matmul(const Tensor& a, const Tensor& b);

// Row-wise softmax with row-max subtraction; each output row sums to 1.
Tensor softmax_rows(const Tensor& a);

// Divides every length-d slice (last axis) by its root-mean-square + 1e-6,
// then scales by gain[d].
Tensor rms_norm(const Tensor& a, const Tensor& gain);

// Standard-normal tensor from the frozen generator in rng.hpp. Same (shape,
// seed) always yields bit-identical data.
Tensor seeded_gaussian(const std::vector<int>& shape, uint64_t seed);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);

// Adds a length-cols vector to every row of a.
Tensor add_to_rows(const Tensor& a, const std::vector<float>& v);

float max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace horizon
