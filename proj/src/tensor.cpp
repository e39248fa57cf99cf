#include "horizon/tensor.hpp"

#include <cmath>
#include <string>

#include "horizon/errors.hpp"
#include "horizon/rng.hpp"

namespace horizon {

static int64_t shape_numel(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int e : shape) {
        if (e < 0) throw ShapeError("negative extent in tensor shape");
        n *= e;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        throw ShapeError("tensor data length does not match shape");
}

Tensor Tensor::zeros(const std::vector<int>& shape) {
    return Tensor(shape, std::vector<float>(shape_numel(shape), 0.0f));
}

Tensor Tensor::full(const std::vector<int>& shape, float value) {
    return Tensor(shape, std::vector<float>(shape_numel(shape), value));
}

int64_t Tensor::numel() const {
    return static_cast<int64_t>(data.size());
}

void require_finite(const Tensor& t, const char* where) {
    for (float v : t.data)
        if (!std::isfinite(v))
            throw DomainError(std::string("non-finite value produced in ") + where);
}

static void require_2d(const Tensor& t, const char* where) {
    if (t.shape.size() != 2)
        throw ShapeError(std::string(where) + ": expected a 2-D tensor");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const int m = a.shape[0], k = a.shape[1];
    const int k2 = b.shape[0], n = b.shape[1];
    if (k != k2)
        throw ShapeError("matmul: inner extents differ (" + std::to_string(k) + " vs " +
                         std::to_string(k2) + ")");
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += static_cast<double>(a.at(i, p)) * b.at(p, j);
            out.at(i, j) = static_cast<float>(acc);
        }
    }
    require_finite(out, "matmul");
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    require_2d(a, "softmax_rows");
    require_finite(a, "softmax_rows input");
    const int m = a.shape[0], n = a.shape[1];
    Tensor out = Tensor::zeros({m, n});
    for (int i = 0; i < m; ++i) {
        float row_max = a.at(i, 0);
        for (int j = 1; j < n; ++j) row_max = std::max(row_max, a.at(i, j));
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double e = std::exp(static_cast<double>(a.at(i, j)) - row_max);
            out.at(i, j) = static_cast<float>(e);
            sum += e;
        }
        for (int j = 0; j < n; ++j) out.at(i, j) = static_cast<float>(out.at(i, j) / sum);
    }
    require_finite(out, "softmax_rows");
    return out;
}

Tensor rms_norm(const Tensor& a, const Tensor& gain) {
    const int d = static_cast<int>(gain.data.size());
    if (d < 1) throw ShapeError("rms_norm: gain must have at least one element");
    if (a.numel() % d != 0)
        throw ShapeError("rms_norm: last axis does not match gain length");
    Tensor out = a;
    const int64_t slices = a.numel() / d;
    for (int64_t s = 0; s < slices; ++s) {
        const float* x = a.data.data() + s * d;
        float* y = out.data.data() + s * d;
        double ms = 0.0;
        for (int j = 0; j < d; ++j) ms += static_cast<double>(x[j]) * x[j];
        const double denom = std::sqrt(ms / d) + 1e-6;
        for (int j = 0; j < d; ++j)
            y[j] = static_cast<float>(x[j] / denom) * gain.data[j];
    }
    require_finite(out, "rms_norm");
    return out;
}

Tensor seeded_gaussian(const std::vector<int>& shape, uint64_t seed) {
    Tensor out = Tensor::zeros(shape);
    Rng rng(seed);
    for (auto& v : out.data) v = rng.normal_f();
    require_finite(out, "seeded_gaussian");
    return out;
}

static void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(where) + ": shapes differ");
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    require_finite(out, "add");
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    require_finite(out, "sub");
    return out;
}

Tensor scale(const Tensor& a, float s) {
    Tensor out = a;
    for (auto& v : out.data) v *= s;
    require_finite(out, "scale");
    return out;
}

Tensor add_to_rows(const Tensor& a, const std::vector<float>& v) {
    require_2d(a, "add_to_rows");
    if (static_cast<int>(v.size()) != a.cols())
        throw ShapeError("add_to_rows: vector length does not match column count");
    Tensor out = a;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) += v[j];
    require_finite(out, "add_to_rows");
    return out;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    float m = 0.0f;
    for (size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace horizon
