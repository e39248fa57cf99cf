#include <doctest.h>

#include <cmath>

#include "horizon/errors.hpp"
#include "horizon/rng.hpp"
#include "horizon/tensor.hpp"

using namespace horizon;

TEST_CASE("matmul identity and annihilator") {
    Tensor eye = Tensor::zeros({3, 3});
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0f;
    Tensor a = seeded_gaussian({3, 5}, 7);
    Tensor ia = matmul(eye, a);
    CHECK(max_abs_diff(ia, a) == 0.0f);

    Tensor zero = Tensor::zeros({5, 4});
    Tensor az = matmul(a, zero);
    for (float v : az.data) CHECK(v == 0.0f);
}

TEST_CASE("matmul hand arithmetic") {
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor b({2, 1}, {1, 1});
    Tensor c = matmul(a, b);
    CHECK(c.shape == std::vector<int>{2, 1});
    CHECK(c.data[0] == 3.0f);
    CHECK(c.data[1] == 7.0f);
}

TEST_CASE("matmul rejects shape mismatch") {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    CHECK_THROWS_AS(matmul(a, b), ShapeError);
    CHECK_THROWS_AS(matmul(a, Tensor::zeros({3})), ShapeError);
}

TEST_CASE("matmul associativity on random tensors") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Tensor a = seeded_gaussian({4, 6}, derive_seed(seed, 1));
        Tensor b = seeded_gaussian({6, 5}, derive_seed(seed, 2));
        Tensor c = seeded_gaussian({5, 3}, derive_seed(seed, 3));
        Tensor left = matmul(matmul(a, b), c);
        Tensor right = matmul(a, matmul(b, c));
        float scale_ref = 0.0f;
        for (float v : left.data) scale_ref = std::max(scale_ref, std::fabs(v));
        CHECK(max_abs_diff(left, right) <= 1e-4f * std::max(1.0f, scale_ref));
    }
}

TEST_CASE("softmax of constant row is uniform") {
    Tensor a = Tensor::zeros({1, 4});
    Tensor s = softmax_rows(a);
    for (float v : s.data) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("softmax is stabilized against large logits") {
    Tensor a({1, 2}, {1000.0f, 0.0f});
    Tensor s = softmax_rows(a);
    CHECK(s.data[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.data[1] == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to 1 for random inputs") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        Tensor a = scale(seeded_gaussian({8, 11}, seed), 50.0f);
        Tensor s = softmax_rows(a);
        for (int i = 0; i < 8; ++i) {
            double sum = 0.0;
            for (int j = 0; j < 11; ++j) {
                CHECK(s.at(i, j) >= 0.0f);
                sum += s.at(i, j);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("rms_norm unit gain fixed points") {
    Tensor gain = Tensor::full({4}, 1.0f);
    Tensor ones = Tensor::full({2, 4}, 1.0f);
    Tensor n = rms_norm(ones, gain);
    for (float v : n.data) CHECK(v == doctest::Approx(1.0).epsilon(1e-5));

    Tensor zeros = Tensor::zeros({2, 4});
    Tensor nz = rms_norm(zeros, gain);
    for (float v : nz.data) CHECK(v == 0.0f);
}

TEST_CASE("rms_norm output has unit rms") {
    Tensor gain = Tensor::full({16}, 1.0f);
    Tensor x = scale(seeded_gaussian({6, 16}, 3), 4.2f);
    Tensor n = rms_norm(x, gain);
    for (int i = 0; i < 6; ++i) {
        double ms = 0.0;
        for (int j = 0; j < 16; ++j) ms += static_cast<double>(n.at(i, j)) * n.at(i, j);
        CHECK(std::sqrt(ms / 16) == doctest::Approx(1.0).epsilon(1e-4));
    }
}

TEST_CASE("seeded gaussian is deterministic per seed") {
    Tensor a = seeded_gaussian({7, 13}, 99);
    Tensor b = seeded_gaussian({7, 13}, 99);
    CHECK(a.data == b.data);
    Tensor c = seeded_gaussian({7, 13}, 100);
    CHECK(a.data != c.data);
}

TEST_CASE("seeded gaussian moments") {
    Tensor t = seeded_gaussian({100000}, 2024);
    double mean = 0.0;
    for (float v : t.data) mean += v;
    mean /= t.numel();
    double var = 0.0;
    for (float v : t.data) var += (v - mean) * (v - mean);
    var /= t.numel();
    CHECK(std::fabs(mean) < 0.02);
    CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("non-finite results are rejected") {
    Tensor big = Tensor::full({1, 2}, 3e38f);
    CHECK_THROWS_AS(add(big, big), DomainError);
}
