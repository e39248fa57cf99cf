#include "horizon/rope.hpp"

#include <cmath>
#include <string>

#include "horizon/errors.hpp"

namespace horizon {

std::array<int, 3> default_rope_split(int head_dim) {
    if (head_dim < 2 || head_dim % 2 != 0)
        throw ConfigError("head_dim must be a positive even integer");
    const int pairs = head_dim / 2;
    const int spatial = pairs / 3;
    return {pairs - 2 * spatial, spatial, spatial};
}

static std::vector<double> axis_freqs(int pairs, double base) {
    std::vector<double> f(pairs);
    for (int j = 0; j < pairs; ++j)
        f[j] = std::pow(base, -static_cast<double>(j) / pairs);
    return f;
}

FrequencyTable build_frequencies(int head_dim, std::array<int, 3> split, double base) {
    if (head_dim < 2 || head_dim % 2 != 0)
        throw ConfigError("head_dim must be a positive even integer");
    if (base <= 1.0) throw ConfigError("rope base must be > 1");
    const auto [pf, ph, pw] = split;
    if (pf < 0 || ph < 0 || pw < 0 || pf + ph + pw != head_dim / 2)
        throw ConfigError("rope split (" + std::to_string(pf) + "," + std::to_string(ph) + "," +
                          std::to_string(pw) + ") does not sum to head_dim/2 = " +
                          std::to_string(head_dim / 2));
    FrequencyTable t;
    t.pairs_f = pf;
    t.pairs_h = ph;
    t.pairs_w = pw;
    t.base = base;
    t.freqs_f = axis_freqs(pf, base);
    t.freqs_h = axis_freqs(ph, base);
    t.freqs_w = axis_freqs(pw, base);
    return t;
}

void rotate_pairs_inplace(std::span<float> v, double index, const std::vector<double>& freqs) {
    if (v.size() != 2 * freqs.size())
        throw ShapeError("rotate: sequence length must be twice the frequency count");
    for (size_t j = 0; j < freqs.size(); ++j) {
        const double a = index * freqs[j];
        const double c = std::cos(a), s = std::sin(a);
        const double x = v[2 * j], y = v[2 * j + 1];
        v[2 * j] = static_cast<float>(x * c - y * s);
        v[2 * j + 1] = static_cast<float>(x * s + y * c);
    }
}

std::vector<float> rotate_1d(std::span<const float> v, double index,
                             const std::vector<double>& freqs) {
    std::vector<float> out(v.begin(), v.end());
    rotate_pairs_inplace(out, index, freqs);
    return out;
}

void apply_rope3d_inplace(std::span<float> token, const Coord3& c, const FrequencyTable& table) {
    if (static_cast<int>(token.size()) != table.head_dim())
        throw ShapeError("apply_rope3d: token length does not match frequency table");
    rotate_pairs_inplace(token.subspan(0, table.dim_f()), c.f, table.freqs_f);
    rotate_pairs_inplace(token.subspan(table.dim_f(), table.dim_h()), c.h, table.freqs_h);
    rotate_pairs_inplace(token.subspan(table.dim_f() + table.dim_h(), table.dim_w()), c.w,
                         table.freqs_w);
}

std::vector<float> apply_rope3d(std::span<const float> token, const Coord3& c,
                                const FrequencyTable& table) {
    std::vector<float> out(token.begin(), token.end());
    apply_rope3d_inplace(out, c, table);
    return out;
}

std::vector<float> shift_rotation(std::span<const float> v, double delta,
                                  const std::vector<double>& freqs) {
    return rotate_1d(v, delta, freqs);
}

}  // namespace horizon
