#pragma once

#include <array>
#include <span>
#include <vector>

namespace horizon {

// Rotary position embedding kernels for the three-axis (frame, height, width)
// layout: the head dimension is split into three pair groups, each group
// rotated by its own axis index, results concatenated in (f, h, w) order.
//
// Indices are real-valued even though callers mostly pass integers, so that
// phase-shift deltas compose exactly: rotate(v, a) then shift by b equals
// rotate(v, a+b) up to float rounding.

struct FrequencyTable {
    int pairs_f = 0;
    int pairs_h = 0;
    int pairs_w = 0;
    std::vector<double> freqs_f;
    std::vector<double> freqs_h;
    std::vector<double> freqs_w;
    double base = 10000.0;

    int total_pairs() const { return pairs_f + pairs_h + pairs_w; }
    int head_dim() const { return 2 * total_pairs(); }
    int dim_f() const { return 2 * pairs_f; }
    int dim_h() const { return 2 * pairs_h; }
    int dim_w() const { return 2 * pairs_w; }
};

// Token coordinates: f is the 1-based latent frame index, (h, w) the 0-based
// spatial grid position.
struct Coord3 {
    double f = 1.0;
    int h = 0;
    int w = 0;
};

// Default channel split for head_dim d with P = d/2 pairs: the spatial axes
// each get floor(P/3) pairs and the temporal axis takes the remainder.
std::array<int, 3> default_rope_split(int head_dim);

// Frequencies for pair j of an axis with P pairs: base^(-j/P), j = 0..P-1.
// Throws ConfigError if the split does not sum to head_dim/2 or base <= 1.
FrequencyTable build_frequencies(int head_dim, std::array<int, 3> split, double base = 10000.0);

// Rotates each pair (v[2j], v[2j+1]) by angle index * freqs[j], in place.
void rotate_pairs_inplace(std::span<float> v, double index, const std::vector<double>& freqs);

// Copying form; length(v) must equal 2 * freqs.size().
std::vector<float> rotate_1d(std::span<const float> v, double index,
                             const std::vector<double>& freqs);

// Full 3-axis rotation of one head-dim token at coordinates c.
void apply_rope3d_inplace(std::span<float> token, const Coord3& c, const FrequencyTable& table);
std::vector<float> apply_rope3d(std::span<const float> token, const Coord3& c,
                                const FrequencyTable& table);

// Rotates an already-rotated sequence by a further delta (negative delta is
// the backward direction used when re-anchoring cached keys).
std::vector<float> shift_rotation(std::span<const float> v, double delta,
                                  const std::vector<double>& freqs);

}  // namespace horizon
