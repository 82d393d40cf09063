#pragma once

// Scalar reference implementation of the bidirectional LSTM classifier, written
// with plain loops and no shared code beyond the parameter containers.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tactile/bilstm.hpp"

namespace tactile::testing {

// Scalar, loop-only LSTM step sequence: the reference the vectorized code is
// compared against.
inline std::vector<double> naive_direction(const LstmDirectionParams& p, const Matrix& x, bool reverse) {
    const int h = static_cast<int>(p.w_rec.cols()), d = static_cast<int>(p.w_in.cols());
    const int len = static_cast<int>(x.cols());
    std::vector<double> hs(h, 0.0), cs(h, 0.0);
    auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int s = 0; s < len; ++s) {
        const int t = reverse ? len - 1 - s : s;
        std::vector<double> z(4 * h);
        for (int r = 0; r < 4 * h; ++r) {
            double acc = p.bias(r, 0);
            for (int k = 0; k < d; ++k) acc += p.w_in(r, k) * x(k, t);
            for (int k = 0; k < h; ++k) acc += p.w_rec(r, k) * hs[k];
            z[r] = acc;
        }
        std::vector<double> nh(h), nc(h);
        for (int u = 0; u < h; ++u) {
            const double ig = sigm(z[u]), fg = sigm(z[h + u]), gg = std::tanh(z[2 * h + u]), og = sigm(z[3 * h + u]);
            nc[u] = fg * cs[u] + ig * gg;
            nh[u] = og * std::tanh(nc[u]);
        }
        hs = nh;
        cs = nc;
    }
    return hs;
}

inline std::vector<double> naive_probs(const BiLstmParams& p, const Matrix& x) {
    auto f = naive_direction(p.fwd, x, false);
    const auto b = naive_direction(p.bwd, x, true);
    f.insert(f.end(), b.begin(), b.end());
    std::vector<double> logits(p.head_w.rows());
    for (int c = 0; c < p.head_w.rows(); ++c) {
        logits[c] = p.head_b(c, 0);
        for (std::size_t k = 0; k < f.size(); ++k) logits[c] += p.head_w(c, static_cast<Eigen::Index>(k)) * f[k];
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0;
    for (auto& v : logits) sum += (v = std::exp(v - mx));
    for (auto& v : logits) v /= sum;
    return logits;
}

/// Mean cross-entropy of a batch, clamped like the library's loss.
inline double naive_loss(const BiLstmParams& p, const std::vector<Matrix>& xs, const std::vector<int>& labels) {
    double sum = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        sum -= std::log(std::max(naive_probs(p, xs[i])[static_cast<std::size_t>(labels[i])], 1e-12));
    return sum / static_cast<double>(xs.size());
}

}  // namespace tactile::testing
