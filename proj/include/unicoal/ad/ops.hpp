#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "unicoal/ad/autodiff.hpp"
#include "unicoal/common.hpp"
#include "unicoal/tensor.hpp"

namespace unicoal::ad {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

// Mutually recursive backward definitions need the prototypes up front.
inline Var add(const Var& a, const Var& b);
inline Var sub(const Var& a, const Var& b);
inline Var mul(const Var& a, const Var& b);
inline Var scale(const Var& a, double c);
inline Var mul_mask(const Var& a, const Tensor& mask);
inline Var sigmoid(const Var& x);
inline Var tanh_op(const Var& x);
inline Var rsqrt_eps(const Var& x, double eps);
inline Var square(const Var& x);
inline Var sum_all(const Var& x);
inline Var broadcast_fill(const Var& s, const std::vector<int64_t>& shape);
inline Var sum_hw(const Var& x);
inline Var broadcast_hw(const Var& s, int64_t H, int64_t W);
inline Var sum_nhw(const Var& x);
inline Var broadcast_c(const Var& b, int64_t N, int64_t H, int64_t W);
inline Var sum_rows(const Var& x);
inline Var broadcast_rows(const Var& b, int64_t N);
inline Var sum_cols(const Var& x);
inline Var broadcast_cols(const Var& s, int64_t F);
inline Var matmul(const Var& a, const Var& b, bool ta = false, bool tb = false);
inline Var concat_ch(const std::vector<Var>& parts);
inline Var slice_ch(const Var& x, int64_t c0, int64_t len);
inline Var concat_n(const std::vector<Var>& parts);
inline Var slice_n(const Var& x, int64_t n0, int64_t len);
inline Var reshape(const Var& x, const std::vector<int64_t>& shape);
inline Var gather_rows(const Var& table, const std::vector<int64_t>& idx);
inline Var scatter_rows(const Var& x, const std::vector<int64_t>& idx, int64_t rows);

// ---- elementwise -----------------------------------------------------------

inline Var add(const Var& a, const Var& b) {
    check(a.val().same_shape(b.val()), "add: shape mismatch " + a.val().shape_str() + " vs " + b.val().shape_str());
    Tensor out(a.shape());
    const double *pa = a.val().data(), *pb = b.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    return make_op(std::move(out), {a, b}, [](const Var& gy) {
        return std::vector<Var>{gy, gy};
    });
}

inline Var sub(const Var& a, const Var& b) {
    check(a.val().same_shape(b.val()), "sub: shape mismatch");
    Tensor out(a.shape());
    const double *pa = a.val().data(), *pb = b.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
    return make_op(std::move(out), {a, b}, [](const Var& gy) {
        return std::vector<Var>{gy, scale(gy, -1.0)};
    });
}

inline Var mul(const Var& a, const Var& b) {
    check(a.val().same_shape(b.val()), "mul: shape mismatch");
    Tensor out(a.shape());
    const double *pa = a.val().data(), *pb = b.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    return make_op(std::move(out), {a, b}, [a, b](const Var& gy) {
        return std::vector<Var>{mul(gy, b), mul(gy, a)};
    });
}

inline Var scale(const Var& a, double c) {
    Tensor out(a.shape());
    const double* pa = a.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * c;
    return make_op(std::move(out), {a}, [c](const Var& gy) {
        return std::vector<Var>{scale(gy, c)};
    });
}

inline Var add_scalar(const Var& a, double c) {
    Tensor out(a.shape());
    const double* pa = a.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + c;
    return make_op(std::move(out), {a}, [](const Var& gy) {
        return std::vector<Var>{gy};
    });
}

inline Var mul_mask(const Var& a, const Tensor& mask) {
    check(a.val().same_shape(mask), "mul_mask: shape mismatch");
    Tensor out(a.shape());
    const double *pa = a.val().data(), *pm = mask.data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = pa[i] * pm[i];
    return make_op(std::move(out), {a}, [mask](const Var& gy) {
        return std::vector<Var>{mul_mask(gy, mask)};
    });
}

inline Var leaky_relu(const Var& x, double slope = 0.2) {
    Tensor out(x.shape());
    Tensor mask(x.shape());
    const double* px = x.val().data();
    double *po = out.data(), *pm = mask.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) {
        const bool neg = px[i] < 0.0;
        pm[i] = neg ? slope : 1.0;
        po[i] = neg ? px[i] * slope : px[i];
    }
    return make_op(std::move(out), {x}, [mask](const Var& gy) {
        return std::vector<Var>{mul_mask(gy, mask)};
    });
}

inline Var abs_op(const Var& x) {
    Tensor out(x.shape());
    Tensor sign(x.shape());
    const double* px = x.val().data();
    double *po = out.data(), *ps = sign.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) {
        po[i] = std::abs(px[i]);
        ps[i] = px[i] > 0.0 ? 1.0 : (px[i] < 0.0 ? -1.0 : 0.0);
    }
    return make_op(std::move(out), {x}, [sign](const Var& gy) {
        return std::vector<Var>{mul_mask(gy, sign)};
    });
}

inline Var tanh_op(const Var& x) {
    Tensor out(x.shape());
    const double* px = x.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = std::tanh(px[i]);
    return make_op(std::move(out), {x}, [x](const Var& gy) {
        Var y = tanh_op(x);
        Var ones = Var::constant(Tensor::full(y.shape(), 1.0));
        return std::vector<Var>{mul(gy, sub(ones, mul(y, y)))};
    });
}

inline Var sigmoid(const Var& x) {
    Tensor out(x.shape());
    const double* px = x.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) {
        const double v = px[i];
        po[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return make_op(std::move(out), {x}, [x](const Var& gy) {
        Var y = sigmoid(x);
        Var ones = Var::constant(Tensor::full(y.shape(), 1.0));
        return std::vector<Var>{mul(gy, mul(y, sub(ones, y)))};
    });
}

inline Var softplus(const Var& x) {
    Tensor out(x.shape());
    const double* px = x.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) {
        const double v = px[i];
        po[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    }
    return make_op(std::move(out), {x}, [x](const Var& gy) {
        return std::vector<Var>{mul(gy, sigmoid(x))};
    });
}

inline Var square(const Var& x) {
    Tensor out(x.shape());
    const double* px = x.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = px[i] * px[i];
    return make_op(std::move(out), {x}, [x](const Var& gy) {
        return std::vector<Var>{mul(gy, scale(x, 2.0))};
    });
}

// y = sqrt(x + eps); the epsilon keeps the derivative finite at zero.
inline Var sqrt_eps(const Var& x, double eps) {
    Tensor out(x.shape());
    const double* px = x.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = std::sqrt(px[i] + eps);
    return make_op(std::move(out), {x}, [x, eps](const Var& gy) {
        return std::vector<Var>{mul(gy, scale(rsqrt_eps(x, eps), 0.5))};
    });
}

// y = 1/sqrt(x + eps); the epsilon keeps the derivative finite at zero.
inline Var rsqrt_eps(const Var& x, double eps) {
    Tensor out(x.shape());
    const double* px = x.val().data();
    double* po = out.data();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) po[i] = 1.0 / std::sqrt(px[i] + eps);
    return make_op(std::move(out), {x}, [x, eps](const Var& gy) {
        Var y = rsqrt_eps(x, eps);
        return std::vector<Var>{mul(gy, scale(mul(y, mul(y, y)), -0.5))};
    });
}

// ---- reductions and broadcasts ---------------------------------------------

inline Var sum_all(const Var& x) {
    double s = 0.0;
    const double* px = x.val().data();
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) s += px[i];
    std::vector<int64_t> shape = x.shape();
    return make_op(Tensor::scalar(s), {x}, [shape](const Var& gy) {
        return std::vector<Var>{broadcast_fill(gy, shape)};
    });
}

inline Var mean_all(const Var& x) { return scale(sum_all(x), 1.0 / double(x.numel())); }

inline Var broadcast_fill(const Var& s, const std::vector<int64_t>& shape) {
    check(s.numel() == 1, "broadcast_fill: source must be scalar");
    Tensor out = Tensor::full(shape, s.val()[0]);
    return make_op(std::move(out), {s}, [](const Var& gy) {
        return std::vector<Var>{sum_all(gy)};
    });
}

inline Var sum_hw(const Var& x) {
    const auto& s = x.shape();
    check(s.size() == 4, "sum_hw: expects [N,C,H,W]");
    const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
    Tensor out({N, C});
    const double* px = x.val().data();
    double* po = out.data();
    for (int64_t nc = 0; nc < N * C; ++nc) {
        double acc = 0.0;
        const double* p = px + nc * HW;
        for (int64_t i = 0; i < HW; ++i) acc += p[i];
        po[nc] = acc;
    }
    const int64_t H = s[2], W = s[3];
    return make_op(std::move(out), {x}, [H, W](const Var& gy) {
        return std::vector<Var>{broadcast_hw(gy, H, W)};
    });
}

inline Var broadcast_hw(const Var& s, int64_t H, int64_t W) {
    const auto& sh = s.shape();
    check(sh.size() == 2, "broadcast_hw: expects [N,C]");
    Tensor out({sh[0], sh[1], H, W});
    const double* ps = s.val().data();
    double* po = out.data();
    const int64_t HW = H * W;
    for (int64_t nc = 0; nc < sh[0] * sh[1]; ++nc)
        for (int64_t i = 0; i < HW; ++i) po[nc * HW + i] = ps[nc];
    return make_op(std::move(out), {s}, [](const Var& gy) {
        return std::vector<Var>{sum_hw(gy)};
    });
}

inline Var sum_nhw(const Var& x) {
    const auto& s = x.shape();
    check(s.size() == 4, "sum_nhw: expects [N,C,H,W]");
    const int64_t N = s[0], C = s[1], HW = s[2] * s[3];
    Tensor out({C});
    const double* px = x.val().data();
    double* po = out.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            double acc = 0.0;
            const double* p = px + (n * C + c) * HW;
            for (int64_t i = 0; i < HW; ++i) acc += p[i];
            po[c] += acc;
        }
    const int64_t H = s[2], W = s[3];
    return make_op(std::move(out), {x}, [N, H, W](const Var& gy) {
        return std::vector<Var>{broadcast_c(gy, N, H, W)};
    });
}

inline Var broadcast_c(const Var& b, int64_t N, int64_t H, int64_t W) {
    const auto& sh = b.shape();
    check(sh.size() == 1, "broadcast_c: expects [C]");
    const int64_t C = sh[0], HW = H * W;
    Tensor out({N, C, H, W});
    const double* pb = b.val().data();
    double* po = out.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < HW; ++i) po[(n * C + c) * HW + i] = pb[c];
    return make_op(std::move(out), {b}, [](const Var& gy) {
        return std::vector<Var>{sum_nhw(gy)};
    });
}

inline Var sum_rows(const Var& x) {
    const auto& s = x.shape();
    check(s.size() == 2, "sum_rows: expects [N,F]");
    const int64_t N = s[0], F = s[1];
    Tensor out({F});
    const double* px = x.val().data();
    double* po = out.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t f = 0; f < F; ++f) po[f] += px[n * F + f];
    return make_op(std::move(out), {x}, [N](const Var& gy) {
        return std::vector<Var>{broadcast_rows(gy, N)};
    });
}

inline Var broadcast_rows(const Var& b, int64_t N) {
    const auto& sh = b.shape();
    check(sh.size() == 1, "broadcast_rows: expects [F]");
    const int64_t F = sh[0];
    Tensor out({N, F});
    const double* pb = b.val().data();
    double* po = out.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t f = 0; f < F; ++f) po[n * F + f] = pb[f];
    return make_op(std::move(out), {b}, [](const Var& gy) {
        return std::vector<Var>{sum_rows(gy)};
    });
}

inline Var sum_cols(const Var& x) {
    const auto& s = x.shape();
    check(s.size() == 2, "sum_cols: expects [N,F]");
    const int64_t N = s[0], F = s[1];
    Tensor out({N, 1});
    const double* px = x.val().data();
    double* po = out.data();
    for (int64_t n = 0; n < N; ++n) {
        double acc = 0.0;
        for (int64_t f = 0; f < F; ++f) acc += px[n * F + f];
        po[n] = acc;
    }
    return make_op(std::move(out), {x}, [F](const Var& gy) {
        return std::vector<Var>{broadcast_cols(gy, F)};
    });
}

inline Var broadcast_cols(const Var& s, int64_t F) {
    const auto& sh = s.shape();
    check(sh.size() == 2 && sh[1] == 1, "broadcast_cols: expects [N,1]");
    const int64_t N = sh[0];
    Tensor out({N, F});
    const double* ps = s.val().data();
    double* po = out.data();
    for (int64_t n = 0; n < N; ++n)
        for (int64_t f = 0; f < F; ++f) po[n * F + f] = ps[n];
    return make_op(std::move(out), {s}, [](const Var& gy) {
        return std::vector<Var>{sum_cols(gy)};
    });
}

// ---- matmul / linear --------------------------------------------------------

inline Var matmul(const Var& a, const Var& b, bool ta, bool tb) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    check(sa.size() == 2 && sb.size() == 2, "matmul: expects 2-d operands");
    const int64_t M = ta ? sa[1] : sa[0];
    const int64_t K = ta ? sa[0] : sa[1];
    const int64_t Kb = tb ? sb[1] : sb[0];
    const int64_t N = tb ? sb[0] : sb[1];
    check(K == Kb, "matmul: inner dims mismatch");

    Tensor out({M, N});
    ECMap ma(a.val().data(), sa[0], sa[1]);
    ECMap mb(b.val().data(), sb[0], sb[1]);
    EMap mo(out.data(), M, N);
    if (!ta && !tb)
        mo.noalias() = ma * mb;
    else if (ta && !tb)
        mo.noalias() = ma.transpose() * mb;
    else if (!ta && tb)
        mo.noalias() = ma * mb.transpose();
    else
        mo.noalias() = ma.transpose() * mb.transpose();

    return make_op(std::move(out), {a, b}, [a, b, ta, tb](const Var& gy) {
        Var ga = ta ? matmul(b, gy, tb, true) : matmul(gy, b, false, !tb);
        Var gb = tb ? matmul(gy, a, true, ta) : matmul(a, gy, !ta, false);
        return std::vector<Var>{ga, gb};
    });
}

// x[N,K] * W[F,K]^T + bias[F]
inline Var linear(const Var& x, const Var& w, const Var& b) {
    Var y = matmul(x, w, false, true);
    return add(y, broadcast_rows(b, y.dim(0)));
}

// ---- shape ops --------------------------------------------------------------

inline Var reshape(const Var& x, const std::vector<int64_t>& shape) {
    std::vector<int64_t> orig = x.shape();
    return make_op(x.val().reshaped(shape), {x}, [orig](const Var& gy) {
        return std::vector<Var>{reshape(gy, orig)};
    });
}

inline Var concat_ch(const std::vector<Var>& parts) {
    check(!parts.empty(), "concat_ch: empty");
    const auto& s0 = parts[0].shape();
    check(s0.size() == 4, "concat_ch: expects [N,C,H,W]");
    int64_t C = 0;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        check(s.size() == 4 && s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
              "concat_ch: incompatible shapes");
        C += s[1];
    }
    Tensor out({s0[0], C, s0[2], s0[3]});
    const int64_t HW = s0[2] * s0[3];
    double* po = out.data();
    for (int64_t n = 0; n < s0[0]; ++n) {
        int64_t c_off = 0;
        for (const auto& p : parts) {
            const int64_t pc = p.dim(1);
            const double* pp = p.val().data() + n * pc * HW;
            std::copy(pp, pp + pc * HW, po + (n * C + c_off) * HW);
            c_off += pc;
        }
    }
    std::vector<int64_t> widths;
    for (const auto& p : parts) widths.push_back(p.dim(1));
    return make_op(std::move(out), parts, [widths](const Var& gy) {
        std::vector<Var> gs;
        int64_t c0 = 0;
        for (int64_t w : widths) {
            gs.push_back(slice_ch(gy, c0, w));
            c0 += w;
        }
        return gs;
    });
}

inline Var slice_ch(const Var& x, int64_t c0, int64_t len) {
    const auto& s = x.shape();
    check(s.size() == 4 && c0 >= 0 && c0 + len <= s[1], "slice_ch: bad range");
    Tensor out({s[0], len, s[2], s[3]});
    const int64_t HW = s[2] * s[3];
    const double* px = x.val().data();
    double* po = out.data();
    for (int64_t n = 0; n < s[0]; ++n)
        std::copy(px + (n * s[1] + c0) * HW, px + (n * s[1] + c0 + len) * HW,
                  po + n * len * HW);
    const int64_t C = s[1];
    const int64_t N = s[0], H = s[2], W = s[3];
    return make_op(std::move(out), {x}, [c0, len, C, N, H, W](const Var& gy) {
        std::vector<Var> parts;
        if (c0 > 0) parts.push_back(Var::constant(Tensor({N, c0, H, W})));
        parts.push_back(gy);
        if (c0 + len < C) parts.push_back(Var::constant(Tensor({N, C - c0 - len, H, W})));
        return std::vector<Var>{concat_ch(parts)};
    });
}

inline Var concat_n(const std::vector<Var>& parts) {
    check(!parts.empty(), "concat_n: empty");
    const auto& s0 = parts[0].shape();
    int64_t N = 0;
    int64_t rest = 1;
    for (size_t i = 1; i < s0.size(); ++i) rest *= s0[i];
    for (const auto& p : parts) {
        const auto& s = p.shape();
        check(s.size() == s0.size(), "concat_n: rank mismatch");
        for (size_t i = 1; i < s.size(); ++i) check(s[i] == s0[i], "concat_n: shape mismatch");
        N += s[0];
    }
    std::vector<int64_t> out_shape = s0;
    out_shape[0] = N;
    Tensor out(out_shape);
    double* po = out.data();
    int64_t off = 0;
    for (const auto& p : parts) {
        const int64_t cnt = p.dim(0) * rest;
        std::copy(p.val().data(), p.val().data() + cnt, po + off);
        off += cnt;
    }
    std::vector<int64_t> sizes;
    for (const auto& p : parts) sizes.push_back(p.dim(0));
    return make_op(std::move(out), parts, [sizes](const Var& gy) {
        std::vector<Var> gs;
        int64_t n0 = 0;
        for (int64_t s : sizes) {
            gs.push_back(slice_n(gy, n0, s));
            n0 += s;
        }
        return gs;
    });
}

inline Var slice_n(const Var& x, int64_t n0, int64_t len) {
    const auto& s = x.shape();
    check(!s.empty() && n0 >= 0 && n0 + len <= s[0], "slice_n: bad range");
    int64_t rest = 1;
    for (size_t i = 1; i < s.size(); ++i) rest *= s[i];
    std::vector<int64_t> out_shape = s;
    out_shape[0] = len;
    Tensor out(out_shape);
    std::copy(x.val().data() + n0 * rest, x.val().data() + (n0 + len) * rest, out.data());
    const int64_t N = s[0];
    std::vector<int64_t> pre_shape = s, post_shape = s;
    pre_shape[0] = n0;
    post_shape[0] = N - n0 - len;
    return make_op(std::move(out), {x}, [pre_shape, post_shape](const Var& gy) {
        std::vector<Var> parts;
        if (pre_shape[0] > 0) parts.push_back(Var::constant(Tensor(pre_shape)));
        parts.push_back(gy);
        if (post_shape[0] > 0) parts.push_back(Var::constant(Tensor(post_shape)));
        return std::vector<Var>{concat_n(parts)};
    });
}

// ---- embedding --------------------------------------------------------------

inline Var gather_rows(const Var& table, const std::vector<int64_t>& idx) {
    const auto& s = table.shape();
    check(s.size() == 2, "gather_rows: table must be 2-d");
    const int64_t D = s[1], R = s[0];
    Tensor out({int64_t(idx.size()), D});
    const double* pt = table.val().data();
    double* po = out.data();
    for (size_t i = 0; i < idx.size(); ++i) {
        check(idx[i] >= 0 && idx[i] < R, "gather_rows: index out of range");
        std::copy(pt + idx[i] * D, pt + (idx[i] + 1) * D, po + int64_t(i) * D);
    }
    return make_op(std::move(out), {table}, [idx, R](const Var& gy) {
        return std::vector<Var>{scatter_rows(gy, idx, R)};
    });
}

inline Var scatter_rows(const Var& x, const std::vector<int64_t>& idx, int64_t rows) {
    const auto& s = x.shape();
    check(s.size() == 2 && int64_t(idx.size()) == s[0], "scatter_rows: bad arity");
    const int64_t D = s[1];
    Tensor out({rows, D});
    const double* px = x.val().data();
    double* po = out.data();
    for (size_t i = 0; i < idx.size(); ++i)
        for (int64_t d = 0; d < D; ++d) po[idx[i] * D + d] += px[int64_t(i) * D + d];
    return make_op(std::move(out), {x}, [idx](const Var& gy) {
        return std::vector<Var>{gather_rows(gy, idx)};
    });
}

// ---- convenience -----------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }

// Per-sample per-channel scaling: x[N,C,H,W] * s[N,C].
inline Var scale_channels(const Var& x, const Var& s) {
    return mul(x, broadcast_hw(s, x.dim(2), x.dim(3)));
}

inline Var add_channel_bias(const Var& x, const Var& b) {
    return add(x, broadcast_c(b, x.dim(0), x.dim(2), x.dim(3)));
}

} // namespace unicoal::ad
