#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "fino/tensor.hpp"

namespace fino {

// Layers are channels-last throughout: images [N,H,W,C], temporal [N,T,C].
// Every layer caches what its backward pass needs; backward accumulates
// parameter gradients and returns the input gradient.

template <class T>
struct ParamRef {
    std::string name;
    TensorT<T>* value;
    TensorT<T>* grad;
};

template <class T>
using ParamList = std::vector<ParamRef<T>>;

namespace detail {

template <class T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapM = Eigen::Map<MatrixRM<T>>;
template <class T>
using CMapM = Eigen::Map<const MatrixRM<T>>;

// 3x3 same-padding im2col: [N,H,W,C] -> [N*H*W, 9*C]
template <class T>
TensorT<T> im2col3x3(const TensorT<T>& x) {
    const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    TensorT<T> col({n * h * w, 9 * c});
    for (int ni = 0; ni < n; ++ni)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                T* dst = col.data() + (size_t(ni) * h * w + size_t(y) * w + xx) * size_t(9) * c;
                for (int ky = -1; ky <= 1; ++ky)
                    for (int kx = -1; kx <= 1; ++kx) {
                        int sy = y + ky, sx = xx + kx;
                        if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                            for (int ci = 0; ci < c; ++ci) *dst++ = T(0);
                        } else {
                            const T* src = x.data() +
                                           ((size_t(ni) * h + sy) * w + sx) * size_t(c);
                            for (int ci = 0; ci < c; ++ci) *dst++ = src[ci];
                        }
                    }
            }
    return col;
}

// scatter-add adjoint of im2col3x3: [N*H*W, 9*C] -> [N,H,W,C]
template <class T>
TensorT<T> col2im3x3(const TensorT<T>& col, int n, int h, int w, int c) {
    TensorT<T> x({n, h, w, c});
    for (int ni = 0; ni < n; ++ni)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
                const T* src = col.data() +
                               (size_t(ni) * h * w + size_t(y) * w + xx) * size_t(9) * c;
                for (int ky = -1; ky <= 1; ++ky)
                    for (int kx = -1; kx <= 1; ++kx) {
                        int sy = y + ky, sx = xx + kx;
                        if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                            src += c;
                        } else {
                            T* dst = x.data() + ((size_t(ni) * h + sy) * w + sx) * size_t(c);
                            for (int ci = 0; ci < c; ++ci) dst[ci] += *src++;
                        }
                    }
            }
    return x;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// 3x3 convolution, stride 1, same padding.
template <class T>
struct Conv2d {
    int in_c = 0, out_c = 0;
    TensorT<T> weight;  // [out_c, 9*in_c]
    TensorT<T> bias;    // [out_c]
    TensorT<T> d_weight, d_bias;
    TensorT<T> cache_col;
    std::vector<int> cache_shape;

    void init(int in_channels, int out_channels, Rng& rng) {
        in_c = in_channels;
        out_c = out_channels;
        T bound = T(std::sqrt(1.0 / (9.0 * in_c)));
        weight = TensorT<T>::uniform({out_c, 9 * in_c}, -bound, bound, rng);
        bias = TensorT<T>({out_c});
        d_weight = TensorT<T>({out_c, 9 * in_c});
        d_bias = TensorT<T>({out_c});
    }

    TensorT<T> forward(const TensorT<T>& x, bool keep_cache = true) {
        const int n = x.dim(0), h = x.dim(1), w = x.dim(2);
        TensorT<T> col = detail::im2col3x3(x);
        TensorT<T> y({n, h, w, out_c});
        detail::CMapM<T> cm(col.data(), col.dim(0), col.dim(1));
        detail::CMapM<T> wm(weight.data(), out_c, 9 * in_c);
        detail::MapM<T> ym(y.data(), n * h * w, out_c);
        ym.noalias() = cm * wm.transpose();
        ym.rowwise() += detail::CMapM<T>(bias.data(), 1, out_c).row(0);
        if (keep_cache) {
            cache_col = std::move(col);
            cache_shape = x.shape();
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const int n = cache_shape[0], h = cache_shape[1], w = cache_shape[2];
        detail::CMapM<T> dym(dy.data(), n * h * w, out_c);
        detail::CMapM<T> cm(cache_col.data(), cache_col.dim(0), cache_col.dim(1));
        detail::MapM<T> dwm(d_weight.data(), out_c, 9 * in_c);
        dwm.noalias() += dym.transpose() * cm;
        detail::MapM<T> dbm(d_bias.data(), 1, out_c);
        dbm.row(0) += dym.colwise().sum();
        TensorT<T> dcol({n * h * w, 9 * in_c});
        detail::MapM<T> dcm(dcol.data(), dcol.dim(0), dcol.dim(1));
        detail::CMapM<T> wm(weight.data(), out_c, 9 * in_c);
        dcm.noalias() = dym * wm;
        return detail::col2im3x3(dcol, n, h, w, in_c);
    }

    void params(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".weight", &weight, &d_weight});
        out.push_back({prefix + ".bias", &bias, &d_bias});
    }
};

// ---------------------------------------------------------------------------
// Temporal convolution over [N,T,C_in], same padding, configurable kernel.
template <class T>
struct Conv1d {
    int in_c = 0, out_c = 0, kernel = 0;
    TensorT<T> weight;  // [out_c, kernel*in_c]
    TensorT<T> bias;
    TensorT<T> d_weight, d_bias;
    TensorT<T> cache_col;
    std::vector<int> cache_shape;

    void init(int in_channels, int out_channels, int kernel_len, Rng& rng) {
        in_c = in_channels;
        out_c = out_channels;
        kernel = kernel_len;
        T bound = T(std::sqrt(1.0 / (double(kernel) * in_c)));
        weight = TensorT<T>::uniform({out_c, kernel * in_c}, -bound, bound, rng);
        bias = TensorT<T>({out_c});
        d_weight = TensorT<T>({out_c, kernel * in_c});
        d_bias = TensorT<T>({out_c});
    }

    TensorT<T> forward(const TensorT<T>& x, bool keep_cache = true) {
        const int n = x.dim(0), t = x.dim(1);
        const int pad_left = (kernel - 1) / 2;
        TensorT<T> col({n * t, kernel * in_c});
        for (int ni = 0; ni < n; ++ni)
            for (int ti = 0; ti < t; ++ti) {
                T* dst = col.data() + (size_t(ni) * t + ti) * size_t(kernel) * in_c;
                for (int k = 0; k < kernel; ++k) {
                    int st = ti + k - pad_left;
                    if (st < 0 || st >= t) {
                        for (int ci = 0; ci < in_c; ++ci) *dst++ = T(0);
                    } else {
                        const T* src = x.data() + (size_t(ni) * t + st) * size_t(in_c);
                        for (int ci = 0; ci < in_c; ++ci) *dst++ = src[ci];
                    }
                }
            }
        TensorT<T> y({n, t, out_c});
        detail::CMapM<T> cm(col.data(), col.dim(0), col.dim(1));
        detail::CMapM<T> wm(weight.data(), out_c, kernel * in_c);
        detail::MapM<T> ym(y.data(), n * t, out_c);
        ym.noalias() = cm * wm.transpose();
        ym.rowwise() += detail::CMapM<T>(bias.data(), 1, out_c).row(0);
        if (keep_cache) {
            cache_col = std::move(col);
            cache_shape = x.shape();
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const int n = cache_shape[0], t = cache_shape[1];
        const int pad_left = (kernel - 1) / 2;
        detail::CMapM<T> dym(dy.data(), n * t, out_c);
        detail::CMapM<T> cm(cache_col.data(), cache_col.dim(0), cache_col.dim(1));
        detail::MapM<T> dwm(d_weight.data(), out_c, kernel * in_c);
        dwm.noalias() += dym.transpose() * cm;
        detail::MapM<T> dbm(d_bias.data(), 1, out_c);
        dbm.row(0) += dym.colwise().sum();
        TensorT<T> dcol({n * t, kernel * in_c});
        detail::MapM<T> dcm(dcol.data(), dcol.dim(0), dcol.dim(1));
        detail::CMapM<T> wm(weight.data(), out_c, kernel * in_c);
        dcm.noalias() = dym * wm;
        TensorT<T> dx({n, t, in_c});
        for (int ni = 0; ni < n; ++ni)
            for (int ti = 0; ti < t; ++ti) {
                const T* src = dcol.data() + (size_t(ni) * t + ti) * size_t(kernel) * in_c;
                for (int k = 0; k < kernel; ++k) {
                    int st = ti + k - pad_left;
                    if (st < 0 || st >= t) {
                        src += in_c;
                    } else {
                        T* dst = dx.data() + (size_t(ni) * t + st) * size_t(in_c);
                        for (int ci = 0; ci < in_c; ++ci) dst[ci] += *src++;
                    }
                }
            }
        return dx;
    }

    void params(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".weight", &weight, &d_weight});
        out.push_back({prefix + ".bias", &bias, &d_bias});
    }
};

// ---------------------------------------------------------------------------
// Batch normalization over the trailing channel axis; any leading layout.
template <class T>
struct BatchNorm {
    int channels = 0;
    T momentum = T(0.1);
    T eps = T(1e-5);
    TensorT<T> gamma, beta, d_gamma, d_beta;
    TensorT<T> running_mean, running_var;
    // caches
    TensorT<T> cache_xhat;
    std::vector<T> cache_mean, cache_inv_std;
    std::vector<int> cache_shape;

    void init(int c) {
        channels = c;
        gamma = TensorT<T>({c});
        gamma.fill(T(1));
        beta = TensorT<T>({c});
        d_gamma = TensorT<T>({c});
        d_beta = TensorT<T>({c});
        running_mean = TensorT<T>({c});
        running_var = TensorT<T>({c});
        running_var.fill(T(1));
    }

    TensorT<T> forward(const TensorT<T>& x, bool train) {
        const size_t m = x.size() / size_t(channels);
        TensorT<T> y(x.shape());
        if (train) {
            cache_shape = x.shape();
            cache_mean.assign(size_t(channels), T(0));
            cache_inv_std.assign(size_t(channels), T(0));
            std::vector<T> mean(size_t(channels), T(0)), var(size_t(channels), T(0));
            for (size_t i = 0; i < m; ++i) {
                const T* row = x.data() + i * size_t(channels);
                for (int c = 0; c < channels; ++c) mean[size_t(c)] += row[c];
            }
            for (int c = 0; c < channels; ++c) mean[size_t(c)] /= T(m);
            for (size_t i = 0; i < m; ++i) {
                const T* row = x.data() + i * size_t(channels);
                for (int c = 0; c < channels; ++c) {
                    T d = row[c] - mean[size_t(c)];
                    var[size_t(c)] += d * d;
                }
            }
            for (int c = 0; c < channels; ++c) var[size_t(c)] /= T(m);
            cache_xhat = TensorT<T>(x.shape());
            for (int c = 0; c < channels; ++c) {
                cache_mean[size_t(c)] = mean[size_t(c)];
                cache_inv_std[size_t(c)] = T(1) / std::sqrt(var[size_t(c)] + eps);
                running_mean[size_t(c)] =
                    (T(1) - momentum) * running_mean[size_t(c)] + momentum * mean[size_t(c)];
                running_var[size_t(c)] =
                    (T(1) - momentum) * running_var[size_t(c)] + momentum * var[size_t(c)];
            }
            for (size_t i = 0; i < m; ++i) {
                const T* row = x.data() + i * size_t(channels);
                T* xh = cache_xhat.data() + i * size_t(channels);
                T* yr = y.data() + i * size_t(channels);
                for (int c = 0; c < channels; ++c) {
                    xh[c] = (row[c] - cache_mean[size_t(c)]) * cache_inv_std[size_t(c)];
                    yr[c] = gamma[size_t(c)] * xh[c] + beta[size_t(c)];
                }
            }
        } else {
            for (size_t i = 0; i < m; ++i) {
                const T* row = x.data() + i * size_t(channels);
                T* yr = y.data() + i * size_t(channels);
                for (int c = 0; c < channels; ++c) {
                    T inv = T(1) / std::sqrt(running_var[size_t(c)] + eps);
                    yr[c] = gamma[size_t(c)] * (row[c] - running_mean[size_t(c)]) * inv +
                            beta[size_t(c)];
                }
            }
        }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const size_t m = dy.size() / size_t(channels);
        std::vector<T> sum_dy(size_t(channels), T(0)), sum_dy_xhat(size_t(channels), T(0));
        for (size_t i = 0; i < m; ++i) {
            const T* dr = dy.data() + i * size_t(channels);
            const T* xh = cache_xhat.data() + i * size_t(channels);
            for (int c = 0; c < channels; ++c) {
                sum_dy[size_t(c)] += dr[c];
                sum_dy_xhat[size_t(c)] += dr[c] * xh[c];
            }
        }
        for (int c = 0; c < channels; ++c) {
            d_beta[size_t(c)] += sum_dy[size_t(c)];
            d_gamma[size_t(c)] += sum_dy_xhat[size_t(c)];
        }
        TensorT<T> dx(dy.shape());
        for (size_t i = 0; i < m; ++i) {
            const T* dr = dy.data() + i * size_t(channels);
            const T* xh = cache_xhat.data() + i * size_t(channels);
            T* dxr = dx.data() + i * size_t(channels);
            for (int c = 0; c < channels; ++c) {
                dxr[c] = gamma[size_t(c)] * cache_inv_std[size_t(c)] *
                         (dr[c] - sum_dy[size_t(c)] / T(m) -
                          xh[c] * sum_dy_xhat[size_t(c)] / T(m));
            }
        }
        return dx;
    }

    void params(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".gamma", &gamma, &d_gamma});
        out.push_back({prefix + ".beta", &beta, &d_beta});
    }

    // non-trainable state, persisted in checkpoints
    void stats(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".running_mean", &running_mean, nullptr});
        out.push_back({prefix + ".running_var", &running_var, nullptr});
    }
};

// ---------------------------------------------------------------------------
template <class T>
struct ReLU {
    TensorT<T> cache_mask;
    TensorT<T> forward(const TensorT<T>& x, bool keep_cache = true) {
        TensorT<T> y(x.shape());
        if (keep_cache) cache_mask = TensorT<T>(x.shape());
        for (size_t i = 0; i < x.size(); ++i) {
            bool pos = x[i] > T(0);
            y[i] = pos ? x[i] : T(0);
            if (keep_cache) cache_mask[i] = pos ? T(1) : T(0);
        }
        return y;
    }
    TensorT<T> backward(const TensorT<T>& dy) {
        TensorT<T> dx(dy.shape());
        for (size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * cache_mask[i];
        return dx;
    }
};

// ---------------------------------------------------------------------------
// Inverted dropout; identity in evaluation mode.
template <class T>
struct Dropout {
    T rate = T(0.4);
    TensorT<T> cache_mask;
    TensorT<T> forward(const TensorT<T>& x, bool train, Rng& rng) {
        if (!train || rate <= T(0)) return x;
        TensorT<T> y(x.shape());
        cache_mask = TensorT<T>(x.shape());
        T scale = T(1) / (T(1) - rate);
        for (size_t i = 0; i < x.size(); ++i) {
            T keep = rng.bernoulli(1.0 - double(rate)) ? scale : T(0);
            cache_mask[i] = keep;
            y[i] = x[i] * keep;
        }
        return y;
    }
    TensorT<T> backward(const TensorT<T>& dy, bool train) {
        if (!train || rate <= T(0)) return dy;
        TensorT<T> dx(dy.shape());
        for (size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * cache_mask[i];
        return dx;
    }
};

// ---------------------------------------------------------------------------
// 2x2 spatial max pooling, stride 2, [N,H,W,C]; H,W even.
template <class T>
struct MaxPool2x2 {
    std::vector<int> cache_argmax;
    std::vector<int> cache_shape;

    TensorT<T> forward(const TensorT<T>& x) {
        const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        if (h % 2 || w % 2) throw ShapeError("MaxPool2x2 needs even spatial dims");
        TensorT<T> y({n, h / 2, w / 2, c});
        cache_argmax.assign(y.size(), 0);
        cache_shape = x.shape();
        for (int ni = 0; ni < n; ++ni)
            for (int y2 = 0; y2 < h / 2; ++y2)
                for (int x2 = 0; x2 < w / 2; ++x2)
                    for (int ci = 0; ci < c; ++ci) {
                        T best = -std::numeric_limits<T>::infinity();
                        int best_idx = 0;
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                int sy = 2 * y2 + dy, sx = 2 * x2 + dx;
                                size_t idx = ((size_t(ni) * h + sy) * w + sx) * size_t(c) + ci;
                                if (x[idx] > best) {
                                    best = x[idx];
                                    best_idx = int(idx);
                                }
                            }
                        size_t oidx = ((size_t(ni) * (h / 2) + y2) * (w / 2) + x2) * size_t(c) + ci;
                        y[oidx] = best;
                        cache_argmax[oidx] = best_idx;
                    }
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        TensorT<T> dx(cache_shape);
        for (size_t i = 0; i < dy.size(); ++i) dx[size_t(cache_argmax[i])] += dy[i];
        return dx;
    }
};

// ---------------------------------------------------------------------------
// Global pools.
template <class T>
struct GlobalAvgPool2d {  // [N,H,W,C] -> [N,C]
    std::vector<int> cache_shape;
    TensorT<T> forward(const TensorT<T>& x) {
        const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
        cache_shape = x.shape();
        TensorT<T> y({n, c});
        for (int ni = 0; ni < n; ++ni)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    const T* src = x.data() + ((size_t(ni) * h + yy) * w + xx) * size_t(c);
                    T* dst = y.data() + size_t(ni) * c;
                    for (int ci = 0; ci < c; ++ci) dst[ci] += src[ci];
                }
        for (size_t i = 0; i < y.size(); ++i) y[i] /= T(h * w);
        return y;
    }
    TensorT<T> backward(const TensorT<T>& dy) {
        const int n = cache_shape[0], h = cache_shape[1], w = cache_shape[2],
                  c = cache_shape[3];
        TensorT<T> dx(cache_shape);
        for (int ni = 0; ni < n; ++ni)
            for (int yy = 0; yy < h; ++yy)
                for (int xx = 0; xx < w; ++xx) {
                    T* dst = dx.data() + ((size_t(ni) * h + yy) * w + xx) * size_t(c);
                    const T* src = dy.data() + size_t(ni) * c;
                    for (int ci = 0; ci < c; ++ci) dst[ci] = src[ci] / T(h * w);
                }
        return dx;
    }
};

template <class T>
struct GlobalMaxPool1d {  // [N,T,C] -> [N,C]
    std::vector<int> cache_argmax;
    std::vector<int> cache_shape;
    TensorT<T> forward(const TensorT<T>& x) {
        const int n = x.dim(0), t = x.dim(1), c = x.dim(2);
        cache_shape = x.shape();
        TensorT<T> y({n, c});
        cache_argmax.assign(y.size(), 0);
        for (int ni = 0; ni < n; ++ni)
            for (int ci = 0; ci < c; ++ci) {
                T best = -std::numeric_limits<T>::infinity();
                int best_idx = 0;
                for (int ti = 0; ti < t; ++ti) {
                    size_t idx = (size_t(ni) * t + ti) * size_t(c) + ci;
                    if (x[idx] > best) {
                        best = x[idx];
                        best_idx = int(idx);
                    }
                }
                y.at2(ni, ci) = best;
                cache_argmax[size_t(ni) * c + ci] = best_idx;
            }
        return y;
    }
    TensorT<T> backward(const TensorT<T>& dy) {
        TensorT<T> dx(cache_shape);
        for (size_t i = 0; i < dy.size(); ++i) dx[size_t(cache_argmax[i])] += dy[i];
        return dx;
    }
};

// ---------------------------------------------------------------------------
template <class T>
struct Linear {
    int in_f = 0, out_f = 0;
    TensorT<T> weight;  // [out_f, in_f]
    TensorT<T> bias;
    TensorT<T> d_weight, d_bias;
    TensorT<T> cache_x;

    void init(int in_features, int out_features, Rng& rng) {
        in_f = in_features;
        out_f = out_features;
        T bound = T(std::sqrt(1.0 / in_f));
        weight = TensorT<T>::uniform({out_f, in_f}, -bound, bound, rng);
        bias = TensorT<T>({out_f});
        d_weight = TensorT<T>({out_f, in_f});
        d_bias = TensorT<T>({out_f});
    }

    TensorT<T> forward(const TensorT<T>& x, bool keep_cache = true) {
        const int n = x.dim(0);
        TensorT<T> y({n, out_f});
        detail::CMapM<T> xm(x.data(), n, in_f);
        detail::CMapM<T> wm(weight.data(), out_f, in_f);
        detail::MapM<T> ym(y.data(), n, out_f);
        ym.noalias() = xm * wm.transpose();
        ym.rowwise() += detail::CMapM<T>(bias.data(), 1, out_f).row(0);
        if (keep_cache) cache_x = x;
        return y;
    }

    TensorT<T> backward(const TensorT<T>& dy) {
        const int n = dy.dim(0);
        detail::CMapM<T> dym(dy.data(), n, out_f);
        detail::CMapM<T> xm(cache_x.data(), n, in_f);
        detail::MapM<T> dwm(d_weight.data(), out_f, in_f);
        dwm.noalias() += dym.transpose() * xm;
        detail::MapM<T> dbm(d_bias.data(), 1, out_f);
        dbm.row(0) += dym.colwise().sum();
        TensorT<T> dx({n, in_f});
        detail::MapM<T> dxm(dx.data(), n, in_f);
        detail::CMapM<T> wm(weight.data(), out_f, in_f);
        dxm.noalias() = dym * wm;
        return dx;
    }

    void params(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".weight", &weight, &d_weight});
        out.push_back({prefix + ".bias", &bias, &d_bias});
    }
};

// ---------------------------------------------------------------------------
// Convolutional LSTM over [N,T,H,W,C]; gates are 3x3 same-padding
// convolutions of [x_t ; h_{t-1}]. Gate order in the stacked kernel: input,
// forget, candidate, output.
template <class T>
struct ConvLstm {
    int in_c = 0, hidden = 0;
    TensorT<T> weight;  // [4*hidden, 9*(in_c+hidden)]
    TensorT<T> bias;    // [4*hidden]
    TensorT<T> d_weight, d_bias;

    struct StepCache {
        TensorT<T> col;      // im2col of concat input
        TensorT<T> gates;    // post-activation i,f,g,o: [N,H,W,4*hidden]
        TensorT<T> c_prev;   // [N,H,W,hidden]
        TensorT<T> c_new;
        TensorT<T> h_prev;
    };
    std::vector<StepCache> caches;
    std::vector<int> cache_in_shape;

    void init(int in_channels, int hidden_channels, Rng& rng) {
        in_c = in_channels;
        hidden = hidden_channels;
        int cc = in_c + hidden;
        T bound = T(std::sqrt(1.0 / (9.0 * cc)));
        weight = TensorT<T>::uniform({4 * hidden, 9 * cc}, -bound, bound, rng);
        bias = TensorT<T>({4 * hidden});
        // forget-gate bias starts at +1
        for (int i = hidden; i < 2 * hidden; ++i) bias[size_t(i)] = T(1);
        d_weight = TensorT<T>({4 * hidden, 9 * cc});
        d_bias = TensorT<T>({4 * hidden});
    }

    static T sigmoid(T v) { return T(1) / (T(1) + std::exp(-v)); }

    // One cell update. h and c are updated in place; optionally records the
    // cache needed by backward.
    void step(const TensorT<T>& x, TensorT<T>& h, TensorT<T>& c, StepCache* cache) {
        const int n = x.dim(0), hh = x.dim(1), ww = x.dim(2);
        if (h.dim(1) != hh || h.dim(2) != ww)
            throw ShapeError("ConvLstm state/input spatial mismatch");
        const int cc = in_c + hidden;
        TensorT<T> concat({n, hh, ww, cc});
        for (int ni = 0; ni < n; ++ni)
            for (int y = 0; y < hh; ++y)
                for (int xx = 0; xx < ww; ++xx) {
                    T* dst = concat.data() + ((size_t(ni) * hh + y) * ww + xx) * size_t(cc);
                    const T* xs = x.data() + ((size_t(ni) * hh + y) * ww + xx) * size_t(in_c);
                    const T* hs = h.data() + ((size_t(ni) * hh + y) * ww + xx) * size_t(hidden);
                    for (int i = 0; i < in_c; ++i) dst[i] = xs[i];
                    for (int i = 0; i < hidden; ++i) dst[in_c + i] = hs[i];
                }
        TensorT<T> col = detail::im2col3x3(concat);
        TensorT<T> pre({n, hh, ww, 4 * hidden});
        detail::CMapM<T> cm(col.data(), col.dim(0), col.dim(1));
        detail::CMapM<T> wm(weight.data(), 4 * hidden, 9 * cc);
        detail::MapM<T> pm(pre.data(), n * hh * ww, 4 * hidden);
        pm.noalias() = cm * wm.transpose();
        pm.rowwise() += detail::CMapM<T>(bias.data(), 1, 4 * hidden).row(0);

        TensorT<T> gates(pre.shape());
        TensorT<T> c_new(c.shape());
        TensorT<T> h_new(h.shape());
        const size_t px = size_t(n) * hh * ww;
        for (size_t p = 0; p < px; ++p) {
            const T* pr = pre.data() + p * size_t(4) * hidden;
            T* gr = gates.data() + p * size_t(4) * hidden;
            const T* cp = c.data() + p * size_t(hidden);
            T* cn = c_new.data() + p * size_t(hidden);
            T* hn = h_new.data() + p * size_t(hidden);
            for (int u = 0; u < hidden; ++u) {
                T gi = sigmoid(pr[u]);
                T gf = sigmoid(pr[hidden + u]);
                T gg = std::tanh(pr[2 * hidden + u]);
                T go = sigmoid(pr[3 * hidden + u]);
                gr[u] = gi;
                gr[hidden + u] = gf;
                gr[2 * hidden + u] = gg;
                gr[3 * hidden + u] = go;
                cn[u] = gf * cp[u] + gi * gg;
                hn[u] = go * std::tanh(cn[u]);
            }
        }
        if (cache) {
            cache->col = std::move(col);
            cache->gates = std::move(gates);
            cache->c_prev = c;
            cache->c_new = c_new;
            cache->h_prev = h;
        }
        c = std::move(c_new);
        h = std::move(h_new);
    }

    // Unrolled forward; returns the full hidden sequence [N,T,H,W,hidden].
    TensorT<T> forward(const TensorT<T>& x_seq, bool keep_cache = true) {
        const int n = x_seq.dim(0), t = x_seq.dim(1), hh = x_seq.dim(2), ww = x_seq.dim(3);
        if (x_seq.dim(4) != in_c) throw ShapeError("ConvLstm input channel mismatch");
        cache_in_shape = x_seq.shape();
        caches.clear();
        if (keep_cache) caches.resize(size_t(t));
        TensorT<T> h({n, hh, ww, hidden}), c({n, hh, ww, hidden});
        TensorT<T> out({n, t, hh, ww, hidden});
        const size_t frame = size_t(n) * hh * ww;
        for (int ti = 0; ti < t; ++ti) {
            TensorT<T> xt({n, hh, ww, in_c});
            for (int ni = 0; ni < n; ++ni)
                std::copy_n(x_seq.data() + ((size_t(ni) * t + ti) * size_t(hh) * ww) * in_c,
                            size_t(hh) * ww * in_c,
                            xt.data() + size_t(ni) * hh * ww * size_t(in_c));
            step(xt, h, c, keep_cache ? &caches[size_t(ti)] : nullptr);
            for (int ni = 0; ni < n; ++ni)
                std::copy_n(h.data() + size_t(ni) * hh * ww * size_t(hidden),
                            size_t(hh) * ww * hidden,
                            out.data() + ((size_t(ni) * t + ti) * size_t(hh) * ww) * hidden);
        }
        (void)frame;
        return out;
    }

    // BPTT from a gradient on the full hidden sequence.
    TensorT<T> backward(const TensorT<T>& d_out_seq) {
        const int n = cache_in_shape[0], t = cache_in_shape[1], hh = cache_in_shape[2],
                  ww = cache_in_shape[3];
        const int cc = in_c + hidden;
        TensorT<T> dx_seq(cache_in_shape);
        TensorT<T> dh({n, hh, ww, hidden}), dc({n, hh, ww, hidden});
        const size_t px = size_t(n) * hh * ww;
        for (int ti = t - 1; ti >= 0; --ti) {
            StepCache& cch = caches[size_t(ti)];
            // add the sequence gradient for this step
            for (int ni = 0; ni < n; ++ni) {
                const T* src = d_out_seq.data() + ((size_t(ni) * t + ti) * size_t(hh) * ww) * hidden;
                T* dst = dh.data() + size_t(ni) * hh * ww * size_t(hidden);
                for (size_t i = 0; i < size_t(hh) * ww * size_t(hidden); ++i) dst[i] += src[i];
            }
            TensorT<T> d_pre({n, hh, ww, 4 * hidden});
            for (size_t p = 0; p < px; ++p) {
                const T* gr = cch.gates.data() + p * size_t(4) * hidden;
                const T* cp = cch.c_prev.data() + p * size_t(hidden);
                const T* cn = cch.c_new.data() + p * size_t(hidden);
                T* dhp = dh.data() + p * size_t(hidden);
                T* dcp = dc.data() + p * size_t(hidden);
                T* dpr = d_pre.data() + p * size_t(4) * hidden;
                for (int u = 0; u < hidden; ++u) {
                    T gi = gr[u], gf = gr[hidden + u], gg = gr[2 * hidden + u],
                      go = gr[3 * hidden + u];
                    T tanh_c = std::tanh(cn[u]);
                    T dht = dhp[u];
                    T dct = dcp[u] + dht * go * (T(1) - tanh_c * tanh_c);
                    T d_gi = dct * gg;
                    T d_gf = dct * cp[u];
                    T d_gg = dct * gi;
                    T d_go = dht * tanh_c;
                    dpr[u] = d_gi * gi * (T(1) - gi);
                    dpr[hidden + u] = d_gf * gf * (T(1) - gf);
                    dpr[2 * hidden + u] = d_gg * (T(1) - gg * gg);
                    dpr[3 * hidden + u] = d_go * go * (T(1) - go);
                    dcp[u] = dct * gf;  // to previous step
                }
            }
            // gate pre-activation gradient -> weights and concat input
            detail::CMapM<T> dpm(d_pre.data(), n * hh * ww, 4 * hidden);
            detail::CMapM<T> cm(cch.col.data(), cch.col.dim(0), cch.col.dim(1));
            detail::MapM<T> dwm(d_weight.data(), 4 * hidden, 9 * cc);
            dwm.noalias() += dpm.transpose() * cm;
            detail::MapM<T> dbm(d_bias.data(), 1, 4 * hidden);
            dbm.row(0) += dpm.colwise().sum();
            TensorT<T> dcol({n * hh * ww, 9 * cc});
            detail::MapM<T> dcm(dcol.data(), dcol.dim(0), dcol.dim(1));
            detail::CMapM<T> wm(weight.data(), 4 * hidden, 9 * cc);
            dcm.noalias() = dpm * wm;
            TensorT<T> d_concat = detail::col2im3x3(dcol, n, hh, ww, cc);
            // split into dx_t and dh_{t-1}
            TensorT<T> dh_prev({n, hh, ww, hidden});
            for (int ni = 0; ni < n; ++ni)
                for (int y = 0; y < hh; ++y)
                    for (int xx = 0; xx < ww; ++xx) {
                        const T* src =
                            d_concat.data() + ((size_t(ni) * hh + y) * ww + xx) * size_t(cc);
                        T* dxp = dx_seq.data() +
                                 (((size_t(ni) * t + ti) * hh + y) * ww + xx) * size_t(in_c);
                        T* dhp = dh_prev.data() +
                                 ((size_t(ni) * hh + y) * ww + xx) * size_t(hidden);
                        for (int i = 0; i < in_c; ++i) dxp[i] = src[i];
                        for (int i = 0; i < hidden; ++i) dhp[i] = src[in_c + i];
                    }
            dh = std::move(dh_prev);
        }
        return dx_seq;
    }

    void params(const std::string& prefix, ParamList<T>& out) {
        out.push_back({prefix + ".weight", &weight, &d_weight});
        out.push_back({prefix + ".bias", &bias, &d_bias});
    }
};

}  // namespace fino
