#pragma once

#include <cstdint>
#include <limits>

#include "dcnn/layer_specs.hpp"

// OpenMP kernels. Each parallel loop distributes output elements that are
// written by exactly one iteration, and the per-element arithmetic mirrors
// kernels_serial.hpp line for line, so results are bit-equal to the serial
// reference for any thread count. Without OpenMP the pragmas are inert and
// these collapse to the serial loops.

namespace dcnn::kernels::par {

template <typename T>
void conv_forward(const T* in, int h, int w, int c, const T* weights, const T* biases,
                  const Conv2DSpec& spec, T* out, int h2, int w2) {
    const int f = spec.kernel, s = spec.stride, p = spec.pad, n_f = spec.filters;
    const std::uint8_t* mask = spec.connectivity.empty() ? nullptr : spec.connectivity.data();
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < h2; ++oy) {
        for (int ox = 0; ox < w2; ++ox) {
            for (int of = 0; of < n_f; ++of) {
                const T* wf = weights + static_cast<std::size_t>(of) * f * f * c;
                const std::uint8_t* mrow = mask ? mask + static_cast<std::size_t>(of) * c : nullptr;
                T acc = biases[of];
                for (int ky = 0; ky < f; ++ky) {
                    const int iy = oy * s + ky - p;
                    if (iy < 0 || iy >= h) continue;
                    for (int kx = 0; kx < f; ++kx) {
                        const int ix = ox * s + kx - p;
                        if (ix < 0 || ix >= w) continue;
                        const T* ip = in + (static_cast<std::size_t>(iy) * w + ix) * c;
                        const T* wp = wf + (static_cast<std::size_t>(ky) * f + kx) * c;
                        for (int ic = 0; ic < c; ++ic) {
                            if (mrow && !mrow[ic]) continue;
                            acc += wp[ic] * ip[ic];
                        }
                    }
                }
                out[(static_cast<std::size_t>(oy) * w2 + ox) * n_f + of] = acc;
            }
        }
    }
}

template <typename T>
void conv_backward_bias(const T* gout, int h2, int w2, int n_f, T* gbias) {
#pragma omp parallel for schedule(static)
    for (int of = 0; of < n_f; ++of) {
        T acc{};
        for (int oy = 0; oy < h2; ++oy)
            for (int ox = 0; ox < w2; ++ox)
                acc += gout[(static_cast<std::size_t>(oy) * w2 + ox) * n_f + of];
        gbias[of] = acc;
    }
}

template <typename T>
void conv_backward_weights(const T* gout, const T* in, int h, int w, int c,
                           const Conv2DSpec& spec, T* gweights, int h2, int w2) {
    const int f = spec.kernel, s = spec.stride, p = spec.pad, n_f = spec.filters;
#pragma omp parallel for collapse(2) schedule(static)
    for (int of = 0; of < n_f; ++of) {
        for (int ky = 0; ky < f; ++ky) {
            for (int kx = 0; kx < f; ++kx) {
                for (int ic = 0; ic < c; ++ic) {
                    if (!spec.connected(of, ic)) continue;
                    T acc{};
                    for (int oy = 0; oy < h2; ++oy) {
                        const int iy = oy * s + ky - p;
                        if (iy < 0 || iy >= h) continue;
                        for (int ox = 0; ox < w2; ++ox) {
                            const int ix = ox * s + kx - p;
                            if (ix < 0 || ix >= w) continue;
                            acc += gout[(static_cast<std::size_t>(oy) * w2 + ox) * n_f + of] *
                                   in[(static_cast<std::size_t>(iy) * w + ix) * c + ic];
                        }
                    }
                    gweights[((static_cast<std::size_t>(of) * f + ky) * f + kx) * c + ic] = acc;
                }
            }
        }
    }
}

template <typename T>
void conv_backward_input(const T* gout, const T* weights, int h, int w, int c,
                         const Conv2DSpec& spec, T* gin, int h2, int w2) {
    const int f = spec.kernel, s = spec.stride, p = spec.pad, n_f = spec.filters;
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < h; ++iy) {
        for (int ix = 0; ix < w; ++ix) {
            for (int ic = 0; ic < c; ++ic) {
                T acc{};
                for (int of = 0; of < n_f; ++of) {
                    if (!spec.connected(of, ic)) continue;
                    const T* wf = weights + static_cast<std::size_t>(of) * f * f * c;
                    for (int ky = 0; ky < f; ++ky) {
                        const int ty = iy + p - ky;
                        if (ty < 0 || ty % s != 0) continue;
                        const int oy = ty / s;
                        if (oy >= h2) continue;
                        for (int kx = 0; kx < f; ++kx) {
                            const int tx = ix + p - kx;
                            if (tx < 0 || tx % s != 0) continue;
                            const int ox = tx / s;
                            if (ox >= w2) continue;
                            acc += gout[(static_cast<std::size_t>(oy) * w2 + ox) * n_f + of] *
                                   wf[(static_cast<std::size_t>(ky) * f + kx) * c + ic];
                        }
                    }
                }
                gin[(static_cast<std::size_t>(iy) * w + ix) * c + ic] = acc;
            }
        }
    }
}

template <typename T>
void maxpool_forward(const T* in, int h, int w, int c, const PoolSpec& spec, const T* coeff,
                     const T* bias, T* out, std::int32_t* argmax, int h2, int w2) {
    const int se = spec.extent, sd = spec.stride;
    (void)h;
#pragma omp parallel for schedule(static)
    for (int oy = 0; oy < h2; ++oy) {
        for (int ox = 0; ox < w2; ++ox) {
            for (int ch = 0; ch < c; ++ch) {
                T best = -std::numeric_limits<T>::infinity();
                std::int32_t best_idx = -1;
                for (int ky = 0; ky < se; ++ky) {
                    const int iy = oy * sd + ky;
                    for (int kx = 0; kx < se; ++kx) {
                        const int ix = ox * sd + kx;
                        const std::int32_t idx =
                            static_cast<std::int32_t>((static_cast<std::size_t>(iy) * w + ix) * c + ch);
                        const T v = in[idx];
                        if (v > best) {
                            best = v;
                            best_idx = idx;
                        }
                    }
                }
                const std::size_t o = (static_cast<std::size_t>(oy) * w2 + ox) * c + ch;
                out[o] = coeff ? coeff[ch] * best + bias[ch] : best;
                argmax[o] = best_idx;
            }
        }
    }
}

// Parallel over channels: argmax indices never cross channels, so each
// thread scatters into a disjoint slice of gin.
template <typename T>
void maxpool_backward(const T* gout, const std::int32_t* argmax, const T* in, int c,
                      const T* coeff, T* gin, T* gcoeff, T* gbias, int h2, int w2) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
        T csum{};
        T bsum{};
        for (int oy = 0; oy < h2; ++oy) {
            for (int ox = 0; ox < w2; ++ox) {
                const std::size_t o = (static_cast<std::size_t>(oy) * w2 + ox) * c + ch;
                const T g = gout[o];
                const std::int32_t idx = argmax[o];
                gin[idx] += coeff ? g * coeff[ch] : g;
                if (gcoeff) {
                    csum += g * in[idx];
                    bsum += g;
                }
            }
        }
        if (gcoeff) {
            gcoeff[ch] = csum;
            gbias[ch] = bsum;
        }
    }
}

template <typename T>
void dense_forward(const T* in, const T* weights, const T* biases, int in_n, int out_n, T* out) {
#pragma omp parallel for schedule(static)
    for (int o = 0; o < out_n; ++o) {
        const T* wr = weights + static_cast<std::size_t>(o) * in_n;
        T acc = biases[o];
        for (int i = 0; i < in_n; ++i) acc += wr[i] * in[i];
        out[o] = acc;
    }
}

template <typename T>
void dense_backward(const T* gout, const T* in, const T* weights, int in_n, int out_n, T* gin,
                    T* gweights, T* gbias) {
#pragma omp parallel
    {
#pragma omp for schedule(static) nowait
        for (int o = 0; o < out_n; ++o) {
            const T g = gout[o];
            T* gw = gweights + static_cast<std::size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) gw[i] = g * in[i];
            gbias[o] = g;
        }
#pragma omp for schedule(static)
        for (int i = 0; i < in_n; ++i) {
            T acc{};
            for (int o = 0; o < out_n; ++o)
                acc += gout[o] * weights[static_cast<std::size_t>(o) * in_n + i];
            gin[i] = acc;
        }
    }
}

template <typename T>
void relu_forward(const T* in, std::size_t n, T* out) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        out[i] = in[i] > T{} ? in[i] : T{};
}

template <typename T>
void relu_backward(const T* gout, const T* in, std::size_t n, T* gin) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
        gin[i] = in[i] > T{} ? gout[i] : T{};
}

}  // namespace dcnn::kernels::par
