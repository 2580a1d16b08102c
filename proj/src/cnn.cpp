#include "permafuse/cnn.hpp"
#include "permafuse/common.hpp"
#include "permafuse/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace permafuse::seismic {

namespace {

struct T4 {
    std::size_t c = 0, x = 0, y = 0, z = 0;
    std::vector<double> v;

    void resize(std::size_t c_, std::size_t x_, std::size_t y_, std::size_t z_) {
        c = c_;
        x = x_;
        y = y_;
        z = z_;
        v.assign(c * x * y * z, 0.0);
    }
    std::size_t size() const { return v.size(); }
    double* row(std::size_t ci, std::size_t xi, std::size_t yi) {
        return &v[((ci * x + xi) * y + yi) * z];
    }
    const double* row(std::size_t ci, std::size_t xi, std::size_t yi) const {
        return &v[((ci * x + xi) * y + yi) * z];
    }
};

void check_finite(const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(v[i])) throw NumericError("numerical blow-up");
}

/// 3x3x3 convolution, padding 1 in x and y, valid in z (out z = in z - 2).
void conv3d_forward(const T4& in, const double* w, const double* b,
                    std::size_t oc_n, T4& out) {
    out.resize(oc_n, in.x, in.y, in.z - 2);
    const std::size_t oz = out.z;
    for (std::size_t oc = 0; oc < oc_n; ++oc) {
        double* base = out.row(oc, 0, 0);
        std::fill(base, base + in.x * in.y * oz, b[oc]);
        for (std::size_t ic = 0; ic < in.c; ++ic) {
            const double* wbase = w + (oc * in.c + ic) * 27;
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const std::size_t xlo = kx == 0 ? 1 : 0;
                const std::size_t xhi = kx == 2 ? in.x - 1 : in.x;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    const std::size_t ylo = ky == 0 ? 1 : 0;
                    const std::size_t yhi = ky == 2 ? in.y - 1 : in.y;
                    for (std::size_t xi = xlo; xi < xhi; ++xi)
                        for (std::size_t yi = ylo; yi < yhi; ++yi) {
                            const double* src =
                                in.row(ic, xi + kx - 1, yi + ky - 1);
                            double* dst = out.row(oc, xi, yi);
                            for (std::size_t kz = 0; kz < 3; ++kz) {
                                const double wv = wbase[(kx * 3 + ky) * 3 + kz];
                                const double* s = src + kz;
                                for (std::size_t zi = 0; zi < oz; ++zi)
                                    dst[zi] += wv * s[zi];
                            }
                        }
                }
            }
        }
    }
}

void conv3d_backward(const T4& in, const double* w, std::size_t oc_n,
                     const T4& dout, T4& din, double* dw, double* db) {
    din.resize(in.c, in.x, in.y, in.z);
    const std::size_t oz = dout.z;
    for (std::size_t oc = 0; oc < oc_n; ++oc) {
        const double* gbase = dout.row(oc, 0, 0);
        double acc = 0.0;
        for (std::size_t i = 0; i < in.x * in.y * oz; ++i) acc += gbase[i];
        db[oc] += acc;
        for (std::size_t ic = 0; ic < in.c; ++ic) {
            const double* wbase = w + (oc * in.c + ic) * 27;
            double* wgrad = dw + (oc * in.c + ic) * 27;
            for (std::size_t kx = 0; kx < 3; ++kx) {
                const std::size_t xlo = kx == 0 ? 1 : 0;
                const std::size_t xhi = kx == 2 ? in.x - 1 : in.x;
                for (std::size_t ky = 0; ky < 3; ++ky) {
                    const std::size_t ylo = ky == 0 ? 1 : 0;
                    const std::size_t yhi = ky == 2 ? in.y - 1 : in.y;
                    for (std::size_t xi = xlo; xi < xhi; ++xi)
                        for (std::size_t yi = ylo; yi < yhi; ++yi) {
                            const double* src =
                                in.row(ic, xi + kx - 1, yi + ky - 1);
                            double* dsrc = din.row(ic, xi + kx - 1, yi + ky - 1);
                            const double* g = dout.row(oc, xi, yi);
                            for (std::size_t kz = 0; kz < 3; ++kz) {
                                const double wv = wbase[(kx * 3 + ky) * 3 + kz];
                                const double* s = src + kz;
                                double* ds = dsrc + kz;
                                double dot = 0.0;
                                for (std::size_t zi = 0; zi < oz; ++zi) {
                                    ds[zi] += wv * g[zi];
                                    dot += s[zi] * g[zi];
                                }
                                wgrad[(kx * 3 + ky) * 3 + kz] += dot;
                            }
                        }
                }
            }
        }
    }
}

/// 2x2x2 max pooling, stride 2, trailing odd slices dropped.
void maxpool_forward(const T4& in, T4& out, std::vector<std::size_t>& argmax) {
    out.resize(in.c, in.x / 2, in.y / 2, in.z / 2);
    argmax.resize(out.size());
    std::size_t o = 0;
    for (std::size_t ci = 0; ci < in.c; ++ci)
        for (std::size_t xi = 0; xi < out.x; ++xi)
            for (std::size_t yi = 0; yi < out.y; ++yi)
                for (std::size_t zi = 0; zi < out.z; ++zi, ++o) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t besti = 0;
                    for (std::size_t px = 0; px < 2; ++px)
                        for (std::size_t py = 0; py < 2; ++py)
                            for (std::size_t pz = 0; pz < 2; ++pz) {
                                const std::size_t idx =
                                    ((ci * in.x + 2 * xi + px) * in.y + 2 * yi +
                                     py) *
                                        in.z +
                                    2 * zi + pz;
                                if (in.v[idx] > best) {
                                    best = in.v[idx];
                                    besti = idx;
                                }
                            }
                    out.v[o] = best;
                    argmax[o] = besti;
                }
}

void maxpool_backward(const T4& in, const T4& dout,
                      const std::vector<std::size_t>& argmax, T4& din) {
    din.resize(in.c, in.x, in.y, in.z);
    for (std::size_t o = 0; o < dout.size(); ++o) din.v[argmax[o]] += dout.v[o];
}

struct BnBatchCache {
    std::vector<double> invstd; ///< per channel
    std::vector<T4> xhat;       ///< per sample
};

} // namespace

SeismicNet::SeismicNet(const Config& config, std::uint64_t seed)
    : cfg_(config), seed_(seed) {
    if (cfg_.c1 == 0 || cfg_.c2 == 0 || cfg_.c3 == 0 || cfg_.d1 == 0 ||
        cfg_.d2 == 0)
        throw InputError("network widths must be positive");
    if (!(cfg_.bn_eps > 0.0)) throw InputError("bn_eps must be positive");

    std::size_t fx = RmsCube::NX, fy = RmsCube::NY, fz = RmsCube::NZ;
    for (int b = 0; b < 3; ++b) {
        fz -= 2; // valid-z convolution
        fx /= 2;
        fy /= 2;
        fz /= 2;
    }
    if (fx == 0 || fy == 0 || fz == 0)
        throw InputError("cube too small for three conv blocks");
    flat_len_ = cfg_.c3 * fx * fy * fz;

    const std::size_t chans[4] = {1, cfg_.c1, cfg_.c2, cfg_.c3};
    std::size_t off = 0;
    const auto claim = [&off](std::size_t n) {
        const std::size_t o = off;
        off += n;
        return o;
    };
    for (int b = 0; b < 3; ++b) {
        off_conv_w_[b] = claim(chans[b + 1] * chans[b] * 27);
        off_conv_b_[b] = claim(chans[b + 1]);
        off_bn_g_[b] = claim(chans[b + 1]);
        off_bn_b_[b] = claim(chans[b + 1]);
    }
    off_d1_w_ = claim(cfg_.d1 * (flat_len_ + 2));
    off_d1_b_ = claim(cfg_.d1);
    off_d2_w_ = claim(cfg_.d2 * cfg_.d1);
    off_d2_b_ = claim(cfg_.d2);
    off_head_w_ = claim(cfg_.d2);
    off_head_b_ = claim(1);
    params_.assign(off, 0.0);
    grads_.assign(off, 0.0);
    rms_v_.assign(off, 0.0);

    std::size_t roff = 0;
    for (int b = 0; b < 3; ++b) {
        off_run_[b] = roff;
        roff += 2 * chans[b + 1];
    }
    running_.assign(roff, 0.0);
    for (int b = 0; b < 3; ++b) {
        for (std::size_t c = 0; c < chans[b + 1]; ++c) {
            params_[off_bn_g_[b] + c] = 1.0;
            running_[off_run_[b] + chans[b + 1] + c] = 1.0; // variance
        }
    }

    Rng rng(seed);
    const auto he_fill = [&](std::size_t o, std::size_t n, std::size_t fan_in) {
        const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (std::size_t i = 0; i < n; ++i) params_[o + i] = sd * rng.normal();
    };
    for (int b = 0; b < 3; ++b)
        he_fill(off_conv_w_[b], chans[b + 1] * chans[b] * 27, chans[b] * 27);
    he_fill(off_d1_w_, cfg_.d1 * (flat_len_ + 2), flat_len_ + 2);
    he_fill(off_d2_w_, cfg_.d2 * cfg_.d1, cfg_.d1);
    he_fill(off_head_w_, cfg_.d2, cfg_.d2);
}

void SeismicNet::set_params(const std::vector<double>& p) {
    if (p.size() != params_.size())
        throw InputError("parameter vector has wrong length: expected " +
                         std::to_string(params_.size()) + ", got " +
                         std::to_string(p.size()));
    params_ = p;
}

void SeismicNet::set_running_stats(const std::vector<double>& s) {
    if (s.size() != running_.size())
        throw InputError("running-stat vector has wrong length: expected " +
                         std::to_string(running_.size()) + ", got " +
                         std::to_string(s.size()));
    running_ = s;
}

void SeismicNet::reset_optimizer_state() {
    std::fill(rms_v_.begin(), rms_v_.end(), 0.0);
}

void SeismicNet::rmsprop_step(double lr, double rho, double eps) {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const double g = grads_[i];
        rms_v_[i] = rho * rms_v_[i] + (1.0 - rho) * g * g;
        params_[i] -= lr * g / (std::sqrt(rms_v_[i]) + eps);
    }
}

void SeismicNet::round_to_float32() {
    for (double& p : params_) p = static_cast<float>(p);
    for (double& s : running_) s = static_cast<float>(s);
}

double SeismicNet::forward_one(const RmsCube& cube, double nx, double ny) const {
    const std::size_t chans[4] = {1, cfg_.c1, cfg_.c2, cfg_.c3};

    T4 cur;
    cur.resize(1, RmsCube::NX, RmsCube::NY, RmsCube::NZ);
    cur.v.assign(cube.v.begin(), cube.v.end());

    T4 conv, pooled;
    std::vector<std::size_t> argmax;
    for (int b = 0; b < 3; ++b) {
        conv3d_forward(cur, &params_[off_conv_w_[b]], &params_[off_conv_b_[b]],
                       chans[b + 1], conv);
        check_finite(conv.v.data(), conv.size());
        maxpool_forward(conv, pooled, argmax);
        const std::size_t spatial = pooled.x * pooled.y * pooled.z;
        for (std::size_t c = 0; c < pooled.c; ++c) {
            const double rm = running_[off_run_[b] + c];
            const double rv = running_[off_run_[b] + pooled.c + c];
            const double inv = 1.0 / std::sqrt(rv + cfg_.bn_eps);
            const double g = params_[off_bn_g_[b] + c];
            const double beta = params_[off_bn_b_[b] + c];
            double* p = pooled.row(c, 0, 0);
            for (std::size_t i = 0; i < spatial; ++i) {
                const double h = g * ((p[i] - rm) * inv) + beta;
                p[i] = h > 0.0 ? h : 0.0;
            }
        }
        check_finite(pooled.v.data(), pooled.size());
        cur = pooled;
    }

    std::vector<double> f(flat_len_ + 2);
    std::copy(cur.v.begin(), cur.v.end(), f.begin());
    f[flat_len_] = nx;
    f[flat_len_ + 1] = ny;

    std::vector<double> h1(cfg_.d1), h2(cfg_.d2);
    for (std::size_t o = 0; o < cfg_.d1; ++o) {
        double acc = params_[off_d1_b_ + o];
        const double* w = &params_[off_d1_w_ + o * (flat_len_ + 2)];
        for (std::size_t i = 0; i < flat_len_ + 2; ++i) acc += w[i] * f[i];
        h1[o] = acc > 0.0 ? acc : 0.0;
    }
    for (std::size_t o = 0; o < cfg_.d2; ++o) {
        double acc = params_[off_d2_b_ + o];
        const double* w = &params_[off_d2_w_ + o * cfg_.d1];
        for (std::size_t i = 0; i < cfg_.d1; ++i) acc += w[i] * h1[i];
        h2[o] = acc > 0.0 ? acc : 0.0;
    }
    double s = params_[off_head_b_];
    for (std::size_t i = 0; i < cfg_.d2; ++i)
        s += params_[off_head_w_ + i] * h2[i];
    if (!std::isfinite(s)) throw NumericError("numerical blow-up");
    return s;
}

double SeismicNet::predict(const RmsCube& cube, double x, double y) const {
    const double sx = norm_.x_max > norm_.x_min ? norm_.x_max - norm_.x_min : 1.0;
    const double sy = norm_.y_max > norm_.y_min ? norm_.y_max - norm_.y_min : 1.0;
    const double nx = 2.0 * (x - norm_.x_min) / sx - 1.0;
    const double ny = 2.0 * (y - norm_.y_min) / sy - 1.0;
    return norm_.t_mean + norm_.t_sd * forward_one(cube, nx, ny);
}

double SeismicNet::run_batch(const std::vector<TrainSample>& batch,
                             bool with_grads) {
    if (batch.empty()) throw InputError("empty batch");
    const std::size_t B = batch.size();
    const std::size_t chans[4] = {1, cfg_.c1, cfg_.c2, cfg_.c3};
    const double sx = norm_.x_max > norm_.x_min ? norm_.x_max - norm_.x_min : 1.0;
    const double sy = norm_.y_max > norm_.y_min ? norm_.y_max - norm_.y_min : 1.0;
    const double tsd = norm_.t_sd != 0.0 ? norm_.t_sd : 1.0;

    // ---- forward ----
    std::vector<std::vector<T4>> conv_in(4);  // stage inputs per block + final
    std::vector<std::vector<T4>> conv_out(3);
    std::vector<std::vector<T4>> pool_out(3); // becomes bn+relu output in place
    std::vector<std::vector<std::vector<std::size_t>>> argmax(3);
    std::vector<BnBatchCache> bn(3);

    conv_in[0].resize(B);
    for (std::size_t s = 0; s < B; ++s) {
        conv_in[0][s].resize(1, RmsCube::NX, RmsCube::NY, RmsCube::NZ);
        conv_in[0][s].v.assign(batch[s].cube.v.begin(), batch[s].cube.v.end());
    }

    for (int b = 0; b < 3; ++b) {
        conv_out[b].resize(B);
        pool_out[b].resize(B);
        argmax[b].resize(B);
        for (std::size_t s = 0; s < B; ++s) {
            conv3d_forward(conv_in[b][s], &params_[off_conv_w_[b]],
                           &params_[off_conv_b_[b]], chans[b + 1], conv_out[b][s]);
            check_finite(conv_out[b][s].v.data(), conv_out[b][s].size());
            maxpool_forward(conv_out[b][s], pool_out[b][s], argmax[b][s]);
        }

        const std::size_t C = pool_out[b][0].c;
        const std::size_t spatial =
            pool_out[b][0].x * pool_out[b][0].y * pool_out[b][0].z;
        const double N = static_cast<double>(B * spatial);
        bn[b].invstd.resize(C);
        bn[b].xhat.resize(B);
        for (std::size_t s = 0; s < B; ++s)
            bn[b].xhat[s].resize(C, pool_out[b][s].x, pool_out[b][s].y,
                                 pool_out[b][s].z);

        for (std::size_t c = 0; c < C; ++c) {
            double mean = 0.0;
            for (std::size_t s = 0; s < B; ++s) {
                const double* p = pool_out[b][s].row(c, 0, 0);
                for (std::size_t i = 0; i < spatial; ++i) mean += p[i];
            }
            mean /= N;
            double var = 0.0;
            for (std::size_t s = 0; s < B; ++s) {
                const double* p = pool_out[b][s].row(c, 0, 0);
                for (std::size_t i = 0; i < spatial; ++i)
                    var += (p[i] - mean) * (p[i] - mean);
            }
            var /= N;
            const double inv = 1.0 / std::sqrt(var + cfg_.bn_eps);
            bn[b].invstd[c] = inv;
            const double g = params_[off_bn_g_[b] + c];
            const double beta = params_[off_bn_b_[b] + c];
            for (std::size_t s = 0; s < B; ++s) {
                double* p = pool_out[b][s].row(c, 0, 0);
                double* xh = bn[b].xhat[s].row(c, 0, 0);
                for (std::size_t i = 0; i < spatial; ++i) {
                    xh[i] = (p[i] - mean) * inv;
                    const double h = g * xh[i] + beta;
                    p[i] = h > 0.0 ? h : 0.0; // bn then relu, in place
                }
            }
            if (with_grads) {
                running_[off_run_[b] + c] =
                    (1.0 - cfg_.bn_momentum) * running_[off_run_[b] + c] +
                    cfg_.bn_momentum * mean;
                running_[off_run_[b] + C + c] =
                    (1.0 - cfg_.bn_momentum) * running_[off_run_[b] + C + c] +
                    cfg_.bn_momentum * var;
            }
        }
        for (std::size_t s = 0; s < B; ++s)
            check_finite(pool_out[b][s].v.data(), pool_out[b][s].size());
        conv_in[b + 1] = pool_out[b]; // input of next block
    }

    std::vector<std::vector<double>> f(B), h1(B), h2(B);
    std::vector<double> pred(B), target(B);
    for (std::size_t s = 0; s < B; ++s) {
        f[s].resize(flat_len_ + 2);
        std::copy(conv_in[3][s].v.begin(), conv_in[3][s].v.end(), f[s].begin());
        f[s][flat_len_] = 2.0 * (batch[s].x - norm_.x_min) / sx - 1.0;
        f[s][flat_len_ + 1] = 2.0 * (batch[s].y - norm_.y_min) / sy - 1.0;
        target[s] = (batch[s].target - norm_.t_mean) / tsd;

        h1[s].resize(cfg_.d1);
        for (std::size_t o = 0; o < cfg_.d1; ++o) {
            double acc = params_[off_d1_b_ + o];
            const double* w = &params_[off_d1_w_ + o * (flat_len_ + 2)];
            for (std::size_t i = 0; i < flat_len_ + 2; ++i) acc += w[i] * f[s][i];
            h1[s][o] = acc > 0.0 ? acc : 0.0;
        }
        h2[s].resize(cfg_.d2);
        for (std::size_t o = 0; o < cfg_.d2; ++o) {
            double acc = params_[off_d2_b_ + o];
            const double* w = &params_[off_d2_w_ + o * cfg_.d1];
            for (std::size_t i = 0; i < cfg_.d1; ++i) acc += w[i] * h1[s][i];
            h2[s][o] = acc > 0.0 ? acc : 0.0;
        }
        double sc = params_[off_head_b_];
        for (std::size_t i = 0; i < cfg_.d2; ++i)
            sc += params_[off_head_w_ + i] * h2[s][i];
        pred[s] = sc;
    }

    double loss = 0.0;
    for (std::size_t s = 0; s < B; ++s)
        loss += (pred[s] - target[s]) * (pred[s] - target[s]);
    loss /= static_cast<double>(B);
    if (!std::isfinite(loss)) throw NumericError("numerical blow-up");
    if (!with_grads) return loss;

    // ---- backward ----
    std::fill(grads_.begin(), grads_.end(), 0.0);
    std::vector<std::vector<T4>> dstage(4);
    dstage[3].resize(B);

    for (std::size_t s = 0; s < B; ++s) {
        const double ds = 2.0 * (pred[s] - target[s]) / static_cast<double>(B);
        std::vector<double> dh2(cfg_.d2), dh1(cfg_.d1), df(flat_len_ + 2, 0.0);

        grads_[off_head_b_] += ds;
        for (std::size_t i = 0; i < cfg_.d2; ++i) {
            grads_[off_head_w_ + i] += ds * h2[s][i];
            dh2[i] = h2[s][i] > 0.0 ? ds * params_[off_head_w_ + i] : 0.0;
        }
        for (std::size_t o = 0; o < cfg_.d2; ++o) {
            if (dh2[o] == 0.0) continue;
            grads_[off_d2_b_ + o] += dh2[o];
            double* wg = &grads_[off_d2_w_ + o * cfg_.d1];
            const double* w = &params_[off_d2_w_ + o * cfg_.d1];
            for (std::size_t i = 0; i < cfg_.d1; ++i) {
                wg[i] += dh2[o] * h1[s][i];
                dh1[i] += dh2[o] * w[i];
            }
        }
        for (std::size_t i = 0; i < cfg_.d1; ++i)
            if (h1[s][i] <= 0.0) dh1[i] = 0.0;
        for (std::size_t o = 0; o < cfg_.d1; ++o) {
            if (dh1[o] == 0.0) continue;
            grads_[off_d1_b_ + o] += dh1[o];
            double* wg = &grads_[off_d1_w_ + o * (flat_len_ + 2)];
            const double* w = &params_[off_d1_w_ + o * (flat_len_ + 2)];
            for (std::size_t i = 0; i < flat_len_ + 2; ++i) {
                wg[i] += dh1[o] * f[s][i];
                df[i] += dh1[o] * w[i];
            }
        }
        T4& d = dstage[3][s];
        d.resize(conv_in[3][s].c, conv_in[3][s].x, conv_in[3][s].y,
                 conv_in[3][s].z);
        std::copy(df.begin(), df.begin() + static_cast<long>(flat_len_),
                  d.v.begin());
    }

    T4 dconv, dblock_in;
    for (int b = 2; b >= 0; --b) {
        dstage[b].resize(B);
        const std::size_t C = pool_out[b][0].c;
        const std::size_t spatial =
            pool_out[b][0].x * pool_out[b][0].y * pool_out[b][0].z;
        const double N = static_cast<double>(B * spatial);

        // relu mask, then batch-coupled normalization backward
        for (std::size_t c = 0; c < C; ++c) {
            double s1 = 0.0, s2 = 0.0;
            for (std::size_t s = 0; s < B; ++s) {
                double* dy = dstage[b + 1][s].row(c, 0, 0);
                const double* out = pool_out[b][s].row(c, 0, 0);
                const double* xh = bn[b].xhat[s].row(c, 0, 0);
                for (std::size_t i = 0; i < spatial; ++i) {
                    if (out[i] <= 0.0) dy[i] = 0.0;
                    s1 += dy[i];
                    s2 += dy[i] * xh[i];
                }
            }
            grads_[off_bn_g_[b] + c] += s2;
            grads_[off_bn_b_[b] + c] += s1;
            const double g = params_[off_bn_g_[b] + c];
            const double inv = bn[b].invstd[c];
            const double k1 = s1 / N;
            const double k2 = s2 / N;
            for (std::size_t s = 0; s < B; ++s) {
                double* dy = dstage[b + 1][s].row(c, 0, 0);
                const double* xh = bn[b].xhat[s].row(c, 0, 0);
                for (std::size_t i = 0; i < spatial; ++i)
                    dy[i] = g * inv * (dy[i] - k1 - xh[i] * k2);
            }
        }

        for (std::size_t s = 0; s < B; ++s) {
            maxpool_backward(conv_out[b][s], dstage[b + 1][s], argmax[b][s],
                             dconv);
            conv3d_backward(conv_in[b][s], &params_[off_conv_w_[b]], chans[b + 1],
                            dconv, dblock_in, &grads_[off_conv_w_[b]],
                            &grads_[off_conv_b_[b]]);
            if (b > 0) dstage[b][s] = dblock_in;
        }
    }
    return loss;
}

double SeismicNet::batch_loss(const std::vector<TrainSample>& batch) {
    return run_batch(batch, false);
}

double SeismicNet::batch_loss_and_grads(const std::vector<TrainSample>& batch) {
    return run_batch(batch, true);
}

TrainResult train(SeismicNet& net, const std::vector<TrainSample>& samples,
                  const TrainConfig& config) {
    if (samples.empty()) throw InputError("no training samples");
    if (config.epochs < 0) throw InputError("epochs must be non-negative");
    if (config.batch == 0) throw InputError("batch size must be positive");
    if (config.val_fraction < 0.0 || config.val_fraction >= 1.0)
        throw InputError("validation fraction must be in [0, 1)");

    SeismicNet::Norm norm;
    norm.x_min = norm.x_max = samples[0].x;
    norm.y_min = norm.y_max = samples[0].y;
    double tm = 0.0;
    for (const auto& s : samples) {
        norm.x_min = std::min(norm.x_min, s.x);
        norm.x_max = std::max(norm.x_max, s.x);
        norm.y_min = std::min(norm.y_min, s.y);
        norm.y_max = std::max(norm.y_max, s.y);
        tm += s.target;
    }
    tm /= static_cast<double>(samples.size());
    double tv = 0.0;
    for (const auto& s : samples) tv += (s.target - tm) * (s.target - tm);
    tv /= static_cast<double>(samples.size());
    norm.t_mean = tm;
    norm.t_sd = tv > 0.0 ? std::sqrt(tv) : 1.0;
    net.set_norm(norm);

    Rng rng(config.seed);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    std::vector<std::size_t> train_idx, val_idx;
    if (config.block_holdout && config.val_fraction > 0.0) {
        const double side = std::sqrt(config.val_fraction);
        const double ox = rng.uniform() * (1.0 - side);
        const double oy = rng.uniform() * (1.0 - side);
        const double sx = norm.x_max > norm.x_min ? norm.x_max - norm.x_min : 1.0;
        const double sy = norm.y_max > norm.y_min ? norm.y_max - norm.y_min : 1.0;
        for (std::size_t i : order) {
            const double ux = (samples[i].x - norm.x_min) / sx;
            const double uy = (samples[i].y - norm.y_min) / sy;
            if (ux >= ox && ux < ox + side && uy >= oy && uy < oy + side)
                val_idx.push_back(i);
            else
                train_idx.push_back(i);
        }
    }
    if (train_idx.empty() ||
        (config.block_holdout && config.val_fraction > 0.0 && val_idx.empty())) {
        train_idx.clear();
        val_idx.clear();
        const auto nval = static_cast<std::size_t>(
            config.val_fraction * static_cast<double>(order.size()));
        val_idx.assign(order.begin(), order.begin() + static_cast<long>(nval));
        train_idx.assign(order.begin() + static_cast<long>(nval), order.end());
    }
    if (train_idx.empty()) throw InputError("empty training split");

    net.reset_optimizer_state();
    TrainResult res;
    std::vector<double> best_params = net.params();
    std::vector<double> best_running = net.running_stats();
    res.best_epoch = 0;

    std::vector<TrainSample> batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < train_idx.size();
             start += config.batch) {
            const std::size_t stop =
                std::min(start + config.batch, train_idx.size());
            batch.clear();
            for (std::size_t i = start; i < stop; ++i)
                batch.push_back(samples[train_idx[i]]);
            double loss;
            try {
                loss = net.batch_loss_and_grads(batch);
            } catch (const NumericError&) {
                throw NumericError("training loss is not finite at epoch " +
                                   std::to_string(epoch));
            }
            net.rmsprop_step(config.lr, config.rho, config.eps);
            epoch_loss += loss * static_cast<double>(stop - start);
        }
        epoch_loss /= static_cast<double>(train_idx.size());
        if (!std::isfinite(epoch_loss))
            throw NumericError("training loss is not finite at epoch " +
                               std::to_string(epoch));
        res.train_loss.push_back(epoch_loss);

        double monitored = epoch_loss;
        if (!val_idx.empty()) {
            double vloss = 0.0;
            for (std::size_t i : val_idx) {
                const double p = net.predict(samples[i].cube, samples[i].x,
                                             samples[i].y);
                const double t = samples[i].target;
                const double e = (p - t) / norm.t_sd;
                vloss += e * e;
            }
            vloss /= static_cast<double>(val_idx.size());
            if (!std::isfinite(vloss))
                throw NumericError("training loss is not finite at epoch " +
                                   std::to_string(epoch));
            res.val_loss.push_back(vloss);
            monitored = vloss;
        }
        if (monitored < res.best_loss) {
            res.best_loss = monitored;
            res.best_epoch = epoch;
            best_params = net.params();
            best_running = net.running_stats();
        }
    }

    net.set_params(best_params);
    net.set_running_stats(best_running);
    net.round_to_float32();
    return res;
}

GradCheckResult grad_check(SeismicNet& net,
                           const std::vector<TrainSample>& samples, double h,
                           std::size_t param_begin, std::size_t param_end) {
    const std::vector<double> running = net.running_stats();
    net.batch_loss_and_grads(samples);
    const std::vector<double> analytic = net.grads();
    net.set_running_stats(running);

    param_end = std::min(param_end, net.param_count());
    GradCheckResult res;
    for (std::size_t i = param_begin; i < param_end; ++i) {
        const double saved = net.get_param(i);
        net.set_param(i, saved + h);
        const double lp = net.batch_loss(samples);
        net.set_param(i, saved - h);
        const double lm = net.batch_loss(samples);
        net.set_param(i, saved);
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(fd - analytic[i]) /
                           std::max(1e-6, std::abs(fd) + std::abs(analytic[i]));
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_index = i;
        }
    }
    return res;
}

PredictResult predict_map(const SeismicNet& net,
                          const ingest::SeismicVolume& volume,
                          domain::GridPtr grid) {
    const std::size_t n = grid->size();
    std::vector<double> values(n, 0.0);
    std::vector<unsigned char> flagged(n, 0);
    double mean = 0.0;
    std::size_t ok = 0;
    for (std::size_t i = 0; i < n; ++i) {
        try {
            const RmsCube cube = extract_cube(volume, grid->point(i));
            values[i] = net.predict(cube, grid->point(i).x, grid->point(i).y);
            mean += values[i];
            ++ok;
        } catch (const InputError&) {
            flagged[i] = 1;
        }
    }
    if (ok == 0) throw InputError("cube extraction failed at every grid point");
    mean /= static_cast<double>(ok);
    for (std::size_t i = 0; i < n; ++i)
        if (flagged[i]) values[i] = mean;
    PredictResult res{domain::GridMap(std::move(grid), std::move(values),
                                      domain::MapKind::Permeability),
                      std::move(flagged), n - ok};
    return res;
}

void save_checkpoint(const SeismicNet& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    nlohmann::json manifest = {
        {"c1", net.cfg_.c1},
        {"c2", net.cfg_.c2},
        {"c3", net.cfg_.c3},
        {"d1", net.cfg_.d1},
        {"d2", net.cfg_.d2},
        {"bn_eps", net.cfg_.bn_eps},
        {"bn_momentum", net.cfg_.bn_momentum},
        {"seed", net.seed_},
        {"param_count", net.params_.size()},
        {"stat_count", net.running_.size()},
        {"norm",
         {{"x_min", net.norm_.x_min},
          {"x_max", net.norm_.x_max},
          {"y_min", net.norm_.y_min},
          {"y_max", net.norm_.y_max},
          {"t_mean", net.norm_.t_mean},
          {"t_sd", net.norm_.t_sd}}},
    };
    out << manifest.dump() << "\n";
    std::vector<float> payload;
    payload.reserve(net.params_.size() + net.running_.size());
    for (double p : net.params_) payload.push_back(static_cast<float>(p));
    for (double s : net.running_) payload.push_back(static_cast<float>(s));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw InputError("write failed: " + path);
}

SeismicNet load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty checkpoint: " + path);
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("bad checkpoint manifest in " + path + ": " + e.what());
    }
    SeismicNet::Config cfg;
    cfg.c1 = m.at("c1").get<std::size_t>();
    cfg.c2 = m.at("c2").get<std::size_t>();
    cfg.c3 = m.at("c3").get<std::size_t>();
    cfg.d1 = m.at("d1").get<std::size_t>();
    cfg.d2 = m.at("d2").get<std::size_t>();
    cfg.bn_eps = m.at("bn_eps").get<double>();
    cfg.bn_momentum = m.at("bn_momentum").get<double>();
    SeismicNet net(cfg, m.at("seed").get<std::uint64_t>());

    const auto pcount = m.at("param_count").get<std::size_t>();
    const auto scount = m.at("stat_count").get<std::size_t>();
    if (pcount != net.params_.size() || scount != net.running_.size())
        throw InputError("size mismatch: checkpoint payload counts do not match "
                         "architecture in " +
                         path);
    std::vector<float> payload(pcount + scount);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != payload.size() * sizeof(float))
        throw InputError("size mismatch: checkpoint payload truncated in " + path);
    if (in.get() != std::char_traits<char>::eof())
        throw InputError("size mismatch: trailing bytes in checkpoint " + path);
    for (std::size_t i = 0; i < pcount; ++i)
        net.params_[i] = payload[i];
    for (std::size_t i = 0; i < scount; ++i)
        net.running_[i] = payload[pcount + i];

    const auto& nj = m.at("norm");
    SeismicNet::Norm norm;
    norm.x_min = nj.at("x_min").get<double>();
    norm.x_max = nj.at("x_max").get<double>();
    norm.y_min = nj.at("y_min").get<double>();
    norm.y_max = nj.at("y_max").get<double>();
    norm.t_mean = nj.at("t_mean").get<double>();
    norm.t_sd = nj.at("t_sd").get<double>();
    net.set_norm(norm);
    return net;
}

} // namespace permafuse::seismic
