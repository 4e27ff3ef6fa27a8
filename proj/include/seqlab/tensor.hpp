#pragma once

// Minimal dense tensor engine with tensor-level reverse-mode
// differentiation. Tensors are row-major 2-D matrices (vectors are m x 1,
// scalars 1 x 1). A Tape records executed ops; backward() replays the
// records in reverse, accumulating gradients (+=) so parameter sharing
// works out of the box. Scalar type S is float for training, double for
// the verification mode.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqlab/errors.hpp"
#include "seqlab/kernels.hpp"

namespace seqlab {

template <class S>
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<S> data;
    std::vector<S> grad; // allocated iff requires_grad
    bool requires_grad = false;

    Tensor() = default;
    Tensor(int r, int c, bool rg = false)
        : rows(r), cols(c), data((std::size_t)r * c, S(0)), requires_grad(rg) {
        if (rg) grad.assign(data.size(), S(0));
    }
    std::size_t size() const { return data.size(); }
    S& at(int i, int j) { return data[(std::size_t)i * cols + j]; }
    S at(int i, int j) const { return data[(std::size_t)i * cols + j]; }
    void zero_grad() {
        if (requires_grad) std::fill(grad.begin(), grad.end(), S(0));
    }
};

template <class S>
using TensorPtr = std::shared_ptr<Tensor<S>>;

template <class S>
class Tape {
public:
    bool grad_enabled = true;

    TensorPtr<S> tensor(int rows, int cols, bool requires_grad = false) {
        return std::make_shared<Tensor<S>>(rows, cols, requires_grad && grad_enabled);
    }

    // ---- elementary ops ----

    TensorPtr<S> matmul(const TensorPtr<S>& a, const TensorPtr<S>& b) {
        if (a->cols != b->rows)
            throw ShapeError("matmul: inner dimensions disagree (" + std::to_string(a->cols) +
                             " vs " + std::to_string(b->rows) + ")");
        auto out = result(a->rows, b->cols, {a, b});
        kernels::matmul(a->data.data(), b->data.data(), out->data.data(), a->rows, a->cols, b->cols);
        if (out->requires_grad)
            push([a, b, out] {
                if (a->requires_grad)
                    kernels::matmul_nt(out->grad.data(), b->data.data(), a->grad.data(),
                                       a->rows, b->cols, a->cols, true);
                if (b->requires_grad)
                    kernels::matmul_tn(a->data.data(), out->grad.data(), b->grad.data(),
                                       a->rows, a->cols, b->cols, true);
            });
        return out;
    }

    // a[m x k] * b[n x k]^T
    TensorPtr<S> matmul_nt(const TensorPtr<S>& a, const TensorPtr<S>& b) {
        if (a->cols != b->cols)
            throw ShapeError("matmul_nt: inner dimensions disagree");
        auto out = result(a->rows, b->rows, {a, b});
        kernels::matmul_nt(a->data.data(), b->data.data(), out->data.data(), a->rows, a->cols, b->rows);
        if (out->requires_grad)
            push([a, b, out] {
                if (a->requires_grad)
                    kernels::matmul(out->grad.data(), b->data.data(), a->grad.data(),
                                    a->rows, b->rows, a->cols, true);
                if (b->requires_grad)
                    kernels::matmul_tn(out->grad.data(), a->data.data(), b->grad.data(),
                                       a->rows, b->rows, a->cols, true);
            });
        return out;
    }

    TensorPtr<S> add(const TensorPtr<S>& a, const TensorPtr<S>& b) {
        if (a->rows != b->rows || a->cols != b->cols) throw ShapeError("add: shape mismatch");
        auto out = result(a->rows, a->cols, {a, b});
        for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] + b->data[i];
        if (out->requires_grad)
            push([a, b, out] {
                if (a->requires_grad)
                    for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
                if (b->requires_grad)
                    for (std::size_t i = 0; i < b->size(); ++i) b->grad[i] += out->grad[i];
            });
        return out;
    }

    // bias holds a->cols entries (any shape), broadcast over rows
    TensorPtr<S> add_rowwise(const TensorPtr<S>& a, const TensorPtr<S>& bias) {
        if ((std::size_t)a->cols != bias->size()) throw ShapeError("add_rowwise: bias length mismatch");
        auto out = result(a->rows, a->cols, {a, bias});
        for (int i = 0; i < a->rows; ++i)
            for (int j = 0; j < a->cols; ++j)
                out->at(i, j) = a->at(i, j) + bias->data[j];
        if (out->requires_grad)
            push([a, bias, out] {
                if (a->requires_grad)
                    for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i];
                if (bias->requires_grad)
                    for (int i = 0; i < out->rows; ++i)
                        for (int j = 0; j < out->cols; ++j)
                            bias->grad[j] += out->grad[(std::size_t)i * out->cols + j];
            });
        return out;
    }

    TensorPtr<S> scale(const TensorPtr<S>& a, S c) {
        auto out = result(a->rows, a->cols, {a});
        for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * c;
        if (out->requires_grad)
            push([a, out, c] {
                if (a->requires_grad)
                    for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i] * c;
            });
        return out;
    }

    // softmax over each row of (x + mask); mask is plain data, not differentiated
    TensorPtr<S> softmax_rows(const TensorPtr<S>& x, const std::vector<S>* mask = nullptr) {
        if (mask && mask->size() != x->size()) throw ShapeError("softmax_rows: mask size mismatch");
        auto out = result(x->rows, x->cols, {x});
        kernels::softmax_rows(x->data.data(), mask ? mask->data() : nullptr, out->data.data(),
                              x->rows, x->cols);
        if (out->requires_grad)
            push([x, out] {
                const int n = out->cols;
                for (int i = 0; i < out->rows; ++i) {
                    const S* y = out->data.data() + (std::size_t)i * n;
                    const S* dy = out->grad.data() + (std::size_t)i * n;
                    S* dx = x->grad.data() + (std::size_t)i * n;
                    S dot = 0;
                    for (int j = 0; j < n; ++j) dot += y[j] * dy[j];
                    for (int j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - dot);
                }
            });
        return out;
    }

    TensorPtr<S> layer_norm(const TensorPtr<S>& x, const TensorPtr<S>& gain,
                            const TensorPtr<S>& bias, S eps = S(1e-12)) {
        if ((std::size_t)x->cols != gain->size() || (std::size_t)x->cols != bias->size())
            throw ShapeError("layer_norm: gain/bias length mismatch");
        auto out = result(x->rows, x->cols, {x, gain, bias});
        kernels::layer_norm_rows(x->data.data(), gain->data.data(), bias->data.data(),
                                 out->data.data(), x->rows, x->cols, eps);
        if (out->requires_grad)
            push([x, gain, bias, out, eps] {
                const int n = x->cols;
                for (int i = 0; i < x->rows; ++i) {
                    const S* xi = x->data.data() + (std::size_t)i * n;
                    const S* dy = out->grad.data() + (std::size_t)i * n;
                    S mean = 0;
                    for (int j = 0; j < n; ++j) mean += xi[j];
                    mean /= n;
                    S var = 0;
                    for (int j = 0; j < n; ++j) var += (xi[j] - mean) * (xi[j] - mean);
                    var /= n;
                    const S inv = S(1) / std::sqrt(var + eps);
                    // xhat_j = (x_j - mean) * inv; y_j = xhat_j * g_j + b_j
                    S sum_dxhat = 0, sum_dxhat_xhat = 0;
                    for (int j = 0; j < n; ++j) {
                        const S xhat = (xi[j] - mean) * inv;
                        const S dxhat = dy[j] * gain->data[j];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                        if (gain->requires_grad) gain->grad[j] += dy[j] * xhat;
                        if (bias->requires_grad) bias->grad[j] += dy[j];
                    }
                    if (x->requires_grad) {
                        S* dx = x->grad.data() + (std::size_t)i * n;
                        for (int j = 0; j < n; ++j) {
                            const S xhat = (xi[j] - mean) * inv;
                            const S dxhat = dy[j] * gain->data[j];
                            dx[j] += inv * (dxhat - sum_dxhat / n - xhat * sum_dxhat_xhat / n);
                        }
                    }
                }
            });
        return out;
    }

    TensorPtr<S> gelu(const TensorPtr<S>& x) {
        auto out = result(x->rows, x->cols, {x});
        kernels::gelu(x->data.data(), out->data.data(), x->size());
        if (out->requires_grad)
            push([x, out] {
                for (std::size_t i = 0; i < x->size(); ++i)
                    x->grad[i] += out->grad[i] * kernels::gelu_grad_scalar(x->data[i]);
            });
        return out;
    }

    // inverted dropout; identity when !enabled
    TensorPtr<S> dropout(const TensorPtr<S>& x, double rate, std::mt19937_64& rng, bool enabled) {
        if (!enabled || rate <= 0.0) return x;
        auto keep = std::make_shared<std::vector<S>>(x->size());
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const S scale = S(1.0 / (1.0 - rate));
        for (std::size_t i = 0; i < x->size(); ++i) (*keep)[i] = u(rng) < rate ? S(0) : scale;
        auto out = result(x->rows, x->cols, {x});
        for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = x->data[i] * (*keep)[i];
        if (out->requires_grad)
            push([x, out, keep] {
                for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += out->grad[i] * (*keep)[i];
            });
        return out;
    }

    // out row i = table row idx[i]; backward scatter-adds
    TensorPtr<S> gather_rows(const TensorPtr<S>& table, std::vector<int> idx) {
        for (int r : idx)
            if (r < 0 || r >= table->rows) throw ShapeError("gather_rows: index out of range");
        auto out = result((int)idx.size(), table->cols, {table});
        for (std::size_t i = 0; i < idx.size(); ++i)
            std::copy_n(table->data.data() + (std::size_t)idx[i] * table->cols, table->cols,
                        out->data.data() + i * table->cols);
        if (out->requires_grad)
            push([table, out, idx = std::move(idx)] {
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    const S* g = out->grad.data() + i * table->cols;
                    S* tg = table->grad.data() + (std::size_t)idx[i] * table->cols;
                    for (int j = 0; j < table->cols; ++j) tg[j] += g[j];
                }
            });
        return out;
    }

    TensorPtr<S> slice(const TensorPtr<S>& x, int r0, int nr, int c0, int nc) {
        if (r0 < 0 || c0 < 0 || r0 + nr > x->rows || c0 + nc > x->cols)
            throw ShapeError("slice: block out of range");
        auto out = result(nr, nc, {x});
        for (int i = 0; i < nr; ++i)
            std::copy_n(x->data.data() + (std::size_t)(r0 + i) * x->cols + c0, nc,
                        out->data.data() + (std::size_t)i * nc);
        if (out->requires_grad)
            push([x, out, r0, c0] {
                for (int i = 0; i < out->rows; ++i) {
                    const S* g = out->grad.data() + (std::size_t)i * out->cols;
                    S* xg = x->grad.data() + (std::size_t)(r0 + i) * x->cols + c0;
                    for (int j = 0; j < out->cols; ++j) xg[j] += g[j];
                }
            });
        return out;
    }

    // paste blocks into a fresh [rows x cols] tensor at (row, col) offsets
    struct Placed {
        TensorPtr<S> block;
        int r0;
        int c0;
    };
    TensorPtr<S> assemble(const std::vector<Placed>& parts, int rows, int cols) {
        std::vector<TensorPtr<S>> ins;
        ins.reserve(parts.size());
        for (auto& p : parts) {
            if (p.r0 < 0 || p.c0 < 0 || p.r0 + p.block->rows > rows || p.c0 + p.block->cols > cols)
                throw ShapeError("assemble: block out of range");
            ins.push_back(p.block);
        }
        auto out = result(rows, cols, ins);
        for (auto& p : parts)
            for (int i = 0; i < p.block->rows; ++i)
                std::copy_n(p.block->data.data() + (std::size_t)i * p.block->cols, p.block->cols,
                            out->data.data() + (std::size_t)(p.r0 + i) * cols + p.c0);
        if (out->requires_grad)
            push([parts, out] {
                for (auto& p : parts) {
                    if (!p.block->requires_grad) continue;
                    for (int i = 0; i < p.block->rows; ++i) {
                        const S* g = out->grad.data() + (std::size_t)(p.r0 + i) * out->cols + p.c0;
                        S* bg = p.block->grad.data() + (std::size_t)i * p.block->cols;
                        for (int j = 0; j < p.block->cols; ++j) bg[j] += g[j];
                    }
                }
            });
        return out;
    }

    // out[i, 0] = dot(a row i, b row i)
    TensorPtr<S> rowwise_dot(const TensorPtr<S>& a, const TensorPtr<S>& b) {
        if (a->rows != b->rows || a->cols != b->cols) throw ShapeError("rowwise_dot: shape mismatch");
        auto out = result(a->rows, 1, {a, b});
        for (int i = 0; i < a->rows; ++i) {
            S s = 0;
            for (int j = 0; j < a->cols; ++j) s += a->at(i, j) * b->at(i, j);
            out->data[i] = s;
        }
        if (out->requires_grad)
            push([a, b, out] {
                for (int i = 0; i < a->rows; ++i) {
                    const S g = out->grad[i];
                    if (a->requires_grad)
                        for (int j = 0; j < a->cols; ++j) a->grad[(std::size_t)i * a->cols + j] += g * b->at(i, j);
                    if (b->requires_grad)
                        for (int j = 0; j < b->cols; ++j) b->grad[(std::size_t)i * b->cols + j] += g * a->at(i, j);
                }
            });
        return out;
    }

    // out[k] = src(row_idx[k], col_idx[k]) reshaped to [m x n]; backward scatter-adds
    TensorPtr<S> gather_pairs(const TensorPtr<S>& src, std::vector<int> row_idx,
                              std::vector<int> col_idx, int m, int n) {
        if (row_idx.size() != (std::size_t)m * n || col_idx.size() != (std::size_t)m * n)
            throw ShapeError("gather_pairs: index count mismatch");
        auto out = result(m, n, {src});
        for (std::size_t k = 0; k < row_idx.size(); ++k)
            out->data[k] = src->at(row_idx[k], col_idx[k]);
        if (out->requires_grad)
            push([src, out, row_idx = std::move(row_idx), col_idx = std::move(col_idx)] {
                for (std::size_t k = 0; k < row_idx.size(); ++k)
                    src->grad[(std::size_t)row_idx[k] * src->cols + col_idx[k]] += out->grad[k];
            });
        return out;
    }

    // mean over active rows of -log softmax(logits)[target]
    TensorPtr<S> masked_cross_entropy(const TensorPtr<S>& logits, const std::vector<int>& targets,
                                      const std::vector<char>& active) {
        if (targets.size() != (std::size_t)logits->rows || active.size() != targets.size())
            throw ShapeError("masked_cross_entropy: row count mismatch");
        int n_active = 0;
        for (char a : active) n_active += a ? 1 : 0;
        if (n_active == 0) throw ContractError("masked_cross_entropy: zero active positions");
        auto probs = std::make_shared<std::vector<S>>(logits->size());
        kernels::softmax_rows(logits->data.data(), (const S*)nullptr, probs->data(),
                              logits->rows, logits->cols);
        auto out = result(1, 1, {logits});
        S loss = 0;
        for (int i = 0; i < logits->rows; ++i) {
            if (!active[i]) continue;
            if (targets[i] < 0 || targets[i] >= logits->cols)
                throw ShapeError("masked_cross_entropy: target id out of range");
            const S p = (*probs)[(std::size_t)i * logits->cols + targets[i]];
            loss -= std::log(std::max(p, std::numeric_limits<S>::min()));
        }
        out->data[0] = loss / n_active;
        if (out->requires_grad)
            push([logits, out, probs, targets, active, n_active] {
                const S g = out->grad[0] / n_active;
                for (int i = 0; i < logits->rows; ++i) {
                    if (!active[i]) continue;
                    S* dl = logits->grad.data() + (std::size_t)i * logits->cols;
                    const S* p = probs->data() + (std::size_t)i * logits->cols;
                    for (int j = 0; j < logits->cols; ++j) dl[j] += g * p[j];
                    dl[targets[i]] -= g;
                }
            });
        return out;
    }

    // mean over rows of [-log sigmoid(pos) - log(1 - sigmoid(neg))]
    TensorPtr<S> sampled_bce(const TensorPtr<S>& pos, const TensorPtr<S>& neg) {
        if (pos->rows != neg->rows || pos->cols != 1 || neg->cols != 1)
            throw ShapeError("sampled_bce: expects column vectors of equal length");
        auto out = result(1, 1, {pos, neg});
        const int m = pos->rows;
        S loss = 0;
        for (int i = 0; i < m; ++i) {
            // -log sigmoid(x) = softplus(-x), computed stably
            loss += softplus(-pos->data[i]) + softplus(neg->data[i]);
        }
        out->data[0] = loss / m;
        if (out->requires_grad)
            push([pos, neg, out, m] {
                const S g = out->grad[0] / m;
                for (int i = 0; i < m; ++i) {
                    if (pos->requires_grad) pos->grad[i] += g * (sigmoid(pos->data[i]) - S(1));
                    if (neg->requires_grad) neg->grad[i] += g * sigmoid(neg->data[i]);
                }
            });
        return out;
    }

    // mean over rows of -log sigmoid(pos - neg)
    TensorPtr<S> bpr(const TensorPtr<S>& pos, const TensorPtr<S>& neg) {
        if (pos->rows != neg->rows || pos->cols != 1 || neg->cols != 1)
            throw ShapeError("bpr: expects column vectors of equal length");
        auto out = result(1, 1, {pos, neg});
        const int m = pos->rows;
        S loss = 0;
        for (int i = 0; i < m; ++i) loss += softplus(neg->data[i] - pos->data[i]);
        out->data[0] = loss / m;
        if (out->requires_grad)
            push([pos, neg, out, m] {
                const S g = out->grad[0] / m;
                for (int i = 0; i < m; ++i) {
                    const S s = sigmoid(pos->data[i] - neg->data[i]) - S(1); // -sigmoid(neg-pos)
                    if (pos->requires_grad) pos->grad[i] += g * s;
                    if (neg->requires_grad) neg->grad[i] -= g * s;
                }
            });
        return out;
    }

    void backward(const TensorPtr<S>& loss) {
        if (loss->rows != 1 || loss->cols != 1)
            throw ContractError("backward: loss must be scalar");
        if (!loss->requires_grad)
            throw ContractError("backward: loss is not connected to any tracked parameter");
        loss->grad[0] = S(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    void clear() { nodes_.clear(); }
    std::size_t num_nodes() const { return nodes_.size(); }

    static S sigmoid(S x) {
        return x >= 0 ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
    }
    static S softplus(S x) { // log(1 + e^x)
        return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }

private:
    std::vector<std::function<void()>> nodes_;

    TensorPtr<S> result(int rows, int cols, const std::vector<TensorPtr<S>>& inputs) {
        bool rg = false;
        if (grad_enabled)
            for (auto& in : inputs) rg = rg || in->requires_grad;
        return std::make_shared<Tensor<S>>(rows, cols, rg);
    }
    void push(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }
};

// ---- Adam optimizer ----

template <class S>
struct AdamConfig {
    S lr = S(1e-3);
    S beta1 = S(0.9);
    S beta2 = S(0.999);
    S eps = S(1e-8);
};

template <class S>
class Adam {
public:
    explicit Adam(AdamConfig<S> cfg = {}) : cfg_(cfg) {}

    // one Adam step with bias correction over params' accumulated grads
    void step(const std::vector<TensorPtr<S>>& params) {
        if (m_.empty()) {
            for (auto& p : params) {
                m_.emplace_back(p->size(), S(0));
                v_.emplace_back(p->size(), S(0));
            }
        }
        if (m_.size() != params.size()) throw ContractError("Adam: parameter set changed");
        ++t_;
        const S bc1 = S(1) - std::pow(cfg_.beta1, S(t_));
        const S bc2 = S(1) - std::pow(cfg_.beta2, S(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& p = *params[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const S g = p.grad[i];
                m[i] = cfg_.beta1 * m[i] + (S(1) - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (S(1) - cfg_.beta2) * g * g;
                const S mhat = m[i] / bc1;
                const S vhat = v[i] / bc2;
                p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

    long long t() const { return t_; }

private:
    AdamConfig<S> cfg_;
    long long t_ = 0;
    std::vector<std::vector<S>> m_, v_;
};

} // namespace seqlab
