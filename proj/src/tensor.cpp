#include "setle/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace setle {

namespace {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) n *= static_cast<std::size_t>(d);
    return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw ConfigError(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
    auto node = std::make_shared<TensorNode>();
    node->value.assign(shape_size(shape), v);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    if (requires_grad) node->ensure_grad();
    return Tensor(node);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_size(shape) != values.size()) throw ConfigError("from_values: size mismatch");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->ensure_grad();
    return Tensor(node);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

void Tensor::backward() const {
    if (size() != 1) throw ConfigError("backward() requires a scalar loss");
    // Topological order over the reachable graph.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> visited;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            TensorNode* p = n->parents[idx++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.requires_grad();
    node->requires_grad = rg;
    if (rg) {
        node->ensure_grad();
        node->parents.reserve(parents.size());
        for (auto& p : parents) node->parents.push_back(p.node());
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(node);
}

// ---- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] -= n.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
    auto an = a.node(), bn = b.node();
    return make_op(a.shape(), std::move(out), {a, b}, [an, bn](TensorNode& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) bn->grad[i] += n.grad[i] * an->value[i];
        }
    });
}

Tensor scale(const Tensor& a, double s) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * s;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, s](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i] * s;
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + s;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) an->grad[i] += n.grad[i];
    });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

// ---- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
        throw ConfigError("matmul: incompatible shapes");
    const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
    std::vector<double> out(static_cast<std::size_t>(n) * m, 0.0);
    const auto& av = a.value();
    const auto& bv = b.value();
    for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
            const double av_ip = av[static_cast<std::size_t>(i) * k + p];
            if (av_ip == 0.0) continue;
            const double* brow = &bv[static_cast<std::size_t>(p) * m];
            double* orow = &out[static_cast<std::size_t>(i) * m];
            for (int j = 0; j < m; ++j) orow[j] += av_ip * brow[j];
        }
    auto an = a.node(), bn = b.node();
    return make_op({n, m}, std::move(out), {a, b}, [an, bn, n, k, m](TensorNode& node) {
        // dA = dC * B^T ; dB = A^T * dC
        if (an->requires_grad) {
            an->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) {
                    const double g = node.grad[static_cast<std::size_t>(i) * m + j];
                    if (g == 0.0) continue;
                    for (int p = 0; p < k; ++p)
                        an->grad[static_cast<std::size_t>(i) * k + p] +=
                            g * bn->value[static_cast<std::size_t>(p) * m + j];
                }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (int i = 0; i < n; ++i)
                for (int p = 0; p < k; ++p) {
                    const double av_ip = an->value[static_cast<std::size_t>(i) * k + p];
                    if (av_ip == 0.0) continue;
                    for (int j = 0; j < m; ++j)
                        bn->grad[static_cast<std::size_t>(p) * m + j] +=
                            av_ip * node.grad[static_cast<std::size_t>(i) * m + j];
                }
        }
    });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
    if (m.ndim() != 2 || v.ndim() != 1 || m.dim(1) != v.dim(0))
        throw ConfigError("add_rowvec: shape mismatch");
    const int rows = m.dim(0), cols = m.dim(1);
    std::vector<double> out(m.size());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            out[static_cast<std::size_t>(i) * cols + j] = m.at2(i, j) + v.at(static_cast<std::size_t>(j));
    auto mn = m.node(), vn = v.node();
    return make_op(m.shape(), std::move(out), {m, v}, [mn, vn, rows, cols](TensorNode& n) {
        if (mn->requires_grad) {
            mn->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) mn->grad[i] += n.grad[i];
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j)
                    vn->grad[static_cast<std::size_t>(j)] += n.grad[static_cast<std::size_t>(i) * cols + j];
        }
    });
}

Tensor transpose(const Tensor& m) {
    if (m.ndim() != 2) throw ConfigError("transpose: expects matrix");
    const int r = m.dim(0), c = m.dim(1);
    std::vector<double> out(m.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(j) * r + i] = m.at2(i, j);
    auto mn = m.node();
    return make_op({c, r}, std::move(out), {m}, [mn, r, c](TensorNode& n) {
        mn->ensure_grad();
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                mn->grad[static_cast<std::size_t>(i) * c + j] += n.grad[static_cast<std::size_t>(j) * r + i];
    });
}

// ---- activations ------------------------------------------------------------

Tensor elu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double x = a.at(i);
        out[i] = x > 0.0 ? x : std::expm1(x);
    }
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            double x = an->value[i];
            an->grad[i] += n.grad[i] * (x > 0.0 ? 1.0 : std::exp(x));
        }
    });
}

Tensor tanh_op(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.at(i));
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            double t = std::tanh(an->value[i]);
            an->grad[i] += n.grad[i] * (1.0 - t * t);
        }
    });
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, a.at(i));
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            if (an->value[i] > 0.0) an->grad[i] += n.grad[i];
    });
}

Tensor hinge(const Tensor& a) { return relu(a); }

Tensor exp_op(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.at(i));
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            an->grad[i] += n.grad[i] * n.value[i];
    });
}

Tensor log_op(const Tensor& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a.at(i));
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            an->grad[i] += n.grad[i] / an->value[i];
    });
}

// ---- structure --------------------------------------------------------------

Tensor row(const Tensor& m, int r) {
    if (m.ndim() != 2 || r < 0 || r >= m.dim(0)) throw ConfigError("row: index out of range");
    const int cols = m.dim(1);
    std::vector<double> out(static_cast<std::size_t>(cols));
    for (int j = 0; j < cols; ++j) out[static_cast<std::size_t>(j)] = m.at2(r, j);
    auto mn = m.node();
    return make_op({cols}, std::move(out), {m}, [mn, r, cols](TensorNode& n) {
        mn->ensure_grad();
        for (int j = 0; j < cols; ++j)
            mn->grad[static_cast<std::size_t>(r) * cols + j] += n.grad[static_cast<std::size_t>(j)];
    });
}

Tensor concat_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw ConfigError("concat_rows: empty input");
    const int d = rows[0].dim(0);
    const int k = static_cast<int>(rows.size());
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k) * d);
    for (const auto& r : rows) {
        if (r.ndim() != 1 || r.dim(0) != d) throw ConfigError("concat_rows: ragged rows");
        out.insert(out.end(), r.value().begin(), r.value().end());
    }
    std::vector<TensorNodePtr> nodes;
    nodes.reserve(rows.size());
    for (const auto& r : rows) nodes.push_back(r.node());
    return make_op({k, d}, std::move(out), rows, [nodes, d](TensorNode& n) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i]->requires_grad) continue;
            nodes[i]->ensure_grad();
            for (int j = 0; j < d; ++j)
                nodes[i]->grad[static_cast<std::size_t>(j)] += n.grad[i * d + j];
        }
    });
}

Tensor stack_scalars(const std::vector<Tensor>& xs) {
    if (xs.empty()) throw ConfigError("stack_scalars: empty input");
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i].item();
    std::vector<TensorNodePtr> nodes;
    nodes.reserve(xs.size());
    for (const auto& x : xs) nodes.push_back(x.node());
    return make_op({static_cast<int>(xs.size())}, std::move(out), xs, [nodes](TensorNode& n) {
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (!nodes[i]->requires_grad) continue;
            nodes[i]->ensure_grad();
            nodes[i]->grad[0] += n.grad[i];
        }
    });
}

Tensor pick(const Tensor& v, int i) {
    if (v.ndim() != 1 || i < 0 || i >= v.dim(0)) throw ConfigError("pick: index out of range");
    auto vn = v.node();
    return make_op({1}, {v.at(static_cast<std::size_t>(i))}, {v}, [vn, i](TensorNode& n) {
        vn->ensure_grad();
        vn->grad[static_cast<std::size_t>(i)] += n.grad[0];
    });
}

// ---- reductions ---------------------------------------------------------------

Tensor sum(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.at(i);
    auto an = a.node();
    return make_op({1}, {s}, {a}, [an](TensorNode& n) {
        an->ensure_grad();
        for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += n.grad[0];
    });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor mean_rows(const Tensor& m) {
    if (m.ndim() != 2) throw ConfigError("mean_rows: expects matrix");
    const int rows = m.dim(0), cols = m.dim(1);
    std::vector<double> out(static_cast<std::size_t>(cols), 0.0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out[static_cast<std::size_t>(j)] += m.at2(i, j);
    for (auto& x : out) x /= rows;
    auto mn = m.node();
    return make_op({cols}, std::move(out), {m}, [mn, rows, cols](TensorNode& n) {
        mn->ensure_grad();
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                mn->grad[static_cast<std::size_t>(i) * cols + j] += n.grad[static_cast<std::size_t>(j)] / rows;
    });
}

Tensor weighted_sum_rows(const Tensor& m, const Tensor& w) {
    if (m.ndim() != 2 || w.ndim() != 1 || m.dim(0) != w.dim(0))
        throw ConfigError("weighted_sum_rows: shape mismatch");
    const int rows = m.dim(0), cols = m.dim(1);
    std::vector<double> out(static_cast<std::size_t>(cols), 0.0);
    for (int i = 0; i < rows; ++i) {
        const double wi = w.at(static_cast<std::size_t>(i));
        for (int j = 0; j < cols; ++j) out[static_cast<std::size_t>(j)] += wi * m.at2(i, j);
    }
    auto mn = m.node(), wn = w.node();
    return make_op({cols}, std::move(out), {m, w}, [mn, wn, rows, cols](TensorNode& n) {
        if (mn->requires_grad) {
            mn->ensure_grad();
            for (int i = 0; i < rows; ++i) {
                const double wi = wn->value[static_cast<std::size_t>(i)];
                for (int j = 0; j < cols; ++j)
                    mn->grad[static_cast<std::size_t>(i) * cols + j] += wi * n.grad[static_cast<std::size_t>(j)];
            }
        }
        if (wn->requires_grad) {
            wn->ensure_grad();
            for (int i = 0; i < rows; ++i) {
                double acc = 0.0;
                for (int j = 0; j < cols; ++j)
                    acc += mn->value[static_cast<std::size_t>(i) * cols + j] * n.grad[static_cast<std::size_t>(j)];
                wn->grad[static_cast<std::size_t>(i)] += acc;
            }
        }
    });
}

// ---- vector geometry ----------------------------------------------------------

Tensor vecmat(const Tensor& v, const Tensor& m) {
    if (v.ndim() != 1 || m.ndim() != 2 || v.dim(0) != m.dim(0))
        throw ConfigError("vecmat: shape mismatch");
    return row(matmul(concat_rows({v}), m), 0);
}

Tensor matvec(const Tensor& m, const Tensor& v) {
    if (m.ndim() != 2 || v.ndim() != 1 || m.dim(1) != v.dim(0))
        throw ConfigError("matvec: shape mismatch");
    const int n = m.dim(0), d = m.dim(1);
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i)] += m.at2(i, j) * v.at(static_cast<std::size_t>(j));
    auto mn = m.node(), vn = v.node();
    return make_op({n}, std::move(out), {m, v}, [mn, vn, n, d](TensorNode& node) {
        if (mn->requires_grad) {
            mn->ensure_grad();
            for (int i = 0; i < n; ++i) {
                const double g = node.grad[static_cast<std::size_t>(i)];
                if (g == 0.0) continue;
                for (int j = 0; j < d; ++j)
                    mn->grad[static_cast<std::size_t>(i) * d + j] += g * vn->value[static_cast<std::size_t>(j)];
            }
        }
        if (vn->requires_grad) {
            vn->ensure_grad();
            for (int i = 0; i < n; ++i) {
                const double g = node.grad[static_cast<std::size_t>(i)];
                if (g == 0.0) continue;
                for (int j = 0; j < d; ++j)
                    vn->grad[static_cast<std::size_t>(j)] += g * mn->value[static_cast<std::size_t>(i) * d + j];
            }
        }
    });
}

Tensor dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.at(i) * b.at(i);
    auto an = a.node(), bn = b.node();
    return make_op({1}, {s}, {a, b}, [an, bn](TensorNode& n) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += n.grad[0] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < bn->grad.size(); ++i) bn->grad[i] += n.grad[0] * an->value[i];
        }
    });
}

namespace {
constexpr double kNormEps = 1e-12;
}

Tensor l2_norm(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.at(i) * a.at(i);
    const double norm = std::sqrt(s);
    auto an = a.node();
    return make_op({1}, {norm}, {a}, [an, norm](TensorNode& n) {
        an->ensure_grad();
        const double denom = std::max(norm, kNormEps);
        for (std::size_t i = 0; i < an->grad.size(); ++i)
            an->grad[i] += n.grad[0] * an->value[i] / denom;
    });
}

Tensor l2_normalize(const Tensor& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.at(i) * a.at(i);
    const double norm = std::max(std::sqrt(s), kNormEps);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a.at(i) / norm;
    auto an = a.node();
    return make_op(a.shape(), std::move(out), {a}, [an, norm](TensorNode& n) {
        // d(x/||x||)/dx = (I - y y^T)/||x||  with y = x/||x||
        an->ensure_grad();
        double gy = 0.0;
        for (std::size_t i = 0; i < n.grad.size(); ++i) gy += n.grad[i] * n.value[i];
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            an->grad[i] += (n.grad[i] - gy * n.value[i]) / norm;
    });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
    return dot(l2_normalize(a), l2_normalize(b));
}

Tensor euclidean_distance(const Tensor& a, const Tensor& b) {
    return l2_norm(sub(a, b));
}

// ---- softmax family -------------------------------------------------------------

Tensor softmax(const Tensor& v) {
    if (v.ndim() != 1) throw ConfigError("softmax: expects vector");
    double mx = v.at(0);
    for (std::size_t i = 1; i < v.size(); ++i) mx = std::max(mx, v.at(i));
    std::vector<double> out(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v.at(i) - mx);
        z += out[i];
    }
    for (auto& x : out) x /= z;
    auto vn = v.node();
    return make_op(v.shape(), std::move(out), {v}, [vn](TensorNode& n) {
        vn->ensure_grad();
        double gs = 0.0;
        for (std::size_t i = 0; i < n.grad.size(); ++i) gs += n.grad[i] * n.value[i];
        for (std::size_t i = 0; i < n.grad.size(); ++i)
            vn->grad[i] += n.value[i] * (n.grad[i] - gs);
    });
}

Tensor logsumexp(const Tensor& v) {
    if (v.ndim() != 1) throw ConfigError("logsumexp: expects vector");
    double mx = v.at(0);
    for (std::size_t i = 1; i < v.size(); ++i) mx = std::max(mx, v.at(i));
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) z += std::exp(v.at(i) - mx);
    const double lse = mx + std::log(z);
    auto vn = v.node();
    return make_op({1}, {lse}, {v}, [vn, lse](TensorNode& n) {
        vn->ensure_grad();
        for (std::size_t i = 0; i < vn->grad.size(); ++i)
            vn->grad[i] += n.grad[0] * std::exp(vn->value[i] - lse);
    });
}

}  // namespace setle
