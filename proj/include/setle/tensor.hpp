#pragma once

// Dense tensors with reverse-mode automatic differentiation. Values are
// 64-bit reals; graphs are built eagerly and freed when the last handle
// drops. Gradients accumulate into leaf tensors until explicitly cleared,
// which is what makes gradient accumulation windows work.

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "setle/errors.hpp"

namespace setle {

using Shape = std::vector<int>;

struct TensorNode;
using TensorNodePtr = std::shared_ptr<TensorNode>;

struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated iff requires_grad
    bool requires_grad = false;
    std::vector<TensorNodePtr> parents;
    std::function<void(TensorNode&)> backward_fn;  // pushes node.grad into parents

    std::size_t size() const { return value.size(); }
    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(TensorNodePtr node) : node_(std::move(node)) {}

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double v, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(node_->shape.size()); }
    std::size_t size() const { return node_->size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& value() const { return node_->value; }
    std::vector<double>& mutable_value() { return node_->value; }
    const std::vector<double>& grad() const { return node_->grad; }
    std::vector<double>& mutable_grad() { node_->ensure_grad(); return node_->grad; }

    double item() const {
        if (size() != 1) throw ConfigError("item() on non-scalar tensor");
        return node_->value[0];
    }

    double at(std::size_t i) const { return node_->value[i]; }
    double at2(int r, int c) const {
        return node_->value[static_cast<std::size_t>(r) * dim(1) + c];
    }

    void zero_grad() {
        if (node_->requires_grad) node_->grad.assign(node_->value.size(), 0.0);
    }

    // Reverse-mode sweep from this scalar.
    void backward() const;

    TensorNodePtr node() const { return node_; }

private:
    TensorNodePtr node_;
};

// ---- graph construction helpers -------------------------------------------

Tensor make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
               std::function<void(TensorNode&)> backward_fn);

// ---- elementwise / structural ops ------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);       // [n,k] x [k,m] -> [n,m]
Tensor add_rowvec(const Tensor& m, const Tensor& v);   // [n,d] + [d]
Tensor transpose(const Tensor& m);

Tensor elu(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor hinge(const Tensor& a);  // max(0, x); subgradient 0 at the kink
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);

Tensor row(const Tensor& m, int r);                    // [n,d] -> [d]
Tensor concat_rows(const std::vector<Tensor>& rows);   // k vectors [d] -> [k,d]
Tensor stack_scalars(const std::vector<Tensor>& xs);   // k scalars -> [k]
Tensor pick(const Tensor& v, int i);                   // [n] -> scalar

Tensor sum(const Tensor& a);                           // -> scalar
Tensor mean(const Tensor& a);                          // -> scalar
Tensor mean_rows(const Tensor& m);                     // [n,d] -> [d]
Tensor weighted_sum_rows(const Tensor& m, const Tensor& w);  // [k,d],[k] -> [d]

Tensor vecmat(const Tensor& v, const Tensor& m);       // [d],[d,k] -> [k]
Tensor matvec(const Tensor& m, const Tensor& v);       // [n,d],[d] -> [n]
Tensor dot(const Tensor& a, const Tensor& b);          // [d],[d] -> scalar
Tensor l2_norm(const Tensor& a);                       // -> scalar (guarded at 0)
Tensor l2_normalize(const Tensor& a);                  // [d] -> [d]
Tensor cosine_similarity(const Tensor& a, const Tensor& b);
Tensor euclidean_distance(const Tensor& a, const Tensor& b);

Tensor softmax(const Tensor& v);                       // [n] -> [n], max-subtracted
Tensor logsumexp(const Tensor& v);                     // [n] -> scalar, max-subtracted

}  // namespace setle
