#pragma once

// Layers, losses and optimization on top of the tensor core: linear layers
// with Glorot init, the GCN propagation step, triplet / info-NCE losses,
// Adam with decoupled weight decay and gradient accumulation, Polyak
// averaging, finite-difference gradient checking, and the named-tensor
// checkpoint container.

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "setle/rng.hpp"
#include "setle/tensor.hpp"

namespace setle {

// Named registry of trainable tensors. Names are stable and checkpoints
// serialize in lexicographic name order.
class ParameterStore {
public:
    Tensor create(const std::string& name, Shape shape, std::vector<double> init);
    Tensor create_glorot(const std::string& name, int fan_in, int fan_out, Rng rng);
    Tensor create_zeros(const std::string& name, Shape shape);
    Tensor create_identity(const std::string& name, int n);

    bool contains(const std::string& name) const { return params_.count(name) > 0; }
    Tensor get(const std::string& name) const;
    const std::map<std::string, Tensor>& all() const { return params_; }

    void zero_grads();
    // Order-independent summary of all parameter values, for frozen-parameter checks.
    double checksum() const;

    void save(const std::string& path) const;
    void load(const std::string& path);  // shapes must match existing entries; new names are created

private:
    std::map<std::string, Tensor> params_;
};

struct Linear {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]

    Tensor operator()(const Tensor& x) const;  // [n,in] -> [n,out] or [in] -> [out]
};

Linear make_linear(ParameterStore& store, const std::string& name, int in, int out, Rng rng);
// identity map (requires in == out); used by test fixtures and identity-init adapters
Linear make_linear_identity(ParameterStore& store, const std::string& name, int n);

enum class Activation { Identity, Elu, Relu, Tanh };
Tensor activate(const Tensor& x, Activation act);

// One symmetric-normalized graph convolution: sigma(A_norm * H * W).
// A_norm must already be D^{-1/2} (A+I) D^{-1/2}.
Tensor gcn_layer(const Tensor& h, const Tensor& a_norm, const Tensor& w, Activation act);

// Builds D^{-1/2}(A+I)D^{-1/2} for an undirected edge list over n nodes.
Tensor normalized_adjacency(int n, const std::vector<std::pair<int, int>>& undirected_edges);

// max(0, d_ap - d_an + margin); margin must be positive.
Tensor triplet_loss(const Tensor& d_ap, const Tensor& d_an, double margin);
double triplet_loss_value(double d_ap, double d_an, double margin);

// -log( exp(sim_pos/tau) / sum_z exp(sim_z/tau) ), max-subtracted.
Tensor info_nce(const Tensor& sim_pos, const Tensor& sims_all, double temperature);
double info_nce_value(double sim_pos, const std::vector<double>& sims_all, double temperature);

// ---- Adam with decoupled weight decay and gradient accumulation ------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;       // decoupled
    int accumulation_window = 1;     // >= 1
};

class AdamOptimizer {
public:
    AdamOptimizer(ParameterStore& store, AdamConfig config);

    // Call once per accumulation step. Applies the update (with grads
    // averaged over the window) every `accumulation_window` calls and
    // returns true when parameters changed.
    bool step();

    void reset_accumulation();
    int update_count() const { return update_count_; }
    const AdamConfig& config() const { return config_; }

private:
    struct Moments {
        std::vector<double> m, v;
    };
    ParameterStore& store_;
    AdamConfig config_;
    std::map<std::string, Moments> moments_;
    int accum_counter_ = 0;
    int update_count_ = 0;
};

// target <- tau * online + (1 - tau) * target, elementwise over matching names.
void polyak_update(ParameterStore& target, const ParameterStore& online, double tau_soft);
void polyak_update(Tensor& target, const Tensor& online, double tau_soft);

// ---- finite-difference gradient checking -----------------------------------

// f rebuilds the loss from current parameter values. Returns the max over
// all checked entries of |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double epsilon = 1e-4);

}  // namespace setle
