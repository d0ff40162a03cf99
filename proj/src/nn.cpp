#include "setle/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace setle {

// ---- ParameterStore ---------------------------------------------------------

Tensor ParameterStore::create(const std::string& name, Shape shape, std::vector<double> init) {
    if (params_.count(name)) throw ConfigError("parameter already exists: " + name);
    Tensor t = Tensor::from_values(std::move(shape), std::move(init), /*requires_grad=*/true);
    params_.emplace(name, t);
    return t;
}

Tensor ParameterStore::create_glorot(const std::string& name, int fan_in, int fan_out, Rng rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> init(static_cast<std::size_t>(fan_in) * fan_out);
    for (auto& x : init) x = (rng.next_double() * 2.0 - 1.0) * limit;
    return create(name, {fan_in, fan_out}, std::move(init));
}

Tensor ParameterStore::create_zeros(const std::string& name, Shape shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return create(name, std::move(shape), std::vector<double>(n, 0.0));
}

Tensor ParameterStore::create_identity(const std::string& name, int n) {
    std::vector<double> init(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) init[static_cast<std::size_t>(i) * n + i] = 1.0;
    return create(name, {n, n}, std::move(init));
}

Tensor ParameterStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

void ParameterStore::zero_grads() {
    for (auto& [name, t] : params_) t.zero_grad();
}

double ParameterStore::checksum() const {
    double acc = 0.0;
    for (const auto& [name, t] : params_) {
        double h = static_cast<double>(fnv1a(name) % 1000003u) / 1000003.0;
        for (double v : t.value()) acc += v * (1.0 + h);
    }
    return acc;
}

namespace {

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void write_f32_le(std::ostream& os, float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

constexpr char kCheckpointMagic[] = "SETLECKPT1\n";

}  // namespace

void ParameterStore::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [name, t] : params_) {  // std::map iterates lexicographically
        manifest.push_back({{"name", name}, {"shape", t.shape()}});
    }
    const std::string mstr = manifest.dump();
    write_u64(os, mstr.size());
    os.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
    for (const auto& [name, t] : params_)
        for (double v : t.value()) write_f32_le(os, static_cast<float>(v));
    if (!os) throw DataError("checkpoint write failed: " + path);
}

void ParameterStore::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open checkpoint: " + path);
    char magic[sizeof(kCheckpointMagic) - 1];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw DataError("bad checkpoint magic: " + path);
    const std::uint64_t mlen = read_u64(is);
    std::string mstr(mlen, '\0');
    is.read(mstr.data(), static_cast<std::streamsize>(mlen));
    if (!is) throw DataError("truncated checkpoint manifest: " + path);
    nlohmann::json manifest = nlohmann::json::parse(mstr, nullptr, false);
    if (manifest.is_discarded()) throw DataError("malformed checkpoint manifest: " + path);
    for (const auto& entry : manifest) {
        const std::string name = entry.at("name").get<std::string>();
        Shape shape = entry.at("shape").get<Shape>();
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        std::vector<double> vals(n);
        for (auto& v : vals) v = static_cast<double>(read_f32_le(is));
        if (!is) throw DataError("truncated checkpoint data at tensor " + name);
        auto it = params_.find(name);
        if (it == params_.end()) {
            create(name, std::move(shape), std::move(vals));
        } else {
            if (it->second.shape() != shape)
                throw DataError("checkpoint shape mismatch for " + name);
            it->second.mutable_value() = vals;
        }
    }
}

// ---- layers ------------------------------------------------------------------

Tensor Linear::operator()(const Tensor& x) const {
    if (x.ndim() == 1) {
        Tensor m = make_op({1, x.dim(0)}, x.value(), {x}, [xs = x.node()](TensorNode& n) {
            xs->ensure_grad();
            for (std::size_t i = 0; i < n.grad.size(); ++i) xs->grad[i] += n.grad[i];
        });
        return row(add_rowvec(matmul(m, weight), bias), 0);
    }
    return add_rowvec(matmul(x, weight), bias);
}

Linear make_linear(ParameterStore& store, const std::string& name, int in, int out, Rng rng) {
    Linear l;
    l.weight = store.create_glorot(name + ".weight", in, out, rng);
    l.bias = store.create_zeros(name + ".bias", {out});
    return l;
}

Linear make_linear_identity(ParameterStore& store, const std::string& name, int n) {
    Linear l;
    l.weight = store.create_identity(name + ".weight", n);
    l.bias = store.create_zeros(name + ".bias", {n});
    return l;
}

Tensor activate(const Tensor& x, Activation act) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::Elu: return elu(x);
        case Activation::Relu: return relu(x);
        case Activation::Tanh: return tanh_op(x);
    }
    throw ConfigError("unknown activation");
}

Tensor gcn_layer(const Tensor& h, const Tensor& a_norm, const Tensor& w, Activation act) {
    if (a_norm.ndim() != 2 || a_norm.dim(0) != a_norm.dim(1) || a_norm.dim(0) != h.dim(0))
        throw ConfigError("gcn_layer: adjacency/feature shape mismatch");
    return activate(matmul(matmul(a_norm, h), w), act);
}

Tensor normalized_adjacency(int n, const std::vector<std::pair<int, int>>& undirected_edges) {
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + i] = 1.0;  // self-loops
    for (auto [u, v] : undirected_edges) {
        if (u < 0 || v < 0 || u >= n || v >= n) throw ConfigError("normalized_adjacency: bad edge");
        a[static_cast<std::size_t>(u) * n + v] = 1.0;
        a[static_cast<std::size_t>(v) * n + u] = 1.0;
    }
    std::vector<double> dinv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += a[static_cast<std::size_t>(i) * n + j];
        dinv[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a[static_cast<std::size_t>(i) * n + j] *=
                dinv[static_cast<std::size_t>(i)] * dinv[static_cast<std::size_t>(j)];
    return Tensor::from_values({n, n}, std::move(a));
}

// ---- losses --------------------------------------------------------------------

Tensor triplet_loss(const Tensor& d_ap, const Tensor& d_an, double margin) {
    if (margin <= 0.0) throw ConfigError("triplet_loss: margin must be positive");
    return hinge(add_scalar(sub(d_ap, d_an), margin));
}

double triplet_loss_value(double d_ap, double d_an, double margin) {
    if (margin <= 0.0) throw ConfigError("triplet_loss: margin must be positive");
    return std::max(0.0, d_ap - d_an + margin);
}

Tensor info_nce(const Tensor& sim_pos, const Tensor& sims_all, double temperature) {
    if (temperature <= 0.0) throw ConfigError("info_nce: temperature must be positive");
    if (sims_all.size() == 0) throw ConfigError("info_nce: empty similarity set");
    return sub(logsumexp(scale(sims_all, 1.0 / temperature)), scale(sim_pos, 1.0 / temperature));
}

double info_nce_value(double sim_pos, const std::vector<double>& sims_all, double temperature) {
    if (temperature <= 0.0) throw ConfigError("info_nce: temperature must be positive");
    if (sims_all.empty()) throw ConfigError("info_nce: empty similarity set");
    double mx = sims_all[0] / temperature;
    for (double s : sims_all) mx = std::max(mx, s / temperature);
    double z = 0.0;
    for (double s : sims_all) z += std::exp(s / temperature - mx);
    return (mx + std::log(z)) - sim_pos / temperature;
}

// ---- Adam -----------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(ParameterStore& store, AdamConfig config)
    : store_(store), config_(config) {
    if (config_.accumulation_window < 1)
        throw ConfigError("adam: accumulation_window must be >= 1");
}

bool AdamOptimizer::step() {
    ++accum_counter_;
    if (accum_counter_ < config_.accumulation_window) return false;

    const double inv_window = 1.0 / static_cast<double>(config_.accumulation_window);
    ++update_count_;
    const double bc1 = 1.0 - std::pow(config_.beta1, update_count_);
    const double bc2 = 1.0 - std::pow(config_.beta2, update_count_);

    for (const auto& [name, param] : store_.all()) {
        Tensor t = param;  // shared handle; mutation reaches the stored tensor
        auto& mom = moments_[name];
        auto& vals = t.mutable_value();
        auto& grads = t.mutable_grad();
        if (mom.m.size() != vals.size()) {
            mom.m.assign(vals.size(), 0.0);
            mom.v.assign(vals.size(), 0.0);
        }
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double g = grads[i] * inv_window;
            if (!std::isfinite(g))
                throw DataError("adam: non-finite gradient in parameter " + name);
            mom.m[i] = config_.beta1 * mom.m[i] + (1.0 - config_.beta1) * g;
            mom.v[i] = config_.beta2 * mom.v[i] + (1.0 - config_.beta2) * g * g;
            const double mhat = mom.m[i] / bc1;
            const double vhat = mom.v[i] / bc2;
            vals[i] -= config_.learning_rate * (mhat / (std::sqrt(vhat) + config_.eps) +
                                                config_.weight_decay * vals[i]);
        }
        grads.assign(grads.size(), 0.0);
    }
    accum_counter_ = 0;
    return true;
}

void AdamOptimizer::reset_accumulation() {
    accum_counter_ = 0;
    store_.zero_grads();
}

void polyak_update(Tensor& target, const Tensor& online, double tau_soft) {
    if (tau_soft <= 0.0 || tau_soft > 1.0) throw ConfigError("polyak: tau out of range");
    if (target.shape() != online.shape()) throw ConfigError("polyak: shape mismatch");
    auto& tv = target.mutable_value();
    const auto& ov = online.value();
    for (std::size_t i = 0; i < tv.size(); ++i)
        tv[i] = tau_soft * ov[i] + (1.0 - tau_soft) * tv[i];
}

void polyak_update(ParameterStore& target, const ParameterStore& online, double tau_soft) {
    for (const auto& [name, ot] : online.all()) {
        Tensor tt = target.get(name);
        polyak_update(tt, ot, tau_soft);
    }
}

// ---- grad check ---------------------------------------------------------------

double grad_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                  double epsilon) {
    for (Tensor p : params) p.zero_grad();
    Tensor loss = f();
    if (!std::isfinite(loss.item())) throw DataError("grad_check: non-finite loss");
    loss.backward();
    double max_rel = 0.0;
    for (Tensor p : params) {
        auto& vals = p.mutable_value();
        const auto& g = p.grad();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + epsilon;
            const double fp = f().item();
            vals[i] = orig - epsilon;
            const double fm = f().item();
            vals[i] = orig;
            const double g_fd = (fp - fm) / (2.0 * epsilon);
            const double g_ad = g[i];
            const double rel = std::abs(g_ad - g_fd) /
                               std::max({1.0, std::abs(g_ad), std::abs(g_fd)});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace setle
