#include "setle/features.hpp"

#include <cmath>

namespace setle {

FeatureProvider::FeatureProvider(FeatureConfig config) : config_(config) {
    if (config_.d_object <= 0 || config_.d_interaction <= 0 || config_.d_state <= 0 ||
        config_.d_affordance <= 0 || config_.d_set <= 0)
        throw ConfigError("feature dimensions must be positive");
}

std::vector<float> FeatureProvider::token_vector(int dim, std::uint64_t token) const {
    Rng rng = Rng::keyed(config_.seed, fnv1a("token"), token);
    std::vector<float> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    for (auto& x : v) {
        x = static_cast<float>(rng.next_gaussian());
        norm += static_cast<double>(x) * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x = static_cast<float>(x / norm);
    return v;
}

namespace {

void add_into(std::vector<float>& acc, const std::vector<float>& v) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

void normalize(std::vector<float>& v) {
    double norm = 0.0;
    for (float x : v) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (auto& x : v) x = static_cast<float>(x / norm);
}

std::uint64_t tok(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t h = 0x811c9dc5;
    for (std::uint64_t p : parts) h = hash_combine(h, p);
    return h;
}

}  // namespace

std::vector<float> FeatureProvider::object_feature(ObjKind kind) const {
    return token_vector(config_.d_object, tok({fnv1a("object"), static_cast<std::uint64_t>(kind)}));
}

std::vector<float> FeatureProvider::state_feature(const Observation& obs) const {
    std::vector<float> acc(static_cast<std::size_t>(config_.d_state), 0.0f);
    add_into(acc, token_vector(config_.d_state,
                               tok({fnv1a("grid"), static_cast<std::uint64_t>(obs.width),
                                    static_cast<std::uint64_t>(obs.height)})));
    add_into(acc, token_vector(config_.d_state,
                               tok({fnv1a("agent"), static_cast<std::uint64_t>(obs.agent_x),
                                    static_cast<std::uint64_t>(obs.agent_y),
                                    static_cast<std::uint64_t>(obs.heading)})));
    add_into(acc, token_vector(config_.d_state,
                               tok({fnv1a("carry"), obs.carrying_key ? 1ULL : 0ULL})));
    for (const auto& o : obs.objects) {
        add_into(acc, token_vector(
                          config_.d_state,
                          tok({fnv1a("cell"), static_cast<std::uint64_t>(o.kind),
                               static_cast<std::uint64_t>(o.x), static_cast<std::uint64_t>(o.y),
                               (o.open ? 1ULL : 0ULL) | (o.locked ? 2ULL : 0ULL)})));
    }
    normalize(acc);
    return acc;
}

std::vector<float> FeatureProvider::interaction_feature(Action action, ObjKind target) const {
    return token_vector(config_.d_interaction,
                        tok({fnv1a("interaction"), static_cast<std::uint64_t>(action),
                             static_cast<std::uint64_t>(target)}));
}

std::vector<float> FeatureProvider::affordance_feature(Action action, double reward) const {
    std::vector<float> acc(static_cast<std::size_t>(config_.d_affordance), 0.0f);
    add_into(acc, token_vector(config_.d_affordance,
                               tok({fnv1a("act"), static_cast<std::uint64_t>(action)})));
    add_into(acc, token_vector(config_.d_affordance,
                               tok({fnv1a("rew"), reward > 0.0 ? 1ULL : 0ULL})));
    normalize(acc);
    return acc;
}

std::vector<float> FeatureProvider::set_feature() const {
    return token_vector(config_.d_set, tok({fnv1a("set-root")}));
}

StoreConfig FeatureProvider::store_config(double tau_sim) const {
    StoreConfig cfg;
    cfg.d_in[static_cast<int>(NodeKind::Object)] = config_.d_object;
    cfg.d_in[static_cast<int>(NodeKind::Interaction)] = config_.d_interaction;
    cfg.d_in[static_cast<int>(NodeKind::State)] = config_.d_state;
    cfg.d_in[static_cast<int>(NodeKind::Affordance)] = config_.d_affordance;
    cfg.d_in[static_cast<int>(NodeKind::Set)] = config_.d_set;
    cfg.tau_sim = tau_sim;
    return cfg;
}

}  // namespace setle
