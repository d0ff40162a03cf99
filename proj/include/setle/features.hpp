#pragma once

// Deterministic synthetic feature provider. Objects, interactions, states,
// affordances and SET roots get dense unit vectors composed from hashed
// symbolic tokens, so identical symbols map to identical features across
// episodes and structurally similar observations land near each other.

#include <cstdint>
#include <vector>

#include "setle/envsim.hpp"
#include "setle/graph.hpp"

namespace setle {

struct FeatureConfig {
    int d_object = 16;
    int d_interaction = 16;
    int d_state = 16;
    int d_affordance = 16;
    int d_set = 16;
    std::uint64_t seed = 0x5e71e;
};

class FeatureProvider {
public:
    explicit FeatureProvider(FeatureConfig config = {});

    std::vector<float> object_feature(ObjKind kind) const;
    std::vector<float> state_feature(const Observation& obs) const;
    std::vector<float> interaction_feature(Action action, ObjKind target) const;
    std::vector<float> affordance_feature(Action action, double reward) const;
    std::vector<float> set_feature() const;

    StoreConfig store_config(double tau_sim = 0.95) const;
    const FeatureConfig& config() const { return config_; }

private:
    std::vector<float> token_vector(int dim, std::uint64_t token) const;

    FeatureConfig config_;
};

}  // namespace setle
