#pragma once

// Turns raw episode traces into SET subgraphs: per-step State nodes (the
// terminal state included), deduplicated shared Object nodes, optional
// Interaction nodes for contact events, one Affordance per transition, and
// the Set root with outcome label.

#include <string>
#include <utility>
#include <vector>

#include "setle/envsim.hpp"
#include "setle/features.hpp"
#include "setle/graph.hpp"

namespace setle {

struct BuildOptions {
    bool interaction_nodes = true;  // MiniGrid-style builds switch these off
    int step_cap = 9;               // label rule: success requires <= step_cap steps
};

SetLabel label_episode(const EpisodeTrace& trace, int step_cap);

// Reuses the most similar stored Object when its cosine reaches tau_sim,
// otherwise inserts a new node. Ties break toward the lowest id.
std::pair<NodeId, bool> dedup_object(MemoryStore& store, const std::vector<float>& feature,
                                     double tau_sim);

class SetBuilder {
public:
    SetBuilder(MemoryStore& store, const FeatureProvider& features, BuildOptions opts = {});

    SetSubgraph build_set(const EpisodeTrace& trace);

    // SET-shaped window over states max(0, t-k+1)..t of the trace prefix,
    // rooted at a temporary Set node in this builder's store.
    SetSubgraph build_partial_window(const EpisodeTrace& so_far, int t, int k);

    MemoryStore& store() { return store_; }
    const BuildOptions& options() const { return opts_; }

private:
    friend class WorkingMemory;

    NodeId ensure_object(ObjKind kind);
    NodeId ensure_interaction(Action action, ObjKind target);
    // objects present in the observation, deduped, in deterministic order
    std::vector<NodeId> attach_state_objects(NodeId state_id, const Observation& obs);
    // contact event for this step, if any: the non-wall object faced by the agent
    std::optional<ObjKind> contact_target(const TraceStep& step) const;

    MemoryStore& store_;
    const FeatureProvider& features_;
    BuildOptions opts_;
};

// Incrementally grown per-episode graph for the RL loop. States are appended
// as the agent acts; window(k) roots a temporary Set over the last k states.
class WorkingMemory {
public:
    WorkingMemory(const FeatureProvider& features, BuildOptions opts, std::string task);

    void begin_episode(const Observation& first_obs);
    void record_step(int action, double reward, const Observation& next_obs);

    NodeId current_state() const;
    int state_count() const { return static_cast<int>(state_ids_.size()); }
    const std::vector<NodeId>& state_ids() const { return state_ids_; }

    SetSubgraph window(int k);

    MemoryStore& store() { return store_; }
    const MemoryStore& store() const { return store_; }

    // Nodes injected from long-term memory keep their original ids; WM-native
    // ids start far above any realistic LTM id.
    static constexpr NodeId kLocalIdBase = 1'000'000'000ULL;

private:
    MemoryStore store_;
    SetBuilder builder_;
    std::string task_;
    std::vector<NodeId> state_ids_;
    Observation last_obs_;
    int next_window_index_ = 0;
};

}  // namespace setle
