#pragma once

// Dual-view SET encoder: per-node-type embedding tables shared across all
// episodes, a per-meta-path GCN with semantic attention (meta-path view), a
// typed-neighborhood attention around the Set root (network schema view),
// per-view projection heads, and hybrid triplet + cross-view contrastive
// training with gradient accumulation and early stopping.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "setle/graph.hpp"
#include "setle/nn.hpp"
#include "setle/rng.hpp"

namespace setle {

struct MetaPath {
    struct Hop {
        NodeKind kind;  // node kind reached by this hop
        EdgeKind edge;  // edge kind traversed (either direction)
    };
    std::string name;
    std::vector<Hop> hops;  // starting from the Set root
};

MetaPath metapath_set_st_obj_inter_aff();
MetaPath metapath_set_st_aff_st();

struct EncoderConfig {
    int hidden_dim = 64;
    int layers = 3;
    int heads = 8;
    int key_dim = 64;
    std::vector<MetaPath> metapaths;  // defaults to the two standard paths
    double lambda = 0.5;       // triplet weight in the hybrid loss
    double margin = 0.6;       // triplet margin alpha
    double temperature = 0.5;  // contrastive temperature
    std::uint64_t seed = 0;

    static EncoderConfig defaults();
    void validate() const;
};

// All matched hop sequences for one (SET, meta-path) pair plus the induced
// normalized adjacency over the visited nodes.
struct MetaPathInstances {
    std::vector<std::vector<NodeId>> instances;  // each starts at the set node
    std::vector<NodeId> nodes;                   // visited nodes, ascending
    std::vector<std::pair<int, int>> edges;      // undirected, row indices
    int set_row = -1;
};

MetaPathInstances metapath_instances(const MemoryStore& store, const SetSubgraph& set,
                                     const MetaPath& path);

struct SetEmbedding {
    Tensor z;     // canonical embedding, L2-normalized
    Tensor z_mp;  // projected meta-path view
    Tensor z_sc;  // projected schema view
    NodeId set_id = 0;
};

// Caches per-SET structure (instances, typed neighborhoods) that stays fixed
// while parameters train.
struct SubgraphCache {
    std::map<std::pair<NodeId, std::string>, MetaPathInstances> instances;
    std::map<NodeId, std::map<NodeKind, std::vector<NodeId>>> schema_members;
};

class EncoderState {
public:
    explicit EncoderState(EncoderConfig config);

    const EncoderConfig& config() const { return config_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    // Trained table row if present, otherwise the deterministic projection of
    // the node's stored feature. create_trainable registers a new table row.
    Tensor node_embedding(const Node& node, bool create_trainable);
    bool has_row(NodeKind kind, NodeId id) const;

    Tensor encode_metapath_view(const MemoryStore& store, const SetSubgraph& set,
                                bool train_mode, SubgraphCache* cache = nullptr);
    Tensor encode_schema_view(const MemoryStore& store, const SetSubgraph& set,
                              bool train_mode, SubgraphCache* cache = nullptr);
    SetEmbedding encode_set(const MemoryStore& store, const SetSubgraph& set,
                            bool train_mode = false, SubgraphCache* cache = nullptr);

    void save(const std::string& path) const { params_.save(path); }
    void load(const std::string& path) { params_.load(path); }

    // schema-view hop depth per neighbor kind
    static int schema_hops(NodeKind kind);

private:
    Tensor init_projection(NodeKind kind);
    std::string row_name(NodeKind kind, NodeId id) const;

    EncoderConfig config_;
    ParameterStore params_;
    std::map<NodeKind, Tensor> init_proj_;  // fixed, not trained
    std::map<NodeKind, Tensor> set_default_row_;
};

// ---- triplet sampling ------------------------------------------------------------

struct TripletSample {
    NodeId anchor = 0, positive = 0, negative = 0;
};

// anchor/positive: distinct successful SETs of one task; negative: failed SET
// of the same task or any SET of another task (50/50 when both pools exist).
std::vector<TripletSample> sample_triplets(const MemoryStore& memory,
                                           const std::vector<NodeId>& pool, int batch, Rng& rng);

// ---- hybrid loss -------------------------------------------------------------------

// lambda * triplet(z_a, z_p, z_n; margin)
//   + (1 - lambda) * mean_i info_nce(sim(z_mp_i, z_sc_i), sims(z_mp_i, all z_sc); tau)
Tensor hybrid_loss(const std::vector<SetEmbedding>& batch, int anchor_idx, int positive_idx,
                   int negative_idx, double lambda, double margin, double temperature);

// ---- training -----------------------------------------------------------------------

struct TrainConfig {
    int max_epochs = 200;
    int patience = 10;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    int accumulation_window = 20;
    double train_fraction = 0.8;
    int triplets_per_epoch = 0;  // 0: one per training SET
    std::uint64_t seed = 0;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = -1;
    double best_val_loss = 0.0;
    bool early_stopped = false;
    std::vector<NodeId> train_sets, val_sets;
};

TrainResult train_encoder(EncoderState& state, const MemoryStore& memory,
                          const TrainConfig& train_config);

}  // namespace setle
