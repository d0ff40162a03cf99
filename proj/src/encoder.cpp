#include "setle/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace setle {

MetaPath metapath_set_st_obj_inter_aff() {
    return {"SET-St-Obj-Inter-Aff",
            {{NodeKind::State, EdgeKind::HasState},
             {NodeKind::Object, EdgeKind::HasObject},
             {NodeKind::Interaction, EdgeKind::DependsOn},
             {NodeKind::Affordance, EdgeKind::EmergesFrom}}};
}

MetaPath metapath_set_st_aff_st() {
    return {"SET-St-Aff-St",
            {{NodeKind::State, EdgeKind::HasState},
             {NodeKind::Affordance, EdgeKind::Outcome},
             {NodeKind::State, EdgeKind::Influences}}};
}

EncoderConfig EncoderConfig::defaults() {
    EncoderConfig cfg;
    cfg.metapaths = {metapath_set_st_obj_inter_aff(), metapath_set_st_aff_st()};
    return cfg;
}

void EncoderConfig::validate() const {
    if (hidden_dim <= 0 || layers <= 0 || heads <= 0 || key_dim <= 0)
        throw ConfigError("encoder dims must be positive");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must be in [0, 1]");
    if (margin <= 0.0) throw ConfigError("margin must be positive");
    if (temperature <= 0.0) throw ConfigError("temperature must be positive");
    if (metapaths.empty()) throw ConfigError("at least one meta-path required");
    for (const auto& p : metapaths) {
        if (p.hops.empty()) throw ConfigError("meta-path with no hops: " + p.name);
        NodeKind prev = NodeKind::Set;
        for (const auto& hop : p.hops) {
            const NodeKind a = edge_source_kind(hop.edge);
            const NodeKind b = edge_target_kind(hop.edge);
            const bool ok = (a == prev && b == hop.kind) || (b == prev && a == hop.kind);
            if (!ok)
                throw ConfigError("meta-path hop not schema-valid in " + p.name);
            prev = hop.kind;
        }
    }
}

// ---- meta-path instances -----------------------------------------------------------

MetaPathInstances metapath_instances(const MemoryStore& store, const SetSubgraph& set,
                                     const MetaPath& path) {
    std::set<NodeId> member_set(set.members.begin(), set.members.end());
    member_set.insert(set.set_id);

    std::vector<std::vector<NodeId>> frontier{{set.set_id}};
    for (const auto& hop : path.hops) {
        std::vector<std::vector<NodeId>> next;
        for (const auto& seq : frontier) {
            const NodeId cur = seq.back();
            for (const auto& adj : store.adjacency(cur)) {
                if (adj.kind != hop.edge) continue;
                if (!member_set.count(adj.peer)) continue;
                if (store.node(adj.peer).kind != hop.kind) continue;
                if (std::count(seq.begin(), seq.end(), adj.peer)) continue;
                auto extended = seq;
                extended.push_back(adj.peer);
                next.push_back(std::move(extended));
            }
        }
        frontier = std::move(next);
        if (frontier.empty()) break;
    }

    MetaPathInstances out;
    out.instances = std::move(frontier);
    if (out.instances.empty()) return out;

    std::set<NodeId> visited;
    for (const auto& inst : out.instances)
        for (NodeId id : inst) visited.insert(id);
    out.nodes.assign(visited.begin(), visited.end());
    std::map<NodeId, int> row_of;
    for (std::size_t i = 0; i < out.nodes.size(); ++i)
        row_of[out.nodes[i]] = static_cast<int>(i);
    out.set_row = row_of.at(set.set_id);

    std::set<std::pair<int, int>> edges;
    for (const auto& inst : out.instances)
        for (std::size_t i = 0; i + 1 < inst.size(); ++i) {
            int a = row_of.at(inst[i]);
            int b = row_of.at(inst[i + 1]);
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    out.edges.assign(edges.begin(), edges.end());
    return out;
}

// ---- EncoderState ---------------------------------------------------------------------

EncoderState::EncoderState(EncoderConfig config) : config_(std::move(config)) {
    if (config_.metapaths.empty()) config_.metapaths = EncoderConfig::defaults().metapaths;
    config_.validate();
    Rng rng = Rng::keyed(config_.seed, fnv1a("encoder-init"));

    for (const auto& path : config_.metapaths)
        for (int l = 0; l < config_.layers; ++l) {
            std::ostringstream name;
            name << "mp/" << path.name << "/layer" << l;
            params_.create_glorot(name.str(), config_.hidden_dim, config_.hidden_dim,
                                  rng.split(fnv1a(name.str())));
        }
    params_.create_glorot("sem/att.weight", config_.hidden_dim, config_.hidden_dim,
                          rng.split(fnv1a("sem/att.weight")));
    params_.create_zeros("sem/att.bias", {config_.hidden_dim});
    params_.create_glorot("sem/att.q", config_.hidden_dim, 1, rng.split(fnv1a("sem/att.q")));

    for (int h = 0; h < config_.heads; ++h) {
        std::ostringstream qn, kn;
        qn << "sc/head" << h << ".q";
        kn << "sc/head" << h << ".k";
        params_.create_glorot(qn.str(), config_.hidden_dim, config_.key_dim,
                              rng.split(fnv1a(qn.str())));
        params_.create_glorot(kn.str(), config_.hidden_dim, config_.key_dim,
                              rng.split(fnv1a(kn.str())));
    }
    params_.create_glorot("sc/kind.weight", config_.hidden_dim, config_.hidden_dim,
                          rng.split(fnv1a("sc/kind.weight")));
    params_.create_zeros("sc/kind.bias", {config_.hidden_dim});
    params_.create_glorot("sc/kind.q", config_.hidden_dim, 1, rng.split(fnv1a("sc/kind.q")));

    params_.create_glorot("proj/mp.weight", config_.hidden_dim, config_.hidden_dim,
                          rng.split(fnv1a("proj/mp.weight")));
    params_.create_zeros("proj/mp.bias", {config_.hidden_dim});
    params_.create_glorot("proj/sc.weight", config_.hidden_dim, config_.hidden_dim,
                          rng.split(fnv1a("proj/sc.weight")));
    params_.create_zeros("proj/sc.bias", {config_.hidden_dim});
}

int EncoderState::schema_hops(NodeKind kind) {
    switch (kind) {
        case NodeKind::State: return 1;
        case NodeKind::Affordance: return 2;
        case NodeKind::Object: return 2;
        case NodeKind::Interaction: return 3;
        case NodeKind::Set: return 0;
    }
    return 0;
}

std::string EncoderState::row_name(NodeKind kind, NodeId id) const {
    std::ostringstream os;
    os << "emb/" << to_string(kind) << "/" << id;
    return os.str();
}

bool EncoderState::has_row(NodeKind kind, NodeId id) const {
    return params_.contains(row_name(kind, id));
}

Tensor EncoderState::init_projection(NodeKind kind) {
    auto it = init_proj_.find(kind);
    if (it != init_proj_.end()) return it->second;
    // deterministic, untrained; reconstructed from the config seed
    Rng rng = Rng::keyed(config_.seed, fnv1a("init-proj"), static_cast<std::uint64_t>(kind));
    const int rows_needed = 256;  // generous upper bound on d_in
    const double limit = std::sqrt(6.0 / (rows_needed + config_.hidden_dim));
    std::vector<double> vals(static_cast<std::size_t>(rows_needed) * config_.hidden_dim);
    for (auto& v : vals) v = (rng.next_double() * 2.0 - 1.0) * limit;
    Tensor proj = Tensor::from_values({rows_needed, config_.hidden_dim}, std::move(vals));
    init_proj_.emplace(kind, proj);
    return proj;
}

Tensor EncoderState::node_embedding(const Node& node, bool create_trainable) {
    const std::string name = row_name(node.kind, node.id);
    if (params_.contains(name)) return params_.get(name);

    Tensor proj = init_projection(node.kind);
    if (static_cast<int>(node.feature.size()) > proj.dim(0))
        throw ConfigError("node feature dimension exceeds init projection bound");
    std::vector<double> row_vals(static_cast<std::size_t>(config_.hidden_dim), 0.0);
    for (std::size_t i = 0; i < node.feature.size(); ++i) {
        const double f = node.feature[i];
        if (f == 0.0) continue;
        for (int j = 0; j < config_.hidden_dim; ++j)
            row_vals[static_cast<std::size_t>(j)] +=
                f * proj.at2(static_cast<int>(i), j);
    }
    if (create_trainable) return params_.create(name, {config_.hidden_dim}, std::move(row_vals));
    return Tensor::from_values({config_.hidden_dim}, std::move(row_vals));
}

Tensor EncoderState::encode_metapath_view(const MemoryStore& store, const SetSubgraph& set,
                                          bool train_mode, SubgraphCache* cache) {
    std::vector<Tensor> path_embeddings;
    for (const auto& path : config_.metapaths) {
        const MetaPathInstances* mpi = nullptr;
        MetaPathInstances local;
        if (cache) {
            auto key = std::make_pair(set.set_id, path.name);
            auto it = cache->instances.find(key);
            if (it == cache->instances.end())
                it = cache->instances.emplace(key, metapath_instances(store, set, path)).first;
            mpi = &it->second;
        } else {
            local = metapath_instances(store, set, path);
            mpi = &local;
        }
        if (mpi->instances.empty()) continue;

        std::vector<Tensor> rows;
        rows.reserve(mpi->nodes.size());
        for (NodeId id : mpi->nodes) rows.push_back(node_embedding(store.node(id), train_mode));
        Tensor h = concat_rows(rows);
        Tensor a_norm = normalized_adjacency(static_cast<int>(mpi->nodes.size()), mpi->edges);
        for (int l = 0; l < config_.layers; ++l) {
            std::ostringstream name;
            name << "mp/" << path.name << "/layer" << l;
            h = gcn_layer(h, a_norm, params_.get(name.str()), Activation::Elu);
        }
        path_embeddings.push_back(row(h, mpi->set_row));
    }
    if (path_embeddings.empty())
        throw DataError("degenerate SET " + std::to_string(set.set_id) +
                        ": no meta-path instances on any configured path");

    if (path_embeddings.size() == 1) return path_embeddings[0];

    Linear att{params_.get("sem/att.weight"), params_.get("sem/att.bias")};
    Tensor q = params_.get("sem/att.q");  // [hidden, 1]
    std::vector<Tensor> scores;
    scores.reserve(path_embeddings.size());
    for (const auto& h : path_embeddings)
        scores.push_back(pick(vecmat(tanh_op(att(h)), q), 0));
    Tensor weights = softmax(stack_scalars(scores));
    return weighted_sum_rows(concat_rows(path_embeddings), weights);
}

Tensor EncoderState::encode_schema_view(const MemoryStore& store, const SetSubgraph& set,
                                        bool train_mode, SubgraphCache* cache) {
    const std::map<NodeKind, std::vector<NodeId>>* members = nullptr;
    std::map<NodeKind, std::vector<NodeId>> local;
    auto compute_members = [&]() {
        std::map<NodeKind, std::vector<NodeId>> out;
        for (NodeKind kind : {NodeKind::State, NodeKind::Affordance, NodeKind::Object,
                              NodeKind::Interaction}) {
            auto ids = store.typed_neighbors(set.set_id, kind, schema_hops(kind));
            if (!ids.empty()) out[kind] = std::move(ids);
        }
        return out;
    };
    if (cache) {
        auto it = cache->schema_members.find(set.set_id);
        if (it == cache->schema_members.end())
            it = cache->schema_members.emplace(set.set_id, compute_members()).first;
        members = &it->second;
    } else {
        local = compute_members();
        members = &local;
    }
    if (members->empty())
        throw DataError("schema view: SET " + std::to_string(set.set_id) + " has no neighbors");

    Tensor set_emb = node_embedding(store.node(set.set_id), train_mode);

    std::vector<Tensor> kind_vectors;
    for (const auto& [kind, ids] : *members) {
        std::vector<Tensor> rows;
        rows.reserve(ids.size());
        for (NodeId id : ids) rows.push_back(node_embedding(store.node(id), train_mode));
        Tensor e = concat_rows(rows);  // [m, hidden]

        // per-head scaled dot-product scores; weights averaged over heads,
        // values are the raw member embeddings
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(config_.key_dim));
        Tensor attn_sum;
        for (int h = 0; h < config_.heads; ++h) {
            std::ostringstream qn, kn;
            qn << "sc/head" << h << ".q";
            kn << "sc/head" << h << ".k";
            Tensor qh = vecmat(set_emb, params_.get(qn.str()));  // [key]
            Tensor kh = matmul(e, params_.get(kn.str()));        // [m, key]
            Tensor logits = scale(matvec(kh, qh), inv_sqrt);     // [m]
            Tensor attn = softmax(logits);
            attn_sum = h == 0 ? attn : add(attn_sum, attn);
        }
        Tensor attn_mean = scale(attn_sum, 1.0 / config_.heads);
        kind_vectors.push_back(weighted_sum_rows(e, attn_mean));
    }

    if (kind_vectors.size() == 1) return kind_vectors[0];
    Linear att{params_.get("sc/kind.weight"), params_.get("sc/kind.bias")};
    Tensor q = params_.get("sc/kind.q");
    std::vector<Tensor> scores;
    scores.reserve(kind_vectors.size());
    for (const auto& v : kind_vectors) scores.push_back(pick(vecmat(tanh_op(att(v)), q), 0));
    Tensor weights = softmax(stack_scalars(scores));
    return weighted_sum_rows(concat_rows(kind_vectors), weights);
}

SetEmbedding EncoderState::encode_set(const MemoryStore& store, const SetSubgraph& set,
                                      bool train_mode, SubgraphCache* cache) {
    Tensor mp_raw = encode_metapath_view(store, set, train_mode, cache);
    Tensor sc_raw = encode_schema_view(store, set, train_mode, cache);
    Linear proj_mp{params_.get("proj/mp.weight"), params_.get("proj/mp.bias")};
    Linear proj_sc{params_.get("proj/sc.weight"), params_.get("proj/sc.bias")};
    SetEmbedding out;
    out.set_id = set.set_id;
    out.z_mp = proj_mp(mp_raw);
    out.z_sc = proj_sc(sc_raw);
    out.z = l2_normalize(out.z_mp);
    return out;
}

// ---- triplet sampling ---------------------------------------------------------------

std::vector<TripletSample> sample_triplets(const MemoryStore& memory,
                                           const std::vector<NodeId>& pool, int batch, Rng& rng) {
    std::map<std::string, std::vector<NodeId>> success_by_task, failure_by_task;
    std::vector<std::pair<NodeId, std::string>> all;
    for (NodeId sid : pool) {
        const Node& n = memory.node(sid);
        const std::string task = n.meta.count("task") ? n.meta.at("task") : "";
        const SetLabel label = set_label_from_string(
            n.meta.count("label") ? n.meta.at("label") : "failure");
        if (label == SetLabel::Success)
            success_by_task[task].push_back(sid);
        else
            failure_by_task[task].push_back(sid);
        all.emplace_back(sid, task);
    }

    std::vector<NodeId> anchors;  // successes of tasks with >= 2 successes
    for (const auto& [task, ids] : success_by_task)
        if (ids.size() >= 2) anchors.insert(anchors.end(), ids.begin(), ids.end());
    if (anchors.empty())
        throw DataError(
            "sample_triplets: empty anchor pool (no task has two successful SETs)");

    std::vector<TripletSample> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
        NodeId anchor = anchors[rng.next_below(static_cast<std::uint32_t>(anchors.size()))];
        const std::string task = memory.node(anchor).meta.at("task");

        const auto& same = success_by_task.at(task);
        NodeId positive = anchor;
        while (positive == anchor)
            positive = same[rng.next_below(static_cast<std::uint32_t>(same.size()))];

        std::vector<NodeId> fail_pool =
            failure_by_task.count(task) ? failure_by_task.at(task) : std::vector<NodeId>{};
        std::vector<NodeId> other_pool;
        for (const auto& [sid, t] : all)
            if (t != task) other_pool.push_back(sid);

        NodeId negative;
        if (fail_pool.empty() && other_pool.empty())
            throw DataError("sample_triplets: empty negative pools (no failed SET in task '" +
                            task + "' and no SET from any other task)");
        if (fail_pool.empty())
            negative = other_pool[rng.next_below(static_cast<std::uint32_t>(other_pool.size()))];
        else if (other_pool.empty())
            negative = fail_pool[rng.next_below(static_cast<std::uint32_t>(fail_pool.size()))];
        else if (rng.next_double() < 0.5)
            negative = fail_pool[rng.next_below(static_cast<std::uint32_t>(fail_pool.size()))];
        else
            negative = other_pool[rng.next_below(static_cast<std::uint32_t>(other_pool.size()))];

        out.push_back({anchor, positive, negative});
    }
    return out;
}

// ---- hybrid loss ----------------------------------------------------------------------

Tensor hybrid_loss(const std::vector<SetEmbedding>& batch, int anchor_idx, int positive_idx,
                   int negative_idx, double lambda, double margin, double temperature) {
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("hybrid_loss: lambda out of range");
    const auto& a = batch[static_cast<std::size_t>(anchor_idx)];
    const auto& p = batch[static_cast<std::size_t>(positive_idx)];
    const auto& n = batch[static_cast<std::size_t>(negative_idx)];

    Tensor d_ap = euclidean_distance(a.z, p.z);
    Tensor d_an = euclidean_distance(a.z, n.z);
    Tensor l_triplet = triplet_loss(d_ap, d_an, margin);

    Tensor l_contrastive = Tensor::scalar(0.0);
    if (!batch.empty()) {
        std::vector<Tensor> per_item;
        per_item.reserve(batch.size());
        for (const auto& item : batch) {
            std::vector<Tensor> sims;
            sims.reserve(batch.size());
            Tensor sim_pos;
            for (const auto& other : batch) {
                Tensor s = cosine_similarity(item.z_mp, other.z_sc);
                if (&other == &item) sim_pos = s;
                sims.push_back(s);
            }
            per_item.push_back(info_nce(sim_pos, stack_scalars(sims), temperature));
        }
        l_contrastive = scale(sum(stack_scalars(per_item)), 1.0 / per_item.size());
    }
    return add(scale(l_triplet, lambda), scale(l_contrastive, 1.0 - lambda));
}

// ---- training ---------------------------------------------------------------------------

TrainResult train_encoder(EncoderState& state, const MemoryStore& memory,
                          const TrainConfig& train_config) {
    std::vector<NodeId> sets = memory.set_ids();
    if (sets.size() < 3) throw DataError("train_encoder: need at least 3 SETs");
    {
        std::set<std::string> tasks;
        for (NodeId sid : sets) {
            const auto& meta = memory.node(sid).meta;
            if (meta.count("task")) tasks.insert(meta.at("task"));
        }
        if (tasks.size() < 2) throw DataError("train_encoder: need SETs from at least 2 tasks");
    }

    Rng split_rng = Rng::keyed(train_config.seed, fnv1a("split"));
    for (std::size_t i = sets.size(); i > 1; --i)
        std::swap(sets[i - 1], sets[split_rng.next_below(static_cast<std::uint32_t>(i))]);
    const std::size_t train_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(train_config.train_fraction * sets.size()));
    TrainResult result;
    result.train_sets.assign(sets.begin(), sets.begin() + static_cast<long>(train_count));
    result.val_sets.assign(sets.begin() + static_cast<long>(train_count), sets.end());
    if (result.val_sets.empty()) {
        result.val_sets.push_back(result.train_sets.back());
        result.train_sets.pop_back();
    }

    SubgraphCache cache;
    auto subgraphs = [&](const std::vector<NodeId>& ids) {
        std::map<NodeId, SetSubgraph> out;
        for (NodeId sid : ids) out.emplace(sid, memory.get_set_subgraph(sid));
        return out;
    };
    std::map<NodeId, SetSubgraph> train_sg = subgraphs(result.train_sets);
    std::map<NodeId, SetSubgraph> val_sg = subgraphs(result.val_sets);

    // fixed validation triplets so epochs are comparable
    Rng val_rng = Rng::keyed(train_config.seed, fnv1a("val-triplets"));
    std::vector<TripletSample> val_triplets;
    try {
        const int n_val = std::max<int>(8, static_cast<int>(result.val_sets.size()));
        val_triplets = sample_triplets(memory, result.val_sets, n_val, val_rng);
    } catch (const DataError&) {
        // validation pool too thin to form triplets on its own: fall back to
        // scoring fixed train triplets (still a held-out-free signal)
        val_triplets =
            sample_triplets(memory, result.train_sets,
                            static_cast<int>(std::min<std::size_t>(8, train_count)), val_rng);
    }

    AdamConfig adam;
    adam.learning_rate = train_config.learning_rate;
    adam.weight_decay = train_config.weight_decay;
    adam.accumulation_window = train_config.accumulation_window;
    AdamOptimizer opt(state.params(), adam);

    auto encode_triplet = [&](const TripletSample& t, bool train_mode,
                              std::map<NodeId, SetSubgraph>& sg) {
        std::vector<SetEmbedding> batch;
        batch.push_back(state.encode_set(memory, sg.at(t.anchor), train_mode, &cache));
        batch.push_back(state.encode_set(memory, sg.at(t.positive), train_mode, &cache));
        batch.push_back(state.encode_set(memory, sg.at(t.negative), train_mode, &cache));
        return hybrid_loss(batch, 0, 1, 2, state.config().lambda, state.config().margin,
                           state.config().temperature);
    };

    double best_val = 1e300;
    int best_epoch = -1, waits = 0;
    std::map<std::string, std::vector<double>> best_params;

    const int triplets_per_epoch = train_config.triplets_per_epoch > 0
                                       ? train_config.triplets_per_epoch
                                       : static_cast<int>(result.train_sets.size());

    for (int epoch = 0; epoch < train_config.max_epochs; ++epoch) {
        Rng epoch_rng = Rng::keyed(train_config.seed, fnv1a("epoch"),
                                   static_cast<std::uint64_t>(epoch));
        auto triplets =
            sample_triplets(memory, result.train_sets, triplets_per_epoch, epoch_rng);
        double train_loss = 0.0;
        for (const auto& t : triplets) {
            Tensor loss = encode_triplet(t, /*train_mode=*/true, train_sg);
            train_loss += loss.item();
            loss.backward();
            opt.step();
        }
        train_loss /= triplets.empty() ? 1 : static_cast<double>(triplets.size());

        double val_loss = 0.0;
        for (const auto& t : val_triplets) {
            auto& sg = val_sg.count(t.anchor) ? val_sg : train_sg;
            val_loss += encode_triplet(t, /*train_mode=*/false, sg).item();
        }
        val_loss /= val_triplets.empty() ? 1 : static_cast<double>(val_triplets.size());

        result.log.push_back({epoch, train_loss, val_loss});

        if (val_loss < best_val - 1e-12) {
            best_val = val_loss;
            best_epoch = epoch;
            waits = 0;
            best_params.clear();
            for (const auto& [name, t] : state.params().all()) best_params[name] = t.value();
        } else if (++waits >= train_config.patience) {
            result.early_stopped = true;
            break;
        }
    }

    for (const auto& [name, vals] : best_params) {
        Tensor t = state.params().get(name);
        t.mutable_value() = vals;
    }
    result.best_epoch = best_epoch;
    result.best_val_loss = best_val;
    return result;
}

}  // namespace setle
