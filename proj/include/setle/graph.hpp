#pragma once

// Typed heterogeneous graph store for hierarchical episodic memory: five
// node kinds, seven edge kinds with a fixed schema, per-episode subgraph
// registration with shared Object/Interaction nodes, and line-delimited
// JSON persistence.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "setle/errors.hpp"

namespace setle {

using NodeId = std::uint64_t;

enum class NodeKind { Object = 0, Interaction, State, Affordance, Set };
constexpr int kNodeKindCount = 5;

enum class EdgeKind {
    HasState = 0,  // Set -> State
    HasObject,     // State -> Object
    DependsOn,     // Interaction -> Object
    EmergesFrom,   // Affordance -> Interaction
    Influences,    // Affordance -> State
    Outcome,       // State -> Affordance
    Precedes,      // State -> State
};
constexpr int kEdgeKindCount = 7;

const char* to_string(NodeKind k);
const char* to_string(EdgeKind k);
NodeKind node_kind_from_string(const std::string& s);
EdgeKind edge_kind_from_string(const std::string& s);

// The single (source kind, target kind) pair each edge kind permits.
NodeKind edge_source_kind(EdgeKind k);
NodeKind edge_target_kind(EdgeKind k);

struct Node {
    NodeId id = 0;
    NodeKind kind = NodeKind::Object;
    std::vector<float> feature;
    std::map<std::string, std::string> meta;
};

struct Edge {
    NodeId src = 0;
    EdgeKind kind = EdgeKind::HasState;
    NodeId dst = 0;
    auto operator<=>(const Edge&) const = default;
};

enum class SetLabel { Success, Failure };
const char* to_string(SetLabel l);
SetLabel set_label_from_string(const std::string& s);

// One episode's induced subgraph: member nodes (including shared Object /
// Interaction nodes), ordered states, and every edge among members.
struct SetSubgraph {
    NodeId set_id = 0;
    std::vector<NodeId> state_ids;  // timestep order
    SetLabel label = SetLabel::Failure;
    std::string task;
    std::vector<NodeId> members;  // ascending id, includes set_id
    std::vector<Edge> edges;
};

struct StoreConfig {
    std::array<int, kNodeKindCount> d_in{16, 16, 16, 16, 16};
    double tau_sim = 0.95;
    NodeId first_id = 1;  // working-memory stores allocate from a disjoint range
};

class MemoryStore {
public:
    explicit MemoryStore(StoreConfig config = {});

    NodeId add_node(NodeKind kind, std::vector<float> feature,
                    std::map<std::string, std::string> meta = {});
    // Same checks as add_node but keeps a caller-supplied id (used when
    // grafting long-term-memory nodes into a working-memory store).
    NodeId add_node_with_id(NodeId id, NodeKind kind, std::vector<float> feature,
                            std::map<std::string, std::string> meta = {});
    // Idempotent; rejects schema violations and dangling endpoints.
    void add_edge(NodeId src, EdgeKind kind, NodeId dst);
    bool has_edge(NodeId src, EdgeKind kind, NodeId dst) const;

    bool has_node(NodeId id) const { return nodes_.count(id) > 0; }
    const Node& node(NodeId id) const;
    Node& mutable_node(NodeId id);
    const std::map<NodeId, Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    // Membership of one SET; must be weakly connected through set_id.
    void register_set(NodeId set_id, std::vector<NodeId> members);
    const std::vector<NodeId>& set_members(NodeId set_id) const;
    bool has_set(NodeId set_id) const { return set_index_.count(set_id) > 0; }
    std::vector<NodeId> set_ids() const;

    SetSubgraph get_set_subgraph(NodeId set_id) const;

    // Nodes of `kind` reachable within max_hops undirected hops, confined to
    // the SET subgraphs the start node belongs to. Ascending id order.
    std::vector<NodeId> typed_neighbors(NodeId start, NodeKind kind, int max_hops) const;

    // Removes a SET and the member nodes no other SET references.
    void remove_set(NodeId set_id);

    const std::vector<NodeId>& object_ids() const { return object_ids_; }
    // (best id, best cosine); ties by lowest id. nullopt when no objects exist.
    std::optional<std::pair<NodeId, double>> most_similar_object(
        const std::vector<float>& feature) const;

    // undirected adjacency as (neighbor, kind, outgoing?) triples
    struct Adjacent {
        NodeId peer;
        EdgeKind kind;
        bool outgoing;
    };
    const std::vector<Adjacent>& adjacency(NodeId id) const;

    void persist(const std::string& path) const;
    static MemoryStore load(const std::string& path);
    MemoryStore snapshot() const { return *this; }

    void check_schema_closure() const;  // throws on any violation
    bool is_weakly_connected(NodeId root, const std::vector<NodeId>& members) const;

    int d_in(NodeKind kind) const { return config_.d_in[static_cast<int>(kind)]; }
    double tau_sim() const { return config_.tau_sim; }
    const StoreConfig& config() const { return config_; }

private:
    NodeId insert_node_with_id(Node node);  // used by load; keeps next_id_ ahead
    void check_object_dedup(const std::vector<float>& feature) const;
    void index_edge(const Edge& e);

    StoreConfig config_;
    NodeId next_id_ = 1;
    std::map<NodeId, Node> nodes_;
    std::vector<Edge> edges_;
    std::map<Edge, bool> edge_present_;
    std::map<NodeId, std::vector<Adjacent>> adjacency_;
    std::map<NodeId, std::vector<NodeId>> set_index_;
    std::map<NodeId, std::vector<NodeId>> sets_of_node_;
    std::vector<NodeId> object_ids_;
};

double cosine(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace setle
