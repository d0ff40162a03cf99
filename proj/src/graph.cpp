#include "setle/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace setle {

using nlohmann::json;

// ---- enum names ---------------------------------------------------------------

const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Object: return "Object";
        case NodeKind::Interaction: return "Interaction";
        case NodeKind::State: return "State";
        case NodeKind::Affordance: return "Affordance";
        case NodeKind::Set: return "Set";
    }
    return "?";
}

const char* to_string(EdgeKind k) {
    switch (k) {
        case EdgeKind::HasState: return "HasState";
        case EdgeKind::HasObject: return "HasObject";
        case EdgeKind::DependsOn: return "DependsOn";
        case EdgeKind::EmergesFrom: return "EmergesFrom";
        case EdgeKind::Influences: return "Influences";
        case EdgeKind::Outcome: return "Outcome";
        case EdgeKind::Precedes: return "Precedes";
    }
    return "?";
}

NodeKind node_kind_from_string(const std::string& s) {
    for (int i = 0; i < kNodeKindCount; ++i)
        if (s == to_string(static_cast<NodeKind>(i))) return static_cast<NodeKind>(i);
    throw DataError("unknown node kind: " + s);
}

EdgeKind edge_kind_from_string(const std::string& s) {
    for (int i = 0; i < kEdgeKindCount; ++i)
        if (s == to_string(static_cast<EdgeKind>(i))) return static_cast<EdgeKind>(i);
    throw DataError("unknown edge kind: " + s);
}

NodeKind edge_source_kind(EdgeKind k) {
    switch (k) {
        case EdgeKind::HasState: return NodeKind::Set;
        case EdgeKind::HasObject: return NodeKind::State;
        case EdgeKind::DependsOn: return NodeKind::Interaction;
        case EdgeKind::EmergesFrom: return NodeKind::Affordance;
        case EdgeKind::Influences: return NodeKind::Affordance;
        case EdgeKind::Outcome: return NodeKind::State;
        case EdgeKind::Precedes: return NodeKind::State;
    }
    throw ConfigError("bad edge kind");
}

NodeKind edge_target_kind(EdgeKind k) {
    switch (k) {
        case EdgeKind::HasState: return NodeKind::State;
        case EdgeKind::HasObject: return NodeKind::Object;
        case EdgeKind::DependsOn: return NodeKind::Object;
        case EdgeKind::EmergesFrom: return NodeKind::Interaction;
        case EdgeKind::Influences: return NodeKind::State;
        case EdgeKind::Outcome: return NodeKind::Affordance;
        case EdgeKind::Precedes: return NodeKind::State;
    }
    throw ConfigError("bad edge kind");
}

const char* to_string(SetLabel l) { return l == SetLabel::Success ? "success" : "failure"; }

SetLabel set_label_from_string(const std::string& s) {
    if (s == "success") return SetLabel::Success;
    if (s == "failure") return SetLabel::Failure;
    throw DataError("unknown SET label: " + s);
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw ConfigError("cosine: dimension mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += static_cast<double>(a[i]) * b[i];
        aa += static_cast<double>(a[i]) * a[i];
        bb += static_cast<double>(b[i]) * b[i];
    }
    if (aa == 0.0 || bb == 0.0) throw DataError("cosine: zero vector");
    return ab / (std::sqrt(aa) * std::sqrt(bb));
}

// ---- base64 (float32 little-endian payloads) -----------------------------------

namespace {

const char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        std::uint32_t chunk = static_cast<std::uint32_t>(data[i]) << 16;
        int have = 1;
        if (i + 1 < data.size()) { chunk |= static_cast<std::uint32_t>(data[i + 1]) << 8; ++have; }
        if (i + 2 < data.size()) { chunk |= data[i + 2]; ++have; }
        out.push_back(kB64Alphabet[(chunk >> 18) & 63]);
        out.push_back(kB64Alphabet[(chunk >> 12) & 63]);
        out.push_back(have > 1 ? kB64Alphabet[(chunk >> 6) & 63] : '=');
        out.push_back(have > 2 ? kB64Alphabet[chunk & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw DataError("base64: bad length");
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::uint32_t chunk = 0;
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                chunk <<= 6;
                ++pad;
            } else {
                int v = value_of(c);
                if (v < 0) throw DataError("base64: bad character");
                chunk = (chunk << 6) | static_cast<std::uint32_t>(v);
            }
        }
        out.push_back(static_cast<unsigned char>((chunk >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<unsigned char>((chunk >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<unsigned char>(chunk & 0xff));
    }
    return out;
}

std::string encode_feature(const std::vector<float>& f) {
    std::vector<unsigned char> bytes(f.size() * 4);
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::uint32_t u;
        std::memcpy(&u, &f[i], 4);
        for (int b = 0; b < 4; ++b)
            bytes[i * 4 + static_cast<std::size_t>(b)] =
                static_cast<unsigned char>((u >> (8 * b)) & 0xff);
    }
    return base64_encode(bytes);
}

std::vector<float> decode_feature(const std::string& text) {
    auto bytes = base64_decode(text);
    if (bytes.size() % 4 != 0) throw DataError("feature payload not a float32 array");
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint32_t u = 0;
        for (int b = 0; b < 4; ++b)
            u |= static_cast<std::uint32_t>(bytes[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
        std::memcpy(&out[i], &u, 4);
    }
    return out;
}

}  // namespace

// ---- MemoryStore ----------------------------------------------------------------

MemoryStore::MemoryStore(StoreConfig config) : config_(config), next_id_(config.first_id) {
    for (int d : config_.d_in)
        if (d <= 0) throw ConfigError("store d_in must be positive");
    if (config_.first_id == 0) throw ConfigError("store first_id must be nonzero");
}

namespace {

void check_feature_dim(NodeKind kind, std::size_t got, int want) {
    if (static_cast<int>(got) != want) {
        std::ostringstream os;
        os << "feature dimension mismatch for " << to_string(kind) << ": got " << got
           << ", store configured d_in=" << want;
        throw DataError(os.str());
    }
}

}  // namespace

void MemoryStore::check_object_dedup(const std::vector<float>& feature) const {
    auto best = most_similar_object(feature);
    if (best && best->second >= config_.tau_sim) {
        std::ostringstream os;
        os << "object dedup invariant violated: new object has cosine " << best->second
           << " >= tau_sim " << config_.tau_sim << " with node " << best->first;
        throw DataError(os.str());
    }
}

NodeId MemoryStore::add_node(NodeKind kind, std::vector<float> feature,
                             std::map<std::string, std::string> meta) {
    check_feature_dim(kind, feature.size(), d_in(kind));
    if (kind == NodeKind::Object) check_object_dedup(feature);
    Node n;
    n.id = next_id_++;
    n.kind = kind;
    n.feature = std::move(feature);
    n.meta = std::move(meta);
    if (kind == NodeKind::Object) object_ids_.push_back(n.id);
    NodeId id = n.id;
    nodes_.emplace(id, std::move(n));
    return id;
}

NodeId MemoryStore::add_node_with_id(NodeId id, NodeKind kind, std::vector<float> feature,
                                     std::map<std::string, std::string> meta) {
    if (nodes_.count(id)) throw DataError("add_node_with_id: id already present");
    check_feature_dim(kind, feature.size(), d_in(kind));
    if (kind == NodeKind::Object) check_object_dedup(feature);
    Node n;
    n.id = id;
    n.kind = kind;
    n.feature = std::move(feature);
    n.meta = std::move(meta);
    return insert_node_with_id(std::move(n));
}

NodeId MemoryStore::insert_node_with_id(Node node) {
    if (nodes_.count(node.id)) throw DataError("duplicate node id in file");
    next_id_ = std::max(next_id_, node.id + 1);
    if (node.kind == NodeKind::Object) object_ids_.push_back(node.id);
    NodeId id = node.id;
    nodes_.emplace(id, std::move(node));
    return id;
}

void MemoryStore::index_edge(const Edge& e) {
    edges_.push_back(e);
    edge_present_[e] = true;
    adjacency_[e.src].push_back({e.dst, e.kind, true});
    adjacency_[e.dst].push_back({e.src, e.kind, false});
}

void MemoryStore::add_edge(NodeId src, EdgeKind kind, NodeId dst) {
    auto si = nodes_.find(src);
    auto di = nodes_.find(dst);
    if (si == nodes_.end() || di == nodes_.end()) {
        std::ostringstream os;
        os << "edge (" << src << " -" << to_string(kind) << "-> " << dst
           << ") has a dangling endpoint";
        throw DataError(os.str());
    }
    if (si->second.kind != edge_source_kind(kind) || di->second.kind != edge_target_kind(kind)) {
        std::ostringstream os;
        os << "schema violation: (" << to_string(si->second.kind) << ", " << to_string(kind)
           << ", " << to_string(di->second.kind) << ") is not an allowed relation";
        throw DataError(os.str());
    }
    Edge e{src, kind, dst};
    if (edge_present_.count(e)) return;
    if (kind == EdgeKind::Precedes) {
        if (src == dst) throw DataError("Precedes self-loop rejected");
        // keep state chains simple paths: single successor / predecessor, no cycles
        for (const auto& adj : adjacency(src))
            if (adj.kind == EdgeKind::Precedes && adj.outgoing)
                throw DataError("Precedes branching rejected at state " + std::to_string(src));
        for (const auto& adj : adjacency(dst))
            if (adj.kind == EdgeKind::Precedes && !adj.outgoing)
                throw DataError("Precedes merge rejected at state " + std::to_string(dst));
        NodeId cursor = dst;
        while (true) {
            NodeId next = 0;
            bool found = false;
            for (const auto& adj : adjacency(cursor))
                if (adj.kind == EdgeKind::Precedes && adj.outgoing) {
                    next = adj.peer;
                    found = true;
                    break;
                }
            if (!found) break;
            if (next == src) throw DataError("Precedes cycle rejected");
            cursor = next;
        }
    }
    index_edge(e);
}

bool MemoryStore::has_edge(NodeId src, EdgeKind kind, NodeId dst) const {
    return edge_present_.count(Edge{src, kind, dst}) > 0;
}

const Node& MemoryStore::node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw DataError("unknown node id: " + std::to_string(id));
    return it->second;
}

Node& MemoryStore::mutable_node(NodeId id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw DataError("unknown node id: " + std::to_string(id));
    return it->second;
}

const std::vector<MemoryStore::Adjacent>& MemoryStore::adjacency(NodeId id) const {
    static const std::vector<Adjacent> kEmpty;
    auto it = adjacency_.find(id);
    return it == adjacency_.end() ? kEmpty : it->second;
}

void MemoryStore::register_set(NodeId set_id, std::vector<NodeId> members) {
    if (node(set_id).kind != NodeKind::Set)
        throw DataError("register_set: node " + std::to_string(set_id) + " is not a Set node");
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    for (NodeId m : members) node(m);  // existence check
    if (!is_weakly_connected(set_id, members))
        throw DataError("register_set: subgraph of set " + std::to_string(set_id) +
                        " is not weakly connected");
    for (NodeId m : members) sets_of_node_[m].push_back(set_id);
    set_index_[set_id] = std::move(members);
}

const std::vector<NodeId>& MemoryStore::set_members(NodeId set_id) const {
    auto it = set_index_.find(set_id);
    if (it == set_index_.end())
        throw DataError("unknown set id: " + std::to_string(set_id));
    return it->second;
}

std::vector<NodeId> MemoryStore::set_ids() const {
    std::vector<NodeId> out;
    out.reserve(set_index_.size());
    for (const auto& [id, members] : set_index_) out.push_back(id);
    return out;
}

bool MemoryStore::is_weakly_connected(NodeId root, const std::vector<NodeId>& members) const {
    std::set<NodeId> allowed(members.begin(), members.end());
    allowed.insert(root);
    std::set<NodeId> seen{root};
    std::deque<NodeId> frontier{root};
    while (!frontier.empty()) {
        NodeId cur = frontier.front();
        frontier.pop_front();
        for (const auto& adj : adjacency(cur)) {
            if (!allowed.count(adj.peer) || seen.count(adj.peer)) continue;
            seen.insert(adj.peer);
            frontier.push_back(adj.peer);
        }
    }
    return seen.size() == allowed.size();
}

SetSubgraph MemoryStore::get_set_subgraph(NodeId set_id) const {
    const Node& root = node(set_id);
    if (root.kind != NodeKind::Set)
        throw DataError("get_set_subgraph: node " + std::to_string(set_id) + " is not a Set node");
    SetSubgraph sg;
    sg.set_id = set_id;
    auto mit = root.meta.find("task");
    if (mit != root.meta.end()) sg.task = mit->second;
    auto lit = root.meta.find("label");
    sg.label = lit != root.meta.end() ? set_label_from_string(lit->second) : SetLabel::Failure;

    sg.members = set_members(set_id);
    if (!std::binary_search(sg.members.begin(), sg.members.end(), set_id)) {
        sg.members.push_back(set_id);
        std::sort(sg.members.begin(), sg.members.end());
    }
    std::set<NodeId> member_set(sg.members.begin(), sg.members.end());

    // states in timestep order via the meta "t" key
    std::vector<std::pair<long, NodeId>> states;
    for (NodeId m : sg.members) {
        const Node& n = node(m);
        if (n.kind != NodeKind::State) continue;
        long t = 0;
        auto ti = n.meta.find("t");
        if (ti != n.meta.end()) t = std::stol(ti->second);
        states.emplace_back(t, m);
    }
    std::sort(states.begin(), states.end());
    for (auto& [t, id] : states) sg.state_ids.push_back(id);

    for (NodeId m : sg.members)
        for (const auto& adj : adjacency(m))
            if (adj.outgoing && member_set.count(adj.peer))
                sg.edges.push_back(Edge{m, adj.kind, adj.peer});
    std::sort(sg.edges.begin(), sg.edges.end());
    sg.edges.erase(std::unique(sg.edges.begin(), sg.edges.end()), sg.edges.end());
    return sg;
}

std::vector<NodeId> MemoryStore::typed_neighbors(NodeId start, NodeKind kind, int max_hops) const {
    node(start);  // existence
    if (max_hops < 1) throw ConfigError("typed_neighbors: max_hops must be >= 1");

    std::set<NodeId> allowed;
    if (node(start).kind == NodeKind::Set && set_index_.count(start)) {
        const auto& mem = set_members(start);
        allowed.insert(mem.begin(), mem.end());
        allowed.insert(start);
    } else {
        auto it = sets_of_node_.find(start);
        if (it != sets_of_node_.end()) {
            for (NodeId sid : it->second) {
                const auto& mem = set_members(sid);
                allowed.insert(mem.begin(), mem.end());
                allowed.insert(sid);
            }
        } else {
            allowed.insert(start);  // node outside any SET: only itself
        }
    }

    std::set<NodeId> seen{start};
    std::deque<std::pair<NodeId, int>> frontier{{start, 0}};
    std::vector<NodeId> out;
    while (!frontier.empty()) {
        auto [cur, depth] = frontier.front();
        frontier.pop_front();
        if (depth == max_hops) continue;
        for (const auto& adj : adjacency(cur)) {
            if (!allowed.count(adj.peer) || seen.count(adj.peer)) continue;
            seen.insert(adj.peer);
            if (node(adj.peer).kind == kind) out.push_back(adj.peer);
            frontier.emplace_back(adj.peer, depth + 1);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void MemoryStore::remove_set(NodeId set_id) {
    const auto members = set_members(set_id);  // copy
    set_index_.erase(set_id);
    for (NodeId m : members) {
        auto& owners = sets_of_node_[m];
        owners.erase(std::remove(owners.begin(), owners.end(), set_id), owners.end());
    }
    std::set<NodeId> doomed{set_id};
    for (NodeId m : members)
        if (sets_of_node_[m].empty()) doomed.insert(m);

    std::vector<Edge> kept;
    kept.reserve(edges_.size());
    for (const Edge& e : edges_)
        if (!doomed.count(e.src) && !doomed.count(e.dst)) kept.push_back(e);
    edges_ = std::move(kept);
    edge_present_.clear();
    adjacency_.clear();
    for (const Edge& e : edges_) {
        edge_present_[e] = true;
        adjacency_[e.src].push_back({e.dst, e.kind, true});
        adjacency_[e.dst].push_back({e.src, e.kind, false});
    }
    for (NodeId d : doomed) {
        nodes_.erase(d);
        sets_of_node_.erase(d);
        object_ids_.erase(std::remove(object_ids_.begin(), object_ids_.end(), d),
                          object_ids_.end());
    }
}

std::optional<std::pair<NodeId, double>> MemoryStore::most_similar_object(
    const std::vector<float>& feature) const {
    double norm = 0.0;
    for (float v : feature) norm += static_cast<double>(v) * v;
    if (norm == 0.0) throw DataError("most_similar_object: zero feature vector");
    std::optional<std::pair<NodeId, double>> best;
    for (NodeId id : object_ids_) {
        double sim = cosine(feature, node(id).feature);
        if (!best || sim > best->second || (sim == best->second && id < best->first))
            best = {id, sim};
    }
    return best;
}

void MemoryStore::check_schema_closure() const {
    for (const Edge& e : edges_) {
        const Node& s = node(e.src);
        const Node& d = node(e.dst);
        if (s.kind != edge_source_kind(e.kind) || d.kind != edge_target_kind(e.kind)) {
            std::ostringstream os;
            os << "schema closure violated by edge " << e.src << " -" << to_string(e.kind)
               << "-> " << e.dst;
            throw DataError(os.str());
        }
    }
}

// ---- persistence -----------------------------------------------------------------

void MemoryStore::persist(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open graph file for writing: " + path);
    json header;
    header["version"] = "1";
    json din;
    for (int i = 0; i < kNodeKindCount; ++i)
        din[to_string(static_cast<NodeKind>(i))] = config_.d_in[i];
    header["d_in"] = din;
    header["tau_sim"] = config_.tau_sim;
    header["next_id"] = next_id_;
    os << json{{"header", header}}.dump() << "\n";
    for (const auto& [id, n] : nodes_) {
        json jn;
        jn["id"] = n.id;
        jn["kind"] = to_string(n.kind);
        jn["feature"] = encode_feature(n.feature);
        jn["meta"] = n.meta;
        os << json{{"node", jn}}.dump() << "\n";
    }
    for (const Edge& e : edges_) {
        os << json{{"edge", {{"src", e.src}, {"kind", to_string(e.kind)}, {"dst", e.dst}}}}.dump()
           << "\n";
    }
    for (const auto& [sid, members] : set_index_) {
        os << json{{"set", {{"id", sid}, {"members", members}}}}.dump() << "\n";
    }
    if (!os) throw DataError("graph write failed: " + path);
}

MemoryStore MemoryStore::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open graph file: " + path);
    std::string line;
    std::size_t lineno = 0;

    auto parse_line = [&](const std::string& text) {
        json j = json::parse(text, nullptr, false);
        if (j.is_discarded())
            throw DataError("malformed graph file at line " + std::to_string(lineno));
        return j;
    };

    if (!std::getline(is, line)) throw DataError("empty graph file: " + path);
    ++lineno;
    json jh = parse_line(line);
    if (!jh.contains("header")) throw DataError("missing header at line 1");
    const json& header = jh["header"];
    if (header.value("version", "") != std::string("1"))
        throw DataError("graph format version mismatch (expected \"1\") at line 1");

    StoreConfig cfg;
    for (int i = 0; i < kNodeKindCount; ++i)
        cfg.d_in[i] = header.at("d_in").at(to_string(static_cast<NodeKind>(i))).get<int>();
    cfg.tau_sim = header.at("tau_sim").get<double>();
    MemoryStore store(cfg);

    try {
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty()) continue;
            json j = parse_line(line);
            if (j.contains("node")) {
                const json& jn = j["node"];
                Node n;
                n.id = jn.at("id").get<NodeId>();
                n.kind = node_kind_from_string(jn.at("kind").get<std::string>());
                n.feature = decode_feature(jn.at("feature").get<std::string>());
                if (static_cast<int>(n.feature.size()) != cfg.d_in[static_cast<int>(n.kind)])
                    throw DataError("feature dimension mismatch");
                for (auto it = jn.at("meta").begin(); it != jn.at("meta").end(); ++it)
                    n.meta[it.key()] = it.value().get<std::string>();
                store.insert_node_with_id(std::move(n));
            } else if (j.contains("edge")) {
                const json& je = j["edge"];
                store.add_edge(je.at("src").get<NodeId>(),
                               edge_kind_from_string(je.at("kind").get<std::string>()),
                               je.at("dst").get<NodeId>());
            } else if (j.contains("set")) {
                const json& js = j["set"];
                store.register_set(js.at("id").get<NodeId>(),
                                   js.at("members").get<std::vector<NodeId>>());
            } else {
                throw DataError("unknown record type");
            }
        }
    } catch (const DataError& e) {
        throw DataError(std::string(e.what()) + " (at line " + std::to_string(lineno) + " of " +
                        path + ")");
    }
    if (header.contains("next_id"))
        store.next_id_ = std::max(store.next_id_, header["next_id"].get<NodeId>());
    return store;
}

}  // namespace setle
