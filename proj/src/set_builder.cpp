#include "setle/set_builder.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "setle/trace.hpp"

namespace setle {

SetLabel label_episode(const EpisodeTrace& trace, int step_cap) {
    validate_trace(trace);
    const bool within_cap = static_cast<int>(trace.steps.size()) <= step_cap;
    return trace.goal_reached && within_cap ? SetLabel::Success : SetLabel::Failure;
}

std::pair<NodeId, bool> dedup_object(MemoryStore& store, const std::vector<float>& feature,
                                     double tau_sim) {
    auto best = store.most_similar_object(feature);  // throws on zero vector
    if (best && best->second >= tau_sim) return {best->first, true};
    return {store.add_node(NodeKind::Object, feature), false};
}

SetBuilder::SetBuilder(MemoryStore& store, const FeatureProvider& features, BuildOptions opts)
    : store_(store), features_(features), opts_(opts) {}

NodeId SetBuilder::ensure_object(ObjKind kind) {
    auto [id, reused] = dedup_object(store_, features_.object_feature(kind), store_.tau_sim());
    if (!reused) store_.mutable_node(id).meta["key"] = to_string(kind);
    return id;
}

NodeId SetBuilder::ensure_interaction(Action action, ObjKind target) {
    const std::vector<float> feature = features_.interaction_feature(action, target);
    std::ostringstream key;
    key << to_string(action) << ":" << to_string(target);
    for (const auto& [id, n] : store_.nodes()) {
        if (n.kind != NodeKind::Interaction) continue;
        auto it = n.meta.find("key");
        if (it != n.meta.end() && it->second == key.str()) return id;
    }
    return store_.add_node(NodeKind::Interaction, feature, {{"key", key.str()}});
}

std::vector<NodeId> SetBuilder::attach_state_objects(NodeId state_id, const Observation& obs) {
    std::set<ObjKind> kinds;
    for (const auto& o : obs.objects) kinds.insert(o.kind);
    std::vector<NodeId> out;
    for (ObjKind k : kinds) {
        NodeId oid = ensure_object(k);
        store_.add_edge(state_id, EdgeKind::HasObject, oid);
        out.push_back(oid);
    }
    return out;
}

std::optional<ObjKind> SetBuilder::contact_target(const TraceStep& step) const {
    const Action a = static_cast<Action>(step.action);
    if (a != Action::Pickup && a != Action::Toggle) return std::nullopt;
    constexpr int dx[4] = {0, 1, 0, -1};
    constexpr int dy[4] = {-1, 0, 1, 0};
    const int fx = step.state.agent_x + dx[step.state.heading];
    const int fy = step.state.agent_y + dy[step.state.heading];
    for (const auto& o : step.state.objects)
        if (o.x == fx && o.y == fy && o.kind != ObjKind::Wall) return o.kind;
    return std::nullopt;
}

SetSubgraph SetBuilder::build_set(const EpisodeTrace& trace) {
    validate_trace(trace);
    const SetLabel label = label_episode(trace, opts_.step_cap);
    std::ostringstream content_key;
    content_key << trace.task << ":" << trace.seed << ":" << trace.steps.size();

    NodeId set_id = store_.add_node(NodeKind::Set, features_.set_feature(),
                                    {{"task", trace.task},
                                     {"label", to_string(label)},
                                     {"seed", std::to_string(trace.seed)},
                                     {"key", content_key.str()}});
    std::set<NodeId> members;
    const int T = static_cast<int>(trace.steps.size());
    std::vector<NodeId> states;
    states.reserve(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) {
        const Observation& obs = t < T ? trace.steps[static_cast<std::size_t>(t)].state
                                       : trace.steps.back().next_state;
        NodeId sid = store_.add_node(NodeKind::State, features_.state_feature(obs),
                                     {{"t", std::to_string(t)}});
        store_.add_edge(set_id, EdgeKind::HasState, sid);
        if (t > 0) store_.add_edge(states.back(), EdgeKind::Precedes, sid);
        for (NodeId oid : attach_state_objects(sid, obs)) members.insert(oid);
        states.push_back(sid);
        members.insert(sid);
    }
    for (int t = 0; t < T; ++t) {
        const TraceStep& step = trace.steps[static_cast<std::size_t>(t)];
        const Action action = static_cast<Action>(step.action);
        NodeId aff = store_.add_node(NodeKind::Affordance,
                                     features_.affordance_feature(action, step.reward),
                                     {{"t", std::to_string(t)},
                                      {"action", std::to_string(step.action)},
                                      {"reward", std::to_string(step.reward)}});
        store_.add_edge(states[static_cast<std::size_t>(t)], EdgeKind::Outcome, aff);
        store_.add_edge(aff, EdgeKind::Influences, states[static_cast<std::size_t>(t) + 1]);
        members.insert(aff);
        if (opts_.interaction_nodes) {
            auto target = contact_target(step);
            if (target) {
                NodeId inter = ensure_interaction(action, *target);
                NodeId obj = ensure_object(*target);
                store_.add_edge(inter, EdgeKind::DependsOn, obj);
                store_.add_edge(aff, EdgeKind::EmergesFrom, inter);
                members.insert(inter);
                members.insert(obj);
            }
        }
    }
    store_.register_set(set_id, std::vector<NodeId>(members.begin(), members.end()));
    return store_.get_set_subgraph(set_id);
}

SetSubgraph SetBuilder::build_partial_window(const EpisodeTrace& so_far, int t, int k) {
    if (t < 0) throw ConfigError("build_partial_window: t must be >= 0");
    if (k < 1) throw ConfigError("build_partial_window: k must be >= 1");
    if (t > static_cast<int>(so_far.steps.size()))
        throw ConfigError("build_partial_window: t beyond the trace prefix");
    const int lo = std::max(0, t - k + 1);

    NodeId set_id = store_.add_node(
        NodeKind::Set, features_.set_feature(),
        {{"task", so_far.task}, {"window", "1"}, {"t", std::to_string(t)}});
    std::set<NodeId> members;
    std::vector<NodeId> states;
    for (int i = lo; i <= t; ++i) {
        const Observation& obs = i < static_cast<int>(so_far.steps.size())
                                     ? so_far.steps[static_cast<std::size_t>(i)].state
                                     : so_far.steps.back().next_state;
        NodeId sid = store_.add_node(NodeKind::State, features_.state_feature(obs),
                                     {{"t", std::to_string(i)}});
        store_.add_edge(set_id, EdgeKind::HasState, sid);
        if (!states.empty()) store_.add_edge(states.back(), EdgeKind::Precedes, sid);
        for (NodeId oid : attach_state_objects(sid, obs)) members.insert(oid);
        states.push_back(sid);
        members.insert(sid);
    }
    for (int i = lo; i < t; ++i) {
        const TraceStep& step = so_far.steps[static_cast<std::size_t>(i)];
        const Action action = static_cast<Action>(step.action);
        NodeId aff = store_.add_node(NodeKind::Affordance,
                                     features_.affordance_feature(action, step.reward),
                                     {{"t", std::to_string(i)},
                                      {"action", std::to_string(step.action)}});
        store_.add_edge(states[static_cast<std::size_t>(i - lo)], EdgeKind::Outcome, aff);
        store_.add_edge(aff, EdgeKind::Influences, states[static_cast<std::size_t>(i - lo) + 1]);
        members.insert(aff);
        if (opts_.interaction_nodes) {
            auto target = contact_target(step);
            if (target) {
                NodeId inter = ensure_interaction(action, *target);
                NodeId obj = ensure_object(*target);
                store_.add_edge(inter, EdgeKind::DependsOn, obj);
                store_.add_edge(aff, EdgeKind::EmergesFrom, inter);
                members.insert(inter);
                members.insert(obj);
            }
        }
    }
    store_.register_set(set_id, std::vector<NodeId>(members.begin(), members.end()));
    return store_.get_set_subgraph(set_id);
}

// ---- WorkingMemory ------------------------------------------------------------

namespace {

StoreConfig wm_store_config(const FeatureProvider& features) {
    StoreConfig cfg = features.store_config();
    cfg.first_id = WorkingMemory::kLocalIdBase;
    return cfg;
}

}  // namespace

WorkingMemory::WorkingMemory(const FeatureProvider& features, BuildOptions opts, std::string task)
    : store_(wm_store_config(features)), builder_(store_, features, opts), task_(std::move(task)) {}

void WorkingMemory::begin_episode(const Observation& first_obs) {
    if (!state_ids_.empty()) throw ConfigError("begin_episode called twice");
    NodeId sid = store_.add_node(NodeKind::State, builder_.features_.state_feature(first_obs),
                                 {{"t", "0"}});
    builder_.attach_state_objects(sid, first_obs);
    state_ids_.push_back(sid);
    last_obs_ = first_obs;
}

void WorkingMemory::record_step(int action, double reward, const Observation& next_obs) {
    if (state_ids_.empty()) throw ConfigError("record_step before begin_episode");
    const int t = static_cast<int>(state_ids_.size());
    NodeId sid = store_.add_node(NodeKind::State, builder_.features_.state_feature(next_obs),
                                 {{"t", std::to_string(t)}});
    builder_.attach_state_objects(sid, next_obs);
    store_.add_edge(state_ids_.back(), EdgeKind::Precedes, sid);
    NodeId aff = store_.add_node(
        NodeKind::Affordance,
        builder_.features_.affordance_feature(static_cast<Action>(action), reward),
        {{"t", std::to_string(t - 1)}, {"action", std::to_string(action)}});
    store_.add_edge(state_ids_.back(), EdgeKind::Outcome, aff);
    store_.add_edge(aff, EdgeKind::Influences, sid);
    if (builder_.opts_.interaction_nodes) {
        TraceStep probe;
        probe.state = last_obs_;
        probe.action = action;
        auto target = builder_.contact_target(probe);
        if (target) {
            NodeId inter = builder_.ensure_interaction(static_cast<Action>(action), *target);
            NodeId obj = builder_.ensure_object(*target);
            store_.add_edge(inter, EdgeKind::DependsOn, obj);
            store_.add_edge(aff, EdgeKind::EmergesFrom, inter);
        }
    }
    state_ids_.push_back(sid);
    last_obs_ = next_obs;
}

NodeId WorkingMemory::current_state() const {
    if (state_ids_.empty()) throw ConfigError("working memory has no states");
    return state_ids_.back();
}

SetSubgraph WorkingMemory::window(int k) {
    if (k < 1) throw ConfigError("window: k must be >= 1");
    if (state_ids_.empty()) throw ConfigError("window on empty working memory");
    const int count = std::min<int>(k, static_cast<int>(state_ids_.size()));
    std::vector<NodeId> win(state_ids_.end() - count, state_ids_.end());

    NodeId root = store_.add_node(
        NodeKind::Set, builder_.features_.set_feature(),
        {{"task", task_}, {"window", "1"}, {"w", std::to_string(next_window_index_++)}});
    std::set<NodeId> members(win.begin(), win.end());
    for (NodeId sid : win) store_.add_edge(root, EdgeKind::HasState, sid);

    // collect non-state neighborhood without crossing states outside the
    // window or other Set roots
    std::set<NodeId> win_states(win.begin(), win.end());
    std::deque<NodeId> frontier(win.begin(), win.end());
    while (!frontier.empty()) {
        NodeId cur = frontier.front();
        frontier.pop_front();
        for (const auto& adj : store_.adjacency(cur)) {
            if (members.count(adj.peer)) continue;
            const NodeKind kind = store_.node(adj.peer).kind;
            if (kind == NodeKind::Set) continue;
            if (kind == NodeKind::State && !win_states.count(adj.peer)) continue;
            members.insert(adj.peer);
            frontier.push_back(adj.peer);
        }
    }
    store_.register_set(root, std::vector<NodeId>(members.begin(), members.end()));
    return store_.get_set_subgraph(root);
}

}  // namespace setle
