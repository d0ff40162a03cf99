#include "setle/envsim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

namespace setle {

const char* to_string(Action a) {
    switch (a) {
        case Action::TurnLeft: return "TurnLeft";
        case Action::TurnRight: return "TurnRight";
        case Action::Forward: return "Forward";
        case Action::Pickup: return "Pickup";
        case Action::Drop: return "Drop";
        case Action::Toggle: return "Toggle";
    }
    return "?";
}

const char* to_string(ObjKind k) {
    switch (k) {
        case ObjKind::Key: return "Key";
        case ObjKind::Door: return "Door";
        case ObjKind::Goal: return "Goal";
        case ObjKind::Wall: return "Wall";
    }
    return "?";
}

ObjKind obj_kind_from_string(const std::string& s) {
    for (int i = 0; i < 4; ++i)
        if (s == to_string(static_cast<ObjKind>(i))) return static_cast<ObjKind>(i);
    throw DataError("unknown object kind: " + s);
}

std::string TaskSpec::name() const {
    std::ostringstream os;
    os << (family == Family::Empty ? "Empty" : "DoorKey") << "-" << size;
    return os.str();
}

TaskSpec parse_task(const std::string& name) {
    auto dash = name.find('-');
    if (dash == std::string::npos) throw ConfigError("bad task name: " + name);
    const std::string fam = name.substr(0, dash);
    TaskSpec spec;
    if (fam == "Empty")
        spec.family = TaskSpec::Family::Empty;
    else if (fam == "DoorKey")
        spec.family = TaskSpec::Family::DoorKey;
    else
        throw ConfigError("unknown task family: " + fam);
    try {
        spec.size = std::stoi(name.substr(dash + 1));
    } catch (...) {
        throw ConfigError("bad task size in: " + name);
    }
    return spec;
}

// ---- GridWorld -------------------------------------------------------------------

namespace {
constexpr int kDX[4] = {0, 1, 0, -1};  // N, E, S, W
constexpr int kDY[4] = {-1, 0, 1, 0};
}  // namespace

GridWorld GridWorld::make(const TaskSpec& task, std::uint64_t seed) {
    const int n = task.size;
    const int min_size = task.family == TaskSpec::Family::Empty ? 4 : 5;
    if (n < min_size)
        throw ConfigError("grid size " + std::to_string(n) + " too small for task " + task.name());

    GridWorld w;
    w.task_ = task;
    w.width_ = n;
    w.height_ = n;
    w.max_steps_ = 4 * n * n;
    w.walls_.assign(static_cast<std::size_t>(n) * n, false);
    auto wall_at = [&](int x, int y) -> std::vector<bool>::reference {
        return w.walls_[static_cast<std::size_t>(y) * n + x];
    };
    for (int x = 0; x < n; ++x) {
        wall_at(x, 0) = true;
        wall_at(x, n - 1) = true;
    }
    for (int y = 0; y < n; ++y) {
        wall_at(0, y) = true;
        wall_at(n - 1, y) = true;
    }

    Rng rng = Rng::keyed(seed, fnv1a("layout"), fnv1a(task.name()));
    if (task.family == TaskSpec::Family::Empty) {
        w.agent_x_ = 1;
        w.agent_y_ = 1;
        w.heading_ = 1;  // east
        w.objects_.push_back({ObjKind::Goal, n - 2, n - 2, false, false});
    } else {
        const int split = 2 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n - 4)));
        for (int y = 1; y < n - 1; ++y) wall_at(split, y) = true;
        const int door_y = 1 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(n - 2)));
        wall_at(split, door_y) = false;
        w.objects_.push_back({ObjKind::Door, split, door_y, false, true});
        w.objects_.push_back({ObjKind::Goal, n - 2, n - 2, false, false});

        // agent and key on the left side, distinct cells
        std::vector<std::pair<int, int>> free_cells;
        for (int y = 1; y < n - 1; ++y)
            for (int x = 1; x < split; ++x) free_cells.emplace_back(x, y);
        const auto agent_cell =
            free_cells[rng.next_below(static_cast<std::uint32_t>(free_cells.size()))];
        free_cells.erase(std::remove(free_cells.begin(), free_cells.end(), agent_cell),
                         free_cells.end());
        const auto key_cell =
            free_cells[rng.next_below(static_cast<std::uint32_t>(free_cells.size()))];
        w.agent_x_ = agent_cell.first;
        w.agent_y_ = agent_cell.second;
        w.heading_ = static_cast<int>(rng.next_below(4));
        w.objects_.push_back({ObjKind::Key, key_cell.first, key_cell.second, false, false});
    }
    std::sort(w.objects_.begin(), w.objects_.end(), [](const WorldObject& a, const WorldObject& b) {
        return std::tie(a.y, a.x, a.kind) < std::tie(b.y, b.x, b.kind);
    });
    return w;
}

bool GridWorld::is_wall(int x, int y) const {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return true;
    return walls_[static_cast<std::size_t>(y) * width_ + x];
}

const WorldObject* GridWorld::object_at(int x, int y) const {
    for (const auto& o : objects_)
        if (o.x == x && o.y == y) return &o;
    return nullptr;
}

WorldObject* GridWorld::object_at(int x, int y) {
    for (auto& o : objects_)
        if (o.x == x && o.y == y) return &o;
    return nullptr;
}

std::pair<int, int> GridWorld::front_cell() const {
    return {agent_x_ + kDX[heading_], agent_y_ + kDY[heading_]};
}

Observation GridWorld::observe() const {
    Observation obs;
    obs.width = width_;
    obs.height = height_;
    obs.agent_x = agent_x_;
    obs.agent_y = agent_y_;
    obs.heading = heading_;
    obs.carrying_key = carrying_key_;
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            if (walls_[static_cast<std::size_t>(y) * width_ + x])
                obs.objects.push_back({ObjKind::Wall, x, y, false, false});
    for (const auto& o : objects_) obs.objects.push_back(o);
    std::sort(obs.objects.begin(), obs.objects.end(),
              [](const WorldObject& a, const WorldObject& b) {
                  return std::tie(a.y, a.x, a.kind) < std::tie(b.y, b.x, b.kind);
              });
    return obs;
}

StepResult GridWorld::step(Action a) {
    if (done_) throw ConfigError("step() called on a finished episode");
    double reward = 0.0;
    switch (a) {
        case Action::TurnLeft:
            heading_ = (heading_ + 3) % 4;
            break;
        case Action::TurnRight:
            heading_ = (heading_ + 1) % 4;
            break;
        case Action::Forward: {
            auto [fx, fy] = front_cell();
            bool blocked = is_wall(fx, fy);
            const WorldObject* obj = object_at(fx, fy);
            if (obj) {
                if (obj->kind == ObjKind::Key) blocked = true;
                if (obj->kind == ObjKind::Door && !obj->open) blocked = true;
            }
            if (!blocked) {
                agent_x_ = fx;
                agent_y_ = fy;
                if (obj && obj->kind == ObjKind::Goal) {
                    done_ = true;
                    goal_reached_ = true;
                }
            }
            break;
        }
        case Action::Pickup: {
            auto [fx, fy] = front_cell();
            WorldObject* obj = object_at(fx, fy);
            if (obj && obj->kind == ObjKind::Key && !carrying_key_) {
                carrying_key_ = true;
                objects_.erase(std::remove_if(objects_.begin(), objects_.end(),
                                              [&](const WorldObject& o) {
                                                  return o.kind == ObjKind::Key && o.x == fx &&
                                                         o.y == fy;
                                              }),
                               objects_.end());
            }
            break;
        }
        case Action::Drop: {
            auto [fx, fy] = front_cell();
            if (carrying_key_ && !is_wall(fx, fy) && object_at(fx, fy) == nullptr) {
                carrying_key_ = false;
                objects_.push_back({ObjKind::Key, fx, fy, false, false});
                std::sort(objects_.begin(), objects_.end(),
                          [](const WorldObject& a, const WorldObject& b) {
                              return std::tie(a.y, a.x, a.kind) < std::tie(b.y, b.x, b.kind);
                          });
            }
            break;
        }
        case Action::Toggle: {
            auto [fx, fy] = front_cell();
            WorldObject* obj = object_at(fx, fy);
            if (obj && obj->kind == ObjKind::Door) {
                if (obj->locked) {
                    if (carrying_key_) {
                        obj->locked = false;
                        obj->open = true;
                    }
                } else {
                    obj->open = !obj->open;
                }
            }
            break;
        }
    }
    ++step_count_;
    if (goal_reached_) {
        reward = 1.0 - 0.9 * (static_cast<double>(step_count_) / max_steps_);
    } else if (step_count_ >= max_steps_) {
        done_ = true;
    }
    return {observe(), reward, done_};
}

// ---- planning ---------------------------------------------------------------------

std::optional<std::vector<Action>> bfs_plan(const GridWorld& world) {
    if (world.done()) return std::vector<Action>{};
    // Search over env clones; Drop never shortens a path so it is skipped.
    const Action kMoves[5] = {Action::TurnLeft, Action::TurnRight, Action::Forward,
                              Action::Pickup, Action::Toggle};
    auto state_key = [](const GridWorld& w) {
        Observation o = w.observe();
        std::ostringstream os;
        os << o.agent_x << ',' << o.agent_y << ',' << o.heading << ',' << o.carrying_key;
        for (const auto& obj : o.objects)
            if (obj.kind != ObjKind::Wall)
                os << ';' << static_cast<int>(obj.kind) << ',' << obj.x << ',' << obj.y << ','
                   << obj.open << ',' << obj.locked;
        return os.str();
    };

    GridWorld start = world;
    start.set_max_steps(1 << 20);  // plan against dynamics, not the step budget
    std::map<std::string, std::pair<std::string, Action>> parent;
    std::deque<GridWorld> frontier{start};
    parent[state_key(start)] = {"", Action::TurnLeft};
    while (!frontier.empty()) {
        GridWorld cur = frontier.front();
        frontier.pop_front();
        const std::string cur_key = state_key(cur);
        for (Action a : kMoves) {
            GridWorld next = cur;
            next.step(a);
            const std::string key = state_key(next);
            if (parent.count(key)) continue;
            parent[key] = {cur_key, a};
            if (next.goal_reached()) {
                std::vector<Action> plan;
                std::string k = key;
                while (k != state_key(start)) {
                    auto& [pk, pa] = parent[k];
                    plan.push_back(pa);
                    k = pk;
                }
                std::reverse(plan.begin(), plan.end());
                return plan;
            }
            frontier.push_back(next);
        }
    }
    return std::nullopt;
}

// ---- rollouts ----------------------------------------------------------------------

namespace {

EpisodeTrace rollout_impl(const TaskSpec& task, std::uint64_t seed, int step_cap,
                          double p_random) {
    GridWorld env = GridWorld::make(task, seed);
    Rng rng = Rng::keyed(seed, fnv1a("policy"), fnv1a(task.name()));
    EpisodeTrace trace;
    trace.task = task.name();
    trace.seed = seed;

    std::vector<Action> plan;
    for (int t = 0; t < step_cap && !env.done(); ++t) {
        Action a;
        if (p_random >= 1.0 || rng.next_double() < p_random) {
            a = static_cast<Action>(rng.next_below(kActionCount));
            plan.clear();
        } else {
            if (plan.empty()) {
                auto p = bfs_plan(env);
                if (p && !p->empty()) plan = *p;
            }
            if (plan.empty()) {
                a = static_cast<Action>(rng.next_below(kActionCount));
            } else {
                a = plan.front();
                plan.erase(plan.begin());
            }
        }
        TraceStep step;
        step.state = env.observe();
        step.action = static_cast<int>(a);
        StepResult r = env.step(a);
        step.reward = r.reward;
        step.next_state = r.obs;
        step.done = r.done;
        trace.steps.push_back(std::move(step));
    }
    trace.goal_reached = env.goal_reached();
    return trace;
}

}  // namespace

EpisodeTrace random_rollout(const TaskSpec& task, std::uint64_t seed, int step_cap) {
    return rollout_impl(task, seed, step_cap, 1.0);
}

EpisodeTrace guided_rollout(const TaskSpec& task, std::uint64_t seed, int step_cap,
                            double p_random) {
    if (p_random < 0.0 || p_random > 1.0) throw ConfigError("p_random must be in [0, 1]");
    return rollout_impl(task, seed, step_cap, p_random);
}

}  // namespace setle
