#pragma once

// Deterministic symbolic gridworld in the MiniGrid family. Layouts are pure
// functions of (task, seed); stepping is pure given the world state, so any
// number of environments can run in parallel.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "setle/errors.hpp"
#include "setle/rng.hpp"

namespace setle {

enum class Action { TurnLeft = 0, TurnRight, Forward, Pickup, Drop, Toggle };
constexpr int kActionCount = 6;
const char* to_string(Action a);

enum class ObjKind { Key = 0, Door, Goal, Wall };
const char* to_string(ObjKind k);
ObjKind obj_kind_from_string(const std::string& s);

struct WorldObject {
    ObjKind kind;
    int x = 0, y = 0;
    bool open = false;    // doors only
    bool locked = false;  // doors only
};

// Full symbolic observability: every object with position and flags.
struct Observation {
    int width = 0, height = 0;
    int agent_x = 0, agent_y = 0;
    int heading = 0;  // 0=N, 1=E, 2=S, 3=W
    bool carrying_key = false;
    std::vector<WorldObject> objects;  // sorted by (y, x, kind)
};

struct TaskSpec {
    enum class Family { Empty, DoorKey };
    Family family = Family::Empty;
    int size = 5;

    std::string name() const;
};

TaskSpec parse_task(const std::string& name);  // "Empty-5", "DoorKey-8"

struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool done = false;
};

class GridWorld {
public:
    static GridWorld make(const TaskSpec& task, std::uint64_t seed);

    Observation observe() const;
    StepResult step(Action a);  // throws ConfigError when already done

    bool done() const { return done_; }
    bool goal_reached() const { return goal_reached_; }
    int step_count() const { return step_count_; }
    int max_steps() const { return max_steps_; }
    const TaskSpec& task() const { return task_; }

    void set_max_steps(int m) { max_steps_ = m; }

private:
    bool is_wall(int x, int y) const;
    const WorldObject* object_at(int x, int y) const;
    WorldObject* object_at(int x, int y);
    std::pair<int, int> front_cell() const;

    TaskSpec task_;
    int width_ = 0, height_ = 0;
    std::vector<bool> walls_;  // width*height, border + inner walls
    std::vector<WorldObject> objects_;  // key/door/goal (walls implicit)
    int agent_x_ = 1, agent_y_ = 1, heading_ = 1;
    bool carrying_key_ = false;
    int step_count_ = 0, max_steps_ = 0;
    bool done_ = false, goal_reached_ = false;
};

// Shortest action sequence to the goal (Drop excluded from the search);
// nullopt when unreachable.
std::optional<std::vector<Action>> bfs_plan(const GridWorld& world);

// ---- episode traces ------------------------------------------------------------

struct TraceStep {
    Observation state;
    int action = 0;
    double reward = 0.0;
    Observation next_state;
    bool done = false;
};

struct EpisodeTrace {
    std::string task;
    std::uint64_t seed = 0;
    bool goal_reached = false;
    std::vector<TraceStep> steps;
};

// Uniform-random policy until done or step_cap.
EpisodeTrace random_rollout(const TaskSpec& task, std::uint64_t seed, int step_cap);

// Mixes a BFS-optimal action (probability 1 - p_random) with uniform noise;
// used to gather successful episodes on tasks where a pure random policy
// essentially never succeeds.
EpisodeTrace guided_rollout(const TaskSpec& task, std::uint64_t seed, int step_cap,
                            double p_random);

}  // namespace setle
