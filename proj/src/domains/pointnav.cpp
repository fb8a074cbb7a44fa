#include "aiprobe/domains/pointnav.hpp"

#include "aiprobe/binning.hpp"
#include "aiprobe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

namespace aiprobe::pointnav {

namespace {

    constexpr int kUp = 0;
    constexpr int kDown = 1;
    constexpr int kLeft = 2;
    constexpr int kRight = 3;
    constexpr std::array<double, 4> kMoveX = {0.0, 0.0, -1.0, 1.0};
    constexpr std::array<double, 4> kMoveY = {1.0, -1.0, 0.0, 0.0};

    struct Hazard {
        double x, y, radius;
    };

    struct World {
        double arena = 0.0, step = 0.0, goal_radius = 0.0;
        StateSchema schema;
        std::size_t ax = 0, ay = 0;
        std::string agent_id;
        std::vector<Hazard> hazards; // from the start state
        SimState start_values, goal_values;
        double gx = 0.0, gy = 0.0;

        bool hazard_hit(double x, double y) const {
            for (const Hazard& h : hazards) {
                double dx = x - h.x, dy = y - h.y;
                if (dx * dx + dy * dy <= h.radius * h.radius) return true;
            }
            return false;
        }

        bool goal_hit(double x, double y) const {
            double dx = x - gx, dy = y - gy;
            return dx * dx + dy * dy <= goal_radius * goal_radius;
        }

        // Same arithmetic in the simulator and in agent models, so replayed
        // positions agree bit for bit.
        bool try_move(double x, double y, int action, double& nx, double& ny) const {
            nx = x + kMoveX[static_cast<std::size_t>(action)] * step;
            ny = y + kMoveY[static_cast<std::size_t>(action)] * step;
            if (nx < 0.0 || nx > arena || ny < 0.0 || ny > arena) {
                nx = x;
                ny = y;
                return false;
            }
            return true;
        }
    };

    World build_world(const Task& task) {
        if (!task.config) throw SimError("pointnav: task has no configuration");
        const EnvironmentConfig& config = *task.config;
        World world;

        Assignment env = config.env_assignment();
        for (const char* required : {"arena_size", "step_length", "goal_radius"})
            if (!env.count(required)) throw SimError(std::string("pointnav: configuration lacks ") + required);
        world.arena = assignment_number(env, "arena_size");
        world.step = assignment_number(env, "step_length");
        world.goal_radius = assignment_number(env, "goal_radius");
        if (world.arena <= 0 || world.step <= 0 || world.goal_radius <= 0)
            throw SimError("pointnav: arena_size, step_length, and goal_radius must be positive");

        std::vector<DimensionSpec> dims = extract_dimensions(config.resolved, DimensionLevel::task, env);
        world.schema = schema_from_dimensions(dims);

        if (config.resolved.agents.size() != 1) throw SimError("pointnav: expected exactly one agent");
        world.agent_id = config.resolved.agents.front().id;
        world.ax = world.schema.index_of(world.agent_id + ".x");
        world.ay = world.schema.index_of(world.agent_id + ".y");

        world.start_values = state_values_from_assignment(world.schema, task.start_state);
        world.goal_values = state_values_from_assignment(world.schema, task.goal_state);
        world.gx = world.goal_values.values[world.ax];
        world.gy = world.goal_values.values[world.ay];

        for (const EntityTemplate& object : config.resolved.objects) {
            if (object.type != "hazard") continue;
            Hazard hazard{world.start_values.values[world.schema.index_of(object.id + ".x")],
                          world.start_values.values[world.schema.index_of(object.id + ".y")],
                          world.start_values.values[world.schema.index_of(object.id + ".radius")]};
            world.hazards.push_back(hazard);
        }
        return world;
    }

    class PointNavSimulator final : public Simulator {
      public:
        explicit PointNavSimulator(const Task& task) : world_(build_world(task)) {
            schema_ = world_.schema;
            actions_ = {"up", "down", "left", "right"};
            coverage_dims_ = {
                {"x", false, 0.0, world_.arena, 0},
                {"y", false, 0.0, world_.arena, 0},
                {"h", true, 0.0, 0.0, 2},
            };
        }

        SimState initial_state() const override {
            SimState s = world_.start_values;
            finalize(s);
            return s;
        }

        SimState goal_state() const override {
            SimState s = world_.goal_values;
            finalize(s);
            return s;
        }

        SimState apply_action(const SimState& state, int action) const override {
            if (action < 0 || action > 3) throw SimError("pointnav: unknown action index " + std::to_string(action));
            SimState next = state;
            double nx, ny;
            world_.try_move(state.values[world_.ax], state.values[world_.ay], action, nx, ny);
            next.values[world_.ax] = nx;
            next.values[world_.ay] = ny;
            finalize(next);
            return next;
        }

        std::uint64_t default_max_steps() const override {
            int h = std::abs(bin_index(world_.start_values.values[world_.ax], 0.0, world_.arena, 100) -
                             bin_index(world_.gx, 0.0, world_.arena, 100)) +
                    std::abs(bin_index(world_.start_values.values[world_.ay], 0.0, world_.arena, 100) -
                             bin_index(world_.gy, 0.0, world_.arena, 100));
            return 10ULL * static_cast<std::uint64_t>(std::max(50, h));
        }

        const std::vector<CoverageDim>& coverage_dims() const override { return coverage_dims_; }

        std::vector<double> coverage_values(const SimState& state) const override {
            return {state.values[world_.ax], state.values[world_.ay], state.unfavorable ? 1.0 : 0.0};
        }

      private:
        void finalize(SimState& state) const {
            double x = state.values[world_.ax], y = state.values[world_.ay];
            state.unfavorable = world_.hazard_hit(x, y);
            state.at_goal = world_.goal_hit(x, y);
        }

        World world_;
        std::vector<CoverageDim> coverage_dims_;
    };

    // Plans a move-lattice path from the start with breadth-first search on
    // its own model and replays it. Defective variants drop hazards from the
    // model, so their paths may cross one.
    class PointNavAgent final : public Agent {
      public:
        PointNavAgent(Variant variant, const Task& task) : world_(build_world(task)), variant_(variant) {
            observation_keys_ = {world_.agent_id + ".x", world_.agent_id + ".y"};
            if (variant_ == Variant::base) observation_keys_.push_back("hazard");
            plan_path();
        }

        std::string name() const override { return "pointnav/" + std::string(variant_name(variant_)); }
        const std::vector<std::string>& observation_keys() const override { return observation_keys_; }

        int act(const std::vector<double>& observation) override {
            auto it = path_actions_.find(position_key(observation[0], observation[1]));
            if (it == path_actions_.end()) return kUp; // off the plan: drift until the cycle check trips
            return it->second;
        }

      private:
        static std::string position_key(double x, double y) {
            return format_double_sig12(x) + "|" + format_double_sig12(y);
        }

        bool model_position_ok(double x, double y) const {
            if (variant_ != Variant::base) return true;
            return !world_.hazard_hit(x, y);
        }

        void plan_path() {
            constexpr std::size_t kNodeCap = 1u << 20;
            struct Node {
                double x, y;
                std::size_t parent;
                int action;
            };
            std::vector<Node> nodes;
            std::unordered_map<std::string, std::size_t> visited;

            double x0 = world_.start_values.values[world_.ax];
            double y0 = world_.start_values.values[world_.ay];
            if (world_.goal_hit(x0, y0)) return; // empty plan
            if (!model_position_ok(x0, y0)) return;

            nodes.push_back({x0, y0, 0, -1});
            visited.emplace(position_key(x0, y0), 0);
            std::deque<std::size_t> frontier{0};
            while (!frontier.empty() && nodes.size() < kNodeCap) {
                std::size_t at = frontier.front();
                frontier.pop_front();
                for (int action = 0; action < 4; ++action) {
                    double nx, ny;
                    if (!world_.try_move(nodes[at].x, nodes[at].y, action, nx, ny)) continue;
                    if (!model_position_ok(nx, ny)) continue;
                    std::string key = position_key(nx, ny);
                    if (visited.count(key)) continue;
                    visited.emplace(std::move(key), nodes.size());
                    nodes.push_back({nx, ny, at, action});
                    if (world_.goal_hit(nx, ny)) {
                        // Record the action taken at each position along the path.
                        for (std::size_t node = nodes.size() - 1; nodes[node].action >= 0; node = nodes[node].parent)
                            path_actions_[position_key(nodes[nodes[node].parent].x, nodes[nodes[node].parent].y)] =
                                nodes[node].action;
                        return;
                    }
                    frontier.push_back(nodes.size() - 1);
                }
            }
        }

        World world_;
        Variant variant_;
        std::vector<std::string> observation_keys_;
        std::unordered_map<std::string, int> path_actions_;
    };

    class PointNavDomain final : public DomainPlugin {
      public:
        std::string name() const override { return "pointnav"; }

        std::vector<std::string> agent_variants() const override {
            return {"base", "inacc_state", "inacc_reward", "both"};
        }

        std::unique_ptr<Simulator> make_simulator(const Task& task) const override {
            return std::make_unique<PointNavSimulator>(task);
        }

        std::unique_ptr<Agent> make_agent(const std::string& variant, const Task& task) const override {
            return make_pointnav_agent(variant_from_name(variant), task);
        }
    };

} // namespace

Variant variant_from_name(std::string_view name) {
    if (name == "base") return Variant::base;
    if (name == "inacc_state") return Variant::inacc_state;
    if (name == "inacc_reward") return Variant::inacc_reward;
    if (name == "both") return Variant::both;
    throw SimError("pointnav: unknown agent variant '" + std::string(name) + "'");
}

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::base: return "base";
        case Variant::inacc_state: return "inacc_state";
        case Variant::inacc_reward: return "inacc_reward";
        case Variant::both: return "both";
    }
    return "?";
}

std::string default_template_xml() {
    return R"(<Environment id="pointnav_arena" type="pointnav">
  <Attribute>
    <Name value="arena_size"/>
    <Description value="Side length of the square arena."/>
    <DataType value="real"/>
    <CurrentValue value="20.0"/>
    <Mutable value="true"/>
    <Constraint Range="[10, 40]"/>
  </Attribute>
  <Attribute>
    <Name value="hazard_count"/>
    <Description value="Number of circular hazard regions."/>
    <DataType value="int"/>
    <CurrentValue value="2"/>
    <Mutable value="true"/>
    <Constraint Range="[0, 6]"/>
  </Attribute>
  <Attribute>
    <Name value="step_length"/>
    <Description value="Distance covered by one move action."/>
    <DataType value="real"/>
    <CurrentValue value="1.0"/>
    <Mutable value="false"/>
    <Constraint Range="[0.1, 5]"/>
  </Attribute>
  <Attribute>
    <Name value="goal_radius"/>
    <Description value="Radius of the goal disc."/>
    <DataType value="real"/>
    <CurrentValue value="1.0"/>
    <Mutable value="false"/>
    <Constraint Range="[0.1, 5]"/>
  </Attribute>
  <Objects>
    <Object id="hazard" type="hazard" count="hazard_count">
      <Attribute>
        <Name value="x"/>
        <Description value="Hazard center x."/>
        <DataType value="real"/>
        <CurrentValue value="5.0"/>
        <Mutable value="true"/>
        <Constraint Range="[0, arena_size]"/>
      </Attribute>
      <Attribute>
        <Name value="y"/>
        <Description value="Hazard center y."/>
        <DataType value="real"/>
        <CurrentValue value="5.0"/>
        <Mutable value="true"/>
        <Constraint Range="[0, arena_size]"/>
      </Attribute>
      <Attribute>
        <Name value="radius"/>
        <Description value="Hazard radius."/>
        <DataType value="real"/>
        <CurrentValue value="1.0"/>
        <Mutable value="true"/>
        <Constraint Range="[0.5, 4]"/>
      </Attribute>
    </Object>
  </Objects>
  <Agents>
    <Agent id="agent" type="navigator">
      <Attribute>
        <Name value="x"/>
        <Description value="Agent x."/>
        <DataType value="real"/>
        <CurrentValue value="1.0"/>
        <Mutable value="true"/>
        <Constraint Range="[0, arena_size]"/>
      </Attribute>
      <Attribute>
        <Name value="y"/>
        <Description value="Agent y."/>
        <DataType value="real"/>
        <CurrentValue value="1.0"/>
        <Mutable value="true"/>
        <Constraint Range="[0, arena_size]"/>
      </Attribute>
    </Agent>
  </Agents>
</Environment>
)";
}

std::unique_ptr<Simulator> make_simulator(const Task& task) { return std::make_unique<PointNavSimulator>(task); }

std::unique_ptr<Agent> make_pointnav_agent(Variant variant, const Task& task) {
    return std::make_unique<PointNavAgent>(variant, task);
}

std::unique_ptr<DomainPlugin> make_domain() { return std::make_unique<PointNavDomain>(); }

} // namespace aiprobe::pointnav
