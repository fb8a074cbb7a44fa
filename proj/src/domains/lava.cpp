#include "aiprobe/domains/lava.hpp"

#include "aiprobe/errors.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <unordered_set>

namespace aiprobe::lava {

namespace {

    constexpr int kLeft = 0;
    constexpr int kRight = 1;
    constexpr int kForward = 2;

    // Compass order used for rotations: clockwise starting north.
    constexpr std::array<std::string_view, 4> kCompass = {"north", "east", "south", "west"};
    constexpr std::array<int, 4> kDx = {0, 1, 0, -1};
    constexpr std::array<int, 4> kDy = {1, 0, -1, 0};

    long long pack_cell(int x, int y) { return (static_cast<long long>(x) << 32) | static_cast<unsigned>(y); }

    // Everything both the simulator and the model-based agents need to know
    // about one (configuration, task) pair.
    struct World {
        int n = 0;
        StateSchema schema;
        std::size_t ax = 0, ay = 0, ad = 0; // agent slot indices
        std::string agent_id;
        // Per category index of the orientation slot:
        std::vector<int> dir_dx, dir_dy, left_of, right_of;
        std::unordered_set<long long> tiles; // start-state lava placement
        SimState start_values, goal_values;  // flags not yet derived
    };

    World build_world(const Task& task) {
        if (!task.config) throw SimError("lava: task has no configuration");
        const EnvironmentConfig& config = *task.config;
        World world;

        Assignment env = config.env_assignment();
        auto grid_it = env.find("grid_size");
        if (grid_it == env.end()) throw SimError("lava: configuration lacks a grid_size attribute");
        world.n = static_cast<int>(assignment_number(env, "grid_size"));
        if (world.n < 1) throw SimError("lava: grid_size must be at least 1");

        std::vector<DimensionSpec> dims = extract_dimensions(config.resolved, DimensionLevel::task, env);
        world.schema = schema_from_dimensions(dims);

        if (config.resolved.agents.size() != 1)
            throw SimError("lava: expected exactly one agent, got " + std::to_string(config.resolved.agents.size()));
        world.agent_id = config.resolved.agents.front().id;
        world.ax = world.schema.index_of(world.agent_id + ".x");
        world.ay = world.schema.index_of(world.agent_id + ".y");
        world.ad = world.schema.index_of(world.agent_id + ".d");

        const StateSlot& d_slot = world.schema.slots[world.ad];
        if (!d_slot.categorical) throw SimError("lava: agent orientation must be categorical");
        world.dir_dx.resize(d_slot.categories.size());
        world.dir_dy.resize(d_slot.categories.size());
        world.left_of.resize(d_slot.categories.size());
        world.right_of.resize(d_slot.categories.size());
        auto category_index = [&](std::string_view label) {
            auto it = std::find(d_slot.categories.begin(), d_slot.categories.end(), label);
            if (it == d_slot.categories.end())
                throw SimError("lava: orientation categories must include '" + std::string(label) + "'");
            return static_cast<int>(it - d_slot.categories.begin());
        };
        for (int c = 0; c < 4; ++c) {
            int idx = category_index(kCompass[static_cast<std::size_t>(c)]);
            world.dir_dx[static_cast<std::size_t>(idx)] = kDx[static_cast<std::size_t>(c)];
            world.dir_dy[static_cast<std::size_t>(idx)] = kDy[static_cast<std::size_t>(c)];
            world.left_of[static_cast<std::size_t>(idx)] = category_index(kCompass[static_cast<std::size_t>((c + 3) % 4)]);
            world.right_of[static_cast<std::size_t>(idx)] = category_index(kCompass[static_cast<std::size_t>((c + 1) % 4)]);
        }

        world.start_values = state_values_from_assignment(world.schema, task.start_state);
        world.goal_values = state_values_from_assignment(world.schema, task.goal_state);

        for (const EntityTemplate& object : config.resolved.objects) {
            if (object.type != "lava_tile") continue;
            std::size_t sx = world.schema.index_of(object.id + ".x");
            std::size_t sy = world.schema.index_of(object.id + ".y");
            world.tiles.insert(pack_cell(static_cast<int>(world.start_values.values[sx]),
                                         static_cast<int>(world.start_values.values[sy])));
        }
        return world;
    }

    class LavaSimulator final : public Simulator {
      public:
        explicit LavaSimulator(const Task& task) : world_(build_world(task)) {
            schema_ = world_.schema;
            actions_ = {"left", "right", "forward"};
            coverage_dims_ = {
                {"x", false, 1.0, static_cast<double>(world_.n), 0},
                {"y", false, 1.0, static_cast<double>(world_.n), 0},
                {"d", true, 0.0, 0.0, static_cast<int>(schema_.slots[world_.ad].categories.size())},
                {"l", true, 0.0, 0.0, 2},
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
            SimState next = state;
            int d = static_cast<int>(state.values[world_.ad]);
            switch (action) {
                case kLeft: next.values[world_.ad] = world_.left_of[static_cast<std::size_t>(d)]; break;
                case kRight: next.values[world_.ad] = world_.right_of[static_cast<std::size_t>(d)]; break;
                case kForward: {
                    int nx = static_cast<int>(state.values[world_.ax]) + world_.dir_dx[static_cast<std::size_t>(d)];
                    int ny = static_cast<int>(state.values[world_.ay]) + world_.dir_dy[static_cast<std::size_t>(d)];
                    // Walking into the boundary is a no-op.
                    if (nx >= 1 && nx <= world_.n && ny >= 1 && ny <= world_.n) {
                        next.values[world_.ax] = nx;
                        next.values[world_.ay] = ny;
                    }
                    break;
                }
                default: throw SimError("lava: unknown action index " + std::to_string(action));
            }
            finalize(next);
            return next;
        }

        std::uint64_t default_max_steps() const override {
            return 4ULL * static_cast<std::uint64_t>(world_.n) * static_cast<std::uint64_t>(world_.n);
        }

        const std::vector<CoverageDim>& coverage_dims() const override { return coverage_dims_; }

        std::vector<double> coverage_values(const SimState& state) const override {
            return {state.values[world_.ax], state.values[world_.ay], state.values[world_.ad],
                    state.unfavorable ? 1.0 : 0.0};
        }

      private:
        void finalize(SimState& state) const {
            state.unfavorable = world_.tiles.count(pack_cell(static_cast<int>(state.values[world_.ax]),
                                                             static_cast<int>(state.values[world_.ay]))) > 0;
            state.at_goal = true;
            for (std::size_t i = 0; i < schema_.slots.size(); ++i) {
                if (schema_.slots[i].scenario) continue;
                if (state.values[i] != world_.goal_values.values[i]) {
                    state.at_goal = false;
                    break;
                }
            }
        }

        World world_;
        std::vector<CoverageDim> coverage_dims_;
    };

    // Model-based planning agent. It computes shortest paths on its own model
    // of the grid and acts greedily; the defective variants' model treats
    // lava tiles as ordinary floor.
    class LavaAgent final : public Agent {
      public:
        LavaAgent(Variant variant, const Task& task) : world_(build_world(task)), variant_(variant) {
            observation_keys_ = {world_.agent_id + ".x", world_.agent_id + ".y", world_.agent_id + ".d"};
            if (variant_ == Variant::base) observation_keys_.push_back("hazard");
            compute_policy();
        }

        std::string name() const override { return "lava/" + std::string(variant_name(variant_)); }
        const std::vector<std::string>& observation_keys() const override { return observation_keys_; }

        int act(const std::vector<double>& observation) override {
            int x = static_cast<int>(observation[0]);
            int y = static_cast<int>(observation[1]);
            int d = static_cast<int>(observation[2]);
            if (x < 1 || x > world_.n || y < 1 || y > world_.n) return kLeft;
            int p = pose_index(x, y, d);
            if (policy_[static_cast<std::size_t>(p)] < 0) return kLeft; // no plan in this model: spin in place
            return policy_[static_cast<std::size_t>(p)];
        }

      private:
        int orientation_count() const { return static_cast<int>(world_.dir_dx.size()); }

        int pose_index(int x, int y, int d) const {
            return ((x - 1) * world_.n + (y - 1)) * orientation_count() + d;
        }

        bool model_cell_ok(int x, int y) const {
            if (x < 1 || x > world_.n || y < 1 || y > world_.n) return false;
            if (variant_ == Variant::base && world_.tiles.count(pack_cell(x, y))) return false;
            return true;
        }

        // Backward breadth-first search from the goal pose over the model's
        // transition graph; policy_[p] is the first action on a shortest
        // path from p in the model.
        void compute_policy() {
            const int dirs = orientation_count();
            const std::size_t poses = static_cast<std::size_t>(world_.n) * world_.n * dirs;
            policy_.assign(poses, -1);
            std::vector<int> dist(poses, -1);

            int gx = static_cast<int>(world_.goal_values.values[world_.ax]);
            int gy = static_cast<int>(world_.goal_values.values[world_.ay]);
            int gd = static_cast<int>(world_.goal_values.values[world_.ad]);
            if (!model_cell_ok(gx, gy)) return;

            std::deque<int> frontier;
            int goal = pose_index(gx, gy, gd);
            dist[static_cast<std::size_t>(goal)] = 0;
            frontier.push_back(goal);
            while (!frontier.empty()) {
                int q = frontier.front();
                frontier.pop_front();
                int qd = q % dirs;
                int qy = (q / dirs) % world_.n + 1;
                int qx = (q / dirs) / world_.n + 1;

                auto relax = [&](int px, int py, int pd, int action) {
                    if (!model_cell_ok(px, py)) return;
                    int p = pose_index(px, py, pd);
                    if (dist[static_cast<std::size_t>(p)] >= 0) return;
                    dist[static_cast<std::size_t>(p)] = dist[static_cast<std::size_t>(q)] + 1;
                    policy_[static_cast<std::size_t>(p)] = action;
                    frontier.push_back(p);
                };
                for (int pd = 0; pd < dirs; ++pd) {
                    if (world_.left_of[static_cast<std::size_t>(pd)] == qd) relax(qx, qy, pd, kLeft);
                    if (world_.right_of[static_cast<std::size_t>(pd)] == qd) relax(qx, qy, pd, kRight);
                }
                relax(qx - world_.dir_dx[static_cast<std::size_t>(qd)], qy - world_.dir_dy[static_cast<std::size_t>(qd)],
                      qd, kForward);
            }
        }

        World world_;
        Variant variant_;
        std::vector<std::string> observation_keys_;
        std::vector<int> policy_;
    };

    class LavaDomain final : public DomainPlugin {
      public:
        std::string name() const override { return "lava"; }

        std::vector<std::string> agent_variants() const override {
            return {"base", "inacc_state", "inacc_reward", "both"};
        }

        std::unique_ptr<Simulator> make_simulator(const Task& task) const override {
            return std::make_unique<LavaSimulator>(task);
        }

        std::unique_ptr<Agent> make_agent(const std::string& variant, const Task& task) const override {
            return make_lava_agent(variant_from_name(variant), task);
        }
    };

} // namespace

Variant variant_from_name(std::string_view name) {
    if (name == "base") return Variant::base;
    if (name == "inacc_state") return Variant::inacc_state;
    if (name == "inacc_reward") return Variant::inacc_reward;
    if (name == "both") return Variant::both;
    throw SimError("lava: unknown agent variant '" + std::string(name) + "'");
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
    return R"(<Environment id="lava_world" type="lava">
  <Attribute>
    <Name value="grid_size"/>
    <Description value="Width and height of the square grid."/>
    <DataType value="int"/>
    <CurrentValue value="8"/>
    <Mutable value="true"/>
    <Constraint Range="[3, 50]"/>
  </Attribute>
  <Attribute>
    <Name value="lava_count"/>
    <Description value="Number of lava tiles in the grid."/>
    <DataType value="int"/>
    <CurrentValue value="4"/>
    <Mutable value="true"/>
    <Constraint Range="[0, grid_size^2]"/>
  </Attribute>
  <Objects>
    <Object id="lava" type="lava_tile" count="lava_count">
      <Attribute>
        <Name value="x"/>
        <Description value="Column of the tile."/>
        <DataType value="int"/>
        <CurrentValue value="1"/>
        <Mutable value="true"/>
        <Constraint Range="[1, grid_size]"/>
      </Attribute>
      <Attribute>
        <Name value="y"/>
        <Description value="Row of the tile."/>
        <DataType value="int"/>
        <CurrentValue value="1"/>
        <Mutable value="true"/>
        <Constraint Range="[1, grid_size]"/>
      </Attribute>
    </Object>
  </Objects>
  <Agents>
    <Agent id="agent" type="navigator">
      <Attribute>
        <Name value="x"/>
        <Description value="Column of the agent."/>
        <DataType value="int"/>
        <CurrentValue value="1"/>
        <Mutable value="true"/>
        <Constraint Range="[1, grid_size]"/>
      </Attribute>
      <Attribute>
        <Name value="y"/>
        <Description value="Row of the agent."/>
        <DataType value="int"/>
        <CurrentValue value="1"/>
        <Mutable value="true"/>
        <Constraint Range="[1, grid_size]"/>
      </Attribute>
      <Attribute>
        <Name value="d"/>
        <Description value="Facing direction."/>
        <DataType value="categorical"/>
        <CurrentValue value="north"/>
        <Mutable value="true"/>
        <Constraint Categories="north,south,east,west"/>
      </Attribute>
    </Agent>
  </Agents>
</Environment>
)";
}

std::unique_ptr<Simulator> make_simulator(const Task& task) { return std::make_unique<LavaSimulator>(task); }

std::unique_ptr<Agent> make_lava_agent(Variant variant, const Task& task) {
    return std::make_unique<LavaAgent>(variant, task);
}

std::unique_ptr<DomainPlugin> make_domain() { return std::make_unique<LavaDomain>(); }

} // namespace aiprobe::lava
