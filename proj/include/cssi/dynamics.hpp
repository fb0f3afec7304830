#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "cssi/dataset.hpp"
#include "cssi/parent_set.hpp"
#include "cssi/rng.hpp"

namespace cssi {

using Vec2 = std::array<double, 2>;

struct ObjectState {
    Vec2 p{0.0, 0.0};
    Vec2 v{0.0, 0.0};
    double r = 0.05;
};

/// Objects in the unit square plus the current action point.
struct WorldState {
    std::vector<ObjectState> objects;
    Vec2 action{0.5, 0.5};

    int n() const { return static_cast<int>(objects.size()); }
};

struct DynamicsParams {
    double radius = 0.05;
    double init_speed = 0.02;   // initial velocity components ~ U(-s, s)
    double kappa = 0.05;        // action impulse gain toward the action point
    double damping = 0.95;
    double noise_std = 1e-3;    // velocity noise per component
    int episode_length = 100;

    nlohmann::json to_json() const;
    static DynamicsParams from_json(const nlohmann::json& j);
};

/// Input variable indices (0-based): position of object i is 2i, velocity
/// 2i+1, the action is 2n. Targets use the same numbering without the action.
inline int position_var(int i) { return 2 * i; }
inline int velocity_var(int i) { return 2 * i + 1; }
inline int action_var(int n) { return 2 * n; }

struct StepResult {
    WorldState next;
    /// Parent set of object i's targets over the 2n+1 input variables.
    std::vector<ParentSet> object_parents;
    std::vector<std::array<int, 2>> collisions;
    int nearest = 0;
    /// nearest + n * (any collision).
    int region = 0;
};

/// True iff the two objects overlap and approach each other.
bool colliding(const ObjectState& a, const ObjectState& b);

/// Equal-mass elastic response for every colliding pair, pairwise in index
/// order. Returns the pairs that collided.
std::vector<std::array<int, 2>> resolve_collisions(std::vector<ObjectState>& objects);

/// Index of the object whose centre is closest to the action (lowest index on ties).
int nearest_object(const WorldState& s);

/// One transition. `u_noise` holds 2n velocity noise values (already scaled).
/// Order: collisions on the current state, action impulse on the nearest
/// object, damping, noise, Euler position update, wall reflection.
StepResult step(const WorldState& s, const std::vector<double>& u_noise, const DynamicsParams& params);

/// Random non-overlapping placement, velocities ~ U(-init_speed, init_speed).
WorldState random_world(int n_objects, const DynamicsParams& params, CounterRng& rng);

/// Transitions under uniformly random actions. Episodes of
/// params.episode_length steps restart from a fresh random world.
LabeledDataset rollout(int n_objects, std::size_t n_steps, std::uint64_t seed,
                       const DynamicsParams& params = DynamicsParams{});

/// Flattened input / target vectors of a transition.
std::vector<double> flatten_input(const WorldState& s);
std::vector<double> flatten_target(const WorldState& next);

}  // namespace cssi
