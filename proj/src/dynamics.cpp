#include "cssi/dynamics.hpp"

#include <cmath>

#include "cssi/error.hpp"

namespace cssi {

nlohmann::json DynamicsParams::to_json() const {
    return {{"radius", radius},       {"init_speed", init_speed}, {"kappa", kappa},
            {"damping", damping},     {"noise_std", noise_std},   {"episode_length", episode_length}};
}

DynamicsParams DynamicsParams::from_json(const nlohmann::json& j) {
    DynamicsParams p;
    try {
        if (j.contains("radius")) p.radius = j.at("radius").get<double>();
        if (j.contains("init_speed")) p.init_speed = j.at("init_speed").get<double>();
        if (j.contains("kappa")) p.kappa = j.at("kappa").get<double>();
        if (j.contains("damping")) p.damping = j.at("damping").get<double>();
        if (j.contains("noise_std")) p.noise_std = j.at("noise_std").get<double>();
        if (j.contains("episode_length")) p.episode_length = j.at("episode_length").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("dataset.dynamics: ") + e.what());
    }
    if (!(p.radius > 0.0 && p.radius < 0.25)) throw InvalidConfig("dataset.dynamics.radius: must lie in (0, 0.25)");
    if (p.episode_length < 1) throw InvalidConfig("dataset.dynamics.episode_length: must be positive");
    if (p.noise_std < 0.0) throw InvalidConfig("dataset.dynamics.noise_std: must be non-negative");
    return p;
}

bool colliding(const ObjectState& a, const ObjectState& b) {
    const double dx = a.p[0] - b.p[0];
    const double dy = a.p[1] - b.p[1];
    const double dist2 = dx * dx + dy * dy;
    const double reach = a.r + b.r;
    if (dist2 >= reach * reach) return false;
    // Approaching iff the relative velocity points against the separation.
    const double closing = (a.v[0] - b.v[0]) * dx + (a.v[1] - b.v[1]) * dy;
    return closing < 0.0;
}

std::vector<std::array<int, 2>> resolve_collisions(std::vector<ObjectState>& objects) {
    std::vector<std::array<int, 2>> pairs;
    const int n = static_cast<int>(objects.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            ObjectState& a = objects[static_cast<std::size_t>(i)];
            ObjectState& b = objects[static_cast<std::size_t>(j)];
            if (!colliding(a, b)) continue;
            const double dx = a.p[0] - b.p[0];
            const double dy = a.p[1] - b.p[1];
            const double c = ((a.v[0] - b.v[0]) * dx + (a.v[1] - b.v[1]) * dy) / (dx * dx + dy * dy);
            a.v[0] -= c * dx;
            a.v[1] -= c * dy;
            b.v[0] += c * dx;
            b.v[1] += c * dy;
            pairs.push_back({i, j});
        }
    return pairs;
}

int nearest_object(const WorldState& s) {
    int best = 0;
    double best_d2 = INFINITY;
    for (int i = 0; i < s.n(); ++i) {
        const auto& o = s.objects[static_cast<std::size_t>(i)];
        const double dx = o.p[0] - s.action[0];
        const double dy = o.p[1] - s.action[1];
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    return best;
}

StepResult step(const WorldState& s, const std::vector<double>& u_noise, const DynamicsParams& params) {
    const int n = s.n();
    if (n < 1) throw InvalidConfig("world has no objects");
    if (static_cast<int>(u_noise.size()) != 2 * n) throw ShapeMismatch("velocity noise needs 2n values");

    StepResult out;
    out.next = s;
    auto& objs = out.next.objects;
    out.collisions = resolve_collisions(objs);
    out.nearest = nearest_object(s);

    ObjectState& target = objs[static_cast<std::size_t>(out.nearest)];
    for (int c = 0; c < 2; ++c) target.v[c] += params.kappa * (s.action[c] - target.p[c]);

    for (int i = 0; i < n; ++i) {
        ObjectState& o = objs[static_cast<std::size_t>(i)];
        for (int c = 0; c < 2; ++c) {
            o.v[c] = params.damping * o.v[c] + u_noise[static_cast<std::size_t>(2 * i + c)];
            o.p[c] += o.v[c];
            const double lo = o.r;
            const double hi = 1.0 - o.r;
            if (o.p[c] < lo) {
                o.p[c] = 2.0 * lo - o.p[c];
                o.v[c] = -o.v[c];
            } else if (o.p[c] > hi) {
                o.p[c] = 2.0 * hi - o.p[c];
                o.v[c] = -o.v[c];
            }
        }
    }

    out.object_parents.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out.object_parents[static_cast<std::size_t>(i)] = ParentSet::of({position_var(i), velocity_var(i)});
    for (const auto& [i, j] : out.collisions) {
        auto& pi = out.object_parents[static_cast<std::size_t>(i)];
        auto& pj = out.object_parents[static_cast<std::size_t>(j)];
        pi = pi.with(position_var(j)).with(velocity_var(j));
        pj = pj.with(position_var(i)).with(velocity_var(i));
    }
    auto& pn = out.object_parents[static_cast<std::size_t>(out.nearest)];
    pn = pn.with(action_var(n));
    out.region = out.nearest + (out.collisions.empty() ? 0 : n);
    return out;
}

WorldState random_world(int n_objects, const DynamicsParams& params, CounterRng& rng) {
    WorldState w;
    const double r = params.radius;
    for (int i = 0; i < n_objects; ++i) {
        ObjectState o;
        o.r = r;
        for (int attempt = 0;; ++attempt) {
            o.p = {rng.uniform(r, 1.0 - r), rng.uniform(r, 1.0 - r)};
            bool clear = true;
            for (const auto& other : w.objects) {
                const double dx = o.p[0] - other.p[0];
                const double dy = o.p[1] - other.p[1];
                clear = clear && dx * dx + dy * dy >= (o.r + other.r) * (o.r + other.r);
            }
            if (clear || attempt > 1000) break;
        }
        o.v = {rng.uniform(-params.init_speed, params.init_speed), rng.uniform(-params.init_speed, params.init_speed)};
        w.objects.push_back(o);
    }
    w.action = {rng.uniform(), rng.uniform()};
    return w;
}

std::vector<double> flatten_input(const WorldState& s) {
    std::vector<double> x;
    for (const auto& o : s.objects) x.insert(x.end(), {o.p[0], o.p[1], o.v[0], o.v[1]});
    x.insert(x.end(), {s.action[0], s.action[1]});
    return x;
}

std::vector<double> flatten_target(const WorldState& next) {
    std::vector<double> y;
    for (const auto& o : next.objects) y.insert(y.end(), {o.p[0], o.p[1], o.v[0], o.v[1]});
    return y;
}

LabeledDataset rollout(int n_objects, std::size_t n_steps, std::uint64_t seed, const DynamicsParams& params) {
    if (n_objects < 1 || n_objects > 8) throw InvalidConfig("dataset.n_objects: must lie in [1, 8]");
    LabeledDataset ds;
    ds.x_layout = VariableLayout{std::vector<int>(static_cast<std::size_t>(2 * n_objects + 1), 2)};
    ds.target_widths.assign(static_cast<std::size_t>(2 * n_objects), 2);

    const CounterRng root(seed, 0xD1A);
    std::size_t collisions = 0;
    WorldState world;
    CounterRng rng = root;
    for (std::size_t t = 0; t < n_steps; ++t) {
        const auto episode = t / static_cast<std::size_t>(params.episode_length);
        if (t % static_cast<std::size_t>(params.episode_length) == 0) {
            rng = root.substream(episode);
            world = random_world(n_objects, params, rng);
        } else {
            world.action = {rng.uniform(), rng.uniform()};
        }
        std::vector<double> u(static_cast<std::size_t>(2 * n_objects));
        for (double& v : u) v = params.noise_std * rng.normal();
        StepResult res = step(world, u, params);

        DatasetRow row;
        row.x = flatten_input(world);
        row.y = flatten_target(res.next);
        row.region = res.region;
        for (int i = 0; i < n_objects; ++i) {
            row.masks.push_back(res.object_parents[static_cast<std::size_t>(i)]);
            row.masks.push_back(res.object_parents[static_cast<std::size_t>(i)]);
        }
        if (!res.collisions.empty()) ++collisions;
        ds.rows.push_back(std::move(row));
        world = std::move(res.next);
    }
    ds.metadata = {{"generator", "dynamics"},
                   {"seed", seed},
                   {"d", 2 * n_objects + 1},
                   {"n", n_steps},
                   {"n_objects", n_objects},
                   {"params", params.to_json()},
                   {"collision_rate", n_steps == 0 ? 0.0 : static_cast<double>(collisions) / static_cast<double>(n_steps)},
                   {"region_code", "nearest object index + n_objects * (any collision)"}};
    return ds;
}

}  // namespace cssi
