#include "cotour/frame_tree.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace cotour;

namespace {

Entity node(std::uint64_t id, std::optional<std::uint64_t> parent, Pose local = Pose::identity(),
            EntityKind kind = EntityKind::Ooi)
{
    Entity e;
    e.id = EntityId{id};
    e.kind = kind;
    if (parent) {
        e.parent = EntityId{*parent};
    }
    e.local = local;
    return e;
}

int depth(const FrameTree& t, EntityId id)
{
    int d = 1;
    for (auto p = t.at(id).parent; p; p = t.at(*p).parent) {
        ++d;
    }
    return d;
}

/// Random forest with every node at depth <= max_depth.
FrameTree random_tree(std::mt19937_64& rng, int count, int max_depth)
{
    FrameTree t;
    for (int i = 1; i <= count; ++i) {
        std::optional<std::uint64_t> parent;
        if (i > 1) {
            std::uniform_int_distribution<int> pick(0, i - 1);
            const int p = pick(rng);
            if (p > 0 && depth(t, EntityId{static_cast<std::uint64_t>(p)}) < max_depth) {
                parent = static_cast<std::uint64_t>(p);
            }
        }
        t.add(node(i, parent, oracle::random_pose(rng, 3.0, 0.5, 2.0)));
    }
    return t;
}

} // namespace

TEST_CASE("add rejects duplicates, unknown parents and degenerate poses")
{
    FrameTree t;
    t.add(node(1, std::nullopt));
    CHECK_THROWS_AS(t.add(node(1, std::nullopt)), FrameError);
    CHECK_THROWS_AS(t.add(node(2, 99)), FrameError);
    Pose zero;
    zero.scale = {1.0, 0.0, 1.0};
    CHECK_THROWS_AS(t.add(node(3, 1, zero)), FrameError);
    Pose nan;
    nan.position.y = std::nan("");
    CHECK_THROWS_AS(t.add(node(4, 1, nan)), FrameError);
    CHECK(t.size() == 1);
}

TEST_CASE("remove drops the whole subtree")
{
    FrameTree t;
    t.add(node(1, std::nullopt));
    t.add(node(2, 1));
    t.add(node(3, 2));
    t.add(node(4, 1));
    auto removed = t.remove(EntityId{2});
    std::sort(removed.begin(), removed.end());
    CHECK(removed == std::vector<EntityId>{EntityId{2}, EntityId{3}});
    CHECK(t.size() == 2);
    CHECK(t.children(EntityId{1}) == std::vector<EntityId>{EntityId{4}});
}

TEST_CASE("reparenting under a descendant is refused")
{
    FrameTree t;
    t.add(node(1, std::nullopt));
    t.add(node(2, 1));
    t.add(node(3, 2));
    CHECK_THROWS_AS(t.reparent_preserving_world(EntityId{1}, EntityId{3}), FrameError);
    CHECK_THROWS_AS(t.reparent_preserving_world(EntityId{2}, EntityId{2}), FrameError);
    CHECK(t.is_ancestor_or_self(EntityId{1}, EntityId{3}));
    CHECK_FALSE(t.is_ancestor_or_self(EntityId{3}, EntityId{1}));
}

TEST_CASE("world_pose matches the 4x4 matrix oracle on trees of depth <= 6")
{
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const FrameTree t = random_tree(rng, 40, 6);
        for (const auto& [id, e] : t.entities()) {
            REQUIRE(depth(t, id) <= 6);
            CHECK(oracle::matrix_error(t.world_pose(id), oracle::world_matrix(t, id)) < 1e-9);
        }
    }
}

TEST_CASE("1000 randomized reparent_preserving_world cases keep the world pose within 1e-9")
{
    std::mt19937_64 rng(22);
    int cases = 0;
    while (cases < 1000) {
        FrameTree t = random_tree(rng, 12, 6);
        std::uniform_int_distribution<std::uint64_t> pick(1, 12);
        const EntityId id{pick(rng)};
        std::optional<EntityId> target;
        if (rng() % 5 != 0) {
            target = EntityId{pick(rng)};
            if (t.is_ancestor_or_self(id, *target)) {
                continue;
            }
        }
        std::map<EntityId, Pose> before;
        for (const auto& [eid, e] : t.entities()) {
            before[eid] = t.world_pose(eid);
        }
        t.reparent_preserving_world(id, target);
        CHECK(t.at(id).parent == target);
        for (const auto& [eid, pose] : before) {
            CHECK(oracle::pose_error(t.world_pose(eid), pose) < 1e-9);
        }
        ++cases;
    }
}

TEST_CASE("attach sets the local pose verbatim")
{
    FrameTree t;
    t.add(node(1, std::nullopt, Pose::at({5.0, 0.0, 0.0})));
    t.add(node(2, std::nullopt));
    const Pose local{{1.0, 2.0, 3.0}, Quat::yaw(0.5), Vec3::ones()};
    t.attach(EntityId{2}, EntityId{1}, local);
    CHECK(t.at(EntityId{2}).local == local);
    CHECK(t.world_pose(EntityId{2}).position.x == doctest::Approx(6.0));
}

TEST_CASE("scalers only take uniform scale")
{
    FrameTree t;
    t.add(node(1, std::nullopt, Pose::identity(), EntityKind::AugAnchor));
    t.add(node(2, 1, Pose::identity(), EntityKind::Scaler));
    Pose uniform;
    uniform.scale = Vec3::uniform(0.001);
    t.set_scaler(EntityId{1}, uniform);
    CHECK(t.at(EntityId{2}).local.scale == Vec3::uniform(0.001));
    CHECK(t.scaler_of(EntityId{1}) == EntityId{2});
    Pose skewed;
    skewed.scale = {0.001, 0.002, 0.001};
    CHECK_THROWS_AS(t.set_scaler(EntityId{1}, skewed), FrameError);
}

TEST_CASE("ownership table lists every entity")
{
    FrameTree t;
    t.add(node(1, std::nullopt));
    t.add(node(2, 1));
    t.set_owner(EntityId{2}, ClientId{7});
    const auto owners = t.ownership();
    CHECK(owners.at(EntityId{1}) == kServer);
    CHECK(owners.at(EntityId{2}) == ClientId{7});
}
