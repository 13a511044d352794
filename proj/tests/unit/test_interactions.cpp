#include "cotour/canonical.hpp"
#include "cotour/session.hpp"
#include "harness.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace cotour;
using testing::Harness;
using testing::bodies_to;

namespace {

/// Primary, one secondary standing at the Porta Nigra, held on the shovel.
struct Tour {
    Harness h;
    ClientId primary;
    ClientId student;

    explicit Tour(SessionConfig cfg = {}) : h(cfg)
    {
        primary = h.join(Role::Primary);
        student = h.join(Role::Secondary);
        h.place_markers(primary);
        h.send(student, msg::TeleportPoi{h.avatar_of(student), "porta_nigra"});
        const Pose at = h.session.tree().at(h.avatar_of(student)).local;
        const Pose on_map = to_local(compose(h.session.tree().world_pose(h.prop(PropKind::MapHub).scaler), at),
                                     testing::kHubPose);
        REQUIRE_FALSE(h.error(h.send(primary, msg::Pickup{Pose::at(on_map.position)})));
    }

    EntityId ooi(const std::string& catalog_id) const
    {
        for (const auto& [id, o] : h.session.oois()) {
            if (o.catalog_id == catalog_id) {
                return id;
            }
        }
        FAIL("no ooi " << catalog_id);
        return {};
    }

    std::vector<Outgoing> command(msg::Interaction m) { return h.send(primary, std::move(m)); }

    std::optional<msg::Error> command_error(msg::Interaction m) { return h.error(command(std::move(m))); }

    EntityId spawn(const std::string& marker, const std::string& catalog_id)
    {
        const auto out = h.send(primary, msg::SpawnOoi{marker, catalog_id, std::nullopt});
        REQUIRE_FALSE(h.error(out));
        const auto ack = bodies_to<msg::SpawnOoi>(out, primary);
        REQUIRE(ack.size() == 1);
        return *ack[0].entity;
    }

    /// OOI pose in the environment root's frame, from the matrix oracle.
    oracle::Mat4 city_matrix(EntityId id) const
    {
        const FrameTree& t = h.session.tree();
        return oracle::world_matrix(t, *h.session.environment_root()).inverse() * oracle::world_matrix(t, id);
    }
};

msg::Interaction cmd(EntityId ooi, CommandKind kind)
{
    msg::Interaction m;
    m.ooi = ooi;
    m.kind = kind;
    return m;
}

msg::Interaction highlight(EntityId ooi, bool on)
{
    msg::Interaction m = cmd(ooi, CommandKind::Highlight);
    m.on = on;
    return m;
}

Pose facing(const Vec3& at, double yaw) { return {at, Quat::yaw(yaw), Vec3::ones()}; }

} // namespace

TEST_CASE("[DR2.1] selecting an OOI lists its interactions in catalog order")
{
    Tour t;
    auto out = t.h.send(t.primary, msg::SelectOoi{t.ooi("porta_nigra"), std::nullopt});
    auto reply = bodies_to<msg::SelectOoi>(out, t.primary);
    REQUIRE(reply.size() == 1);
    CHECK(*reply[0].interactions == std::vector<InteractionKind>{InteractionKind::Text, InteractionKind::Video,
                                                                  InteractionKind::Scale, InteractionKind::Change,
                                                                  InteractionKind::Lock});
    out = t.h.send(t.primary, msg::SelectOoi{t.ooi("forum"), std::nullopt});
    reply = bodies_to<msg::SelectOoi>(out, t.primary);
    REQUIRE(reply.size() == 1);
    CHECK(reply[0].interactions->empty());
    CHECK(t.h.error(t.h.send(t.primary, msg::SelectOoi{EntityId{9999}, std::nullopt}))->code == "not_found");
}

TEST_CASE("[DR2.2] text and video appear in front of the held secondary")
{
    Tour t;
    const EntityId gate = t.ooi("porta_nigra");
    auto out = t.command(cmd(gate, CommandKind::Text));
    const auto to_student = bodies_to<msg::Interaction>(out, t.student);
    REQUIRE(to_student.size() == 1);
    CHECK(bodies_to<msg::Interaction>(out, t.primary).size() == 1);
    CHECK(to_student[0].content == t.h.session.world().find_entry("porta_nigra")->text_content);
    const Pose panel = *to_student[0].panel_pose;
    CHECK(panel.position.x == doctest::Approx(120.0));
    CHECK(panel.position.y == doctest::Approx(1.6));
    CHECK(panel.position.z == doctest::Approx(-246.5));

    out = t.command(cmd(gate, CommandKind::Video));
    CHECK(bodies_to<msg::Interaction>(out, t.student)[0].content == "media/porta_nigra.mp4");

    const auto err = t.command_error(cmd(t.ooi("city_wall"), CommandKind::Video));
    REQUIRE(err);
    CHECK(err->code == "disabled");

    t.h.send(t.primary, msg::Release{});
    CHECK(t.command_error(cmd(gate, CommandKind::Text))->code == "precondition");
}

TEST_CASE("[DR2.2] panel placement rule")
{
    const Pose p = panel_pose(Pose::identity(), 1.5, 1.6);
    CHECK(oracle::pose_error(p, facing({0.0, 1.6, 1.5}, std::numbers::pi)) < 1e-12);

    std::mt19937_64 rng(2);
    for (int i = 0; i < 500; ++i) {
        const double yaw = std::uniform_real_distribution<double>(-4, 4)(rng);
        const Vec3 at{std::uniform_real_distribution<double>(-50, 50)(rng), 0.0,
                      std::uniform_real_distribution<double>(-50, 50)(rng)};
        const Pose panel = panel_pose(facing(at, yaw), 1.5, 1.6);
        const Vec3 want = at + Vec3{1.5 * std::sin(yaw), 1.6, 1.5 * std::cos(yaw)};
        CHECK(distance(panel.position, want) < 1e-9);
        const Vec3 normal = panel.rotation.rotate({0.0, 0.0, 1.0});
        const Vec3 back = at + Vec3{0.0, 1.6, 0.0} - panel.position;
        CHECK(dot(normal, back * (1.0 / norm(back))) == doctest::Approx(1.0));
    }
}

TEST_CASE("[DR2.1] OOI scale is clamped and independent of the environment scale")
{
    Tour t;
    const EntityId gate = t.ooi("porta_nigra");
    msg::Interaction m = cmd(gate, CommandKind::Scale);
    m.factor = 1.0;
    CHECK_FALSE(t.command_error(m));
    CHECK(t.h.session.tree().at(gate).local.scale == Vec3::ones());

    m.factor = 2.0;
    CHECK_FALSE(t.command_error(m));
    for (const double env : {0.001, 0.0005}) {
        t.h.send(t.primary, msg::SetScale{env});
        const oracle::Mat4 world = oracle::world_matrix(t.h.session.tree(), gate);
        CHECK(world.topLeftCorner<3, 3>().col(0).norm() == doctest::Approx(2.0 * env));
        CHECK(t.city_matrix(gate).topLeftCorner<3, 3>().col(0).norm() == doctest::Approx(2.0));
    }

    m.factor = 100.0;
    const auto err = t.command_error(m);
    REQUIRE(err);
    CHECK(err->code == "clamped");
    CHECK(t.h.session.tree().at(gate).local.scale == Vec3::uniform(10.0));
    m.factor = std::nullopt;
    CHECK(t.command_error(m)->code == "invalid");
    CHECK(t.command_error(cmd(t.ooi("forum"), CommandKind::Scale))->code == "disabled");
}

TEST_CASE("[DR1.3] highlight flags the OOI for everyone and arrows every secondary")
{
    Tour t;
    const ClientId other = t.h.join(Role::Secondary);
    const EntityId wall = t.ooi("city_wall");
    const EntityId baths = t.ooi("imperial_baths");
    auto out = t.command(highlight(wall, true));
    for (const ClientId c : {t.primary, t.student, other}) {
        const auto hs = bodies_to<msg::HighlightState>(out, c);
        REQUIRE(hs.size() == 1);
        CHECK(hs[0].highlighted);
        CHECK(hs[0].arrows == std::vector<ClientId>{t.student, other});
    }
    CHECK_FALSE(t.command_error(highlight(baths, true)));
    CHECK(t.h.session.oois().at(wall).highlighted);
    CHECK(t.h.session.oois().at(baths).highlighted);
    CHECK(t.h.session.arrows().size() == 2);

    out = t.command(highlight(wall, false));
    CHECK_FALSE(t.h.session.oois().at(wall).highlighted);
    CHECK(t.h.session.arrows().count(wall) == 0);
    CHECK(bodies_to<msg::HighlightState>(out, other).at(0).arrows.empty());
    CHECK(t.command_error(highlight(t.ooi("porta_nigra"), true))->code == "disabled");
    CHECK(t.command_error(cmd(wall, CommandKind::Highlight))->code == "invalid");
    CHECK(t.h.session.check_invariants().empty());
}

TEST_CASE("[DR1.3] the arrow goes away once the secondary is near and facing the OOI")
{
    Tour t;
    const ClientId other = t.h.join(Role::Secondary);
    const EntityId wall = t.ooi("city_wall");
    t.command(highlight(wall, true));
    const Vec3 wall_at = t.h.session.tree().at(wall).local.position;

    // Near but looking away: the arrow stays.
    auto out = t.h.send(t.student, msg::EntityLocalPose{t.h.avatar_of(t.student), *t.h.session.environment_root(),
                                                         facing(wall_at + Vec3{0.0, 0.0, 3.0}, 0.0)});
    CHECK_FALSE(t.h.error(out));
    CHECK(t.h.session.arrows().at(wall).count(t.student) == 1);

    out = t.h.send(t.student, msg::EntityLocalPose{t.h.avatar_of(t.student), *t.h.session.environment_root(),
                                                    facing(wall_at + Vec3{0.0, 0.0, 3.0}, std::numbers::pi)});
    CHECK(t.h.session.arrows().at(wall) == std::set<ClientId>{other});
    const auto hs = bodies_to<msg::HighlightState>(out, t.student);
    REQUIRE(hs.size() == 1);
    CHECK(hs[0].arrows == std::vector<ClientId>{other});
    CHECK(t.h.session.oois().at(wall).highlighted);

    // Walking away again does not bring the arrow back.
    t.h.send(t.student, msg::TeleportShort{t.h.avatar_of(t.student), wall_at + Vec3{0.0, 0.0, 9.0}});
    CHECK(t.h.session.arrows().at(wall) == std::set<ClientId>{other});
    t.h.tick();
    CHECK(t.h.session.check_invariants().empty());
}

TEST_CASE("[DR1.3] arrow dismissal predicate")
{
    const ArrowConfig cfg;
    const double near = cfg.near_distance;
    const auto at_angle = [&](double dist, double deg) {
        const double a = deg * std::numbers::pi / 180.0;
        return Vec3{dist * std::sin(a), 0.0, dist * std::cos(a)};
    };
    CHECK(arrow_dismissed(Pose::identity(), at_angle(0.9 * near, 10.0), cfg));
    CHECK_FALSE(arrow_dismissed(Pose::identity(), at_angle(0.9 * near, 45.0), cfg));
    CHECK_FALSE(arrow_dismissed(Pose::identity(), at_angle(1.1 * near, 0.0), cfg));
    CHECK(arrow_dismissed(facing({3, 0, 4}, 2.0), {3, 0, 4}, cfg));
    CHECK(arrow_dismissed(Pose::identity(), at_angle(near, 30.0), cfg));

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dist(0.01, 2.0 * near), deg(0.0, 180.0), yaw(-3.2, 3.2);
    for (int i = 0; i < 5000; ++i) {
        const Pose avatar = facing({dist(rng), 0.0, dist(rng)}, yaw(rng));
        const double d = dist(rng), a = deg(rng);
        const auto target = [&](double dd, double aa) {
            const Vec3 local = at_angle(dd, aa);
            return avatar.position + avatar.rotation.rotate(local);
        };
        const bool want = d <= near && a <= cfg.facing_half_angle_deg;
        CHECK(arrow_dismissed(avatar, target(d, a), cfg) == want);
        if (want) {
            CHECK(arrow_dismissed(avatar, target(d * 0.5, a), cfg));
            CHECK(arrow_dismissed(avatar, target(d, a * 0.5), cfg));
        }
    }
}

TEST_CASE("[DR2.1] change swaps the catalog entry in place")
{
    Tour t;
    const EntityId col = t.spawn("tangible-1", "column");
    const oracle::Mat4 before = oracle::world_matrix(t.h.session.tree(), col);
    msg::Interaction m = cmd(col, CommandKind::Change);
    m.target = "statue";
    CHECK_FALSE(t.command_error(m));
    CHECK(t.h.session.oois().at(col).catalog_id == "statue");
    CHECK((oracle::world_matrix(t.h.session.tree(), col) - before).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(t.h.session.oois().at(col).attachment == AttachmentKind::Tangible);

    auto reply = bodies_to<msg::SelectOoi>(t.h.send(t.primary, msg::SelectOoi{col, std::nullopt}), t.primary);
    CHECK(reply.at(0).interactions->size() == t.h.session.world().find_entry("statue")->enabled_interactions.size());
    CHECK(t.command_error(cmd(col, CommandKind::Text))->code == "disabled");

    m.target = "column";
    CHECK_FALSE(t.command_error(m));
    CHECK(t.h.session.oois().at(col).catalog_id == "column");
    m.target = "mosaic";
    CHECK(t.command_error(m)->code == "invalid");
    CHECK(t.h.session.oois().at(col).catalog_id == "column");
}

TEST_CASE("[DR2.3] spawned OOIs follow their tangible into the secondary's city")
{
    Tour t;
    const EntityId col = t.spawn("tangible-1", "column");
    const auto& tangible = *t.h.session.find_marker("tangible-1");
    const Entity& e = t.h.session.tree().at(col);
    CHECK(e.parent == tangible.scaler);
    CHECK(e.local == Pose::identity());
    CHECK(e.owner == t.primary);
    CHECK(t.h.session.oois().at(col).attachment == AttachmentKind::Tangible);

    std::mt19937_64 rng(23);
    for (int i = 0; i < 20; ++i) {
        const Pose marker = oracle::random_pose(rng, 0.3, 1.0, 1.0);
        t.h.marker(t.primary, "tangible-1", Pose{marker.position + Vec3{0.0, 0.8, 0.0}, marker.rotation, Vec3::ones()});
        const auto out = t.h.tick();
        const oracle::Mat4 want = t.city_matrix(col);
        const auto poses = bodies_to<msg::EntityLocalPose>(out, t.student);
        const auto it = std::find_if(poses.begin(), poses.end(), [&](const auto& p) { return p.entity == col; });
        REQUIRE(it != poses.end());
        CHECK(it->parent == *t.h.session.environment_root());
        CHECK(oracle::matrix_error(it->local, want) < 1e-9);
    }
    CHECK(t.h.session.check_invariants().empty());
}

TEST_CASE("[DR2.3] spawning rules")
{
    Tour t;
    t.spawn("tangible-1", "column");
    auto out = t.h.send(t.primary, msg::SpawnOoi{"tangible-1", "mosaic", std::nullopt});
    CHECK(t.h.error(out)->code == "conflict");
    CHECK(t.h.error(out)->reason == "one OOI per tangible");
    out = t.h.send(t.primary, msg::SpawnOoi{"tangible-2", "unicorn", std::nullopt});
    CHECK(t.h.error(out)->code == "not_found");
    out = t.h.send(t.primary, msg::SpawnOoi{"tangible-2", "forum", std::nullopt});
    CHECK(t.h.error(out)->code == "precondition");
    out = t.h.send(t.primary, msg::SpawnOoi{"map-hub", "column", std::nullopt});
    CHECK(t.h.error(out)->code == "invalid");
    out = t.h.send(t.student, msg::SpawnOoi{"tangible-2", "column", std::nullopt});
    CHECK(t.h.error(out)->code == "unauthorized");
    CHECK(t.h.session.oois().size() == t.h.session.world().catalog.size() - 4 + 1);
}

TEST_CASE("[DR2.1] lock keeps the city pose and frees the tangible")
{
    Tour t;
    const EntityId col = t.spawn("tangible-1", "column");
    t.h.marker(t.primary, "tangible-1", Pose{{0.3, 0.8, 0.2}, Quat::yaw(0.7), Vec3::ones()});
    const oracle::Mat4 before = t.city_matrix(col);
    CHECK_FALSE(t.command_error(cmd(col, CommandKind::Lock)));
    CHECK(t.h.session.oois().at(col).attachment == AttachmentKind::LockedInEnvironment);
    CHECK(t.h.session.tree().at(col).parent == t.h.session.environment_root());
    CHECK((t.city_matrix(col) - before).cwiseAbs().maxCoeff() < 1e-9);

    t.h.marker(t.primary, "tangible-1", Pose::at({0.1, 0.9, 0.4}));
    t.h.tick();
    CHECK((t.city_matrix(col) - before).cwiseAbs().maxCoeff() < 1e-9);

    CHECK(t.command_error(cmd(col, CommandKind::Lock))->code == "conflict");
    CHECK(t.command_error(cmd(t.ooi("porta_nigra"), CommandKind::Lock))->code == "precondition");
    t.spawn("tangible-1", "mosaic");
    CHECK(t.h.session.check_invariants().empty());
}

TEST_CASE("[DR2.1] a locked OOI reattaches to an empty tangible held next to it")
{
    Tour t;
    const Pose hold{{0.3, 0.8, 0.2}, Quat::yaw(0.7), Vec3::ones()};
    const EntityId col = t.spawn("tangible-1", "column");
    t.h.marker(t.primary, "tangible-1", hold);
    const Pose pre_lock = t.h.session.tree().at(col).local;
    t.command(cmd(col, CommandKind::Lock));

    t.h.marker(t.primary, "tangible-1", Pose::at({0.3, 0.8, 0.2 + 2.0 * t.h.session.config().reattach_threshold}));
    CHECK(t.command_error(cmd(col, CommandKind::Unlock))->code == "out_of_range");
    CHECK(t.h.error(t.h.send(t.primary, msg::AttachOoi{"tangible-1", col}))->code == "out_of_range");

    t.h.marker(t.primary, "tangible-1", hold);
    CHECK_FALSE(t.command_error(cmd(col, CommandKind::Unlock)));
    CHECK(t.h.session.oois().at(col).attachment == AttachmentKind::Tangible);
    CHECK(t.h.session.oois().at(col).marker_id == "tangible-1");
    CHECK(oracle::pose_error(t.h.session.tree().at(col).local, pre_lock) < 1e-6);

    t.command(cmd(col, CommandKind::Lock));
    t.spawn("tangible-1", "mosaic");
    CHECK(t.h.error(t.h.send(t.primary, msg::AttachOoi{"tangible-1", col}))->code == "conflict");
    t.h.marker(t.primary, "tangible-2", hold);
    CHECK_FALSE(t.h.error(t.h.send(t.primary, msg::AttachOoi{"tangible-2", col})));
    CHECK(t.h.session.oois().at(col).marker_id == "tangible-2");
    CHECK(t.command_error(cmd(col, CommandKind::Unlock))->code == "precondition");
    CHECK(t.h.session.check_invariants().empty());
}

TEST_CASE("[DR2.1] only locked OOIs can be deleted and ids are never reused")
{
    Tour t;
    const EntityId col = t.spawn("tangible-1", "column");
    CHECK(t.command_error(cmd(col, CommandKind::Delete))->code == "precondition");
    CHECK(t.command_error(cmd(t.ooi("porta_nigra"), CommandKind::Delete))->code == "precondition");
    t.command(highlight(t.ooi("city_wall"), true));
    t.command(cmd(col, CommandKind::Lock));
    const auto out = t.command(cmd(col, CommandKind::Delete));
    CHECK_FALSE(t.h.error(out));
    CHECK(t.h.session.oois().count(col) == 0);
    CHECK_FALSE(t.h.session.tree().contains(col));
    for (const ClientId c : {t.primary, t.student}) {
        const auto snaps = bodies_to<msg::StateSnapshot>(out, c);
        REQUIRE(snaps.size() == 1);
        for (const auto& e : (*snaps.back().state)["entities"]) {
            CHECK(e["id"] != col.value);
        }
    }
    const EntityId next = t.spawn("tangible-1", "column");
    CHECK(next.value > col.value);
}

TEST_CASE("[DR2.1] spawn, lock, reattach and delete cycles do not leak entities")
{
    Tour t;
    const std::size_t baseline = t.h.session.tree().entities().size();
    for (int i = 0; i < 20; ++i) {
        const EntityId id = t.spawn("tangible-1", i % 2 ? "column" : "mosaic");
        t.command(cmd(id, CommandKind::Lock));
        REQUIRE_FALSE(t.command_error(cmd(id, CommandKind::Unlock)));
        t.command(cmd(id, CommandKind::Lock));
        REQUIRE_FALSE(t.command_error(cmd(id, CommandKind::Delete)));
        CHECK(t.h.session.tree().entities().size() == baseline);
        CHECK(t.h.session.check_invariants().empty());
    }
}

TEST_CASE("[DR2.1] secondaries cannot issue interaction commands")
{
    Tour t;
    const std::string hash = canonical_hash(t.h.session.snapshot());
    for (int k = 0; k <= static_cast<int>(CommandKind::Delete); ++k) {
        msg::Interaction m = cmd(t.ooi("porta_nigra"), static_cast<CommandKind>(k));
        m.factor = 2.0;
        m.on = true;
        m.target = "porta_nigra_ruin";
        CHECK(t.h.error(t.h.send(t.student, m))->code == "unauthorized");
    }
    CHECK(t.h.error(t.h.send(t.student, msg::SelectOoi{t.ooi("porta_nigra"), std::nullopt}))->code == "unauthorized");
    CHECK(t.h.error(t.h.send(t.student, msg::AttachOoi{"tangible-1", t.ooi("porta_nigra")}))->code == "unauthorized");
    CHECK(canonical_hash(t.h.session.snapshot()) == hash);
}
