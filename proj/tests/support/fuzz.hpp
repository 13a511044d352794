#pragma once

#include "cotour/canonical.hpp"
#include "cotour/mirror.hpp"
#include "harness.hpp"
#include "oracles.hpp"
#include "random_messages.hpp"

#include <sstream>

namespace testing {

/// Largest disagreement between the server and a client mirror. Primary
/// mirrors are compared on world poses of every entity, secondary mirrors on
/// city-frame poses of avatars and OOIs.
inline double mirror_error(const Session& s, const ClientMirror& m, Role role)
{
    double worst = 0.0;
    if (role == Role::Primary) {
        for (const auto& [id, e] : s.tree().entities()) {
            if (!m.tree().contains(id)) {
                return std::numeric_limits<double>::infinity();
            }
            worst = std::max(worst, oracle::pose_error(s.tree().world_pose(id), m.world_pose(id)));
        }
        return worst;
    }
    std::vector<EntityId> ids;
    for (const auto& [c, info] : s.secondaries()) {
        ids.push_back(info.avatar);
    }
    for (const auto& [id, o] : s.oois()) {
        ids.push_back(id);
    }
    for (const EntityId id : ids) {
        if (!m.tree().contains(id)) {
            return std::numeric_limits<double>::infinity();
        }
        worst = std::max(worst, oracle::pose_error(s.city_pose(id), m.city_pose(id)));
    }
    return worst;
}

struct FuzzStats {
    std::size_t messages = 0;
    std::size_t allowed = 0;
    std::size_t rejected = 0;
    std::size_t dropped = 0;
    std::size_t queries = 0;
    /// Messages the oracle rejected that changed the snapshot or got the
    /// wrong reply.
    std::size_t unauthorized_mutations = 0;
    std::size_t wrong_replies = 0;
    std::size_t exceptions = 0;
    std::size_t invariant_failures = 0;
    double worst_mirror_error = 0.0;
    std::vector<std::string> notes;

    bool clean() const
    {
        return unauthorized_mutations == 0 && wrong_replies == 0 && exceptions == 0 && invariant_failures == 0;
    }
};

/// Drives a session with random messages from joined and unjoined senders.
/// Every outgoing message is passed through the codec into per-client
/// mirrors.
class Fuzzer {
public:
    /// Without mirrors only the authorization and invariant checks run.
    explicit Fuzzer(std::uint64_t seed, bool mirrors = true) : gen_(seed), h_(), mirrored_(mirrors)
    {
        join(Role::Primary);
        join(Role::Secondary);
        join(Role::Secondary);
        clients_.push_back(ClientId{1000});
        place_markers();
    }

    Session& session() { return h_.session; }

    FuzzStats run(std::size_t n, std::size_t mirror_every = 0)
    {
        FuzzStats stats;
        for (std::size_t i = 0; i < n; ++i) {
            step(stats);
            if (mirror_every && i % mirror_every == 0) {
                stats.worst_mirror_error = std::max(stats.worst_mirror_error, drain_and_compare());
            }
        }
        stats.worst_mirror_error = std::max(stats.worst_mirror_error, drain_and_compare());
        return stats;
    }

    /// Runs until `messages` messages (ticks excluded) have been handled.
    FuzzStats run_messages(std::size_t messages)
    {
        FuzzStats stats;
        while (stats.messages < messages) {
            step(stats);
        }
        return stats;
    }

    /// Pose deltas go out on ticks, so mirrors are compared after one.
    double drain_and_compare()
    {
        h_.session.tick(1.0 / 30.0);
        deliver(h_.drain());
        return worst_mirror_error();
    }

    double worst_mirror_error() const
    {
        double worst = 0.0;
        const RoleTable live = h_.session.roles();
        for (const auto& [id, m] : mirrors_) {
            if (const auto it = live.find(id); it != live.end()) {
                worst = std::max(worst, mirror_error(h_.session, m, it->second));
            }
        }
        return worst;
    }

private:
    void join(Role role)
    {
        const ClientId id = h_.session.join(role, 0);
        clients_.push_back(id);
        roles_[id] = role;
        deliver(h_.drain());
    }

    void place_markers()
    {
        const ClientId p = *h_.session.primary();
        h_.seq[p.value] = last_seq_[p.value];
        h_.place_markers(p);
        last_seq_[p.value] = seq_[p.value] = h_.seq[p.value];
        deliver(h_.drain());
    }

    void deliver(const std::vector<Outgoing>& out)
    {
        if (!mirrored_) {
            return;
        }
        for (const auto& o : out) {
            mirrors_[o.to].apply(decode(encode(o.message)));
        }
    }

    void refill()
    {
        for (auto it = roles_.begin(); it != roles_.end();) {
            const auto r = h_.session.roles();
            it = r.count(it->first) ? std::next(it) : roles_.erase(it);
        }
        if (!h_.session.primary()) {
            join(Role::Primary);
            place_markers();
        }
        while (h_.session.secondaries().size() < 2) {
            join(Role::Secondary);
        }
    }

    /// Mostly plausible traffic with enough noise to hit every gate.
    Message next_message(std::uint64_t next_entity)
    {
        ClientId sender = clients_[gen_.uniform(0, clients_.size() - 1)];
        if (gen_.uniform(0, 9) < 8) {
            auto it = roles_.begin();
            std::advance(it, static_cast<long>(gen_.uniform(0, roles_.size() - 1)));
            sender = it->first;
        }
        gen_.max_entity = next_entity + 1;
        gen_.max_client = static_cast<std::uint32_t>(clients_.back().value);
        Body body = gen_.any_body();
        while (std::holds_alternative<msg::Leave>(body) && gen_.uniform(0, 19) != 0) {
            body = gen_.any_body();
        }
        if (auto* m = std::get_if<msg::MarkerPose>(&body)) {
            m->pose.position = m->pose.position * 0.2 + Vec3{0.0, 0.8, 0.0};
        }
        if (auto* t = std::get_if<msg::TeleportShort>(&body)) {
            if (const auto it = h_.session.secondaries().find(sender); it != h_.session.secondaries().end()) {
                if (gen_.coin()) {
                    t->avatar = it->second.avatar;
                }
                t->target = it->second.city_pose.position + Vec3{gen_.real(-8, 8), 0.0, gen_.real(-8, 8)};
            }
        }
        if (auto* p = std::get_if<msg::Pickup>(&body); p && p->shovel_on_map && !h_.session.secondaries().empty()) {
            const SecondaryInfo& s = h_.session.secondaries().begin()->second;
            p->shovel_on_map = to_local(h_.session.tree().world_pose(s.avatar),
                                        h_.session.tree().world_pose(h_.prop(PropKind::MapHub).anchor));
        }
        std::uint64_t& last = seq_[sender.value];
        const std::uint64_t seq = gen_.uniform(0, 9) == 0 ? gen_.uniform(0, last + 1) : last + 1 + gen_.uniform(0, 2);
        const ClientId claimed = gen_.uniform(0, 19) == 0 ? clients_[gen_.uniform(0, clients_.size() - 1)] : sender;
        return Message{seq, claimed, std::move(body)};
    }

    void step(FuzzStats& stats)
    {
        if (gen_.uniform(0, 24) == 0) {
            h_.session.tick(1.0 / 30.0);
            deliver(h_.drain());
            return;
        }
        refill();
        const json before = h_.session.snapshot();
        Message m = next_message(before["next_entity_id"].get<std::uint64_t>());
        // The transport knows who really sent it; pick it from the seq table.
        ClientId sender = m.sender;
        if (gen_.uniform(0, 19) == 0) {
            sender = clients_[gen_.uniform(0, clients_.size() - 1)];
        }
        const json wire = json::parse(encode(m));
        const std::uint64_t last = h_.session.roles().count(sender) ? last_seq_[sender.value] : 0;
        const oracle::Verdict verdict = oracle::expected_verdict(before, sender.value, last, wire);

        ++stats.messages;
        std::vector<Outgoing> out;
        try {
            h_.session.handle(sender, m);
            out = h_.drain();
        } catch (const std::exception& e) {
            ++stats.exceptions;
            stats.notes.push_back(std::string("exception: ") + e.what() + " on " + wire.dump());
            h_.drain();
            return;
        }
        if (verdict != oracle::Verdict::Drop && h_.session.roles().count(sender)) {
            last_seq_[sender.value] = m.seq;
        }
        if (h_.session.roles().count(sender) == 0) {
            last_seq_.erase(sender.value);
        }
        seq_[sender.value] = std::max(seq_[sender.value], m.seq);

        const auto errors = [&]() {
            std::vector<msg::Error> r;
            for (const auto& o : out) {
                if (const auto* e = std::get_if<msg::Error>(&o.message.body); e && o.to == sender) {
                    r.push_back(*e);
                }
            }
            return r;
        }();
        const auto unchanged = [&] { return canonical_hash(h_.session.snapshot()) == canonical_hash(before); };
        const auto note = [&](const std::string& what) {
            if (stats.notes.size() < 20) {
                stats.notes.push_back(what + ": " + wire.dump());
            }
        };
        switch (verdict) {
        case oracle::Verdict::Drop:
            ++stats.dropped;
            if (!unchanged()) {
                ++stats.unauthorized_mutations;
                note("stale message changed state");
            }
            if (!out.empty()) {
                ++stats.wrong_replies;
                note("stale message got a reply");
            }
            break;
        case oracle::Verdict::Reject:
            ++stats.rejected;
            if (!unchanged()) {
                ++stats.unauthorized_mutations;
                note("rejected message changed state");
            }
            if (out.size() != 1 || errors.size() != 1 || errors[0].code != "unauthorized") {
                ++stats.wrong_replies;
                std::string got;
                for (const auto& o : out) {
                    got += " " + encode(o.message).substr(0, 120) + " to " + std::to_string(o.to.value);
                }
                note("rejected message without a single unauthorized error (from " + std::to_string(sender.value) +
                     "):" + got);
            }
            break;
        case oracle::Verdict::Query:
            ++stats.queries;
            if (out.size() != 1 || !std::get_if<msg::StateSnapshot>(&out[0].message.body) || !unchanged()) {
                ++stats.wrong_replies;
                note("snapshot query misbehaved");
            }
            break;
        case oracle::Verdict::Allow:
            ++stats.allowed;
            for (const auto& e : errors) {
                if (e.code == "unauthorized") {
                    ++stats.wrong_replies;
                    note("allowed message was refused");
                } else if (e.code != "clamped" && !unchanged()) {
                    ++stats.unauthorized_mutations;
                    note("failed message changed state");
                }
            }
            break;
        }
        deliver(out);
        if (const auto problems = h_.session.check_invariants(); !problems.empty()) {
            ++stats.invariant_failures;
            note("invariant: " + problems.front());
        }
    }

    MessageGenerator gen_;
    Harness h_;
    std::vector<ClientId> clients_;
    std::map<ClientId, Role> roles_;
    std::map<ClientId, ClientMirror> mirrors_;
    std::map<std::uint32_t, std::uint64_t> seq_;
    std::map<std::uint32_t, std::uint64_t> last_seq_;
    bool mirrored_ = true;
};

} // namespace testing
