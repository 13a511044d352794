#include "cotour/canonical.hpp"
#include "cotour/replay.hpp"
#include "cotour/scenario.hpp"
#include "harness.hpp"

#include <doctest.h>

#include <sstream>

using namespace cotour;

namespace {

struct Recorded {
    std::string log;
    std::string hash;
};

Recorded record_staged_tour()
{
    std::ostringstream log;
    const Scenario s = load_scenario_file(testing::data_path("scenarios/staged_tour.json"));
    const ScenarioReport r = run_scenario_in_process(s, {}, &log);
    REQUIRE(r.passed);
    return {log.str(), r.final_hash};
}

ReplayResult replay_text(const std::string& text)
{
    std::istringstream in(text);
    return replay(in);
}

} // namespace

TEST_CASE("a recorded tour replays to the same snapshot hash twice")
{
    const Recorded rec = record_staged_tour();
    const ReplayResult a = replay_text(rec.log);
    const ReplayResult b = replay_text(rec.log);
    CHECK_FALSE(a.truncated);
    CHECK(a.hash == rec.hash);
    CHECK(b.hash == rec.hash);
    CHECK(canonical_dump(a.snapshot) == canonical_dump(b.snapshot));
    CHECK(a.events > 100);
}

TEST_CASE("a log with only a header replays to the initial snapshot")
{
    std::ostringstream log;
    SessionHost host(testing::test_world(), {}, &log);
    const ReplayResult r = replay_text(log.str());
    CHECK(r.events == 0);
    CHECK_FALSE(r.truncated);
    CHECK(r.hash == canonical_hash(host.session().snapshot()));
    CHECK(r.hash == canonical_hash(Session(testing::test_world(), {}).snapshot()));
}

TEST_CASE("a truncated log replays up to the cut and says where it stopped")
{
    const Recorded rec = record_staged_tour();
    // Cut the log in the middle of a line two thirds of the way through.
    const std::string cut = rec.log.substr(0, rec.log.size() * 2 / 3);
    const std::size_t complete_lines = static_cast<std::size_t>(std::count(cut.begin(), cut.end(), '\n'));
    const ReplayResult r = replay_text(cut);
    CHECK(r.truncated);
    CHECK(r.events == complete_lines - 1);
    CHECK(r.note.find("line " + std::to_string(complete_lines + 1)) != std::string::npos);
    CHECK(r.hash != rec.hash);

    // The prefix on its own gives the same state.
    const ReplayResult prefix = replay_text(cut.substr(0, cut.rfind('\n') + 1));
    CHECK_FALSE(prefix.truncated);
    CHECK(prefix.hash == r.hash);
}

TEST_CASE("logs from another version or without a header are refused")
{
    CHECK_THROWS_AS(replay_text(""), ReplayError);
    CHECK_THROWS_AS(replay_text("not json\n"), ReplayError);
    CHECK_THROWS_AS(replay_text(R"({"log": "other", "version": 1})"), ReplayError);

    std::ostringstream log;
    SessionHost host(testing::test_world(), {}, &log);
    json header = json::parse(log.str());
    header["version"] = kLogVersion + 1;
    try {
        replay_text(header.dump() + "\n");
        FAIL("expected a version error");
    } catch (const ReplayError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }
}

TEST_CASE("a join that comes out differently on replay is reported as divergence")
{
    std::ostringstream log;
    SessionHost host(testing::test_world(), {}, &log);
    host.join(Role::Primary);
    std::string text = log.str();
    const auto pos = text.find("\"client\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 10, "\"client\":7");
    CHECK_THROWS_AS(replay_text(text), ReplayError);
}

TEST_CASE("rejected joins are logged and replay as rejections")
{
    std::ostringstream log;
    SessionHost host(testing::test_world(), {}, &log);
    host.join(Role::Primary);
    CHECK_THROWS_AS(host.join(Role::Primary), Rejected);
    host.join(Role::Secondary);
    const ReplayResult r = replay_text(log.str());
    CHECK(r.events == 3);
    CHECK(r.hash == canonical_hash(host.session().snapshot()));
}
