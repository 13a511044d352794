#include "cotour/canonical.hpp"
#include "cotour/replay.hpp"
#include "cotour/scenario.hpp"
#include "cotour/ui_geometry.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace cotour;

namespace {

Pose pose_from_text(const std::string& text) { return pose_from_json(json::parse(text), "pose"); }

std::string outbox_json(Session& s)
{
    json out = json::array();
    for (const auto& o : s.take_outbox()) {
        out.push_back({{"to", o.to.value}, {"message", message_to_json(o.message)}});
    }
    return out.dump();
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Session core bindings. Structured values cross the boundary as JSON text.";

    py::register_exception<DocumentError>(m, "DocumentError", PyExc_ValueError);
    py::register_exception<ReplayError>(m, "ReplayError", PyExc_RuntimeError);
    static py::exception<Rejected> rejected(m, "Rejected", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Rejected& e) {
            PyErr_SetObject(rejected.ptr(), py::make_tuple(e.code(), e.what()).ptr());
        }
    });

    m.def("encode", [](const std::string& message_json) { return encode(message_from_json(json::parse(message_json))); });
    m.def("decode", [](const std::string& wire) { return message_to_json(decode(wire)).dump(); });
    m.def("message_types", [] {
        std::vector<std::string> out;
        for (const auto n : message_type_names()) {
            out.emplace_back(n);
        }
        return out;
    });
    m.def("canonical_dump", [](const std::string& text) { return canonical_dump(json::parse(text)); });
    m.def("canonical_hash", [](const std::string& text) { return canonical_hash(json::parse(text)); });

    m.def("compose", [](const std::string& parent, const std::string& child) {
        return to_json(compose(pose_from_text(parent), pose_from_text(child))).dump();
    });
    m.def("to_local", [](const std::string& world, const std::string& parent) {
        return to_json(to_local(pose_from_text(world), pose_from_text(parent))).dump();
    });

    m.def(
        "radial_button_layout",
        [](int n, double radius_pct, double w, double h) {
            const RadialLayout layout = radial_button_layout(LayoutSpec{radius_pct, w, h, n});
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : layout.points) {
                pts.emplace_back(p.x, p.y);
            }
            return pts;
        },
        py::arg("button_count"), py::arg("radius_pct"), py::arg("screen_w"), py::arg("screen_h"));

    m.def("map_hub_position", [](const std::string& world_json, std::array<double, 3> p) {
        const Vec3 v = map_hub_position(load_world(json::parse(world_json)).calibration, {p[0], p[1], p[2]});
        return std::array<double, 3>{v.x, v.y, v.z};
    });

    py::class_<Session>(m, "Session")
        .def(py::init([](const std::string& world_json, const std::string& config_json) {
                 return std::make_unique<Session>(load_world(json::parse(world_json)),
                                                  session_config_from_json(json::parse(config_json)));
             }),
             py::arg("world_json"), py::arg("config_json") = "{}")
        .def(
            "join",
            [](Session& s, const std::string& role, std::uint64_t seq) {
                const auto r = role_from_string(role);
                if (!r) {
                    throw py::value_error("unknown role " + role);
                }
                return s.join(*r, seq).value;
            },
            py::arg("role"), py::arg("seq") = 0)
        .def("leave", [](Session& s, std::uint32_t client) { s.leave(ClientId{client}); })
        .def("handle",
             [](Session& s, std::uint32_t sender, const std::string& message_json) {
                 s.handle(ClientId{sender}, message_from_json(json::parse(message_json)));
             })
        .def("tick", &Session::tick)
        .def("snapshot", [](const Session& s) { return s.snapshot().dump(); })
        .def("take_outbox", &outbox_json)
        .def("check_invariants", &Session::check_invariants)
        .def_property_readonly("time", &Session::time);

    m.def(
        "run_scenario_file",
        [](const std::string& path) { return run_scenario_in_process(load_scenario_file(path)).to_json().dump(); },
        py::call_guard<py::gil_scoped_release>());
    m.def("replay_text", [](const std::string& log) {
        std::istringstream in(log);
        const ReplayResult r = replay(in);
        return json{{"hash", r.hash}, {"events", r.events}, {"truncated", r.truncated}, {"note", r.note}}.dump();
    });
}
