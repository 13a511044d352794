#include "cotour/net/client.hpp"

#include "cotour/session.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <charconv>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

namespace cotour::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

Endpoint parse_endpoint(const std::string& text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) {
        throw std::invalid_argument("endpoint must be host:port, got \"" + text + "\"");
    }
    Endpoint e;
    if (colon > 0) {
        e.host = text.substr(0, colon);
    }
    const std::string port = text.substr(colon + 1);
    unsigned value = 0;
    const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
    if (port.empty() || ec != std::errc{} || end != port.data() + port.size() || value == 0 || value > 65535) {
        throw std::invalid_argument("bad port in endpoint \"" + text + "\"");
    }
    e.port = static_cast<std::uint16_t>(value);
    return e;
}

struct Client::Impl {
    asio::io_context io;
    Transport transport = Transport::Tcp;
    std::unique_ptr<tcp::socket> socket;
    std::unique_ptr<websocket::stream<tcp::socket>> ws;
    std::thread reader;
    std::mutex write_mutex;
    mutable std::mutex mutex;
    std::condition_variable cv;
    std::deque<Message> inbox;
    bool eof = false;

    tcp::socket& lowest() { return ws ? beast::get_lowest_layer(*ws) : *socket; }

    void push(std::string_view text)
    {
        try {
            Message m = decode(text);
            std::lock_guard lock(mutex);
            inbox.push_back(std::move(m));
        } catch (const DecodeError& e) {
            spdlog::warn("client: dropping undecodable message: {}", e.what());
            return;
        }
        cv.notify_all();
    }

    void read_loop()
    {
        try {
            if (ws) {
                beast::flat_buffer buffer;
                for (;;) {
                    ws->read(buffer);
                    push(beast::buffers_to_string(buffer.data()));
                    buffer.consume(buffer.size());
                }
            } else {
                asio::streambuf buffer;
                for (;;) {
                    const std::size_t n = asio::read_until(*socket, buffer, '\n');
                    std::string line(asio::buffers_begin(buffer.data()), asio::buffers_begin(buffer.data()) + n - 1);
                    buffer.consume(n);
                    if (!line.empty()) {
                        push(line);
                    }
                }
            }
        } catch (const std::exception&) {
        }
        std::lock_guard lock(mutex);
        eof = true;
        cv.notify_all();
    }
};

Client::Client(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

std::unique_ptr<Client> Client::connect(const Endpoint& endpoint, Transport transport)
{
    auto impl = std::make_unique<Impl>();
    impl->transport = transport;
    try {
        tcp::resolver resolver(impl->io);
        const auto results = resolver.resolve(endpoint.host, std::to_string(endpoint.port));
        if (transport == Transport::WebSocket) {
            impl->ws = std::make_unique<websocket::stream<tcp::socket>>(impl->io);
            asio::connect(beast::get_lowest_layer(*impl->ws), results);
            impl->ws->text(true);
            impl->ws->handshake(endpoint.host, "/");
        } else {
            impl->socket = std::make_unique<tcp::socket>(impl->io);
            asio::connect(*impl->socket, results);
        }
        impl->lowest().set_option(tcp::no_delay(true));
    } catch (const boost::system::system_error& e) {
        throw ConnectionError("cannot connect to " + endpoint.host + ":" + std::to_string(endpoint.port) + ": " +
                              e.code().message());
    }
    Impl* raw = impl.get();
    impl->reader = std::thread([raw] { raw->read_loop(); });
    return std::unique_ptr<Client>(new Client(std::move(impl)));
}

Client::~Client() { close(); }

void Client::send(const Message& m) { send_raw(encode(m)); }

void Client::send_raw(const std::string& text)
{
    std::lock_guard lock(impl_->write_mutex);
    try {
        if (impl_->ws) {
            impl_->ws->write(asio::buffer(text));
        } else {
            asio::write(*impl_->socket, std::array{asio::buffer(text), asio::buffer("\n", 1)});
        }
    } catch (const boost::system::system_error& e) {
        throw ConnectionError("send failed: " + e.code().message());
    }
}

std::optional<Message> Client::receive(std::chrono::milliseconds timeout)
{
    std::unique_lock lock(impl_->mutex);
    impl_->cv.wait_for(lock, timeout, [&] { return !impl_->inbox.empty() || impl_->eof; });
    if (impl_->inbox.empty()) {
        return std::nullopt;
    }
    Message m = std::move(impl_->inbox.front());
    impl_->inbox.pop_front();
    return m;
}

Message Client::receive_until(const std::function<bool(const Message&)>& pred, std::chrono::milliseconds timeout,
                              std::vector<Message>* skipped)
{
    const auto deadline = Clock::now() + timeout;
    for (;;) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
        auto m = receive(std::max(left, std::chrono::milliseconds(0)));
        if (!m) {
            throw ConnectionError(closed() ? "connection closed" : "timed out waiting for a reply");
        }
        if (pred(*m)) {
            return std::move(*m);
        }
        if (skipped) {
            skipped->push_back(std::move(*m));
        }
    }
}

msg::Welcome Client::join(Role role, std::uint64_t seq, std::chrono::milliseconds timeout,
                          std::vector<Message>* skipped)
{
    send(Message{seq, kServer, msg::Join{role}});
    const Message reply = receive_until(
        [&](const Message& m) {
            const auto* e = std::get_if<msg::Error>(&m.body);
            return std::holds_alternative<msg::Welcome>(m.body) || (e && e->ref_seq == seq);
        },
        timeout, skipped);
    if (const auto* e = std::get_if<msg::Error>(&reply.body)) {
        throw Rejected(e->code, e->reason);
    }
    if (skipped) {
        skipped->push_back(reply);
    }
    return std::get<msg::Welcome>(reply.body);
}

json Client::request_snapshot(std::chrono::milliseconds timeout, std::vector<Message>* skipped)
{
    send(Message{0, kServer, msg::StateSnapshot{}});
    const Message reply = receive_until(
        [](const Message& m) {
            const auto* s = std::get_if<msg::StateSnapshot>(&m.body);
            return m.seq == 0 && s && s->state;
        },
        timeout, skipped);
    return *std::get<msg::StateSnapshot>(reply.body).state;
}

bool Client::closed() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->eof;
}

void Client::close()
{
    if (!impl_) {
        return;
    }
    boost::system::error_code ec;
    impl_->lowest().shutdown(tcp::socket::shutdown_both, ec);
    if (impl_->reader.joinable()) {
        impl_->reader.join();
    }
    impl_->lowest().close(ec);
}

} // namespace cotour::net
