#include "cotour/net/server.hpp"

#include "cotour/replay.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <system_error>
#include <csignal>
#include <deque>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <thread>

namespace cotour::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

constexpr std::size_t kMaxMessageBytes = 1 << 20;
constexpr std::size_t kMaxQueuedMessages = 4096;

class Connection : public std::enable_shared_from_this<Connection> {
public:
    using LineHandler = std::function<void(const std::shared_ptr<Connection>&, std::string)>;
    using CloseHandler = std::function<void(const std::shared_ptr<Connection>&)>;

    Connection(std::uint64_t id, LineHandler on_line, CloseHandler on_close)
        : id_(id), on_line_(std::move(on_line)), on_close_(std::move(on_close))
    {
    }
    virtual ~Connection() = default;

    virtual void start() = 0;
    virtual void close() = 0;
    virtual const char* transport() const = 0;

    void send(std::string text)
    {
        if (closed_) {
            return;
        }
        if (queue_.size() >= kMaxQueuedMessages) {
            spdlog::warn("connection {}: send queue full, dropping client", id_);
            close();
            return;
        }
        queue_.push_back(std::move(text));
        if (queue_.size() == 1) {
            write_next();
        }
    }

    std::uint64_t id() const { return id_; }
    std::optional<ClientId> client;

protected:
    virtual void write_next() = 0;

    void finished()
    {
        if (!closed_) {
            closed_ = true;
            on_close_(shared_from_this());
        }
    }

    std::uint64_t id_;
    LineHandler on_line_;
    CloseHandler on_close_;
    std::deque<std::string> queue_;
    bool closed_ = false;
};

class TcpConnection : public Connection {
public:
    TcpConnection(tcp::socket socket, std::uint64_t id, LineHandler on_line, CloseHandler on_close)
        : Connection(id, std::move(on_line), std::move(on_close)), socket_(std::move(socket)), buffer_(kMaxMessageBytes)
    {
    }

    void start() override { read(); }

    void close() override
    {
        boost::system::error_code ec;
        socket_.shutdown(tcp::socket::shutdown_both, ec);
        socket_.close(ec);
        finished();
    }

    const char* transport() const override { return "tcp"; }

private:
    void read()
    {
        asio::async_read_until(socket_, buffer_, '\n',
                               [self = std::static_pointer_cast<TcpConnection>(shared_from_this())](
                                   boost::system::error_code ec, std::size_t n) { self->on_read(ec, n); });
    }

    void on_read(boost::system::error_code ec, std::size_t n)
    {
        if (ec) {
            if (ec == asio::error::not_found) {
                spdlog::warn("connection {}: message exceeds {} bytes", id_, kMaxMessageBytes);
            }
            close();
            return;
        }
        std::string line(asio::buffers_begin(buffer_.data()), asio::buffers_begin(buffer_.data()) + n - 1);
        buffer_.consume(n);
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            on_line_(shared_from_this(), std::move(line));
        }
        if (!closed_) {
            read();
        }
    }

    void write_next() override
    {
        queue_.front().push_back('\n');
        asio::async_write(socket_, asio::buffer(queue_.front()),
                          [self = std::static_pointer_cast<TcpConnection>(shared_from_this())](
                              boost::system::error_code ec, std::size_t) {
                              if (ec) {
                                  self->close();
                                  return;
                              }
                              self->queue_.pop_front();
                              if (!self->queue_.empty() && !self->closed_) {
                                  self->write_next();
                              }
                          });
    }

    tcp::socket socket_;
    asio::streambuf buffer_;
};

class WsConnection : public Connection {
public:
    WsConnection(tcp::socket socket, std::uint64_t id, LineHandler on_line, CloseHandler on_close)
        : Connection(id, std::move(on_line), std::move(on_close)), ws_(std::move(socket))
    {
        ws_.read_message_max(kMaxMessageBytes);
        ws_.text(true);
    }

    void start() override
    {
        ws_.async_accept([self = std::static_pointer_cast<WsConnection>(shared_from_this())](beast::error_code ec) {
            if (ec) {
                self->close();
                return;
            }
            self->read();
        });
    }

    void close() override
    {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).shutdown(tcp::socket::shutdown_both, ec);
        beast::get_lowest_layer(ws_).close(ec);
        finished();
    }

    const char* transport() const override { return "ws"; }

private:
    void read()
    {
        ws_.async_read(buffer_, [self = std::static_pointer_cast<WsConnection>(shared_from_this())](
                                    beast::error_code ec, std::size_t) { self->on_read(ec); });
    }

    void on_read(beast::error_code ec)
    {
        if (ec) {
            close();
            return;
        }
        std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        on_line_(shared_from_this(), std::move(text));
        if (!closed_) {
            read();
        }
    }

    void write_next() override
    {
        ws_.async_write(asio::buffer(queue_.front()),
                        [self = std::static_pointer_cast<WsConnection>(shared_from_this())](beast::error_code ec,
                                                                                             std::size_t) {
                            if (ec) {
                                self->close();
                                return;
                            }
                            self->queue_.pop_front();
                            if (!self->queue_.empty() && !self->closed_) {
                                self->write_next();
                            }
                        });
    }

    websocket::stream<tcp::socket> ws_;
    beast::flat_buffer buffer_;
};

} // namespace

struct Server::Impl {
    Impl(ServerConfig c, World world)
        : config(std::move(c)),
          record(config.record_path.empty() ? nullptr : std::make_unique<std::ofstream>(config.record_path)),
          host(std::move(world), config.session, record.get()),
          tcp_acceptor(io),
          ws_acceptor(io),
          timer(io)
    {
        if (record && !*record) {
            throw std::runtime_error("cannot open record file " + config.record_path);
        }
        host.session().take_outbox();
    }

    void listen(tcp::acceptor& acceptor, std::uint16_t port)
    {
        try {
            const tcp::endpoint endpoint(asio::ip::make_address(config.host), port);
            acceptor.open(endpoint.protocol());
            acceptor.set_option(tcp::acceptor::reuse_address(true));
            acceptor.bind(endpoint);
            acceptor.listen();
        } catch (const boost::system::system_error& e) {
            throw std::system_error(e.code().value(), std::system_category(),
                                    "cannot listen on " + config.host + ":" + std::to_string(port));
        }
    }

    template <typename Conn>
    void accept(tcp::acceptor& acceptor)
    {
        acceptor.async_accept([this, &acceptor](boost::system::error_code ec, tcp::socket socket) {
            if (ec) {
                return;
            }
            boost::system::error_code opt_ec;
            socket.set_option(tcp::no_delay(true), opt_ec);
            auto conn = std::make_shared<Conn>(
                std::move(socket), ++next_connection,
                [this](const std::shared_ptr<Connection>& c, std::string line) { on_line(c, std::move(line)); },
                [this](const std::shared_ptr<Connection>& c) { on_close(c); });
            connections.insert(conn);
            spdlog::info("connection {} opened ({})", conn->id(), conn->transport());
            conn->start();
            accept<Conn>(acceptor);
        });
    }

    void reply(const std::shared_ptr<Connection>& conn, Body body)
    {
        conn->send(encode(Message{0, kServer, std::move(body)}));
    }

    void on_line(const std::shared_ptr<Connection>& conn, std::string line)
    {
        Message m;
        try {
            m = decode(line);
        } catch (const DecodeError& e) {
            spdlog::warn("connection {}: undecodable message: {}", conn->id(), e.what());
            reply(conn, msg::Error{"invalid", e.what(), 0});
            return;
        }
        if (const auto* req = std::get_if<msg::StateSnapshot>(&m.body); req && !req->state) {
            reply(conn, msg::StateSnapshot::of(host.session().snapshot()));
            return;
        }
        if (!conn->client) {
            const auto* join = std::get_if<msg::Join>(&m.body);
            if (!join) {
                reply(conn, msg::Error{"unauthorized", "join first", m.seq});
                return;
            }
            try {
                const ClientId id = host.join(join->role, m.seq);
                conn->client = id;
                clients[id] = conn;
                spdlog::info("connection {} joined as {} client {}", conn->id(), to_string(join->role), id.value);
            } catch (const Rejected& e) {
                reply(conn, msg::Error{e.code(), e.what(), m.seq});
            }
            flush();
            return;
        }
        const ClientId id = *conn->client;
        spdlog::debug("t={:.3f} client {} seq {} {}", host.session().time(), id.value, m.seq, type_name(m.body));
        host.handle(id, m);
        if (!host.session().roles().count(id)) {
            clients.erase(id);
            conn->client.reset();
            spdlog::info("client {} left", id.value);
        }
        flush();
    }

    void on_close(const std::shared_ptr<Connection>& conn)
    {
        connections.erase(conn);
        spdlog::info("connection {} closed", conn->id());
        if (conn->client) {
            const ClientId id = *conn->client;
            conn->client.reset();
            clients.erase(id);
            host.leave(id);
            flush();
        }
    }

    void flush()
    {
        for (auto& out : host.session().take_outbox()) {
            if (const auto it = clients.find(out.to); it != clients.end()) {
                it->second->send(encode(out.message));
            }
        }
    }

    void schedule_tick()
    {
        const auto period = std::chrono::duration_cast<asio::steady_timer::duration>(
            std::chrono::duration<double>(1.0 / config.tick_rate));
        timer.expires_at(timer.expiry() + period);
        timer.async_wait([this](boost::system::error_code ec) {
            if (ec) {
                return;
            }
            host.tick(1.0 / config.tick_rate);
            flush();
            schedule_tick();
        });
    }

    void shutdown()
    {
        boost::system::error_code ec;
        tcp_acceptor.close(ec);
        ws_acceptor.close(ec);
        timer.cancel();
        for (const auto& conn : std::set<std::shared_ptr<Connection>>(connections)) {
            conn->close();
        }
        io.stop();
    }

    ServerConfig config;
    std::unique_ptr<std::ofstream> record;
    SessionHost host;
    asio::io_context io;
    tcp::acceptor tcp_acceptor;
    tcp::acceptor ws_acceptor;
    asio::steady_timer timer;
    std::set<std::shared_ptr<Connection>> connections;
    std::map<ClientId, std::shared_ptr<Connection>> clients;
    std::uint64_t next_connection = 0;
    std::thread thread;
    bool started = false;
};

Server::Server(ServerConfig config, World world) : impl_(std::make_unique<Impl>(std::move(config), std::move(world)))
{
}

Server::~Server()
{
    stop();
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

void Server::start()
{
    impl_->listen(impl_->tcp_acceptor, impl_->config.port);
    if (impl_->config.ws_port) {
        impl_->listen(impl_->ws_acceptor, *impl_->config.ws_port);
    }
    impl_->accept<TcpConnection>(impl_->tcp_acceptor);
    if (impl_->config.ws_port) {
        impl_->accept<WsConnection>(impl_->ws_acceptor);
    }
    impl_->timer.expires_at(std::chrono::steady_clock::now());
    impl_->schedule_tick();
    impl_->started = true;
    spdlog::info("serving on {}:{} (tcp){} at {} Hz", impl_->config.host, port(),
                 ws_port() ? fmt::format(", {} (ws)", *ws_port()) : std::string(), impl_->config.tick_rate);
}

void Server::run()
{
    asio::signal_set signals(impl_->io, SIGINT, SIGTERM);
    signals.async_wait([this](boost::system::error_code ec, int sig) {
        if (!ec) {
            spdlog::info("signal {}, shutting down", sig);
            impl_->shutdown();
        }
    });
    impl_->io.run();
}

void Server::run_in_background()
{
    impl_->thread = std::thread([this] { impl_->io.run(); });
}

void Server::stop()
{
    if (impl_->started && !impl_->io.stopped()) {
        asio::post(impl_->io, [impl = impl_.get()] { impl->shutdown(); });
    }
}

std::uint16_t Server::port() const { return impl_->tcp_acceptor.local_endpoint().port(); }

std::optional<std::uint16_t> Server::ws_port() const
{
    if (!impl_->config.ws_port) {
        return std::nullopt;
    }
    return impl_->ws_acceptor.local_endpoint().port();
}

json Server::snapshot()
{
    std::promise<json> result;
    asio::post(impl_->io, [&] { result.set_value(impl_->host.session().snapshot()); });
    return result.get_future().get();
}

} // namespace cotour::net
