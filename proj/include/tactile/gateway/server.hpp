#pragma once

// Transports for Session: WebSocket (one session per connection) and
// newline-delimited JSON over a pair of streams. Each session runs on its own
// strand; the model and config are shared read-only.

#include <atomic>
#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "tactile/gateway/session.hpp"

namespace tactile::gateway {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

/// Session plus real timers. Every member function must run on `exec`.
class TimedSession {
public:
    using Sink = std::function<void(std::string)>;

    TimedSession(net::any_io_executor exec, std::shared_ptr<const BiLstmClassifier> model, GlobalConfig cfg,
                 Sink sink)
        : exec_(std::move(exec)), session_(std::move(model), std::move(cfg)), sink_(std::move(sink)),
          alive_(std::make_shared<bool>(true)) {}

    ~TimedSession() { close(); }
    TimedSession(const TimedSession&) = delete;
    TimedSession& operator=(const TimedSession&) = delete;

    void handle(std::string_view text) { deliver(session_.handle(text)); }

    void close() {
        *alive_ = false;
        for (auto& [id, t] : timers_) t->cancel();
    }

    const Session& session() const { return session_; }

private:
    void deliver(const Output& out) {
        for (const auto& m : out.messages) sink_(to_wire(m));
        for (const auto& cmd : out.timers) {
            auto& timer = timers_[cmd.timer];
            if (!timer) timer = std::make_unique<net::steady_timer>(exec_);
            timer->cancel();
            if (!cmd.arm_s) continue;
            timer->expires_after(std::chrono::duration_cast<net::steady_timer::duration>(
                std::chrono::duration<double>(*cmd.arm_s)));
            timer->async_wait([this, alive = alive_, id = cmd.timer, gen = cmd.generation](beast::error_code ec) {
                if (ec || !*alive) return;
                deliver(session_.fire_timer(id, gen));
            });
        }
    }

    net::any_io_executor exec_;
    Session session_;
    Sink sink_;
    std::map<SessionTimer, std::unique_ptr<net::steady_timer>> timers_;
    std::shared_ptr<bool> alive_;
};

namespace detail {

class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, std::shared_ptr<const BiLstmClassifier> model, const GlobalConfig& cfg)
        : ws_(std::move(socket)), model_(std::move(model)), cfg_(cfg) {}

    void start() {
        net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->accept(); });
    }

private:
    void accept() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            std::weak_ptr<Connection> weak = self;
            self->session_ = std::make_unique<TimedSession>(self->ws_.get_executor(), self->model_, self->cfg_,
                                                            [weak](std::string msg) {
                                                                if (auto s = weak.lock()) s->send(std::move(msg));
                                                            });
            self->read();
        });
    }

    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->session_->close();  // disconnect discards the session
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->session_->handle(text);
            self->read();
        });
    }

    void send(std::string msg) {
        outbox_.push_back(std::move(msg));
        if (outbox_.size() == 1) write_next();
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) return;
            self->outbox_.erase(self->outbox_.begin());
            if (!self->outbox_.empty()) self->write_next();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    std::shared_ptr<const BiLstmClassifier> model_;
    GlobalConfig cfg_;
    beast::flat_buffer buffer_;
    std::vector<std::string> outbox_;
    std::unique_ptr<TimedSession> session_;
};

}  // namespace detail

/// WebSocket endpoint. `start` binds and returns the actual port (useful with
/// port 0); `run` blocks until `stop`.
class Server {
public:
    Server(std::shared_ptr<const BiLstmClassifier> model, GlobalConfig cfg)
        : model_(std::move(model)), cfg_(std::move(cfg)), acceptor_(ioc_) {
        if (!model_) throw Error("server needs a model");
    }

    std::uint16_t start() {
        beast::error_code ec;
        const auto addr = net::ip::make_address(cfg_.listen_address, ec);
        if (ec) throw ConfigError("bad listen_address: " + cfg_.listen_address);
        const tcp::endpoint ep{addr, cfg_.port};
        acceptor_.open(ep.protocol());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind(ep);
        acceptor_.listen(net::socket_base::max_listen_connections);
        accept();
        return acceptor_.local_endpoint().port();
    }

    void run(unsigned threads = 1) {
        std::vector<std::thread> pool;
        for (unsigned i = 1; i < threads; ++i) pool.emplace_back([this] { ioc_.run(); });
        ioc_.run();
        for (auto& t : pool) t.join();
    }

    void stop() { ioc_.stop(); }

private:
    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (!ec) std::make_shared<detail::Connection>(std::move(socket), model_, cfg_)->start();
            if (acceptor_.is_open()) accept();
        });
    }

    std::shared_ptr<const BiLstmClassifier> model_;
    GlobalConfig cfg_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
};

/// One session over newline-delimited JSON: a line in, zero or more lines out.
/// Timers run on the wall clock; at end of input, timers already armed are
/// cancelled and the function returns.
inline void run_stdio_session(std::istream& in, std::ostream& out, std::shared_ptr<const BiLstmClassifier> model,
                              const GlobalConfig& cfg) {
    net::io_context ioc;
    auto guard = net::make_work_guard(ioc);
    std::mutex out_mu;
    TimedSession session(ioc.get_executor(), std::move(model), cfg, [&](std::string line) {
        std::lock_guard lock(out_mu);
        out << line << '\n' << std::flush;
    });
    std::thread reader([&] {
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            net::post(ioc, [&session, line] { session.handle(line); });
        }
        net::post(ioc, [&] {
            session.close();
            guard.reset();
        });
    });
    ioc.run();
    reader.join();
}

}  // namespace tactile::gateway
