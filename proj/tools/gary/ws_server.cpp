#include "ws_server.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <optional>
#include <iostream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

namespace gary::tools {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, const Material& text, const ServerOptions& opts, std::atomic<std::size_t>& active,
             std::uint64_t serial)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        text_(text),
        opts_(opts),
        active_(active),
        serial_(serial) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  double now_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started_).count();
  }

  void on_accept(beast::error_code ec) {
    if (ec) return;
    if (active_.load() >= opts_.max_sessions) {
      send({{"type", "error"}, {"session_id", nullptr},
            {"payload", {{"code", "SessionLimit"}, {"message", "too many concurrent sessions"}}}});
      closing_ = true;
      flush();
      return;
    }
    ++active_;
    counted_ = true;
    started_ = std::chrono::steady_clock::now();
    service_.emplace("ws-" + std::to_string(serial_), text_, opts_.service);
    deliver(service_->open(0.0));
    read();
    schedule_tick();
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      finish();
      return;
    }
    const std::string frame = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    deliver(service_->handle(frame, now_ms()));
    if (!closing_) read();
  }

  void schedule_tick() {
    timer_.expires_after(std::chrono::microseconds(static_cast<long>(1e6 / opts_.service.tick_hz)));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_) return;
      self->deliver(self->service_->tick(self->now_ms()));
      self->schedule_tick();
    });
  }

  void deliver(const SessionService::Output& out) {
    for (const auto& f : out.frames) send(f);
    if (out.close) closing_ = true;
    flush();
  }

  void send(const nlohmann::json& frame) { queue_.push_back(frame.dump()); }

  void flush() {
    if (writing_) return;
    if (queue_.empty()) {
      if (closing_ && !closed_) {
        closed_ = true;
        timer_.cancel();
        ws_.async_close(websocket::close_code::normal,
                        [self = shared_from_this()](beast::error_code) { self->finish(); });
      }
      return;
    }
    writing_ = true;
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->queue_.clear();
        self->finish();
        return;
      }
      self->queue_.pop_front();
      self->flush();
    });
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    closing_ = true;
    timer_.cancel();
    if (counted_) --active_;
    if (service_) {
      try {
        if (auto path = save_session_log(*service_)) std::cerr << "session log: " << *path << '\n';
      } catch (const std::exception& e) {
        std::cerr << "cannot write session log: " << e.what() << '\n';
      }
    }
  }

  websocket::stream<tcp::socket> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  const Material& text_;
  const ServerOptions& opts_;
  std::atomic<std::size_t>& active_;
  std::uint64_t serial_;
  std::optional<SessionService> service_;
  std::chrono::steady_clock::time_point started_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool closing_ = false;
  bool closed_ = false;
  bool finished_ = false;
  bool counted_ = false;
};

}  // namespace

struct WsServer::Impl {
  Impl(Material t, ServerOptions o) : text(std::move(t)), opts(std::move(o)), acceptor(io) {}

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Connection>(std::move(socket), text, opts, active, ++serial)->start();
      accept();
    });
  }

  Material text;
  ServerOptions opts;
  asio::io_context io{1};
  tcp::acceptor acceptor;
  std::atomic<std::size_t> active{0};
  std::uint64_t serial = 0;
};

WsServer::WsServer(Material text, ServerOptions opts) : impl_(std::make_unique<Impl>(std::move(text), opts)) {}

WsServer::~WsServer() = default;

unsigned short WsServer::listen() {
  const tcp::endpoint ep(asio::ip::make_address(impl_->opts.address), impl_->opts.port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->accept();
  return impl_->acceptor.local_endpoint().port();
}

void WsServer::run() { impl_->io.run(); }

void WsServer::stop() {
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->io.stop();
  });
}

std::size_t WsServer::active_sessions() const { return impl_->active.load(); }

}  // namespace gary::tools
