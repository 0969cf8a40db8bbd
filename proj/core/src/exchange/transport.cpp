#include "hcfd/exchange/transport.hpp"

#include <algorithm>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace hcfd::exchange {

namespace {

constexpr std::size_t kHeaderBytes = 4 + 4 + 4 + 8;

template <class T>
void putLE(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xFF));
}

template <class T>
T getLE(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(p[b]) << (8 * b);
  return v;
}

void writeAll(int fd, const void* data, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("socket write failed: ") + std::strerror(errno), 0);
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

bool readAll(int fd, void* data, std::size_t n) {
  auto* p = static_cast<std::uint8_t*>(data);
  while (n > 0) {
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

sockaddr_in makeAddr(const Endpoint& e) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(static_cast<std::uint16_t>(e.port));
  if (inet_pton(AF_INET, e.host.c_str(), &a.sin_addr) != 1)
    throw TransportError("bad host address " + e.host, 0);
  return a;
}

}  // namespace

std::vector<std::uint8_t> encodeFrame(const Message& m) {
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + m.byteLength());
  putLE<std::uint32_t>(out, m.tag);
  putLE<std::uint32_t>(out, m.source);
  putLE<std::uint32_t>(out, m.dest);
  putLE<std::uint64_t>(out, m.byteLength());
  for (double d : m.payload) putLE<std::uint64_t>(out, std::bit_cast<std::uint64_t>(d));
  return out;
}

Message decodeFrame(const std::uint8_t* data, std::size_t size) {
  if (size < kHeaderBytes) throw TransportError("truncated frame header", 0);
  Message m;
  m.tag = getLE<std::uint32_t>(data);
  m.source = getLE<std::uint32_t>(data + 4);
  m.dest = getLE<std::uint32_t>(data + 8);
  const auto len = getLE<std::uint64_t>(data + 12);
  if (len % sizeof(double) != 0 || size - kHeaderBytes != len)
    throw TransportError("frame length mismatch", m.tag);
  m.payload.resize(len / sizeof(double));
  for (std::size_t i = 0; i < m.payload.size(); ++i)
    m.payload[i] = std::bit_cast<double>(getLE<std::uint64_t>(data + kHeaderBytes + 8 * i));
  return m;
}

void Mailbox::put(Message msg, Clock::time_point readyAt) {
  {
    std::lock_guard lock(mutex_);
    queues_[{static_cast<int>(msg.source), msg.tag}].push_back({std::move(msg), readyAt, Clock::now()});
  }
  arrived_.notify_all();
}

Message Mailbox::take(int source, std::uint32_t tag, std::chrono::milliseconds timeout, double* waited) {
  const auto called = Clock::now();
  const auto deadline = called + timeout;
  std::unique_lock lock(mutex_);
  const std::pair<int, std::uint32_t> key{source, tag};
  for (;;) {
    if (!failure_.empty()) throw TransportError("transport failed: " + failure_, tag);
    auto it = queues_.find(key);
    if (it != queues_.end() && !it->second.empty()) {
      const auto ready = it->second.front().readyAt;
      if (ready <= Clock::now()) {
        if (waited) {
          const auto from = std::max(called, it->second.front().postedAt);
          *waited = std::max(0.0, std::chrono::duration<double>(ready - from).count());
        }
        Message m = std::move(it->second.front().msg);
        it->second.pop_front();
        if (it->second.empty()) queues_.erase(it);
        return m;
      }
      // Already sent; a modeled transfer may outlast the timeout.
      arrived_.wait_until(lock, ready);
      continue;
    }
    if (arrived_.wait_until(lock, deadline) == std::cv_status::timeout) {
      auto again = queues_.find(key);
      if (again == queues_.end() || again->second.empty())
        throw TransportError("timed out waiting for tag " + std::to_string(tag) + " from rank " +
                                 std::to_string(source),
                             tag);
    }
  }
}

std::optional<Message> Mailbox::tryTake(int source, std::uint32_t tag) {
  std::lock_guard lock(mutex_);
  if (!failure_.empty()) throw TransportError("transport failed: " + failure_, tag);
  auto it = queues_.find({source, tag});
  if (it == queues_.end() || it->second.empty() || it->second.front().readyAt > Clock::now()) return std::nullopt;
  Message m = std::move(it->second.front().msg);
  it->second.pop_front();
  if (it->second.empty()) queues_.erase(it);
  return m;
}

void Mailbox::fail(const std::string& why) {
  {
    std::lock_guard lock(mutex_);
    if (failure_.empty()) failure_ = why;
  }
  arrived_.notify_all();
}

void CoreTokens::acquire() {
  std::unique_lock lock(mutex_);
  freed_.wait(lock, [this] { return free_ > 0; });
  --free_;
}

void CoreTokens::release() {
  {
    std::lock_guard lock(mutex_);
    ++free_;
  }
  freed_.notify_one();
}

InProcessNetwork::InProcessNetwork(int ranks, NetworkModel model, int cores) : model_(model) {
  if (ranks < 1) throw Error("network needs at least one rank");
  if (cores > 0 && cores < ranks) cores_ = std::make_unique<CoreTokens>(cores);
  for (int r = 0; r < ranks; ++r) boxes_.push_back(std::make_unique<Mailbox>());
  linkFree_.assign(static_cast<std::size_t>(ranks), Mailbox::Clock::time_point{});
}

Mailbox::Clock::time_point InProcessNetwork::schedule(int source, std::uint64_t bytes) {
  const auto now = Mailbox::Clock::now();
  if (!model_.enabled()) return now;
  std::lock_guard lock(linkMutex_);
  auto& free = linkFree_[static_cast<std::size_t>(source)];
  const auto start = std::max(now, free);
  const auto wire = std::chrono::duration_cast<Mailbox::Clock::duration>(std::chrono::duration<double>(
      model_.bandwidth > 0.0 ? static_cast<double>(bytes) / model_.bandwidth : 0.0));
  const auto lat = std::chrono::duration_cast<Mailbox::Clock::duration>(std::chrono::duration<double>(model_.latency));
  free = start + wire;
  return start + wire + lat;
}

void InProcessTransport::send(Message msg) {
  msg.source = static_cast<std::uint32_t>(rank_);
  const int dest = static_cast<int>(msg.dest);
  if (dest < 0 || dest >= net_.size()) throw TransportError("destination rank out of range", msg.tag);
  const auto ready = dest == rank_ ? Mailbox::Clock::now() : net_.schedule(rank_, msg.byteLength());
  net_.mailbox(dest).put(std::move(msg), ready);
}

void InProcessTransport::sendBlocking(Message msg) {
  msg.source = static_cast<std::uint32_t>(rank_);
  const int dest = static_cast<int>(msg.dest);
  if (dest < 0 || dest >= net_.size()) throw TransportError("destination rank out of range", msg.tag);
  const auto ready = dest == rank_ ? Mailbox::Clock::now() : net_.schedule(rank_, msg.byteLength());
  net_.mailbox(dest).put(std::move(msg), ready);
  const auto now = Mailbox::Clock::now();
  if (ready > now) {
    networkWait_ += std::chrono::duration<double>(ready - now).count();
    CoreTokens* cores = net_.cores();
    if (cores) cores->release();
    std::this_thread::sleep_until(ready);
    if (cores) cores->acquire();
  }
}

Message InProcessTransport::recv(int source, std::uint32_t tag) {
  Mailbox& box = net_.mailbox(rank_);
  CoreTokens* cores = net_.cores();
  if (cores) {
    if (auto m = box.tryTake(source, tag)) return std::move(*m);
    cores->release();
  }
  double waited = 0.0;
  try {
    Message m = box.take(source, tag, timeout_, &waited);
    if (cores) cores->acquire();
    networkWait_ += waited;
    return m;
  } catch (...) {
    if (cores) cores->acquire();
    throw;
  }
}

int SocketTransport::listenEphemeral(const std::string& host, int& port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed", 0);
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in a = makeAddr({host, 0});
  if (::bind(fd, reinterpret_cast<sockaddr*>(&a), sizeof(a)) != 0 || ::listen(fd, 64) != 0) {
    ::close(fd);
    throw TransportError(std::string("bind/listen failed: ") + std::strerror(errno), 0);
  }
  socklen_t len = sizeof(a);
  getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len);
  port = ntohs(a.sin_port);
  return fd;
}

SocketTransport::SocketTransport(int rank, std::vector<Endpoint> endpoints, int listenFd)
    : rank_(rank), endpoints_(std::move(endpoints)) {
  const int n = size();
  if (rank_ < 0 || rank_ >= n) throw TransportError("rank out of range", 0);
  fds_.assign(static_cast<std::size_t>(n), -1);
  for (int p = 0; p < n; ++p) writeMutex_.push_back(std::make_unique<std::mutex>());

  int lfd = listenFd;
  if (lfd < 0 && rank_ + 1 < n) {
    lfd = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in a = makeAddr(endpoints_[static_cast<std::size_t>(rank_)]);
    if (::bind(lfd, reinterpret_cast<sockaddr*>(&a), sizeof(a)) != 0 || ::listen(lfd, 64) != 0) {
      ::close(lfd);
      throw TransportError(std::string("bind/listen failed: ") + std::strerror(errno), 0);
    }
  }

  auto handshake = [&](int fd) {
    std::vector<std::uint8_t> h;
    putLE<std::uint32_t>(h, kWireMagic);
    putLE<std::uint32_t>(h, kWireVersion);
    putLE<std::uint32_t>(h, static_cast<std::uint32_t>(rank_));
    writeAll(fd, h.data(), h.size());
  };

  for (int p = 0; p < rank_; ++p) {
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    int fd = -1;
    for (;;) {
      fd = ::socket(AF_INET, SOCK_STREAM, 0);
      sockaddr_in a = makeAddr(endpoints_[static_cast<std::size_t>(p)]);
      if (::connect(fd, reinterpret_cast<sockaddr*>(&a), sizeof(a)) == 0) break;
      ::close(fd);
      if (std::chrono::steady_clock::now() > deadline)
        throw TransportError("could not connect to rank " + std::to_string(p), 0);
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    handshake(fd);
    fds_[static_cast<std::size_t>(p)] = fd;
  }
  for (int accepted = 0; accepted < n - 1 - rank_; ++accepted) {
    const int fd = ::accept(lfd, nullptr, nullptr);
    if (fd < 0) throw TransportError("accept failed", 0);
    std::uint8_t h[12];
    if (!readAll(fd, h, sizeof(h)) || getLE<std::uint32_t>(h) != kWireMagic)
      throw TransportError("bad handshake", 0);
    if (getLE<std::uint32_t>(h + 4) != kWireVersion) throw TransportError("wire version mismatch", 0);
    const auto peer = getLE<std::uint32_t>(h + 8);
    if (peer >= static_cast<std::uint32_t>(n) || static_cast<int>(peer) <= rank_)
      throw TransportError("unexpected peer rank in handshake", 0);
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    fds_[peer] = fd;
  }
  if (lfd >= 0) ::close(lfd);

  for (int p = 0; p < n; ++p)
    if (p != rank_) readers_.emplace_back([this, p, fd = fds_[static_cast<std::size_t>(p)]] { readerLoop(p, fd); });
}

SocketTransport::~SocketTransport() {
  for (int fd : fds_)
    if (fd >= 0) ::shutdown(fd, SHUT_RDWR);
  for (auto& t : readers_) t.join();
  for (int fd : fds_)
    if (fd >= 0) ::close(fd);
}

void SocketTransport::readerLoop(int peer, int fd) {
  for (;;) {
    std::uint8_t head[kHeaderBytes];
    if (!readAll(fd, head, sizeof(head))) return;
    const auto len = getLE<std::uint64_t>(head + 12);
    std::vector<std::uint8_t> frame(kHeaderBytes + len);
    std::memcpy(frame.data(), head, kHeaderBytes);
    if (len > 0 && !readAll(fd, frame.data() + kHeaderBytes, len)) {
      inbox_.fail("connection to rank " + std::to_string(peer) + " closed mid-frame");
      return;
    }
    try {
      inbox_.put(decodeFrame(frame.data(), frame.size()));
    } catch (const TransportError& e) {
      inbox_.fail(e.what());
      return;
    }
  }
}

void SocketTransport::send(Message msg) {
  msg.source = static_cast<std::uint32_t>(rank_);
  const int dest = static_cast<int>(msg.dest);
  if (dest < 0 || dest >= size()) throw TransportError("destination rank out of range", msg.tag);
  if (dest == rank_) {
    inbox_.put(std::move(msg));
    return;
  }
  const auto frame = encodeFrame(msg);
  std::lock_guard lock(*writeMutex_[static_cast<std::size_t>(dest)]);
  writeAll(fds_[static_cast<std::size_t>(dest)], frame.data(), frame.size());
}

Message SocketTransport::recv(int source, std::uint32_t tag) {
  // Frames land in the inbox when fully read, so all blocked time counts.
  const auto start = Mailbox::Clock::now();
  Message m = inbox_.take(source, tag, timeout_);
  networkWait_ += std::chrono::duration<double>(Mailbox::Clock::now() - start).count();
  return m;
}

}  // namespace hcfd::exchange
