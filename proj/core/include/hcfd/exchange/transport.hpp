#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hcfd/core/state.hpp"

namespace hcfd::exchange {

/// Lost message, timeout, or a broken connection. Carries the awaited tag.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::uint32_t tag) : Error(what), tag_(tag) {}
  std::uint32_t tag() const { return tag_; }

 private:
  std::uint32_t tag_;
};

struct Message {
  std::uint32_t tag = 0;
  std::uint32_t source = 0;
  std::uint32_t dest = 0;
  std::vector<double> payload;

  std::uint64_t byteLength() const { return payload.size() * sizeof(double); }
};

/// Tags: epoch in the high 8 bits, a pair or region id in the low 24.
inline constexpr std::uint32_t makeTag(std::uint32_t epoch, std::uint32_t id) {
  return ((epoch & 0xFFu) << 24) | (id & 0xFFFFFFu);
}
inline constexpr std::uint32_t tagEpoch(std::uint32_t tag) { return tag >> 24; }
/// Epoch value 0xFF is reserved for collectives.
inline constexpr std::uint32_t kCollectiveEpoch = 0xFF;

/// Point-to-point message passing between ranks. send() never waits for a
/// matching receive; receives match on (source, tag) in arrival order.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual int rank() const = 0;
  virtual int size() const = 0;
  virtual void send(Message msg) = 0;
  virtual Message recv(int source, std::uint32_t tag) = 0;
  virtual void setTimeout(std::chrono::milliseconds t) { timeout_ = t; }
  std::chrono::milliseconds timeout() const { return timeout_; }
  /// Seconds this rank spent blocked on the network, accumulated. Waiting
  /// for a peer that has not sent yet is not counted where it can be told apart.
  double networkWaitSeconds() const { return networkWait_; }

 protected:
  std::chrono::milliseconds timeout_{60000};
  double networkWait_ = 0.0;
};

/// Arrival-ordered store of messages keyed by (source, tag), with an optional
/// earliest-delivery time per message.
class Mailbox {
 public:
  using Clock = std::chrono::steady_clock;

  void put(Message msg, Clock::time_point readyAt = Clock::time_point{});
  /// `waited`, when given, receives the seconds spent waiting for the
  /// delivery after the message was posted (modeled transfer time).
  Message take(int source, std::uint32_t tag, std::chrono::milliseconds timeout, double* waited = nullptr);
  /// Returns a message that is deliverable now, if any.
  std::optional<Message> tryTake(int source, std::uint32_t tag);
  /// Wakes all waiters with an error (used when a connection breaks).
  void fail(const std::string& why);

 private:
  struct Entry {
    Message msg;
    Clock::time_point readyAt;
    Clock::time_point postedAt;
  };
  std::mutex mutex_;
  std::condition_variable arrived_;
  std::map<std::pair<int, std::uint32_t>, std::deque<Entry>> queues_;
  std::string failure_;
};

/// Synthetic network charged to in-process messages: a message sent at t is
/// deliverable at t + latency + bytes / bandwidth, and each sender link
/// transmits one message at a time. A blocking send returns at delivery.
struct NetworkModel {
  double latency = 0.0;     ///< seconds
  double bandwidth = 0.0;   ///< bytes per second; 0 means infinite
  bool enabled() const { return latency > 0.0 || bandwidth > 0.0; }
  double transferSeconds(std::uint64_t bytes) const {
    return latency + (bandwidth > 0.0 ? static_cast<double>(bytes) / bandwidth : 0.0);
  }
};

/// Counting semaphore standing for host cores. In-process ranks hold one
/// while they run and hand it back only while blocked on the network, so
/// more ranks than cores behave like one core per rank taking turns instead
/// of being preempted mid-computation.
class CoreTokens {
 public:
  explicit CoreTokens(int cores) : free_(cores) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable freed_;
  int free_;
};

/// Holds a core token for a scope; no-op without tokens.
class CoreLease {
 public:
  explicit CoreLease(CoreTokens* t) : t_(t) {
    if (t_) t_->acquire();
  }
  ~CoreLease() {
    if (t_) t_->release();
  }
  CoreLease(const CoreLease&) = delete;
  CoreLease& operator=(const CoreLease&) = delete;

 private:
  CoreTokens* t_;
};

/// Shared state of an in-process "cluster": one mailbox per rank.
class InProcessNetwork {
 public:
  /// `cores` > 0 limits how many ranks run at once (see CoreTokens).
  explicit InProcessNetwork(int ranks, NetworkModel model = {}, int cores = 0);

  int size() const { return static_cast<int>(boxes_.size()); }
  const NetworkModel& model() const { return model_; }
  Mailbox& mailbox(int rank) { return *boxes_[static_cast<std::size_t>(rank)]; }
  /// Null when ranks are not limited to a core count.
  CoreTokens* cores() { return cores_.get(); }

  /// Returns the delivery time of a message of `bytes` sent now by `source`.
  Mailbox::Clock::time_point schedule(int source, std::uint64_t bytes);

 private:
  NetworkModel model_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::unique_ptr<CoreTokens> cores_;
  std::mutex linkMutex_;
  std::vector<Mailbox::Clock::time_point> linkFree_;
};

class InProcessTransport : public Transport {
 public:
  InProcessTransport(InProcessNetwork& net, int rank) : net_(net), rank_(rank) {}
  int rank() const override { return rank_; }
  int size() const override { return net_.size(); }
  void send(Message msg) override;
  /// Like send(), but returns only once the modeled transfer completed.
  void sendBlocking(Message msg);
  Message recv(int source, std::uint32_t tag) override;

 private:
  InProcessNetwork& net_;
  int rank_;
};

/// Wire format, little-endian: handshake {u32 magic 'HCFD', u32 version,
/// u32 rank}, then per message {u32 tag, u32 source, u32 dest, u64 byteLen}
/// followed by byteLen bytes of f64 payload.
inline constexpr std::uint32_t kWireMagic = 0x44464348u;
inline constexpr std::uint32_t kWireVersion = 1;

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
};

/// TCP transport. Every rank listens on its endpoint, connects to all lower
/// ranks and accepts the higher ones. One reader thread per connection drains
/// the socket into the local mailbox, so sends never deadlock.
class SocketTransport : public Transport {
 public:
  /// `listenFd` may be an already bound listening socket (or -1 to bind
  /// endpoints[rank]).
  SocketTransport(int rank, std::vector<Endpoint> endpoints, int listenFd = -1);
  ~SocketTransport() override;

  int rank() const override { return rank_; }
  int size() const override { return static_cast<int>(endpoints_.size()); }
  void send(Message msg) override;
  Message recv(int source, std::uint32_t tag) override;

  /// Binds a listening socket on host:0 and reports the chosen port.
  static int listenEphemeral(const std::string& host, int& port);

 private:
  void readerLoop(int peer, int fd);

  int rank_;
  std::vector<Endpoint> endpoints_;
  std::vector<int> fds_;
  std::vector<std::unique_ptr<std::mutex>> writeMutex_;
  std::vector<std::thread> readers_;
  Mailbox inbox_;
};

std::vector<std::uint8_t> encodeFrame(const Message& m);
/// Decodes a complete frame; throws TransportError on a malformed one.
Message decodeFrame(const std::uint8_t* data, std::size_t size);

}  // namespace hcfd::exchange
