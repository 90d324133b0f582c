#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "byzsgd/committee/sortition.hpp"
#include "byzsgd/types.hpp"

namespace byzsgd::net {

enum class RoundTag : uint8_t { Proposal = 0, Vote = 1, Consensus = 2 };

/// Authenticated broadcast message. auth covers (sender, epoch, round,
/// payload) under the sender's key; honest receivers drop anything that
/// fails verification.
struct NetMessage {
  int sender = -1;
  uint64_t epoch = 0;
  RoundTag round = RoundTag::Proposal;
  Bytes payload;
  committee::HashValue auth{};
};

/// Synchronous lossless broadcast network with deterministic delivery order
/// (senders are processed in ascending id within each round).
class Network {
 public:
  Network(int n, uint64_t key_seed);

  int size() const { return n_; }
  const committee::NodeKey& key_of(int id) const { return keys_[id]; }

  NetMessage make_message(int sender, uint64_t epoch, RoundTag round, Bytes payload) const;
  bool verify(const NetMessage& m) const;

  /// Delivers the message to every node's inbox; returns the delivery count.
  int broadcast(const NetMessage& m);
  /// Byzantine senders may deliver a different (re-authenticated) variant per
  /// recipient. Counts as one broadcast: n messages.
  int broadcast_per_recipient(int sender, const std::function<NetMessage(int)>& make);

  /// Removes and returns this node's pending messages for (epoch, round) in
  /// delivery order.
  std::vector<NetMessage> drain(int node, uint64_t epoch, RoundTag round);
  void clear_inboxes();

  uint64_t messages_sent() const { return messages_sent_; }
  void reset_counter() { messages_sent_ = 0; }
  void set_trace(std::ostream* trace) { trace_ = trace; }

 private:
  void log(const NetMessage& m, int recipients) const;

  int n_;
  std::vector<committee::NodeKey> keys_;
  std::vector<std::vector<NetMessage>> inboxes_;
  uint64_t messages_sent_ = 0;
  std::ostream* trace_ = nullptr;
};

// --- payload codecs (little-endian, fixed layout) ---

Bytes encode_gradient_payload(const committee::HashValue& proof, const ParamVector& grad);
struct GradientPayload {
  committee::HashValue proof;
  ParamVector grad;
};
std::optional<GradientPayload> decode_gradient_payload(const Bytes& payload);

Bytes encode_vote_payload(const committee::HashValue& proof, const std::vector<int>& node_ids);
struct VotePayload {
  committee::HashValue proof;
  std::vector<int> endorsed_ids;
};
std::optional<VotePayload> decode_vote_payload(const Bytes& payload);

Bytes serialize_params(const ParamVector& v);
committee::HashValue sha256(const Bytes& data);
std::string hash_prefix_hex(const committee::HashValue& h, int bytes = 4);

}  // namespace byzsgd::net
