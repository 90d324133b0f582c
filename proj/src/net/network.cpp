#include "byzsgd/net/network.hpp"

#include <sodium.h>

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace byzsgd::net {

namespace {

void append_u32(Bytes& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_u64(Bytes& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t read_u32(const uint8_t* p) {
  return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) | (uint32_t(p[3]) << 24);
}

committee::HashValue auth_tag(const committee::NodeKey& key, const NetMessage& m) {
  Bytes buf;
  buf.reserve(13 + m.payload.size());
  append_u32(buf, static_cast<uint32_t>(m.sender));
  append_u64(buf, m.epoch);
  buf.push_back(static_cast<uint8_t>(m.round));
  buf.insert(buf.end(), m.payload.begin(), m.payload.end());
  committee::HashValue tag;
  crypto_auth_hmacsha256(tag.data(), buf.data(), buf.size(), key.data());
  return tag;
}

}  // namespace

Network::Network(int n, uint64_t key_seed) : n_(n) {
  if (n < 1) throw std::invalid_argument("network: n must be >= 1");
  keys_.reserve(n);
  for (int i = 0; i < n; ++i) keys_.push_back(committee::make_node_key(key_seed, i));
  inboxes_.resize(n);
}

NetMessage Network::make_message(int sender, uint64_t epoch, RoundTag round, Bytes payload) const {
  if (sender < 0 || sender >= n_) throw std::invalid_argument("network: unregistered sender");
  NetMessage m;
  m.sender = sender;
  m.epoch = epoch;
  m.round = round;
  m.payload = std::move(payload);
  m.auth = auth_tag(keys_[sender], m);
  return m;
}

bool Network::verify(const NetMessage& m) const {
  if (m.sender < 0 || m.sender >= n_) return false;
  const committee::HashValue expect = auth_tag(keys_[m.sender], m);
  return sodium_memcmp(expect.data(), m.auth.data(), expect.size()) == 0;
}

int Network::broadcast(const NetMessage& m) {
  if (m.sender < 0 || m.sender >= n_) throw std::invalid_argument("network: unregistered sender");
  for (auto& inbox : inboxes_) inbox.push_back(m);
  messages_sent_ += static_cast<uint64_t>(n_);
  log(m, n_);
  return n_;
}

int Network::broadcast_per_recipient(int sender, const std::function<NetMessage(int)>& make) {
  if (sender < 0 || sender >= n_) throw std::invalid_argument("network: unregistered sender");
  for (int r = 0; r < n_; ++r) {
    NetMessage m = make(r);
    if (r == 0) log(m, n_);
    inboxes_[r].push_back(std::move(m));
  }
  messages_sent_ += static_cast<uint64_t>(n_);
  return n_;
}

std::vector<NetMessage> Network::drain(int node, uint64_t epoch, RoundTag round) {
  std::vector<NetMessage> out;
  auto& inbox = inboxes_[node];
  std::vector<NetMessage> keep;
  keep.reserve(inbox.size());
  for (auto& m : inbox) {
    if (m.epoch == epoch && m.round == round)
      out.push_back(std::move(m));
    else
      keep.push_back(std::move(m));
  }
  inbox = std::move(keep);
  return out;
}

void Network::clear_inboxes() {
  for (auto& inbox : inboxes_) inbox.clear();
}

void Network::log(const NetMessage& m, int recipients) const {
  if (!trace_) return;
  (*trace_) << m.epoch << ' ' << static_cast<int>(m.round) << ' ' << m.sender << ' ' << recipients
            << ' ' << hash_prefix_hex(sha256(m.payload)) << '\n';
}

Bytes encode_gradient_payload(const committee::HashValue& proof, const ParamVector& grad) {
  Bytes out;
  out.reserve(proof.size() + 4 + static_cast<size_t>(grad.size()) * 8);
  out.insert(out.end(), proof.begin(), proof.end());
  append_u32(out, static_cast<uint32_t>(grad.size()));
  const size_t off = out.size();
  out.resize(off + static_cast<size_t>(grad.size()) * 8);
  std::memcpy(out.data() + off, grad.data(), static_cast<size_t>(grad.size()) * 8);
  return out;
}

std::optional<GradientPayload> decode_gradient_payload(const Bytes& payload) {
  if (payload.size() < 36) return std::nullopt;
  GradientPayload p;
  std::copy(payload.begin(), payload.begin() + 32, p.proof.begin());
  const uint32_t d = read_u32(payload.data() + 32);
  if (payload.size() != 36 + static_cast<size_t>(d) * 8) return std::nullopt;
  p.grad.resize(d);
  std::memcpy(p.grad.data(), payload.data() + 36, static_cast<size_t>(d) * 8);
  for (uint32_t i = 0; i < d; ++i)
    if (!std::isfinite(p.grad[i])) return std::nullopt;
  return p;
}

Bytes encode_vote_payload(const committee::HashValue& proof, const std::vector<int>& node_ids) {
  Bytes out;
  out.reserve(proof.size() + 4 + node_ids.size() * 4);
  out.insert(out.end(), proof.begin(), proof.end());
  append_u32(out, static_cast<uint32_t>(node_ids.size()));
  for (int id : node_ids) append_u32(out, static_cast<uint32_t>(id));
  return out;
}

std::optional<VotePayload> decode_vote_payload(const Bytes& payload) {
  if (payload.size() < 36) return std::nullopt;
  VotePayload p;
  std::copy(payload.begin(), payload.begin() + 32, p.proof.begin());
  const uint32_t count = read_u32(payload.data() + 32);
  if (payload.size() != 36 + static_cast<size_t>(count) * 4) return std::nullopt;
  p.endorsed_ids.resize(count);
  for (uint32_t i = 0; i < count; ++i)
    p.endorsed_ids[i] = static_cast<int>(read_u32(payload.data() + 36 + i * 4));
  return p;
}

Bytes serialize_params(const ParamVector& v) {
  Bytes out(static_cast<size_t>(v.size()) * 8);
  std::memcpy(out.data(), v.data(), out.size());
  return out;
}

committee::HashValue sha256(const Bytes& data) {
  committee::HashValue h;
  crypto_hash_sha256(h.data(), data.data(), data.size());
  return h;
}

std::string hash_prefix_hex(const committee::HashValue& h, int bytes) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<size_t>(bytes) * 2);
  for (int i = 0; i < bytes; ++i) {
    out.push_back(hex[h[static_cast<size_t>(i)] >> 4]);
    out.push_back(hex[h[static_cast<size_t>(i)] & 0xf]);
  }
  return out;
}

}  // namespace byzsgd::net
