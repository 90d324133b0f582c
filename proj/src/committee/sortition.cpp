#include "byzsgd/committee/sortition.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

#include "byzsgd/rng.hpp"

namespace byzsgd::committee {

NodeKey make_node_key(uint64_t seed, int node_id) {
  NodeKey key;
  auto rng = RngFactory(seed).stream("node_key", static_cast<uint64_t>(node_id));
  for (size_t i = 0; i < key.size(); i += 8) {
    const uint64_t word = rng();
    std::memcpy(key.data() + i, &word, 8);
  }
  return key;
}

static HashValue keyed_hash(std::string_view role_tag, const Bytes& epoch_seed, uint64_t epoch,
                            const NodeKey& node_secret) {
  Bytes msg;
  msg.reserve(epoch_seed.size() + role_tag.size() + 8);
  msg.insert(msg.end(), epoch_seed.begin(), epoch_seed.end());
  msg.insert(msg.end(), role_tag.begin(), role_tag.end());
  for (int i = 0; i < 8; ++i) msg.push_back(static_cast<uint8_t>(epoch >> (8 * i)));

  HashValue out;
  crypto_auth_hmacsha256(out.data(), msg.data(), msg.size(), node_secret.data());
  return out;
}

double hash_fraction(const HashValue& h) {
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u = (u << 8) | h[static_cast<size_t>(i)];
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

SortitionResult sortition(std::string_view role_tag, const Bytes& epoch_seed, uint64_t epoch,
                          const NodeKey& node_secret, double q) {
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("sortition: q must be in [0, 1]");
  SortitionResult r;
  r.proof = keyed_hash(role_tag, epoch_seed, epoch, node_secret);
  r.selected = q >= 1.0 ? true : hash_fraction(r.proof) < q;
  return r;
}

bool verify_sortition(const SortitionResult& claim, std::string_view role_tag,
                      const Bytes& epoch_seed, uint64_t epoch, const NodeKey& node_key, double q) {
  const HashValue expect = keyed_hash(role_tag, epoch_seed, epoch, node_key);
  if (sodium_memcmp(expect.data(), claim.proof.data(), expect.size()) != 0) return false;
  return q >= 1.0 ? true : hash_fraction(expect) < q;
}

}  // namespace byzsgd::committee
