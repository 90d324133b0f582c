#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "byzsgd/types.hpp"

namespace byzsgd::committee {

using HashValue = std::array<uint8_t, 32>;
using NodeKey = std::array<uint8_t, 32>;

NodeKey make_node_key(uint64_t seed, int node_id);

struct SortitionResult {
  bool selected = false;
  HashValue proof{};  // keyed hash; verifiable by anyone holding the node key
};

/// Self-selection into a role: a keyed hash of (epoch_seed, role_tag, epoch)
/// under the node's secret key, with the first 8 bytes read as a fraction in
/// [0, 1) and compared against the selection probability q.
SortitionResult sortition(std::string_view role_tag, const Bytes& epoch_seed, uint64_t epoch,
                          const NodeKey& node_secret, double q);

/// Recomputes the hash and checks both the proof bytes and the threshold.
bool verify_sortition(const SortitionResult& claim, std::string_view role_tag,
                      const Bytes& epoch_seed, uint64_t epoch, const NodeKey& node_key, double q);

/// Fraction in [0, 1) encoded by the first 8 bytes of a hash (53-bit mantissa,
/// exactly representable).
double hash_fraction(const HashValue& h);

}  // namespace byzsgd::committee
