#pragma once

#include <stdexcept>
#include <string>

#include "byzsgd/learn/dataset.hpp"

namespace byzsgd::learn {

enum class IdxErrorCode { BadMagic, Truncated, CountMismatch, Io };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  IdxErrorCode code() const { return code_; }

 private:
  IdxErrorCode code_;
};

/// Reads an IDX image/label file pair (magic 0x00000803 / 0x00000801,
/// big-endian dimensions). Pixels are flattened and scaled to [0, 1].
Dataset load_idx(const std::string& path_images, const std::string& path_labels);

}  // namespace byzsgd::learn
