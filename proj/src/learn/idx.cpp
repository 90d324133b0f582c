#include "byzsgd/learn/idx.hpp"

#include <cstdint>
#include <fstream>
#include <vector>

namespace byzsgd::learn {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

uint32_t read_be32(std::ifstream& in, const std::string& path) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw IdxError(IdxErrorCode::Truncated, path + ": truncated header");
  return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

std::ifstream open_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxErrorCode::Io, path + ": cannot open");
  return in;
}

}  // namespace

Dataset load_idx(const std::string& path_images, const std::string& path_labels) {
  auto img = open_file(path_images);
  if (read_be32(img, path_images) != kImageMagic)
    throw IdxError(IdxErrorCode::BadMagic, path_images + ": bad image magic");
  const uint32_t n_images = read_be32(img, path_images);
  const uint32_t rows = read_be32(img, path_images);
  const uint32_t cols = read_be32(img, path_images);

  auto lab = open_file(path_labels);
  if (read_be32(lab, path_labels) != kLabelMagic)
    throw IdxError(IdxErrorCode::BadMagic, path_labels + ": bad label magic");
  const uint32_t n_labels = read_be32(lab, path_labels);

  if (n_images != n_labels)
    throw IdxError(IdxErrorCode::CountMismatch,
                   path_images + ": image count " + std::to_string(n_images) +
                       " != label count " + std::to_string(n_labels));

  const size_t pixels = size_t(rows) * cols;
  std::vector<uint8_t> buf(pixels);

  Dataset out;
  out.kind = DatasetKind::Idx;
  out.feature_dim = static_cast<int>(pixels);
  out.num_classes = 10;
  out.examples.resize(n_images);
  for (uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw IdxError(IdxErrorCode::Truncated, path_images + ": truncated image data");
    int label = lab.get();
    if (label == EOF) throw IdxError(IdxErrorCode::Truncated, path_labels + ": truncated labels");
    Example& ex = out.examples[i];
    ex.label = label;
    ex.features.resize(static_cast<Eigen::Index>(pixels));
    for (size_t p = 0; p < pixels; ++p) ex.features[static_cast<Eigen::Index>(p)] = buf[p] / 255.0;
  }
  return out;
}

}  // namespace byzsgd::learn
