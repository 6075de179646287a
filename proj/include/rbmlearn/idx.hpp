#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rbmlearn/dataset.hpp"

namespace rbmlearn {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
};

IdxImages read_idx_images(const std::string& path);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);
void write_idx_images(const std::string& path, const IdxImages& images);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

/// Pixels scaled to [0, 1], one image per row.
Matrix<double> idx_intensities(const IdxImages& images);

/// Area-average resize of row-major rows x cols images to out_rows x out_cols.
Matrix<double> downsample_images(const Matrix<double>& intensities, int rows, int cols, int out_rows, int out_cols);

/// Entry +1 with probability equal to the intensity, else -1.
SpinDataset binarize_images(const Matrix<double>& intensities, std::uint64_t seed,
                            std::optional<SpinVector> labels = std::nullopt);

}  // namespace rbmlearn
