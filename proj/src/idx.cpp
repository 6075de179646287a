#include "rbmlearn/idx.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include "rbmlearn/rng.hpp"

namespace rbmlearn {

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error(path + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  return in;
}

std::vector<std::uint8_t> read_body(std::istream& in, std::size_t bytes, const std::string& path) {
  std::vector<std::uint8_t> out(bytes);
  if (!in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes)))
    throw std::runtime_error(path + ": truncated IDX payload");
  return out;
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  std::ifstream in = open_in(path);
  const std::uint32_t magic = read_be32(in, path);
  if (magic != kIdxImageMagic) throw std::runtime_error(path + ": bad magic for an IDX image file");
  IdxImages img;
  img.count = static_cast<int>(read_be32(in, path));
  img.rows = static_cast<int>(read_be32(in, path));
  img.cols = static_cast<int>(read_be32(in, path));
  img.pixels = read_body(in, static_cast<std::size_t>(img.count) * img.rows * img.cols, path);
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  std::ifstream in = open_in(path);
  if (read_be32(in, path) != kIdxLabelMagic) throw std::runtime_error(path + ": bad magic for an IDX label file");
  const std::uint32_t count = read_be32(in, path);
  return read_body(in, count, path);
}

void write_idx_images(const std::string& path, const IdxImages& images) {
  if (images.pixels.size() != static_cast<std::size_t>(images.count) * images.rows * images.cols)
    throw std::invalid_argument("write_idx_images: pixel count does not match the shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  write_be32(out, kIdxImageMagic);
  write_be32(out, static_cast<std::uint32_t>(images.count));
  write_be32(out, static_cast<std::uint32_t>(images.rows));
  write_be32(out, static_cast<std::uint32_t>(images.cols));
  out.write(reinterpret_cast<const char*>(images.pixels.data()), static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot write");
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Matrix<double> idx_intensities(const IdxImages& images) {
  const int d = images.rows * images.cols;
  Matrix<double> out(images.count, d);
  for (int k = 0; k < images.count; ++k)
    for (int p = 0; p < d; ++p) out(k, p) = images.pixels[static_cast<std::size_t>(k) * d + p] / 255.0;
  return out;
}

namespace {

/// Row o holds the normalized overlap of output cell o with each input cell.
Matrix<double> area_weights(int in, int out) {
  Matrix<double> w = Matrix<double>::Zero(out, in);
  const double step = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double lo = o * step, hi = (o + 1) * step;
    for (int i = static_cast<int>(lo); i < in && i < hi; ++i) w(o, i) = std::min<double>(i + 1, hi) - std::max<double>(i, lo);
    w.row(o) /= w.row(o).sum();
  }
  return w;
}

}  // namespace

Matrix<double> downsample_images(const Matrix<double>& intensities, int rows, int cols, int out_rows, int out_cols) {
  if (rows < 1 || cols < 1 || intensities.cols() != static_cast<Eigen::Index>(rows) * cols)
    throw std::invalid_argument("downsample_images: image shape does not match the data");
  if (out_rows < 1 || out_cols < 1 || out_rows > rows || out_cols > cols)
    throw std::invalid_argument("downsample_images: output shape must lie within the input shape");
  const Matrix<double> wr = area_weights(rows, out_rows), wc = area_weights(cols, out_cols);
  Matrix<double> out(intensities.rows(), out_rows * out_cols);
  for (Eigen::Index k = 0; k < intensities.rows(); ++k) {
    const Vector<double> flat = intensities.row(k).transpose();
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> img(flat.data(), rows, cols);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> small = wr * img * wc.transpose();
    out.row(k) = Eigen::Map<const Vector<double>>(small.data(), small.size()).transpose();
  }
  return out;
}

SpinDataset binarize_images(const Matrix<double>& intensities, std::uint64_t seed, std::optional<SpinVector> labels) {
  if (intensities.size() && (intensities.minCoeff() < 0.0 || intensities.maxCoeff() > 1.0))
    throw std::invalid_argument("binarize_images: intensities must lie in [0, 1]");
  Xoshiro256 rng(seed);
  SpinMatrix out(intensities.rows(), intensities.cols());
  for (Eigen::Index r = 0; r < intensities.rows(); ++r)
    for (Eigen::Index c = 0; c < intensities.cols(); ++c)
      out(r, c) = rng.uniform() < intensities(r, c) ? 1 : -1;
  return SpinDataset(std::move(out), std::move(labels));
}

}  // namespace rbmlearn
