#include "pcam/imageio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "pcam/errors.hpp"

namespace fs = std::filesystem;

namespace pcam {

namespace {

// Next whitespace-separated token, treating '#' to end-of-line as a
// comment (netpbm header rules).
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw DataError("pgm: truncated header: " + path);
  return tok;
}

unsigned long parse_dim(const std::string& tok, const std::string& what,
                        const std::string& path) {
  if (tok.empty() || tok.size() > 9 ||
      tok.find_first_not_of("0123456789") != std::string::npos)
    throw DataError("pgm: bad " + what + " '" + tok + "': " + path);
  const unsigned long v = std::stoul(tok);
  if (v == 0 || v > 1u << 20)
    throw DataError("pgm: bad " + what + " '" + tok + "': " + path);
  return v;
}

}  // namespace

Tensor read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  const std::string magic = next_token(in, path);
  if (magic != "P2" && magic != "P5")
    throw DataError("pgm: not a P2/P5 file: " + path);
  const unsigned long w = parse_dim(next_token(in, path), "width", path);
  const unsigned long h = parse_dim(next_token(in, path), "height", path);
  const unsigned long maxval = parse_dim(next_token(in, path), "maxval", path);
  if (maxval > 255)
    throw DataError("pgm: unsupported maxval " + std::to_string(maxval) +
                    " (only 8-bit supported): " + path);

  Tensor img({1, h, w});
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P5") {
    // Exactly one whitespace byte separates maxval from the payload;
    // next_token already consumed it.
    std::vector<unsigned char> bytes(h * w);
    if (!in.read(reinterpret_cast<char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size())))
      throw DataError("pgm: truncated pixel data: " + path);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
      if (bytes[i] > maxval)
        throw DataError("pgm: pixel exceeds maxval: " + path);
      img[i] = bytes[i] * scale;
    }
  } else {
    for (std::size_t i = 0; i < h * w; ++i) {
      const std::string tok = next_token(in, path);
      if (tok.size() > 9 ||
          tok.find_first_not_of("0123456789") != std::string::npos)
        throw DataError("pgm: bad pixel '" + tok + "': " + path);
      const unsigned long v = std::stoul(tok);
      if (v > maxval) throw DataError("pgm: pixel exceeds maxval: " + path);
      img[i] = static_cast<double>(v) * scale;
    }
  }
  return img;
}

void write_pgm(const Tensor& image, const std::string& path) {
  if (image.shape().size() != 3 || image.shape()[0] != 1)
    throw std::invalid_argument("write_pgm: image must be [1,h,w]");
  const std::size_t h = image.shape()[1];
  const std::size_t w = image.shape()[2];
  std::vector<unsigned char> bytes(h * w);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = image[i];
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("write_pgm: pixel outside [0,1]");
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "P5\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw DataError("write failed: " + path);
}

void write_overlay_ppm(const Tensor& base, const Tensor& heat,
                       const std::string& path, double alpha) {
  if (base.shape().size() != 3 || base.shape()[0] != 1)
    throw std::invalid_argument("write_overlay_ppm: base must be [1,h,w]");
  if (!base.same_shape(heat))
    throw std::invalid_argument("write_overlay_ppm: size mismatch");
  const std::size_t h = base.shape()[1];
  const std::size_t w = base.shape()[2];
  std::vector<unsigned char> bytes(h * w * 3);
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double g = (1.0 - alpha) * base[i];
    const double r = g + alpha * heat[i];
    if (!(r >= 0.0 && r <= 1.0 && g >= 0.0 && g <= 1.0))
      throw std::invalid_argument("write_overlay_ppm: values outside [0,1]");
    bytes[3 * i] = static_cast<unsigned char>(std::lround(r * 255.0));
    bytes[3 * i + 1] = static_cast<unsigned char>(std::lround(g * 255.0));
    bytes[3 * i + 2] = bytes[3 * i + 1];
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw DataError("write failed: " + path);
}

Dataset load_dataset_dir(const std::string& root) {
  if (!fs::is_directory(root))
    throw DataError("dataset: not a directory: " + root);
  std::vector<std::string> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path().filename());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty())
    throw DataError("dataset: no class subdirectories in " + root);

  Dataset data;
  data.class_names = class_dirs;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    const fs::path dir = fs::path(root) / class_dirs[c];
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename();
      if (!entry.is_regular_file()) continue;
      if (name.size() >= 9 &&
          name.compare(name.size() - 9, 9, ".mask.pgm") == 0)
        continue;
      if (name.size() >= 4 && name.compare(name.size() - 4, 4, ".pgm") == 0)
        files.push_back(name);
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw DataError("dataset: class directory is empty: " + dir.string());
    for (const std::string& name : files) {
      Sample s;
      const fs::path img_path = dir / name;
      s.image = read_pgm(img_path);
      s.label = c;
      const fs::path mask_path =
          dir / (name.substr(0, name.size() - 4) + ".mask.pgm");
      if (fs::exists(mask_path)) {
        Tensor mask = read_pgm(mask_path);
        if (!mask.same_shape(s.image))
          throw DataError("dataset: size mismatch between " +
                          img_path.string() + " and " + mask_path.string());
        for (std::size_t i = 0; i < mask.size(); ++i)
          mask[i] = mask[i] > 0.5 ? 1.0 : 0.0;
        s.mask = std::move(mask);
      }
      data.samples.push_back(std::move(s));
    }
  }
  return data;
}

}  // namespace pcam
