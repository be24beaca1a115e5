// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#include "ssvt/data_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "ssvt/rng.hpp"

namespace ssvt::io {

namespace fs = std::filesystem;

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    out.push_back(item.label);
  }
  return out;
}

std::vector<Tensor> Dataset::images() const {
  std::vector<Tensor> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    out.push_back(item.image);
  }
  return out;
}

namespace {

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + file.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Reads one netpbm header token, skipping whitespace and # comments.
std::string next_token(const std::string& data, std::size_t& pos, const fs::path& file) {
  while (pos < data.size()) {
    const char c = data[pos];
    if (c == '#') {
      while (pos < data.size() && data[pos] != '\n') {
        ++pos;
      }
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) {
    ++pos;
  }
  if (start == pos) {
    throw IoError("malformed header in '" + file.string() + "'");
  }
  return data.substr(start, pos - start);
}

long parse_dim(const std::string& token, const fs::path& file) {
  try {
    std::size_t used = 0;
    const long v = std::stol(token, &used);
    if (used != token.size() || v <= 0) {
      throw std::invalid_argument(token);
    }
    return v;
  } catch (const std::exception&) {
    throw IoError("malformed header value '" + token + "' in '" + file.string() + "'");
  }
}

}  // namespace

Tensor load_image(const fs::path& file) {
  const std::string data = read_file(file);
  std::size_t pos = 0;
  const std::string magic = next_token(data, pos, file);
  if (magic != "P6" && magic != "P5") {
    throw IoError("unsupported magic '" + magic + "' in '" + file.string() +
                  "' (expected binary P6 or P5)");
  }
  const long w = parse_dim(next_token(data, pos, file), file);
  const long h = parse_dim(next_token(data, pos, file), file);
  const long maxval = parse_dim(next_token(data, pos, file), file);
  if (maxval != 255) {
    throw IoError("unsupported maxval " + std::to_string(maxval) + " in '" +
                  file.string() + "' (must be 255)");
  }
  ++pos;  // single whitespace after maxval
  const std::size_t channels = magic == "P6" ? 3 : 1;
  const std::size_t need = channels * static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (data.size() < pos + need) {
    throw IoError("truncated payload in '" + file.string() + "': need " +
                  std::to_string(need) + " bytes, have " + std::to_string(data.size() - pos));
  }

  Tensor out = Tensor::zeros({3, h, w});
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data() + pos);
  const Index plane = static_cast<Index>(h) * static_cast<Index>(w);
  if (channels == 3) {
    for (Index p = 0; p < plane; ++p) {
      out.array()[p] = static_cast<double>(bytes[p * 3]) / 255.0;
      out.array()[plane + p] = static_cast<double>(bytes[p * 3 + 1]) / 255.0;
      out.array()[2 * plane + p] = static_cast<double>(bytes[p * 3 + 2]) / 255.0;
    }
  } else {
    for (Index p = 0; p < plane; ++p) {
      const double v = static_cast<double>(bytes[p]) / 255.0;
      out.array()[p] = v;
      out.array()[plane + p] = v;
      out.array()[2 * plane + p] = v;
    }
  }
  return out;
}

void save_ppm(const fs::path& file, const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw ShapeError("save_ppm: expected [3, h, w], got " + shape_str(image.shape()));
  }
  const Index h = image.dim(1), w = image.dim(2);
  const Index plane = h * w;
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw IoError("cannot write '" + file.string() + "'");
  }
  out << "P6\n" << w << " " << h << "\n255\n";
  std::string payload(static_cast<std::size_t>(plane) * 3, '\0');
  for (Index p = 0; p < plane; ++p) {
    for (Index c = 0; c < 3; ++c) {
      const double v = std::clamp(image.array()[c * plane + p], 0.0, 1.0);
      payload[static_cast<std::size_t>(p * 3 + c)] =
          static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) {
    throw IoError("failed writing '" + file.string() + "'");
  }
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path images_dir = dir / "images";
  if (!fs::is_directory(images_dir)) {
    throw IoError("dataset directory '" + dir.string() + "' has no images/ subdirectory");
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (entry.is_regular_file()) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());

  Dataset dataset;
  dataset.items.reserve(names.size());
  for (const std::string& name : names) {
    ImageRecord record;
    record.filename = name;
    record.image = load_image(images_dir / name);
    dataset.items.push_back(std::move(record));
  }

  const fs::path labels_file = dir / "labels.csv";
  if (!fs::exists(labels_file)) {
    return dataset;
  }

  std::ifstream in(labels_file);
  if (!in) {
    throw IoError("cannot open '" + labels_file.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("empty labels file '" + labels_file.string() + "'");
  }
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
  if (line != "filename,label") {
    throw IoError("labels file '" + labels_file.string() +
                  "' must start with header 'filename,label'");
  }
  std::map<std::string, int> by_name;
  int max_label = -1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw IoError("labels line " + std::to_string(line_no) + " has no comma");
    }
    const std::string name = line.substr(0, comma);
    int label = -1;
    try {
      std::size_t used = 0;
      label = std::stoi(line.substr(comma + 1), &used);
      if (used != line.size() - comma - 1 || label < 0) {
        throw std::invalid_argument(line);
      }
    } catch (const std::exception&) {
      throw IoError("labels line " + std::to_string(line_no) + " has an invalid label");
    }
    if (!by_name.emplace(name, label).second) {
      throw IoError("duplicate labels entry for '" + name + "'");
    }
    max_label = std::max(max_label, label);
  }

  for (auto& item : dataset.items) {
    auto it = by_name.find(item.filename);
    if (it == by_name.end()) {
      throw IoError("image '" + item.filename + "' is missing from labels.csv");
    }
    item.label = it->second;
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw IoError("labels.csv references missing file '" + by_name.begin()->first + "'");
  }

  dataset.num_classes = max_label + 1;
  if (dataset.num_classes < 2) {
    throw InputError("labeled dataset needs at least 2 classes");
  }
  std::vector<long> counts(static_cast<std::size_t>(dataset.num_classes), 0);
  for (const auto& item : dataset.items) {
    ++counts[static_cast<std::size_t>(item.label)];
  }
  for (int c = 0; c < dataset.num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw InputError("class " + std::to_string(c) + " has no items (labels must cover [0, "
                       + std::to_string(dataset.num_classes) + "))");
    }
  }
  return dataset;
}

void generate_synthetic(const fs::path& out_dir, int classes, int per_class,
                        Index image_size, std::uint64_t seed) {
  if (classes < 2) {
    throw InputError("generate_synthetic: need at least 2 classes");
  }
  if (per_class < 1) {
    throw InputError("generate_synthetic: need at least 1 image per class");
  }
  if (image_size < 8) {
    throw InputError("generate_synthetic: image_size too small");
  }
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec || !fs::is_directory(out_dir / "images")) {
    throw IoError("cannot create '" + (out_dir / "images").string() + "'");
  }

  const double s = static_cast<double>(image_size);
  std::vector<std::pair<std::string, int>> rows;
  for (int cls = 0; cls < classes; ++cls) {
    for (int idx = 0; idx < per_class; ++idx) {
      Rng rng = Rng::keyed({seed, static_cast<std::uint64_t>(cls),
                            static_cast<std::uint64_t>(idx)});
      Tensor img = Tensor::zeros({3, image_size, image_size});
      const Index plane = image_size * image_size;

      const double cx = 0.5 * s + rng.uniform(-s / 32.0, s / 32.0);
      const double cy = 0.5 * s + rng.uniform(-s / 32.0, s / 32.0);
      const double radius = s * rng.uniform(0.36, 0.42);
      const double base_r = 0.62 + rng.uniform(-0.03, 0.03);
      const double base_g = 0.36 + rng.uniform(-0.03, 0.03);
      const double base_b = 0.14 + rng.uniform(-0.02, 0.02);

      // Vessel-like texture indexed by class: frequency and orientation, the
      // two axes that survive per-channel standardization. Classes are spread
      // over a wide frequency range and up to a 90-degree orientation gap.
      const double freq = 2.0 + 6.0 * cls + rng.uniform(-0.25, 0.25);
      const double theta = cls * std::numbers::pi / (2.0 * std::max(1, classes - 1)) +
                           rng.uniform(-0.05, 0.05);
      const double phase = 0.7 * cls + rng.uniform(-0.15, 0.15);
      const double ct = std::cos(theta), st = std::sin(theta);

      // Bright blobs, 0-3, count distribution indexed by class.
      const int blob_count =
          std::min(3, static_cast<int>((2 * cls) % 4) + (rng.uniform() < 0.3 ? 1 : 0));
      std::vector<std::array<double, 3>> blobs;  // x, y, sigma
      for (int b = 0; b < blob_count; ++b) {
        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double dist = rng.uniform(0.0, 0.6) * radius;
        blobs.push_back({cx + dist * std::cos(angle), cy + dist * std::sin(angle),
                         rng.uniform(s / 24.0, s / 12.0)});
      }

      for (Index y = 0; y < image_size; ++y) {
        for (Index x = 0; x < image_size; ++x) {
          const double dx = static_cast<double>(x) - cx;
          const double dy = static_cast<double>(y) - cy;
          const double dist = std::sqrt(dx * dx + dy * dy);
          double r = 0.05, g = 0.05, b = 0.05;
          if (dist <= radius) {
            // Soft edge over the outer 10% of the radius.
            const double edge = std::clamp((radius - dist) / (0.1 * radius), 0.0, 1.0);
            const double wave = std::sin(2.0 * std::numbers::pi * freq *
                                             (dx * ct + dy * st) / s + phase);
            r += edge * (base_r + 0.30 * wave - 0.05);
            g += edge * (base_g + 0.20 * wave - 0.05);
            b += edge * (base_b + 0.10 * wave - 0.05);
            for (const auto& blob : blobs) {
              const double bx = static_cast<double>(x) - blob[0];
              const double by = static_cast<double>(y) - blob[1];
              const double boost =
                  0.50 * std::exp(-(bx * bx + by * by) / (2.0 * blob[2] * blob[2]));
              r += boost;
              g += boost * 0.9;
              b += boost * 0.5;
            }
          }
          const Index p = y * image_size + x;
          img.array()[p] = std::clamp(r + 0.02 * rng.normal(), 0.0, 1.0);
          img.array()[plane + p] = std::clamp(g + 0.02 * rng.normal(), 0.0, 1.0);
          img.array()[2 * plane + p] = std::clamp(b + 0.02 * rng.normal(), 0.0, 1.0);
        }
      }

      char name[64];
      std::snprintf(name, sizeof(name), "c%02d_%05d.ppm", cls, idx);
      save_ppm(out_dir / "images" / name, img);
      rows.emplace_back(name, cls);
    }
  }

  std::sort(rows.begin(), rows.end());
  std::ofstream labels(out_dir / "labels.csv", std::ios::binary);
  if (!labels) {
    throw IoError("cannot write '" + (out_dir / "labels.csv").string() + "'");
  }
  labels << "filename,label\n";
  for (const auto& [name, cls] : rows) {
    labels << name << "," << cls << "\n";
  }
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;
  const fs::path& file;

  void need(std::size_t n) const {
    if (pos + n > data.size()) {
      throw IoError("truncated checkpoint '" + file.string() + "'");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = data.substr(pos, n);
    pos += n;
    return out;
  }
};

}  // namespace

void save_checkpoint(const fs::path& path, const Checkpoint& checkpoint) {
  std::set<std::string> seen;
  for (const auto& [name, tensor] : checkpoint.tensors) {
    if (name.empty()) {
      throw ContractError("save_checkpoint: empty tensor name");
    }
    if (!seen.insert(name).second) {
      throw ContractError("save_checkpoint: duplicate tensor name '" + name + "'");
    }
    if (!tensor.defined()) {
      throw ContractError("save_checkpoint: undefined tensor '" + name + "'");
    }
  }

  std::string out;
  out += "SSVTCKPT";
  put_u32(out, checkpoint.version);
  put_u32(out, static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& [name, tensor] : checkpoint.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (Index d : tensor.shape()) {
      put_u64(out, static_cast<std::uint64_t>(d));
    }
    for (Index i = 0; i < tensor.size(); ++i) {
      put_u64(out, std::bit_cast<std::uint64_t>(tensor.array()[i]));
    }
  }
  put_u32(out, static_cast<std::uint32_t>(checkpoint.metadata.size()));
  for (const auto& [key, value] : checkpoint.metadata) {
    put_u32(out, static_cast<std::uint32_t>(key.size()));
    out += key;
    put_u32(out, static_cast<std::uint32_t>(value.size()));
    out += value;
  }

  std::ofstream stream(path, std::ios::binary);
  if (!stream) {
    throw IoError("cannot write '" + path.string() + "'");
  }
  stream.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!stream) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

Checkpoint load_checkpoint(const fs::path& path) {
  const std::string data = read_file(path);
  Reader reader{data, 0, path};
  const std::string magic = reader.bytes(8);
  if (magic != "SSVTCKPT") {
    throw IoError("bad magic in '" + path.string() + "'");
  }
  Checkpoint checkpoint;
  checkpoint.version = reader.u32();
  if (checkpoint.version != 1) {
    throw IoError("unsupported checkpoint version " + std::to_string(checkpoint.version) +
                  " in '" + path.string() + "'");
  }
  const std::uint32_t tensor_count = reader.u32();
  std::set<std::string> seen;
  for (std::uint32_t t = 0; t < tensor_count; ++t) {
    const std::uint32_t name_len = reader.u32();
    const std::string name = reader.bytes(name_len);
    if (!seen.insert(name).second) {
      throw IoError("duplicate tensor name '" + name + "' in '" + path.string() + "'");
    }
    const std::uint32_t rank = reader.u32();
    Shape shape;
    shape.reserve(rank);
    Index total = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint64_t dim = reader.u64();
      if (dim == 0 || dim > (1ull << 40)) {
        throw IoError("invalid dimension in '" + path.string() + "'");
      }
      shape.push_back(static_cast<Index>(dim));
      total *= static_cast<Index>(dim);
    }
    Array values(total);
    for (Index i = 0; i < total; ++i) {
      values[i] = std::bit_cast<double>(reader.u64());
    }
    checkpoint.tensors.emplace_back(name, Tensor::from_array(std::move(shape), std::move(values)));
  }
  const std::uint32_t meta_count = reader.u32();
  for (std::uint32_t m = 0; m < meta_count; ++m) {
    const std::uint32_t key_len = reader.u32();
    const std::string key = reader.bytes(key_len);
    const std::uint32_t value_len = reader.u32();
    checkpoint.metadata[key] = reader.bytes(value_len);
  }
  return checkpoint;
}

}  // namespace ssvt::io
