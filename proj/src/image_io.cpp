#include "rvc/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rvc/error.hpp"

namespace rvc {

namespace {

// Parses "P?" header fields separated by whitespace and comments; returns the
// offset of the first data byte.
std::size_t parse_header(std::string_view bytes, std::string_view magic, int n_fields, int* fields) {
  if (bytes.substr(0, 2) != magic) throw ParseError("expected " + std::string(magic) + " header");
  std::size_t pos = 2;
  for (int f = 0; f < n_fields; ++f) {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw ParseError("malformed image header");
    fields[f] = std::stoi(std::string(bytes.substr(start, pos - start)));
  }
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ParseError("malformed image header");
  }
  return pos + 1;
}

}  // namespace

std::string encode_pbm(const BinaryImage& img) {
  std::string out = "P4\n" + std::to_string(img.res.width) + " " + std::to_string(img.res.height) + "\n";
  const int row_bytes = (img.res.width + 7) / 8;
  for (int y = 0; y < img.res.height; ++y) {
    for (int b = 0; b < row_bytes; ++b) {
      unsigned char byte = 0;
      for (int bit = 0; bit < 8; ++bit) {
        const int x = b * 8 + bit;
        if (x < img.res.width && img.at(x, y)) byte |= static_cast<unsigned char>(0x80 >> bit);
      }
      out.push_back(static_cast<char>(byte));
    }
  }
  return out;
}

BinaryImage decode_pbm(std::string_view bytes) {
  int dims[2];
  std::size_t pos = parse_header(bytes, "P4", 2, dims);
  BinaryImage img(Resolution{dims[0], dims[1]});
  const int row_bytes = (dims[0] + 7) / 8;
  if (bytes.size() < pos + static_cast<std::size_t>(row_bytes) * dims[1]) {
    throw ParseError("truncated P4 data");
  }
  for (int y = 0; y < dims[1]; ++y) {
    for (int x = 0; x < dims[0]; ++x) {
      const auto byte = static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(y) * row_bytes + x / 8]);
      img.at(x, y) = (byte >> (7 - x % 8)) & 1;
    }
  }
  return img;
}

std::string encode_pgm(const MeanImage& img) {
  std::string out = "P5\n" + std::to_string(img.res.width) + " " + std::to_string(img.res.height) + "\n255\n";
  out.reserve(out.size() + img.prob.size());
  for (double p : img.prob) {
    const long v = std::lround(std::clamp(p, 0.0, 1.0) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

MeanImage decode_pgm(std::string_view bytes, double epsilon) {
  int fields[3];
  std::size_t pos = parse_header(bytes, "P5", 3, fields);
  if (fields[2] != 255) throw ParseError("only maxval 255 graymaps are supported");
  MeanImage img;
  img.res = Resolution{fields[0], fields[1]};
  img.params.epsilon = epsilon;
  if (bytes.size() < pos + img.res.pixels()) throw ParseError("truncated P5 data");
  img.prob.resize(img.res.pixels());
  for (std::size_t i = 0; i < img.prob.size(); ++i) {
    const double v = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
    img.prob[i] = std::clamp(v, epsilon, 1.0 - epsilon);
  }
  return img;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

BinaryImage load_pbm(const std::filesystem::path& path) { return decode_pbm(read_file(path)); }
void save_pbm(const std::filesystem::path& path, const BinaryImage& img) { write_file(path, encode_pbm(img)); }
void save_pgm(const std::filesystem::path& path, const MeanImage& img) { write_file(path, encode_pgm(img)); }

std::string image_digest(const BinaryImage& img) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(static_cast<std::uint64_t>(img.res.width));
  mix(static_cast<std::uint64_t>(img.res.height));
  for (auto p : img.pixels) mix(p);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                       (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                       static_cast<unsigned char>(bytes[i + 2]);
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += table[(v >> 6) & 63];
    out += table[v & 63];
  }
  if (i < bytes.size()) {
    unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    if (i + 1 < bytes.size()) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += table[(v >> 18) & 63];
    out += table[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? table[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

}  // namespace rvc
