#include "varinit/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace varinit {

namespace {

// Skips whitespace and '#' comment lines between netpbm header tokens.
int next_pnm_int(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v;
  if (!(in >> v)) throw std::runtime_error("malformed netpbm header");
  return v;
}

}  // namespace

Image read_image(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open image '" + path + "'");
  char p, kind;
  f.get(p);
  f.get(kind);
  if (p != 'P' || (kind != '2' && kind != '3' && kind != '5' && kind != '6')) {
    throw std::runtime_error("'" + path + "': only P2/P3/P5/P6 netpbm images are supported");
  }
  const bool binary = kind == '5' || kind == '6';
  const int channels = (kind == '3' || kind == '6') ? 3 : 1;

  Image img;
  img.channels = channels;
  img.width = next_pnm_int(f);
  img.height = next_pnm_int(f);
  const int maxval = next_pnm_int(f);
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535) {
    throw std::runtime_error("'" + path + "': bad image dimensions");
  }
  const size_t count = static_cast<size_t>(img.width) * img.height * channels;
  img.pixels.resize(count);

  if (binary) {
    f.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw std::runtime_error("'" + path + "': truncated pixel data");
    for (size_t i = 0; i < count; ++i) {
      const int v = bytes == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
      img.pixels[i] = static_cast<double>(v) / maxval;
    }
  } else {
    for (size_t i = 0; i < count; ++i) {
      img.pixels[i] = static_cast<double>(next_pnm_int(f)) / maxval;
    }
  }
  return img;
}

void write_image(const Image& img, const std::string& path) {
  if (img.channels != 1 && img.channels != 3) {
    throw std::invalid_argument("write_image: channels must be 1 or 3");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write image '" + path + "'");
  f << (img.channels == 1 ? "P5" : "P6") << '\n'
    << img.width << ' ' << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

namespace {

template <typename T>
void write_le(std::ofstream& f, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  f.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

std::uint32_t read_le32(std::ifstream& f) {
  unsigned char buf[4];
  f.read(reinterpret_cast<char*>(buf), 4);
  return buf[0] | (buf[1] << 8) | (buf[2] << 16) | (std::uint32_t(buf[3]) << 24);
}

std::uint16_t read_le16(std::ifstream& f) {
  unsigned char buf[2];
  f.read(reinterpret_cast<char*>(buf), 2);
  return static_cast<std::uint16_t>(buf[0] | (buf[1] << 8));
}

}  // namespace

Audio read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open wav '" + path + "'");
  char tag[4];
  f.read(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("'" + path + "' is not RIFF");
  read_le32(f);  // riff size
  f.read(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("'" + path + "' is not WAVE");

  Audio audio;
  int bits = 0, channels = 0;
  bool have_fmt = false;
  while (f.read(tag, 4)) {
    const std::uint32_t size = read_le32(f);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const std::uint16_t format = read_le16(f);
      channels = read_le16(f);
      audio.sample_rate = static_cast<int>(read_le32(f));
      read_le32(f);  // byte rate
      read_le16(f);  // block align
      bits = read_le16(f);
      if (size > 16) f.seekg(size - 16, std::ios::cur);
      if (format != 1 || channels != 1 || bits != 16) {
        throw std::runtime_error("'" + path + "': only 16-bit PCM mono is supported");
      }
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("'" + path + "': data before fmt chunk");
      const size_t n = size / 2;
      audio.samples.resize(n);
      std::vector<unsigned char> raw(size);
      f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(size));
      if (!f) throw std::runtime_error("'" + path + "': truncated data chunk");
      for (size_t i = 0; i < n; ++i) {
        const std::int16_t v =
            static_cast<std::int16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
        audio.samples[i] = static_cast<double>(v) / 32768.0;
      }
      return audio;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  throw std::runtime_error("'" + path + "': no data chunk");
}

void write_wav(const Audio& audio, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write wav '" + path + "'");
  const std::uint32_t data_size = static_cast<std::uint32_t>(audio.samples.size() * 2);
  f.write("RIFF", 4);
  write_le<std::uint32_t>(f, 36 + data_size);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_le<std::uint32_t>(f, 16);
  write_le<std::uint16_t>(f, 1);  // PCM
  write_le<std::uint16_t>(f, 1);  // mono
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(audio.sample_rate));
  write_le<std::uint32_t>(f, static_cast<std::uint32_t>(audio.sample_rate * 2));
  write_le<std::uint16_t>(f, 2);
  write_le<std::uint16_t>(f, 16);
  f.write("data", 4);
  write_le<std::uint32_t>(f, data_size);
  for (const double s : audio.samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const auto v = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
    write_le<std::uint16_t>(f, static_cast<std::uint16_t>(v));
  }
}

void write_pgm_heatmap(const std::vector<double>& values, int rows, int cols,
                       double lo, double hi, const std::string& path) {
  if (static_cast<size_t>(rows) * cols != values.size()) {
    throw std::invalid_argument("heatmap dimensions do not match value count");
  }
  Image img;
  img.width = cols;
  img.height = rows;
  img.channels = 1;
  img.pixels.resize(values.size());
  const double span = hi > lo ? hi - lo : 1.0;
  for (size_t i = 0; i < values.size(); ++i) {
    img.pixels[i] = std::clamp((values[i] - lo) / span, 0.0, 1.0);
  }
  write_image(img, path);
}

struct CsvWriter::Impl {
  std::ofstream file;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : impl_(new Impl) {
  impl_->file.open(path);
  if (!impl_->file) {
    delete impl_;
    throw std::runtime_error("cannot write '" + path + "'");
  }
  row(header);
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) impl_->file << ',';
    impl_->file << cells[i];
  }
  impl_->file << '\n';
}

std::string CsvWriter::num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string CsvWriter::num(long v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%ld", v);
  return buf;
}

}  // namespace varinit
