#pragma once

#include <string>
#include <vector>

namespace varinit {

/// Raster image, channel-interleaved rows, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 (gray) or 3 (rgb)
  std::vector<double> pixels;

  double& at(int y, int x, int c) { return pixels[(y * width + x) * channels + c]; }
  double at(int y, int x, int c) const { return pixels[(y * width + x) * channels + c]; }
};

/// Reads PGM (P2/P5) and PPM (P3/P6), any maxval up to 65535.
Image read_image(const std::string& path);
/// Writes P5 for 1-channel images, P6 for 3-channel, maxval 255.
void write_image(const Image& img, const std::string& path);

/// Mono PCM audio, samples in [-1, 1].
struct Audio {
  int sample_rate = 8000;
  std::vector<double> samples;
};

/// 16-bit PCM mono WAV.
Audio read_wav(const std::string& path);
void write_wav(const Audio& audio, const std::string& path);

/// Row-major matrix dumped as an 8-bit grayscale PGM, mapping [lo, hi] to
/// 0..255 (values clamped).
void write_pgm_heatmap(const std::vector<double>& values, int rows, int cols,
                       double lo, double hi, const std::string& path);

/// Minimal CSV emitter: fixed header, rows of formatted cells. Numeric cells
/// use %.10g so identical runs are byte-identical.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  ~CsvWriter();

  void row(const std::vector<std::string>& cells);
  static std::string num(double v);
  static std::string num(long v);

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace varinit
