#include "lsdc/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lsdc {

namespace {

constexpr char kDepthMagic[4] = {'D', 'M', 'A', 'P'};
constexpr char kFeatureMagic[4] = {'F', 'M', 'A', 'P'};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32le(std::istream& in, const std::string& what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4))
    throw TruncatedError("unexpected end of file while reading " + what);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_f32le(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32le(out, bits);
}

float read_f32le(std::istream& in, const std::string& what) {
  const std::uint32_t bits = read_u32le(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

/// Reads the next whitespace-delimited PNM header token, skipping
/// '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (tok.empty()) throw FormatError("malformed image header: missing token");
  return tok;
}

long pnm_number(std::istream& in, const std::string& what) {
  const std::string tok = pnm_token(in);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || value < 0)
    throw FormatError("malformed image header: bad " + what + " '" + tok + "'");
  return value;
}

struct PnmHeader {
  bool color = false;  // P6 vs P5
  Index width = 0;
  Index height = 0;
  long maxval = 0;
};

PnmHeader read_pnm_header(std::istream& in, const std::filesystem::path& path) {
  char magic[2];
  if (!in.read(magic, 2)) throw TruncatedError("empty file " + path.string());
  PnmHeader h;
  if (magic[0] == 'P' && magic[1] == '6')
    h.color = true;
  else if (magic[0] == 'P' && magic[1] == '5')
    h.color = false;
  else
    throw FormatError("not a binary PPM/PGM file: " + path.string());
  h.width = pnm_number(in, "width");
  h.height = pnm_number(in, "height");
  h.maxval = pnm_number(in, "maxval");
  if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 65535)
    throw FormatError("malformed image header in " + path.string());
  // The header ends with exactly one whitespace byte before the payload.
  return h;
}

std::vector<std::uint16_t> read_pnm_payload(std::istream& in, const PnmHeader& h,
                                            const std::filesystem::path& path) {
  const std::size_t samples =
      static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height) * (h.color ? 3 : 1);
  const bool two_byte = h.maxval > 255;
  std::vector<char> raw(samples * (two_byte ? 2 : 1));
  if (!in.read(raw.data(), static_cast<std::streamsize>(raw.size())))
    throw TruncatedError("truncated pixel payload in " + path.string());
  std::vector<std::uint16_t> out(samples);
  if (two_byte) {
    for (std::size_t i = 0; i < samples; ++i) {
      // Big-endian sample order, as the PNM formats specify.
      const auto hi = static_cast<unsigned char>(raw[2 * i]);
      const auto lo = static_cast<unsigned char>(raw[2 * i + 1]);
      out[i] = static_cast<std::uint16_t>((hi << 8) | lo);
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i)
      out[i] = static_cast<unsigned char>(raw[i]);
  }
  return out;
}

char peek_magic_byte(const std::filesystem::path& path, char magic[4]) {
  std::ifstream in = open_input(path);
  if (!in.read(magic, 4)) throw TruncatedError("file too short: " + path.string());
  return magic[0];
}

}  // namespace

DenseGrid<double> load_image(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  const PnmHeader h = read_pnm_header(in, path);
  const std::vector<std::uint16_t> px = read_pnm_payload(in, h, path);
  const Index channels = h.color ? 3 : 1;
  DenseGrid<double> image(h.height, h.width, channels);
  const double scale = 1.0 / static_cast<double>(h.maxval);
  std::size_t i = 0;
  for (Index r = 0; r < h.height; ++r)
    for (Index c = 0; c < h.width; ++c)
      for (Index ch = 0; ch < channels; ++ch) image(r, c, ch) = px[i++] * scale;
  return image;
}

void save_image(const DenseGrid<double>& image, const std::filesystem::path& path) {
  if (image.channels() != 3 && image.channels() != 1)
    throw DimensionError("save_image: expected 1 or 3 channels");
  std::ofstream out = open_output(path);
  out << (image.channels() == 3 ? "P6" : "P5") << "\n"
      << image.width() << " " << image.height() << "\n255\n";
  for (Index r = 0; r < image.height(); ++r)
    for (Index c = 0; c < image.width(); ++c)
      for (Index ch = 0; ch < image.channels(); ++ch) {
        const double v = std::clamp(image(r, c, ch), 0.0, 1.0);
        out.put(static_cast<char>(std::lround(v * 255.0)));
      }
  if (!out) throw IoError("failed writing " + path.string());
}

DepthMap<double> load_depth(const std::filesystem::path& path) {
  char magic[4];
  peek_magic_byte(path, magic);
  std::ifstream in = open_input(path);

  if (std::memcmp(magic, kDepthMagic, 4) == 0) {
    in.ignore(4);
    const std::uint32_t height = read_u32le(in, "height");
    const std::uint32_t width = read_u32le(in, "width");
    if (height == 0 || width == 0)
      throw FormatError("malformed depth header in " + path.string());
    DepthMap<double> map(static_cast<Index>(height), static_cast<Index>(width), 1);
    for (Index r = 0; r < map.height(); ++r)
      for (Index c = 0; c < map.width(); ++c)
        map(r, c) = static_cast<double>(read_f32le(in, "depth payload"));
    return map;
  }

  if (magic[0] == 'P' && magic[1] == '5') {
    const PnmHeader h = read_pnm_header(in, path);
    if (h.maxval <= 255)
      throw FormatError("depth PGM must be 16-bit (maxval > 255): " + path.string());
    const std::vector<std::uint16_t> px = read_pnm_payload(in, h, path);
    DepthMap<double> map(h.height, h.width, 1);
    std::size_t i = 0;
    for (Index r = 0; r < h.height; ++r)
      for (Index c = 0; c < h.width; ++c) map(r, c) = px[i++] / 1000.0;  // millimeters
    return map;
  }

  throw FormatError("unrecognized depth format in " + path.string());
}

void save_depth(const DepthMap<double>& map, const std::filesystem::path& path) {
  if (map.channels() != 1) throw DimensionError("save_depth: expected a single-channel map");
  std::ofstream out = open_output(path);
  if (path.extension() == ".pgm") {
    out << "P5\n" << map.width() << " " << map.height() << "\n65535\n";
    for (Index r = 0; r < map.height(); ++r)
      for (Index c = 0; c < map.width(); ++c) {
        const double mm = std::clamp(map(r, c) * 1000.0, 0.0, 65535.0);
        const auto v = static_cast<std::uint16_t>(std::lround(mm));
        out.put(static_cast<char>(v >> 8));
        out.put(static_cast<char>(v & 0xff));
      }
  } else {
    out.write(kDepthMagic, 4);
    write_u32le(out, static_cast<std::uint32_t>(map.height()));
    write_u32le(out, static_cast<std::uint32_t>(map.width()));
    for (Index r = 0; r < map.height(); ++r)
      for (Index c = 0; c < map.width(); ++c)
        write_f32le(out, static_cast<float>(map(r, c)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

FeatureMap<double> load_features(const std::filesystem::path& path) {
  char magic[4];
  peek_magic_byte(path, magic);
  if (std::memcmp(magic, kFeatureMagic, 4) != 0)
    throw FormatError("not a feature-map file: " + path.string());
  std::ifstream in = open_input(path);
  in.ignore(4);
  const std::uint32_t height = read_u32le(in, "height");
  const std::uint32_t width = read_u32le(in, "width");
  const std::uint32_t channels = read_u32le(in, "channels");
  if (height == 0 || width == 0 || channels == 0)
    throw FormatError("malformed feature-map header in " + path.string());
  FeatureMap<double> features(static_cast<Index>(height), static_cast<Index>(width),
                              static_cast<Index>(channels));
  // One contiguous row-major plane per channel.
  for (Index ch = 0; ch < features.channels(); ++ch)
    for (Index k = 0; k < features.pixels(); ++k)
      features.values()(k, ch) = static_cast<double>(read_f32le(in, "feature payload"));
  return features;
}

void save_features(const FeatureMap<double>& features, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out.write(kFeatureMagic, 4);
  write_u32le(out, static_cast<std::uint32_t>(features.height()));
  write_u32le(out, static_cast<std::uint32_t>(features.width()));
  write_u32le(out, static_cast<std::uint32_t>(features.channels()));
  for (Index ch = 0; ch < features.channels(); ++ch)
    for (Index k = 0; k < features.pixels(); ++k)
      write_f32le(out, static_cast<float>(features.values()(k, ch)));
  if (!out) throw IoError("failed writing " + path.string());
}

SparseDepth<double> load_sparse(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw TruncatedError("empty sparse file " + path.string());
  std::istringstream header(line);
  std::string word, version;
  long height = 0, width = 0, count = 0;
  if (!(header >> word >> version >> height >> width >> count) || word != "sparse" ||
      version != "v1" || height < 1 || width < 1 || count < 0)
    throw FormatError("malformed sparse header in " + path.string());

  std::vector<SparseDepth<double>::Entry> entries;
  entries.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    long row = 0, col = 0;
    double depth = 0;
    if (!(in >> row >> col >> depth))
      throw TruncatedError("sparse file " + path.string() + " declares " +
                           std::to_string(count) + " entries but ends at " + std::to_string(i));
    entries.push_back({static_cast<Index>(row), static_cast<Index>(col), depth});
  }
  return SparseDepth<double>(static_cast<Index>(height), static_cast<Index>(width),
                             std::move(entries));
}

void save_sparse(const SparseDepth<double>& sparse, const std::filesystem::path& path) {
  std::ofstream out = open_output(path);
  out << "sparse v1 " << sparse.height() << " " << sparse.width() << " " << sparse.size() << "\n";
  char buf[64];
  for (const auto& e : sparse.entries()) {
    // 17 significant digits: doubles survive the text round trip exactly.
    std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n", static_cast<long long>(e.row),
                  static_cast<long long>(e.col), e.depth);
    out << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

DatasetSample<double> load_sample(const std::filesystem::path& image_path,
                                  const std::filesystem::path& depth_path) {
  DatasetSample<double> sample;
  DenseGrid<double> image = load_image(image_path);
  if (image.channels() == 1) {
    DenseGrid<double> rgb(image.height(), image.width(), 3);
    for (Index c = 0; c < 3; ++c) rgb.values().col(c) = image.values().col(0);
    image = std::move(rgb);
  }
  sample.image = std::move(image);
  sample.gt_depth = load_depth(depth_path);
  if (sample.gt_depth.height() != sample.image.height() ||
      sample.gt_depth.width() != sample.image.width())
    throw DimensionError("load_sample: image is " + std::to_string(sample.image.height()) + "x" +
                         std::to_string(sample.image.width()) + " but depth is " +
                         std::to_string(sample.gt_depth.height()) + "x" +
                         std::to_string(sample.gt_depth.width()));
  sample.valid_mask = valid_mask_of(sample.gt_depth);
  return sample;
}

}  // namespace lsdc
