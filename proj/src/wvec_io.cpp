#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sslaw/dataset.hpp"
#include "sslaw/error.hpp"
#include "sslaw/perturb.hpp"

namespace sslaw {

namespace {

constexpr char kMagic[4] = {'W', 'V', 'E', 'C'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kHeader = 4 + 1 + 1 + 8;

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(const char* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_wvec(const WeightVector& w) {
  w.validate();
  const std::size_t width = w.dtype == DType::kF32 ? 4 : 8;
  std::string out;
  out.reserve(kHeader + width * w.count());
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kVersion));
  out.push_back(static_cast<char>(w.dtype));
  put_le<std::uint64_t>(out, w.count());
  for (double v : w.values) {
    if (w.dtype == DType::kF32) {
      put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    } else {
      put_le(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

WeightVector decode_wvec(std::string_view bytes) {
  if (bytes.size() < kHeader) fail(ErrorKind::kIo, "WVEC data is shorter than its header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorKind::kIo, "bad WVEC magic");
  const auto version = static_cast<std::uint8_t>(bytes[4]);
  if (version != kVersion) fail(ErrorKind::kIo, "unsupported WVEC version " + std::to_string(version));
  const auto code = static_cast<std::uint8_t>(bytes[5]);
  if (code > 1) fail(ErrorKind::kIo, "unknown WVEC dtype " + std::to_string(code));
  const auto count = get_le<std::uint64_t>(bytes.data() + 6);

  WeightVector w;
  w.dtype = static_cast<DType>(code);
  const std::size_t width = w.dtype == DType::kF32 ? 4 : 8;
  const std::size_t payload = bytes.size() - kHeader;
  if (count > payload / width || payload != count * width) {
    fail(ErrorKind::kIo, "WVEC payload holds " + std::to_string(payload) + " bytes, header declares " +
                             std::to_string(count) + " values");
  }
  w.values.resize(count);
  const char* p = bytes.data() + kHeader;
  for (std::size_t i = 0; i < count; ++i, p += width) {
    w.values[i] = w.dtype == DType::kF32 ? static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)))
                                         : std::bit_cast<double>(get_le<std::uint64_t>(p));
  }
  w.validate();
  return w;
}

WeightVector read_wvec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_wvec(buf.str());
}

void write_wvec(const std::string& path, const WeightVector& w) {
  const std::string bytes = encode_wvec(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for " + path);
}

std::string encode_text_vector(const WeightVector& w) {
  w.validate();
  std::string out;
  char buf[64];
  for (double v : w.values) {
    if (w.dtype == DType::kF32) {
      const auto res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v));
      out.append(buf, res.ptr);
    } else {
      out += format_number(v);
    }
    out.push_back('\n');
  }
  return out;
}

WeightVector decode_text_vector(std::string_view text, DType dtype) {
  WeightVector w;
  w.dtype = dtype;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) continue;
    double v = 0.0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc() || res.ptr != line.data() + line.size()) {
      fail(ErrorKind::kValidation, "line " + std::to_string(line_no) + ": not a number: '" + std::string(line) + "'");
    }
    w.values.push_back(dtype == DType::kF32 ? static_cast<double>(static_cast<float>(v)) : v);
  }
  w.validate();
  return w;
}

}  // namespace sslaw
