#include "spoofsmith/io/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "spoofsmith/error.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "blob encoding assumes a little-endian host");

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'A', 'D', 'T'};
constexpr std::size_t kFixedHeader = 8;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

DType blob_dtype(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFixedHeader) throw CorruptionError("tensor blob truncated in header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw CorruptionError("bad tensor blob magic");
  if (bytes[4] != kBlobVersion) {
    throw UnsupportedVersionError("tensor blob version " + std::to_string(bytes[4]) + " is not supported");
  }
  if (bytes[5] > 1) throw CorruptionError("unknown tensor blob dtype " + std::to_string(bytes[5]));
  return static_cast<DType>(bytes[5]);
}

template <typename T>
void append_tensor_blob(std::vector<std::uint8_t>& out, const Tensor<T>& tensor) {
  if (!tensor.defined()) throw InvalidArgumentError("cannot encode an undefined tensor");
  if (tensor.rank() > 255) throw InvalidShapeError("tensor rank exceeds blob limit");
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(kBlobVersion);
  out.push_back(static_cast<std::uint8_t>(dtype_of<T>()));
  out.push_back(static_cast<std::uint8_t>(tensor.rank()));
  out.push_back(0);
  for (std::size_t d : tensor.shape()) put_u64(out, d);
  const auto data = tensor.data();
  const auto* raw = reinterpret_cast<const std::uint8_t*>(data.data());
  out.insert(out.end(), raw, raw + data.size_bytes());
}

template <typename T>
Tensor<T> decode_tensor_blob(std::span<const std::uint8_t> bytes) {
  const DType dtype = blob_dtype(bytes);
  if (dtype != dtype_of<T>()) throw ParseError("tensor blob dtype does not match the requested element type");
  if (bytes[7] != 0) throw CorruptionError("tensor blob padding byte is not zero");
  const std::size_t rank = bytes[6];
  if (rank == 0) throw CorruptionError("tensor blob has rank 0");
  if (bytes.size() < kFixedHeader + 8 * rank) throw CorruptionError("tensor blob truncated in dims");
  Shape shape(rank);
  std::size_t numel = 1;
  for (std::size_t i = 0; i < rank; ++i) {
    const std::uint64_t d = get_u64(bytes.data() + kFixedHeader + 8 * i);
    if (d == 0 || numel > (std::uint64_t{1} << 40) / d) throw CorruptionError("tensor blob has an invalid dim");
    shape[i] = static_cast<std::size_t>(d);
    numel *= shape[i];
  }
  const std::size_t body = kFixedHeader + 8 * rank;
  const std::size_t expected = body + numel * sizeof(T);
  if (bytes.size() < expected) throw CorruptionError("tensor blob truncated in data");
  if (bytes.size() > expected) throw CorruptionError("tensor blob has trailing bytes");
  auto out = Tensor<T>::zeros(shape);
  std::memcpy(out.mutable_data().data(), bytes.data() + body, numel * sizeof(T));
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

template <typename T>
void save_tensor(const Tensor<T>& tensor, const fs::path& path) {
  write_file_bytes(path, encode_tensor_blob(tensor));
}

template <typename T>
Tensor<T> load_tensor(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_tensor_blob<T>(bytes);
}

#define SPOOFSMITH_INSTANTIATE(T)                                                            \
  template void append_tensor_blob(std::vector<std::uint8_t>&, const Tensor<T>&);          \
  template Tensor<T> decode_tensor_blob<T>(std::span<const std::uint8_t>);                 \
  template void save_tensor(const Tensor<T>&, const fs::path&);                              \
  template Tensor<T> load_tensor<T>(const fs::path&);

SPOOFSMITH_INSTANTIATE(float)
SPOOFSMITH_INSTANTIATE(double)
#undef SPOOFSMITH_INSTANTIATE

}  // namespace spoofsmith
