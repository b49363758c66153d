#include "terasim/io.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace terasim {

namespace {
constexpr char kMagic[4] = {'T', 'S', 'R', '1'};

uint32_t format_elem_bytes(uint32_t fmt) {
  switch (fmt) {
    case 1: return 4;
    case 2: return 8;
    case 3: return 16;
  }
  throw std::invalid_argument("tensor: unknown format tag");
}
}  // namespace

uint64_t Tensor::elements() const {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  return n;
}

void write_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 4);
  const uint32_t fmt = t.format, nd = uint32_t(t.dims.size());
  out.write(reinterpret_cast<const char*>(&fmt), 4);
  out.write(reinterpret_cast<const char*>(&nd), 4);
  for (uint64_t d : t.dims) out.write(reinterpret_cast<const char*>(&d), 8);
  out.write(reinterpret_cast<const char*>(t.data.data()), std::streamsize(t.data.size()));
}

Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[4];
  in.read(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("tensor: bad magic in " + path);
  Tensor t;
  uint32_t nd = 0;
  in.read(reinterpret_cast<char*>(&t.format), 4);
  in.read(reinterpret_cast<char*>(&nd), 4);
  t.dims.resize(nd);
  for (auto& d : t.dims) in.read(reinterpret_cast<char*>(&d), 8);
  t.data.resize(t.elements() * format_elem_bytes(t.format));
  in.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(t.data.size()));
  if (!in) throw std::runtime_error("tensor: truncated file " + path);
  return t;
}

Tensor tensor_from_cq15(const std::vector<uint32_t>& words,
                        std::vector<uint64_t> dims) {
  Tensor t;
  t.format = 1;
  t.dims = std::move(dims);
  t.data.resize(words.size() * 4);
  std::memcpy(t.data.data(), words.data(), t.data.size());
  return t;
}

Tensor tensor_from_cf64(const std::vector<std::complex<double>>& v,
                        std::vector<uint64_t> dims) {
  Tensor t;
  t.format = 3;
  t.dims = std::move(dims);
  t.data.resize(v.size() * 16);
  std::memcpy(t.data.data(), v.data(), t.data.size());
  return t;
}

void load_memory_image(MainMemory& mem, const std::string& path, uint64_t offset) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot read " + path);
  const uint64_t n = uint64_t(in.tellg());
  in.seekg(0);
  std::vector<uint8_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n));
  mem.write_bytes(offset, buf.data(), n);
}

void store_memory_image(const MainMemory& mem, const std::string& path,
                        uint64_t offset, uint64_t length) {
  std::vector<uint8_t> buf(length);
  mem.read_bytes(offset, buf.data(), length);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(length));
}

std::string hexdump(const MainMemory& mem, uint64_t offset, uint64_t length) {
  std::vector<uint8_t> buf(length);
  mem.read_bytes(offset, buf.data(), length);
  std::ostringstream os;
  for (uint64_t i = 0; i < length; i += 16) {
    os << std::hex << std::setw(10) << std::setfill('0') << (offset + i) << " ";
    for (uint64_t j = i; j < std::min(length, i + 16); ++j)
      os << " " << std::setw(2) << uint32_t(buf[j]);
    os << "\n";
  }
  return os.str();
}

}  // namespace terasim
