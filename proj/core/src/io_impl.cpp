#include "mbrl/io.hpp"

#include <cstring>

namespace mbrl::io {

void check_little_endian() {
  const std::uint32_t probe = 0x01020304u;
  unsigned char b[4];
  std::memcpy(b, &probe, 4);
  if (b[0] != 0x04)
    throw std::runtime_error("binary formats require a little-endian host");
}

void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw std::runtime_error("write failed");
}

void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (is.gcount() != static_cast<std::streamsize>(n))
    throw std::runtime_error("unexpected end of file");
}

void write_u32(std::ostream& os, std::uint32_t v) { write_bytes(os, &v, 4); }

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v;
  read_bytes(is, &v, 4);
  return v;
}

void write_u64(std::ostream& os, std::uint64_t v) { write_bytes(os, &v, 8); }

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v;
  read_bytes(is, &v, 8);
  return v;
}

void write_f64(std::ostream& os, double v) { write_bytes(os, &v, 8); }

double read_f64(std::istream& is) {
  double v;
  read_bytes(is, &v, 8);
  return v;
}

void write_f64_array(std::ostream& os, const double* p, std::size_t n) {
  write_bytes(os, p, n * sizeof(double));
}

void read_f64_array(std::istream& is, double* p, std::size_t n) {
  read_bytes(is, p, n * sizeof(double));
}

void write_blob(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  write_bytes(os, s.data(), s.size());
}

std::string read_blob(std::istream& is) {
  const std::uint32_t n = read_u32(is);
  std::string s(n, '\0');
  if (n > 0) read_bytes(is, s.data(), n);
  return s;
}

void write_magic(std::ostream& os, const char (&magic)[9]) {
  write_bytes(os, magic, 8);
}

void expect_magic(std::istream& is, const char (&magic)[9],
                  const std::string& what) {
  char buf[8];
  read_bytes(is, buf, 8);
  if (std::memcmp(buf, magic, 8) != 0)
    throw std::runtime_error("bad magic: not a " + what + " file");
}

std::ofstream open_out(const std::string& path) {
  check_little_endian();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  check_little_endian();
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return is;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::string out((std::istreambuf_iterator<char>(is)),
                  std::istreambuf_iterator<char>());
  return out;
}

}  // namespace mbrl::io
