#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mbrl::io {

// Little-endian binary primitives shared by the dataset and checkpoint
// formats. The host is assumed little-endian (checked once at startup of
// any writer/reader).

void check_little_endian();

void write_bytes(std::ostream& os, const void* p, std::size_t n);
void read_bytes(std::istream& is, void* p, std::size_t n);

void write_u32(std::ostream& os, std::uint32_t v);
std::uint32_t read_u32(std::istream& is);

void write_u64(std::ostream& os, std::uint64_t v);
std::uint64_t read_u64(std::istream& is);

void write_f64(std::ostream& os, double v);
double read_f64(std::istream& is);

void write_f64_array(std::ostream& os, const double* p, std::size_t n);
void read_f64_array(std::istream& is, double* p, std::size_t n);

// Length-prefixed UTF-8 blob (u32 length + bytes).
void write_blob(std::ostream& os, const std::string& s);
std::string read_blob(std::istream& is);

void write_magic(std::ostream& os, const char (&magic)[9]);
void expect_magic(std::istream& is, const char (&magic)[9],
                  const std::string& what);

std::ofstream open_out(const std::string& path);
std::ifstream open_in(const std::string& path);

// Whole-file helpers for textual artifacts.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace mbrl::io
