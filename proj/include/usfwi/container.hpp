#pragma once

/// \file usfwi/container.hpp
/// \brief Raw little-endian arrays with a JSON sidecar.
///
/// `<base>.bin` holds the payload in row-major order; `<base>.json` holds
/// shape, axis names, element type, units, endianness, the payload SHA-256
/// and the hash of the config that produced it.

#include "usfwi/core.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace usfwi {

static_assert(std::endian::native == std::endian::little, "containers assume a little-endian host");

using Json = nlohmann::ordered_json;

enum class ElementType { Complex64, Complex128, Float64 };

inline std::string to_string(ElementType t) {
  switch (t) {
    case ElementType::Complex64: return "complex64";
    case ElementType::Complex128: return "complex128";
    case ElementType::Float64: return "float64";
  }
  return "float64";
}

inline ElementType element_type_from_string(const std::string& s) {
  if (s == "complex64") return ElementType::Complex64;
  if (s == "complex128") return ElementType::Complex128;
  if (s == "float64") return ElementType::Float64;
  throw Error("unknown element type '" + s + "'");
}

inline std::size_t element_size(ElementType t) { return t == ElementType::Complex64 ? 8 : t == ElementType::Complex128 ? 16 : 8; }

inline std::string sha256_hex(const void* data, std::size_t n) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, n, md, &len, EVP_sha256(), nullptr) != 1) throw Error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

struct ArrayHeader {
  std::vector<std::ptrdiff_t> shape;
  std::vector<std::string> axes;
  ElementType type = ElementType::Float64;
  std::string units;
  std::string config_hash;
  Json meta = Json::object();

  std::size_t count() const {
    std::size_t n = 1;
    for (auto s : shape) n *= static_cast<std::size_t>(s);
    return n;
  }
};

struct ArrayFile {
  ArrayHeader header;
  std::vector<unsigned char> payload;

  CVector complex_values() const {
    CVector v(static_cast<Eigen::Index>(header.count()));
    if (header.type == ElementType::Complex128) {
      std::memcpy(v.data(), payload.data(), payload.size());
    } else if (header.type == ElementType::Complex64) {
      for (std::size_t i = 0; i < header.count(); ++i) {
        float re, im;
        std::memcpy(&re, payload.data() + 8 * i, 4);
        std::memcpy(&im, payload.data() + 8 * i + 4, 4);
        v[static_cast<Eigen::Index>(i)] = Complex(re, im);
      }
    } else {
      throw Error("container holds real values, complex requested");
    }
    return v;
  }

  RVector real_values() const {
    if (header.type != ElementType::Float64) throw Error("container holds complex values, real requested");
    RVector v(static_cast<Eigen::Index>(header.count()));
    std::memcpy(v.data(), payload.data(), payload.size());
    return v;
  }
};

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open " + p.string() + " for writing");
  f << text;
  if (!f) throw Error("write failed: " + p.string());
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open " + p.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline void write_array(const std::filesystem::path& base, const ArrayHeader& h, const void* data, std::size_t bytes) {
  if (bytes != h.count() * element_size(h.type)) throw Error("payload size does not match the header shape");
  if (!h.axes.empty() && h.axes.size() != h.shape.size()) throw Error("axis names do not match the shape");
  {
    std::ofstream f(base.string() + ".bin", std::ios::binary);
    if (!f) throw Error("cannot open " + base.string() + ".bin for writing");
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!f) throw Error("write failed: " + base.string() + ".bin");
  }
  Json j;
  j["shape"] = h.shape;
  j["axes"] = h.axes;
  j["dtype"] = to_string(h.type);
  j["units"] = h.units;
  j["endianness"] = "little";
  j["order"] = "row-major";
  j["payload_bytes"] = bytes;
  j["payload_sha256"] = sha256_hex(data, bytes);
  j["config_hash"] = h.config_hash;
  j["meta"] = h.meta;
  write_text_file(base.string() + ".json", j.dump(2) + "\n");
}

inline void write_array(const std::filesystem::path& base, ArrayHeader h, const CVector& v) {
  h.type = ElementType::Complex128;
  write_array(base, h, v.data(), static_cast<std::size_t>(v.size()) * sizeof(Complex));
}

inline void write_array(const std::filesystem::path& base, ArrayHeader h, const RVector& v) {
  h.type = ElementType::Float64;
  write_array(base, h, v.data(), static_cast<std::size_t>(v.size()) * sizeof(double));
}

/// Reads and verifies size and checksum.
inline ArrayFile read_array(const std::filesystem::path& base) {
  const Json j = Json::parse(read_text_file(base.string() + ".json"));
  ArrayFile a;
  try {
    a.header.shape = j.at("shape").get<std::vector<std::ptrdiff_t>>();
    a.header.axes = j.at("axes").get<std::vector<std::string>>();
    a.header.type = element_type_from_string(j.at("dtype").get<std::string>());
    a.header.units = j.at("units").get<std::string>();
    a.header.config_hash = j.at("config_hash").get<std::string>();
    a.header.meta = j.at("meta");
    if (j.at("endianness").get<std::string>() != "little") throw Error("only little-endian payloads are supported");
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed container header " + base.string() + ".json: " + e.what());
  }
  const std::string bin = read_text_file(base.string() + ".bin");
  if (bin.size() != a.header.count() * element_size(a.header.type))
    throw Error("payload size of " + base.string() + ".bin does not match its header");
  if (sha256_hex(bin) != j.at("payload_sha256").get<std::string>())
    throw Error("payload checksum mismatch for " + base.string() + ".bin");
  a.payload.assign(bin.begin(), bin.end());
  return a;
}

}  // namespace usfwi
