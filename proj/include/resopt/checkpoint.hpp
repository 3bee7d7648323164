#pragma once

// Parameter checkpoint file. Layout (all integers little-endian):
//
//   bytes 0..7    magic "RESOPTCK"
//   bytes 8..11   uint32 format version (currently 1)
//   bytes 12..15  uint32 length H of the JSON header
//   bytes 16..    H bytes of UTF-8 JSON describing the payload
//   then          (param_count + 2) IEEE-754 binary64 values, little-endian:
//                 the flat predictor parameters, then log_alpha, log_beta.
//
// The JSON header records the predictor configuration and the payload
// counts, so a checkpoint is readable without the config that produced it.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "resopt/errors.hpp"
#include "resopt/predictor.hpp"

namespace resopt {

inline constexpr char checkpoint_magic[8] = {'R', 'E', 'S', 'O', 'P', 'T', 'C', 'K'};
inline constexpr std::uint32_t checkpoint_version = 1;

struct checkpoint {
  predictor_params params;
  double log_alpha = 0.0;
  double log_beta = 0.0;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(b, 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const checkpoint& ck) {
  ck.params.config.validate();
  if (ck.params.values.size() != param_count(ck.params.config))
    throw invalid_parameter_error("save_checkpoint: parameter count mismatch");

  nlohmann::json header;
  header["input_dim"] = ck.params.config.input_dim;
  header["hidden_dims"] = ck.params.config.hidden_dims;
  header["activation"] = to_string(ck.params.config.activation);
  header["init_seed"] = ck.params.config.init_seed;
  header["head_init_gain"] = ck.params.config.head_init_gain;
  header["param_count"] = ck.params.values.size();
  header["trailing"] = {"log_alpha", "log_beta"};
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("save_checkpoint: cannot open " + path);
  os.write(checkpoint_magic, 8);
  detail::put_u32(os, checkpoint_version);
  detail::put_u32(os, static_cast<std::uint32_t>(header_str.size()));
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (double v : ck.params.values) detail::put_f64(os, v);
  detail::put_f64(os, ck.log_alpha);
  detail::put_f64(os, ck.log_beta);
  if (!os) throw io_error("save_checkpoint: write failed for " + path);
}

inline checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, checkpoint_magic))
    throw io_error("load_checkpoint: bad magic in " + path);
  const std::uint32_t version = detail::get_u32(is);
  if (version != checkpoint_version)
    throw io_error("load_checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t header_len = detail::get_u32(is);
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), header_len);
  if (!is) throw io_error("load_checkpoint: truncated header in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("load_checkpoint: invalid header: ") + e.what());
  }

  checkpoint ck;
  ck.params.config.input_dim = header.at("input_dim").get<std::size_t>();
  ck.params.config.hidden_dims = header.at("hidden_dims").get<std::vector<std::size_t>>();
  ck.params.config.activation =
      activation_from_string(header.at("activation").get<std::string>());
  ck.params.config.init_seed = header.at("init_seed").get<std::uint64_t>();
  ck.params.config.head_init_gain = header.at("head_init_gain").get<double>();
  ck.params.config.validate();

  const auto n = header.at("param_count").get<std::size_t>();
  if (n != param_count(ck.params.config))
    throw io_error("load_checkpoint: param_count disagrees with config");
  ck.params.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) ck.params.values[i] = detail::get_f64(is);
  ck.log_alpha = detail::get_f64(is);
  ck.log_beta = detail::get_f64(is);
  if (!is) throw io_error("load_checkpoint: truncated payload in " + path);
  return ck;
}

}  // namespace resopt
