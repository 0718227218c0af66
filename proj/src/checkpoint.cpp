#include "cogat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cogat/errors.hpp"

namespace cogat {

namespace {

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double get_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format"] = kCheckpointFormat;
  header["metadata"] = ckpt.metadata;
  header["params"] = nlohmann::json::array();
  std::string payload;
  std::size_t offset = 0;
  for (const auto& [name, t] : ckpt.params) {
    header["params"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    for (double v : t.values()) put_le(payload, v);
    offset += t.size();
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot write checkpoint " + path.string());
  os << header.dump() << '\n';
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!os) throw InputError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open checkpoint " + path.string());
  std::string line;
  std::getline(is, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint " + path.string() + ": bad manifest: " + e.what());
  }
  if (header.value("format", "") != kCheckpointFormat) {
    throw CompatibilityError("checkpoint " + path.string() + ": expected format " + kCheckpointFormat);
  }
  std::string payload((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  Checkpoint ckpt;
  ckpt.metadata = header.value("metadata", nlohmann::json::object());
  for (const auto& entry : header.at("params")) {
    Shape shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::size_t>();
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    if ((offset + n) * 8 > payload.size()) {
      throw InputError("checkpoint " + path.string() + ": truncated payload for " + entry.at("name").get<std::string>());
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = get_le(payload.data() + (offset + i) * 8);
    ckpt.params.emplace_back(entry.at("name").get<std::string>(), Tensor::from(std::move(shape), std::move(values), true));
  }
  return ckpt;
}

}  // namespace cogat
