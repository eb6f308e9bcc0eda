#include "twophase/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace twophase {

namespace {

using nlohmann::json;

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_field(const DensityField& field, const std::filesystem::path& path) {
  const Grid& g = field.grid();
  json header;
  header["dim"] = g.dim();
  header["cells"] = json::array();
  header["origin"] = json::array();
  for (int a = 0; a < g.dim(); ++a) {
    header["cells"].push_back(g.cells(a));
    header["origin"].push_back(g.origin()[a]);
  }
  header["h"] = g.h();

  std::string buf = header.dump();
  buf.push_back('\n');
  const std::size_t off = buf.size();
  buf.resize(off + 8 * field.size());
  for (std::size_t k = 0; k < field.size(); ++k) {
    const std::uint64_t bits =
        to_little_endian(std::bit_cast<std::uint64_t>(field[k]));
    std::memcpy(buf.data() + off + 8 * k, &bits, 8);
  }
  write_file_atomic(path, buf);
}

DensityField read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw FieldError("missing field header in " + path.string());
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FieldError("malformed field header: " + std::string(e.what()));
  }
  int dim = 0;
  std::array<int, 3> cells{1, 1, 1};
  Point origin{0.0, 0.0, 0.0};
  double h = 0.0;
  try {
    dim = header.at("dim").get<int>();
    if (dim < 1 || dim > 3) {
      throw FieldError("unsupported field dimension " + std::to_string(dim));
    }
    const auto& jc = header.at("cells");
    const auto& jo = header.at("origin");
    if (!jc.is_array() || !jo.is_array() ||
        jc.size() != static_cast<std::size_t>(dim) ||
        jo.size() != static_cast<std::size_t>(dim)) {
      throw FieldError("cells/origin length does not match dim");
    }
    for (int a = 0; a < dim; ++a) {
      cells[a] = jc[a].get<int>();
      origin[a] = jo[a].get<double>();
    }
    h = header.at("h").get<double>();
  } catch (const json::exception& e) {
    throw FieldError("malformed field header: " + std::string(e.what()));
  }
  const Grid grid(dim, cells, h, origin);

  std::ostringstream rest;
  rest << in.rdbuf();
  const std::string payload = rest.str();
  if (payload.size() != 8 * grid.size()) {
    throw FieldError("payload holds " + std::to_string(payload.size()) +
                     " bytes, expected " + std::to_string(8 * grid.size()));
  }
  std::vector<double> values(grid.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, payload.data() + 8 * k, 8);
    values[k] = std::bit_cast<double>(to_little_endian(bits));
  }
  return DensityField(grid, std::move(values));
}

}  // namespace twophase
