#include "mvseg/blob_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "blob format assumes a little-endian host");

namespace mvseg {
namespace blob {

namespace {

Index shape_product(const std::vector<Index>& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

Json make_entry(const std::string& rel, const char* dtype, const std::vector<Index>& shape) {
  Json entry;
  entry["path"] = rel;
  entry["dtype"] = dtype;
  entry["shape"] = shape;
  return entry;
}

void write_bytes(const std::filesystem::path& file, const void* data, size_t bytes) {
  std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + file.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw DataError("short write to " + file.string());
}

std::vector<char> read_bytes(const std::filesystem::path& file, size_t expected,
                             const std::string& name) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw DataError(name + ": cannot open " + file.string());
  const auto actual = static_cast<size_t>(in.tellg());
  if (actual != expected) {
    std::ostringstream msg;
    msg << name << ": expected " << expected << " bytes, got " << actual << " in "
        << file.string();
    throw DataError(msg.str());
  }
  std::vector<char> buf(expected);
  in.seekg(0);
  in.read(buf.data(), static_cast<std::streamsize>(expected));
  if (!in) throw DataError(name + ": short read from " + file.string());
  return buf;
}

struct EntryInfo {
  std::filesystem::path file;
  std::string dtype;
  std::vector<Index> shape;
};

EntryInfo parse_entry(const Json& entry, const std::filesystem::path& dir,
                      const std::string& name) {
  EntryInfo info;
  info.file = dir / require_field(entry, "path", name).get<std::string>();
  info.dtype = require_field(entry, "dtype", name).get<std::string>();
  for (const auto& d : require_field(entry, "shape", name)) {
    if (!d.is_number_integer() || d.get<int64_t>() < 0)
      throw DataError(name + ".shape: dimensions must be nonnegative integers");
    info.shape.push_back(d.get<Index>());
  }
  return info;
}

}  // namespace

Json write_f32(const std::filesystem::path& dir, const std::string& rel,
               const Eigen::Ref<const Matrixd>& m, std::vector<Index> shape) {
  if (shape.empty()) shape = {m.rows(), m.cols()};
  std::vector<float> data(static_cast<size_t>(m.size()));
  Index k = 0;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data[static_cast<size_t>(k++)] = static_cast<float>(m(r, c));
  write_bytes(dir / rel, data.data(), data.size() * sizeof(float));
  return make_entry(rel, "float32", shape);
}

Json write_i32(const std::filesystem::path& dir, const std::string& rel, const Vectori& v) {
  std::vector<int32_t> data(static_cast<size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) data[static_cast<size_t>(i)] = v(i);
  write_bytes(dir / rel, data.data(), data.size() * sizeof(int32_t));
  return make_entry(rel, "int32", {v.size()});
}

Json write_u8(const std::filesystem::path& dir, const std::string& rel,
              const std::vector<uint8_t>& bytes, std::vector<Index> shape) {
  if (shape_product(shape) != static_cast<Index>(bytes.size()))
    throw DataError(rel + ": uint8 payload does not match declared shape");
  write_bytes(dir / rel, bytes.data(), bytes.size());
  return make_entry(rel, "uint8", shape);
}

Matrixd read_f32_matrix(const Json& entry, const std::filesystem::path& dir,
                        const std::string& name) {
  const EntryInfo info = parse_entry(entry, dir, name);
  if (info.dtype != "float32") throw DataError(name + ": expected dtype float32, got " + info.dtype);
  if (info.shape.size() != 2) throw DataError(name + ": expected a rank-2 shape");
  const Index n = shape_product(info.shape);
  const auto buf = read_bytes(info.file, static_cast<size_t>(n) * sizeof(float), name);
  const float* src = reinterpret_cast<const float*>(buf.data());
  Matrixd m(info.shape[0], info.shape[1]);
  Index k = 0;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<double>(src[k++]);
  return m;
}

Vectori read_i32_vector(const Json& entry, const std::filesystem::path& dir,
                        const std::string& name) {
  const EntryInfo info = parse_entry(entry, dir, name);
  if (info.dtype != "int32") throw DataError(name + ": expected dtype int32, got " + info.dtype);
  if (info.shape.size() != 1) throw DataError(name + ": expected a rank-1 shape");
  const auto buf =
      read_bytes(info.file, static_cast<size_t>(info.shape[0]) * sizeof(int32_t), name);
  const int32_t* src = reinterpret_cast<const int32_t*>(buf.data());
  Vectori v(info.shape[0]);
  for (Index i = 0; i < v.size(); ++i) v(i) = src[i];
  return v;
}

std::pair<std::vector<uint8_t>, std::vector<Index>> read_u8(const Json& entry,
                                                            const std::filesystem::path& dir,
                                                            const std::string& name) {
  const EntryInfo info = parse_entry(entry, dir, name);
  if (info.dtype != "uint8") throw DataError(name + ": expected dtype uint8, got " + info.dtype);
  const Index n = shape_product(info.shape);
  const auto buf = read_bytes(info.file, static_cast<size_t>(n), name);
  std::vector<uint8_t> bytes(buf.begin(), buf.end());
  return {std::move(bytes), info.shape};
}

std::vector<Index> entry_shape(const Json& entry, const std::string& name) {
  std::vector<Index> shape;
  for (const auto& d : require_field(entry, "shape", name)) shape.push_back(d.get<Index>());
  return shape;
}

}  // namespace blob

const Json& require_field(const Json& j, const std::string& key, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) throw DataError(context + ": missing field \"" + key + "\"");
  return *it;
}

Json load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
}

void save_manifest(const Json& manifest, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open manifest " + path.string() + " for writing");
  out << manifest.dump(2) << "\n";
}

}  // namespace mvseg
