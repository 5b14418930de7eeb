#pragma once

#include "mvseg/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mvseg {

using Json = nlohmann::json;

// Arrays live as raw little-endian row-major blobs next to a JSON manifest;
// each manifest entry records {path, dtype, shape}.
namespace blob {

Json write_f32(const std::filesystem::path& dir, const std::string& rel,
               const Eigen::Ref<const Matrixd>& m, std::vector<Index> shape = {});
Json write_i32(const std::filesystem::path& dir, const std::string& rel, const Vectori& v);
Json write_u8(const std::filesystem::path& dir, const std::string& rel,
              const std::vector<uint8_t>& bytes, std::vector<Index> shape);

// Readers verify dtype, rank, and byte counts; failures raise DataError
// naming the entry.
Matrixd read_f32_matrix(const Json& entry, const std::filesystem::path& dir,
                        const std::string& name);
Vectori read_i32_vector(const Json& entry, const std::filesystem::path& dir,
                        const std::string& name);
std::pair<std::vector<uint8_t>, std::vector<Index>> read_u8(const Json& entry,
                                                            const std::filesystem::path& dir,
                                                            const std::string& name);

std::vector<Index> entry_shape(const Json& entry, const std::string& name);

}  // namespace blob

// json[key] with a DataError naming the field when absent.
const Json& require_field(const Json& j, const std::string& key, const std::string& context);

Json load_manifest(const std::filesystem::path& path);
void save_manifest(const Json& manifest, const std::filesystem::path& path);

}  // namespace mvseg
