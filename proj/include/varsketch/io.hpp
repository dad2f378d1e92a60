#pragma once

// File formats:
//  * CP tensor JSON: {"mode_lengths": [...], "rank": r,
//                     "factors": [[column-major reals], ...]}
//  * dense vector JSON: a flat array of reals
//  * dense vector binary: uint64 little-endian length header followed by
//    that many little-endian IEEE-754 doubles. A file may hold several
//    records back to back.

#include "varsketch/tensor.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace varsketch {

nlohmann::json cp_to_json(const CPTensor& t);
CPTensor cp_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const DenseVector& v);
DenseVector vector_from_json(const nlohmann::json& j);

void write_binary(std::ostream& out, const DenseVector& v);
/// Reads one record; returns false on clean end of stream.
bool read_binary(std::istream& in, DenseVector& v);

void save_binary(const std::filesystem::path& path, const std::vector<DenseVector>& records);
std::vector<DenseVector> load_binary(const std::filesystem::path& path);

/// Reads a JSON document, throwing ValidationError naming the path when the
/// file is missing or malformed.
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace varsketch
