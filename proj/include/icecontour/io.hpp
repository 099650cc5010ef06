#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "icecontour/grid.hpp"

namespace icecontour::io {

// "icegrid v1": a JSON header (grid metadata, kind, year, month, lead) next
// to a raw row-major little-endian payload. Binary and mask kinds store one
// byte per cell; the other kinds store IEEE float32. The payload lives at the
// header path with its extension replaced by ".bin". Writes are atomic
// (temp file then rename) and byte-stable for identical inputs.

std::filesystem::path raw_path_for(const std::filesystem::path& header_path);

void write_field(const std::filesystem::path& header_path, const ByteField& f);
void write_field(const std::filesystem::path& header_path, const RealField& f);

FieldKind peek_field_kind(const std::filesystem::path& header_path);
ByteField read_byte_field(const std::filesystem::path& header_path);
RealField read_real_field(const std::filesystem::path& header_path);

// Atomic small-file helpers shared by the pipeline.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

// Minimal CSV layer for the tabular interfaces. Values never contain commas
// or quotes; doubles are printed with 17 significant digits so re-imports
// reproduce them bit for bit.
std::string csv_double(double x);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t column(const std::string& name) const;  // throws if absent
};
CsvTable read_csv(const std::filesystem::path& path);

} // namespace icecontour::io
