#include "icecontour/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace icecontour::io {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

static_assert(std::endian::native == std::endian::little,
              "raw payloads are little-endian; add byte swapping before porting");

namespace {

void write_bytes_atomic(const fs::path& path, const void* data, std::size_t n) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!out) throw io_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return buf;
}

ordered_json header_json(const GridSpec& g, FieldKind kind, const FieldTime& t) {
    ordered_json h;
    h["grid"] = {{"nrows", g.nrows},
                 {"ncols", g.ncols},
                 {"dx_km", g.dx_km},
                 {"dy_km", g.dy_km},
                 {"origin", {g.origin_x, g.origin_y}}};
    h["kind"] = field_kind_name(kind);
    h["year"] = t.year;
    h["month"] = t.month;
    h["lead"] = t.lead;
    return h;
}

struct Header {
    GridSpec grid;
    FieldKind kind;
    FieldTime time;
};

Header parse_header(const fs::path& path) {
    ordered_json h;
    try {
        h = ordered_json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw io_error(path.string() + ": malformed header JSON (" + e.what() + ")");
    }
    auto need = [&](const char* key) -> const ordered_json& {
        if (!h.contains(key)) throw io_error(path.string() + ": header missing '" + key + "'");
        return h.at(key);
    };
    const auto& g = need("grid");
    for (const char* k : {"nrows", "ncols", "dx_km", "dy_km", "origin"})
        if (!g.contains(k)) throw io_error(path.string() + ": grid metadata missing '" + k + "'");
    Header out;
    try {
        out.grid.nrows = g.at("nrows").get<int>();
        out.grid.ncols = g.at("ncols").get<int>();
        out.grid.dx_km = g.at("dx_km").get<double>();
        out.grid.dy_km = g.at("dy_km").get<double>();
        out.grid.origin_x = g.at("origin").at(0).get<double>();
        out.grid.origin_y = g.at("origin").at(1).get<double>();
        out.kind = field_kind_from_name(need("kind").get<std::string>());
        out.time.year = need("year").get<int>();
        out.time.month = need("month").get<int>();
        out.time.lead = need("lead").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error(path.string() + ": malformed header field (" + e.what() + ")");
    }
    if (out.grid.nrows <= 0 || out.grid.ncols <= 0 || !(out.grid.dx_km > 0) || !(out.grid.dy_km > 0))
        throw io_error(path.string() + ": grid dimensions and cell size must be positive");
    return out;
}

bool byte_kind(FieldKind k) { return k == FieldKind::Binary || k == FieldKind::Mask; }

void validate_bytes(const fs::path& path, FieldKind kind, const std::vector<std::uint8_t>& v) {
    for (std::uint8_t b : v) {
        if (kind == FieldKind::Binary) {
            if (b != 0 && b != 1 && b != kByteSentinel)
                throw io_error(path.string() + ": binary payload byte out of {0,1,sentinel}");
        } else {
            if (b != kMaskOutside && b != kMaskLand && b != kMaskOcean && b < kMaskRegionBase)
                throw io_error(path.string() + ": invalid mask label byte");
        }
    }
}

void validate_reals(const fs::path& path, FieldKind kind, const std::vector<double>& v) {
    for (double x : v) {
        if (std::isnan(x)) continue;
        if (std::isinf(x)) throw io_error(path.string() + ": non-finite value in payload");
        if (kind != FieldKind::Diagnostic && (x < 0.0 || x > 1.0))
            throw io_error(path.string() + ": value outside [0,1] in " +
                           std::string(field_kind_name(kind)) + " payload");
    }
}

} // namespace

fs::path raw_path_for(const fs::path& header_path) {
    fs::path p = header_path;
    p.replace_extension(".bin");
    return p;
}

void write_field(const fs::path& header_path, const ByteField& f) {
    if (!byte_kind(f.kind)) throw io_error("write_field: kind does not take a byte payload");
    if (f.v.size() != f.grid.size()) throw mismatch_error("write_field: raster size does not match grid");
    validate_bytes(header_path, f.kind, f.v);
    const std::string h = header_json(f.grid, f.kind, f.time).dump(2) + "\n";
    write_bytes_atomic(header_path, h.data(), h.size());
    write_bytes_atomic(raw_path_for(header_path), f.v.data(), f.v.size());
}

void write_field(const fs::path& header_path, const RealField& f) {
    if (byte_kind(f.kind)) throw io_error("write_field: kind takes a byte payload");
    if (f.v.size() != f.grid.size()) throw mismatch_error("write_field: raster size does not match grid");
    validate_reals(header_path, f.kind, f.v);
    const std::string h = header_json(f.grid, f.kind, f.time).dump(2) + "\n";
    write_bytes_atomic(header_path, h.data(), h.size());

    // Canonical quiet-NaN bytes keep files byte-identical across runs.
    std::vector<std::uint32_t> payload(f.v.size());
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        if (std::isnan(f.v[i])) {
            payload[i] = 0x7FC00000u;
        } else {
            const float x = static_cast<float>(f.v[i]);
            std::memcpy(&payload[i], &x, 4);
        }
    }
    write_bytes_atomic(raw_path_for(header_path), payload.data(), payload.size() * 4);
}

FieldKind peek_field_kind(const fs::path& header_path) { return parse_header(header_path).kind; }

ByteField read_byte_field(const fs::path& header_path) {
    const Header h = parse_header(header_path);
    if (!byte_kind(h.kind))
        throw io_error(header_path.string() + ": expected a byte-payload kind, found " +
                       field_kind_name(h.kind));
    const fs::path rp = raw_path_for(header_path);
    std::vector<std::uint8_t> raw = read_bytes(rp);
    if (raw.size() != h.grid.size())
        throw io_error(rp.string() + ": payload size " + std::to_string(raw.size()) +
                       " does not match grid (" + std::to_string(h.grid.size()) + " cells)");
    validate_bytes(rp, h.kind, raw);
    return ByteField{h.grid, h.kind, h.time, std::move(raw)};
}

RealField read_real_field(const fs::path& header_path) {
    const Header h = parse_header(header_path);
    if (byte_kind(h.kind))
        throw io_error(header_path.string() + ": expected a float payload kind, found " +
                       field_kind_name(h.kind));
    const fs::path rp = raw_path_for(header_path);
    std::vector<std::uint8_t> raw = read_bytes(rp);
    if (raw.size() != h.grid.size() * 4)
        throw io_error(rp.string() + ": payload size " + std::to_string(raw.size()) +
                       " does not match grid (" + std::to_string(h.grid.size() * 4) + " bytes)");
    RealField f;
    f.grid = h.grid;
    f.kind = h.kind;
    f.time = h.time;
    f.v.resize(h.grid.size());
    for (std::size_t i = 0; i < f.v.size(); ++i) {
        float x;
        std::memcpy(&x, raw.data() + 4 * i, 4);
        f.v[i] = static_cast<double>(x);
    }
    validate_reals(rp, f.kind, f.v);
    return f;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
    write_bytes_atomic(path, content.data(), content.size());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    auto append_row = [&out](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    };
    append_row(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw io_error("write_csv: ragged row");
        append_row(r);
    }
    write_text_atomic(path, out);
}

std::size_t CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw io_error("csv: missing column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
    const std::string text = read_text(path);
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            row.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (first) {
            t.header = std::move(row);
            first = false;
        } else {
            if (row.size() != t.header.size())
                throw io_error(path.string() + ": ragged csv row");
            t.rows.push_back(std::move(row));
        }
    }
    if (first) throw io_error(path.string() + ": empty csv");
    return t;
}

} // namespace icecontour::io
