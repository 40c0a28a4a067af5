#include "coreselect/feature_store.hpp"

#include "coreselect/error.hpp"
#include "text_util.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace coreselect {

namespace detail {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + path.string());
}

} // namespace detail

namespace {

std::uint32_t read_u32_le(const unsigned char* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

void append_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

} // namespace

void FeatureSpace::validate() const {
    if (vectors.rows() < 1 || vectors.cols() < 1)
        throw InvalidArgument("feature space '" + name + "' must have N >= 1 and dim >= 1");
    if (ids.size() != size())
        throw InvalidArgument("feature space '" + name + "' has " + std::to_string(size()) +
                              " rows but " + std::to_string(ids.size()) + " ids");
    for (Eigen::Index r = 0; r < vectors.rows(); ++r)
        if (!vectors.row(r).allFinite())
            throw InvalidArgument("feature space '" + name + "' row " + std::to_string(r) +
                                  " contains a non-finite value");
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids) {
        if (id.empty() || id.find('\n') != std::string::npos || id.find('\r') != std::string::npos)
            throw InvalidArgument("feature space '" + name + "' has an empty or multi-line id");
        if (!seen.insert(id).second)
            throw InvalidArgument("feature space '" + name + "' has duplicate id '" + id + "'");
    }
}

Normalization parse_normalization(std::string_view s) {
    if (s == "none") return Normalization::none;
    if (s == "per_block_l2") return Normalization::per_block_l2;
    throw ConfigError("unknown normalization '" + std::string(s) + "'");
}

std::string_view to_string(Normalization n) {
    return n == Normalization::none ? "none" : "per_block_l2";
}

FeatureSpace CombinedFeatures::to_feature_space(std::string name) const {
    FeatureSpace fs;
    fs.name = std::move(name);
    fs.vectors = vectors.cast<float>();
    fs.ids = ids;
    return fs;
}

std::filesystem::path ids_path_for(const std::filesystem::path& feature_path) {
    auto p = feature_path;
    p.replace_extension(".ids");
    return p;
}

std::string encode_feature_payload(const FeatureSpace& space) {
    std::string out;
    out.reserve(kFeatureHeaderBytes + 4 * space.size() * space.dim());
    out.append(kFeatureMagic);
    append_u32_le(out, static_cast<std::uint32_t>(space.size()));
    append_u32_le(out, static_cast<std::uint32_t>(space.dim()));
    const float* data = space.vectors.data();
    for (std::size_t i = 0, n = space.size() * space.dim(); i < n; ++i)
        append_u32_le(out, std::bit_cast<std::uint32_t>(data[i]));
    return out;
}

void write_feature_space(const FeatureSpace& space, const std::filesystem::path& path) {
    space.validate();
    if (space.size() > UINT32_MAX || space.dim() > UINT32_MAX)
        throw InvalidArgument("feature space too large for the u32 header");
    std::string ids;
    for (const auto& id : space.ids) {
        ids += id;
        ids += '\n';
    }
    detail::write_file(path, encode_feature_payload(space));
    detail::write_file(ids_path_for(path), ids);
}

FeatureSpace load_feature_space(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    const auto where = path.string() + ": ";
    if (bytes.size() < kFeatureHeaderBytes)
        throw FormatError(where + "truncated header: expected " +
                          std::to_string(kFeatureHeaderBytes) + " bytes, got " +
                          std::to_string(bytes.size()));
    if (std::string_view(bytes).substr(0, kFeatureMagic.size()) != kFeatureMagic)
        throw FormatError(where + "bad magic at byte offset 0 (expected \"IQAFEAT1\")");

    const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint64_t n = read_u32_le(raw + 8);
    const std::uint64_t dim = read_u32_le(raw + 12);
    if (n == 0 || dim == 0)
        throw FormatError(where + "header at byte offset 8 declares N=" + std::to_string(n) +
                          ", dim=" + std::to_string(dim) + "; both must be >= 1");
    const std::uint64_t expected = kFeatureHeaderBytes + 4 * n * dim;
    if (bytes.size() < expected)
        throw FormatError(where + "truncated payload: expected " + std::to_string(expected) +
                          " bytes, got " + std::to_string(bytes.size()));
    if (bytes.size() > expected)
        throw FormatError(where + "trailing data after byte offset " + std::to_string(expected) +
                          ": expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()));

    FeatureSpace fs;
    fs.name = path.stem().string();
    fs.vectors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    float* out = fs.vectors.data();
    const unsigned char* payload = raw + kFeatureHeaderBytes;
    for (std::uint64_t i = 0; i < n * dim; ++i) {
        out[i] = std::bit_cast<float>(read_u32_le(payload + 4 * i));
        if (!std::isfinite(out[i]))
            throw FormatError(where + "non-finite value in row " + std::to_string(i / dim) +
                              " at byte offset " + std::to_string(kFeatureHeaderBytes + 4 * i));
    }

    const auto ids_path = ids_path_for(path);
    const std::string ids_text = detail::read_file(ids_path);
    const auto ids = detail::lines(ids_text);
    if (ids.size() != n)
        throw FormatError(ids_path.string() + ": N/dim mismatch: header declares N=" +
                          std::to_string(n) + " but ids file has " + std::to_string(ids.size()) +
                          " lines");
    fs.ids.reserve(ids.size());
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i].empty())
            throw FormatError(ids_path.string() + ": empty id on line " + std::to_string(i + 1));
        if (!seen.insert(ids[i]).second)
            throw FormatError(ids_path.string() + ": duplicate id '" + std::string(ids[i]) +
                              "' on line " + std::to_string(i + 1));
        fs.ids.emplace_back(ids[i]);
    }
    return fs;
}

CombinedFeatures combine_features(const std::vector<FeatureSpace>& spaces,
                                  Normalization normalization) {
    if (spaces.empty()) throw InvalidArgument("combine_features needs at least one space");
    const auto& ref = spaces.front();
    std::size_t total = 0;
    for (const auto& s : spaces) {
        if (s.size() != ref.size())
            throw InvalidArgument("space '" + s.name + "' has " + std::to_string(s.size()) +
                                  " rows, '" + ref.name + "' has " + std::to_string(ref.size()));
        for (std::size_t i = 0; i < ref.size(); ++i)
            if (s.ids[i] != ref.ids[i])
                throw InvalidArgument("id sequences diverge at position " + std::to_string(i) +
                                      ": '" + ref.ids[i] + "' in '" + ref.name + "' vs '" +
                                      s.ids[i] + "' in '" + s.name + "'");
        total += s.dim();
    }

    CombinedFeatures out;
    out.ids = ref.ids;
    out.vectors.resize(static_cast<Eigen::Index>(ref.size()), static_cast<Eigen::Index>(total));
    std::size_t offset = 0;
    for (const auto& s : spaces) {
        const auto w = static_cast<Eigen::Index>(s.dim());
        auto block = out.vectors.middleCols(static_cast<Eigen::Index>(offset), w);
        block = s.vectors.cast<double>();
        if (normalization == Normalization::per_block_l2) {
            for (Eigen::Index r = 0; r < block.rows(); ++r) {
                const double norm = block.row(r).norm();
                if (norm > 0.0) block.row(r) /= norm;
            }
        }
        out.block_layout.push_back({s.name, offset, s.dim()});
        offset += s.dim();
    }
    return out;
}

std::vector<SampleMeta> parse_sample_meta(std::string_view csv_text) {
    const auto rows = detail::lines(csv_text);
    if (rows.empty()) throw FormatError("metadata: empty file, expected header");
    auto header = rows.front();
    if (header.substr(0, 3) == "\xEF\xBB\xBF") header.remove_prefix(3);
    if (header != "id,loss_with_q,loss_without_q")
        throw FormatError("metadata: missing column; header must be exactly "
                          "'id,loss_with_q,loss_without_q', got '" + std::string(header) + "'");

    std::vector<SampleMeta> out;
    out.reserve(rows.size() - 1);
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t li = 1; li < rows.size(); ++li) {
        const auto line = std::to_string(li + 1);
        if (rows[li].empty()) continue;
        const auto fields = detail::split(rows[li], ',');
        if (fields.size() != 3)
            throw FormatError("metadata line " + line + ": expected 3 fields, got " +
                              std::to_string(fields.size()));
        SampleMeta m;
        m.id = std::string(fields[0]);
        if (m.id.empty()) throw FormatError("metadata line " + line + ": empty id");
        const auto with_q = detail::parse_double(fields[1]);
        const auto without_q = detail::parse_double(fields[2]);
        if (!with_q || !std::isfinite(*with_q))
            throw FormatError("metadata line " + line + ": non-numeric loss_with_q '" +
                              std::string(fields[1]) + "'");
        if (!without_q || !std::isfinite(*without_q))
            throw FormatError("metadata line " + line + ": non-numeric loss_without_q '" +
                              std::string(fields[2]) + "'");
        if (*with_q < 0.0)
            throw FormatError("metadata line " + line + ": loss_with_q must be >= 0 for id '" +
                              m.id + "'");
        if (*without_q <= 0.0)
            throw FormatError("metadata line " + line + ": loss_without_q must be > 0 for id '" +
                              m.id + "' (IRS denominator)");
        m.loss_with_q = *with_q;
        m.loss_without_q = *without_q;
        if (auto [it, fresh] = seen.emplace(m.id, li + 1); !fresh)
            throw FormatError("metadata line " + line + ": duplicate id '" + m.id +
                              "' (first on line " + std::to_string(it->second) + ")");
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<SampleMeta> load_sample_meta(const std::filesystem::path& path) {
    try {
        return parse_sample_meta(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_sample_meta(const std::vector<SampleMeta>& meta, const std::filesystem::path& path) {
    std::string out = "id,loss_with_q,loss_without_q\n";
    for (const auto& m : meta) {
        out += m.id;
        out += ',';
        out += detail::format_double(m.loss_with_q);
        out += ',';
        out += detail::format_double(m.loss_without_q);
        out += '\n';
    }
    detail::write_file(path, out);
}

} // namespace coreselect
